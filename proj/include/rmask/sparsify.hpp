#pragma once

#include <cstdint>
#include <string>

#include "rmask/graph.hpp"

namespace rmask {

enum class SparsifyKind { feature, edge, label };

std::string to_string(SparsifyKind k);
SparsifyKind sparsify_kind_from_string(const std::string& name);

// Zeroes each entry independently with probability `mask_rate` in [0, 1].
FeatureMatrix sparsify_features(const FeatureMatrix& x, double mask_rate, std::uint64_t seed);

// Keeps each undirected edge independently with probability `remaining_rate`
// in (0, 1]. The node set is unchanged.
Graph sparsify_edges(const Graph& g, double remaining_rate, std::uint64_t seed);

// Keeps `per_class` training nodes of every class (1..20), drawn from the
// existing training set. Classes with fewer training nodes keep all of them.
// Validation and test sets are untouched.
LabeledSplit sparsify_labels(const LabeledSplit& split, std::size_t per_class, std::uint64_t seed);

}  // namespace rmask
