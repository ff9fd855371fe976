#pragma once

#include <Eigen/Core>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "rmask/graph.hpp"

namespace rmask {

enum class HopMode { baseline, rmask };

// Per-hop feature matrices; hops[0] is the raw feature matrix and hops[h]
// the hop-h propagation result.
struct HopFeatures {
  std::vector<FeatureMatrix> hops;
  HopMode mode = HopMode::baseline;

  std::size_t depth() const noexcept { return hops.empty() ? 0 : hops.size() - 1; }
};

enum class CombineMethod {
  sign_concat,   // [X0 | X1 | ... | XH]
  s2gc_average,  // (1 / #terms) * sum of hops
  gbp_weighted,  // sum of beta (1 - beta)^l * X_l
  last_hop,      // X_H alone (SGC)
};

struct CombineSpec {
  CombineMethod method = CombineMethod::s2gc_average;
  std::optional<double> beta;  // required by, and only allowed with, gbp_weighted
  bool include_raw = true;
  bool renormalize_weights = false;  // gbp_weighted only: divide by the sum of weights
};

std::string to_string(CombineMethod m);
CombineMethod combine_method_from_string(const std::string& name);

// One P operation: returns adj * x. Rows are computed independently with a
// fixed neighbor order, so the result is identical for any worker count.
FeatureMatrix spmm(const NormalizedAdjacency& adj, const FeatureMatrix& x, std::size_t workers = 1);

// hops[k] = adj^k * x0 for k = 0..depth.
HopFeatures propagate(const NormalizedAdjacency& adj, const FeatureMatrix& x0, std::size_t depth,
                      std::size_t workers = 1);

struct StationaryState {
  Eigen::MatrixXd matrix;  // N x N limit of adj^k
  bool connected = true;   // false: the closed form only holds per component
};

// Closed form of lim adj^k for the r-normalized self-looped version of g:
// entry (i, j) = (d_i + 1)^r (d_j + 1)^(1 - r) / (2M + N) with raw degrees d.
StationaryState stationary_matrix(const Graph& g, double r);

bool is_connected(const Graph& g);

double gbp_weight(std::size_t hop, double beta);

FeatureMatrix combine(const HopFeatures& hf, const CombineSpec& spec);

// Diagnostic: average L2-normalized weight that adj^k puts on nodes at each
// exact distance from the sampled targets. Result(k - 1, h) covers
// k = 1..depth and h = 0..depth. Dense, so meant for small graphs only.
Eigen::MatrixXd hop_weight_profile(const Graph& g, const NormalizedAdjacency& adj, std::size_t depth,
                                   std::span<const NodeId> targets);

// hop_<k>.rmf files in `directory`, k = 0..depth.
void write_hop_features(const HopFeatures& hf, const std::filesystem::path& directory);
HopFeatures read_hop_features(const std::filesystem::path& directory, HopMode mode = HopMode::baseline);

}  // namespace rmask
