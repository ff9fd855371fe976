#include "rmask/sparsify.hpp"

#include <algorithm>

#include "rmask/error.hpp"
#include "rmask/rng.hpp"

namespace rmask {

namespace {
constexpr const char* kModule = "sparsify";
}

std::string to_string(SparsifyKind k) {
  switch (k) {
    case SparsifyKind::feature: return "feature";
    case SparsifyKind::edge: return "edge";
    case SparsifyKind::label: return "label";
  }
  return "feature";
}

SparsifyKind sparsify_kind_from_string(const std::string& name) {
  if (name == "feature") return SparsifyKind::feature;
  if (name == "edge") return SparsifyKind::edge;
  if (name == "label") return SparsifyKind::label;
  throw ParameterError(kModule, "unknown sparsify kind '" + name + "' (expected feature, edge or label)");
}

FeatureMatrix sparsify_features(const FeatureMatrix& x, double mask_rate, std::uint64_t seed) {
  if (!(mask_rate >= 0.0 && mask_rate <= 1.0)) throw ParameterError(kModule, "feature mask rate must lie in [0, 1]");
  FeatureMatrix out = x;
  for (Eigen::Index i = 0; i < out.rows(); ++i) {
    CounterRng rng(seed, StreamTag::sparsify, 0, static_cast<std::uint32_t>(i));
    for (Eigen::Index j = 0; j < out.cols(); ++j)
      if (rng.uniform() < mask_rate) out(i, j) = 0.0;
  }
  return out;
}

Graph sparsify_edges(const Graph& g, double remaining_rate, std::uint64_t seed) {
  if (!(remaining_rate > 0.0 && remaining_rate <= 1.0))
    throw ParameterError(kModule, "edge remaining rate must lie in (0, 1]");
  if (g.has_self_loops()) throw ContractViolation(kModule, "expects a loop-free graph");
  std::vector<std::pair<NodeId, NodeId>> kept;
  for (NodeId u = 0; u < g.num_nodes(); ++u)
    for (NodeId v : g.neighbors(u)) {
      if (v <= u) continue;
      CounterRng rng(seed, StreamTag::sparsify, 1, u, v);
      if (rng.uniform() < remaining_rate) kept.emplace_back(u, v);
    }
  return Graph::from_edges(g.num_nodes(), kept);
}

LabeledSplit sparsify_labels(const LabeledSplit& split, std::size_t per_class, std::uint64_t seed) {
  if (per_class < 1 || per_class > 20) throw ParameterError(kModule, "label count per class must lie in [1, 20]");
  LabeledSplit out = split;
  out.train.clear();
  std::vector<std::vector<NodeId>> by_class(static_cast<std::size_t>(std::max(split.num_classes, 0)));
  for (NodeId v : split.train) {
    const int c = split.labels.at(v);
    if (c < 0 || c >= split.num_classes) throw DataError(kModule, "label outside [0, num_classes)");
    by_class[static_cast<std::size_t>(c)].push_back(v);
  }
  for (std::size_t c = 0; c < by_class.size(); ++c) {
    auto& pool = by_class[c];
    std::sort(pool.begin(), pool.end());
    CounterRng rng(seed, StreamTag::sparsify, 2, static_cast<std::uint32_t>(c));
    // Partial Fisher-Yates: the first `take` slots become a uniform sample.
    const std::size_t take = std::min(per_class, pool.size());
    for (std::size_t i = 0; i < take; ++i) {
      const std::size_t j = i + static_cast<std::size_t>(rng.below(pool.size() - i));
      std::swap(pool[i], pool[j]);
    }
    out.train.insert(out.train.end(), pool.begin(), pool.begin() + static_cast<std::ptrdiff_t>(take));
  }
  std::sort(out.train.begin(), out.train.end());
  return out;
}

}  // namespace rmask
