#pragma once

#include <Eigen/Core>
#include <filesystem>
#include <span>
#include <vector>

#include "rmask/graph.hpp"

namespace rmask {

// Sparse row sorted by node index.
struct SparseRow {
  std::vector<NodeId> index;
  std::vector<double> value;

  std::size_t size() const noexcept { return index.size(); }
  bool empty() const noexcept { return index.empty(); }
  double at(NodeId v) const noexcept;
  double sum() const noexcept;

  friend bool operator==(const SparseRow&, const SparseRow&) = default;
};

// Personalized PageRank rows S(source, .) with S = alpha (I - (1 - alpha) adj)^-1.
struct PprScores {
  double alpha = 0.15;
  double epsilon = 0.0;  // 0 for exact rows
  std::vector<NodeId> sources;  // sorted, unique
  std::vector<SparseRow> rows;  // rows[k] belongs to sources[k]

  const SparseRow* find(NodeId source) const noexcept;
  Eigen::MatrixXd to_dense(std::size_t num_nodes) const;
};

inline constexpr double kDefaultAlpha = 0.15;
inline constexpr double kDefaultEpsilon = 1e-4;
inline constexpr std::size_t kDefaultTopK = 256;

// Dense LU solve for every source. Only for graphs up to `dense_bound` nodes.
PprScores ppr_exact(const NormalizedAdjacency& adj, double alpha, std::size_t dense_bound = 5000);

// Forward push on the row-stochastic operator D̃^-1 Ã of a self-looped
// graph. Every entry satisfies |p(v) - S(source, v)| <= epsilon * d̃(v).
SparseRow ppr_push(const Graph& with_self_loops, NodeId source, double alpha, double epsilon);

// ppr_push for each source in parallel; each row is truncated to its top_k
// largest entries (0 keeps everything).
PprScores ppr_all(const Graph& with_self_loops, double alpha, double epsilon, std::span<const NodeId> sources,
                  std::size_t top_k = kDefaultTopK, std::size_t workers = 1);

// Keeps the k largest entries (ties toward the smaller node index).
SparseRow truncate_top_k(SparseRow row, std::size_t k);

void write_ppr_scores(const PprScores& s, const std::filesystem::path& path);
PprScores read_ppr_scores(const std::filesystem::path& path);

}  // namespace rmask
