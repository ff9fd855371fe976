#pragma once

#include <Eigen/Core>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <memory>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace rmask {

using NodeId = std::uint32_t;

// Dense row-major N x d matrix of node features (64-bit in memory).
using FeatureMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// Immutable undirected graph in compressed sparse row form.
///
/// Every undirected edge {u, v} is stored twice (u -> v and v -> u). Rows are
/// sorted and duplicate free. When `has_self_loops()` is true every node also
/// stores (v, v), and degree() counts it; num_edges() never counts self-loops.
class Graph {
 public:
  Graph() = default;

  // Builds a graph from arbitrary directed pairs: pairs are symmetrized and
  // self-loops dropped. Duplicates are collapsed when `dedupe` is set and
  // rejected with a DataError otherwise.
  static Graph from_edges(std::size_t num_nodes, std::span<const std::pair<NodeId, NodeId>> edges,
                          bool dedupe = true);

  // Adopts CSR arrays after checking every structural invariant.
  static Graph from_csr(std::vector<std::uint64_t> row_offsets, std::vector<NodeId> col_indices,
                        bool has_self_loops);

  std::size_t num_nodes() const noexcept { return row_offsets_.empty() ? 0 : row_offsets_.size() - 1; }
  std::size_t num_edges() const noexcept { return num_edges_; }
  bool has_self_loops() const noexcept { return has_self_loops_; }

  std::span<const NodeId> neighbors(NodeId v) const noexcept {
    return {col_indices_.data() + row_offsets_[v], col_indices_.data() + row_offsets_[v + 1]};
  }
  std::size_t degree(NodeId v) const noexcept { return row_offsets_[v + 1] - row_offsets_[v]; }
  bool has_edge(NodeId u, NodeId v) const noexcept;

  const std::vector<std::uint64_t>& row_offsets() const noexcept { return row_offsets_; }
  const std::vector<NodeId>& col_indices() const noexcept { return col_indices_; }

  friend bool operator==(const Graph&, const Graph&) = default;

 private:
  std::vector<std::uint64_t> row_offsets_{0};
  std::vector<NodeId> col_indices_;
  std::size_t num_edges_ = 0;
  bool has_self_loops_ = false;
};

// Â = D̃^(r-1) Ã D̃^(-r) stored on the sparsity pattern of a self-looped graph.
struct NormalizedAdjacency {
  std::shared_ptr<const Graph> structure;
  std::vector<double> values;  // aligned with structure->col_indices()
  double exponent_r = 0.5;

  std::size_t num_nodes() const noexcept { return structure->num_nodes(); }
  // Value of entry (i, j); zero when (i, j) is not stored.
  double value(NodeId i, NodeId j) const noexcept;
};

struct LabeledSplit {
  std::vector<int> labels;
  int num_classes = 0;
  std::vector<NodeId> train;
  std::vector<NodeId> val;
  std::vector<NodeId> test;
};

// ---------------------------------------------------------------------------
// Loading and writing

// Edge list: one "u v" pair per line, '#' comments, optional leading "N M"
// header. The first data line is taken as a header when exactly M further
// pairs follow and all of them fall inside [0, N).
Graph load_edge_list(const std::filesystem::path& path, bool dedupe = true);
Graph parse_edge_list(std::istream& in, const std::string& source_name, bool dedupe = true);
void write_edge_list(const Graph& g, const std::filesystem::path& path);

// Accepts the text format (whitespace-separated decimals, one row per line)
// or the RMF1 binary format; the format is detected from the first bytes.
FeatureMatrix load_features(const std::filesystem::path& path);
void write_features_binary(const FeatureMatrix& x, const std::filesystem::path& path);
void write_features_text(const FeatureMatrix& x, const std::filesystem::path& path);

std::vector<int> load_labels(const std::filesystem::path& path);
std::vector<NodeId> load_index_list(const std::filesystem::path& path);
void write_index_list(std::span<const NodeId> ids, const std::filesystem::path& path);
void write_labels(std::span<const int> labels, const std::filesystem::path& path);

LabeledSplit load_labels_and_split(const std::filesystem::path& labels, const std::filesystem::path& train,
                                   const std::filesystem::path& val, const std::filesystem::path& test,
                                   std::size_t num_nodes);

// Throws SplitError/ShapeError when labels or index sets break the LabeledSplit
// invariants for a graph of `num_nodes` nodes. Fills num_classes when zero.
void validate_split(LabeledSplit& split, std::size_t num_nodes);

// Throws ShapeError unless x has `num_nodes` rows, DataError on non-finite entries.
void check_features(const FeatureMatrix& x, std::size_t num_nodes);

// ---------------------------------------------------------------------------
// Normalization

Graph add_self_loops(const Graph& g);
NormalizedAdjacency normalize(std::shared_ptr<const Graph> with_self_loops, double r);
// Convenience: adds self-loops to a loop-free graph, then normalizes.
NormalizedAdjacency normalized_adjacency(const Graph& g, double r);

}  // namespace rmask
