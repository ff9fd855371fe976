#include "rmask/ppr.hpp"

#include <Eigen/LU>
#include <algorithm>
#include <cmath>
#include <deque>
#include <fstream>
#include <numeric>

#include "rmask/binary_io.hpp"
#include "rmask/error.hpp"
#include "rmask/parallel.hpp"

namespace rmask {

namespace {
constexpr const char* kModule = "ppr";

void check_push_params(double alpha, double epsilon) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw ParameterError(kModule, "push requires alpha in (0, 1)");
  if (!(epsilon > 0.0) || !std::isfinite(epsilon)) throw ParameterError(kModule, "epsilon must be positive");
}

// Reserve/residual vectors reused across sources; only touched entries are
// reset between pushes.
struct PushScratch {
  std::vector<double> reserve, residual;
  std::vector<std::uint8_t> queued;
  std::vector<NodeId> touched;
  std::deque<NodeId> queue;

  void prepare(std::size_t n) {
    if (reserve.size() != n) {
      reserve.assign(n, 0.0);
      residual.assign(n, 0.0);
      queued.assign(n, 0);
      touched.clear();
    }
  }

  void touch(NodeId v) {
    if (reserve[v] == 0.0 && residual[v] == 0.0 && !queued[v]) touched.push_back(v);
  }

  SparseRow run(const Graph& g, NodeId source, double alpha, double epsilon) {
    prepare(g.num_nodes());
    auto push_node = [&](NodeId u) {
      const double mass = residual[u];
      residual[u] = 0.0;
      reserve[u] += alpha * mass;
      const double share = (1.0 - alpha) * mass / static_cast<double>(g.degree(u));
      for (NodeId v : g.neighbors(u)) {
        touch(v);
        residual[v] += share;
        if (!queued[v] && residual[v] > epsilon * static_cast<double>(g.degree(v))) {
          queued[v] = 1;
          queue.push_back(v);
        }
      }
    };

    touch(source);
    residual[source] = 1.0;
    // The source is always pushed once, so reserve(source) >= alpha even when
    // epsilon is too coarse to trigger any further push.
    push_node(source);
    while (!queue.empty()) {
      const NodeId u = queue.front();
      queue.pop_front();
      queued[u] = 0;
      if (residual[u] > epsilon * static_cast<double>(g.degree(u))) push_node(u);
    }

    std::sort(touched.begin(), touched.end());
    SparseRow row;
    for (NodeId v : touched) {
      if (reserve[v] > 0.0) {
        row.index.push_back(v);
        row.value.push_back(reserve[v]);
      }
      reserve[v] = 0.0;
      residual[v] = 0.0;
      queued[v] = 0;
    }
    touched.clear();
    return row;
  }
};
}  // namespace

double SparseRow::at(NodeId v) const noexcept {
  auto it = std::lower_bound(index.begin(), index.end(), v);
  if (it == index.end() || *it != v) return 0.0;
  return value[static_cast<std::size_t>(it - index.begin())];
}

double SparseRow::sum() const noexcept { return std::accumulate(value.begin(), value.end(), 0.0); }

const SparseRow* PprScores::find(NodeId source) const noexcept {
  auto it = std::lower_bound(sources.begin(), sources.end(), source);
  if (it == sources.end() || *it != source) return nullptr;
  return &rows[static_cast<std::size_t>(it - sources.begin())];
}

Eigen::MatrixXd PprScores::to_dense(std::size_t num_nodes) const {
  const auto n = static_cast<Eigen::Index>(num_nodes);
  Eigen::MatrixXd dense = Eigen::MatrixXd::Zero(n, n);
  for (std::size_t k = 0; k < sources.size(); ++k)
    for (std::size_t m = 0; m < rows[k].size(); ++m) dense(sources[k], rows[k].index[m]) = rows[k].value[m];
  return dense;
}

PprScores ppr_exact(const NormalizedAdjacency& adj, double alpha, std::size_t dense_bound) {
  if (!(alpha > 0.0 && alpha <= 1.0)) throw ParameterError(kModule, "alpha must lie in (0, 1]");
  const std::size_t n = adj.num_nodes();
  if (n > dense_bound)
    throw ParameterError(kModule, "exact PPR needs a dense solve; N = " + std::to_string(n) + " exceeds " +
                                      std::to_string(dense_bound));
  const auto nn = static_cast<Eigen::Index>(n);
  Eigen::MatrixXd system = Eigen::MatrixXd::Identity(nn, nn);
  const auto& offsets = adj.structure->row_offsets();
  const auto& cols = adj.structure->col_indices();
  for (std::size_t i = 0; i < n; ++i)
    for (auto k = offsets[i]; k < offsets[i + 1]; ++k)
      system(static_cast<Eigen::Index>(i), cols[k]) -= (1.0 - alpha) * adj.values[k];

  PprScores out;
  out.alpha = alpha;
  out.epsilon = 0.0;
  if (n == 0) return out;

  Eigen::PartialPivLU<Eigen::MatrixXd> lu(system);
  const double rcond = lu.rcond();
  if (!(rcond > 1e-14)) throw NumericError(kModule, "PPR system is singular (rcond " + std::to_string(rcond) + ")");
  const Eigen::MatrixXd dense = lu.solve(alpha * Eigen::MatrixXd::Identity(nn, nn));
  if (!dense.allFinite()) throw NumericError(kModule, "PPR solve produced non-finite scores");

  out.sources.resize(n);
  std::iota(out.sources.begin(), out.sources.end(), NodeId{0});
  out.rows.resize(n);
  for (Eigen::Index i = 0; i < nn; ++i)
    for (Eigen::Index j = 0; j < nn; ++j)
      if (dense(i, j) > 0.0) {
        out.rows[static_cast<std::size_t>(i)].index.push_back(static_cast<NodeId>(j));
        out.rows[static_cast<std::size_t>(i)].value.push_back(dense(i, j));
      }
  return out;
}

SparseRow ppr_push(const Graph& g, NodeId source, double alpha, double epsilon) {
  check_push_params(alpha, epsilon);
  if (!g.has_self_loops()) throw ContractViolation(kModule, "ppr_push expects a graph with self-loops");
  if (source >= g.num_nodes()) throw RangeError(kModule, "source outside the graph");
  PushScratch scratch;
  return scratch.run(g, source, alpha, epsilon);
}

SparseRow truncate_top_k(SparseRow row, std::size_t k) {
  if (k == 0 || row.size() <= k) return row;
  std::vector<std::size_t> order(row.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(k), order.end(),
                    [&](std::size_t a, std::size_t b) {
                      if (row.value[a] != row.value[b]) return row.value[a] > row.value[b];
                      return row.index[a] < row.index[b];
                    });
  order.resize(k);
  std::sort(order.begin(), order.end());
  SparseRow out;
  for (auto i : order) {
    out.index.push_back(row.index[i]);
    out.value.push_back(row.value[i]);
  }
  return out;
}

PprScores ppr_all(const Graph& g, double alpha, double epsilon, std::span<const NodeId> sources, std::size_t top_k,
                  std::size_t workers) {
  check_push_params(alpha, epsilon);
  if (!g.has_self_loops()) throw ContractViolation(kModule, "ppr_all expects a graph with self-loops");
  PprScores out;
  out.alpha = alpha;
  out.epsilon = epsilon;
  out.sources.assign(sources.begin(), sources.end());
  std::sort(out.sources.begin(), out.sources.end());
  out.sources.erase(std::unique(out.sources.begin(), out.sources.end()), out.sources.end());
  for (NodeId s : out.sources)
    if (s >= g.num_nodes()) throw RangeError(kModule, "source " + std::to_string(s) + " outside the graph");
  out.rows.resize(out.sources.size());

  if (workers == 0) workers = default_workers();
  std::vector<PushScratch> scratch(workers);
  parallel_for(out.sources.size(), workers, 16, [&](std::size_t begin, std::size_t end, std::size_t worker) {
    for (std::size_t k = begin; k < end; ++k)
      out.rows[k] = truncate_top_k(scratch[worker].run(g, out.sources[k], alpha, epsilon), top_k);
  });
  return out;
}

void write_ppr_scores(const PprScores& s, const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError(kModule, "cannot write " + path.string());
  binary::write_magic(out, "RMS1");
  binary::write_le<double>(out, s.alpha);
  binary::write_le<double>(out, s.epsilon);
  binary::write_le<std::uint64_t>(out, s.sources.size());
  for (std::size_t k = 0; k < s.sources.size(); ++k) {
    binary::write_le<std::uint64_t>(out, s.sources[k]);
    binary::write_le<std::uint64_t>(out, s.rows[k].size());
    for (std::size_t m = 0; m < s.rows[k].size(); ++m) {
      binary::write_le<std::uint64_t>(out, s.rows[k].index[m]);
      binary::write_le<double>(out, s.rows[k].value[m]);
    }
  }
  if (!out) throw DataError(kModule, "failed writing " + path.string());
}

PprScores read_ppr_scores(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError(kModule, "cannot open " + path.string());
  binary::expect_magic(in, "RMS1", path.string());
  PprScores s;
  s.alpha = binary::read_le<double>(in, "alpha");
  s.epsilon = binary::read_le<double>(in, "epsilon");
  const auto count = binary::read_le<std::uint64_t>(in, "source count");
  for (std::uint64_t k = 0; k < count; ++k) {
    s.sources.push_back(static_cast<NodeId>(binary::read_le<std::uint64_t>(in, "source")));
    const auto len = binary::read_le<std::uint64_t>(in, "row length");
    SparseRow row;
    for (std::uint64_t m = 0; m < len; ++m) {
      row.index.push_back(static_cast<NodeId>(binary::read_le<std::uint64_t>(in, "node")));
      row.value.push_back(binary::read_le<double>(in, "score"));
    }
    s.rows.push_back(std::move(row));
  }
  if (!std::is_sorted(s.sources.begin(), s.sources.end()))
    throw DataError(kModule, path.string() + ": sources are not sorted");
  return s;
}

}  // namespace rmask
