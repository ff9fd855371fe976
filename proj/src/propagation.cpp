#include "rmask/propagation.hpp"

#include <cmath>
#include <queue>

#include "rmask/error.hpp"
#include "rmask/parallel.hpp"

namespace rmask {

namespace {
constexpr const char* kModule = "baseline-prop";

// Exact shortest-path distances from `source`, capped at `limit`; unreachable
// and farther nodes get limit + 1.
std::vector<std::size_t> bfs_distances(const Graph& g, NodeId source, std::size_t limit) {
  std::vector<std::size_t> dist(g.num_nodes(), limit + 1);
  std::queue<NodeId> frontier;
  dist[source] = 0;
  frontier.push(source);
  while (!frontier.empty()) {
    const NodeId u = frontier.front();
    frontier.pop();
    if (dist[u] == limit) continue;
    for (NodeId v : g.neighbors(u))
      if (dist[v] > limit) {
        dist[v] = dist[u] + 1;
        frontier.push(v);
      }
  }
  return dist;
}
}  // namespace

std::string to_string(CombineMethod m) {
  switch (m) {
    case CombineMethod::sign_concat: return "sign_concat";
    case CombineMethod::s2gc_average: return "s2gc_average";
    case CombineMethod::gbp_weighted: return "gbp_weighted";
    case CombineMethod::last_hop: return "last_hop";
  }
  return "unknown";
}

CombineMethod combine_method_from_string(const std::string& name) {
  if (name == "sign_concat") return CombineMethod::sign_concat;
  if (name == "s2gc_average") return CombineMethod::s2gc_average;
  if (name == "gbp_weighted") return CombineMethod::gbp_weighted;
  if (name == "last_hop") return CombineMethod::last_hop;
  throw ParameterError(kModule, "unknown combine method '" + name + "'");
}

FeatureMatrix spmm(const NormalizedAdjacency& adj, const FeatureMatrix& x, std::size_t workers) {
  const std::size_t n = adj.num_nodes();
  if (static_cast<std::size_t>(x.rows()) != n)
    throw ShapeError(kModule, "feature rows " + std::to_string(x.rows()) + " != node count " + std::to_string(n));
  FeatureMatrix out = FeatureMatrix::Zero(x.rows(), x.cols());
  const auto& offsets = adj.structure->row_offsets();
  const auto& cols = adj.structure->col_indices();
  parallel_for(n, workers, 256, [&](std::size_t begin, std::size_t end, std::size_t) {
    for (std::size_t i = begin; i < end; ++i) {
      auto row = out.row(static_cast<Eigen::Index>(i));
      for (auto k = offsets[i]; k < offsets[i + 1]; ++k) row.noalias() += adj.values[k] * x.row(cols[k]);
    }
  });
  return out;
}

HopFeatures propagate(const NormalizedAdjacency& adj, const FeatureMatrix& x0, std::size_t depth,
                      std::size_t workers) {
  if (static_cast<std::size_t>(x0.rows()) != adj.num_nodes())
    throw ShapeError(kModule, "feature rows " + std::to_string(x0.rows()) + " != node count " +
                                  std::to_string(adj.num_nodes()));
  HopFeatures hf;
  hf.mode = HopMode::baseline;
  hf.hops.reserve(depth + 1);
  hf.hops.push_back(x0);
  for (std::size_t k = 1; k <= depth; ++k) hf.hops.push_back(spmm(adj, hf.hops.back(), workers));
  return hf;
}

bool is_connected(const Graph& g) {
  if (g.num_nodes() <= 1) return true;
  const auto dist = bfs_distances(g, 0, g.num_nodes());
  for (auto d : dist)
    if (d > g.num_nodes()) return false;
  return true;
}

StationaryState stationary_matrix(const Graph& g, double r) {
  if (g.has_self_loops()) throw ContractViolation(kModule, "stationary_matrix expects raw degrees (no self-loops)");
  if (!(r >= 0.0 && r <= 1.0)) throw ParameterError(kModule, "r must lie in [0, 1]");
  const auto n = static_cast<Eigen::Index>(g.num_nodes());
  const double total = 2.0 * static_cast<double>(g.num_edges()) + static_cast<double>(n);
  Eigen::VectorXd left(n), right(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double d = static_cast<double>(g.degree(static_cast<NodeId>(i))) + 1.0;
    left(i) = std::pow(d, r);
    right(i) = std::pow(d, 1.0 - r);
  }
  StationaryState state;
  state.matrix = (left * right.transpose()) / total;
  state.connected = is_connected(g);
  return state;
}

double gbp_weight(std::size_t hop, double beta) {
  if (!(beta > 0.0 && beta < 1.0)) throw ParameterError(kModule, "beta must lie in (0, 1)");
  return beta * std::pow(1.0 - beta, static_cast<double>(hop));
}

FeatureMatrix combine(const HopFeatures& hf, const CombineSpec& spec) {
  if (hf.hops.empty()) throw ContractViolation(kModule, "combine needs at least one hop");
  if (spec.method == CombineMethod::gbp_weighted) {
    if (!spec.beta) throw ParameterError(kModule, "gbp_weighted requires beta");
    if (!(*spec.beta > 0.0 && *spec.beta < 1.0)) throw ParameterError(kModule, "beta must lie in (0, 1)");
  } else if (spec.beta) {
    throw ParameterError(kModule, "beta is only valid with gbp_weighted");
  }
  const auto rows = hf.hops[0].rows();
  const auto cols = hf.hops[0].cols();
  for (const auto& h : hf.hops)
    if (h.rows() != rows || h.cols() != cols) throw ShapeError(kModule, "hop matrices differ in shape");

  if (spec.method == CombineMethod::last_hop) return hf.hops.back();

  const std::size_t first = spec.include_raw ? 0 : 1;
  if (first >= hf.hops.size()) throw ContractViolation(kModule, "no hops left to combine without the raw features");
  const auto terms = static_cast<Eigen::Index>(hf.hops.size() - first);

  switch (spec.method) {
    case CombineMethod::sign_concat: {
      FeatureMatrix out(rows, cols * terms);
      for (Eigen::Index t = 0; t < terms; ++t)
        out.middleCols(t * cols, cols) = hf.hops[first + static_cast<std::size_t>(t)];
      return out;
    }
    case CombineMethod::s2gc_average: {
      FeatureMatrix out = FeatureMatrix::Zero(rows, cols);
      for (std::size_t k = first; k < hf.hops.size(); ++k) out += hf.hops[k];
      out /= static_cast<double>(terms);
      return out;
    }
    case CombineMethod::gbp_weighted: {
      FeatureMatrix out = FeatureMatrix::Zero(rows, cols);
      double weight_sum = 0.0;
      for (std::size_t k = first; k < hf.hops.size(); ++k) {
        const double w = gbp_weight(k, *spec.beta);
        out += w * hf.hops[k];
        weight_sum += w;
      }
      if (spec.renormalize_weights) out /= weight_sum;
      return out;
    }
    case CombineMethod::last_hop: break;
  }
  return hf.hops.back();
}

Eigen::MatrixXd hop_weight_profile(const Graph& g, const NormalizedAdjacency& adj, std::size_t depth,
                                   std::span<const NodeId> targets) {
  if (g.has_self_loops()) throw ContractViolation(kModule, "hop_weight_profile expects the loop-free graph");
  if (adj.num_nodes() != g.num_nodes()) throw ShapeError(kModule, "graph and adjacency sizes differ");
  const auto n = static_cast<Eigen::Index>(g.num_nodes());
  Eigen::MatrixXd profile = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(depth), static_cast<Eigen::Index>(depth + 1));
  if (targets.empty() || depth == 0) return profile;

  for (NodeId t : targets) {
    if (t >= g.num_nodes()) throw RangeError(kModule, "target outside the graph");
    const auto dist = bfs_distances(g, t, depth);
    // Row t of adj^k, advanced by one left multiplication per hop.
    Eigen::RowVectorXd row = Eigen::RowVectorXd::Zero(n);
    row(t) = 1.0;
    for (std::size_t k = 1; k <= depth; ++k) {
      Eigen::RowVectorXd next = Eigen::RowVectorXd::Zero(n);
      for (Eigen::Index i = 0; i < n; ++i) {
        if (row(i) == 0.0) continue;
        const auto base = adj.structure->row_offsets()[static_cast<std::size_t>(i)];
        auto nbrs = adj.structure->neighbors(static_cast<NodeId>(i));
        for (std::size_t m = 0; m < nbrs.size(); ++m) next(nbrs[m]) += row(i) * adj.values[base + m];
      }
      row = std::move(next);
      const double norm = row.norm();
      if (norm == 0.0) continue;
      for (Eigen::Index j = 0; j < n; ++j) {
        const auto d = dist[static_cast<std::size_t>(j)];
        if (d <= depth) profile(static_cast<Eigen::Index>(k - 1), static_cast<Eigen::Index>(d)) += row(j) / norm;
      }
    }
  }
  profile /= static_cast<double>(targets.size());
  return profile;
}

void write_hop_features(const HopFeatures& hf, const std::filesystem::path& directory) {
  std::filesystem::create_directories(directory);
  for (std::size_t k = 0; k < hf.hops.size(); ++k)
    write_features_binary(hf.hops[k], directory / ("hop_" + std::to_string(k) + ".rmf"));
}

HopFeatures read_hop_features(const std::filesystem::path& directory, HopMode mode) {
  HopFeatures hf;
  hf.mode = mode;
  for (std::size_t k = 0;; ++k) {
    const auto path = directory / ("hop_" + std::to_string(k) + ".rmf");
    if (!std::filesystem::exists(path)) break;
    hf.hops.push_back(load_features(path));
  }
  if (hf.hops.empty()) throw DataError(kModule, "no hop_<k>.rmf files in " + directory.string());
  return hf;
}

}  // namespace rmask
