#pragma once

// Small graphs and brute-force oracles shared by the unit and acceptance tests.
// Nothing here calls into the code paths it is used to check.

#include <Eigen/Dense>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <string>
#include <limits>
#include <random>
#include <utility>
#include <vector>

#include "rmask/graph.hpp"

namespace rmask::testing {

inline Graph path_graph(std::size_t n) {
  std::vector<std::pair<NodeId, NodeId>> e;
  for (NodeId i = 0; i + 1 < n; ++i) e.emplace_back(i, i + 1);
  return Graph::from_edges(n, e);
}

inline Graph complete_graph(std::size_t n) {
  std::vector<std::pair<NodeId, NodeId>> e;
  for (NodeId i = 0; i < n; ++i)
    for (NodeId j = i + 1; j < n; ++j) e.emplace_back(i, j);
  return Graph::from_edges(n, e);
}

// Center 0, leaves 1..leaves.
inline Graph star_graph(std::size_t leaves) {
  std::vector<std::pair<NodeId, NodeId>> e;
  for (NodeId i = 1; i <= leaves; ++i) e.emplace_back(0, i);
  return Graph::from_edges(leaves + 1, e);
}

inline Graph cycle_graph(std::size_t n) {
  std::vector<std::pair<NodeId, NodeId>> e;
  for (NodeId i = 0; i < n; ++i) e.emplace_back(i, static_cast<NodeId>((i + 1) % n));
  return Graph::from_edges(n, e);
}

// Erdos-Renyi G(n, p) from a std::mt19937_64 stream.
inline Graph random_graph(std::size_t n, double p, std::uint64_t seed) {
  std::mt19937_64 gen(seed);
  std::uniform_real_distribution<double> coin(0.0, 1.0);
  std::vector<std::pair<NodeId, NodeId>> e;
  for (NodeId i = 0; i < n; ++i)
    for (NodeId j = i + 1; j < n; ++j)
      if (coin(gen) < p) e.emplace_back(i, j);
  return Graph::from_edges(n, e);
}

// Random graph guaranteed connected and non-bipartite: a random spanning
// tree, a triangle on nodes 0..2, and extra random chords.
inline Graph random_connected_graph(std::size_t n, double extra_p, std::uint64_t seed) {
  std::mt19937_64 gen(seed);
  std::uniform_real_distribution<double> coin(0.0, 1.0);
  std::vector<std::pair<NodeId, NodeId>> e;
  for (NodeId i = 1; i < n; ++i) {
    std::uniform_int_distribution<NodeId> parent(0, i - 1);
    e.emplace_back(parent(gen), i);
  }
  if (n >= 3) {
    e.emplace_back(0, 1);
    e.emplace_back(1, 2);
    e.emplace_back(0, 2);
  }
  for (NodeId i = 0; i < n; ++i)
    for (NodeId j = i + 1; j < n; ++j)
      if (coin(gen) < extra_p) e.emplace_back(i, j);
  return Graph::from_edges(n, e);
}

// Fresh empty directory under the system temp dir.
inline std::filesystem::path scratch_dir(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / ("rmask_test_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

inline void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::trunc);
  out << text;
}

inline constexpr std::size_t kUnreachable = std::numeric_limits<std::size_t>::max() / 4;

// All-pairs shortest paths by Floyd-Warshall over the adjacency.
inline std::vector<std::vector<std::size_t>> floyd_warshall(const Graph& g) {
  const std::size_t n = g.num_nodes();
  std::vector<std::vector<std::size_t>> d(n, std::vector<std::size_t>(n, kUnreachable));
  for (std::size_t i = 0; i < n; ++i) {
    d[i][i] = 0;
    for (NodeId j : g.neighbors(static_cast<NodeId>(i)))
      if (j != i) d[i][j] = 1;
  }
  for (std::size_t k = 0; k < n; ++k)
    for (std::size_t i = 0; i < n; ++i) {
      if (d[i][k] == kUnreachable) continue;
      for (std::size_t j = 0; j < n; ++j)
        if (d[i][k] + d[k][j] < d[i][j]) d[i][j] = d[i][k] + d[k][j];
    }
  return d;
}

// Dense adjacency-with-self-loops, r-normalized, built straight from the
// degree formula.
inline Eigen::MatrixXd dense_normalized(const Graph& g, double r) {
  const auto n = static_cast<Eigen::Index>(g.num_nodes());
  Eigen::MatrixXd a = Eigen::MatrixXd::Identity(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (NodeId j : g.neighbors(static_cast<NodeId>(i))) a(i, j) = 1.0;
  Eigen::VectorXd deg = a.rowwise().sum();
  Eigen::MatrixXd out(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j) out(i, j) = a(i, j) * std::pow(deg(i), r - 1.0) * std::pow(deg(j), -r);
  return out;
}

// S = alpha * sum_k (1 - alpha)^k A^k, summed until the terms vanish.
inline Eigen::MatrixXd ppr_power_series(const Eigen::MatrixXd& a, double alpha) {
  const auto n = a.rows();
  Eigen::MatrixXd term = alpha * Eigen::MatrixXd::Identity(n, n);
  Eigen::MatrixXd sum = term;
  for (int k = 0; k < 100000 && term.cwiseAbs().maxCoeff() > 1e-18; ++k) {
    term = (1.0 - alpha) * (term * a);
    sum += term;
  }
  return sum;
}

inline double brute_force_gsl(const FeatureMatrix& x) {
  const auto n = x.rows();
  double total = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    double row_sum = 0.0;
    for (Eigen::Index j = 0; j < n; ++j) {
      if (i == j) continue;
      const double ni = x.row(i).norm(), nj = x.row(j).norm();
      if (ni == 0.0 || nj == 0.0) continue;
      row_sum += x.row(i).dot(x.row(j)) / (ni * nj);
    }
    total += row_sum / static_cast<double>(n - 1);
  }
  return total / static_cast<double>(n);
}

}  // namespace rmask::testing
