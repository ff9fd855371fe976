#include "rmask/walk.hpp"

#include <algorithm>
#include <fstream>

#include "rmask/binary_io.hpp"
#include "rmask/error.hpp"
#include "rmask/parallel.hpp"

namespace rmask {

namespace {
constexpr const char* kModule = "rmask-walk";

// One walk of exactly `hop` steps. `weight(v)` gives the unnormalized bias of
// stepping to neighbor v, or is empty for uniform steps.
template <class Weight>
std::optional<NodeId> walk_endpoint(const Graph& g, NodeId source, std::size_t hop, Weight&& weight, bool biased,
                                    CounterRng& rng) {
  NodeId current = source;
  for (std::size_t step = 0; step < hop; ++step) {
    auto nbrs = g.neighbors(current);
    if (nbrs.empty()) return std::nullopt;
    if (!biased) {
      current = nbrs[rng.below(nbrs.size())];
      continue;
    }
    double total = 0.0;
    for (NodeId v : nbrs) total += weight(v);
    const double target = rng.uniform() * total;
    double running = 0.0;
    NodeId chosen = nbrs.back();
    for (NodeId v : nbrs) {
      running += weight(v);
      if (target < running) {
        chosen = v;
        break;
      }
    }
    current = chosen;
  }
  return current;
}

// Dense view of one bias row, scattered and cleared per source.
struct BiasScratch {
  std::vector<double> dense;
  void load(const SparseRow* row, std::size_t n) {
    if (dense.size() != n) dense.assign(n, 0.0);
    if (row)
      for (std::size_t k = 0; k < row->size(); ++k) dense[row->index[k]] = row->value[k];
  }
  void unload(const SparseRow* row) {
    if (row)
      for (NodeId v : row->index) dense[v] = 0.0;
  }
};

struct CountScratch {
  std::vector<std::uint32_t> count;
  std::vector<NodeId> touched;
};
}  // namespace

std::string to_string(WalkBias b) { return b == WalkBias::ppr ? "ppr" : "uniform"; }

WalkBias walk_bias_from_string(const std::string& name) {
  if (name == "uniform") return WalkBias::uniform;
  if (name == "ppr") return WalkBias::ppr;
  throw ParameterError(kModule, "unknown walk bias '" + name + "'");
}

std::string to_string(WalkNormalization n) { return n == WalkNormalization::walks ? "walks" : "accepted"; }

WalkNormalization walk_normalization_from_string(const std::string& name) {
  if (name == "accepted") return WalkNormalization::accepted;
  if (name == "walks") return WalkNormalization::walks;
  throw ParameterError(kModule, "unknown walk normalization '" + name + "'");
}

void validate(const WalkConfig& cfg) {
  if (cfg.depth_H < 1) throw ParameterError(kModule, "depth_H must be at least 1");
  if (cfg.walks_T < 1) throw ParameterError(kModule, "walks_T must be at least 1");
}

std::optional<NodeId> single_walk(const Graph& g, const HopMask& mask, NodeId source, std::size_t hop,
                                  const SparseRow* bias_row, CounterRng& rng) {
  if (hop < 1) throw ParameterError(kModule, "hop must be at least 1");
  if (hop > mask.depth()) throw ContractViolation(kModule, "mask depth is smaller than the requested hop");
  if (g.has_self_loops()) throw ContractViolation(kModule, "walks run on the loop-free graph");
  if (source >= g.num_nodes()) throw RangeError(kModule, "source outside the graph");
  auto weight = [&](NodeId v) { return bias_row->at(v) + kBiasFloor; };
  auto end = walk_endpoint(g, source, hop, weight, bias_row != nullptr, rng);
  if (end && mask.contains(source, hop, *end)) return end;
  return std::nullopt;
}

WalkMatrix walk_matrix(const Graph& g, const HopMask& mask, std::size_t hop, const WalkConfig& cfg,
                       const PprScores* bias, std::size_t workers) {
  validate(cfg);
  if (hop < 1 || hop > mask.depth()) throw ContractViolation(kModule, "hop outside the mask depth");
  if (g.has_self_loops()) throw ContractViolation(kModule, "walks run on the loop-free graph");
  if (mask.num_nodes() != g.num_nodes()) throw ShapeError(kModule, "mask and graph sizes differ");
  const bool biased = cfg.bias == WalkBias::ppr;
  if (biased && !bias) throw ContractViolation(kModule, "ppr bias requested without PPR scores");

  const std::size_t n = g.num_nodes();
  WalkMatrix w;
  w.hop = hop;
  w.rows.resize(n);
  if (workers == 0) workers = default_workers();
  std::vector<BiasScratch> bias_scratch(workers);
  std::vector<CountScratch> counts(workers);
  std::vector<std::uint64_t> accepted(n, 0);

  parallel_for(n, workers, 64, [&](std::size_t begin, std::size_t end, std::size_t worker) {
    auto& bs = bias_scratch[worker];
    auto& cs = counts[worker];
    if (cs.count.size() != n) cs.count.assign(n, 0);
    for (std::size_t v = begin; v < end; ++v) {
      const auto source = static_cast<NodeId>(v);
      const SparseRow* row = biased ? bias->find(source) : nullptr;
      if (biased) bs.load(row, n);
      auto weight = [&](NodeId u) { return bs.dense[u] + kBiasFloor; };

      std::uint64_t hits = 0;
      for (std::size_t t = 0; t < cfg.walks_T; ++t) {
        CounterRng rng = walk_stream(cfg.seed, source, hop, t);
        for (std::size_t attempt = 0; attempt <= cfg.max_retries; ++attempt) {
          auto endpoint = walk_endpoint(g, source, hop, weight, biased, rng);
          if (!endpoint) break;  // isolated source
          if (mask.contains(source, hop, *endpoint)) {
            if (cs.count[*endpoint]++ == 0) cs.touched.push_back(*endpoint);
            ++hits;
            break;
          }
        }
      }
      if (biased) bs.unload(row);

      std::sort(cs.touched.begin(), cs.touched.end());
      auto& out = w.rows[v];
      const double denom =
          cfg.normalization == WalkNormalization::accepted ? static_cast<double>(hits) : static_cast<double>(cfg.walks_T);
      for (NodeId u : cs.touched) {
        out.index.push_back(u);
        out.value.push_back(static_cast<double>(cs.count[u]) / denom);
        cs.count[u] = 0;
      }
      cs.touched.clear();
      accepted[v] = hits;
    }
  });

  w.stats.hop = hop;
  w.stats.walks = static_cast<std::uint64_t>(n) * cfg.walks_T;
  for (std::size_t v = 0; v < n; ++v) {
    w.stats.accepted += accepted[v];
    if (!w.rows[v].empty()) ++w.stats.nonempty_rows;
  }
  return w;
}

FeatureMatrix apply_walk_matrix(const WalkMatrix& w, const FeatureMatrix& x, std::size_t workers) {
  if (static_cast<std::size_t>(x.rows()) != w.rows.size())
    throw ShapeError(kModule, "feature rows " + std::to_string(x.rows()) + " != walk matrix rows " +
                                  std::to_string(w.rows.size()));
  FeatureMatrix out = FeatureMatrix::Zero(x.rows(), x.cols());
  parallel_for(w.rows.size(), workers, 256, [&](std::size_t begin, std::size_t end, std::size_t) {
    for (std::size_t v = begin; v < end; ++v) {
      auto dst = out.row(static_cast<Eigen::Index>(v));
      const auto& row = w.rows[v];
      for (std::size_t k = 0; k < row.size(); ++k) dst.noalias() += row.value[k] * x.row(row.index[k]);
    }
  });
  return out;
}

RmaskFeatures rmask_features(const Graph& g, const HopMask& mask, const FeatureMatrix& x0, const WalkConfig& cfg,
                             const PprScores* bias, std::size_t workers) {
  validate(cfg);
  if (static_cast<std::size_t>(x0.rows()) != g.num_nodes())
    throw ShapeError(kModule, "feature rows " + std::to_string(x0.rows()) + " != node count " +
                                  std::to_string(g.num_nodes()));
  if (mask.depth() < cfg.depth_H) throw ContractViolation(kModule, "mask depth is smaller than depth_H");
  RmaskFeatures result;
  result.features.mode = HopMode::rmask;
  result.features.hops.reserve(cfg.depth_H + 1);
  result.features.hops.push_back(x0);
  for (std::size_t h = 1; h <= cfg.depth_H; ++h) {
    WalkMatrix w = walk_matrix(g, mask, h, cfg, bias, workers);
    result.features.hops.push_back(apply_walk_matrix(w, x0, workers));
    result.stats.push_back(w.stats);
  }
  return result;
}

void write_walk_matrix(const WalkMatrix& w, const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError(kModule, "cannot write " + path.string());
  binary::write_magic(out, "RMW1");
  binary::write_le<std::uint64_t>(out, w.hop);
  binary::write_le<std::uint64_t>(out, w.rows.size());
  for (const auto& row : w.rows) {
    binary::write_le<std::uint64_t>(out, row.size());
    for (std::size_t k = 0; k < row.size(); ++k) {
      binary::write_le<std::uint64_t>(out, row.index[k]);
      binary::write_le<double>(out, row.value[k]);
    }
  }
  if (!out) throw DataError(kModule, "failed writing " + path.string());
}

WalkMatrix read_walk_matrix(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError(kModule, "cannot open " + path.string());
  binary::expect_magic(in, "RMW1", path.string());
  WalkMatrix w;
  w.hop = static_cast<std::size_t>(binary::read_le<std::uint64_t>(in, "hop"));
  const auto n = binary::read_le<std::uint64_t>(in, "row count");
  w.rows.resize(n);
  for (auto& row : w.rows) {
    const auto len = binary::read_le<std::uint64_t>(in, "row length");
    for (std::uint64_t k = 0; k < len; ++k) {
      const auto u = binary::read_le<std::uint64_t>(in, "endpoint");
      if (u >= n) throw RangeError(kModule, path.string() + ": endpoint outside [0, N)");
      row.index.push_back(static_cast<NodeId>(u));
      row.value.push_back(binary::read_le<double>(in, "weight"));
    }
    if (!row.empty()) ++w.stats.nonempty_rows;
  }
  w.stats.hop = w.hop;
  return w;
}

}  // namespace rmask
