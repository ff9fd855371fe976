#include "rmask/noise_mask.hpp"

#include <algorithm>
#include <bit>
#include <fstream>

#include "rmask/binary_io.hpp"
#include "rmask/error.hpp"
#include "rmask/parallel.hpp"

namespace rmask {

namespace {
constexpr const char* kModule = "noise-mask";

// Per-worker BFS state. `stamp` marks nodes seen in the current search so
// the array is never cleared between sources.
struct BfsScratch {
  std::vector<std::uint32_t> stamp;
  std::uint32_t epoch = 0;
  std::vector<NodeId> frontier, next;

  void begin(std::size_t n) {
    if (stamp.size() != n) {
      stamp.assign(n, 0);
      epoch = 0;
    }
    if (++epoch == 0) {
      std::fill(stamp.begin(), stamp.end(), 0);
      epoch = 1;
    }
  }
};
}  // namespace

HopMask::HopMask(std::size_t num_nodes, std::size_t depth, std::vector<std::uint64_t> offsets,
                 std::vector<NodeId> members)
    : num_nodes_(num_nodes), depth_(depth), offsets_(std::move(offsets)), members_(std::move(members)) {
  if (offsets_.size() != num_nodes_ * depth_ + 1 || offsets_.back() != members_.size())
    throw DataError(kModule, "hop mask offsets do not match its member array");
}

bool HopMask::contains(NodeId v, std::size_t hop, NodeId u) const noexcept {
  if (hop == 0 || hop > depth_ || v >= num_nodes_) return false;
  auto list = at(v, hop);
  return std::binary_search(list.begin(), list.end(), u);
}

std::uint64_t HopMask::pair_count(std::size_t hop) const noexcept {
  if (hop == 0 || hop > depth_) return 0;
  std::uint64_t total = 0;
  for (std::size_t v = 0; v < num_nodes_; ++v) total += at(static_cast<NodeId>(v), hop).size();
  return total;
}

HopMask build_hop_mask(const Graph& g, std::size_t depth, std::size_t workers) {
  if (depth == 0) throw ParameterError(kModule, "depth_H must be at least 1");
  if (g.has_self_loops()) throw ContractViolation(kModule, "build_hop_mask expects a graph without self-loops");
  const std::size_t n = g.num_nodes();

  // Each node's lists, concatenated hop by hop, plus per-hop lengths.
  std::vector<std::vector<NodeId>> members(n);
  std::vector<std::uint64_t> lengths(n * depth, 0);
  if (workers == 0) workers = default_workers();
  std::vector<BfsScratch> scratch(std::max<std::size_t>(1, workers));

  parallel_for(n, workers, 64, [&](std::size_t begin, std::size_t end, std::size_t worker) {
    auto& s = scratch[worker];
    for (std::size_t v = begin; v < end; ++v) {
      s.begin(n);
      s.stamp[v] = s.epoch;
      s.frontier.assign(1, static_cast<NodeId>(v));
      auto& out = members[v];
      for (std::size_t h = 1; h <= depth && !s.frontier.empty(); ++h) {
        s.next.clear();
        for (NodeId u : s.frontier)
          for (NodeId w : g.neighbors(u))
            if (s.stamp[w] != s.epoch) {
              s.stamp[w] = s.epoch;
              s.next.push_back(w);
            }
        std::sort(s.next.begin(), s.next.end());
        out.insert(out.end(), s.next.begin(), s.next.end());
        lengths[v * depth + (h - 1)] = s.next.size();
        std::swap(s.frontier, s.next);
      }
    }
  });

  std::vector<std::uint64_t> offsets(n * depth + 1, 0);
  for (std::size_t slot = 0; slot < n * depth; ++slot) offsets[slot + 1] = offsets[slot] + lengths[slot];
  std::vector<NodeId> flat;
  flat.reserve(offsets.back());
  for (auto& m : members) {
    flat.insert(flat.end(), m.begin(), m.end());
    std::vector<NodeId>().swap(m);
  }
  return HopMask(n, depth, std::move(offsets), std::move(flat));
}

NoiseReport noise_report(const Graph& g, const NormalizedAdjacency& adj, std::size_t depth, std::size_t dense_bound,
                         std::size_t workers) {
  const std::size_t n = g.num_nodes();
  if (n > dense_bound)
    throw ParameterError(kModule, "noise report needs a dense N x N oracle; N = " + std::to_string(n) +
                                      " exceeds the bound of " + std::to_string(dense_bound));
  if (adj.num_nodes() != n) throw ShapeError(kModule, "graph and adjacency sizes differ");
  const HopMask mask = build_hop_mask(g, depth, workers);
  const Graph& looped = *adj.structure;

  // support[i] holds row i of the structural pattern of adj^h as a bitset.
  const std::size_t words = (n + 63) / 64;
  std::vector<std::uint64_t> support(n * words, 0), next(n * words, 0);
  for (NodeId i = 0; i < n; ++i) support[i * words + i / 64] |= std::uint64_t{1} << (i % 64);

  NoiseReport report;
  for (std::size_t h = 1; h <= depth; ++h) {
    parallel_for(n, workers, 64, [&](std::size_t begin, std::size_t end, std::size_t) {
      for (std::size_t i = begin; i < end; ++i) {
        std::uint64_t* dst = next.data() + i * words;
        std::fill(dst, dst + words, 0);
        for (NodeId j : looped.neighbors(static_cast<NodeId>(i))) {
          const std::uint64_t* src = support.data() + static_cast<std::size_t>(j) * words;
          for (std::size_t w = 0; w < words; ++w) dst[w] |= src[w];
        }
      }
    });
    std::swap(support, next);

    NoiseHop hop;
    hop.hop = h;
    std::uint64_t exact_in_support = 0;
    for (NodeId i = 0; i < n; ++i) {
      const std::uint64_t* row = support.data() + static_cast<std::size_t>(i) * words;
      for (std::size_t w = 0; w < words; ++w) hop.support_pairs += static_cast<std::uint64_t>(std::popcount(row[w]));
      for (NodeId u : mask.at(i, h)) {
        ++hop.exact_pairs;
        if ((row[u / 64] >> (u % 64)) & 1u) ++exact_in_support;
      }
    }
    hop.noise_fraction = hop.support_pairs == 0
                             ? 0.0
                             : static_cast<double>(hop.support_pairs - exact_in_support) /
                                   static_cast<double>(hop.support_pairs);
    report.hops.push_back(hop);
  }
  return report;
}

void write_hop_mask(const HopMask& mask, const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError(kModule, "cannot write " + path.string());
  binary::write_magic(out, "RMM1");
  binary::write_le<std::uint64_t>(out, mask.num_nodes());
  binary::write_le<std::uint64_t>(out, mask.depth());
  for (std::size_t v = 0; v < mask.num_nodes(); ++v)
    for (std::size_t h = 1; h <= mask.depth(); ++h) {
      auto list = mask.at(static_cast<NodeId>(v), h);
      binary::write_le<std::uint64_t>(out, list.size());
      for (NodeId u : list) binary::write_le<std::uint64_t>(out, u);
    }
  if (!out) throw DataError(kModule, "failed writing " + path.string());
}

HopMask read_hop_mask(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError(kModule, "cannot open " + path.string());
  binary::expect_magic(in, "RMM1", path.string());
  const auto n = binary::read_le<std::uint64_t>(in, "node count");
  const auto depth = binary::read_le<std::uint64_t>(in, "depth");
  std::vector<std::uint64_t> offsets(n * depth + 1, 0);
  std::vector<NodeId> members;
  for (std::uint64_t slot = 0; slot < n * depth; ++slot) {
    const auto len = binary::read_le<std::uint64_t>(in, "list length");
    for (std::uint64_t k = 0; k < len; ++k) {
      const auto u = binary::read_le<std::uint64_t>(in, "list entry");
      if (u >= n) throw RangeError(kModule, path.string() + ": mask entry outside [0, N)");
      members.push_back(static_cast<NodeId>(u));
    }
    offsets[slot + 1] = members.size();
  }
  return HopMask(static_cast<std::size_t>(n), static_cast<std::size_t>(depth), std::move(offsets), std::move(members));
}

}  // namespace rmask
