#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "rmask/graph.hpp"

namespace rmask {

/// De-noise mask: for every node v and hop h in 1..depth, the sorted list of
/// nodes at exact shortest-path distance h from v. Nodes closer than h (the
/// "noise" a hop-h propagation would revisit) and nodes farther than depth
/// appear in no list for that hop.
class HopMask {
 public:
  HopMask() = default;
  HopMask(std::size_t num_nodes, std::size_t depth, std::vector<std::uint64_t> offsets, std::vector<NodeId> members);

  std::size_t num_nodes() const noexcept { return num_nodes_; }
  std::size_t depth() const noexcept { return depth_; }

  // hop is 1-based.
  std::span<const NodeId> at(NodeId v, std::size_t hop) const noexcept {
    const std::size_t slot = static_cast<std::size_t>(v) * depth_ + (hop - 1);
    return {members_.data() + offsets_[slot], members_.data() + offsets_[slot + 1]};
  }
  bool contains(NodeId v, std::size_t hop, NodeId u) const noexcept;

  // Number of ordered (v, u) pairs at exact distance `hop`.
  std::uint64_t pair_count(std::size_t hop) const noexcept;

  friend bool operator==(const HopMask&, const HopMask&) = default;

 private:
  std::size_t num_nodes_ = 0;
  std::size_t depth_ = 0;
  std::vector<std::uint64_t> offsets_{0};  // num_nodes * depth + 1 slots
  std::vector<NodeId> members_;
};

// Depth-bounded BFS from every node; per-node work is independent and the
// result does not depend on the worker count.
HopMask build_hop_mask(const Graph& g, std::size_t depth, std::size_t workers = 1);

struct NoiseHop {
  std::size_t hop = 0;
  std::uint64_t exact_pairs = 0;    // ordered pairs at distance == hop
  std::uint64_t support_pairs = 0;  // structural nonzeros of adj^hop
  double noise_fraction = 0.0;      // share of the support at distance < hop
};

struct NoiseReport {
  std::vector<NoiseHop> hops;
};

inline constexpr std::size_t kDenseOracleBound = 5000;

// Compares the support of adj^h (computed as a boolean matrix power of the
// self-looped pattern) with exact hop-h pairs. Refuses graphs larger than
// `dense_bound` nodes.
NoiseReport noise_report(const Graph& g, const NormalizedAdjacency& adj, std::size_t depth,
                         std::size_t dense_bound = kDenseOracleBound, std::size_t workers = 1);

void write_hop_mask(const HopMask& mask, const std::filesystem::path& path);
HopMask read_hop_mask(const std::filesystem::path& path);

}  // namespace rmask
