#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "rmask/graph.hpp"
#include "rmask/noise_mask.hpp"
#include "rmask/ppr.hpp"
#include "rmask/propagation.hpp"
#include "rmask/rng.hpp"

namespace rmask {

enum class WalkBias { uniform, ppr };

// How accepted endpoint counts become row weights.
enum class WalkNormalization {
  accepted,  // count / accepted walks: rows are probability distributions
  walks,     // count / walks_T: rows shrink with the rejection rate
};

std::string to_string(WalkBias b);
WalkBias walk_bias_from_string(const std::string& name);
std::string to_string(WalkNormalization n);
WalkNormalization walk_normalization_from_string(const std::string& name);

struct WalkConfig {
  std::size_t depth_H = 2;
  std::size_t walks_T = 10;
  WalkBias bias = WalkBias::uniform;
  std::uint64_t seed = 0;
  std::size_t max_retries = 0;  // extra attempts after a rejected walk
  WalkNormalization normalization = WalkNormalization::accepted;
};

void validate(const WalkConfig& cfg);

// Additive weight given to every neighbor under PPR bias so that neighbors
// with zero (or truncated) importance remain reachable.
inline constexpr double kBiasFloor = 1e-12;

struct WalkStats {
  std::size_t hop = 0;
  std::size_t nonempty_rows = 0;
  std::uint64_t walks = 0;     // N * walks_T
  std::uint64_t accepted = 0;  // walks whose endpoint survived the mask
  double acceptance_rate() const noexcept {
    return walks == 0 ? 0.0 : static_cast<double>(accepted) / static_cast<double>(walks);
  }
};

// Row v: accepted hop-h endpoints of walks started at v, weighted by count.
struct WalkMatrix {
  std::size_t hop = 0;
  std::vector<SparseRow> rows;
  WalkStats stats;
};

// Performs exactly `hop` steps from `source` over non-self-loop neighbors;
// each step picks a neighbor with probability proportional to
// bias_row(neighbor) + kBiasFloor, or uniformly when bias_row is null. The
// endpoint is returned only if it lies at exact distance `hop` from source.
std::optional<NodeId> single_walk(const Graph& g, const HopMask& mask, NodeId source, std::size_t hop,
                                  const SparseRow* bias_row, CounterRng& rng);

// The random stream used by walk `walk` of `source` at hop `hop`.
inline CounterRng walk_stream(std::uint64_t seed, NodeId source, std::size_t hop, std::size_t walk) {
  return CounterRng(seed, StreamTag::walk, source, static_cast<std::uint32_t>(hop), static_cast<std::uint32_t>(walk));
}

WalkMatrix walk_matrix(const Graph& g, const HopMask& mask, std::size_t hop, const WalkConfig& cfg,
                       const PprScores* bias = nullptr, std::size_t workers = 1);

// W * x: each nonempty row becomes the weighted average of its endpoints'
// features; empty rows stay zero.
FeatureMatrix apply_walk_matrix(const WalkMatrix& w, const FeatureMatrix& x, std::size_t workers = 1);

struct RmaskFeatures {
  HopFeatures features;         // hops[0] = x0, hops[h] = W^h x0
  std::vector<WalkStats> stats;  // one entry per hop 1..H
};

RmaskFeatures rmask_features(const Graph& g, const HopMask& mask, const FeatureMatrix& x0, const WalkConfig& cfg,
                             const PprScores* bias = nullptr, std::size_t workers = 1);

void write_walk_matrix(const WalkMatrix& w, const std::filesystem::path& path);
WalkMatrix read_walk_matrix(const std::filesystem::path& path);

}  // namespace rmask
