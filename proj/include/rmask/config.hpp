#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include <json.hpp>

#include "rmask/classifier.hpp"
#include "rmask/propagation.hpp"
#include "rmask/walk.hpp"

namespace rmask {

struct GraphPaths {
  std::filesystem::path edge_list;
  std::filesystem::path features;
  std::filesystem::path labels;
  std::filesystem::path train;
  std::filesystem::path val;
  std::filesystem::path test;
};

struct PropagationConfig {
  HopMode mode = HopMode::baseline;
  double r = 0.5;
  std::size_t depth_H = 2;
  std::size_t walks_T = 10;
  WalkBias bias = WalkBias::uniform;
  double alpha = kDefaultAlpha;
  double epsilon = kDefaultEpsilon;
  std::uint64_t seed = 0;
  std::size_t top_k = kDefaultTopK;
  std::size_t max_retries = 0;
  WalkNormalization normalization = WalkNormalization::accepted;

  WalkConfig walk_config() const;
};

struct PipelineConfig {
  GraphPaths graph;
  PropagationConfig propagation;
  CombineSpec combine;
  TrainConfig train;
  std::filesystem::path output_directory = "out";
};

std::string to_string(HopMode m);
HopMode hop_mode_from_string(const std::string& name);

// Parses and validates a config document. Relative paths are resolved
// against `base_dir`. Unknown keys, wrong types and out-of-range values throw
// ParameterError naming the offending key.
PipelineConfig parse_config(const nlohmann::json& doc, const std::filesystem::path& base_dir);
PipelineConfig load_config(const std::filesystem::path& path);

// Every field with defaults filled in and paths made absolute; parse_config
// accepts the result.
nlohmann::json to_json(const PipelineConfig& cfg);

void validate(const PipelineConfig& cfg);

}  // namespace rmask
