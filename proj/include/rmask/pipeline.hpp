#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "rmask/classifier.hpp"
#include "rmask/config.hpp"
#include "rmask/graph.hpp"
#include "rmask/propagation.hpp"
#include "rmask/sparsify.hpp"
#include "rmask/walk.hpp"

namespace rmask {

struct Dataset {
  Graph graph;  // loop-free
  FeatureMatrix features;
  LabeledSplit split;
};

Dataset load_dataset(const GraphPaths& paths);

// Stage durations in whole milliseconds, kept apart from every deterministic
// output.
struct Timings {
  nlohmann::json stages = nlohmann::json::object();
  void record(const std::string& stage, std::int64_t ms) { stages[stage] = ms; }
};

struct PreprocessOutput {
  HopFeatures hops;
  std::vector<WalkStats> coverage;  // rmask mode only, hops 1..H
};

// Hop features for one propagation config: baseline powers of the normalized
// adjacency, or mask -> (PPR) -> walks in rmask mode.
PreprocessOutput preprocess(const Dataset& data, const PropagationConfig& cfg, std::size_t workers,
                            Timings* timings = nullptr);

struct Evaluation {
  TrainResult result;
  double val_acc = 0.0;
  double test_acc = 0.0;
  std::size_t feature_dim = 0;
};

// combine -> train -> score on the best-validation parameters.
Evaluation evaluate(const HopFeatures& hops, const LabeledSplit& split, const CombineSpec& combine,
                    const TrainConfig& train_cfg);

nlohmann::json metrics_json(const PipelineConfig& cfg, const Evaluation& ev);
nlohmann::json coverage_json(const std::vector<WalkStats>& coverage);

// Pretty-printed with a trailing newline.
void write_json(const nlohmann::json& doc, const std::filesystem::path& path);

// Command implementations. Each writes its outputs under `out` and returns
// the main JSON document it wrote.
nlohmann::json cmd_preprocess(const PipelineConfig& cfg, std::size_t workers, const std::filesystem::path& out);
nlohmann::json cmd_train(const PipelineConfig& cfg, std::size_t workers, const std::filesystem::path& out);
nlohmann::json cmd_pipeline(const PipelineConfig& cfg, std::size_t workers, const std::filesystem::path& out);
nlohmann::json cmd_metrics(const PipelineConfig& cfg, const std::vector<std::filesystem::path>& feature_files,
                           std::size_t workers, const std::filesystem::path& out);
nlohmann::json cmd_noise(const PipelineConfig& cfg, std::size_t workers, const std::filesystem::path& out);
nlohmann::json cmd_sparsify(const PipelineConfig& cfg, SparsifyKind kind, double level, std::uint64_t seed,
                            const std::filesystem::path& out);
nlohmann::json cmd_gradcheck(const PipelineConfig& cfg, const std::filesystem::path& out);

inline constexpr double kGradCheckStep = 1e-6;
inline constexpr double kGradCheckTolerance = 1e-5;

}  // namespace rmask
