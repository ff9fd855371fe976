#include <CLI11.hpp>
#include <cstdint>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "rmask/config.hpp"
#include "rmask/error.hpp"
#include "rmask/pipeline.hpp"

namespace {

int run(int argc, char** argv) {
  CLI::App app{"rmask: graph feature-propagation preprocessing and evaluation"};
  app.require_subcommand(1);
  app.fallthrough();

  std::string config_path;
  std::size_t workers = 1;
  std::string out_dir;
  std::optional<std::uint64_t> seed;
  app.add_option("--config", config_path, "Pipeline config (JSON)")->required();
  app.add_option("--workers", workers, "Worker threads (0 = all cores)");
  app.add_option("--out", out_dir, "Output directory (overrides output.directory)");
  app.add_option("--seed", seed, "Seed for walks, training and sparsification (overrides config)");

  auto* preprocess = app.add_subcommand("preprocess", "Compute hop features");
  auto* train = app.add_subcommand("train", "Train on hop features written by preprocess");
  auto* pipeline = app.add_subcommand("pipeline", "Preprocess and train in one run");
  auto* metrics = app.add_subcommand("metrics", "Graph smoothness level of feature files");
  std::vector<std::string> feature_files;
  metrics->add_option("files", feature_files, "Feature files, one per hop");
  auto* noise = app.add_subcommand("noise", "Noise share of propagation supports per hop");
  auto* sparsify = app.add_subcommand("sparsify", "Write a sparsified copy of the dataset");
  std::string kind;
  double level = 0.0;
  sparsify->add_option("--kind", kind, "feature | edge | label")->required();
  sparsify->add_option("--level", level, "Mask rate, remaining edge rate, or training nodes per class")->required();
  auto* gradcheck = app.add_subcommand("gradcheck", "Finite-difference check of classifier gradients");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : static_cast<int>(rmask::ErrorKind::config);
  }

  rmask::PipelineConfig cfg = rmask::load_config(config_path);
  if (seed) {
    cfg.propagation.seed = *seed;
    cfg.train.seed = *seed;
  }
  const std::filesystem::path out = out_dir.empty() ? cfg.output_directory : std::filesystem::path(out_dir);
  if (!out_dir.empty()) cfg.output_directory = std::filesystem::absolute(out);

  nlohmann::json summary;
  if (preprocess->parsed()) summary = rmask::cmd_preprocess(cfg, workers, out);
  else if (train->parsed()) summary = rmask::cmd_train(cfg, workers, out);
  else if (pipeline->parsed()) summary = rmask::cmd_pipeline(cfg, workers, out);
  else if (metrics->parsed()) {
    std::vector<std::filesystem::path> files(feature_files.begin(), feature_files.end());
    summary = rmask::cmd_metrics(cfg, files, workers, out);
  } else if (noise->parsed()) summary = rmask::cmd_noise(cfg, workers, out);
  else if (sparsify->parsed()) {
    summary = rmask::cmd_sparsify(cfg, rmask::sparsify_kind_from_string(kind), level,
                                  seed.value_or(cfg.propagation.seed), out);
  } else if (gradcheck->parsed()) summary = rmask::cmd_gradcheck(cfg, out);
  std::cout << summary.dump() << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run(argc, argv);
  } catch (const rmask::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return e.exit_code();
  } catch (const std::filesystem::filesystem_error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return static_cast<int>(rmask::ErrorKind::data);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
}
