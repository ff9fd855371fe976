#include "rmask/pipeline.hpp"

#include <chrono>
#include <cmath>
#include <fstream>
#include <regex>

#include "rmask/error.hpp"
#include "rmask/metrics.hpp"
#include "rmask/noise_mask.hpp"
#include "rmask/ppr.hpp"

namespace rmask {

namespace {
constexpr const char* kModule = "cli";
using nlohmann::json;

class Stopwatch {
 public:
  Stopwatch() : start_(std::chrono::steady_clock::now()) {}
  std::int64_t ms() const {
    return std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::steady_clock::now() - start_).count();
  }

 private:
  std::chrono::steady_clock::time_point start_;
};

void record(Timings* t, const std::string& stage, std::int64_t ms) {
  if (t) t->record(stage, ms);
}

std::filesystem::path hop_file(const std::filesystem::path& dir, std::size_t k) {
  return dir / ("hop_" + std::to_string(k) + ".rmf");
}

// Removes hop files left behind by an earlier, deeper run.
void remove_stale_hops(const std::filesystem::path& dir, std::size_t depth) {
  for (std::size_t k = depth + 1; std::filesystem::exists(hop_file(dir, k)); ++k)
    std::filesystem::remove(hop_file(dir, k));
}

void write_history(const TrainResult& r, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw DataError(kModule, "cannot write " + path.string());
  for (const auto& e : r.history)
    out << json{{"epoch", e.epoch}, {"train_loss", e.train_loss}, {"val_acc", e.val_acc}}.dump() << '\n';
}

void write_train_outputs(const PipelineConfig& cfg, const Evaluation& ev, const std::filesystem::path& out) {
  write_json(metrics_json(cfg, ev), out / "metrics.json");
  write_history(ev.result, out / "history.jsonl");
  write_checkpoint(ev.result.model, out / "model.rmc");
}
}  // namespace

Dataset load_dataset(const GraphPaths& paths) {
  Dataset d;
  d.graph = load_edge_list(paths.edge_list);
  d.features = load_features(paths.features);
  check_features(d.features, d.graph.num_nodes());
  d.split = load_labels_and_split(paths.labels, paths.train, paths.val, paths.test, d.graph.num_nodes());
  return d;
}

PreprocessOutput preprocess(const Dataset& data, const PropagationConfig& cfg, std::size_t workers,
                            Timings* timings) {
  PreprocessOutput out;
  if (cfg.mode == HopMode::baseline) {
    Stopwatch sw;
    const NormalizedAdjacency adj = normalized_adjacency(data.graph, cfg.r);
    out.hops = propagate(adj, data.features, cfg.depth_H, workers);
    record(timings, "prop_ms", sw.ms());
    return out;
  }

  Stopwatch mask_sw;
  const HopMask mask = build_hop_mask(data.graph, cfg.depth_H, workers);
  record(timings, "mask_ms", mask_sw.ms());

  Stopwatch ppr_sw;
  PprScores scores;
  const PprScores* bias = nullptr;
  if (cfg.bias == WalkBias::ppr) {
    const Graph looped = add_self_loops(data.graph);
    std::vector<NodeId> sources(data.graph.num_nodes());
    for (NodeId v = 0; v < sources.size(); ++v) sources[v] = v;
    scores = ppr_all(looped, cfg.alpha, cfg.epsilon, sources, cfg.top_k, workers);
    bias = &scores;
  }
  record(timings, "ppr_ms", ppr_sw.ms());

  Stopwatch walk_sw;
  RmaskFeatures rf = rmask_features(data.graph, mask, data.features, cfg.walk_config(), bias, workers);
  record(timings, "walk_ms", walk_sw.ms());
  out.hops = std::move(rf.features);
  out.coverage = std::move(rf.stats);
  return out;
}

Evaluation evaluate(const HopFeatures& hops, const LabeledSplit& split, const CombineSpec& combine_spec,
                    const TrainConfig& train_cfg) {
  Evaluation ev;
  const FeatureMatrix x = combine(hops, combine_spec);
  ev.feature_dim = static_cast<std::size_t>(x.cols());
  ev.result = train(x, split, train_cfg);
  const auto predicted = predict(ev.result.model, x);
  ev.val_acc = accuracy(predicted, split.labels, split.val);
  ev.test_acc = accuracy(predicted, split.labels, split.test);
  return ev;
}

json metrics_json(const PipelineConfig& cfg, const Evaluation& ev) {
  return json{
      {"mode", to_string(cfg.propagation.mode)},
      {"depth_H", cfg.propagation.depth_H},
      {"combine", to_string(cfg.combine.method)},
      {"feature_dim", ev.feature_dim},
      {"val_acc", ev.val_acc},
      {"test_acc", ev.test_acc},
      {"best_epoch", ev.result.best_epoch},
      {"epochs_run", ev.result.history.size()},
      {"initial_train_loss", ev.result.initial_train_loss},
      {"final_train_loss", ev.result.final_train_loss},
  };
}

json coverage_json(const std::vector<WalkStats>& coverage) {
  json hops = json::array();
  for (const auto& s : coverage)
    hops.push_back({{"hop", s.hop},
                    {"nonempty_rows", s.nonempty_rows},
                    {"walks", s.walks},
                    {"accepted", s.accepted},
                    {"acceptance_rate", s.acceptance_rate()}});
  return json{{"hops", hops}};
}

void write_json(const json& doc, const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw DataError(kModule, "cannot write " + path.string());
  out << doc.dump(2) << '\n';
  if (!out) throw DataError(kModule, "failed writing " + path.string());
}

json cmd_preprocess(const PipelineConfig& cfg, std::size_t workers, const std::filesystem::path& out) {
  std::filesystem::create_directories(out);
  write_json(to_json(cfg), out / "effective_config.json");
  Timings t;
  Stopwatch load_sw;
  const Dataset data = load_dataset(cfg.graph);
  t.record("load_ms", load_sw.ms());

  PreprocessOutput pre = preprocess(data, cfg.propagation, workers, &t);
  write_hop_features(pre.hops, out);
  remove_stale_hops(out, pre.hops.depth());

  json stats{{"mode", to_string(cfg.propagation.mode)},
             {"depth_H", cfg.propagation.depth_H},
             {"num_nodes", data.graph.num_nodes()},
             {"num_edges", data.graph.num_edges()},
             {"feature_dim", data.features.cols()}};
  if (cfg.propagation.mode == HopMode::rmask) {
    json cov = coverage_json(pre.coverage);
    write_json(cov, out / "coverage.json");
    stats["coverage"] = cov["hops"];
  }
  write_json(stats, out / "preprocess.json");
  write_json(t.stages, out / "timing.json");
  return stats;
}

json cmd_train(const PipelineConfig& cfg, std::size_t /*workers*/, const std::filesystem::path& out) {
  std::filesystem::create_directories(out);
  const Dataset data = load_dataset(cfg.graph);
  HopFeatures hops;
  hops.mode = cfg.propagation.mode;
  for (std::size_t k = 0; k <= cfg.propagation.depth_H; ++k) {
    const auto path = hop_file(out, k);
    if (!std::filesystem::exists(path))
      throw DataError(kModule, "missing " + path.string() + " (run preprocess with the same config first)");
    hops.hops.push_back(load_features(path));
    check_features(hops.hops.back(), data.graph.num_nodes());
  }
  Stopwatch sw;
  const Evaluation ev = evaluate(hops, data.split, cfg.combine, cfg.train);
  Timings t;
  t.record("train_ms", sw.ms());
  write_train_outputs(cfg, ev, out);
  write_json(t.stages, out / "train_timing.json");
  return metrics_json(cfg, ev);
}

json cmd_pipeline(const PipelineConfig& cfg, std::size_t workers, const std::filesystem::path& out) {
  std::filesystem::create_directories(out);
  write_json(to_json(cfg), out / "effective_config.json");
  Timings t;
  Stopwatch load_sw;
  const Dataset data = load_dataset(cfg.graph);
  t.record("load_ms", load_sw.ms());

  Stopwatch total_sw;
  Stopwatch pre_sw;
  PreprocessOutput pre = preprocess(data, cfg.propagation, workers, &t);
  t.record("preprocess_ms", pre_sw.ms());
  Stopwatch train_sw;
  const Evaluation ev = evaluate(pre.hops, data.split, cfg.combine, cfg.train);
  t.record("train_ms", train_sw.ms());
  t.record("total_ms", total_sw.ms());

  if (cfg.propagation.mode == HopMode::rmask) write_json(coverage_json(pre.coverage), out / "coverage.json");
  write_train_outputs(cfg, ev, out);
  write_json(t.stages, out / "timing.json");
  return metrics_json(cfg, ev);
}

json cmd_metrics(const PipelineConfig& cfg, const std::vector<std::filesystem::path>& feature_files,
                 std::size_t workers, const std::filesystem::path& out) {
  if (feature_files.empty()) throw ParameterError(kModule, "metrics needs at least one feature file");
  static const std::regex hop_name(R"(hop_(\d+)\.rmf)");
  json hops = json::array();
  for (std::size_t i = 0; i < feature_files.size(); ++i) {
    const auto& path = feature_files[i];
    const FeatureMatrix x = load_features(path);
    std::size_t hop = i;
    std::smatch m;
    const std::string name = path.filename().string();
    if (std::regex_match(name, m, hop_name)) hop = std::stoul(m[1].str());
    hops.push_back({{"hop", hop}, {"file", path.filename().string()}, {"gsl", gsl(x, false, workers).gsl}});
  }
  json doc{{"r", cfg.propagation.r}, {"hops", hops}};
  write_json(doc, out / "gsl.json");
  return doc;
}

json cmd_noise(const PipelineConfig& cfg, std::size_t workers, const std::filesystem::path& out) {
  const Graph g = load_edge_list(cfg.graph.edge_list);
  if (cfg.propagation.depth_H < 1) throw ParameterError(kModule, "noise needs depth_H >= 1");
  const NormalizedAdjacency adj = normalized_adjacency(g, cfg.propagation.r);
  const NoiseReport report = noise_report(g, adj, cfg.propagation.depth_H, kDenseOracleBound, workers);
  json hops = json::array();
  for (const auto& h : report.hops)
    hops.push_back({{"hop", h.hop},
                    {"exact_pairs", h.exact_pairs},
                    {"support_pairs", h.support_pairs},
                    {"noise_fraction", h.noise_fraction}});
  json doc{{"noise_definition",
            "share of the structural nonzeros of the hop-h propagation matrix (self-loops included) whose "
            "shortest-path distance is below h"},
           {"hops", hops}};
  write_json(doc, out / "noise.json");
  return doc;
}

json cmd_sparsify(const PipelineConfig& cfg, SparsifyKind kind, double level, std::uint64_t seed,
                  const std::filesystem::path& out) {
  Dataset data = load_dataset(cfg.graph);
  switch (kind) {
    case SparsifyKind::feature:
      data.features = sparsify_features(data.features, level, seed);
      break;
    case SparsifyKind::edge:
      data.graph = sparsify_edges(data.graph, level, seed);
      break;
    case SparsifyKind::label: {
      if (!(level >= 1.0 && level <= 20.0) || std::floor(level) != level)
        throw ParameterError("sparsify", "label count per class must be an integer in [1, 20]");
      data.split = sparsify_labels(data.split, static_cast<std::size_t>(level), seed);
      break;
    }
  }

  std::filesystem::create_directories(out);
  write_edge_list(data.graph, out / "edges.txt");
  write_features_text(data.features, out / "features.txt");
  write_labels(data.split.labels, out / "labels.txt");
  write_index_list(data.split.train, out / "train.txt");
  write_index_list(data.split.val, out / "val.txt");
  write_index_list(data.split.test, out / "test.txt");

  PipelineConfig derived = cfg;
  derived.graph = {out / "edges.txt", out / "features.txt", out / "labels.txt",
                   out / "train.txt", out / "val.txt",      out / "test.txt"};
  derived.output_directory = out / "run";
  write_json(to_json(derived), out / "config.json");

  json manifest{{"kind", to_string(kind)},
                {"level", level},
                {"seed", seed},
                {"source_edge_list", std::filesystem::absolute(cfg.graph.edge_list).lexically_normal().string()},
                {"num_nodes", data.graph.num_nodes()},
                {"num_edges", data.graph.num_edges()},
                {"num_train", data.split.train.size()},
                {"nonzero_features", static_cast<std::uint64_t>((data.features.array() != 0.0).count())}};
  write_json(manifest, out / "manifest.json");
  return manifest;
}

json cmd_gradcheck(const PipelineConfig& cfg, const std::filesystem::path& out) {
  const Dataset data = load_dataset(cfg.graph);
  const auto& split = data.split;
  if (split.train.empty()) throw SplitError(kModule, "gradcheck needs training nodes");

  // A small slice keeps the finite-difference sweep cheap: training rows and
  // the first columns that vary across them.
  constexpr Eigen::Index kMaxColumns = 24;
  std::vector<Eigen::Index> columns;
  for (Eigen::Index j = 0; j < data.features.cols() && static_cast<Eigen::Index>(columns.size()) < kMaxColumns; ++j) {
    const double first = data.features(split.train.front(), j);
    for (NodeId v : split.train)
      if (data.features(v, j) != first) {
        columns.push_back(j);
        break;
      }
  }
  if (columns.empty()) columns.push_back(0);
  Eigen::MatrixXd x(static_cast<Eigen::Index>(split.train.size()), static_cast<Eigen::Index>(columns.size()));
  std::vector<int> labels;
  for (std::size_t i = 0; i < split.train.size(); ++i) {
    for (std::size_t c = 0; c < columns.size(); ++c)
      x(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(c)) = data.features(split.train[i], columns[c]);
    labels.push_back(split.labels[split.train[i]]);
  }

  json results = json::array();
  double worst = 0.0;
  for (std::size_t layers : {std::size_t{1}, std::size_t{2}}) {
    TrainConfig tc = cfg.train;
    tc.num_layers = layers;
    tc.hidden_dim = 8;
    const ModelParams m = init_model(columns.size(), static_cast<std::size_t>(split.num_classes), tc);
    const double err = grad_check(m, x, labels, kGradCheckStep, cfg.train.weight_decay);
    worst = std::max(worst, err);
    results.push_back({{"num_layers", layers}, {"parameters", m.parameter_count()}, {"max_rel_error", err}});
  }
  json doc{{"epsilon_fd", kGradCheckStep},
           {"tolerance", kGradCheckTolerance},
           {"passed", worst < kGradCheckTolerance},
           {"results", results}};
  write_json(doc, out / "gradcheck.json");
  if (!(worst < kGradCheckTolerance))
    throw NumericError("classifier", "gradient check failed: max relative error " + std::to_string(worst));
  return doc;
}

}  // namespace rmask
