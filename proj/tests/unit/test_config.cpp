#include <doctest.h>

#include "fixtures.hpp"
#include "rmask/config.hpp"
#include "rmask/error.hpp"

using namespace rmask;
using nlohmann::json;

namespace {
json minimal() {
  return json::parse(R"({
    "graph": {"edge_list": "e.txt", "features": "x.txt", "labels": "y.txt",
              "splits": {"train": "tr.txt", "val": "va.txt", "test": "te.txt"}}
  })");
}

std::string error_of(const json& doc) {
  try {
    parse_config(doc, "/base");
  } catch (const ParameterError& e) {
    return e.what();
  }
  return "";
}
}  // namespace

TEST_SUITE("config") {
  TEST_CASE("defaults and path resolution") {
    PipelineConfig cfg = parse_config(minimal(), "/base/dir");
    CHECK(cfg.graph.edge_list == std::filesystem::path("/base/dir/e.txt"));
    CHECK(cfg.graph.test == std::filesystem::path("/base/dir/te.txt"));
    CHECK(cfg.propagation.mode == HopMode::baseline);
    CHECK(cfg.propagation.r == 0.5);
    CHECK(cfg.propagation.alpha == 0.15);
    CHECK(cfg.propagation.epsilon == 1e-4);
    CHECK(cfg.combine.method == CombineMethod::s2gc_average);
    CHECK(cfg.combine.include_raw);
    CHECK(cfg.output_directory == std::filesystem::path("/base/dir/out"));
  }

  TEST_CASE("full document") {
    json doc = minimal();
    doc["propagation"] = {{"mode", "rmask"},     {"r", 0.0},       {"depth_H", 4},     {"walks_T", 20},
                          {"bias", "ppr"},        {"alpha", 0.2},   {"epsilon", 1e-5},  {"seed", 7},
                          {"top_k", 32},          {"max_retries", 2}, {"normalization", "walks"}};
    doc["combine"] = {{"method", "gbp_weighted"}, {"beta", 0.3}, {"include_raw", false}, {"renormalize", true}};
    doc["train"] = {{"learning_rate", 0.2}, {"weight_decay", 0.0}, {"dropout", 0.5}, {"max_epochs", 50},
                    {"patience", 10},       {"seed", 3},           {"hidden_dim", 32}, {"num_layers", 2},
                    {"standardize", false}};
    doc["output"] = {{"directory", "/tmp/o"}};
    PipelineConfig cfg = parse_config(doc, "/base");
    CHECK(cfg.propagation.mode == HopMode::rmask);
    CHECK(cfg.propagation.bias == WalkBias::ppr);
    CHECK(cfg.propagation.normalization == WalkNormalization::walks);
    CHECK(cfg.propagation.walk_config().max_retries == 2);
    CHECK(*cfg.combine.beta == 0.3);
    CHECK(cfg.combine.renormalize_weights);
    CHECK(cfg.train.num_layers == 2);
    CHECK_FALSE(cfg.train.standardize);
    CHECK(cfg.output_directory == std::filesystem::path("/tmp/o"));
  }

  TEST_CASE("effective config round trip") {
    json doc = minimal();
    doc["propagation"] = {{"mode", "rmask"}, {"depth_H", 3}};
    doc["combine"] = {{"method", "sign_concat"}};
    PipelineConfig cfg = parse_config(doc, "/base");
    json echoed = to_json(cfg);
    PipelineConfig again = parse_config(echoed, "/elsewhere");
    CHECK(to_json(again) == echoed);
    CHECK(again.graph.labels == cfg.graph.labels);
  }

  TEST_CASE("schema violations") {
    json doc = minimal();
    doc["graph"]["extra"] = 1;
    CHECK(error_of(doc).find("graph.extra") != std::string::npos);

    doc = minimal();
    doc["unknown"] = {};
    CHECK(error_of(doc).find("unknown") != std::string::npos);

    doc = minimal();
    doc["graph"].erase("features");
    CHECK(error_of(doc).find("graph.features") != std::string::npos);

    doc = minimal();
    doc["propagation"] = {{"r", 1.5}};
    CHECK(error_of(doc).find("propagation.r") != std::string::npos);

    doc = minimal();
    doc["propagation"] = {{"depth_H", -1}};
    CHECK(error_of(doc).find("depth_H") != std::string::npos);

    doc = minimal();
    doc["propagation"] = {{"mode", "magic"}};
    CHECK(error_of(doc).find("propagation.mode") != std::string::npos);

    doc = minimal();
    doc["propagation"] = {{"mode", "rmask"}, {"depth_H", 0}};
    CHECK_FALSE(error_of(doc).empty());

    doc = minimal();
    doc["combine"] = {{"method", "s2gc_average"}, {"beta", 0.5}};
    CHECK(error_of(doc).find("combine.beta") != std::string::npos);

    doc = minimal();
    doc["combine"] = {{"method", "gbp_weighted"}};
    CHECK(error_of(doc).find("combine.beta") != std::string::npos);

    doc = minimal();
    doc["train"] = {{"patience", 500}};
    CHECK_FALSE(error_of(doc).empty());

    doc = minimal();
    doc["train"] = {{"dropout", "high"}};
    CHECK(error_of(doc).find("train.dropout") != std::string::npos);

    doc = minimal();
    doc["propagation"] = {{"seed", 1.5}};
    CHECK_FALSE(error_of(doc).empty());
  }

  TEST_CASE("load_config reports missing files and bad JSON") {
    CHECK_THROWS_AS(load_config("/nonexistent/cfg.json"), DataError);
    auto dir = rmask::testing::scratch_dir("config");
    rmask::testing::write_text(dir / "bad.json", "{ not json");
    CHECK_THROWS_AS(load_config(dir / "bad.json"), ParameterError);
    rmask::testing::write_text(dir / "ok.json", minimal().dump());
    CHECK(load_config(dir / "ok.json").graph.edge_list == dir / "e.txt");
  }
}
