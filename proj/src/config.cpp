#include "rmask/config.hpp"

#include <fstream>
#include <set>

#include "rmask/error.hpp"

namespace rmask {

namespace {
constexpr const char* kModule = "config";
using nlohmann::json;

[[noreturn]] void fail(const std::string& key, const std::string& what) {
  throw ParameterError(kModule, "'" + key + "' " + what);
}

// Object reader that remembers which keys were consumed so leftovers can be
// reported as unknown.
class Section {
 public:
  Section(const json& obj, std::string prefix) : obj_(obj), prefix_(std::move(prefix)) {
    if (!obj_.is_object()) fail(prefix_.empty() ? "<root>" : prefix_, "must be an object");
  }

  const json* get(const std::string& key) {
    seen_.insert(key);
    auto it = obj_.find(key);
    return it == obj_.end() ? nullptr : &*it;
  }
  std::string name(const std::string& key) const { return prefix_.empty() ? key : prefix_ + "." + key; }

  const json& require(const std::string& key) {
    const json* v = get(key);
    if (!v) fail(name(key), "is required");
    return *v;
  }

  void read(const std::string& key, double& out) {
    if (const json* v = get(key)) {
      if (!v->is_number()) fail(name(key), "must be a number");
      out = v->get<double>();
    }
  }
  void read(const std::string& key, std::size_t& out) {
    if (const json* v = get(key)) {
      if (!v->is_number_integer() || (v->is_number_integer() && !v->is_number_unsigned() && v->get<std::int64_t>() < 0))
        fail(name(key), "must be a non-negative integer");
      out = v->get<std::uint64_t>();
    }
  }
  void read_u64(const std::string& key, std::uint64_t& out) {
    std::size_t tmp = out;
    read(key, tmp);
    out = tmp;
  }
  void read(const std::string& key, bool& out) {
    if (const json* v = get(key)) {
      if (!v->is_boolean()) fail(name(key), "must be a boolean");
      out = v->get<bool>();
    }
  }
  bool read_string(const std::string& key, std::string& out) {
    if (const json* v = get(key)) {
      if (!v->is_string()) fail(name(key), "must be a string");
      out = v->get<std::string>();
      return true;
    }
    return false;
  }

  std::filesystem::path path(const std::string& key, const std::filesystem::path& base) {
    const json& v = require(key);
    if (!v.is_string() || v.get<std::string>().empty()) fail(name(key), "must be a non-empty path string");
    std::filesystem::path p = v.get<std::string>();
    return p.is_absolute() ? p : (base / p).lexically_normal();
  }

  void finish() const {
    for (auto it = obj_.begin(); it != obj_.end(); ++it)
      if (!seen_.count(it.key())) fail(name(it.key()), "is not a recognized key");
  }

 private:
  const json& obj_;
  std::string prefix_;
  std::set<std::string> seen_;
};

template <class Parse>
auto parse_enum(Section& s, const std::string& key, Parse parse, decltype(parse(std::string{})) fallback) {
  std::string text;
  if (!s.read_string(key, text)) return fallback;
  try {
    return parse(text);
  } catch (const Error&) {
    fail(s.name(key), "has unknown value '" + text + "'");
  }
}
}  // namespace

std::string to_string(HopMode m) { return m == HopMode::rmask ? "rmask" : "baseline"; }

HopMode hop_mode_from_string(const std::string& name) {
  if (name == "baseline") return HopMode::baseline;
  if (name == "rmask") return HopMode::rmask;
  throw ParameterError(kModule, "unknown propagation mode '" + name + "'");
}

WalkConfig PropagationConfig::walk_config() const {
  WalkConfig w;
  w.depth_H = depth_H;
  w.walks_T = walks_T;
  w.bias = bias;
  w.seed = seed;
  w.max_retries = max_retries;
  w.normalization = normalization;
  return w;
}

void validate(const PipelineConfig& cfg) {
  const auto& p = cfg.propagation;
  if (!(p.r >= 0.0 && p.r <= 1.0)) fail("propagation.r", "must lie in [0, 1]");
  if (p.mode == HopMode::rmask && p.depth_H < 1) fail("propagation.depth_H", "must be at least 1 in rmask mode");
  if (p.walks_T < 1) fail("propagation.walks_T", "must be at least 1");
  if (!(p.alpha > 0.0 && p.alpha < 1.0)) fail("propagation.alpha", "must lie in (0, 1)");
  if (!(p.epsilon > 0.0)) fail("propagation.epsilon", "must be positive");
  const auto& c = cfg.combine;
  if (c.method == CombineMethod::gbp_weighted) {
    if (!c.beta) fail("combine.beta", "is required by gbp_weighted");
    if (!(*c.beta > 0.0 && *c.beta < 1.0)) fail("combine.beta", "must lie in (0, 1)");
  } else if (c.beta) {
    fail("combine.beta", "is only valid with gbp_weighted");
  }
  if (c.renormalize_weights && c.method != CombineMethod::gbp_weighted)
    fail("combine.renormalize", "is only valid with gbp_weighted");
  try {
    validate(cfg.train);
  } catch (const Error& e) {
    throw ParameterError(kModule, std::string("train: ") + e.what());
  }
}

PipelineConfig parse_config(const json& doc, const std::filesystem::path& base_dir) {
  PipelineConfig cfg;
  Section root(doc, "");

  {
    Section g(root.require("graph"), "graph");
    cfg.graph.edge_list = g.path("edge_list", base_dir);
    cfg.graph.features = g.path("features", base_dir);
    cfg.graph.labels = g.path("labels", base_dir);
    Section splits(g.require("splits"), "graph.splits");
    cfg.graph.train = splits.path("train", base_dir);
    cfg.graph.val = splits.path("val", base_dir);
    cfg.graph.test = splits.path("test", base_dir);
    splits.finish();
    g.finish();
  }

  if (const json* v = root.get("propagation")) {
    Section p(*v, "propagation");
    auto& out = cfg.propagation;
    out.mode = parse_enum(p, "mode", hop_mode_from_string, out.mode);
    p.read("r", out.r);
    p.read("depth_H", out.depth_H);
    p.read("walks_T", out.walks_T);
    out.bias = parse_enum(p, "bias", walk_bias_from_string, out.bias);
    p.read("alpha", out.alpha);
    p.read("epsilon", out.epsilon);
    p.read_u64("seed", out.seed);
    p.read("top_k", out.top_k);
    p.read("max_retries", out.max_retries);
    out.normalization = parse_enum(p, "normalization", walk_normalization_from_string, out.normalization);
    p.finish();
  }

  if (const json* v = root.get("combine")) {
    Section c(*v, "combine");
    auto& out = cfg.combine;
    out.method = parse_enum(c, "method", combine_method_from_string, out.method);
    if (const json* b = c.get("beta")) {
      if (!b->is_null()) {
        if (!b->is_number()) fail("combine.beta", "must be a number");
        out.beta = b->get<double>();
      }
    }
    c.read("include_raw", out.include_raw);
    c.read("renormalize", out.renormalize_weights);
    c.finish();
  }

  if (const json* v = root.get("train")) {
    Section t(*v, "train");
    auto& out = cfg.train;
    t.read("learning_rate", out.learning_rate);
    t.read("weight_decay", out.weight_decay);
    t.read("dropout", out.dropout);
    t.read("max_epochs", out.max_epochs);
    t.read("patience", out.patience);
    t.read_u64("seed", out.seed);
    t.read("hidden_dim", out.hidden_dim);
    t.read("num_layers", out.num_layers);
    t.read("standardize", out.standardize);
    t.finish();
  }

  if (const json* v = root.get("output")) {
    Section o(*v, "output");
    if (o.get("directory")) cfg.output_directory = o.path("directory", base_dir);
    o.finish();
  } else {
    cfg.output_directory = (base_dir / cfg.output_directory).lexically_normal();
  }

  root.finish();
  validate(cfg);
  return cfg;
}

PipelineConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError(kModule, "cannot open config file " + path.string());
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ParameterError(kModule, path.string() + ": invalid JSON: " + e.what());
  }
  auto base = std::filesystem::absolute(path).parent_path();
  return parse_config(doc, base);
}

json to_json(const PipelineConfig& cfg) {
  auto abs = [](const std::filesystem::path& p) { return std::filesystem::absolute(p).lexically_normal().string(); };
  const auto& p = cfg.propagation;
  json doc;
  doc["graph"] = {
      {"edge_list", abs(cfg.graph.edge_list)},
      {"features", abs(cfg.graph.features)},
      {"labels", abs(cfg.graph.labels)},
      {"splits", {{"train", abs(cfg.graph.train)}, {"val", abs(cfg.graph.val)}, {"test", abs(cfg.graph.test)}}},
  };
  doc["propagation"] = {
      {"mode", to_string(p.mode)},   {"r", p.r},
      {"depth_H", p.depth_H},        {"walks_T", p.walks_T},
      {"bias", to_string(p.bias)},   {"alpha", p.alpha},
      {"epsilon", p.epsilon},        {"seed", p.seed},
      {"top_k", p.top_k},            {"max_retries", p.max_retries},
      {"normalization", to_string(p.normalization)},
  };
  doc["combine"] = {
      {"method", to_string(cfg.combine.method)},
      {"beta", cfg.combine.beta ? json(*cfg.combine.beta) : json(nullptr)},
      {"include_raw", cfg.combine.include_raw},
      {"renormalize", cfg.combine.renormalize_weights},
  };
  const auto& t = cfg.train;
  doc["train"] = {
      {"learning_rate", t.learning_rate}, {"weight_decay", t.weight_decay}, {"dropout", t.dropout},
      {"max_epochs", t.max_epochs},       {"patience", t.patience},         {"seed", t.seed},
      {"hidden_dim", t.hidden_dim},       {"num_layers", t.num_layers},     {"standardize", t.standardize},
  };
  doc["output"] = {{"directory", abs(cfg.output_directory)}};
  return doc;
}

}  // namespace rmask
