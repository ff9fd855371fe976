#include <pybind11/eigen.h>
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "rmask/config.hpp"
#include "rmask/error.hpp"
#include "rmask/metrics.hpp"
#include "rmask/noise_mask.hpp"
#include "rmask/pipeline.hpp"
#include "rmask/ppr.hpp"
#include "rmask/propagation.hpp"
#include "rmask/walk.hpp"

namespace py = pybind11;
using namespace rmask;
using json = nlohmann::json;

namespace {

Graph graph_from_array(std::size_t num_nodes, py::array_t<std::int64_t, py::array::c_style | py::array::forcecast> edges) {
  if (edges.size() != 0 && (edges.ndim() != 2 || edges.shape(1) != 2))
    throw ParameterError("python", "edges must have shape (M, 2)");
  std::vector<std::pair<NodeId, NodeId>> pairs;
  const auto e = edges.unchecked();
  const py::ssize_t rows = edges.size() == 0 ? 0 : edges.shape(0);
  pairs.reserve(static_cast<std::size_t>(rows));
  for (py::ssize_t i = 0; i < rows; ++i) {
    const auto u = edges.ndim() == 2 ? e(i, 0) : 0, v = edges.ndim() == 2 ? e(i, 1) : 0;
    if (u < 0 || v < 0 || static_cast<std::size_t>(u) >= num_nodes || static_cast<std::size_t>(v) >= num_nodes)
      throw RangeError("python", "edge " + std::to_string(i) + " names a node outside [0, " +
                                     std::to_string(num_nodes) + ")");
    pairs.emplace_back(static_cast<NodeId>(u), static_cast<NodeId>(v));
  }
  return Graph::from_edges(num_nodes, pairs);
}

Graph looped(const Graph& g) { return g.has_self_loops() ? g : add_self_loops(g); }

py::list to_list(const HopFeatures& hf) {
  py::list out;
  for (const auto& h : hf.hops) out.append(py::cast(h));
  return out;
}

HopFeatures from_list(const std::vector<FeatureMatrix>& hops, HopMode mode) {
  HopFeatures hf;
  hf.hops = hops;
  hf.mode = mode;
  return hf;
}

py::list stats_list(const std::vector<WalkStats>& stats) {
  py::list out;
  for (const auto& s : stats) {
    py::dict d;
    d["hop"] = s.hop;
    d["nonempty_rows"] = s.nonempty_rows;
    d["walks"] = s.walks;
    d["accepted"] = s.accepted;
    d["acceptance_rate"] = s.acceptance_rate();
    out.append(d);
  }
  return out;
}

py::dict row_dict(const SparseRow& row) {
  py::dict d;
  for (std::size_t k = 0; k < row.size(); ++k) d[py::int_(row.index[k])] = row.value[k];
  return d;
}

PipelineConfig config_from(const std::string& doc, const std::filesystem::path& base_dir) {
  return parse_config(json::parse(doc), base_dir);
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Hop-masked feature propagation core";

  static py::exception<Error> base_error(m, "Error");
  static py::exception<ParameterError> parameter_error(m, "ParameterError", base_error.ptr());
  static py::exception<DataError> data_error(m, "DataError", base_error.ptr());
  static py::exception<NumericError> numeric_error(m, "NumericError", base_error.ptr());
  static py::exception<ContractViolation> contract_error(m, "ContractViolation", base_error.ptr());
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const ParameterError& e) {
      parameter_error(e.what());
    } catch (const DataError& e) {
      data_error(e.what());
    } catch (const NumericError& e) {
      numeric_error(e.what());
    } catch (const ContractViolation& e) {
      contract_error(e.what());
    } catch (const Error& e) {
      base_error(e.what());
    }
  });

  py::class_<Graph>(m, "Graph")
      .def(py::init(&graph_from_array), py::arg("num_nodes"), py::arg("edges"))
      .def_property_readonly("num_nodes", &Graph::num_nodes)
      .def_property_readonly("num_edges", &Graph::num_edges)
      .def_property_readonly("has_self_loops", &Graph::has_self_loops)
      .def("degree", &Graph::degree, py::arg("v"))
      .def("neighbors", [](const Graph& g, NodeId v) {
        if (v >= g.num_nodes()) throw RangeError("python", "node out of range");
        auto n = g.neighbors(v);
        return std::vector<NodeId>(n.begin(), n.end());
      }, py::arg("v"))
      .def("with_self_loops", &looped)
      .def("__repr__", [](const Graph& g) {
        return "<Graph nodes=" + std::to_string(g.num_nodes()) + " edges=" + std::to_string(g.num_edges()) + ">";
      });

  m.def("load_edge_list", [](const std::filesystem::path& p) { return load_edge_list(p); }, py::arg("path"));
  m.def("load_features", &load_features, py::arg("path"));

  m.def("propagate", [](const Graph& g, const FeatureMatrix& x, std::size_t depth, double r, std::size_t workers) {
    py::gil_scoped_release release;
    HopFeatures hf = propagate(normalized_adjacency(g, r), x, depth, workers);
    py::gil_scoped_acquire acquire;
    return to_list(hf);
  }, py::arg("graph"), py::arg("x"), py::arg("depth"), py::arg("r") = 0.5, py::arg("workers") = 1,
        "hops[k] = A^k x for k = 0..depth.");

  m.def("stationary_matrix", [](const Graph& g, double r) { return stationary_matrix(g, r).matrix; },
        py::arg("graph"), py::arg("r") = 0.5);

  m.def("combine", [](const std::vector<FeatureMatrix>& hops, const std::string& method, std::optional<double> beta,
                      bool include_raw, bool renormalize) {
    CombineSpec spec;
    spec.method = combine_method_from_string(method);
    spec.beta = beta;
    spec.include_raw = include_raw;
    spec.renormalize_weights = renormalize;
    return combine(from_list(hops, HopMode::baseline), spec);
  }, py::arg("hops"), py::arg("method") = "s2gc_average", py::arg("beta") = py::none(),
        py::arg("include_raw") = true, py::arg("renormalize") = false);

  py::class_<HopMask>(m, "HopMask")
      .def_property_readonly("num_nodes", &HopMask::num_nodes)
      .def_property_readonly("depth", &HopMask::depth)
      .def("at", [](const HopMask& mask, NodeId v, std::size_t hop) {
        if (v >= mask.num_nodes() || hop == 0 || hop > mask.depth()) throw RangeError("python", "node or hop out of range");
        auto s = mask.at(v, hop);
        return std::vector<NodeId>(s.begin(), s.end());
      }, py::arg("v"), py::arg("hop"))
      .def("pair_count", &HopMask::pair_count, py::arg("hop"));

  m.def("build_hop_mask", &build_hop_mask, py::arg("graph"), py::arg("depth"), py::arg("workers") = 1,
        py::call_guard<py::gil_scoped_release>());

  m.def("noise_report", [](const Graph& g, std::size_t depth, double r) {
    NoiseReport rep = noise_report(g, normalized_adjacency(g, r), depth);
    py::list out;
    for (const auto& h : rep.hops) {
      py::dict d;
      d["hop"] = h.hop;
      d["exact_pairs"] = h.exact_pairs;
      d["support_pairs"] = h.support_pairs;
      d["noise_fraction"] = h.noise_fraction;
      out.append(d);
    }
    return out;
  }, py::arg("graph"), py::arg("depth"), py::arg("r") = 0.5);

  m.def("ppr_exact", [](const Graph& g, double alpha, double r) {
    return ppr_exact(normalized_adjacency(g, r), alpha).to_dense(g.num_nodes());
  }, py::arg("graph"), py::arg("alpha") = kDefaultAlpha, py::arg("r") = 0.0);

  m.def("ppr_push", [](const Graph& g, NodeId source, double alpha, double epsilon) {
    if (source >= g.num_nodes()) throw RangeError("python", "source out of range");
    return row_dict(ppr_push(looped(g), source, alpha, epsilon));
  }, py::arg("graph"), py::arg("source"), py::arg("alpha") = kDefaultAlpha, py::arg("epsilon") = kDefaultEpsilon);

  m.def("rmask_features", [](const Graph& g, const FeatureMatrix& x, std::size_t depth, std::size_t walks_T,
                             const std::string& bias, std::uint64_t seed, double alpha, double epsilon,
                             std::size_t top_k, std::size_t workers) {
    WalkConfig cfg;
    cfg.depth_H = depth;
    cfg.walks_T = walks_T;
    cfg.bias = walk_bias_from_string(bias);
    cfg.seed = seed;
    validate(cfg);
    check_features(x, g.num_nodes());
    RmaskFeatures out;
    {
      py::gil_scoped_release release;
      HopMask mask = build_hop_mask(g, depth, workers);
      PprScores scores;
      if (cfg.bias == WalkBias::ppr) {
        std::vector<NodeId> sources(g.num_nodes());
        for (NodeId i = 0; i < g.num_nodes(); ++i) sources[i] = i;
        scores = ppr_all(looped(g), alpha, epsilon, sources, top_k, workers);
      }
      out = rmask_features(g, mask, x, cfg, cfg.bias == WalkBias::ppr ? &scores : nullptr, workers);
    }
    return py::make_tuple(to_list(out.features), stats_list(out.stats));
  }, py::arg("graph"), py::arg("x"), py::arg("depth"), py::arg("walks_T") = 10, py::arg("bias") = "uniform",
        py::arg("seed") = 0, py::arg("alpha") = kDefaultAlpha, py::arg("epsilon") = kDefaultEpsilon,
        py::arg("top_k") = kDefaultTopK, py::arg("workers") = 1,
        "Masked random-walk hop features; returns (hops, per-hop walk stats).");

  m.def("gsl", [](const FeatureMatrix& x, std::size_t workers) { return gsl(x, false, workers).gsl; },
        py::arg("x"), py::arg("workers") = 1);
  m.def("nsl", &nsl, py::arg("x"), py::arg("i"));

  // Config-level entry points take the config as a JSON string; the Python
  // wrapper converts dicts.
  m.def("_normalize_config", [](const std::string& doc, const std::filesystem::path& base_dir) {
    return to_json(config_from(doc, base_dir)).dump();
  });
  m.def("_preprocess", [](const std::string& doc, const std::filesystem::path& base_dir, std::size_t workers) {
    const PipelineConfig cfg = config_from(doc, base_dir);
    PreprocessOutput pre;
    {
      py::gil_scoped_release release;
      const Dataset data = load_dataset(cfg.graph);
      pre = preprocess(data, cfg.propagation, workers);
    }
    return py::make_tuple(to_list(pre.hops), stats_list(pre.coverage));
  });
  m.def("_evaluate", [](const std::vector<FeatureMatrix>& hops, const std::string& doc,
                        const std::filesystem::path& base_dir) {
    PipelineConfig cfg = config_from(doc, base_dir);
    if (hops.size() != cfg.propagation.depth_H + 1)
      throw ShapeError("python", "expected " + std::to_string(cfg.propagation.depth_H + 1) + " hop matrices, got " +
                                     std::to_string(hops.size()));
    json metrics;
    {
      py::gil_scoped_release release;
      const Dataset data = load_dataset(cfg.graph);
      for (const auto& h : hops) check_features(h, data.graph.num_nodes());
      const Evaluation ev = evaluate(from_list(hops, cfg.propagation.mode), data.split, cfg.combine, cfg.train);
      metrics = metrics_json(cfg, ev);
    }
    return metrics.dump();
  });
  m.def("_run_pipeline", [](const std::string& doc, const std::filesystem::path& base_dir,
                            const std::filesystem::path& out, std::size_t workers) {
    const PipelineConfig cfg = config_from(doc, base_dir);
    json metrics;
    {
      py::gil_scoped_release release;
      metrics = cmd_pipeline(cfg, workers, out);
    }
    return metrics.dump();
  });
}
