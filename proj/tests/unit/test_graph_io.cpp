#include <doctest.h>

#include <sstream>

#include "fixtures.hpp"
#include "rmask/error.hpp"
#include "rmask/graph.hpp"

using namespace rmask;
using namespace rmask::testing;

namespace {
Graph parse(const std::string& text, bool dedupe = true) {
  std::istringstream in(text);
  return parse_edge_list(in, "<memory>", dedupe);
}

std::vector<NodeId> nbrs(const Graph& g, NodeId v) {
  auto s = g.neighbors(v);
  return {s.begin(), s.end()};
}
}  // namespace

TEST_SUITE("graph-io") {
  TEST_CASE("edge list: path P3") {
    Graph g = parse("0 1\n1 2");
    CHECK(g.num_nodes() == 3);
    CHECK(g.num_edges() == 2);
    CHECK(nbrs(g, 1) == std::vector<NodeId>{0, 2});
    CHECK_FALSE(g.has_self_loops());
  }

  TEST_CASE("edge list: duplicate collapse") {
    Graph g = parse("0 1\n1 0");
    CHECK(g.num_nodes() == 2);
    CHECK(g.num_edges() == 1);
  }

  TEST_CASE("edge list: triangle") {
    Graph g = parse("0 1\n1 2\n2 0");
    CHECK(g.num_nodes() == 3);
    CHECK(g.num_edges() == 3);
    for (NodeId v = 0; v < 3; ++v) CHECK(g.degree(v) == 2);
  }

  TEST_CASE("edge list: comments, header and isolated nodes") {
    Graph g = parse("# a comment\n5 2\n0 1\n# inline\n1 2\n");
    CHECK(g.num_nodes() == 5);
    CHECK(g.num_edges() == 2);
    CHECK(g.degree(4) == 0);
  }

  TEST_CASE("edge list: self loops in the file are dropped") {
    Graph g = parse("0 0\n0 1\n");
    CHECK(g.num_edges() == 1);
    CHECK_FALSE(g.has_self_loops());
  }

  TEST_CASE("edge list: malformed line reports its line number") {
    try {
      parse("0 1\n1 x\n");
      FAIL("expected a parse error");
    } catch (const ParseError& e) {
      CHECK(e.line() == 2);
      CHECK(std::string(e.what()).find("<memory>:2") != std::string::npos);
      CHECK(e.exit_code() == 3);
    }
    CHECK_THROWS_AS(parse("0 1 2\n"), ParseError);
    CHECK_THROWS_AS(parse("-1 2\n"), ParseError);
  }

  TEST_CASE("edge list: index outside the declared range") {
    CHECK_THROWS_AS(parse("3 2\n0 1\n1 3\n"), RangeError);
  }

  TEST_CASE("edge list: duplicates rejected without dedupe") {
    CHECK_THROWS_AS(parse("0 1\n1 0\n", false), DataError);
    CHECK_NOTHROW(parse("0 1\n1 2\n", false));
  }

  TEST_CASE("edge list: missing file names the path") {
    try {
      load_edge_list("/nonexistent/edges.txt");
      FAIL("expected a data error");
    } catch (const DataError& e) {
      CHECK(std::string(e.what()).find("/nonexistent/edges.txt") != std::string::npos);
    }
  }

  TEST_CASE("symmetrization idempotence and write round trip") {
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
      Graph g = random_graph(60, 0.08, seed);
      auto dir = scratch_dir("graph_rt");
      write_edge_list(g, dir / "e.txt");
      Graph back = load_edge_list(dir / "e.txt");
      CHECK(back == g);
      // Both directions listed: the stored graph is unchanged.
      std::ostringstream both;
      both << g.num_nodes() << ' ' << g.col_indices().size() << '\n';
      for (NodeId u = 0; u < g.num_nodes(); ++u)
        for (NodeId v : g.neighbors(u)) both << u << ' ' << v << '\n';
      CHECK(parse(both.str()) == g);
    }
  }

  TEST_CASE("from_csr checks invariants") {
    CHECK_NOTHROW(Graph::from_csr({0, 1, 2}, {1, 0}, false));
    CHECK_THROWS_AS(Graph::from_csr({0, 1, 1}, {1}, false), DataError);        // asymmetric
    CHECK_THROWS_AS(Graph::from_csr({0, 2, 4}, {1, 1, 0, 0}, false), DataError);  // duplicate
    CHECK_THROWS_AS(Graph::from_csr({0, 1, 2}, {5, 0}, false), DataError);     // out of range
  }

  TEST_CASE("add_self_loops degrees") {
    CHECK(add_self_loops(path_graph(3)).degree(0) == 2);
    CHECK(add_self_loops(path_graph(3)).degree(1) == 3);
    CHECK(add_self_loops(path_graph(3)).degree(2) == 2);
    Graph k3 = add_self_loops(complete_graph(3));
    for (NodeId v = 0; v < 3; ++v) CHECK(k3.degree(v) == 3);
    Graph single = add_self_loops(Graph::from_edges(1, {}));
    CHECK(single.degree(0) == 1);
    CHECK(single.has_self_loops());
    CHECK(single.num_edges() == 0);
    CHECK_THROWS_AS(add_self_loops(k3), ContractViolation);
  }

  TEST_CASE("normalize: hand-evaluated P3 values") {
    auto adj = normalized_adjacency(path_graph(3), 0.5);
    CHECK(adj.value(0, 1) == doctest::Approx(1.0 / std::sqrt(6.0)).epsilon(1e-12));
    CHECK(adj.value(0, 1) == doctest::Approx(0.408248).epsilon(1e-6));
    auto row_stochastic = normalized_adjacency(path_graph(3), 0.0);
    for (NodeId j = 0; j < 3; ++j) CHECK(row_stochastic.value(1, j) == doctest::Approx(1.0 / 3.0).epsilon(1e-15));
    CHECK(row_stochastic.value(0, 2) == 0.0);
  }

  TEST_CASE("normalize: parameter and contract errors") {
    auto looped = std::make_shared<const Graph>(add_self_loops(path_graph(3)));
    CHECK_THROWS_AS(normalize(looped, -0.1), ParameterError);
    CHECK_THROWS_AS(normalize(looped, 1.5), ParameterError);
    CHECK_THROWS_AS(normalize(std::make_shared<const Graph>(path_graph(3)), 0.5), ContractViolation);
  }

  TEST_CASE("normalize: matches the dense degree formula") {
    for (double r : {0.0, 0.25, 0.5, 1.0}) {
      Graph g = random_graph(40, 0.1, 7);
      auto adj = normalized_adjacency(g, r);
      Eigen::MatrixXd dense = dense_normalized(g, r);
      for (NodeId i = 0; i < g.num_nodes(); ++i)
        for (NodeId j = 0; j < g.num_nodes(); ++j) CHECK(adj.value(i, j) == doctest::Approx(dense(i, j)).epsilon(1e-13));
    }
  }

  TEST_CASE("normalize: r = 0.5 is exactly symmetric") {
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
      Graph g = random_graph(80, 0.06, seed);
      auto adj = normalized_adjacency(g, 0.5);
      const auto& s = *adj.structure;
      for (NodeId i = 0; i < s.num_nodes(); ++i)
        for (NodeId j : s.neighbors(i)) REQUIRE(adj.value(i, j) == adj.value(j, i));
    }
  }

  TEST_CASE("normalize: r = 0 rows sum to one up to N = 1000") {
    for (std::size_t n : {10u, 100u, 1000u}) {
      Graph g = random_graph(n, 5.0 / static_cast<double>(n), n);
      auto adj = normalized_adjacency(g, 0.0);
      const auto& s = *adj.structure;
      for (NodeId i = 0; i < n; ++i) {
        double sum = 0.0;
        for (auto k = s.row_offsets()[i]; k < s.row_offsets()[i + 1]; ++k) sum += adj.values[k];
        REQUIRE(std::abs(sum - 1.0) < 1e-9);
      }
    }
  }

  TEST_CASE("features: text and binary formats") {
    auto dir = scratch_dir("features");
    write_text(dir / "x.txt", "1 2\n3 4.5\n-1 0\n");
    FeatureMatrix x = load_features(dir / "x.txt");
    CHECK(x.rows() == 3);
    CHECK(x.cols() == 2);
    CHECK(x(1, 1) == 4.5);
    CHECK(x(2, 0) == -1.0);
    write_features_binary(x, dir / "x.rmf");
    CHECK(load_features(dir / "x.rmf") == x);
    write_features_text(x, dir / "y.txt");
    CHECK(load_features(dir / "y.txt") == x);
  }

  TEST_CASE("features: binary header layout is little endian u64 rows/cols then f32") {
    auto dir = scratch_dir("features_layout");
    FeatureMatrix x(1, 2);
    x << 1.0, -2.0;
    write_features_binary(x, dir / "x.rmf");
    std::ifstream in(dir / "x.rmf", std::ios::binary);
    std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)), {});
    REQUIRE(bytes.size() == 4 + 8 + 8 + 8);
    CHECK(std::string(bytes.begin(), bytes.begin() + 4) == "RMF1");
    CHECK(bytes[4] == 1);
    CHECK(bytes[12] == 2);
    // 1.0f = 0x3f800000, little endian.
    CHECK(bytes[20] == 0x00);
    CHECK(bytes[23] == 0x3f);
  }

  TEST_CASE("features: errors") {
    auto dir = scratch_dir("features_err");
    write_text(dir / "ragged.txt", "1 2\n3\n");
    CHECK_THROWS_AS(load_features(dir / "ragged.txt"), ParseError);
    write_text(dir / "nan.txt", "1 nan\n");
    CHECK_THROWS_AS(load_features(dir / "nan.txt"), DataError);
    FeatureMatrix x = FeatureMatrix::Zero(3, 2);
    CHECK_THROWS_AS(check_features(x, 4), ShapeError);
    CHECK_NOTHROW(check_features(x, 3));
  }

  TEST_CASE("labels and splits") {
    auto dir = scratch_dir("split");
    write_text(dir / "labels.txt", "0\n1\n0\n");
    write_text(dir / "train.txt", "0\n");
    write_text(dir / "val.txt", "1\n");
    write_text(dir / "test.txt", "2\n");
    LabeledSplit s = load_labels_and_split(dir / "labels.txt", dir / "train.txt", dir / "val.txt", dir / "test.txt", 3);
    CHECK(s.num_classes == 2);
    CHECK(s.labels == std::vector<int>{0, 1, 0});
    CHECK(s.train == std::vector<NodeId>{0});

    write_text(dir / "test_overlap.txt", "0\n");
    CHECK_THROWS_AS(
        load_labels_and_split(dir / "labels.txt", dir / "train.txt", dir / "val.txt", dir / "test_overlap.txt", 3),
        SplitError);
    write_text(dir / "test_range.txt", "7\n");
    CHECK_THROWS_AS(
        load_labels_and_split(dir / "labels.txt", dir / "train.txt", dir / "val.txt", dir / "test_range.txt", 3),
        SplitError);
    CHECK_THROWS_AS(
        load_labels_and_split(dir / "labels.txt", dir / "train.txt", dir / "val.txt", dir / "test.txt", 4),
        ShapeError);
  }
}
