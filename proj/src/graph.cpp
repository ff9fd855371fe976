#include "rmask/graph.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>
#include <unordered_set>

#include "rmask/binary_io.hpp"
#include "rmask/error.hpp"

namespace rmask {

namespace {

constexpr const char* kModule = "graph-io";

std::ifstream open_input(const std::filesystem::path& path, std::ios::openmode mode = std::ios::in) {
  std::ifstream in(path, mode);
  if (!in) throw DataError(kModule, "cannot open " + path.string());
  return in;
}

std::ofstream open_output(const std::filesystem::path& path, std::ios::openmode mode = std::ios::out) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, mode | std::ios::trunc);
  if (!out) throw DataError(kModule, "cannot write " + path.string());
  return out;
}

std::string_view strip_comment(std::string_view line) {
  if (auto pos = line.find('#'); pos != std::string_view::npos) line = line.substr(0, pos);
  return line;
}

// Splits on spaces, tabs and carriage returns.
std::vector<std::string_view> tokens(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && (line[i] == ' ' || line[i] == '\t' || line[i] == '\r')) ++i;
    std::size_t j = i;
    while (j < line.size() && line[j] != ' ' && line[j] != '\t' && line[j] != '\r') ++j;
    if (j > i) out.push_back(line.substr(i, j - i));
    i = j;
  }
  return out;
}

template <class T>
bool parse_number(std::string_view token, T& value) {
  const char* end = token.data() + token.size();
  if constexpr (std::is_floating_point_v<T>) {
    if (!token.empty() && token.front() == '+') token.remove_prefix(1);
  }
  auto [ptr, ec] = std::from_chars(token.data(), end, value);
  return ec == std::errc{} && ptr == end;
}

}  // namespace

// ---------------------------------------------------------------------------
// Graph

Graph Graph::from_edges(std::size_t num_nodes, std::span<const std::pair<NodeId, NodeId>> edges, bool dedupe) {
  std::vector<std::uint64_t> offsets(num_nodes + 1, 0);
  for (auto [u, v] : edges) {
    if (u >= num_nodes || v >= num_nodes)
      throw RangeError(kModule, "edge (" + std::to_string(u) + ", " + std::to_string(v) +
                                    ") outside [0, " + std::to_string(num_nodes) + ")");
    if (u == v) continue;
    ++offsets[u + 1];
    ++offsets[v + 1];
  }
  for (std::size_t i = 0; i < num_nodes; ++i) offsets[i + 1] += offsets[i];

  std::vector<NodeId> cols(offsets.back());
  std::vector<std::uint64_t> cursor(offsets.begin(), offsets.end() - 1);
  for (auto [u, v] : edges) {
    if (u == v) continue;
    cols[cursor[u]++] = v;
    cols[cursor[v]++] = u;
  }

  // Sort each row and squeeze out duplicates in place.
  std::vector<std::uint64_t> packed(num_nodes + 1, 0);
  std::size_t write = 0;
  for (std::size_t v = 0; v < num_nodes; ++v) {
    auto first = cols.begin() + static_cast<std::ptrdiff_t>(offsets[v]);
    auto last = cols.begin() + static_cast<std::ptrdiff_t>(offsets[v + 1]);
    std::sort(first, last);
    for (auto it = first; it != last; ++it) {
      if (write > packed[v] && cols[write - 1] == *it) {
        if (!dedupe)
          throw DataError(kModule, "duplicate edge (" + std::to_string(v) + ", " + std::to_string(*it) + ")");
        continue;
      }
      cols[write++] = *it;
    }
    packed[v + 1] = write;
  }
  cols.resize(write);

  Graph g;
  g.row_offsets_ = std::move(packed);
  g.col_indices_ = std::move(cols);
  g.num_edges_ = g.col_indices_.size() / 2;
  g.has_self_loops_ = false;
  return g;
}

Graph Graph::from_csr(std::vector<std::uint64_t> row_offsets, std::vector<NodeId> col_indices, bool has_self_loops) {
  if (row_offsets.empty() || row_offsets.front() != 0 || row_offsets.back() != col_indices.size())
    throw DataError(kModule, "row offsets do not span the column array");
  const std::size_t n = row_offsets.size() - 1;
  std::size_t loops = 0;
  for (std::size_t v = 0; v < n; ++v) {
    if (row_offsets[v + 1] < row_offsets[v]) throw DataError(kModule, "row offsets are not monotone");
    bool seen_self = false;
    for (std::uint64_t k = row_offsets[v]; k < row_offsets[v + 1]; ++k) {
      const NodeId c = col_indices[k];
      if (c >= n) throw RangeError(kModule, "column index out of range in row " + std::to_string(v));
      if (k > row_offsets[v] && col_indices[k - 1] >= c)
        throw DataError(kModule, "row " + std::to_string(v) + " is not strictly increasing");
      if (c == v) seen_self = true;
    }
    if (seen_self != has_self_loops)
      throw DataError(kModule, "self-loop at node " + std::to_string(v) + " disagrees with has_self_loops");
    loops += seen_self ? 1 : 0;
  }

  Graph g;
  g.row_offsets_ = std::move(row_offsets);
  g.col_indices_ = std::move(col_indices);
  g.has_self_loops_ = has_self_loops;
  g.num_edges_ = (g.col_indices_.size() - loops) / 2;
  for (NodeId v = 0; v < n; ++v)
    for (NodeId u : g.neighbors(v))
      if (!g.has_edge(u, v))
        throw DataError(kModule, "asymmetric adjacency at (" + std::to_string(v) + ", " + std::to_string(u) + ")");
  return g;
}

bool Graph::has_edge(NodeId u, NodeId v) const noexcept {
  if (u >= num_nodes()) return false;
  auto row = neighbors(u);
  return std::binary_search(row.begin(), row.end(), v);
}

double NormalizedAdjacency::value(NodeId i, NodeId j) const noexcept {
  auto row = structure->neighbors(i);
  auto it = std::lower_bound(row.begin(), row.end(), j);
  if (it == row.end() || *it != j) return 0.0;
  return values[structure->row_offsets()[i] + static_cast<std::size_t>(it - row.begin())];
}

// ---------------------------------------------------------------------------
// Edge lists

Graph parse_edge_list(std::istream& in, const std::string& source_name, bool dedupe) {
  struct Pair {
    std::uint64_t a, b;
    std::size_t line;
  };
  std::vector<Pair> pairs;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    auto toks = tokens(strip_comment(line));
    if (toks.empty()) continue;
    if (toks.size() != 2) throw ParseError(kModule, source_name, line_no, "expected \"u v\"");
    Pair p{0, 0, line_no};
    if (!parse_number(toks[0], p.a) || !parse_number(toks[1], p.b))
      throw ParseError(kModule, source_name, line_no, "expected two non-negative integers");
    pairs.push_back(p);
  }

  std::size_t first = 0;
  std::uint64_t n = 0;
  const bool header = !pairs.empty() && pairs[0].a > 0 && pairs[0].b == pairs.size() - 1;
  if (header) {
    n = pairs[0].a;
    first = 1;
  }
  for (std::size_t i = first; i < pairs.size(); ++i) {
    const auto& p = pairs[i];
    if (header && (p.a >= n || p.b >= n))
      throw RangeError(kModule, source_name + ":" + std::to_string(p.line) + ": node index outside declared range [0, " +
                                    std::to_string(n) + ")");
    if (!header) n = std::max({n, p.a + 1, p.b + 1});
  }
  if (n > std::numeric_limits<NodeId>::max())
    throw RangeError(kModule, source_name + ": node count exceeds 32-bit node ids");

  std::vector<std::pair<NodeId, NodeId>> edges;
  edges.reserve(pairs.size() - first);
  for (std::size_t i = first; i < pairs.size(); ++i)
    edges.emplace_back(static_cast<NodeId>(pairs[i].a), static_cast<NodeId>(pairs[i].b));
  return Graph::from_edges(static_cast<std::size_t>(n), edges, dedupe);
}

Graph load_edge_list(const std::filesystem::path& path, bool dedupe) {
  auto in = open_input(path);
  return parse_edge_list(in, path.string(), dedupe);
}

void write_edge_list(const Graph& g, const std::filesystem::path& path) {
  auto out = open_output(path);
  out << g.num_nodes() << ' ' << g.num_edges() << '\n';
  for (NodeId u = 0; u < g.num_nodes(); ++u)
    for (NodeId v : g.neighbors(u))
      if (u < v) out << u << ' ' << v << '\n';
  if (!out) throw DataError(kModule, "failed writing " + path.string());
}

// ---------------------------------------------------------------------------
// Features

FeatureMatrix load_features(const std::filesystem::path& path) {
  auto in = open_input(path, std::ios::in | std::ios::binary);
  char magic[4] = {};
  in.read(magic, 4);
  const bool binary_format = in.gcount() == 4 && std::string_view(magic, 4) == "RMF1";
  if (binary_format) {
    const auto rows = binary::read_le<std::uint64_t>(in, "row count");
    const auto cols = binary::read_le<std::uint64_t>(in, "column count");
    FeatureMatrix x(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
    std::vector<float> buffer(cols);
    for (std::uint64_t i = 0; i < rows; ++i) {
      for (std::uint64_t j = 0; j < cols; ++j) buffer[j] = binary::read_le<float>(in, path.string() + " values");
      for (std::uint64_t j = 0; j < cols; ++j) {
        if (!std::isfinite(buffer[j]))
          throw DataError(kModule, path.string() + ": non-finite value at row " + std::to_string(i));
        x(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = static_cast<double>(buffer[j]);
      }
    }
    return x;
  }

  in.clear();
  in.seekg(0);
  std::vector<double> values;
  std::size_t cols = 0, rows = 0, line_no = 0;
  std::string line;
  while (std::getline(in, line)) {
    ++line_no;
    auto toks = tokens(line);
    if (toks.empty()) continue;
    if (rows == 0) cols = toks.size();
    if (toks.size() != cols)
      throw ParseError(kModule, path.string(), line_no,
                       "row has " + std::to_string(toks.size()) + " columns, expected " + std::to_string(cols));
    for (auto tok : toks) {
      double v = 0;
      if (!parse_number(tok, v)) throw ParseError(kModule, path.string(), line_no, "bad number '" + std::string(tok) + "'");
      if (!std::isfinite(v)) throw DataError(kModule, path.string() + ":" + std::to_string(line_no) + ": non-finite value");
      values.push_back(v);
    }
    ++rows;
  }
  FeatureMatrix x(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
  std::copy(values.begin(), values.end(), x.data());
  return x;
}

void write_features_binary(const FeatureMatrix& x, const std::filesystem::path& path) {
  auto out = open_output(path, std::ios::out | std::ios::binary);
  binary::write_magic(out, "RMF1");
  binary::write_le<std::uint64_t>(out, static_cast<std::uint64_t>(x.rows()));
  binary::write_le<std::uint64_t>(out, static_cast<std::uint64_t>(x.cols()));
  for (Eigen::Index i = 0; i < x.rows(); ++i)
    for (Eigen::Index j = 0; j < x.cols(); ++j) binary::write_le<float>(out, static_cast<float>(x(i, j)));
  if (!out) throw DataError(kModule, "failed writing " + path.string());
}

void write_features_text(const FeatureMatrix& x, const std::filesystem::path& path) {
  auto out = open_output(path);
  out.precision(17);
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    for (Eigen::Index j = 0; j < x.cols(); ++j) {
      if (j) out << ' ';
      out << x(i, j);
    }
    out << '\n';
  }
  if (!out) throw DataError(kModule, "failed writing " + path.string());
}

void check_features(const FeatureMatrix& x, std::size_t num_nodes) {
  if (static_cast<std::size_t>(x.rows()) != num_nodes)
    throw ShapeError(kModule, "feature matrix has " + std::to_string(x.rows()) + " rows but the graph has " +
                                  std::to_string(num_nodes) + " nodes");
  if (!x.allFinite()) throw DataError(kModule, "feature matrix contains non-finite entries");
}

// ---------------------------------------------------------------------------
// Labels and splits

namespace {

template <class T>
std::vector<T> load_integers(const std::filesystem::path& path, const char* what) {
  auto in = open_input(path);
  std::vector<T> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    auto toks = tokens(strip_comment(line));
    if (toks.empty()) continue;
    T v{};
    if (toks.size() != 1 || !parse_number(toks[0], v))
      throw ParseError(kModule, path.string(), line_no, std::string("expected one ") + what);
    out.push_back(v);
  }
  return out;
}

}  // namespace

std::vector<int> load_labels(const std::filesystem::path& path) {
  auto labels = load_integers<int>(path, "integer label");
  for (std::size_t i = 0; i < labels.size(); ++i)
    if (labels[i] < 0) throw DataError(kModule, path.string() + ": negative label at entry " + std::to_string(i));
  return labels;
}

std::vector<NodeId> load_index_list(const std::filesystem::path& path) {
  auto wide = load_integers<std::uint64_t>(path, "node index");
  std::vector<NodeId> out;
  out.reserve(wide.size());
  for (auto v : wide) {
    if (v > std::numeric_limits<NodeId>::max()) throw RangeError(kModule, path.string() + ": node index too large");
    out.push_back(static_cast<NodeId>(v));
  }
  return out;
}

void write_index_list(std::span<const NodeId> ids, const std::filesystem::path& path) {
  auto out = open_output(path);
  for (auto v : ids) out << v << '\n';
}

void write_labels(std::span<const int> labels, const std::filesystem::path& path) {
  auto out = open_output(path);
  for (auto v : labels) out << v << '\n';
}

void validate_split(LabeledSplit& split, std::size_t num_nodes) {
  if (split.labels.size() != num_nodes)
    throw ShapeError(kModule, "label count " + std::to_string(split.labels.size()) + " does not match node count " +
                                  std::to_string(num_nodes));
  int max_label = -1;
  for (int l : split.labels) {
    if (l < 0) throw DataError(kModule, "negative label");
    max_label = std::max(max_label, l);
  }
  if (split.num_classes == 0) split.num_classes = max_label + 1;
  if (max_label >= split.num_classes)
    throw DataError(kModule, "label " + std::to_string(max_label) + " outside [0, " + std::to_string(split.num_classes) + ")");

  std::vector<std::uint8_t> owner(num_nodes, 0);
  const std::pair<const char*, const std::vector<NodeId>*> sets[] = {
      {"train", &split.train}, {"val", &split.val}, {"test", &split.test}};
  std::uint8_t tag = 0;
  for (auto [name, ids] : sets) {
    ++tag;
    for (NodeId v : *ids) {
      if (v >= num_nodes)
        throw SplitError(kModule, std::string(name) + " index " + std::to_string(v) + " outside [0, " +
                                      std::to_string(num_nodes) + ")");
      if (owner[v] == tag) throw SplitError(kModule, std::string(name) + " lists node " + std::to_string(v) + " twice");
      if (owner[v] != 0)
        throw SplitError(kModule, "node " + std::to_string(v) + " appears in both " + sets[owner[v] - 1].first + " and " + name);
      owner[v] = tag;
    }
  }
}

LabeledSplit load_labels_and_split(const std::filesystem::path& labels, const std::filesystem::path& train,
                                   const std::filesystem::path& val, const std::filesystem::path& test,
                                   std::size_t num_nodes) {
  LabeledSplit split;
  split.labels = load_labels(labels);
  split.train = load_index_list(train);
  split.val = load_index_list(val);
  split.test = load_index_list(test);
  validate_split(split, num_nodes);
  return split;
}

// ---------------------------------------------------------------------------
// Normalization

Graph add_self_loops(const Graph& g) {
  if (g.has_self_loops()) throw ContractViolation(kModule, "graph already has self-loops");
  const std::size_t n = g.num_nodes();
  std::vector<std::uint64_t> offsets(n + 1, 0);
  std::vector<NodeId> cols;
  cols.reserve(g.col_indices().size() + n);
  for (NodeId v = 0; v < n; ++v) {
    auto row = g.neighbors(v);
    auto split = std::lower_bound(row.begin(), row.end(), v);
    cols.insert(cols.end(), row.begin(), split);
    cols.push_back(v);
    cols.insert(cols.end(), split, row.end());
    offsets[v + 1] = cols.size();
  }
  return Graph::from_csr(std::move(offsets), std::move(cols), true);
}

NormalizedAdjacency normalize(std::shared_ptr<const Graph> g, double r) {
  if (!(r >= 0.0 && r <= 1.0)) throw ParameterError(kModule, "normalization exponent r must lie in [0, 1]");
  if (!g || !g->has_self_loops()) throw ContractViolation(kModule, "normalize expects a graph with self-loops");
  const std::size_t n = g->num_nodes();
  // Per-node scale factors computed once so (i, j) and (j, i) at r = 0.5 are
  // the same product of the same two doubles.
  std::vector<double> left(n), right(n);
  for (NodeId v = 0; v < n; ++v) {
    const double d = static_cast<double>(g->degree(v));
    left[v] = std::pow(d, r - 1.0);
    right[v] = std::pow(d, -r);
  }
  NormalizedAdjacency adj;
  adj.values.resize(g->col_indices().size());
  for (NodeId i = 0; i < n; ++i) {
    const auto base = g->row_offsets()[i];
    auto row = g->neighbors(i);
    for (std::size_t k = 0; k < row.size(); ++k) adj.values[base + k] = left[i] * right[row[k]];
  }
  adj.structure = std::move(g);
  adj.exponent_r = r;
  return adj;
}

NormalizedAdjacency normalized_adjacency(const Graph& g, double r) {
  return normalize(std::make_shared<const Graph>(add_self_loops(g)), r);
}

}  // namespace rmask
