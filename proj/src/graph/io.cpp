#include "gbn/graph/io.hpp"

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace gbn {

namespace {

std::ifstream open_input(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open '" + path.string() + "'");
  return in;
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream ss(line);
  while (std::getline(ss, field, ',')) {
    // trim
    const auto b = field.find_first_not_of(" \t\r");
    const auto e = field.find_last_not_of(" \t\r");
    out.push_back(b == std::string::npos ? std::string{} : field.substr(b, e - b + 1));
  }
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

template <class T>
bool parse_number(const std::string& s, T& out) {
  const char* b = s.data();
  const char* e = s.data() + s.size();
  auto [p, ec] = std::from_chars(b, e, out);
  return ec == std::errc{} && p == e;
}

std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace

ParseError::ParseError(const std::filesystem::path& path, std::size_t line, const std::string& what)
    : std::runtime_error(path.string() + ":" + std::to_string(line) + ": " + what), line_(line) {}

Graph load_edge_list(const std::filesystem::path& path, std::optional<Index> n) {
  auto in = open_input(path);
  std::vector<Edge> edges;
  std::string line;
  std::size_t lineno = 0;
  Index max_index = -1;
  while (std::getline(in, line)) {
    ++lineno;
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos || line[first] == '#') continue;
    std::istringstream ss(line);
    std::string a, b, extra;
    if (!(ss >> a >> b)) throw ParseError(path, lineno, "expected two node indices");
    if (ss >> extra) throw ParseError(path, lineno, "unexpected trailing token '" + extra + "'");
    long long u = 0, v = 0;
    if (!parse_number(a, u) || !parse_number(b, v)) throw ParseError(path, lineno, "non-integer node index");
    if (u < 0 || v < 0) throw ParseError(path, lineno, "negative node index");
    if (n && (u >= *n || v >= *n)) {
      throw ParseError(path, lineno, "node index out of bounds for " + std::to_string(*n) + " nodes");
    }
    max_index = std::max<Index>(max_index, static_cast<Index>(std::max(u, v)));
    edges.emplace_back(static_cast<Index>(u), static_cast<Index>(v));
  }
  const Index count = n.value_or(max_index + 1);
  try {
    return build_graph(edges, count);
  } catch (const std::invalid_argument& e) {
    throw ParseError(path, lineno, e.what());
  }
}

FeatureTable load_features(const std::filesystem::path& path) {
  auto in = open_input(path);
  std::string line;
  if (!std::getline(in, line)) throw ParseError(path, 1, "missing header");
  const auto header = split_csv(line);
  if (header.empty() || header[0] != "id") throw ParseError(path, 1, "header must start with 'id'");
  const bool has_label = header.back() == "label";
  const std::size_t d = header.size() - 1 - (has_label ? 1 : 0);
  for (std::size_t k = 0; k < d; ++k) {
    if (header[k + 1] != "f" + std::to_string(k)) {
      throw ParseError(path, 1, "expected column 'f" + std::to_string(k) + "', got '" + header[k + 1] + "'");
    }
  }

  struct Row {
    long long id;
    std::vector<double> values;
    int label;
  };
  std::vector<Row> rows;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const auto fields = split_csv(line);
    if (fields.size() != header.size()) {
      throw ParseError(path, lineno, "expected " + std::to_string(header.size()) + " fields, got " +
                                         std::to_string(fields.size()));
    }
    Row r{};
    if (!parse_number(fields[0], r.id) || r.id < 0) throw ParseError(path, lineno, "invalid id '" + fields[0] + "'");
    r.values.resize(d);
    for (std::size_t k = 0; k < d; ++k) {
      if (!parse_number(fields[k + 1], r.values[k])) {
        throw ParseError(path, lineno, "invalid number '" + fields[k + 1] + "'");
      }
    }
    if (has_label && (!parse_number(fields.back(), r.label) || r.label < 0)) {
      throw ParseError(path, lineno, "invalid label '" + fields.back() + "'");
    }
    rows.push_back(std::move(r));
  }

  const auto n = static_cast<long long>(rows.size());
  std::vector<int> seen(static_cast<std::size_t>(n), 0);
  FeatureTable table;
  table.features.resize(n, static_cast<Index>(d));
  std::vector<int> labels(static_cast<std::size_t>(n), 0);
  for (const auto& r : rows) {
    if (r.id >= n) throw ParseError(path, 0, "id " + std::to_string(r.id) + " out of range for " + std::to_string(n) + " rows");
    if (seen[static_cast<std::size_t>(r.id)]++) throw ParseError(path, 0, "duplicate id " + std::to_string(r.id));
    for (std::size_t k = 0; k < d; ++k) table.features(r.id, static_cast<Index>(k)) = r.values[k];
    labels[static_cast<std::size_t>(r.id)] = r.label;
  }
  if (has_label) table.labels = std::move(labels);
  return table;
}

LoadedGraph load_graph(const std::filesystem::path& edges_path, GraphFormat format,
                       const std::filesystem::path& features_path, const LoadOptions& opts) {
  LoadedGraph out;
  if (format == GraphFormat::EdgeList) {
    out.graph = load_edge_list(edges_path);
  } else {
    if (features_path.empty()) throw std::invalid_argument("load_graph: feature file required");
    auto table = load_features(features_path);
    out.graph = load_edge_list(edges_path, table.features.rows());
    out.features = std::move(table.features);
    out.labels = std::move(table.labels);
  }
  if (!opts.allow_isolated && out.graph.has_isolated_nodes()) {
    throw std::invalid_argument("load_graph: '" + edges_path.string() + "' contains isolated nodes");
  }
  if (out.labels) {
    const int max_label = out.labels->empty() ? -1 : *std::max_element(out.labels->begin(), out.labels->end());
    out.num_classes = opts.declared_classes.value_or(max_label + 1);
    if (max_label >= out.num_classes) {
      throw std::invalid_argument("load_graph: label " + std::to_string(max_label) + " exceeds declared class count " +
                                  std::to_string(out.num_classes));
    }
  }
  return out;
}

void write_edge_list(const std::filesystem::path& path, const Graph& g) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write '" + path.string() + "'");
  out << "# " << g.node_count() << " nodes, " << g.edge_count() << " edges\n";
  for (const auto& [u, v] : g.edges()) out << u << ' ' << v << '\n';
}

void write_features(const std::filesystem::path& path, const Matrix& features, const std::vector<int>* labels) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write '" + path.string() + "'");
  out << "id";
  for (Index k = 0; k < features.cols(); ++k) out << ",f" << k;
  if (labels) out << ",label";
  out << '\n';
  for (Index i = 0; i < features.rows(); ++i) {
    out << i;
    for (Index k = 0; k < features.cols(); ++k) out << ',' << format_double(features(i, k));
    if (labels) out << ',' << (*labels)[static_cast<std::size_t>(i)];
    out << '\n';
  }
}

}  // namespace gbn
