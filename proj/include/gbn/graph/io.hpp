#pragma once

#include "gbn/graph/graph.hpp"

#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace gbn {

/// Malformed input file; the message carries path and 1-based line number.
class ParseError : public std::runtime_error {
 public:
  ParseError(const std::filesystem::path& path, std::size_t line, const std::string& what);
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

enum class GraphFormat { EdgeList, EdgeListWithFeatures };

struct LoadedGraph {
  Graph graph;
  Matrix features;                        // n x d, empty for plain edge lists
  std::optional<std::vector<int>> labels;
  int num_classes = 0;
};

struct FeatureTable {
  Matrix features;
  std::optional<std::vector<int>> labels;
};

/// "u v" per line, 0-based, '#' comments. Node count is max index + 1 unless
/// `n` is given.
Graph load_edge_list(const std::filesystem::path& path, std::optional<Index> n = std::nullopt);

/// CSV with header "id,f0,...,f{d-1}[,label]"; rows may come in any order but
/// every id in [0, rows) must appear exactly once.
FeatureTable load_features(const std::filesystem::path& path);

struct LoadOptions {
  bool allow_isolated = false;
  std::optional<int> declared_classes;
};

/// `features_path` is required for EdgeListWithFeatures. The node count is
/// taken from the feature table in that case.
LoadedGraph load_graph(const std::filesystem::path& edges_path, GraphFormat format,
                       const std::filesystem::path& features_path = {}, const LoadOptions& opts = {});

void write_edge_list(const std::filesystem::path& path, const Graph& g);
void write_features(const std::filesystem::path& path, const Matrix& features,
                    const std::vector<int>* labels = nullptr);

}  // namespace gbn
