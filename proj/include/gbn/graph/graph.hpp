#pragma once

#include "gbn/core/types.hpp"
#include "gbn/diffarray/sparse_propagator.hpp"

#include <span>
#include <utility>
#include <vector>

namespace gbn {

using Edge = std::pair<Index, Index>;

/// Simple undirected, unweighted graph. Edges are stored canonically
/// (u < v, lexicographically sorted); adjacency is a symmetric 0/1 matrix.
class Graph {
 public:
  Graph() = default;

  Index node_count() const { return n_; }
  Index edge_count() const { return static_cast<Index>(edges_.size()); }
  const std::vector<Edge>& edges() const { return edges_; }
  const std::vector<Index>& degrees() const { return degrees_; }
  Index degree(Index i) const { return degrees_[static_cast<std::size_t>(i)]; }
  std::span<const Index> neighbors(Index i) const;
  const SparseMatrix& adjacency() const { return adjacency_; }
  bool has_isolated_nodes() const;

  /// Shortest-path hop distances from `source` (-1 for unreachable nodes).
  std::vector<Index> bfs_distances(Index source) const;

 private:
  friend Graph build_graph(std::span<const Edge> edge_list, Index n);

  Index n_ = 0;
  std::vector<Edge> edges_;
  std::vector<Index> degrees_;
  std::vector<Index> offsets_;
  std::vector<Index> targets_;
  SparseMatrix adjacency_;
};

/// Validates and canonicalizes an edge list. Throws std::invalid_argument on
/// out-of-range indices, self-loops, or duplicate edges (in either orientation).
Graph build_graph(std::span<const Edge> edge_list, Index n);

/// Disjoint union of `copies` replicas of `g` (block-diagonal adjacency).
Graph replicate(const Graph& g, Index copies);

/// L = I - D^{-1/2} A D^{-1/2}; rows/columns of isolated nodes are zero.
struct NormalizedLaplacian {
  SparseMatrix matrix;

  Matrix dense() const { return Matrix(matrix); }
};

NormalizedLaplacian normalized_laplacian(const Graph& g);

/// D^{1/2} 1, the null vector of the normalized Laplacian.
Vector sqrt_degree_vector(const Graph& g);

/// Sparse operators derived once per graph and shared by every forward pass.
struct GraphOperators {
  SparsePropagator adjacency;  // binary A
  SparsePropagator laplacian;  // normalized L
  Matrix degrees;              // n x 1
  Index node_count = 0;

  /// I - dt * L.
  SparsePropagator gcn_shift(double dt) const;
};

GraphOperators make_operators(const Graph& g);

}  // namespace gbn
