#include "gbn/graph/graph.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <stdexcept>
#include <string>

namespace gbn {

std::span<const Index> Graph::neighbors(Index i) const {
  const auto b = offsets_[static_cast<std::size_t>(i)];
  const auto e = offsets_[static_cast<std::size_t>(i) + 1];
  return {targets_.data() + b, static_cast<std::size_t>(e - b)};
}

bool Graph::has_isolated_nodes() const {
  return std::any_of(degrees_.begin(), degrees_.end(), [](Index d) { return d == 0; });
}

std::vector<Index> Graph::bfs_distances(Index source) const {
  if (source < 0 || source >= n_) throw std::out_of_range("bfs: source out of range");
  std::vector<Index> dist(static_cast<std::size_t>(n_), -1);
  std::deque<Index> queue{source};
  dist[static_cast<std::size_t>(source)] = 0;
  while (!queue.empty()) {
    const Index u = queue.front();
    queue.pop_front();
    for (Index v : neighbors(u)) {
      auto& dv = dist[static_cast<std::size_t>(v)];
      if (dv < 0) {
        dv = dist[static_cast<std::size_t>(u)] + 1;
        queue.push_back(v);
      }
    }
  }
  return dist;
}

Graph build_graph(std::span<const Edge> edge_list, Index n) {
  if (n < 0) throw std::invalid_argument("build_graph: negative node count");
  std::vector<Edge> edges;
  edges.reserve(edge_list.size());
  for (std::size_t k = 0; k < edge_list.size(); ++k) {
    auto [u, v] = edge_list[k];
    if (u < 0 || u >= n || v < 0 || v >= n) {
      throw std::invalid_argument("build_graph: edge " + std::to_string(k) + " (" + std::to_string(u) + "," +
                                  std::to_string(v) + ") has an index outside [0," + std::to_string(n) + ")");
    }
    if (u == v) throw std::invalid_argument("build_graph: self-loop at node " + std::to_string(u));
    if (u > v) std::swap(u, v);
    edges.emplace_back(u, v);
  }
  std::sort(edges.begin(), edges.end());
  if (auto dup = std::adjacent_find(edges.begin(), edges.end()); dup != edges.end()) {
    throw std::invalid_argument("build_graph: duplicate edge (" + std::to_string(dup->first) + "," +
                                std::to_string(dup->second) + ")");
  }

  Graph g;
  g.n_ = n;
  g.edges_ = std::move(edges);
  g.degrees_.assign(static_cast<std::size_t>(n), 0);
  for (const auto& [u, v] : g.edges_) {
    ++g.degrees_[static_cast<std::size_t>(u)];
    ++g.degrees_[static_cast<std::size_t>(v)];
  }
  g.offsets_.assign(static_cast<std::size_t>(n) + 1, 0);
  for (Index i = 0; i < n; ++i) g.offsets_[static_cast<std::size_t>(i) + 1] = g.offsets_[static_cast<std::size_t>(i)] + g.degrees_[static_cast<std::size_t>(i)];
  g.targets_.assign(static_cast<std::size_t>(g.offsets_.back()), 0);
  std::vector<Index> cursor(g.offsets_.begin(), g.offsets_.end() - 1);
  for (const auto& [u, v] : g.edges_) {
    g.targets_[static_cast<std::size_t>(cursor[static_cast<std::size_t>(u)]++)] = v;
    g.targets_[static_cast<std::size_t>(cursor[static_cast<std::size_t>(v)]++)] = u;
  }
  for (Index i = 0; i < n; ++i) {
    std::sort(g.targets_.begin() + g.offsets_[static_cast<std::size_t>(i)],
              g.targets_.begin() + g.offsets_[static_cast<std::size_t>(i) + 1]);
  }

  std::vector<Triplet> trips;
  trips.reserve(2 * g.edges_.size());
  for (const auto& [u, v] : g.edges_) {
    trips.emplace_back(u, v, 1.0);
    trips.emplace_back(v, u, 1.0);
  }
  g.adjacency_.resize(n, n);
  g.adjacency_.setFromTriplets(trips.begin(), trips.end());
  g.adjacency_.makeCompressed();
  return g;
}

Graph replicate(const Graph& g, Index copies) {
  std::vector<Edge> edges;
  edges.reserve(g.edges().size() * static_cast<std::size_t>(copies));
  const Index n = g.node_count();
  for (Index c = 0; c < copies; ++c)
    for (const auto& [u, v] : g.edges()) edges.emplace_back(u + c * n, v + c * n);
  return build_graph(edges, n * copies);
}

NormalizedLaplacian normalized_laplacian(const Graph& g) {
  const Index n = g.node_count();
  std::vector<Triplet> trips;
  trips.reserve(static_cast<std::size_t>(n) + 2 * g.edges().size());
  for (Index i = 0; i < n; ++i)
    if (g.degree(i) > 0) trips.emplace_back(i, i, 1.0);
  for (const auto& [u, v] : g.edges()) {
    const double w = -1.0 / std::sqrt(static_cast<double>(g.degree(u)) * static_cast<double>(g.degree(v)));
    trips.emplace_back(u, v, w);
    trips.emplace_back(v, u, w);
  }
  NormalizedLaplacian L;
  L.matrix.resize(n, n);
  L.matrix.setFromTriplets(trips.begin(), trips.end());
  L.matrix.makeCompressed();
  return L;
}

Vector sqrt_degree_vector(const Graph& g) {
  Vector v(g.node_count());
  for (Index i = 0; i < g.node_count(); ++i) v(i) = std::sqrt(static_cast<double>(g.degree(i)));
  return v;
}

SparsePropagator GraphOperators::gcn_shift(double dt) const {
  SparseMatrix identity(node_count, node_count);
  identity.setIdentity();
  SparseMatrix shift = identity - dt * laplacian.matrix();
  shift.prune(0.0);
  return make_propagator(std::move(shift), PropagatorTag::GcnShift, true);
}

GraphOperators make_operators(const Graph& g) {
  GraphOperators ops;
  ops.node_count = g.node_count();
  ops.adjacency = make_propagator(g.adjacency(), PropagatorTag::Adjacency, true);
  ops.laplacian = make_propagator(normalized_laplacian(g).matrix, PropagatorTag::Generic, true);
  ops.degrees.resize(g.node_count(), 1);
  for (Index i = 0; i < g.node_count(); ++i) ops.degrees(i, 0) = static_cast<double>(g.degree(i));
  return ops;
}

}  // namespace gbn
