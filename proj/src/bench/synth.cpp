#include "gbn/bench/synth.hpp"

#include "gbn/core/rng.hpp"
#include "gbn/graph/io.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <set>
#include <stdexcept>

namespace gbn {

namespace {

Matrix uniform_column(Index n, double lo, double hi, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> dist(lo, hi);
  Matrix m(n, 1);
  for (Index i = 0; i < n; ++i) m(i, 0) = dist(rng);
  return m;
}

}  // namespace

Graph path_graph(Index nodes) {
  if (nodes < 1) throw std::invalid_argument("path_graph: needs at least one node");
  std::vector<Edge> edges;
  for (Index i = 0; i + 1 < nodes; ++i) edges.emplace_back(i, i + 1);
  return build_graph(edges, nodes);
}

Graph cycle_graph(Index nodes) {
  if (nodes < 3) throw std::invalid_argument("cycle_graph: needs at least three nodes");
  std::vector<Edge> edges;
  for (Index i = 0; i < nodes; ++i) edges.emplace_back(i, (i + 1) % nodes);
  return build_graph(edges, nodes);
}

Graph complete_graph(Index nodes) {
  std::vector<Edge> edges;
  for (Index i = 0; i < nodes; ++i)
    for (Index j = i + 1; j < nodes; ++j) edges.emplace_back(i, j);
  return build_graph(edges, nodes);
}

Graph random_connected_graph(Index nodes, double p, std::mt19937_64& rng) {
  if (nodes < 1) throw std::invalid_argument("random_connected_graph: needs at least one node");
  std::set<Edge> edges;
  std::vector<Index> order(static_cast<std::size_t>(nodes));
  std::iota(order.begin(), order.end(), Index{0});
  std::shuffle(order.begin(), order.end(), rng);
  for (Index k = 1; k < nodes; ++k) {
    std::uniform_int_distribution<Index> pick(0, k - 1);
    Index u = order[static_cast<std::size_t>(k)];
    Index v = order[static_cast<std::size_t>(pick(rng))];
    edges.insert({std::min(u, v), std::max(u, v)});
  }
  std::bernoulli_distribution coin(p);
  for (Index i = 0; i < nodes; ++i)
    for (Index j = i + 1; j < nodes; ++j)
      if (coin(rng)) edges.insert({i, j});
  return build_graph(std::vector<Edge>(edges.begin(), edges.end()), nodes);
}

// ---- transfer --------------------------------------------------------------------

Topology parse_topology(std::string_view name) {
  if (name == "line") return Topology::Line;
  if (name == "ring") return Topology::Ring;
  if (name == "crossed-ring" || name == "crossed_ring") return Topology::CrossedRing;
  throw std::invalid_argument("unknown topology '" + std::string(name) + "' (expected line, ring, crossed-ring)");
}

std::string_view to_string(Topology t) {
  switch (t) {
    case Topology::Line: return "line";
    case Topology::Ring: return "ring";
    case Topology::CrossedRing: return "crossed-ring";
  }
  return "?";
}

TransferTopology transfer_topology(Topology topology, Index n) {
  TransferTopology tt;
  switch (topology) {
    case Topology::Line:
      if (n < 2) throw std::invalid_argument("line transfer needs distance >= 2");
      tt.graph = path_graph(n + 1);
      tt.source = 0;
      tt.target = n;
      return tt;
    case Topology::Ring:
      if (n < 4) throw std::invalid_argument("ring transfer needs n >= 4");
      tt.graph = cycle_graph(n);
      tt.source = 0;
      tt.target = n / 2;
      return tt;
    case Topology::CrossedRing: {
      if (n < 4) throw std::invalid_argument("crossed-ring transfer needs n >= 4");
      const Index target = n / 2;
      std::vector<Edge> edges;
      for (Index i = 0; i < n; ++i) edges.emplace_back(std::min(i, (i + 1) % n), std::max(i, (i + 1) % n));
      Graph g = build_graph(edges, n);
      for (Index i = 1; i < target; ++i) {
        const Index j = n - i;
        if (j <= i || j - i == 1) continue;
        const Edge chord{i, j};
        if (std::find(edges.begin(), edges.end(), chord) != edges.end()) continue;
        edges.push_back(chord);
        Graph candidate = build_graph(edges, n);
        if (candidate.bfs_distances(0)[static_cast<std::size_t>(target)] < target) {
          edges.pop_back();
          continue;
        }
        g = std::move(candidate);
      }
      tt.graph = std::move(g);
      tt.source = 0;
      tt.target = target;
      return tt;
    }
  }
  throw std::invalid_argument("unknown topology");
}

namespace {

Matrix transfer_features(const TransferTopology& tt, std::mt19937_64& rng) {
  Matrix x = uniform_column(tt.graph.node_count(), 0.0, 1.0, rng);
  x(tt.source, 0) = 1.0;
  x(tt.target, 0) = 0.0;
  return x;
}

void fill_labels(const TransferTopology& tt, Matrix& labels, std::vector<bool>& mask) {
  const Index n = tt.graph.node_count();
  labels = Matrix::Zero(n, 1);
  labels(tt.source, 0) = 0.0;
  labels(tt.target, 0) = 1.0;
  mask.assign(static_cast<std::size_t>(n), false);
  mask[static_cast<std::size_t>(tt.source)] = true;
  mask[static_cast<std::size_t>(tt.target)] = true;
}

TransferDataset make_split(const TransferTopology& tt, Topology topology, Index n, Index count,
                           const std::string& name, std::uint64_t seed) {
  if (count < 1) throw std::invalid_argument("transfer split '" + name + "' needs a positive count");
  TransferDataset ds;
  ds.split = name;
  ds.topology = topology;
  ds.distance = n;
  ds.graph = tt.graph;
  ds.source = tt.source;
  ds.target = tt.target;
  ds.seed = seed;
  fill_labels(tt, ds.labels, ds.mask);
  auto rng = rng_stream(seed, "data/" + name);
  ds.features.reserve(static_cast<std::size_t>(count));
  for (Index k = 0; k < count; ++k) ds.features.push_back(transfer_features(tt, rng));
  return ds;
}

}  // namespace

TransferTask gen_transfer(Topology topology, Index n, std::uint64_t seed) {
  TransferTopology tt = transfer_topology(topology, n);
  TransferTask task;
  task.topology = topology;
  task.distance = n;
  task.source = tt.source;
  task.target = tt.target;
  task.seed = seed;
  auto rng = rng_stream(seed, "data");
  task.features = transfer_features(tt, rng);
  fill_labels(tt, task.labels, task.mask);
  task.graph = std::move(tt.graph);
  return task;
}

double TransferDataset::constant_predictor_mse() const {
  double sum = 0.0, sq = 0.0;
  Index count = 0;
  for (Index i = 0; i < labels.rows(); ++i) {
    if (!mask[static_cast<std::size_t>(i)]) continue;
    sum += labels(i, 0);
    sq += labels(i, 0) * labels(i, 0);
    ++count;
  }
  const double mu = sum / static_cast<double>(count);
  return sq / static_cast<double>(count) - mu * mu;
}

TransferSplits gen_transfer_split(Topology topology, Index n, TransferCounts counts, std::uint64_t seed) {
  const TransferTopology tt = transfer_topology(topology, n);
  return {make_split(tt, topology, n, counts.train, "train", seed),
          make_split(tt, topology, n, counts.val, "val", seed),
          make_split(tt, topology, n, counts.test, "test", seed)};
}

void write_transfer_dataset(const std::filesystem::path& dir, const TransferSplits& splits) {
  std::filesystem::create_directories(dir);
  write_edge_list(dir / "edges.txt", splits.train.graph);
  nlohmann::json manifest = {{"topology", to_string(splits.train.topology)},
                             {"n", splits.train.distance},
                             {"seed", splits.train.seed},
                             {"source", splits.train.source},
                             {"target", splits.train.target},
                             {"nodes", splits.train.graph.node_count()}};
  for (const TransferDataset* ds : {&splits.train, &splits.val, &splits.test}) {
    const auto sub = dir / ds->split;
    std::filesystem::create_directories(sub);
    for (Index k = 0; k < ds->size(); ++k) {
      char name[32];
      std::snprintf(name, sizeof name, "%04lld.csv", static_cast<long long>(k));
      write_features(sub / name, ds->features[static_cast<std::size_t>(k)]);
    }
    manifest["split"][ds->split] = ds->size();
  }
  std::ofstream out(dir / "manifest.json");
  if (!out) throw std::runtime_error("cannot write " + (dir / "manifest.json").string());
  out << manifest.dump(2) << '\n';
}

// ---- bottleneck ------------------------------------------------------------------

Graph bottleneck_graph(Index c, Index l) {
  if (c < 3) throw std::invalid_argument("bottleneck: clique size must be >= 3");
  if (l < 1) throw std::invalid_argument("bottleneck: path length must be >= 1");
  const Index n = 2 * c + l;
  std::vector<Edge> edges;
  for (Index offset : {Index{0}, c + l})
    for (Index i = 0; i < c; ++i)
      for (Index j = i + 1; j < c; ++j) edges.emplace_back(offset + i, offset + j);
  for (Index k = c - 1; k < c + l; ++k) edges.emplace_back(k, k + 1);
  return build_graph(edges, n);
}

BottleneckCase gen_bottleneck(Index c, Index l, std::uint64_t seed) {
  BottleneckCase bc;
  bc.clique_size = c;
  bc.path_len = l;
  bc.graph = bottleneck_graph(c, l);
  const Index n = bc.graph.node_count();
  auto rng = rng_stream(seed, "data");
  std::uniform_real_distribution<double> pos(0.0, 1.0), neg(-1.0, 0.0);
  bc.features = Matrix::Zero(n, 1);
  bc.targets = Matrix::Zero(n, 1);
  bc.swap_mask.assign(static_cast<std::size_t>(n), false);
  for (Index i = 0; i < c; ++i) {
    bc.source_nodes.push_back(i);
    bc.target_nodes.push_back(c + l + i);
  }
  for (Index k = 0; k < l; ++k) bc.path_nodes.push_back(c + k);
  for (Index s : bc.source_nodes) bc.features(s, 0) = pos(rng);
  for (Index t : bc.target_nodes) bc.features(t, 0) = neg(rng);
  for (Index i = 0; i < c; ++i) {
    const Index s = bc.source_nodes[static_cast<std::size_t>(i)];
    const Index t = bc.target_nodes[static_cast<std::size_t>(i)];
    bc.targets(s, 0) = bc.features(t, 0);
    bc.targets(t, 0) = bc.features(s, 0);
    bc.swap_mask[static_cast<std::size_t>(s)] = true;
    bc.swap_mask[static_cast<std::size_t>(t)] = true;
  }
  return bc;
}

BottleneckSplits gen_bottleneck_split(Index c, Index l, TransferCounts counts, std::uint64_t seed) {
  auto fill = [&](Index count, const char* split) {
    auto rng = rng_stream(seed, std::string("data/") + split);
    std::vector<BottleneckCase> out;
    for (Index k = 0; k < count; ++k) out.push_back(gen_bottleneck(c, l, rng()));
    return out;
  };
  return {fill(counts.train, "train"), fill(counts.val, "val"), fill(counts.test, "test")};
}

// ---- SBM / depth suite -------------------------------------------------------------

SbmCase gen_sbm(const SbmOptions& opts, std::uint64_t seed) {
  if (opts.block_size < 2 || opts.feature_dim < 1) throw std::invalid_argument("gen_sbm: bad sizes");
  auto graph_rng = rng_stream(seed, "data/graph");
  auto feat_rng = rng_stream(seed, "data/features");
  const Index n = 2 * opts.block_size;
  SbmCase sc;
  sc.labels.resize(static_cast<std::size_t>(n));
  for (Index i = 0; i < n; ++i) sc.labels[static_cast<std::size_t>(i)] = i < opts.block_size ? 0 : 1;
  std::bernoulli_distribution in(opts.p_in), out(opts.p_out);
  for (int attempt = 0;; ++attempt) {
    if (attempt == 1000) throw std::runtime_error("gen_sbm: could not avoid isolated nodes");
    std::vector<Edge> edges;
    for (Index i = 0; i < n; ++i)
      for (Index j = i + 1; j < n; ++j) {
        const bool same = sc.labels[static_cast<std::size_t>(i)] == sc.labels[static_cast<std::size_t>(j)];
        if (same ? in(graph_rng) : out(graph_rng)) edges.emplace_back(i, j);
      }
    sc.graph = build_graph(edges, n);
    if (!sc.graph.has_isolated_nodes()) break;
  }
  std::normal_distribution<double> noise(0.0, 1.0);
  sc.features.resize(n, opts.feature_dim);
  for (Index i = 0; i < n; ++i) {
    const double mu = sc.labels[static_cast<std::size_t>(i)] == 0 ? opts.mean_shift : -opts.mean_shift;
    for (Index f = 0; f < opts.feature_dim; ++f) sc.features(i, f) = mu + noise(feat_rng);
  }
  return sc;
}

NodeSplit random_split(Index nodes, double train_fraction, double val_fraction, std::mt19937_64& rng) {
  if (!(train_fraction > 0.0) || !(val_fraction >= 0.0) || train_fraction + val_fraction >= 1.0)
    throw std::invalid_argument("random_split: fractions must be positive and sum below 1");
  std::vector<Index> order(static_cast<std::size_t>(nodes));
  std::iota(order.begin(), order.end(), Index{0});
  std::shuffle(order.begin(), order.end(), rng);
  const auto n_train = static_cast<std::size_t>(train_fraction * static_cast<double>(nodes));
  const auto n_val = static_cast<std::size_t>(val_fraction * static_cast<double>(nodes));
  NodeSplit s;
  s.train.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_train));
  s.val.assign(order.begin() + static_cast<std::ptrdiff_t>(n_train),
               order.begin() + static_cast<std::ptrdiff_t>(n_train + n_val));
  s.test.assign(order.begin() + static_cast<std::ptrdiff_t>(n_train + n_val), order.end());
  return s;
}

std::vector<Index> default_depths() {
  std::vector<Index> d;
  for (Index k = 1; k <= 256; k *= 2) d.push_back(k);
  return d;
}

DepthPlan gen_depth_suite(const Graph& base, const std::vector<Index>& depths) {
  if (depths.empty()) throw std::invalid_argument("depth suite: no depths");
  if (!std::is_sorted(depths.begin(), depths.end()) || depths.front() < 1)
    throw std::invalid_argument("depth suite: depths must be positive and ascending");
  DepthPlan plan;
  plan.base = &base;
  for (Index k : depths) plan.runs.push_back({k});
  return plan;
}

}  // namespace gbn
