#pragma once

#include "gbn/graph/graph.hpp"

#include <json.hpp>

#include <cstdint>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

namespace gbn {

// ---- generic graphs --------------------------------------------------------------

Graph path_graph(Index nodes);
Graph cycle_graph(Index nodes);
Graph complete_graph(Index nodes);
/// Random spanning tree plus each remaining pair with probability `p`.
Graph random_connected_graph(Index nodes, double p, std::mt19937_64& rng);

// ---- graph transfer --------------------------------------------------------------

enum class Topology { Line, Ring, CrossedRing };

Topology parse_topology(std::string_view name);
std::string_view to_string(Topology t);

struct TransferTopology {
  Graph graph;
  Index source = 0;
  Index target = 0;
};

/// line: path with n+1 nodes, endpoints at distance n.
/// ring: n-cycle, target at distance floor(n/2).
/// crossed-ring: n-cycle plus mirror chords i -- n-i that keep the distance.
TransferTopology transfer_topology(Topology topology, Index n);

/// Source and target swap values: the source row's label is the target's
/// input (0) and the target row's label is the source's input (1).
struct TransferTask {
  Topology topology = Topology::Line;
  Index distance = 0;
  Graph graph;
  Matrix features;  // nodes x 1
  Matrix labels;    // nodes x 1, zero outside the mask
  Index source = 0;
  Index target = 0;
  std::vector<bool> mask;
  std::uint64_t seed = 0;
};

TransferTask gen_transfer(Topology topology, Index n, std::uint64_t seed);

/// One split: a shared topology with independently drawn features.
struct TransferDataset {
  std::string split;
  Topology topology = Topology::Line;
  Index distance = 0;
  Graph graph;
  Index source = 0;
  Index target = 0;
  Matrix labels;
  std::vector<bool> mask;
  std::vector<Matrix> features;
  std::uint64_t seed = 0;

  Index size() const { return static_cast<Index>(features.size()); }
  /// Mean squared error of the best constant predictor over masked rows.
  double constant_predictor_mse() const;
};

struct TransferCounts {
  Index train = 1000;
  Index val = 100;
  Index test = 100;
};

struct TransferSplits {
  TransferDataset train;
  TransferDataset val;
  TransferDataset test;
};

TransferSplits gen_transfer_split(Topology topology, Index n, TransferCounts counts, std::uint64_t seed);

/// Writes edges.txt, <split>/NNNN.csv and manifest.json under `dir`.
void write_transfer_dataset(const std::filesystem::path& dir, const TransferSplits& splits);

// ---- bottleneck case -------------------------------------------------------------

/// Two K_c cliques joined by a path of `path_len` intermediate nodes.
/// Nodes: source clique [0, c), path [c, c + l), target clique [c + l, 2c + l).
struct BottleneckCase {
  Index clique_size = 0;
  Index path_len = 0;
  Graph graph;
  Matrix features;  // nodes x 1
  Matrix targets;   // swapped values, path rows 0
  std::vector<Index> source_nodes;
  std::vector<Index> path_nodes;
  std::vector<Index> target_nodes;
  std::vector<bool> swap_mask;  // clique rows
};

Graph bottleneck_graph(Index clique_size, Index path_len);
BottleneckCase gen_bottleneck(Index clique_size, Index path_len, std::uint64_t seed);

struct BottleneckSplits {
  std::vector<BottleneckCase> train;
  std::vector<BottleneckCase> val;
  std::vector<BottleneckCase> test;
};

/// Independent instances per split; instance seeds come from the
/// "data/<split>" streams of `seed`.
BottleneckSplits gen_bottleneck_split(Index clique_size, Index path_len, TransferCounts counts, std::uint64_t seed);

// ---- oversmoothing suite ---------------------------------------------------------

/// Two-block SBM with Gaussian features whose mean is +mean_shift / -mean_shift
/// in every coordinate by class. Resampled until no node is isolated.
struct SbmCase {
  Graph graph;
  Matrix features;
  std::vector<int> labels;
};

struct SbmOptions {
  Index block_size = 100;
  double p_in = 0.1;
  double p_out = 0.01;
  Index feature_dim = 16;
  double mean_shift = 0.5;
};

SbmCase gen_sbm(const SbmOptions& opts, std::uint64_t seed);

struct NodeSplit {
  std::vector<Index> train;
  std::vector<Index> val;
  std::vector<Index> test;
};

/// Random permutation cut at the given fractions (test takes the remainder).
NodeSplit random_split(Index nodes, double train_fraction, double val_fraction, std::mt19937_64& rng);

struct DepthRun {
  Index layers = 0;
};

struct DepthPlan {
  const Graph* base = nullptr;
  std::vector<DepthRun> runs;
  Index size() const { return static_cast<Index>(runs.size()); }
};

/// Powers of two 1, 2, ..., 256.
std::vector<Index> default_depths();
DepthPlan gen_depth_suite(const Graph& base, const std::vector<Index>& depths);

}  // namespace gbn
