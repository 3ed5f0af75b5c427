#include "gbn/bench/synth.hpp"

#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

using namespace gbn;

namespace {

std::string slurp_tree(const std::filesystem::path& dir) {
  std::ostringstream all;
  std::vector<std::filesystem::path> files;
  for (const auto& e : std::filesystem::recursive_directory_iterator(dir))
    if (e.is_regular_file()) files.push_back(e.path());
  std::sort(files.begin(), files.end());
  for (const auto& f : files) {
    std::ifstream in(f, std::ios::binary);
    all << std::filesystem::relative(f, dir).string() << '\n' << in.rdbuf();
  }
  return all.str();
}

}  // namespace

TEST_CASE("transfer topologies") {
  SUBCASE("line") {
    const TransferTopology t = transfer_topology(Topology::Line, 3);
    CHECK(t.graph.node_count() == 4);
    CHECK(t.source == 0);
    CHECK(t.target == 3);
    CHECK(t.graph.bfs_distances(t.source)[3] == 3);
  }
  SUBCASE("ring") {
    const TransferTopology t = transfer_topology(Topology::Ring, 5);
    CHECK(t.graph.node_count() == 5);
    CHECK(t.graph.edge_count() == 5);
    CHECK(t.graph.bfs_distances(t.source)[static_cast<std::size_t>(t.target)] == 2);
  }
  SUBCASE("crossed ring keeps the distance") {
    for (Index n = 4; n < 204; ++n) {
      CAPTURE(n);
      const TransferTopology t = transfer_topology(Topology::CrossedRing, n);
      CHECK(t.graph.bfs_distances(t.source)[static_cast<std::size_t>(t.target)] == n / 2);
      if (n >= 8) CHECK(t.graph.edge_count() > n);
    }
  }
  CHECK_THROWS(transfer_topology(Topology::Line, 1));
  CHECK_THROWS(transfer_topology(Topology::Ring, 3));
  CHECK(parse_topology("crossed-ring") == Topology::CrossedRing);
  CHECK_THROWS(parse_topology("star"));
}

TEST_CASE("transfer task features and mask") {
  const TransferTask t = gen_transfer(Topology::Ring, 10, 4);
  CHECK(t.features(t.source, 0) == 1.0);
  CHECK(t.features(t.target, 0) == 0.0);
  for (Index i = 0; i < t.features.rows(); ++i) {
    CHECK(t.features(i, 0) >= 0.0);
    if (i != t.source) CHECK(t.features(i, 0) < 1.0);
  }
  Index masked = 0;
  for (bool m : t.mask) masked += m ? 1 : 0;
  CHECK(masked == 2);
  CHECK(t.mask[static_cast<std::size_t>(t.source)]);
  CHECK(t.mask[static_cast<std::size_t>(t.target)]);
  CHECK(t.labels(t.source, 0) == 0.0);
  CHECK(t.labels(t.target, 0) == 1.0);
}

TEST_CASE("transfer splits") {
  const TransferSplits s = gen_transfer_split(Topology::CrossedRing, 10, {20, 5, 5}, 9);
  CHECK(s.train.size() == 20);
  CHECK(s.val.size() == 5);
  CHECK(s.test.size() == 5);
  CHECK(s.train.graph.edges() == s.test.graph.edges());
  CHECK_FALSE(s.train.features[0].isApprox(s.train.features[1]));
  CHECK_FALSE(s.train.features[0].isApprox(s.val.features[0]));
  CHECK(s.test.constant_predictor_mse() == doctest::Approx(0.25));

  const TransferCounts defaults;
  CHECK(defaults.train == 1000);
  CHECK(defaults.val == 100);
  CHECK(defaults.test == 100);
}

TEST_CASE("transfer datasets are deterministic on disk") {
  const auto base = std::filesystem::temp_directory_path() / "gbn_bench_det";
  std::filesystem::remove_all(base);
  write_transfer_dataset(base / "a", gen_transfer_split(Topology::Ring, 6, {3, 2, 2}, 5));
  write_transfer_dataset(base / "b", gen_transfer_split(Topology::Ring, 6, {3, 2, 2}, 5));
  write_transfer_dataset(base / "c", gen_transfer_split(Topology::Ring, 6, {3, 2, 2}, 6));
  CHECK(std::filesystem::exists(base / "a" / "manifest.json"));
  CHECK(std::filesystem::exists(base / "a" / "edges.txt"));
  CHECK(slurp_tree(base / "a") == slurp_tree(base / "b"));
  CHECK(slurp_tree(base / "a") != slurp_tree(base / "c"));
  std::filesystem::remove_all(base);
}

TEST_CASE("bottleneck case") {
  const BottleneckCase b = gen_bottleneck(5, 3, 2);
  CHECK(b.graph.node_count() == 13);
  CHECK(b.graph.edge_count() == 2 * 10 + 4);
  for (Index v : b.source_nodes) {
    CHECK(b.features(v, 0) >= 0.0);
    CHECK(b.features(v, 0) <= 1.0);
  }
  for (Index v : b.target_nodes) {
    CHECK(b.features(v, 0) >= -1.0);
    CHECK(b.features(v, 0) <= 0.0);
  }
  for (Index v : b.path_nodes) {
    CHECK(b.features(v, 0) == 0.0);
    CHECK(b.targets(v, 0) == 0.0);
  }
  for (std::size_t k = 0; k < b.source_nodes.size(); ++k) {
    CHECK(b.targets(b.source_nodes[k], 0) == b.features(b.target_nodes[k], 0));
    CHECK(b.targets(b.target_nodes[k], 0) == b.features(b.source_nodes[k], 0));
  }
  // connected, and removing any path edge disconnects it
  for (Index d : b.graph.bfs_distances(0)) CHECK(d >= 0);
  CHECK(b.graph.bfs_distances(b.source_nodes[0])[static_cast<std::size_t>(b.target_nodes[0])] >= 4);
  CHECK_THROWS(gen_bottleneck(2, 3, 1));
  CHECK_THROWS(gen_bottleneck(5, 0, 1));
}

TEST_CASE("SBM stand-in") {
  const SbmCase s = gen_sbm({}, 3);
  CHECK(s.graph.node_count() == 200);
  CHECK_FALSE(s.graph.has_isolated_nodes());
  CHECK(s.features.rows() == 200);
  CHECK(s.features.cols() == 16);
  CHECK(std::count(s.labels.begin(), s.labels.end(), 0) == 100);
  const SbmCase again = gen_sbm({}, 3);
  CHECK(again.graph.edges() == s.graph.edges());
  CHECK((again.features.array() == s.features.array()).all());
}

TEST_CASE("node splits and the depth plan") {
  std::mt19937_64 rng(1);
  const NodeSplit sp = random_split(100, 0.6, 0.2, rng);
  CHECK(sp.train.size() == 60);
  CHECK(sp.val.size() == 20);
  CHECK(sp.test.size() == 20);
  std::set<Index> all(sp.train.begin(), sp.train.end());
  all.insert(sp.val.begin(), sp.val.end());
  all.insert(sp.test.begin(), sp.test.end());
  CHECK(all.size() == 100);

  const std::vector<Index> depths = default_depths();
  CHECK(depths.front() == 1);
  CHECK(depths.back() == 256);
  const Graph g = path_graph(4);
  const DepthPlan plan = gen_depth_suite(g, depths);
  CHECK(plan.size() == static_cast<Index>(depths.size()));
  CHECK(plan.base == &g);
}

TEST_CASE("bottleneck splits") {
  const BottleneckSplits s = gen_bottleneck_split(5, 3, {4, 2, 3}, 1);
  CHECK(s.train.size() == 4);
  CHECK(s.val.size() == 2);
  CHECK(s.test.size() == 3);
  CHECK_FALSE(s.train[0].features.isApprox(s.train[1].features));
  CHECK_FALSE(s.train[0].features.isApprox(s.test[0].features));
  const BottleneckSplits again = gen_bottleneck_split(5, 3, {4, 2, 3}, 1);
  CHECK((again.test[2].features.array() == s.test[2].features.array()).all());
}
