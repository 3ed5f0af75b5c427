#include "gbn/bench/synth.hpp"
#include "gbn/graph/graph.hpp"
#include "gbn/graph/io.hpp"
#include "gbn/graph/partition.hpp"
#include "support/oracles.hpp"

#include <Eigen/Eigenvalues>
#include <doctest.h>

#include <filesystem>
#include <fstream>

using namespace gbn;
namespace fs = std::filesystem;

namespace {

Graph from_edges(std::vector<Edge> edges, Index n) { return build_graph(edges, n); }

struct TempDir {
  fs::path path;
  TempDir() : path(fs::temp_directory_path() / ("gbn_graph_" + std::to_string(std::random_device{}()))) {
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

void write_text(const fs::path& p, const std::string& text) { std::ofstream(p) << text; }

Vector random_hard_indicator(Index n, std::mt19937_64& rng) {
  std::bernoulli_distribution coin(0.5);
  Vector I(n);
  for (Index i = 0; i < n; ++i) I(i) = coin(rng) ? 1.0 : 0.0;
  return I;
}

}  // namespace

TEST_CASE("build_graph examples") {
  const Graph p3 = from_edges({{0, 1}, {1, 2}}, 3);
  CHECK(p3.degrees() == std::vector<Index>{1, 2, 1});
  CHECK(complete_graph(3).degrees() == std::vector<Index>{2, 2, 2});
  const Graph c4 = cycle_graph(4);
  CHECK(c4.edge_count() == 4);
  CHECK(c4.degrees() == std::vector<Index>{2, 2, 2, 2});
  // canonical ordering regardless of input orientation
  CHECK(from_edges({{2, 1}, {1, 0}}, 3).edges() == p3.edges());
}

TEST_CASE("build_graph errors") {
  CHECK_THROWS_AS(from_edges({{0, 3}}, 3), std::invalid_argument);
  CHECK_THROWS_AS(from_edges({{1, 1}}, 3), std::invalid_argument);
  CHECK_THROWS_AS(from_edges({{0, 1}, {1, 0}}, 3), std::invalid_argument);
  CHECK_THROWS_AS(from_edges({{-1, 0}}, 3), std::invalid_argument);
}

TEST_CASE("graph invariants on random graphs") {
  std::mt19937_64 rng(3);
  for (int t = 0; t < 30; ++t) {
    const Graph g = random_connected_graph(3 + t, 0.2, rng);
    const Matrix A(g.adjacency());
    CHECK(A.isApprox(A.transpose()));
    Index total = 0;
    for (Index i = 0; i < g.node_count(); ++i) {
      CHECK(A.row(i).sum() == doctest::Approx(static_cast<double>(g.degree(i))));
      CHECK(static_cast<Index>(g.neighbors(i).size()) == g.degree(i));
      total += g.degree(i);
    }
    CHECK(total == 2 * g.edge_count());
  }
}

TEST_CASE("replicate builds a block-diagonal union") {
  const Graph p3 = path_graph(3);
  const Graph r = replicate(p3, 3);
  CHECK(r.node_count() == 9);
  CHECK(r.edge_count() == 6);
  CHECK(r.bfs_distances(0)[3] == -1);
  CHECK(r.bfs_distances(3)[5] == 2);
}

TEST_CASE("normalized Laplacian examples") {
  const Matrix k3 = normalized_laplacian(complete_graph(3)).dense();
  CHECK(k3(0, 0) == doctest::Approx(1.0));
  CHECK(k3(0, 1) == doctest::Approx(-0.5));
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es((Eigen::MatrixXd(k3)));
  CHECK(es.eigenvalues()(0) == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(es.eigenvalues()(1) == doctest::Approx(1.5));
  CHECK(es.eigenvalues()(2) == doctest::Approx(1.5));

  const Matrix p2 = normalized_laplacian(path_graph(2)).dense();
  Matrix expected(2, 2);
  expected << 1, -1, -1, 1;
  CHECK(p2.isApprox(expected));

  // regular graph: I - L is row-stochastic
  const Matrix c6 = normalized_laplacian(cycle_graph(6)).dense();
  const Matrix shift = Matrix::Identity(6, 6) - c6;
  CHECK((shift.rowwise().sum().array() - 1.0).abs().maxCoeff() < 1e-12);
}

TEST_CASE("normalized Laplacian properties on random graphs") {
  std::mt19937_64 rng(9);
  for (int t = 0; t < 25; ++t) {
    const Graph g = random_connected_graph(2 + t, 0.25, rng);
    const Matrix L = normalized_laplacian(g).dense();
    CHECK((L - gbn::testing::dense_normalized_laplacian(g)).cwiseAbs().maxCoeff() < 1e-14);
    CHECK((L * sqrt_degree_vector(g)).cwiseAbs().maxCoeff() < 1e-10);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es((Eigen::MatrixXd(L)));
    CHECK(es.eigenvalues().minCoeff() > -1e-10);
    CHECK(es.eigenvalues().maxCoeff() < 2.0 + 1e-10);
  }
}

TEST_CASE("isolated nodes get a zero Laplacian row") {
  const Graph g = from_edges({{0, 1}}, 3);
  CHECK(g.has_isolated_nodes());
  const Matrix L = normalized_laplacian(g).dense();
  CHECK(L.row(2).isZero());
}

TEST_CASE("hat degree examples") {
  const Graph c4 = cycle_graph(4);
  Vector I(4);
  I << 1, 1, 0, 0;
  CHECK(hat_degrees(c4, I).isApprox(Vector::Ones(4)));

  Vector mid(3);
  mid << 0, 1, 0;
  CHECK(hat_degrees(path_graph(3), mid)(1) == 0.0);

  const Graph g = complete_graph(5);
  Vector deg(5);
  deg.setConstant(4.0);
  CHECK(hat_degrees(g, Vector::Ones(5)).isApprox(deg));
}

TEST_CASE("hat degrees: closed form equals the neighbour-sum form for hard partitions") {
  std::mt19937_64 rng(17);
  for (int t = 0; t < 100; ++t) {
    const Graph g = random_connected_graph(2 + t % 29, 0.2, rng);
    const Vector I = random_hard_indicator(g.node_count(), rng);
    const Vector hd = hat_degrees(g, I);
    for (Index i = 0; i < g.node_count(); ++i) {
      double sum_form = 0.0;
      for (Index j : g.neighbors(i)) sum_form += I(i) * I(j) + (1.0 - I(i)) * (1.0 - I(j));
      CHECK(hd(i) == sum_form);
    }
  }
}

TEST_CASE("hat degrees stay non-negative for soft indicators") {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int t = 0; t < 50; ++t) {
    const Graph g = random_connected_graph(10, 0.3, rng);
    Vector I(10);
    for (Index i = 0; i < 10; ++i) I(i) = u(rng);
    CHECK(hat_degrees(g, I).minCoeff() >= 0.0);
  }
}

TEST_CASE("partition validation") {
  const Graph g = path_graph(3);
  Vector bad(3);
  bad << 0.5, 1.5, 0.0;
  CHECK_THROWS(make_partition(g, bad, Vector::Zero(3)));
  CHECK_THROWS_AS(make_partition(g, Vector::Ones(2), Vector::Zero(3)), DimensionError);
  const BoundaryPartition part = make_hard_partition(g, {0, 1}, 0.5);
  CHECK(part.is_hard());
  CHECK(part.interior() == std::vector<Index>{0, 1});
  CHECK(part.boundary() == std::vector<Index>{2});
}

TEST_CASE("propagators: 4-cycle hand evaluation") {
  // S = {0, 1}; hat degrees all 1; p = 0.5 everywhere.
  const Graph c4 = cycle_graph(4);
  const BoundaryPartition part = make_hard_partition(c4, {0, 1}, 0.5);
  const JacobiPropagators jp = propagators(c4, part);
  const Matrix U = jp.dinv_u.dense();
  const Matrix V = jp.dinv_v().dense();
  Matrix U_expected = Matrix::Zero(4, 4);
  U_expected(0, 1) = U_expected(0, 3) = 1.0;
  U_expected(1, 0) = U_expected(1, 2) = 1.0;
  Matrix V_expected = Matrix::Zero(4, 4);
  V_expected(0, 1) = 1.0;  // interior row, interior column
  V_expected(1, 0) = 1.0;
  V_expected(2, 1) = 0.5;  // boundary row, interior column, p = 0.5
  V_expected(3, 0) = 0.5;
  CHECK((U - U_expected).cwiseAbs().maxCoeff() < 1e-15);
  CHECK((V - V_expected).cwiseAbs().maxCoeff() < 1e-15);
  CHECK(jp.jacobi_operator().dense().isApprox(U + V));
}

TEST_CASE("propagators: all-interior reduces to symmetric aggregation") {
  std::mt19937_64 rng(1);
  const Graph g = random_connected_graph(12, 0.3, rng);
  const Index n = g.node_count();
  Vector ratio(n);
  ratio.setConstant(3.7);
  const JacobiPropagators jp = propagators(g, make_partition(g, Vector::Ones(n), ratio));
  const Matrix ahat = Matrix::Identity(n, n) - gbn::testing::dense_normalized_laplacian(g);
  CHECK((jp.dinv_u.dense() - ahat).cwiseAbs().maxCoeff() < 1e-14);
  CHECK((jp.dinv_v().dense() - ahat).cwiseAbs().maxCoeff() < 1e-14);
}

TEST_CASE("propagators match the block construction for hard partitions") {
  std::mt19937_64 rng(23);
  std::uniform_real_distribution<double> u(0.0, 2.0);
  for (int t = 0; t < 40; ++t) {
    const Graph g = random_connected_graph(4 + t % 20, 0.25, rng);
    const Index n = g.node_count();
    const Vector I = random_hard_indicator(n, rng);
    Vector p(n);
    for (Index i = 0; i < n; ++i) p(i) = u(rng);

    // class-restricted degree counted directly
    Vector same(n);
    for (Index i = 0; i < n; ++i) {
      same(i) = 0.0;
      for (Index j : g.neighbors(i)) same(i) += (I(i) == I(j)) ? 1.0 : 0.0;
    }
    auto inv = [&](Index i) { return same(i) > 0 ? 1.0 / std::sqrt(same(i)) : 0.0; };
    Matrix U = Matrix::Zero(n, n), V = Matrix::Zero(n, n);
    for (Index i = 0; i < n; ++i)
      for (Index j : g.neighbors(i)) {
        const bool i_in = I(i) == 1.0, j_in = I(j) == 1.0;
        if (i_in) U(i, j) = inv(i) * inv(j);                 // interior rows see every neighbour
        if (i_in && j_in) V(i, j) = inv(i) * inv(j);         // interior-interior
        if (!i_in && j_in) V(i, j) = p(i) * inv(i) * inv(j);  // boundary row, interior column
      }

    const JacobiPropagators jp = propagators(g, make_partition(g, I, p));
    CHECK((jp.dinv_u.dense() - U).cwiseAbs().maxCoeff() < 1e-12);
    CHECK((jp.dinv_v().dense() - V).cwiseAbs().maxCoeff() < 1e-12);
    CHECK(jp.dinv_u.all_finite());
    // pure-boundary rows of DinvU vanish
    for (Index i = 0; i < n; ++i)
      if (I(i) == 0.0) CHECK(jp.dinv_u.dense().row(i).isZero());
  }
}

TEST_CASE("edge list and feature files") {
  TempDir tmp;
  write_text(tmp.path / "p3.txt", "# path\n0 1\n1 2\n");
  const Graph g = load_edge_list(tmp.path / "p3.txt");
  CHECK(g.node_count() == 3);
  CHECK(g.degrees() == std::vector<Index>{1, 2, 1});

  write_text(tmp.path / "feat.csv", "id,f0,f1\n1,3.5,4\n0,1,2\n2,5,6\n");
  const FeatureTable ft = load_features(tmp.path / "feat.csv");
  CHECK(ft.features.cols() == 2);
  CHECK(ft.features(0, 1) == 2.0);
  CHECK(ft.features(1, 0) == 3.5);
  CHECK_FALSE(ft.labels.has_value());

  write_text(tmp.path / "lab.csv", "id,f0,label\n0,1,0\n1,2,1\n2,3,2\n");
  LoadOptions opts;
  opts.declared_classes = 3;
  const LoadedGraph lg = load_graph(tmp.path / "p3.txt", GraphFormat::EdgeListWithFeatures, tmp.path / "lab.csv", opts);
  REQUIRE(lg.labels.has_value());
  CHECK(*lg.labels == std::vector<int>{0, 1, 2});
  opts.declared_classes = 2;
  CHECK_THROWS(load_graph(tmp.path / "p3.txt", GraphFormat::EdgeListWithFeatures, tmp.path / "lab.csv", opts));
}

TEST_CASE("parse errors carry line numbers") {
  TempDir tmp;
  write_text(tmp.path / "bad.txt", "0 1\n1 x\n");
  try {
    load_edge_list(tmp.path / "bad.txt");
    FAIL("expected a parse error");
  } catch (const ParseError& e) {
    CHECK(e.line() == 2);
  }
  write_text(tmp.path / "oob.txt", "0 1\n1 7\n");
  CHECK_THROWS_AS(load_edge_list(tmp.path / "oob.txt", Index{3}), ParseError);
  write_text(tmp.path / "missing.csv", "id,f0\n0,1\n2,3\n");
  CHECK_THROWS_AS(load_features(tmp.path / "missing.csv"), ParseError);
  write_text(tmp.path / "dup.csv", "id,f0\n0,1\n0,3\n");
  CHECK_THROWS_AS(load_features(tmp.path / "dup.csv"), ParseError);
  write_text(tmp.path / "iso.txt", "0 1\n");
  write_text(tmp.path / "iso.csv", "id,f0\n0,1\n1,1\n2,1\n");
  CHECK_THROWS(load_graph(tmp.path / "iso.txt", GraphFormat::EdgeListWithFeatures, tmp.path / "iso.csv"));
}

TEST_CASE("file round trip is exact") {
  TempDir tmp;
  std::mt19937_64 rng(2);
  const Graph g = random_connected_graph(15, 0.2, rng);
  const Matrix x = gbn::testing::random_matrix(15, 3, rng);
  std::vector<int> labels(15);
  for (int i = 0; i < 15; ++i) labels[static_cast<std::size_t>(i)] = i % 3;
  write_edge_list(tmp.path / "g.txt", g);
  write_features(tmp.path / "g.csv", x, &labels);
  const LoadedGraph lg = load_graph(tmp.path / "g.txt", GraphFormat::EdgeListWithFeatures, tmp.path / "g.csv");
  CHECK(lg.graph.edges() == g.edges());
  CHECK(lg.features == x);
  CHECK(*lg.labels == labels);
}
