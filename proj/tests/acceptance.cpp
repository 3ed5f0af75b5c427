// Acceptance suite: one PASS/FAIL line per criterion.
// usage: acceptance [criterion numbers...]
#include "gbn/bench/synth.hpp"
#include "gbn/core/rng.hpp"
#include "gbn/spectral/cylinder.hpp"
#include "gbn/spectral/heat.hpp"
#include "gbn/spectral/source.hpp"
#include "gbn/train/train.hpp"
#include "support/oracles.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <numeric>
#include <set>
#include <sstream>
#include <string>

using namespace gbn;
using gbn::testing::gradcheck;
using gbn::testing::random_matrix;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

struct Criterion {
  int id;
  const char* name;
  double limit_seconds;
  std::function<Outcome()> run;
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

double mean_of(const std::vector<double>& v) { return std::accumulate(v.begin(), v.end(), 0.0) / v.size(); }

Index random_size(std::mt19937_64& rng, Index lo, Index hi) {
  return lo + static_cast<Index>(rng() % static_cast<std::uint64_t>(hi - lo + 1));
}

// ---- 1 ----------------------------------------------------------------------------

Outcome degeneracy() {
  std::mt19937_64 rng(101);
  double worst = 0.0;
  for (int t = 0; t < 20; ++t) {
    const Index n = random_size(rng, 5, 30);
    const Graph g = random_connected_graph(n, 0.2, rng);
    const GraphContext ctx = make_context(g);
    ModelConfig cfg;
    cfg.in_dim = 3;
    cfg.hid_dim = 8;
    cfg.out_dim = 2;
    cfg.layers = 3;
    Model model(cfg, rng);
    ForwardOptions opts;
    opts.indicator = Vector::Ones(n);
    opts.drop_beta = true;
    opts.drop_gamma = true;
    Tape tape;
    const Tensor x = tape.constant(random_matrix(n, 3, rng));
    const Matrix a = model.forward(tape, ctx, x, opts).output.value();
    const Matrix b = model.forward_as_gcn(tape, ctx, x).output.value();
    worst = std::max(worst, (a - b).cwiseAbs().maxCoeff());
  }
  return {worst <= 1e-6, fmt("max |GBN - GCN| = %.3g over 20 graphs (tol 1e-6)", worst)};
}

// ---- 2 ----------------------------------------------------------------------------

Outcome equivalence() {
  std::mt19937_64 rng(202);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  double worst = 0.0;
  for (int t = 0; t < 50; ++t) {
    const Index n = random_size(rng, 4, 30);
    const Graph g = random_connected_graph(n, 0.25, rng);
    Vector ind(n), ratio(n);
    for (Index i = 0; i < n; ++i) {
      ind(i) = u(rng);
      ratio(i) = 3.0 * u(rng);
    }
    const Matrix h = random_matrix(n, 4, rng);
    const Matrix gamma = random_matrix(n, 4, rng);
    const Matrix a = gbn_layer_matrix_form(g, ind, ratio, h, gamma, Activation::Tanh);
    const Matrix b = gbn_layer_elementwise(g, ind, ratio, h, gamma, Activation::Tanh);
    worst = std::max(worst, (a - b).cwiseAbs().maxCoeff());
  }
  return {worst <= 1e-10, fmt("max |matrix - elementwise| = %.3g over 50 soft partitions (tol 1e-10)", worst)};
}

// ---- 3 ----------------------------------------------------------------------------

Outcome gradient_suite() {
  std::mt19937_64 rng(303);
  auto m = [&](Index r, Index c, double lo = -1.0, double hi = 1.0) { return random_matrix(r, c, rng, lo, hi); };
  std::vector<Triplet> trips;
  for (Index i = 0; i < 5; ++i)
    for (Index j = 0; j < 4; ++j)
      if ((i + 2 * j) % 3 != 0) trips.emplace_back(i, j, 0.3 * static_cast<double>(i - j) + 0.1);
  const SparsePropagator sp = make_propagator(5, 4, trips);
  const Matrix target = m(5, 2);
  const std::vector<bool> mask{true, false, true, true, false};
  const std::vector<int> labels{0, 2, 1, 1, 0};
  Matrix away = m(4, 3, 0.1, 1.0);
  away.col(1) *= -1.0;

  using Ops = std::vector<Tensor>;
  std::vector<std::pair<std::string, std::function<double()>>> checks = {
      {"matmul", [&] { return gradcheck([](Tape&, const Ops& x) { return matmul(x[0], x[1]); }, {m(4, 3), m(3, 2)}); }},
      {"spmm", [&] { return gradcheck([&](Tape&, const Ops& x) { return spmm(sp, x[0]); }, {m(4, 3)}); }},
      {"add", [&] { return gradcheck([](Tape&, const Ops& x) { return add(x[0], x[1]); }, {m(3, 4), m(3, 4)}); }},
      {"sub", [&] { return gradcheck([](Tape&, const Ops& x) { return sub(x[0], x[1]); }, {m(3, 4), m(3, 4)}); }},
      {"mul", [&] { return gradcheck([](Tape&, const Ops& x) { return mul(x[0], x[1]); }, {m(3, 4), m(3, 4)}); }},
      {"div",
       [&] { return gradcheck([](Tape&, const Ops& x) { return div(x[0], x[1]); }, {m(3, 4), m(3, 4, 0.5, 2.0)}); }},
      {"scale", [&] { return gradcheck([](Tape&, const Ops& x) { return scale(x[0], -1.7); }, {m(3, 4)}); }},
      {"add_scalar", [&] { return gradcheck([](Tape&, const Ops& x) { return add_scalar(x[0], 2.0); }, {m(3, 4)}); }},
      {"elementwise broadcast",
       [&] {
         return gradcheck([](Tape&, const Ops& x) { return elementwise(ElementwiseKind::Mul, x[0], x[1]); },
                          {m(3, 4), m(1, 1)});
       }},
      {"add_bias",
       [&] { return gradcheck([](Tape&, const Ops& x) { return add_bias(x[0], x[1]); }, {m(4, 3), m(1, 3)}); }},
      {"row_scale",
       [&] { return gradcheck([](Tape&, const Ops& x) { return row_scale(x[0], x[1]); }, {m(4, 3), m(4, 1)}); }},
      {"inv_sqrt_guarded",
       [&] { return gradcheck([](Tape&, const Ops& x) { return inv_sqrt_guarded(x[0], 1e-12); }, {m(4, 1, 0.5, 3.0)}); }},
      {"relu", [&] { return gradcheck([](Tape&, const Ops& x) { return activation(Activation::Relu, x[0]); }, {away}); }},
      {"sum", [&] { return gradcheck([](Tape&, const Ops& x) { return sum(x[0]); }, {m(3, 3)}); }},
      {"mean", [&] { return gradcheck([](Tape&, const Ops& x) { return mean(x[0]); }, {m(3, 3)}); }},
      {"pick", [&] { return gradcheck([](Tape&, const Ops& x) { return pick(x[0], 2, 1); }, {m(3, 3)}); }},
      {"mse", [&] { return gradcheck([&](Tape&, const Ops& x) { return mse(x[0], target); }, {m(5, 2)}); }},
      {"masked_mse",
       [&] { return gradcheck([&](Tape&, const Ops& x) { return masked_mse(x[0], target, mask); }, {m(5, 2)}); }},
      {"cross_entropy",
       [&] {
         return gradcheck([&](Tape&, const Ops& x) { return cross_entropy(x[0], labels, mask); }, {m(5, 3, -3, 3)});
       }},
      {"dropout",
       [&] {
         return gradcheck(
             [&](Tape&, const Ops& x) {
               std::mt19937_64 r(9);
               return dropout(x[0], 0.4, true, r);
             },
             {m(4, 4)});
       }},
  };
  for (Activation a : {Activation::Identity, Activation::Tanh, Activation::Gelu, Activation::Sigmoid,
                       Activation::Softplus})
    checks.emplace_back(std::string(to_string(a)), [&, a] {
      return gradcheck([a](Tape&, const Ops& x) { return activation(a, x[0]); }, {m(4, 3, -2, 2)});
    });
  for (NormKind k : {NormKind::Layer, NormKind::Batch})
    checks.emplace_back(std::string(to_string(k)) + " norm", [&, k] {
      return gradcheck([k](Tape&, const Ops& x) { return normalize(k, x[0], x[1], x[2]); },
                       {m(5, 4), m(1, 4, 0.5, 1.5), m(1, 4)});
    });

  double worst = 0.0;
  std::string worst_name;
  for (auto& [name, fn] : checks) {
    const double e = fn();
    if (e > worst) {
      worst = e;
      worst_name = name;
    }
  }

  // full model, K = 2, every parameter
  const Graph g = random_connected_graph(6, 0.4, rng);
  const GraphContext ctx = make_context(g);
  ModelConfig cfg;
  cfg.in_dim = 2;
  cfg.hid_dim = 3;
  cfg.out_dim = 2;
  cfg.layers = 2;
  Model model(cfg, 5);
  const Matrix x0 = m(6, 2);
  const Matrix w = m(6, 2);
  auto loss = [&](Tape& tape) { return sum(mul(model.forward(tape, ctx, tape.constant(x0)).output, tape.constant(w))); };
  model.params().zero_grad();
  {
    Tape tape;
    tape.backward(loss(tape));
  }
  double model_worst = 0.0;
  std::string model_worst_name;
  for (Parameter& p : model.params()) {
    auto f = [&](const Matrix& v) {
      const Matrix keep = p.value;
      p.value = v;
      Tape tape;
      const double out = loss(tape).value()(0, 0);
      p.value = keep;
      return out;
    };
    const double e = gbn::testing::rel_error(p.grad, gbn::testing::numeric_gradient(f, p.value));
    if (e > model_worst) {
      model_worst = e;
      model_worst_name = p.name;
    }
  }
  const bool ok = worst <= 1e-4 && model_worst <= 1e-4;
  return {ok, fmt("%zu ops worst %.2g (%s); K=2 model %zu params worst %.2g (%s) (tol 1e-4)", checks.size(), worst,
                  worst_name.c_str(), model.params().size(), model_worst, model_worst_name.c_str())};
}

// ---- 4 ----------------------------------------------------------------------------

Outcome heat_kernel_oracle() {
  std::mt19937_64 rng(404);
  double series = 0.0, semigroup = 0.0;
  for (int t = 0; t < 10; ++t) {
    const Index n = random_size(rng, 5, 30);
    const Graph g = random_connected_graph(n, 0.2, rng);
    const Matrix L = normalized_laplacian(g).dense();
    const Spectrum rep = eig_sym(L);
    for (double time : {0.1, 0.5, 1.0}) {
      series = std::max(series, (heat_kernel(rep, time) - gbn::testing::expm_series(L, time)).cwiseAbs().maxCoeff());
      for (double s : {0.1, 0.5, 1.0})
        semigroup = std::max(
            semigroup, (heat_kernel(rep, s) * heat_kernel(rep, time) - heat_kernel(rep, s + time)).cwiseAbs().maxCoeff());
    }
  }
  return {series <= 1e-8 && semigroup <= 1e-8,
          fmt("max |H_t - series| = %.2g, max |H_s H_t - H_{s+t}| = %.2g (tol 1e-8)", series, semigroup)};
}

// ---- 5 ----------------------------------------------------------------------------

Outcome cylinder_ordering() {
  std::ostringstream out;
  bool ok = true;
  for (auto [m, r] : std::vector<std::pair<Index, Index>>{{20, 6}, {40, 6}, {30, 8}}) {
    const CylinderGaps gaps = cylinder_gap_experiment(m, r, RadiusProfile::constant());
    ok = ok && gaps.ordered && gaps.margin > 1e-9;
    out << fmt("(%lld,%lld) D %.4g >= %.4g >= N %.4g; ", static_cast<long long>(m), static_cast<long long>(r),
               gaps.dirichlet, gaps.closed, gaps.neumann);
  }
  const double d4 = cylinder_gap_experiment(20, 4, RadiusProfile::constant()).dirichlet;
  const double d8 = cylinder_gap_experiment(20, 8, RadiusProfile::constant()).dirichlet;
  const double n20 = cylinder_gap_experiment(20, 6, RadiusProfile::constant()).neumann;
  const double n40 = cylinder_gap_experiment(40, 6, RadiusProfile::constant()).neumann;
  ok = ok && d4 > d8 && n40 < n20;
  out << fmt("D(r=4) %.4g > D(r=8) %.4g; N(m=40) %.4g < N(m=20) %.4g", d4, d8, n40, n20);
  return {ok, out.str()};
}

// ---- 6 ----------------------------------------------------------------------------

Outcome eigenmode_rate() {
  double worst = 0.0;
  for (const Graph& g : {path_graph(10), complete_graph(5)}) {
    const Matrix L = normalized_laplacian(g).dense();
    const Spectrum rep = eig_sym(L);
    for (Index i = 1; i < rep.size(); ++i)
      for (int k = 0; k <= 20; ++k) {
        const double t = 0.05 * k;
        const double ratio = eigenmode_energy_ratio(rep, L, i, t);
        worst = std::max(worst, std::abs(ratio / std::exp(-2.0 * rep.eigenvalues(i) * t) - 1.0));
      }
  }
  return {worst <= 0.02, fmt("max relative deviation from exp(-2 lambda_i t) = %.2g on P10, K5 (tol 0.02)", worst)};
}

// ---- 7 ----------------------------------------------------------------------------

Outcome polynomial_decay() {
  const Graph g = path_graph(10);
  const Vector x0 = Vector::LinSpaced(10, -1.0, 1.0);
  const EnergyTrace poly = source_term_energy_experiment(g, x0, PolynomialDecaySource{3.0, 0.5}, 100000, 0.01, 10);
  const double slope = loglog_slope(poly, 100.0, 1000.0);

  const EnergyTrace zero = source_term_energy_experiment(g, x0, ZeroSource{}, 5000, 0.01, 10);
  // goodness of a straight-line fit of log-energy against t
  std::vector<double> ts, ls;
  for (std::size_t k = 0; k < zero.time.size(); ++k)
    if (zero.time[k] >= 10.0 && zero.time[k] <= 50.0) {
      ts.push_back(zero.time[k]);
      ls.push_back(std::log(zero.energy[k]));
    }
  const double mt = mean_of(ts), ml = mean_of(ls);
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t k = 0; k < ts.size(); ++k) {
    sxy += (ts[k] - mt) * (ls[k] - ml);
    sxx += (ts[k] - mt) * (ts[k] - mt);
    syy += (ls[k] - ml) * (ls[k] - ml);
  }
  const double r2 = sxy * sxy / (sxx * syy);
  const bool ok = slope >= -1.3 && slope <= -0.7 && r2 >= 0.999;
  return {ok, fmt("log-log slope over t in [100,1000] = %.4f (band [-1.3,-0.7]); zero source log-energy vs t: "
                  "slope %.4f, R^2 %.6f",
                  slope, sxy / sxx, r2)};
}

// ---- 8 ----------------------------------------------------------------------------

Outcome oversmoothing() {
  std::ostringstream out;
  bool ok = true;
  std::vector<double> acc4, acc256;
  for (std::uint64_t seed : {1ULL, 2ULL, 3ULL}) {
    const SbmCase sbm = gen_sbm({}, seed);
    const GraphContext ctx = make_context(sbm.graph);
    auto split_rng = rng_stream(seed, "data/split");
    const NodeSplit split = random_split(sbm.graph.node_count(), 0.5, 0.25, split_rng);

    TrainConfig cfg;
    cfg.task = TaskKind::Classification;
    cfg.hid_dim = 16;
    cfg.lr = 1e-2;
    cfg.epochs = 150;
    cfg.patience = 50;
    cfg.seed = seed;

    // GCN at depth 64, random weights
    ModelConfig gcn_cfg = make_model_config(cfg, ModelKind::Gcn, sbm.features.cols(), 2);
    gcn_cfg.layers = 64;
    auto init = rng_stream(seed, "init");
    Model gcn(gcn_cfg, init);
    const std::vector<double> ge = energy_curve(gcn, ctx, sbm.features, 64);
    const double gcn_ratio = ge.back() / ge.front();

    cfg.n_layers = 4;
    const TrainResult shallow = train_classify(cfg, ModelKind::Gbn, sbm.graph, sbm.features, sbm.labels, split);
    cfg.n_layers = 256;
    TrainResult deep = train_classify(cfg, ModelKind::Gbn, sbm.graph, sbm.features, sbm.labels, split);
    const std::vector<double> de = energy_curve(deep.model, ctx, sbm.features, 256);
    Tape tape;
    ForwardOptions rec;
    rec.record = true;
    const ForwardResult fr = deep.model.forward(tape, ctx, tape.constant(sbm.features), rec);
    const double e0 = dirichlet_energy(ctx.laplacian, fr.embedding.value());
    const double gbn_ratio = de.back() / e0;
    const double gamma = fr.trace->layers.back().gamma_norm;

    acc4.push_back(shallow.report.final_test);
    acc256.push_back(deep.report.final_test);
    ok = ok && gcn_ratio < 1e-4 && gbn_ratio > 1e-3 && gamma > 0.0;
    out << fmt("seed %llu: GCN64 E64/E1 %.2g, GBN256 E256/E0 %.3g (|gamma| %.2g), acc %.3f vs %.3f; ",
               static_cast<unsigned long long>(seed), gcn_ratio, gbn_ratio, gamma, deep.report.final_test,
               shallow.report.final_test);

    if (seed == 1) {
      // reference only: a trained depth-64 GCN
      cfg.n_layers = 64;
      TrainResult trained = train_classify(cfg, ModelKind::Gcn, sbm.graph, sbm.features, sbm.labels, split);
      const std::vector<double> te = energy_curve(trained.model, ctx, sbm.features, 64);
      out << fmt("[info: trained GCN64 E64/E1 %.2g, acc %.3f] ", te.back() / te.front(), trained.report.final_test);
    }
  }
  const double gap = std::abs(mean_of(acc256) - mean_of(acc4));
  ok = ok && gap <= 0.05;
  out << fmt("mean acc depth 256 %.3f vs depth 4 %.3f (gap %.3f, tol 0.05)", mean_of(acc256), mean_of(acc4), gap);
  return {ok, out.str()};
}

// ---- 9 ----------------------------------------------------------------------------

TrainConfig transfer_config(Index distance, std::uint64_t seed) {
  TrainConfig cfg;
  cfg.n_layers = distance;
  cfg.hid_dim = 16;
  cfg.norm = NormKind::Batch;
  cfg.lr = 0.01;
  cfg.epochs = 60;
  cfg.patience = 60;
  cfg.batch_graphs = 50;
  cfg.seed = seed;
  return cfg;
}

Outcome graph_transfer() {
  const std::vector<std::uint64_t> seeds{1, 2, 3, 4, 5};
  const TransferCounts counts{200, 50, 50};
  std::ostringstream out;

  std::vector<double> gbn10, gcn10, gbn50, gcn50, const50;
  for (std::uint64_t seed : seeds) {
    const TransferSplits d10 = gen_transfer_split(Topology::Ring, 10, counts, seed);
    gbn10.push_back(train_transfer(transfer_config(10, seed), d10, ModelKind::Gbn).report.final_test);
    gcn10.push_back(train_transfer(transfer_config(10, seed), d10, ModelKind::Gcn).report.final_test);
  }
  const bool near_ok = mean_of(gbn10) <= 0.25 * mean_of(gcn10);
  out << fmt("d=10: GBN %.3g vs GCN %.3g (need ratio <= 0.25, got %.3g); ", mean_of(gbn10), mean_of(gcn10),
             mean_of(gbn10) / mean_of(gcn10));

  for (std::uint64_t seed : seeds) {
    const TransferSplits d50 = gen_transfer_split(Topology::Ring, 50, counts, seed);
    const50.push_back(d50.test.constant_predictor_mse());
    gbn50.push_back(train_transfer(transfer_config(50, seed), d50, ModelKind::Gbn).report.final_test);
    gcn50.push_back(train_transfer(transfer_config(50, seed), d50, ModelKind::Gcn).report.final_test);
  }
  const double c = mean_of(const50);
  const bool gcn_fails = std::abs(mean_of(gcn50) - c) <= 0.2 * c;
  const bool gbn_beats = mean_of(gbn50) * 2.0 <= c;
  out << fmt("d=50: constant %.3g, GCN %.3g (%s within 20%%), GBN %.3g (%s <= const/2)", c, mean_of(gcn50),
             gcn_fails ? "is" : "NOT", mean_of(gbn50), gbn_beats ? "is" : "NOT");
  return {near_ok && gcn_fails && gbn_beats, out.str()};
}

// ---- 10 ---------------------------------------------------------------------------

Outcome frozen_linear_bound() {
  std::mt19937_64 rng(1010);
  Index pairs = 0, violations = 0, non_monotone = 0;
  double max_ratio = 0.0;
  for (int t = 0; t < 8; ++t) {
    const Index n = random_size(rng, 8, 20);
    const Graph g = random_connected_graph(n, 0.2, rng);
    const GraphContext ctx = make_context(g);
    ModelConfig cfg;
    cfg.in_dim = 3;
    cfg.hid_dim = 3;
    cfg.out_dim = 1;
    cfg.layers = 8;
    cfg.activation = Activation::Identity;
    cfg.transform = TransformKind::Identity;
    Model model(cfg, rng);
    const Matrix x0 = random_matrix(n, 3, rng);
    const std::vector<Matrix> series = bound_series(bound_operator(model, ctx, x0), 8);
    for (std::size_t k = 1; k < series.size(); ++k)
      if ((series[k] - series[k - 1]).minCoeff() < 0.0) ++non_monotone;
    for (int p = 0; p < 20; ++p) {
      const Index i = random_size(rng, 0, n - 1);
      Index j = random_size(rng, 0, n - 1);
      if (j == i) j = (i + 1) % n;
      for (Index K : {2, 4, 8}) {
        const JacobianProbe probe = jacobian_probe(model, ctx, x0, i, j, K);
        ++pairs;
        if (probe.norm > probe.bound * (1.0 + 1e-12) + 1e-14) ++violations;
        max_ratio = std::max(max_ratio, probe.ratio);
      }
    }
  }
  return {violations == 0 && non_monotone == 0,
          fmt("%lld (i,j,K) probes, %lld violations, max norm/bound %.3g; non-monotone series steps %lld",
              static_cast<long long>(pairs), static_cast<long long>(violations), max_ratio,
              static_cast<long long>(non_monotone))};
}

// ---- 11 ---------------------------------------------------------------------------

Outcome bottleneck() {
  std::vector<double> gbn, gcn;
  for (std::uint64_t seed : {1ULL, 2ULL, 3ULL}) {
    const BottleneckSplits data = gen_bottleneck_split(5, 3, {200, 50, 50}, seed);
    TrainConfig cfg;
    cfg.task = TaskKind::Bottleneck;
    cfg.n_layers = 8;
    cfg.hid_dim = 16;
    cfg.lr = 0.01;
    cfg.epochs = 100;
    cfg.batch_graphs = 50;
    cfg.seed = seed;
    gbn.push_back(train_bottleneck(cfg, ModelKind::Gbn, data.train, data.val, data.test).report.final_test);
    gcn.push_back(train_bottleneck(cfg, ModelKind::Gcn, data.train, data.val, data.test).report.final_test);
  }
  const double ratio = mean_of(gbn) / mean_of(gcn);
  return {ratio <= 0.5, fmt("swap MAE at depth 8: GBN %.4g, GCN %.4g, ratio %.3g (need <= 0.5)", mean_of(gbn),
                            mean_of(gcn), ratio)};
}

// ---- 12 ---------------------------------------------------------------------------

Outcome complexity() {
  std::mt19937_64 rng(1212);
  const Graph g = random_connected_graph(1000, 0.004, rng);
  const GraphContext ctx = make_context(g);
  const Matrix x = random_matrix(1000, 16, rng);
  auto time_forward = [&](Index K) {
    ModelConfig cfg;
    cfg.in_dim = 16;
    cfg.hid_dim = 16;
    cfg.out_dim = 2;
    cfg.layers = K;
    Model model(cfg, 7);
    std::vector<double> samples;
    for (int r = 0; r < 6; ++r) {
      const auto t0 = std::chrono::steady_clock::now();
      {
        Tape tape;
        model.forward(tape, ctx, tape.constant(x));
      }
      if (r > 0) samples.push_back(seconds_since(t0));  // first run warms up
    }
    std::sort(samples.begin(), samples.end());
    return samples[samples.size() / 2];
  };
  const double t8 = time_forward(8);
  const double t64 = time_forward(64);
  const double ratio = t64 / t8;
  return {ratio >= 6.0 && ratio <= 10.0,
          fmt("%lld edges: K=8 %.4fs, K=64 %.4fs (median of 5), ratio %.2f (band [6,10])",
              static_cast<long long>(g.edge_count()), t8, t64, ratio)};
}

}  // namespace

int main(int argc, char** argv) {
  const std::vector<Criterion> criteria = {
      {1, "degeneracy identity", 5, degeneracy},
      {2, "formulation equivalence", 5, equivalence},
      {3, "gradient suite", 60, gradient_suite},
      {4, "heat-kernel oracle", 30, heat_kernel_oracle},
      {5, "cylinder gap ordering", 60, cylinder_ordering},
      {6, "eigenmode energy rate", 10, eigenmode_rate},
      {7, "polynomial energy decay", 30, polynomial_decay},
      {8, "oversmoothing", 1800, oversmoothing},
      {9, "graph transfer", 2700, graph_transfer},
      {10, "frozen linear Jacobian bound", 60, frozen_linear_bound},
      {11, "bottleneck swap", 600, bottleneck},
      {12, "forward complexity", 60, complexity},
  };
  std::set<int> only;
  for (int a = 1; a < argc; ++a) only.insert(std::atoi(argv[a]));

  int failures = 0;
  for (const Criterion& c : criteria) {
    if (!only.empty() && !only.count(c.id)) continue;
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double elapsed = seconds_since(t0);
    const bool in_time = elapsed < c.limit_seconds;
    const bool pass = o.pass && in_time;
    if (!pass) ++failures;
    std::printf("[%s] %2d %s: %s (%.1fs, limit %.0fs%s)\n", pass ? "PASS" : "FAIL", c.id, c.name, o.detail.c_str(),
                elapsed, c.limit_seconds, in_time ? "" : ", OVER TIME");
    std::fflush(stdout);
  }
  return failures == 0 ? 0 : 1;
}
