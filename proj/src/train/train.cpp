#include "gbn/train/train.hpp"

#include "gbn/core/rng.hpp"

#include <Eigen/SVD>

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <exception>
#include <fstream>
#include <map>
#include <memory>
#include <mutex>
#include <numeric>
#include <stdexcept>
#include <thread>

namespace gbn {

TaskKind parse_task(std::string_view name) {
  if (name == "transfer") return TaskKind::Transfer;
  if (name == "classification" || name == "classify") return TaskKind::Classification;
  if (name == "bottleneck") return TaskKind::Bottleneck;
  throw std::invalid_argument("unknown task '" + std::string(name) + "'");
}

std::string_view to_string(TaskKind t) {
  switch (t) {
    case TaskKind::Transfer: return "transfer";
    case TaskKind::Classification: return "classification";
    case TaskKind::Bottleneck: return "bottleneck";
  }
  return "?";
}

void TrainConfig::validate() const {
  if (!(lr > 0.0)) throw std::invalid_argument("lr must be > 0");
  if (!(dropout >= 0.0 && dropout < 1.0)) throw std::invalid_argument("dropout must lie in [0, 1)");
  if (!(weight_decay >= 0.0)) throw std::invalid_argument("w_decay must be >= 0");
  if (epochs < 1) throw std::invalid_argument("epochs must be >= 1");
  if (n_layers < 1) throw std::invalid_argument("n_layers must be >= 1");
  if (hid_dim < 1) throw std::invalid_argument("hid_dim must be >= 1");
  if (patience < 1) throw std::invalid_argument("patience must be >= 1");
  if (batch_graphs < 1) throw std::invalid_argument("batch_graphs must be >= 1");
}

nlohmann::json to_json(const TrainConfig& cfg) {
  return {{"task", to_string(cfg.task)},
          {"n_layers", cfg.n_layers},
          {"hid_dim", cfg.hid_dim},
          {"activation", to_string(cfg.activation)},
          {"transform", to_string(cfg.transform)},
          {"dropout", cfg.dropout},
          {"norm", to_string(cfg.norm)},
          {"lr", cfg.lr},
          {"w_decay", cfg.weight_decay},
          {"epochs", cfg.epochs},
          {"seed", cfg.seed},
          {"patience", cfg.patience},
          {"batch_graphs", cfg.batch_graphs}};
}

ModelConfig make_model_config(const TrainConfig& cfg, ModelKind kind, Index in_dim, Index out_dim) {
  ModelConfig mc;
  mc.kind = kind;
  mc.in_dim = in_dim;
  mc.hid_dim = cfg.hid_dim;
  mc.out_dim = out_dim;
  mc.layers = cfg.n_layers;
  mc.activation = cfg.activation;
  mc.transform = cfg.transform;
  mc.norm = cfg.norm;
  mc.dropout = cfg.dropout;
  return mc;
}

namespace {

using Clock = std::chrono::steady_clock;

struct BatchGraph {
  Graph graph;
  GraphContext ctx;
};

/// Block-diagonal copies of one topology, built once per batch size.
class BatchCache {
 public:
  explicit BatchCache(const Graph& base) : base_(&base) {}

  const GraphContext& get(Index copies) {
    auto& slot = cache_[copies];
    if (!slot) {
      slot = std::make_unique<BatchGraph>();
      slot->graph = replicate(*base_, copies);
      slot->ctx = make_context(slot->graph);
    }
    return slot->ctx;
  }

 private:
  const Graph* base_;
  std::map<Index, std::unique_ptr<BatchGraph>> cache_;
};

std::vector<Matrix> snapshot(const ParamStore& store) {
  std::vector<Matrix> values;
  values.reserve(store.size());
  for (const Parameter& p : store) values.push_back(p.value);
  return values;
}

void restore(ParamStore& store, const std::vector<Matrix>& values) {
  for (std::size_t i = 0; i < values.size(); ++i) store.at(i).value = values[i];
}

Matrix stack_rows(const std::vector<const Matrix*>& parts) {
  Index rows = 0;
  for (const Matrix* m : parts) rows += m->rows();
  Matrix out(rows, parts.front()->cols());
  Index r = 0;
  for (const Matrix* m : parts) {
    out.middleRows(r, m->rows()) = *m;
    r += m->rows();
  }
  return out;
}

std::vector<bool> repeat_mask(const std::vector<bool>& mask, Index copies) {
  std::vector<bool> out;
  out.reserve(mask.size() * static_cast<std::size_t>(copies));
  for (Index c = 0; c < copies; ++c) out.insert(out.end(), mask.begin(), mask.end());
  return out;
}

/// Graph-level regression dataset view shared by transfer and bottleneck training.
struct RegressionSet {
  const Graph* graph = nullptr;
  std::vector<const Matrix*> inputs;
  std::vector<const Matrix*> targets;
  std::vector<bool> mask;
  Index size() const { return static_cast<Index>(inputs.size()); }
};

/// Tracks the best validation score and decides when to stop.
struct EarlyStopper {
  EarlyStopper(bool lower, Index wait) : lower_is_better(lower), patience(wait) {}

  bool lower_is_better;
  Index patience;
  double best = 0.0;
  Index best_epoch = -1;
  std::vector<Matrix> best_params;

  bool improved(double metric) const {
    if (best_epoch < 0) return true;
    return lower_is_better ? metric < best : metric > best;
  }
  /// Returns false once patience is exhausted.
  bool update(Index epoch, double metric, const ParamStore& store) {
    if (improved(metric)) {
      best = metric;
      best_epoch = epoch;
      best_params = snapshot(store);
    }
    return epoch - best_epoch < patience;
  }
};

enum class RegressionMetric { Mse, Mae };

double masked_error(const Matrix& pred, const Matrix& target, const std::vector<bool>& mask, RegressionMetric m) {
  double total = 0.0;
  Index count = 0;
  for (Index i = 0; i < pred.rows(); ++i) {
    if (!mask[static_cast<std::size_t>(i)]) continue;
    for (Index c = 0; c < pred.cols(); ++c) {
      const double e = pred(i, c) - target(i, c);
      total += m == RegressionMetric::Mse ? e * e : std::abs(e);
      ++count;
    }
  }
  return count == 0 ? 0.0 : total / static_cast<double>(count);
}

double evaluate_regression(Model& model, BatchCache& cache, const RegressionSet& set, RegressionMetric metric,
                           Index chunk, std::vector<LayerSummary>* trace = nullptr) {
  double total = 0.0;
  for (Index start = 0; start < set.size(); start += chunk) {
    const Index count = std::min(chunk, set.size() - start);
    std::vector<const Matrix*> xs(set.inputs.begin() + start, set.inputs.begin() + start + count);
    std::vector<const Matrix*> ys(set.targets.begin() + start, set.targets.begin() + start + count);
    Tape tape;
    ForwardOptions opts;
    opts.record = trace != nullptr && start == 0;
    const auto res = model.forward(tape, cache.get(count), tape.constant(stack_rows(xs)), opts);
    if (opts.record) *trace = res.trace->layers;
    total += masked_error(res.output.value(), stack_rows(ys), repeat_mask(set.mask, count), metric) *
             static_cast<double>(count);
  }
  return total / static_cast<double>(set.size());
}

TrainResult train_regression(const TrainConfig& cfg, ModelKind kind, const RegressionSet& train,
                             const RegressionSet& val, const RegressionSet& test, RegressionMetric metric) {
  cfg.validate();
  const auto t0 = Clock::now();
  auto init_rng = rng_stream(cfg.seed, "init");
  auto shuffle_rng = rng_stream(cfg.seed, "data/shuffle");
  auto dropout_rng = rng_stream(cfg.seed, "dropout");
  const Index in_dim = train.inputs.front()->cols();
  const Index out_dim = train.targets.front()->cols();
  TrainResult result{RunReport{}, Model(make_model_config(cfg, kind, in_dim, out_dim), init_rng)};
  Model& model = result.model;
  Adam opt(model.params(), {cfg.lr, cfg.weight_decay});
  BatchCache cache(*train.graph);
  const Index eval_chunk = std::max<Index>(cfg.batch_graphs, 1);

  EarlyStopper stopper(true, cfg.patience);
  std::vector<Index> order(static_cast<std::size_t>(train.size()));
  std::iota(order.begin(), order.end(), Index{0});

  for (Index epoch = 1; epoch <= cfg.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), shuffle_rng);
    double loss_sum = 0.0;
    Index batches = 0;
    for (Index start = 0; start < train.size(); start += cfg.batch_graphs) {
      const Index count = std::min(cfg.batch_graphs, train.size() - start);
      std::vector<const Matrix*> xs, ys;
      for (Index k = start; k < start + count; ++k) {
        xs.push_back(train.inputs[static_cast<std::size_t>(order[static_cast<std::size_t>(k)])]);
        ys.push_back(train.targets[static_cast<std::size_t>(order[static_cast<std::size_t>(k)])]);
      }
      Tape tape;
      ForwardOptions fo;
      fo.training = true;
      fo.rng = &dropout_rng;
      const auto res = model.forward(tape, cache.get(count), tape.constant(stack_rows(xs)), fo);
      const Tensor loss = masked_mse(res.output, stack_rows(ys), repeat_mask(train.mask, count));
      model.params().zero_grad();
      tape.backward(loss);
      opt.step();
      loss_sum += loss.value()(0, 0);
      ++batches;
    }
    EpochMetrics em;
    em.epoch = epoch;
    em.train_loss = loss_sum / static_cast<double>(batches);
    em.val_metric = evaluate_regression(model, cache, val, metric, eval_chunk);
    em.test_metric = evaluate_regression(model, cache, test, metric, eval_chunk);
    result.report.history.push_back(em);
    if (!stopper.update(epoch, em.val_metric, model.params())) break;
  }

  restore(model.params(), stopper.best_params);
  result.report.best_epoch = stopper.best_epoch;
  result.report.best_val = stopper.best;
  result.report.final_test = evaluate_regression(model, cache, test, metric, eval_chunk, &result.report.trace);
  result.report.wall_seconds = std::chrono::duration<double>(Clock::now() - t0).count();
  return result;
}

RegressionSet transfer_view(const TransferDataset& ds) {
  RegressionSet set;
  set.graph = &ds.graph;
  set.mask = ds.mask;
  for (const Matrix& x : ds.features) {
    set.inputs.push_back(&x);
    set.targets.push_back(&ds.labels);
  }
  return set;
}

RegressionSet bottleneck_view(const std::vector<BottleneckCase>& cases) {
  if (cases.empty()) throw std::invalid_argument("bottleneck: empty instance list");
  RegressionSet set;
  set.graph = &cases.front().graph;
  set.mask = cases.front().swap_mask;
  for (const BottleneckCase& c : cases) {
    if (c.graph.node_count() != set.graph->node_count() || c.graph.edges() != set.graph->edges())
      throw std::invalid_argument("bottleneck: instances must share one topology");
    set.inputs.push_back(&c.features);
    set.targets.push_back(&c.targets);
  }
  return set;
}

}  // namespace

TrainResult train_transfer(const TrainConfig& cfg, const TransferSplits& data, ModelKind kind) {
  if (cfg.n_layers != data.train.distance) {
    throw std::invalid_argument("transfer: depth " + std::to_string(cfg.n_layers) + " must equal the distance n = " +
                                std::to_string(data.train.distance));
  }
  return train_regression(cfg, kind, transfer_view(data.train), transfer_view(data.val), transfer_view(data.test),
                          RegressionMetric::Mse);
}

TrainResult train_bottleneck(const TrainConfig& cfg, ModelKind kind, const std::vector<BottleneckCase>& train,
                             const std::vector<BottleneckCase>& val, const std::vector<BottleneckCase>& test) {
  return train_regression(cfg, kind, bottleneck_view(train), bottleneck_view(val), bottleneck_view(test),
                          RegressionMetric::Mae);
}

double transfer_mse(Model& model, const TransferDataset& ds) {
  BatchCache cache(ds.graph);
  return evaluate_regression(model, cache, transfer_view(ds), RegressionMetric::Mse, 100);
}

double bottleneck_error(Model& model, const std::vector<BottleneckCase>& cases) {
  const RegressionSet set = bottleneck_view(cases);
  BatchCache cache(*set.graph);
  return evaluate_regression(model, cache, set, RegressionMetric::Mae, 100);
}

double accuracy(const Matrix& logits, std::span<const int> labels, const std::vector<Index>& nodes) {
  if (nodes.empty()) return 0.0;
  Index correct = 0;
  for (Index i : nodes) {
    Index arg = 0;
    logits.row(i).maxCoeff(&arg);  // first maximum, i.e. lowest class index on ties
    if (arg == labels[static_cast<std::size_t>(i)]) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(nodes.size());
}

TrainResult train_classify(const TrainConfig& cfg, ModelKind kind, const Graph& g, const Matrix& features,
                           std::span<const int> labels, const NodeSplit& split) {
  cfg.validate();
  const Index n = g.node_count();
  if (features.rows() != n || static_cast<Index>(labels.size()) != n)
    throw DimensionError("classify: features/labels do not match the graph");
  if (split.train.empty() || split.val.empty() || split.test.empty())
    throw std::invalid_argument("classify: split must have non-empty train/val/test parts");
  const int classes = *std::max_element(labels.begin(), labels.end()) + 1;

  const auto t0 = Clock::now();
  auto init_rng = rng_stream(cfg.seed, "init");
  auto dropout_rng = rng_stream(cfg.seed, "dropout");
  TrainResult result{RunReport{}, Model(make_model_config(cfg, kind, features.cols(), classes), init_rng)};
  Model& model = result.model;
  Adam opt(model.params(), {cfg.lr, cfg.weight_decay});
  const GraphContext ctx = make_context(g);
  std::vector<bool> train_mask(static_cast<std::size_t>(n), false);
  for (Index i : split.train) train_mask[static_cast<std::size_t>(i)] = true;

  auto evaluate = [&](bool record) {
    Tape tape;
    ForwardOptions fo;
    fo.record = record;
    auto res = model.forward(tape, ctx, tape.constant(features), fo);
    return std::make_pair(res.output.value(), res.trace ? res.trace->layers : std::vector<LayerSummary>{});
  };

  EarlyStopper stopper(false, cfg.patience);
  for (Index epoch = 1; epoch <= cfg.epochs; ++epoch) {
    Tape tape;
    ForwardOptions fo;
    fo.training = true;
    fo.rng = &dropout_rng;
    const auto res = model.forward(tape, ctx, tape.constant(features), fo);
    const Tensor loss = cross_entropy(res.output, labels, train_mask);
    model.params().zero_grad();
    tape.backward(loss);
    opt.step();

    const Matrix logits = evaluate(false).first;
    EpochMetrics em;
    em.epoch = epoch;
    em.train_loss = loss.value()(0, 0);
    em.val_metric = accuracy(logits, labels, split.val);
    em.test_metric = accuracy(logits, labels, split.test);
    result.report.history.push_back(em);
    if (!stopper.update(epoch, em.val_metric, model.params())) break;
  }
  restore(model.params(), stopper.best_params);
  auto [logits, trace] = evaluate(true);
  result.report.best_epoch = stopper.best_epoch;
  result.report.best_val = stopper.best;
  result.report.final_test = accuracy(logits, labels, split.test);
  result.report.trace = std::move(trace);
  result.report.wall_seconds = std::chrono::duration<double>(Clock::now() - t0).count();
  return result;
}

// ---- probes ------------------------------------------------------------------------

JacobianProbe jacobian_probe(Model& model, const GraphContext& ctx, const Matrix& x0, Index i, Index j, Index K,
                             bool frozen, const ForwardOptions& base) {
  const Index n = ctx.graph->node_count();
  if (i < 0 || i >= n || j < 0 || j >= n) throw std::out_of_range("jacobian_probe: node index out of range");
  Tape tape;
  const Tensor x = tape.leaf(x0);
  ForwardOptions opts = base;
  opts.training = false;
  opts.record = false;
  opts.freeze_coefficients = frozen && model.config().kind == ModelKind::Gbn;
  opts.max_layers = K;
  const ForwardResult res = model.propagate(tape, ctx, x, opts);

  const Index d = res.hidden.cols();
  JacobianProbe probe;
  probe.block = Matrix::Zero(d, x0.cols());
  for (Index c = 0; c < d; ++c) {
    tape.zero_grad();
    tape.backward(pick(res.hidden, i, c));
    if (x.has_grad()) probe.block.row(c) = x.grad().row(j);
  }
  model.params().zero_grad();
  const Eigen::MatrixXd block = probe.block;
  probe.norm = Eigen::JacobiSVD<Eigen::MatrixXd>(block).singularValues()(0);

  const std::vector<Matrix> series = bound_series(bound_operator(model, ctx, x0, base), K);
  probe.bound = series.back()(i, j);
  probe.ratio = probe.bound > 0.0 ? probe.norm / probe.bound : 0.0;
  return probe;
}

Matrix bound_operator(Model& model, const GraphContext& ctx, const Matrix& x0, const ForwardOptions& base) {
  const Graph& g = *ctx.graph;
  if (model.config().kind == ModelKind::Gcn) {
    return model.config().dt == 1.0 ? ctx.gcn_shift.dense() : ctx.ops.gcn_shift(model.config().dt).dense();
  }
  Tape tape;
  const Tensor x = tape.constant(x0);
  const Vector ind = base.indicator ? *base.indicator : Vector(model.indicator(tape, x).value().col(0));
  const Coefficients c = model.coefficients(tape, 0, x, base);
  const Vector ratio = (c.beta.value().col(0).array() / c.alpha.value().col(0).array()).matrix();
  return propagators(g, make_partition(g, ind, ratio)).jacobi_operator().dense();
}

std::vector<Matrix> bound_series(const Matrix& T, Index K_max) {
  if (T.rows() != T.cols()) throw DimensionError("bound_series: operator must be square");
  std::vector<Matrix> out;
  Matrix power = Matrix::Identity(T.rows(), T.cols());
  Matrix total = power;
  out.push_back(total);
  for (Index k = 1; k <= K_max; ++k) {
    power = (T * power).eval();
    total += power;
    out.push_back(total);
  }
  return out;
}

std::vector<double> energy_curve(Model& model, const GraphContext& ctx, const Matrix& x0, Index K_max,
                                 const ForwardOptions& base) {
  Tape tape;
  ForwardOptions opts = base;
  opts.record = true;
  opts.training = false;
  opts.max_layers = K_max;
  const ForwardResult res = model.forward(tape, ctx, tape.constant(x0), opts);
  std::vector<double> energies;
  for (const LayerSummary& s : res.trace->layers) energies.push_back(s.energy);
  return energies;
}

// ---- reporting -------------------------------------------------------------------

std::string config_hash(const nlohmann::json& config) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a(config.dump())));
  return buf;
}

void write_metrics_csv(const std::filesystem::path& path, const RunReport& report) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << "epoch,train_loss,val_metric,test_metric\n";
  char line[160];
  for (const EpochMetrics& m : report.history) {
    std::snprintf(line, sizeof line, "%lld,%.17g,%.17g,%.17g\n", static_cast<long long>(m.epoch), m.train_loss,
                  m.val_metric, m.test_metric);
    out << line;
  }
}

Summary summarize(const std::vector<double>& values, const std::vector<std::uint64_t>& seeds,
                  const nlohmann::json& config) {
  if (values.empty()) throw std::invalid_argument("summarize: no values");
  Summary s;
  s.values = values;
  s.seeds = seeds;
  s.mean = std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(values.size());
  double var = 0.0;
  for (double v : values) var += (v - s.mean) * (v - s.mean);
  s.std = std::sqrt(var / static_cast<double>(values.size()));
  s.config_hash = config_hash(config);
  return s;
}

nlohmann::json to_json(const Summary& s) {
  return {{"mean", s.mean}, {"std", s.std}, {"seeds", s.seeds}, {"values", s.values}, {"config_hash", s.config_hash}};
}

void parallel_for(Index count, Index threads, const std::function<void(Index)>& fn) {
  threads = std::max<Index>(1, std::min(threads, count));
  if (threads == 1) {
    for (Index k = 0; k < count; ++k) fn(k);
    return;
  }
  std::atomic<Index> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  std::vector<std::thread> pool;
  for (Index t = 0; t < threads; ++t) {
    pool.emplace_back([&] {
      for (Index k = next++; k < count; k = next++) {
        try {
          fn(k);
        } catch (...) {
          std::lock_guard lock(failure_mutex);
          if (!failure) failure = std::current_exception();
        }
      }
    });
  }
  for (auto& th : pool) th.join();
  if (failure) std::rethrow_exception(failure);
}

Index worker_threads() {
  if (const char* env = std::getenv("GBN_THREADS")) {
    const long v = std::strtol(env, nullptr, 10);
    if (v >= 1) return v;
  }
  return std::max<Index>(1, static_cast<Index>(std::thread::hardware_concurrency()));
}

}  // namespace gbn
