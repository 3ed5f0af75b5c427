#pragma once

#include "gbn/bench/synth.hpp"
#include "gbn/model/model.hpp"
#include "gbn/train/adam.hpp"

#include <json.hpp>

#include <cstdint>
#include <filesystem>
#include <functional>
#include <span>
#include <string>
#include <vector>

namespace gbn {

enum class TaskKind { Transfer, Classification, Bottleneck };

TaskKind parse_task(std::string_view name);
std::string_view to_string(TaskKind t);

struct TrainConfig {
  TaskKind task = TaskKind::Transfer;
  Index n_layers = 2;
  Index hid_dim = 64;
  Activation activation = Activation::Tanh;
  TransformKind transform = TransformKind::Mlp;
  double dropout = 0.0;
  NormKind norm = NormKind::None;
  double lr = 1e-3;
  double weight_decay = 0.0;
  Index epochs = 100;
  std::uint64_t seed = 0;
  Index patience = 100;
  Index batch_graphs = 32;  // graphs per optimisation step (transfer, bottleneck)

  void validate() const;
};

nlohmann::json to_json(const TrainConfig& cfg);

ModelConfig make_model_config(const TrainConfig& cfg, ModelKind kind, Index in_dim, Index out_dim);

struct EpochMetrics {
  Index epoch = 0;
  double train_loss = 0.0;
  double val_metric = 0.0;
  double test_metric = 0.0;
};

struct RunReport {
  std::vector<EpochMetrics> history;
  Index best_epoch = 0;
  double best_val = 0.0;
  double final_test = 0.0;  // at the restored best epoch
  double wall_seconds = 0.0;
  std::vector<LayerSummary> trace;  // on the evaluation inputs, best weights

  Index epochs_run() const { return static_cast<Index>(history.size()); }
};

struct TrainResult {
  RunReport report;
  Model model;
};

/// Masked-MSE regression on the source/target rows. Validation and test
/// metrics are MSE over whole splits (lower is better). Enforces depth == n.
TrainResult train_transfer(const TrainConfig& cfg, const TransferSplits& data, ModelKind kind);

/// Cross-entropy node classification, early stopping on validation accuracy.
TrainResult train_classify(const TrainConfig& cfg, ModelKind kind, const Graph& g, const Matrix& features,
                           std::span<const int> labels, const NodeSplit& split);

/// Swap regression on bottleneck instances; metrics are mean absolute error
/// over the clique rows.
TrainResult train_bottleneck(const TrainConfig& cfg, ModelKind kind, const std::vector<BottleneckCase>& train,
                             const std::vector<BottleneckCase>& val, const std::vector<BottleneckCase>& test);

/// Mean absolute swap error of a model over bottleneck instances.
double bottleneck_error(Model& model, const std::vector<BottleneckCase>& cases);

/// Masked MSE averaged over a transfer split.
double transfer_mse(Model& model, const TransferDataset& ds);

double accuracy(const Matrix& logits, std::span<const int> labels, const std::vector<Index>& nodes);

// ---- probes ------------------------------------------------------------------------

struct JacobianProbe {
  Matrix block;        // d x d, d x_i^(K) / d x_j^(0)
  double norm = 0.0;   // spectral norm of the block
  double bound = 0.0;  // (sum_{k=0}^K T^k)_ij
  double ratio = 0.0;  // norm / bound (0 when bound == 0)
};

/// Jacobian of X^(K)_i with respect to the embedding row X^(0)_j, one backward
/// pass per output coordinate. `x0` is the embedding (n x hid_dim). With
/// `frozen`, GBN coefficients and indicator are evaluated once at X^(0).
JacobianProbe jacobian_probe(Model& model, const GraphContext& ctx, const Matrix& x0, Index i, Index j, Index K,
                             bool frozen = true, const ForwardOptions& base = {});

/// Propagation operator T the bound is taken over: DinvU + DinvV at the
/// coefficients of X^(0) for GBN, I - dt L for GCN.
Matrix bound_operator(Model& model, const GraphContext& ctx, const Matrix& x0, const ForwardOptions& base = {});

/// (sum_{k=0}^K T^k) for K = 0..K_max.
std::vector<Matrix> bound_series(const Matrix& T, Index K_max);

/// Dirichlet energy of X^(k), k = 1..K_max, starting from raw input `x0`.
std::vector<double> energy_curve(Model& model, const GraphContext& ctx, const Matrix& x0, Index K_max,
                                 const ForwardOptions& base = {});

// ---- reporting -------------------------------------------------------------------

std::string config_hash(const nlohmann::json& config);

void write_metrics_csv(const std::filesystem::path& path, const RunReport& report);

struct Summary {
  double mean = 0.0;
  double std = 0.0;  // population standard deviation
  std::vector<std::uint64_t> seeds;
  std::vector<double> values;
  std::string config_hash;
};

Summary summarize(const std::vector<double>& values, const std::vector<std::uint64_t>& seeds,
                  const nlohmann::json& config);
nlohmann::json to_json(const Summary& s);

/// Runs fn(k) for k in [0, count) on up to `threads` workers.
void parallel_for(Index count, Index threads, const std::function<void(Index)>& fn);

/// Worker cap from GBN_THREADS (default: hardware concurrency, at least 1).
Index worker_threads();

}  // namespace gbn
