#pragma once

#include "gbn/graph/graph.hpp"
#include "gbn/graph/partition.hpp"
#include "gbn/model/layers.hpp"

#include <json.hpp>

#include <filesystem>
#include <optional>
#include <random>
#include <vector>

namespace gbn {

inline constexpr double kAlphaFloor = 1e-4;

enum class ModelKind { Gbn, Gcn };
enum class NormPlacement { PrePropagation, PostPropagation };

ModelKind parse_model_kind(std::string_view name);
std::string_view to_string(ModelKind k);

struct ModelConfig {
  ModelKind kind = ModelKind::Gbn;
  Index in_dim = 1;
  Index hid_dim = 64;
  Index out_dim = 1;
  Index layers = 2;
  Activation activation = Activation::Tanh;
  TransformKind transform = TransformKind::Mlp;
  NormKind norm = NormKind::None;
  NormPlacement norm_placement = NormPlacement::PrePropagation;
  double dropout = 0.0;
  double dt = 1.0;  // GCN step, I - dt L
};

/// Everything a forward pass needs that depends only on the graph.
struct GraphContext {
  const Graph* graph = nullptr;
  GraphOperators ops;
  NormalizedLaplacian laplacian;
  SparsePropagator gcn_shift;  // I - L
};

GraphContext make_context(const Graph& g);

struct LayerSummary {
  double energy = 0.0;
  double indicator_mean = 0.0;
  double alpha_mean = 0.0;
  double beta_mean = 0.0;
  double gamma_norm = 0.0;  // mean row 2-norm of gamma
};

struct LayerTrace {
  std::vector<Matrix> representations;  // X^(1) .. X^(K)
  std::vector<LayerSummary> layers;
  std::size_t size() const { return layers.size(); }
};

struct Coefficients {
  Tensor alpha;  // n x 1, > 0
  Tensor beta;   // n x 1, >= 0
  Tensor gamma;  // n x d
};

struct ForwardOptions {
  bool training = false;
  bool record = false;
  std::mt19937_64* rng = nullptr;  // dropout stream, required when training with dropout
  std::optional<Vector> indicator;  // replaces the indicator network
  bool drop_beta = false;           // beta := 0
  bool drop_gamma = false;          // gamma := 0
  /// Coefficients and indicator evaluated once from X^(0) and detached, so
  /// every layer applies the same fixed operator.
  bool freeze_coefficients = false;
  /// Run only the first `max_layers` layers (all when unset).
  std::optional<Index> max_layers;
};

struct ForwardResult {
  Tensor output;     // readout, n x out_dim
  Tensor embedding;  // X^(0)
  Tensor hidden;     // X^(K)
  std::optional<LayerTrace> trace;
};

struct LayerParams {
  Transform phi;
  Mlp2 alpha;
  Mlp2 beta;
  Mlp2 gamma;
  ParamRef norm_gain;
  ParamRef norm_bias;
};

/// GBN (or GCN when kind == Gcn) stack: encoder, K propagation layers, readout.
class Model {
 public:
  Model(ModelConfig cfg, std::uint64_t init_seed);
  Model(ModelConfig cfg, std::mt19937_64& init_rng);

  const ModelConfig& config() const { return cfg_; }
  ParamStore& params() { return store_; }
  const ParamStore& params() const { return store_; }
  const std::vector<LayerParams>& layer_params() const { return layers_; }

  ForwardResult forward(Tape& tape, const GraphContext& ctx, const Tensor& x0, const ForwardOptions& opts = {});

  /// Layers only, starting from an already-encoded X^(0).
  ForwardResult propagate(Tape& tape, const GraphContext& ctx, const Tensor& x, const ForwardOptions& opts = {});

  /// I = sigmoid(indicator_net(X^(0))), n x 1.
  Tensor indicator(Tape& tape, const Tensor& embedding);
  Coefficients coefficients(Tape& tape, Index layer, const Tensor& x, const ForwardOptions& opts);

  /// GBN with the same phi / norm / encoder / readout weights read as a GCN.
  ForwardResult forward_as_gcn(Tape& tape, const GraphContext& ctx, const Tensor& x0, const ForwardOptions& opts = {});

  nlohmann::json to_json() const;
  static Model from_json(const nlohmann::json& j);
  void save(const std::filesystem::path& path) const;
  static Model load(const std::filesystem::path& path);

 private:
  Model() = default;
  void build(std::mt19937_64& rng);
  Tensor apply_norm(Tape& tape, Index layer, const Tensor& h, const ForwardOptions& opts);
  Tensor transform(Tape& tape, Index layer, const Tensor& x, const ForwardOptions& opts);
  ForwardResult run(Tape& tape, const GraphContext& ctx, const Tensor& x, ModelKind kind, const ForwardOptions& opts);

  ModelConfig cfg_;
  ParamStore store_;
  Linear encoder_;
  Mlp2 indicator_net_;
  std::vector<LayerParams> layers_;
  Linear readout_;
};

nlohmann::json to_json(const ModelConfig& cfg);
ModelConfig model_config_from_json(const nlohmann::json& j);

/// sigma((I - dt L) x w).
Tensor gcn_layer(const NormalizedLaplacian& L, const Tensor& x, const Tensor& w, double dt = 1.0,
                 Activation act = Activation::Identity);

/// Taped GBN propagation for given h = phi(x):
///   y = sigma(1/2 (DinvU + DinvV) h) + gamma
/// with the hat degrees, DinvU and DinvV assembled from the indicator and
/// p = beta / alpha inside the tape.
Tensor gbn_propagate(const GraphContext& ctx, const Tensor& h, const Tensor& indicator, const Tensor& alpha,
                     const Tensor& beta, const Tensor* gamma, Activation act);

/// Reference evaluations of the same layer from precomputed quantities.
/// Matrix form: sparse Jacobi operator applied to h.
Matrix gbn_layer_matrix_form(const Graph& g, const Vector& indicator, const Vector& ratio, const Matrix& h,
                             const Matrix& gamma, Activation act);
/// Element-by-element neighbour sums.
Matrix gbn_layer_elementwise(const Graph& g, const Vector& indicator, const Vector& ratio, const Matrix& h,
                             const Matrix& gamma, Activation act);

}  // namespace gbn
