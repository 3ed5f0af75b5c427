#include "gbn/model/model.hpp"

#include "gbn/spectral/heat.hpp"

#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace gbn {

namespace {

// softplus^{-1}(v): initial coefficient-net biases.
double inverse_softplus(double v) { return std::log(std::expm1(v)); }

const double kAlphaInitBias = inverse_softplus(1.0 - kAlphaFloor);  // alpha ~ 1
const double kBetaInitBias = inverse_softplus(0.5);                 // beta ~ 0.5

NormPlacement parse_placement(std::string_view s) {
  if (s == "pre") return NormPlacement::PrePropagation;
  if (s == "post") return NormPlacement::PostPropagation;
  throw std::invalid_argument("unknown norm placement '" + std::string(s) + "' (expected pre, post)");
}

std::string_view to_string(NormPlacement p) { return p == NormPlacement::PrePropagation ? "pre" : "post"; }

double mean_row_norm(const Matrix& m) {
  if (m.rows() == 0) return 0.0;
  return m.rowwise().norm().mean();
}

}  // namespace

ModelKind parse_model_kind(std::string_view name) {
  if (name == "gbn") return ModelKind::Gbn;
  if (name == "gcn") return ModelKind::Gcn;
  throw std::invalid_argument("unknown model '" + std::string(name) + "' (expected gbn, gcn)");
}

std::string_view to_string(ModelKind k) { return k == ModelKind::Gbn ? "gbn" : "gcn"; }

GraphContext make_context(const Graph& g) {
  GraphContext ctx;
  ctx.graph = &g;
  ctx.ops = make_operators(g);
  ctx.laplacian = normalized_laplacian(g);
  ctx.gcn_shift = ctx.ops.gcn_shift(1.0);
  return ctx;
}

// ---- construction ----------------------------------------------------------------

Model::Model(ModelConfig cfg, std::uint64_t init_seed) : cfg_(cfg) {
  std::mt19937_64 rng(init_seed);
  build(rng);
}

Model::Model(ModelConfig cfg, std::mt19937_64& init_rng) : cfg_(cfg) { build(init_rng); }

void Model::build(std::mt19937_64& rng) {
  if (cfg_.layers < 1) throw std::invalid_argument("model needs at least one layer");
  if (cfg_.in_dim < 1 || cfg_.hid_dim < 1 || cfg_.out_dim < 1)
    throw std::invalid_argument("model dimensions must be positive");
  if (!(cfg_.dropout >= 0.0 && cfg_.dropout < 1.0)) throw std::invalid_argument("dropout must lie in [0, 1)");

  const Index d = cfg_.hid_dim;
  const Activation act = cfg_.activation;
  encoder_ = Linear::create(store_, "encoder", cfg_.in_dim, d, rng);
  if (cfg_.kind == ModelKind::Gbn) indicator_net_ = Mlp2::create(store_, "indicator", d, d, 1, act, rng);

  layers_.resize(static_cast<std::size_t>(cfg_.layers));
  for (Index k = 0; k < cfg_.layers; ++k) {
    LayerParams& lp = layers_[static_cast<std::size_t>(k)];
    const std::string prefix = "layer" + std::to_string(k);
    lp.phi.kind = cfg_.transform;
    if (cfg_.transform == TransformKind::Mlp) lp.phi.mlp = Mlp2::create(store_, prefix + ".phi", d, d, d, act, rng);
    if (cfg_.transform == TransformKind::Linear) lp.phi.linear = Linear::create(store_, prefix + ".phi", d, d, rng);
    if (cfg_.kind == ModelKind::Gbn) {
      lp.alpha = Mlp2::create(store_, prefix + ".alpha", d, d, 1, act, rng);
      lp.beta = Mlp2::create(store_, prefix + ".beta", d, d, 1, act, rng);
      lp.gamma = Mlp2::create(store_, prefix + ".gamma", d, d, d, act, rng);
      store_[lp.alpha.second.bias].value.setConstant(kAlphaInitBias);
      store_[lp.beta.second.bias].value.setConstant(kBetaInitBias);
    }
    if (cfg_.norm != NormKind::None) {
      lp.norm_gain = store_.add(prefix + ".norm.gain", Matrix::Ones(1, d));
      lp.norm_bias = store_.add(prefix + ".norm.bias", Matrix::Zero(1, d));
    }
  }
  readout_ = Linear::create(store_, "readout", d, cfg_.out_dim, rng);
}

// ---- forward ------------------------------------------------------------------------

Tensor Model::indicator(Tape& tape, const Tensor& embedding) {
  if (cfg_.kind != ModelKind::Gbn) throw std::logic_error("indicator: GCN models have no indicator network");
  return activation(Activation::Sigmoid, indicator_net_(tape, store_, embedding));
}

Coefficients Model::coefficients(Tape& tape, Index layer, const Tensor& x, const ForwardOptions& opts) {
  if (cfg_.kind != ModelKind::Gbn) throw std::logic_error("coefficients: GCN models have no coefficient networks");
  const LayerParams& lp = layers_.at(static_cast<std::size_t>(layer));
  Coefficients c;
  c.alpha = add_scalar(activation(Activation::Softplus, lp.alpha(tape, store_, x)), kAlphaFloor);
  c.beta = opts.drop_beta ? tape.constant(Matrix::Zero(x.rows(), 1))
                          : activation(Activation::Softplus, lp.beta(tape, store_, x));
  c.gamma = opts.drop_gamma ? tape.constant(Matrix::Zero(x.rows(), cfg_.hid_dim)) : lp.gamma(tape, store_, x);
  return c;
}

Tensor Model::apply_norm(Tape& tape, Index layer, const Tensor& h, const ForwardOptions&) {
  if (cfg_.norm == NormKind::None) return h;
  const LayerParams& lp = layers_.at(static_cast<std::size_t>(layer));
  return normalize(cfg_.norm, h, tape.param(store_, lp.norm_gain), tape.param(store_, lp.norm_bias));
}

Tensor Model::transform(Tape& tape, Index layer, const Tensor& x, const ForwardOptions& opts) {
  Tensor h = layers_.at(static_cast<std::size_t>(layer)).phi(tape, store_, x);
  if (cfg_.norm_placement == NormPlacement::PrePropagation) h = apply_norm(tape, layer, h, opts);
  if (opts.training && cfg_.dropout > 0.0) {
    if (!opts.rng) throw std::invalid_argument("forward: dropout in training mode needs an rng stream");
    h = dropout(h, cfg_.dropout, true, *opts.rng);
  }
  return h;
}

ForwardResult Model::run(Tape& tape, const GraphContext& ctx, const Tensor& x, ModelKind kind,
                         const ForwardOptions& opts) {
  if (!ctx.graph) throw std::invalid_argument("forward: empty graph context");
  const Index n = ctx.graph->node_count();
  if (x.rows() != n || x.cols() != cfg_.hid_dim) {
    throw DimensionError("forward: embedding " + shape_string(x.rows(), x.cols()) + " vs expected " +
                         shape_string(n, cfg_.hid_dim));
  }
  ForwardResult result;
  result.embedding = x;
  if (opts.record) result.trace.emplace();

  Tensor ind;
  Coefficients frozen;
  if (kind == ModelKind::Gbn) {
    const Tensor source = opts.freeze_coefficients ? detach(x) : x;
    if (opts.indicator) {
      if (opts.indicator->size() != n) throw DimensionError("forward: indicator override has wrong length");
      ind = tape.constant(*opts.indicator);
    } else {
      ind = indicator(tape, source);
    }
    if (opts.freeze_coefficients) {
      ind = detach(ind);
      frozen = coefficients(tape, 0, source, opts);
      frozen = {detach(frozen.alpha), detach(frozen.beta), detach(frozen.gamma)};
    }
  }
  const SparsePropagator shift = (kind == ModelKind::Gcn && cfg_.dt != 1.0) ? ctx.ops.gcn_shift(cfg_.dt) : ctx.gcn_shift;

  Index depth = cfg_.layers;
  if (opts.max_layers) {
    if (*opts.max_layers < 1 || *opts.max_layers > cfg_.layers)
      throw std::invalid_argument("forward: max_layers must lie in [1, " + std::to_string(cfg_.layers) + "]");
    depth = *opts.max_layers;
  }

  Tensor cur = x;
  for (Index k = 0; k < depth; ++k) {
    const Tensor h = transform(tape, k, cur, opts);
    Tensor y;
    LayerSummary summary;
    if (kind == ModelKind::Gcn) {
      y = activation(cfg_.activation, spmm(shift, h));
    } else {
      const Coefficients c = opts.freeze_coefficients ? frozen : coefficients(tape, k, cur, opts);
      y = gbn_propagate(ctx, h, ind, c.alpha, c.beta, &c.gamma, cfg_.activation);
      if (result.trace) {
        summary.indicator_mean = ind.value().mean();
        summary.alpha_mean = c.alpha.value().mean();
        summary.beta_mean = c.beta.value().mean();
        summary.gamma_norm = mean_row_norm(c.gamma.value());
      }
    }
    if (cfg_.norm_placement == NormPlacement::PostPropagation) y = apply_norm(tape, k, y, opts);
    cur = y;
    if (result.trace) {
      summary.energy = dirichlet_energy(ctx.laplacian, cur.value());
      result.trace->representations.push_back(cur.value());
      result.trace->layers.push_back(summary);
    }
  }
  result.hidden = cur;
  result.output = readout_(tape, store_, cur);
  return result;
}

ForwardResult Model::propagate(Tape& tape, const GraphContext& ctx, const Tensor& x, const ForwardOptions& opts) {
  return run(tape, ctx, x, cfg_.kind, opts);
}

ForwardResult Model::forward(Tape& tape, const GraphContext& ctx, const Tensor& x0, const ForwardOptions& opts) {
  return run(tape, ctx, encoder_(tape, store_, x0), cfg_.kind, opts);
}

ForwardResult Model::forward_as_gcn(Tape& tape, const GraphContext& ctx, const Tensor& x0,
                                    const ForwardOptions& opts) {
  return run(tape, ctx, encoder_(tape, store_, x0), ModelKind::Gcn, opts);
}

// ---- layer kernels ---------------------------------------------------------------

Tensor gcn_layer(const NormalizedLaplacian& L, const Tensor& x, const Tensor& w, double dt, Activation act) {
  if (L.matrix.rows() != x.rows()) {
    throw DimensionError("gcn_layer: Laplacian " + shape_string(L.matrix) + " vs features " +
                         shape_string(x.rows(), x.cols()));
  }
  SparseMatrix identity(L.matrix.rows(), L.matrix.cols());
  identity.setIdentity();
  const SparsePropagator shift = make_propagator(SparseMatrix(identity - dt * L.matrix), PropagatorTag::GcnShift, true);
  return activation(act, spmm(shift, matmul(x, w)));
}

Tensor gbn_propagate(const GraphContext& ctx, const Tensor& h, const Tensor& indicator, const Tensor& alpha,
                     const Tensor& beta, const Tensor* gamma, Activation act) {
  Tape& tape = h.tape();
  const Index n = ctx.ops.node_count;
  if (h.rows() != n || indicator.rows() != n || indicator.cols() != 1 || alpha.rows() != n || beta.rows() != n) {
    throw DimensionError("gbn_propagate: node axis mismatch (n = " + std::to_string(n) + ")");
  }
  const SparsePropagator& A = ctx.ops.adjacency;
  const Tensor deg = tape.constant(ctx.ops.degrees);
  const Tensor& I = indicator;

  // hat d = d (1 - I) + (2 I - 1) sum_{j~i} I_j
  const Tensor neighbour_mass = spmm(A, I);
  const Tensor hat = mul(deg, add_scalar(-I, 1.0)) + mul(add_scalar(scale(I, 2.0), -1.0), neighbour_mass);
  const Tensor s = inv_sqrt_guarded(hat, kHatDegreeFloor);

  const Tensor hs = row_scale(h, s);
  const Tensor u_term = row_scale(spmm(A, hs), mul(I, s));
  const Tensor p = div(beta, alpha);
  const Tensor row_factor = p + mul(add_scalar(-p, 1.0), I);  // p + (1 - p) I
  const Tensor v_term = row_scale(spmm(A, row_scale(hs, I)), mul(row_factor, s));

  Tensor y = activation(act, scale(u_term + v_term, 0.5));
  if (gamma) y = y + *gamma;
  return y;
}

Matrix gbn_layer_matrix_form(const Graph& g, const Vector& indicator, const Vector& ratio, const Matrix& h,
                             const Matrix& gamma, Activation act) {
  const BoundaryPartition part = make_partition(g, indicator, ratio);
  const SparsePropagator T = propagators(g, part).jacobi_operator();
  Matrix pre = 0.5 * (T.matrix() * h);
  return pre.unaryExpr([act](double v) { return activate(act, v); }) + gamma;
}

Matrix gbn_layer_elementwise(const Graph& g, const Vector& indicator, const Vector& ratio, const Matrix& h,
                             const Matrix& gamma, Activation act) {
  const Index n = g.node_count();
  if (indicator.size() != n || ratio.size() != n || h.rows() != n || gamma.rows() != n || gamma.cols() != h.cols())
    throw DimensionError("gbn_layer_elementwise: node axis mismatch");
  Vector s(n);
  for (Index i = 0; i < n; ++i) {
    double mass = 0.0;
    for (Index j : g.neighbors(i)) mass += indicator(j);
    const double hat = static_cast<double>(g.degree(i)) * (1.0 - indicator(i)) + (2.0 * indicator(i) - 1.0) * mass;
    s(i) = hat > kHatDegreeFloor ? 1.0 / std::sqrt(hat) : 0.0;
  }
  Matrix y(n, h.cols());
  for (Index i = 0; i < n; ++i) {
    Eigen::RowVectorXd all = Eigen::RowVectorXd::Zero(h.cols());
    Eigen::RowVectorXd inner = Eigen::RowVectorXd::Zero(h.cols());
    for (Index j : g.neighbors(i)) {
      all += h.row(j) * s(j);
      inner += indicator(j) * h.row(j) * s(j);
    }
    const double p = ratio(i);
    const Eigen::RowVectorXd pre =
        0.5 * (indicator(i) * s(i) * all + (p + (1.0 - p) * indicator(i)) * s(i) * inner);
    for (Index c = 0; c < h.cols(); ++c) y(i, c) = activate(act, pre(c)) + gamma(i, c);
  }
  return y;
}

// ---- checkpoints --------------------------------------------------------------------

nlohmann::json to_json(const ModelConfig& cfg) {
  return {{"kind", to_string(cfg.kind)},
          {"in_dim", cfg.in_dim},
          {"hid_dim", cfg.hid_dim},
          {"out_dim", cfg.out_dim},
          {"layers", cfg.layers},
          {"activation", to_string(cfg.activation)},
          {"transform", to_string(cfg.transform)},
          {"norm", to_string(cfg.norm)},
          {"norm_placement", to_string(cfg.norm_placement)},
          {"dropout", cfg.dropout},
          {"dt", cfg.dt}};
}

ModelConfig model_config_from_json(const nlohmann::json& j) {
  ModelConfig cfg;
  cfg.kind = parse_model_kind(j.at("kind").get<std::string>());
  cfg.in_dim = j.at("in_dim").get<Index>();
  cfg.hid_dim = j.at("hid_dim").get<Index>();
  cfg.out_dim = j.at("out_dim").get<Index>();
  cfg.layers = j.at("layers").get<Index>();
  cfg.activation = parse_activation(j.at("activation").get<std::string>());
  cfg.transform = parse_transform(j.at("transform").get<std::string>());
  cfg.norm = parse_norm(j.at("norm").get<std::string>());
  cfg.norm_placement = parse_placement(j.at("norm_placement").get<std::string>());
  cfg.dropout = j.at("dropout").get<double>();
  cfg.dt = j.at("dt").get<double>();
  return cfg;
}

nlohmann::json Model::to_json() const {
  nlohmann::json params = nlohmann::json::array();
  for (const Parameter& p : store_) {
    std::vector<double> data(p.value.data(), p.value.data() + p.value.size());
    params.push_back({{"name", p.name}, {"rows", p.value.rows()}, {"cols", p.value.cols()}, {"data", data}});
  }
  return {{"format", "gbn-checkpoint"}, {"version", 1}, {"config", gbn::to_json(cfg_)}, {"params", params}};
}

Model Model::from_json(const nlohmann::json& j) {
  if (j.value("format", "") != "gbn-checkpoint") throw std::invalid_argument("checkpoint: not a gbn checkpoint");
  if (j.value("version", 0) != 1) throw std::invalid_argument("checkpoint: unsupported version");
  Model m;
  m.cfg_ = model_config_from_json(j.at("config"));
  std::mt19937_64 rng(0);
  m.build(rng);
  const auto& params = j.at("params");
  if (params.size() != m.store_.size()) throw std::invalid_argument("checkpoint: parameter count mismatch");
  for (std::size_t i = 0; i < params.size(); ++i) {
    Parameter& p = m.store_.at(i);
    const auto& entry = params[i];
    if (entry.at("name").get<std::string>() != p.name)
      throw std::invalid_argument("checkpoint: expected parameter '" + p.name + "'");
    const Index rows = entry.at("rows").get<Index>();
    const Index cols = entry.at("cols").get<Index>();
    if (rows != p.value.rows() || cols != p.value.cols())
      throw DimensionError("checkpoint: parameter '" + p.name + "' has shape " + shape_string(rows, cols));
    const auto data = entry.at("data").get<std::vector<double>>();
    if (static_cast<Index>(data.size()) != rows * cols) throw std::invalid_argument("checkpoint: truncated data");
    std::copy(data.begin(), data.end(), p.value.data());
  }
  return m;
}

void Model::save(const std::filesystem::path& path) const {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write checkpoint " + path.string());
  out << to_json().dump();
}

Model Model::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read checkpoint " + path.string());
  return from_json(nlohmann::json::parse(in));
}

}  // namespace gbn
