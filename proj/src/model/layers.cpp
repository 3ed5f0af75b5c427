#include "gbn/model/layers.hpp"

#include <cmath>
#include <stdexcept>

namespace gbn {

Matrix glorot_uniform(Index fan_in, Index fan_out, std::mt19937_64& rng) {
  const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
  std::uniform_real_distribution<double> dist(-limit, limit);
  Matrix w(fan_in, fan_out);
  for (Index i = 0; i < w.rows(); ++i)
    for (Index j = 0; j < w.cols(); ++j) w(i, j) = dist(rng);
  return w;
}

Linear Linear::create(ParamStore& store, const std::string& name, Index in, Index out, std::mt19937_64& rng) {
  if (in < 1 || out < 1) throw std::invalid_argument("Linear " + name + ": dimensions must be positive");
  Linear l;
  l.in = in;
  l.out = out;
  l.weight = store.add(name + ".weight", glorot_uniform(in, out, rng));
  l.bias = store.add(name + ".bias", Matrix::Zero(1, out));
  return l;
}

Tensor Linear::operator()(Tape& tape, ParamStore& store, const Tensor& x) const {
  return add_bias(matmul(x, tape.param(store, weight)), tape.param(store, bias));
}

Matrix Linear::eval(const ParamStore& store, const Matrix& x) const {
  if (x.cols() != in) throw DimensionError("Linear: input " + shape_string(x) + " vs in_dim " + std::to_string(in));
  Matrix y = x * store[weight].value;
  y.rowwise() += store[bias].value.row(0);
  return y;
}

Mlp2 Mlp2::create(ParamStore& store, const std::string& name, Index in, Index hidden, Index out, Activation act,
                  std::mt19937_64& rng) {
  Mlp2 m;
  m.first = Linear::create(store, name + ".0", in, hidden, rng);
  m.second = Linear::create(store, name + ".1", hidden, out, rng);
  m.hidden_activation = act;
  return m;
}

Tensor Mlp2::operator()(Tape& tape, ParamStore& store, const Tensor& x) const {
  return second(tape, store, activation(hidden_activation, first(tape, store, x)));
}

Matrix Mlp2::eval(const ParamStore& store, const Matrix& x) const {
  const Activation act = hidden_activation;
  const Matrix h = first.eval(store, x).unaryExpr([act](double v) { return activate(act, v); });
  return second.eval(store, h);
}

TransformKind parse_transform(std::string_view name) {
  if (name == "mlp") return TransformKind::Mlp;
  if (name == "linear") return TransformKind::Linear;
  if (name == "identity") return TransformKind::Identity;
  throw std::invalid_argument("unknown transform '" + std::string(name) + "' (expected mlp, linear, identity)");
}

std::string_view to_string(TransformKind t) {
  switch (t) {
    case TransformKind::Mlp: return "mlp";
    case TransformKind::Linear: return "linear";
    case TransformKind::Identity: return "identity";
  }
  return "?";
}

Tensor Transform::operator()(Tape& tape, ParamStore& store, const Tensor& x) const {
  switch (kind) {
    case TransformKind::Mlp: return mlp(tape, store, x);
    case TransformKind::Linear: return linear(tape, store, x);
    case TransformKind::Identity: return x;
  }
  return x;
}

Matrix Transform::eval(const ParamStore& store, const Matrix& x) const {
  switch (kind) {
    case TransformKind::Mlp: return mlp.eval(store, x);
    case TransformKind::Linear: return linear.eval(store, x);
    case TransformKind::Identity: return x;
  }
  return x;
}

}  // namespace gbn
