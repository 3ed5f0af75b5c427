#pragma once

#include "gbn/diffarray/ops.hpp"

#include <random>
#include <string>

namespace gbn {

/// Glorot-uniform matrix, limit sqrt(6 / (fan_in + fan_out)).
Matrix glorot_uniform(Index fan_in, Index fan_out, std::mt19937_64& rng);

/// x W + b.
struct Linear {
  ParamRef weight;
  ParamRef bias;
  Index in = 0;
  Index out = 0;

  static Linear create(ParamStore& store, const std::string& name, Index in, Index out, std::mt19937_64& rng);
  Tensor operator()(Tape& tape, ParamStore& store, const Tensor& x) const;
  /// Plain evaluation without recording.
  Matrix eval(const ParamStore& store, const Matrix& x) const;
};

/// Linear -> activation -> Linear.
struct Mlp2 {
  Linear first;
  Linear second;
  Activation hidden_activation = Activation::Tanh;

  static Mlp2 create(ParamStore& store, const std::string& name, Index in, Index hidden, Index out,
                     Activation act, std::mt19937_64& rng);
  Tensor operator()(Tape& tape, ParamStore& store, const Tensor& x) const;
  Matrix eval(const ParamStore& store, const Matrix& x) const;
};

enum class TransformKind { Mlp, Linear, Identity };

TransformKind parse_transform(std::string_view name);
std::string_view to_string(TransformKind t);

/// Per-layer feature transform phi.
struct Transform {
  TransformKind kind = TransformKind::Mlp;
  Mlp2 mlp;     // kind == Mlp
  Linear linear;  // kind == Linear

  Tensor operator()(Tape& tape, ParamStore& store, const Tensor& x) const;
  Matrix eval(const ParamStore& store, const Matrix& x) const;
};

}  // namespace gbn
