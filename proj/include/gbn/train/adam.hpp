#pragma once

#include "gbn/diffarray/tape.hpp"

#include <vector>

namespace gbn {

struct AdamOptions {
  double lr = 1e-3;
  double weight_decay = 0.0;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

struct AdamState {
  Matrix m;
  Matrix v;
  long step = 0;
};

/// One Adam update with bias correction. Weight decay is decoupled: the
/// parameter is shrunk by (1 - lr * weight_decay) before the moment step.
void adam_step(Matrix& param, const Matrix& grad, AdamState& state, const AdamOptions& opts);

/// Adam over every parameter of a store.
class Adam {
 public:
  Adam(ParamStore& store, AdamOptions opts);

  void step();
  const AdamOptions& options() const { return opts_; }

 private:
  ParamStore* store_;
  AdamOptions opts_;
  std::vector<AdamState> states_;
};

}  // namespace gbn
