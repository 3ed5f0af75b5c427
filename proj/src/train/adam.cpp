#include "gbn/train/adam.hpp"

#include <cmath>
#include <stdexcept>

namespace gbn {

void adam_step(Matrix& param, const Matrix& grad, AdamState& state, const AdamOptions& opts) {
  if (grad.rows() != param.rows() || grad.cols() != param.cols()) {
    throw DimensionError("adam_step: gradient " + shape_string(grad) + " vs parameter " + shape_string(param));
  }
  if (state.m.size() == 0) {
    state.m = Matrix::Zero(param.rows(), param.cols());
    state.v = Matrix::Zero(param.rows(), param.cols());
  }
  ++state.step;
  if (opts.weight_decay != 0.0) param *= 1.0 - opts.lr * opts.weight_decay;
  state.m = opts.beta1 * state.m + (1.0 - opts.beta1) * grad;
  state.v = opts.beta2 * state.v + (1.0 - opts.beta2) * grad.cwiseAbs2();
  const double c1 = 1.0 - std::pow(opts.beta1, static_cast<double>(state.step));
  const double c2 = 1.0 - std::pow(opts.beta2, static_cast<double>(state.step));
  param.array() -= opts.lr * (state.m.array() / c1) / ((state.v.array() / c2).sqrt() + opts.eps);
}

Adam::Adam(ParamStore& store, AdamOptions opts) : store_(&store), opts_(opts), states_(store.size()) {
  if (!(opts.lr > 0.0)) throw std::invalid_argument("Adam: learning rate must be positive");
}

void Adam::step() {
  if (states_.size() != store_->size()) throw std::logic_error("Adam: parameter store changed size");
  for (std::size_t i = 0; i < store_->size(); ++i) {
    Parameter& p = store_->at(i);
    adam_step(p.value, p.grad, states_[i], opts_);
  }
}

}  // namespace gbn
