#include "gbn/diffarray/ops.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

namespace gbn {

namespace {

Tape& same_tape(const Tensor& a, const Tensor& b) {
  if (&a.tape() != &b.tape()) throw std::invalid_argument("operands live on different tapes");
  return a.tape();
}

void require_same_shape(const char* op, const Tensor& a, const Tensor& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw DimensionError(std::string(op) + ": shape mismatch " + shape_string(a.value()) + " vs " +
                         shape_string(b.value()));
  }
}

bool is_scalar(const Tensor& t) { return t.rows() == 1 && t.cols() == 1; }

constexpr double kSqrt2OverPi = 0.7978845608028654;  // sqrt(2/pi)
constexpr double kGeluCubic = 0.044715;

}  // namespace

// ---------------------------------------------------------------------------

bool SparsePropagator::all_finite() const {
  const SparseMatrix& m = *data;
  const double* v = m.valuePtr();
  for (Index k = 0; k < m.nonZeros(); ++k)
    if (!std::isfinite(v[k])) return false;
  return true;
}

SparsePropagator make_propagator(SparseMatrix matrix, PropagatorTag tag, bool symmetric) {
  matrix.makeCompressed();
  return SparsePropagator{std::make_shared<const SparseMatrix>(std::move(matrix)), tag, symmetric};
}

SparsePropagator make_propagator(Index rows, Index cols, const std::vector<Triplet>& entries,
                                 PropagatorTag tag, bool symmetric) {
  SparseMatrix m(rows, cols);
  m.setFromTriplets(entries.begin(), entries.end());
  return make_propagator(std::move(m), tag, symmetric);
}

// ---------------------------------------------------------------------------

Activation parse_activation(std::string_view name) {
  if (name == "identity" || name == "linear") return Activation::Identity;
  if (name == "tanh") return Activation::Tanh;
  if (name == "gelu") return Activation::Gelu;
  if (name == "relu") return Activation::Relu;
  if (name == "sigmoid") return Activation::Sigmoid;
  if (name == "softplus") return Activation::Softplus;
  throw std::invalid_argument("unknown activation '" + std::string(name) + "'");
}

std::string_view to_string(Activation a) {
  switch (a) {
    case Activation::Identity: return "identity";
    case Activation::Tanh: return "tanh";
    case Activation::Gelu: return "gelu";
    case Activation::Relu: return "relu";
    case Activation::Sigmoid: return "sigmoid";
    case Activation::Softplus: return "softplus";
  }
  return "?";
}

NormKind parse_norm(std::string_view name) {
  if (name == "none") return NormKind::None;
  if (name == "layer" || name == "LayerNorm") return NormKind::Layer;
  if (name == "batch" || name == "BatchNorm") return NormKind::Batch;
  throw std::invalid_argument("unknown norm '" + std::string(name) + "'");
}

std::string_view to_string(NormKind n) {
  switch (n) {
    case NormKind::None: return "none";
    case NormKind::Layer: return "layer";
    case NormKind::Batch: return "batch";
  }
  return "?";
}

double sigmoid(double x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

double softplus(double x) { return std::max(x, 0.0) + std::log1p(std::exp(-std::abs(x))); }

double gelu(double x) {
  const double u = kSqrt2OverPi * (x + kGeluCubic * x * x * x);
  return 0.5 * x * (1.0 + std::tanh(u));
}

double gelu_derivative(double x) {
  const double u = kSqrt2OverPi * (x + kGeluCubic * x * x * x);
  const double th = std::tanh(u);
  const double du = kSqrt2OverPi * (1.0 + 3.0 * kGeluCubic * x * x);
  return 0.5 * (1.0 + th) + 0.5 * x * (1.0 - th * th) * du;
}

double activate(Activation kind, double x) {
  switch (kind) {
    case Activation::Identity: return x;
    case Activation::Tanh: return std::tanh(x);
    case Activation::Gelu: return gelu(x);
    case Activation::Relu: return x > 0 ? x : 0.0;
    case Activation::Sigmoid: return sigmoid(x);
    case Activation::Softplus: return softplus(x);
  }
  return x;
}

double activate_derivative(Activation kind, double x) {
  switch (kind) {
    case Activation::Identity: return 1.0;
    case Activation::Tanh: {
      const double t = std::tanh(x);
      return 1.0 - t * t;
    }
    case Activation::Gelu: return gelu_derivative(x);
    case Activation::Relu: return x > 0 ? 1.0 : 0.0;
    case Activation::Sigmoid: {
      const double s = sigmoid(x);
      return s * (1.0 - s);
    }
    case Activation::Softplus: return sigmoid(x);
  }
  return 1.0;
}

// ---- linear algebra --------------------------------------------------------

Tensor matmul(const Tensor& a, const Tensor& b) {
  Tape& t = same_tape(a, b);
  if (a.cols() != b.rows()) {
    throw DimensionError("matmul: inner dimensions differ, " + shape_string(a.value()) + " x " +
                         shape_string(b.value()));
  }
  Matrix out = a.value() * b.value();
  const auto ia = a.id(), ib = b.id();
  const bool ra = a.requires_grad(), rb = b.requires_grad();
  return t.record(std::move(out), ra || rb, [ia, ib, ra, rb](Tape& tp, std::size_t self) {
    const Matrix& g = tp.grad(self);
    if (ra) tp.grad_slot(ia).noalias() += g * tp.value(ib).transpose();
    if (rb) tp.grad_slot(ib).noalias() += tp.value(ia).transpose() * g;
  });
}

Tensor spmm(const SparsePropagator& p, const Tensor& x) {
  if (p.cols() != x.rows()) {
    throw DimensionError("spmm: propagator " + shape_string(p.rows(), p.cols()) +
                         " cannot act on " + shape_string(x.value()));
  }
  if (!p.all_finite()) throw std::domain_error("spmm: propagator contains a non-finite entry");
  Tape& t = x.tape();
  Matrix out = p.matrix() * x.value();
  const auto ix = x.id();
  return t.record(std::move(out), x.requires_grad(), [ix, pm = p.data, sym = p.symmetric](Tape& tp, std::size_t self) {
    if (sym) {
      tp.grad_slot(ix).noalias() += (*pm) * tp.grad(self);
    } else {
      tp.grad_slot(ix).noalias() += pm->transpose() * tp.grad(self);
    }
  });
}

// ---- elementwise ------------------------------------------------------------

Tensor add(const Tensor& a, const Tensor& b) { return elementwise(ElementwiseKind::Add, a, b); }
Tensor sub(const Tensor& a, const Tensor& b) { return elementwise(ElementwiseKind::Sub, a, b); }
Tensor mul(const Tensor& a, const Tensor& b) { return elementwise(ElementwiseKind::Mul, a, b); }

Tensor elementwise(ElementwiseKind kind, const Tensor& a, const Tensor& b) {
  Tape& t = same_tape(a, b);
  if (kind == ElementwiseKind::Scale) {
    if (!is_scalar(b)) throw DimensionError("scale: factor must be 1x1, got " + shape_string(b.value()));
    kind = ElementwiseKind::Mul;
  }
  const bool broadcast = is_scalar(b) && !is_scalar(a);
  if (!broadcast) require_same_shape("elementwise", a, b);

  const Matrix& av = a.value();
  const Matrix& bv = b.value();
  Matrix out;
  if (broadcast) {
    const double s = bv(0, 0);
    switch (kind) {
      case ElementwiseKind::Add: out = (av.array() + s).matrix(); break;
      case ElementwiseKind::Sub: out = (av.array() - s).matrix(); break;
      default: out = av * s; break;
    }
  } else {
    switch (kind) {
      case ElementwiseKind::Add: out = av + bv; break;
      case ElementwiseKind::Sub: out = av - bv; break;
      default: out = av.cwiseProduct(bv); break;
    }
  }

  const auto ia = a.id(), ib = b.id();
  const bool ra = a.requires_grad(), rb = b.requires_grad();
  return t.record(std::move(out), ra || rb, [=](Tape& tp, std::size_t self) {
    const Matrix& g = tp.grad(self);
    switch (kind) {
      case ElementwiseKind::Add:
        if (ra) tp.grad_slot(ia) += g;
        if (rb) {
          if (broadcast) tp.grad_slot(ib)(0, 0) += g.sum();
          else tp.grad_slot(ib) += g;
        }
        break;
      case ElementwiseKind::Sub:
        if (ra) tp.grad_slot(ia) += g;
        if (rb) {
          if (broadcast) tp.grad_slot(ib)(0, 0) -= g.sum();
          else tp.grad_slot(ib) -= g;
        }
        break;
      default:
        if (broadcast) {
          if (ra) tp.grad_slot(ia) += g * tp.value(ib)(0, 0);
          if (rb) tp.grad_slot(ib)(0, 0) += g.cwiseProduct(tp.value(ia)).sum();
        } else {
          if (ra) tp.grad_slot(ia) += g.cwiseProduct(tp.value(ib));
          if (rb) tp.grad_slot(ib) += g.cwiseProduct(tp.value(ia));
        }
        break;
    }
  });
}

Tensor elementwise(ElementwiseKind kind, const Tensor& a, double b) {
  switch (kind) {
    case ElementwiseKind::Add: return add_scalar(a, b);
    case ElementwiseKind::Sub: return add_scalar(a, -b);
    case ElementwiseKind::Mul:
    case ElementwiseKind::Scale: return scale(a, b);
  }
  return a;
}

Tensor div(const Tensor& a, const Tensor& b) {
  Tape& t = same_tape(a, b);
  require_same_shape("div", a, b);
  Matrix out = a.value().cwiseQuotient(b.value());
  const auto ia = a.id(), ib = b.id();
  const bool ra = a.requires_grad(), rb = b.requires_grad();
  return t.record(std::move(out), ra || rb, [=](Tape& tp, std::size_t self) {
    const Matrix& g = tp.grad(self);
    const Matrix& bv = tp.value(ib);
    if (ra) tp.grad_slot(ia) += g.cwiseQuotient(bv);
    if (rb) tp.grad_slot(ib) -= g.cwiseProduct(tp.value(self)).cwiseQuotient(bv);
  });
}

Tensor scale(const Tensor& a, double s) {
  Tape& t = a.tape();
  const auto ia = a.id();
  return t.record(a.value() * s, a.requires_grad(), [ia, s](Tape& tp, std::size_t self) {
    tp.grad_slot(ia) += tp.grad(self) * s;
  });
}

Tensor add_scalar(const Tensor& a, double s) {
  Tape& t = a.tape();
  const auto ia = a.id();
  Matrix out = (a.value().array() + s).matrix();
  return t.record(std::move(out), a.requires_grad(), [ia](Tape& tp, std::size_t self) {
    tp.grad_slot(ia) += tp.grad(self);
  });
}

Tensor add_bias(const Tensor& x, const Tensor& bias) {
  Tape& t = same_tape(x, bias);
  if (bias.rows() != 1 || bias.cols() != x.cols()) {
    throw DimensionError("add_bias: bias " + shape_string(bias.value()) + " does not match " +
                         shape_string(x.value()));
  }
  Matrix out = x.value().rowwise() + bias.value().row(0);
  const auto ix = x.id(), ib = bias.id();
  const bool rx = x.requires_grad(), rb = bias.requires_grad();
  return t.record(std::move(out), rx || rb, [=](Tape& tp, std::size_t self) {
    const Matrix& g = tp.grad(self);
    if (rx) tp.grad_slot(ix) += g;
    if (rb) tp.grad_slot(ib).row(0) += g.colwise().sum();
  });
}

Tensor row_scale(const Tensor& x, const Tensor& v) {
  Tape& t = same_tape(x, v);
  if (v.cols() != 1 || v.rows() != x.rows()) {
    throw DimensionError("row_scale: scale vector " + shape_string(v.value()) + " does not match " +
                         shape_string(x.value()));
  }
  Matrix out = v.value().col(0).asDiagonal() * x.value();
  const auto ix = x.id(), iv = v.id();
  const bool rx = x.requires_grad(), rv = v.requires_grad();
  return t.record(std::move(out), rx || rv, [=](Tape& tp, std::size_t self) {
    const Matrix& g = tp.grad(self);
    if (rx) tp.grad_slot(ix).noalias() += tp.value(iv).col(0).asDiagonal() * g;
    if (rv) tp.grad_slot(iv).col(0) += g.cwiseProduct(tp.value(ix)).rowwise().sum();
  });
}

Tensor inv_sqrt_guarded(const Tensor& x, double floor) {
  Tape& t = x.tape();
  Matrix out = x.value().unaryExpr([floor](double v) { return v > floor ? 1.0 / std::sqrt(v) : 0.0; });
  const auto ix = x.id();
  return t.record(std::move(out), x.requires_grad(), [ix](Tape& tp, std::size_t self) {
    const Matrix& y = tp.value(self);
    // d/dx x^{-1/2} = -1/2 y^3; zero where the guard fired (y == 0).
    tp.grad_slot(ix).array() += tp.grad(self).array() * (-0.5) * y.array().cube();
  });
}

Tensor operator+(const Tensor& a, const Tensor& b) { return add(a, b); }
Tensor operator-(const Tensor& a, const Tensor& b) { return sub(a, b); }
Tensor operator-(const Tensor& a) { return scale(a, -1.0); }
Tensor operator*(double s, const Tensor& a) { return scale(a, s); }

// ---- nonlinearities ------------------------------------------------------------

Tensor activation(Activation kind, const Tensor& x) {
  if (kind == Activation::Identity) return x;
  Tape& t = x.tape();
  Matrix out = x.value().unaryExpr([kind](double v) { return activate(kind, v); });
  const auto ix = x.id();
  return t.record(std::move(out), x.requires_grad(), [ix, kind](Tape& tp, std::size_t self) {
    const Matrix& g = tp.grad(self);
    Matrix& gx = tp.grad_slot(ix);
    switch (kind) {
      case Activation::Tanh:
        gx.array() += g.array() * (1.0 - tp.value(self).array().square());
        break;
      case Activation::Sigmoid: {
        const auto& y = tp.value(self).array();
        gx.array() += g.array() * y * (1.0 - y);
        break;
      }
      default:
        gx.array() += g.array() *
                      tp.value(ix).unaryExpr([kind](double v) { return activate_derivative(kind, v); }).array();
        break;
    }
  });
}

// ---- reductions -----------------------------------------------------------------

Tensor sum(const Tensor& x) {
  Tape& t = x.tape();
  Matrix out(1, 1);
  out(0, 0) = x.value().sum();
  const auto ix = x.id();
  return t.record(std::move(out), x.requires_grad(), [ix](Tape& tp, std::size_t self) {
    tp.grad_slot(ix).array() += tp.grad(self)(0, 0);
  });
}

Tensor mean(const Tensor& x) {
  if (x.size() == 0) throw DimensionError("mean of empty tensor");
  return scale(sum(x), 1.0 / static_cast<double>(x.size()));
}

Tensor pick(const Tensor& x, Index row, Index col) {
  if (row < 0 || row >= x.rows() || col < 0 || col >= x.cols()) {
    throw DimensionError("pick: index (" + std::to_string(row) + "," + std::to_string(col) +
                         ") outside " + shape_string(x.value()));
  }
  Tape& t = x.tape();
  Matrix out(1, 1);
  out(0, 0) = x.value()(row, col);
  const auto ix = x.id();
  return t.record(std::move(out), x.requires_grad(), [ix, row, col](Tape& tp, std::size_t self) {
    tp.grad_slot(ix)(row, col) += tp.grad(self)(0, 0);
  });
}

Tensor detach(const Tensor& x) { return x.tape().constant(x.value()); }

// ---- losses ----------------------------------------------------------------------

Tensor mse(const Tensor& pred, const Matrix& target) {
  if (pred.rows() != target.rows() || pred.cols() != target.cols()) {
    throw DimensionError("mse: prediction " + shape_string(pred.value()) + " vs target " +
                         shape_string(target));
  }
  Tape& t = pred.tape();
  Matrix diff = pred.value() - target;
  const double n = static_cast<double>(diff.size());
  Matrix out(1, 1);
  out(0, 0) = diff.squaredNorm() / n;
  const auto ip = pred.id();
  return t.record(std::move(out), pred.requires_grad(),
                  [ip, diff = std::move(diff), n](Tape& tp, std::size_t self) {
                    tp.grad_slot(ip) += diff * (2.0 * tp.grad(self)(0, 0) / n);
                  });
}

Tensor masked_mse(const Tensor& pred, const Matrix& target, const std::vector<bool>& mask) {
  if (pred.rows() != target.rows() || pred.cols() != target.cols()) {
    throw DimensionError("masked_mse: prediction " + shape_string(pred.value()) + " vs target " +
                         shape_string(target));
  }
  if (static_cast<Index>(mask.size()) != pred.rows()) {
    throw DimensionError("masked_mse: mask length " + std::to_string(mask.size()) + " != rows " +
                         std::to_string(pred.rows()));
  }
  const auto selected = std::count(mask.begin(), mask.end(), true);
  if (selected == 0) throw std::invalid_argument("masked_mse: empty mask");

  Tape& t = pred.tape();
  Matrix diff = pred.value() - target;
  for (Index i = 0; i < diff.rows(); ++i)
    if (!mask[static_cast<std::size_t>(i)]) diff.row(i).setZero();
  const double n = static_cast<double>(selected) * static_cast<double>(pred.cols());
  Matrix out(1, 1);
  out(0, 0) = diff.squaredNorm() / n;
  const auto ip = pred.id();
  return t.record(std::move(out), pred.requires_grad(),
                  [ip, diff = std::move(diff), n](Tape& tp, std::size_t self) {
                    tp.grad_slot(ip) += diff * (2.0 * tp.grad(self)(0, 0) / n);
                  });
}

Tensor cross_entropy(const Tensor& logits, std::span<const int> labels, const std::vector<bool>& mask) {
  const Index n = logits.rows();
  const Index c = logits.cols();
  if (static_cast<Index>(labels.size()) != n) {
    throw DimensionError("cross_entropy: " + std::to_string(labels.size()) + " labels for " +
                         std::to_string(n) + " rows");
  }
  if (!mask.empty() && static_cast<Index>(mask.size()) != n) {
    throw DimensionError("cross_entropy: mask length mismatch");
  }
  // Softmax probabilities minus one-hot, pre-scaled by 1/count.
  Matrix dlogits = Matrix::Zero(n, c);
  double total = 0.0;
  Index count = 0;
  const Matrix& z = logits.value();
  for (Index i = 0; i < n; ++i) {
    if (!mask.empty() && !mask[static_cast<std::size_t>(i)]) continue;
    const int y = labels[static_cast<std::size_t>(i)];
    if (y < 0 || y >= c) {
      throw std::out_of_range("cross_entropy: label " + std::to_string(y) + " outside [0," +
                              std::to_string(c) + ")");
    }
    const double zmax = z.row(i).maxCoeff();
    const auto shifted = (z.row(i).array() - zmax).eval();
    const double lse = std::log(shifted.exp().sum());
    total += lse - shifted(y);
    dlogits.row(i) = (shifted - lse).exp().matrix();
    dlogits(i, y) -= 1.0;
    ++count;
  }
  if (count == 0) throw std::invalid_argument("cross_entropy: empty mask");
  dlogits /= static_cast<double>(count);

  Tape& t = logits.tape();
  Matrix out(1, 1);
  out(0, 0) = total / static_cast<double>(count);
  const auto il = logits.id();
  return t.record(std::move(out), logits.requires_grad(),
                  [il, dlogits = std::move(dlogits)](Tape& tp, std::size_t self) {
                    tp.grad_slot(il) += dlogits * tp.grad(self)(0, 0);
                  });
}

Tensor loss(LossKind kind, const Tensor& pred, const Matrix& target, const std::vector<bool>& mask) {
  switch (kind) {
    case LossKind::Mse: return mse(pred, target);
    case LossKind::MaskedMse: return masked_mse(pred, target, mask);
    case LossKind::CrossEntropy: {
      if (target.cols() != 1) throw DimensionError("cross_entropy: target must be a label column");
      std::vector<int> labels(static_cast<std::size_t>(target.rows()));
      for (Index i = 0; i < target.rows(); ++i) labels[static_cast<std::size_t>(i)] = static_cast<int>(target(i, 0));
      return cross_entropy(pred, labels, mask);
    }
  }
  throw std::invalid_argument("unknown loss kind");
}

// ---- normalization -----------------------------------------------------------------

Tensor normalize(NormKind kind, const Tensor& x, const Tensor& gain, const Tensor& bias) {
  if (kind == NormKind::None) return x;
  Tape& t = same_tape(x, gain);
  const Index n = x.rows();
  const Index d = x.cols();
  if (d == 0) throw DimensionError("normalize: zero-length feature axis");
  if (gain.rows() != 1 || gain.cols() != d || bias.rows() != 1 || bias.cols() != d) {
    throw DimensionError("normalize: gain/bias must be 1x" + std::to_string(d));
  }
  const bool by_row = kind == NormKind::Layer;
  const Matrix& xv = x.value();

  Matrix xhat(n, d);
  Vector inv_std;
  if (by_row) {
    inv_std.resize(n);
    for (Index i = 0; i < n; ++i) {
      const double mu = xv.row(i).mean();
      const double var = (xv.row(i).array() - mu).square().mean();
      inv_std(i) = 1.0 / std::sqrt(var + kNormEpsilon);
      xhat.row(i) = (xv.row(i).array() - mu) * inv_std(i);
    }
  } else {
    if (n == 0) throw DimensionError("normalize: empty node axis");
    inv_std.resize(d);
    const auto mu = xv.colwise().mean().eval();
    const auto var = (xv.rowwise() - mu).array().square().colwise().mean().eval();
    inv_std = (var + kNormEpsilon).sqrt().inverse().transpose();
    xhat = ((xv.rowwise() - mu).array().rowwise() * inv_std.transpose().array()).matrix();
  }
  Matrix out = (xhat.array().rowwise() * gain.value().row(0).array()).matrix();
  out.rowwise() += bias.value().row(0);

  const auto ix = x.id(), ig = gain.id(), ib = bias.id();
  const bool rx = x.requires_grad(), rg = gain.requires_grad(), rb = bias.requires_grad();
  return t.record(std::move(out), rx || rg || rb,
                  [=, xhat = std::move(xhat), inv_std = std::move(inv_std)](Tape& tp, std::size_t self) {
                    const Matrix& g = tp.grad(self);
                    if (rg) tp.grad_slot(ig).row(0) += g.cwiseProduct(xhat).colwise().sum();
                    if (rb) tp.grad_slot(ib).row(0) += g.colwise().sum();
                    if (!rx) return;
                    const Matrix dxhat = (g.array().rowwise() * tp.value(ig).row(0).array()).matrix();
                    Matrix& gx = tp.grad_slot(ix);
                    if (by_row) {
                      for (Index i = 0; i < dxhat.rows(); ++i) {
                        const double m1 = dxhat.row(i).mean();
                        const double m2 = dxhat.row(i).cwiseProduct(xhat.row(i)).mean();
                        gx.row(i).array() +=
                            inv_std(i) * (dxhat.row(i).array() - m1 - xhat.row(i).array() * m2);
                      }
                    } else {
                      const auto m1 = dxhat.colwise().mean().eval();
                      const auto m2 = dxhat.cwiseProduct(xhat).colwise().mean().eval();
                      for (Index i = 0; i < dxhat.rows(); ++i) {
                        gx.row(i).array() += inv_std.transpose().array() *
                                             (dxhat.row(i).array() - m1.array() - xhat.row(i).array() * m2.array());
                      }
                    }
                  });
}

Tensor dropout(const Tensor& x, double rate, bool training, std::mt19937_64& rng) {
  if (rate < 0.0 || rate >= 1.0) throw std::invalid_argument("dropout: rate must lie in [0,1)");
  if (!training || rate == 0.0) return x;
  Tape& t = x.tape();
  std::bernoulli_distribution keep(1.0 - rate);
  Matrix mask(x.rows(), x.cols());
  const double s = 1.0 / (1.0 - rate);
  for (Index i = 0; i < mask.size(); ++i) mask.data()[i] = keep(rng) ? s : 0.0;
  Matrix out = x.value().cwiseProduct(mask);
  const auto ix = x.id();
  return t.record(std::move(out), x.requires_grad(), [ix, mask = std::move(mask)](Tape& tp, std::size_t self) {
    tp.grad_slot(ix) += tp.grad(self).cwiseProduct(mask);
  });
}

}  // namespace gbn
