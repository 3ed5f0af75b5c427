#pragma once

#include "gbn/diffarray/sparse_propagator.hpp"
#include "gbn/diffarray/tape.hpp"

#include <cstdint>
#include <optional>
#include <random>
#include <span>
#include <string_view>
#include <vector>

namespace gbn {

enum class Activation { Identity, Tanh, Gelu, Relu, Sigmoid, Softplus };
enum class NormKind { None, Layer, Batch };
enum class LossKind { Mse, MaskedMse, CrossEntropy };
enum class ElementwiseKind { Add, Sub, Mul, Scale };

Activation parse_activation(std::string_view name);
std::string_view to_string(Activation a);
NormKind parse_norm(std::string_view name);
std::string_view to_string(NormKind n);

// Scalar activation kernels, shared with non-taped evaluators.
double activate(Activation kind, double x);
double activate_derivative(Activation kind, double x);

/// GELU, tanh approximation: 0.5 x (1 + tanh(sqrt(2/pi) (x + 0.044715 x^3))).
double gelu(double x);
double gelu_derivative(double x);
double softplus(double x);
double sigmoid(double x);

// ---- linear algebra ------------------------------------------------------

Tensor matmul(const Tensor& a, const Tensor& b);
/// p * x with p constant; backward applies p^T.
Tensor spmm(const SparsePropagator& p, const Tensor& x);

// ---- elementwise ---------------------------------------------------------

Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor div(const Tensor& a, const Tensor& b);
Tensor scale(const Tensor& a, double s);
Tensor add_scalar(const Tensor& a, double s);
/// Dispatches the elementwise family; a 1x1 `b` is broadcast.
Tensor elementwise(ElementwiseKind kind, const Tensor& a, const Tensor& b);
Tensor elementwise(ElementwiseKind kind, const Tensor& a, double b);

/// x[n x d] + b[1 x d] broadcast over rows.
Tensor add_bias(const Tensor& x, const Tensor& bias);
/// Row i of x[n x d] multiplied by v[i] (v is n x 1).
Tensor row_scale(const Tensor& x, const Tensor& v);
/// 1/sqrt(x) elementwise, with entries <= floor mapped to 0.
Tensor inv_sqrt_guarded(const Tensor& x, double floor);

Tensor operator+(const Tensor& a, const Tensor& b);
Tensor operator-(const Tensor& a, const Tensor& b);
Tensor operator-(const Tensor& a);
Tensor operator*(double s, const Tensor& a);

// ---- nonlinearities ------------------------------------------------------

Tensor activation(Activation kind, const Tensor& x);

// ---- reductions and selection ------------------------------------------

Tensor sum(const Tensor& x);
Tensor mean(const Tensor& x);
Tensor pick(const Tensor& x, Index row, Index col);
/// Copy of the value with no backward edge.
Tensor detach(const Tensor& x);

// ---- losses --------------------------------------------------------------

Tensor mse(const Tensor& pred, const Matrix& target);
/// Mean squared error over the rows where mask is true.
Tensor masked_mse(const Tensor& pred, const Matrix& target, const std::vector<bool>& mask);
/// Row-wise log-softmax + NLL, averaged over masked rows (all rows if empty).
Tensor cross_entropy(const Tensor& logits, std::span<const int> labels,
                     const std::vector<bool>& mask = {});
Tensor loss(LossKind kind, const Tensor& pred, const Matrix& target,
            const std::vector<bool>& mask = {});

// ---- normalization and regularization -----------------------------------

inline constexpr double kNormEpsilon = 1e-5;

/// Layer: per-row standardization; batch: per-column over the node axis.
/// Both use batch statistics and apply y = xhat * gain + bias.
Tensor normalize(NormKind kind, const Tensor& x, const Tensor& gain, const Tensor& bias);

/// Inverted dropout; identity when rate == 0 or `training` is false.
Tensor dropout(const Tensor& x, double rate, bool training, std::mt19937_64& rng);

}  // namespace gbn
