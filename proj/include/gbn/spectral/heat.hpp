#pragma once

#include "gbn/graph/graph.hpp"
#include "gbn/spectral/eig_sym.hpp"

#include <cmath>
#include <stdexcept>

namespace gbn {

/// H_t = sum_i exp(-lambda_i t) psi_i psi_i^T.
template <class Scalar>
Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> heat_kernel(const SpectralReport<Scalar>& rep, Scalar t) {
  if (!(t >= Scalar(0))) throw std::invalid_argument("heat_kernel: t must be non-negative");
  using std::exp;
  const VectorX<Scalar> decay = (-t * rep.eigenvalues.array()).exp().matrix();
  return rep.eigenvectors * decay.asDiagonal() * rep.eigenvectors.transpose();
}

/// Dir(X) = 1/2 trace(X^T L X).
template <class LaplacianType, class Derived>
double dirichlet_energy(const LaplacianType& L, const Eigen::MatrixBase<Derived>& x) {
  if (L.cols() != x.rows()) {
    throw DimensionError("dirichlet_energy: Laplacian " + shape_string(L.rows(), L.cols()) + " vs features " +
                         shape_string(x.rows(), x.cols()));
  }
  const Matrix lx = L * x;
  const double e = 0.5 * lx.cwiseProduct(x.derived()).sum();
  return e < 0.0 ? 0.0 : e;  // clamp round-off below the true minimum of zero
}

inline double dirichlet_energy(const NormalizedLaplacian& L, const Matrix& x) {
  return dirichlet_energy(L.matrix, x);
}

/// Dirichlet energy ratio E(t)/E(0) of heat flow started at eigenmode k.
double eigenmode_energy_ratio(const Spectrum& rep, const Matrix& laplacian, Index mode, double t);

}  // namespace gbn
