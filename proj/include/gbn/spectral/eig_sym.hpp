#pragma once

#include "gbn/core/types.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

namespace gbn {

/// Boundary treatment a spectrum was computed under.
struct BoundaryCondition {
  enum class Kind { None, Dirichlet, Neumann, Robin };
  Kind kind = Kind::None;
  double alpha = 0.0;
  double beta = 0.0;

  static BoundaryCondition none() { return {}; }
  static BoundaryCondition dirichlet() { return {Kind::Dirichlet, 1.0, 0.0}; }
  static BoundaryCondition neumann() { return {Kind::Neumann, 0.0, 1.0}; }
  static BoundaryCondition robin(double alpha, double beta) { return {Kind::Robin, alpha, beta}; }

  std::string tag() const {
    switch (kind) {
      case Kind::None: return "none";
      case Kind::Dirichlet: return "dirichlet";
      case Kind::Neumann: return "neumann";
      case Kind::Robin: return "robin(" + std::to_string(alpha) + "," + std::to_string(beta) + ")";
    }
    return "?";
  }
};

inline constexpr double kZeroEigenvalueTolerance = 1e-9;

template <class Scalar>
struct SpectralReport {
  VectorX<Scalar> eigenvalues;                                       // ascending
  Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> eigenvectors;  // orthonormal columns
  Scalar spectral_gap = Scalar(0);                                   // first eigenvalue > 1e-9
  Scalar residual_max = Scalar(0);                                   // max_i |A psi_i - lambda_i psi_i|_inf
  int sweeps = 0;
  BoundaryCondition condition;

  Index size() const { return eigenvalues.size(); }
};

using Spectrum = SpectralReport<double>;

struct JacobiOptions {
  double threshold = 1e-12;   // stop when off(A) <= threshold * |A|_F
  int max_sweeps = 100;
  double symmetry_tolerance = 1e-10;
  Index max_size = 2000;
};

template <class Scalar>
Scalar first_positive(const VectorX<Scalar>& ascending, Scalar tol = Scalar(kZeroEigenvalueTolerance)) {
  for (Index i = 0; i < ascending.size(); ++i)
    if (ascending(i) > tol) return ascending(i);
  return Scalar(0);
}

/// Full spectrum of a dense symmetric matrix by cyclic Jacobi rotations.
/// Eigenvalues come back ascending (ties keep index order) with eigenvectors
/// normalised so their first non-negligible component is positive.
template <class Derived>
SpectralReport<typename Derived::Scalar> eig_sym(const Eigen::MatrixBase<Derived>& input,
                                                const JacobiOptions& opts = {}) {
  using Scalar = typename Derived::Scalar;
  using Dense = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  using std::abs;
  using std::sqrt;

  const Index n = input.rows();
  if (input.cols() != n) throw DimensionError("eig_sym: matrix must be square, got " + shape_string(input));
  if (n > opts.max_size) throw std::invalid_argument("eig_sym: dense solver limited to n <= " + std::to_string(opts.max_size));

  Dense a = input;
  const Scalar scale_ref = std::max<Scalar>(Scalar(1), a.cwiseAbs().maxCoeff());
  if ((a - a.transpose()).cwiseAbs().maxCoeff() > Scalar(opts.symmetry_tolerance) * scale_ref) {
    throw std::invalid_argument("eig_sym: input is not symmetric");
  }
  a = Scalar(0.5) * (a + a.transpose()).eval();
  Dense v = Dense::Identity(n, n);
  const Scalar frob = a.norm();

  auto off_norm = [&] {
    Scalar s(0);
    for (Index q = 0; q < n; ++q)
      for (Index p = 0; p < q; ++p) s += a(p, q) * a(p, q);
    return sqrt(Scalar(2) * s);
  };

  int sweep = 0;
  for (; sweep < opts.max_sweeps; ++sweep) {
    if (off_norm() <= Scalar(opts.threshold) * frob) break;
    for (Index p = 0; p < n - 1; ++p) {
      for (Index q = p + 1; q < n; ++q) {
        const Scalar apq = a(p, q);
        if (apq == Scalar(0)) continue;
        const Scalar theta = (a(q, q) - a(p, p)) / (Scalar(2) * apq);
        const Scalar t = (theta >= Scalar(0) ? Scalar(1) : Scalar(-1)) / (abs(theta) + sqrt(theta * theta + Scalar(1)));
        const Scalar c = Scalar(1) / sqrt(t * t + Scalar(1));
        const Scalar s = t * c;
        for (Index k = 0; k < n; ++k) {
          const Scalar akp = a(k, p), akq = a(k, q);
          a(k, p) = c * akp - s * akq;
          a(k, q) = s * akp + c * akq;
        }
        for (Index k = 0; k < n; ++k) {
          const Scalar apk = a(p, k), aqk = a(q, k);
          a(p, k) = c * apk - s * aqk;
          a(q, k) = s * apk + c * aqk;
        }
        a(p, q) = a(q, p) = Scalar(0);
        for (Index k = 0; k < n; ++k) {
          const Scalar vkp = v(k, p), vkq = v(k, q);
          v(k, p) = c * vkp - s * vkq;
          v(k, q) = s * vkp + c * vkq;
        }
      }
    }
  }

  std::vector<Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Index{0});
  std::stable_sort(order.begin(), order.end(), [&](Index i, Index j) { return a(i, i) < a(j, j); });

  SpectralReport<Scalar> rep;
  rep.sweeps = sweep;
  rep.eigenvalues.resize(n);
  rep.eigenvectors.resize(n, n);
  for (Index k = 0; k < n; ++k) {
    const Index src = order[static_cast<std::size_t>(k)];
    rep.eigenvalues(k) = a(src, src);
    auto col = v.col(src);
    Index lead = 0;
    while (lead < n && abs(col(lead)) < Scalar(1e-12)) ++lead;
    const Scalar sign = (lead < n && col(lead) < Scalar(0)) ? Scalar(-1) : Scalar(1);
    rep.eigenvectors.col(k) = sign * col;
  }
  rep.spectral_gap = first_positive(rep.eigenvalues);

  Scalar residual(0);
  const Dense original = input;
  for (Index k = 0; k < n; ++k) {
    const auto r = (original * rep.eigenvectors.col(k) - rep.eigenvalues(k) * rep.eigenvectors.col(k)).eval();
    residual = std::max<Scalar>(residual, r.cwiseAbs().maxCoeff());
  }
  rep.residual_max = residual;
  return rep;
}

}  // namespace gbn
