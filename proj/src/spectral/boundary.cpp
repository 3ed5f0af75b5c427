#include "gbn/spectral/boundary.hpp"

#include <algorithm>
#include <stdexcept>

namespace gbn {

Matrix combinatorial_laplacian(const Matrix& weights) {
  if (weights.rows() != weights.cols()) throw DimensionError("combinatorial_laplacian: weights must be square");
  Matrix L = -weights;
  // self-weights cancel out of D_w - W
  L.diagonal() = weights.rowwise().sum() - weights.diagonal();
  return L;
}

Matrix reduced_interior_operator(const Matrix& weights, const std::vector<Index>& boundary,
                                 const BoundaryCondition& condition) {
  const Index n = weights.rows();
  std::vector<char> on_boundary(static_cast<std::size_t>(n), 0);
  for (Index b : boundary) {
    if (b < 0 || b >= n) throw std::out_of_range("boundary node " + std::to_string(b) + " out of range");
    on_boundary[static_cast<std::size_t>(b)] = 1;
  }
  std::vector<Index> interior, wall;
  for (Index i = 0; i < n; ++i) (on_boundary[static_cast<std::size_t>(i)] ? wall : interior).push_back(i);
  if (wall.empty()) throw std::invalid_argument("boundary_restricted_spectrum: boundary set is empty");
  if (interior.empty()) throw std::invalid_argument("boundary_restricted_spectrum: empty interior");

  const Matrix L = combinatorial_laplacian(weights);
  const auto ni = static_cast<Index>(interior.size());
  const auto nb = static_cast<Index>(wall.size());
  Matrix K(ni, ni);
  for (Index a = 0; a < ni; ++a)
    for (Index b = 0; b < ni; ++b) K(a, b) = L(interior[static_cast<std::size_t>(a)], interior[static_cast<std::size_t>(b)]);

  double alpha = condition.alpha, beta = condition.beta;
  switch (condition.kind) {
    case BoundaryCondition::Kind::Dirichlet: return K;
    case BoundaryCondition::Kind::Neumann: alpha = 0.0; beta = 1.0; break;
    case BoundaryCondition::Kind::Robin:
      if (alpha < 0.0 || beta < 0.0 || (alpha == 0.0 && beta == 0.0)) {
        throw std::invalid_argument("robin condition needs alpha, beta >= 0, not both zero");
      }
      break;
    case BoundaryCondition::Kind::None:
      throw std::invalid_argument("reduced_interior_operator: a boundary condition is required");
  }

  Matrix W_sb(ni, nb);
  for (Index a = 0; a < ni; ++a)
    for (Index b = 0; b < nb; ++b) W_sb(a, b) = weights(interior[static_cast<std::size_t>(a)], wall[static_cast<std::size_t>(b)]);
  Vector coupling(nb);
  for (Index b = 0; b < nb; ++b) {
    const double d_interior = W_sb.col(b).sum();
    const double denom = alpha + beta * d_interior;
    coupling(b) = denom > 0.0 ? beta / denom : 0.0;
  }
  K.noalias() -= W_sb * coupling.asDiagonal() * W_sb.transpose();
  return K;
}

Spectrum boundary_restricted_spectrum(const Matrix& weights, const std::vector<Index>& boundary,
                                      const BoundaryCondition& condition) {
  Spectrum rep = eig_sym(reduced_interior_operator(weights, boundary, condition));
  rep.condition = condition;
  return rep;
}

Spectrum boundary_restricted_spectrum(const Graph& g, const std::vector<Index>& boundary,
                                      const BoundaryCondition& condition) {
  return boundary_restricted_spectrum(Matrix(g.adjacency()), boundary, condition);
}

}  // namespace gbn
