#pragma once

#include "gbn/graph/graph.hpp"
#include "gbn/spectral/eig_sym.hpp"

#include <vector>

namespace gbn {

/// Combinatorial Laplacian D_w - W of a symmetric non-negative weight matrix.
Matrix combinatorial_laplacian(const Matrix& weights);

/// Interior operator after eliminating the boundary rows with the relation
///   alpha f(u) + beta sum_{v in S, v~u} w_uv (f(u) - f(v)) = 0,  u in boundary,
/// i.e. K = L_SS - W_SB diag(beta / (alpha + beta d^S_u)) W_BS.
/// Dirichlet is beta = 0 (K = L_SS); Neumann is alpha = 0 (reflection).
Matrix reduced_interior_operator(const Matrix& weights, const std::vector<Index>& boundary,
                                 const BoundaryCondition& condition);

/// Spectrum of the interior operator for a weighted graph.
Spectrum boundary_restricted_spectrum(const Matrix& weights, const std::vector<Index>& boundary,
                                      const BoundaryCondition& condition);

/// Same, on the unweighted graph `g`.
Spectrum boundary_restricted_spectrum(const Graph& g, const std::vector<Index>& boundary,
                                      const BoundaryCondition& condition);

}  // namespace gbn
