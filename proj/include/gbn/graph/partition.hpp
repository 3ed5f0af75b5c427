#pragma once

#include "gbn/graph/graph.hpp"

#include <vector>

namespace gbn {

/// Degree-like floor below which 1/sqrt(hat degree) is taken as 0: a node with
/// no same-class neighbours sends and receives no propagated messages.
inline constexpr double kHatDegreeFloor = 1e-12;

/// Interior/boundary split of the node set. `indicator` is I_i in [0,1]
/// (hard partitions use {0,1}); interior S = {i : I_i >= 0.5}.
struct BoundaryPartition {
  Vector indicator;
  Vector hat_degree;
  Vector ratio;  // p_i = beta_i / alpha_i

  std::vector<Index> interior() const;
  std::vector<Index> boundary() const;
  bool is_hard() const;
};

/// Class-restricted degree d_i (1 - I_i) + (2 I_i - 1) sum_{j~i} I_j.
Vector hat_degrees(const Graph& g, const Vector& indicator);

/// Guarded 1/sqrt(hat_degree).
Vector inv_sqrt_hat_degrees(const Vector& hat_degree);

BoundaryPartition make_partition(const Graph& g, Vector indicator, Vector ratio);
BoundaryPartition make_hard_partition(const Graph& g, const std::vector<Index>& interior, double ratio);

/// Jacobi-splitting operators of the boundary-conditioned system:
///   (DinvU)_ij = I_i / sqrt(hd_i hd_j)                    for j ~ i
///   (DinvV)_ij = (p_i + (1 - p_i) I_i) I_j / sqrt(hd_i hd_j)  for j ~ i
/// DinvV is kept as a p-independent skeleton I_j / sqrt(hd_i hd_j) plus a
/// per-row multiplier so the ratio can be supplied late.
struct JacobiPropagators {
  SparsePropagator dinv_u;
  SparsePropagator dinv_v_skeleton;
  Vector dinv_v_row_factor;  // p_i + (1 - p_i) I_i

  SparsePropagator dinv_v() const;
  /// D^{-1}(V + U) = DinvU + DinvV.
  SparsePropagator jacobi_operator() const;
};

JacobiPropagators propagators(const Graph& g, const BoundaryPartition& part);

}  // namespace gbn
