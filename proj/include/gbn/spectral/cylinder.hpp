#pragma once

#include "gbn/spectral/boundary.hpp"

#include <optional>
#include <vector>

namespace gbn {

/// Cross-section radius along the axis.
struct RadiusProfile {
  enum class Kind { Constant, Cosh };
  Kind kind = Kind::Constant;
  double eps0 = 1.0;
  double a = 0.0;

  static RadiusProfile constant(double eps0 = 1.0) { return {Kind::Constant, eps0, 0.0}; }
  static RadiusProfile cosh(double eps0, double a) { return {Kind::Cosh, eps0, a}; }

  /// Radius at slice s of an m-slice axis, centred at (m-1)/2.
  double radius(Index s, Index m) const;
};

/// Discrete tube [0,L] x B_eps: an m x r grid, node (s, k) = s * r + k.
/// Axis edges (s,k)-(s+1,k) have weight 1. Cross-section edges (s,k)-(s,k+1)
/// have weight 1/eps(s)^2, so the section is an r-node segment whose two end
/// rows k = 0 and k = r-1 form the lateral wall where boundary conditions act.
/// The closed variant glues slice m-1 back to slice 0.
struct CylinderGraph {
  Index length = 0;  // m
  Index ring = 0;    // r
  RadiusProfile profile;
  Matrix weights;         // open tube
  Matrix closed_weights;  // axis made periodic
  std::vector<Index> wall;

  Index node(Index s, Index k) const { return s * ring + k; }
  Index node_count() const { return length * ring; }
};

CylinderGraph make_cylinder(Index m, Index r, const RadiusProfile& profile);

struct CylinderGaps {
  double dirichlet = 0.0;  // lambda^D
  double neumann = 0.0;    // lambda^N
  double closed = 0.0;     // lambda, no boundary
  std::optional<double> robin;
  double margin = 0.0;     // min(lambda^D - lambda, lambda - lambda^N)
  bool ordered = false;    // lambda^D >= lambda >= lambda^N with margin > tolerance
};

inline constexpr double kOrderingMargin = 1e-9;

/// Spectral gaps of the tube under Dirichlet / Neumann walls and of the
/// closed tube, plus the Robin gap when a Robin condition is supplied.
CylinderGaps cylinder_gap_experiment(Index m, Index r, const RadiusProfile& profile,
                                     std::optional<BoundaryCondition> robin = std::nullopt);

}  // namespace gbn
