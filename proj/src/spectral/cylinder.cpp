#include "gbn/spectral/cylinder.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace gbn {

double RadiusProfile::radius(Index s, Index m) const {
  if (kind == Kind::Constant) return eps0;
  const double centre = 0.5 * static_cast<double>(m - 1);
  return eps0 * std::cosh(a * (static_cast<double>(s) - centre));
}

CylinderGraph make_cylinder(Index m, Index r, const RadiusProfile& profile) {
  if (m < 4) throw std::invalid_argument("make_cylinder: length must be >= 4");
  if (r < 3) throw std::invalid_argument("make_cylinder: cross-section must have >= 3 nodes");
  if (!(profile.eps0 > 0.0)) throw std::invalid_argument("make_cylinder: radius must be positive");

  CylinderGraph cyl;
  cyl.length = m;
  cyl.ring = r;
  cyl.profile = profile;
  const Index n = m * r;
  cyl.weights = Matrix::Zero(n, n);
  auto link = [](Matrix& w, Index i, Index j, double value) {
    w(i, j) = value;
    w(j, i) = value;
  };
  for (Index s = 0; s < m; ++s) {
    const double eps = profile.radius(s, m);
    const double cross = 1.0 / (eps * eps);
    for (Index k = 0; k < r; ++k) {
      if (k + 1 < r) link(cyl.weights, cyl.node(s, k), cyl.node(s, k + 1), cross);
      if (s + 1 < m) link(cyl.weights, cyl.node(s, k), cyl.node(s + 1, k), 1.0);
    }
  }
  cyl.closed_weights = cyl.weights;
  for (Index k = 0; k < r; ++k) link(cyl.closed_weights, cyl.node(m - 1, k), cyl.node(0, k), 1.0);

  for (Index s = 0; s < m; ++s) {
    cyl.wall.push_back(cyl.node(s, 0));
    cyl.wall.push_back(cyl.node(s, r - 1));
  }
  return cyl;
}

CylinderGaps cylinder_gap_experiment(Index m, Index r, const RadiusProfile& profile,
                                     std::optional<BoundaryCondition> robin) {
  const CylinderGraph cyl = make_cylinder(m, r, profile);
  CylinderGaps gaps;
  gaps.dirichlet = boundary_restricted_spectrum(cyl.weights, cyl.wall, BoundaryCondition::dirichlet()).spectral_gap;
  gaps.neumann = boundary_restricted_spectrum(cyl.weights, cyl.wall, BoundaryCondition::neumann()).spectral_gap;
  gaps.closed = eig_sym(combinatorial_laplacian(cyl.closed_weights)).spectral_gap;
  if (robin) gaps.robin = boundary_restricted_spectrum(cyl.weights, cyl.wall, *robin).spectral_gap;
  gaps.margin = std::min(gaps.dirichlet - gaps.closed, gaps.closed - gaps.neumann);
  gaps.ordered = gaps.margin > kOrderingMargin;
  return gaps;
}

}  // namespace gbn
