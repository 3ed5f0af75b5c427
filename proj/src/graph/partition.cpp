#include "gbn/graph/partition.hpp"

#include <cmath>
#include <stdexcept>

namespace gbn {

std::vector<Index> BoundaryPartition::interior() const {
  std::vector<Index> out;
  for (Index i = 0; i < indicator.size(); ++i)
    if (indicator(i) >= 0.5) out.push_back(i);
  return out;
}

std::vector<Index> BoundaryPartition::boundary() const {
  std::vector<Index> out;
  for (Index i = 0; i < indicator.size(); ++i)
    if (indicator(i) < 0.5) out.push_back(i);
  return out;
}

bool BoundaryPartition::is_hard() const {
  return (indicator.array() == 0.0 || indicator.array() == 1.0).all();
}

Vector hat_degrees(const Graph& g, const Vector& indicator) {
  if (indicator.size() != g.node_count()) {
    throw DimensionError("hat_degrees: indicator length " + std::to_string(indicator.size()) +
                         " for " + std::to_string(g.node_count()) + " nodes");
  }
  const Vector neighbor_mass = g.adjacency() * indicator;
  Vector out(g.node_count());
  for (Index i = 0; i < g.node_count(); ++i) {
    const double I = indicator(i);
    out(i) = static_cast<double>(g.degree(i)) * (1.0 - I) + (2.0 * I - 1.0) * neighbor_mass(i);
  }
  return out;
}

Vector inv_sqrt_hat_degrees(const Vector& hat_degree) {
  return hat_degree.unaryExpr([](double d) { return d > kHatDegreeFloor ? 1.0 / std::sqrt(d) : 0.0; });
}

BoundaryPartition make_partition(const Graph& g, Vector indicator, Vector ratio) {
  if (ratio.size() != g.node_count()) throw DimensionError("make_partition: ratio length mismatch");
  if ((indicator.array() < 0.0).any() || (indicator.array() > 1.0).any()) {
    throw std::invalid_argument("make_partition: indicator entries must lie in [0,1]");
  }
  BoundaryPartition part;
  part.hat_degree = hat_degrees(g, indicator);
  part.indicator = std::move(indicator);
  part.ratio = std::move(ratio);
  return part;
}

BoundaryPartition make_hard_partition(const Graph& g, const std::vector<Index>& interior, double ratio) {
  Vector I = Vector::Zero(g.node_count());
  for (Index i : interior) {
    if (i < 0 || i >= g.node_count()) throw std::out_of_range("make_hard_partition: node out of range");
    I(i) = 1.0;
  }
  return make_partition(g, std::move(I), Vector::Constant(g.node_count(), ratio));
}

SparsePropagator JacobiPropagators::dinv_v() const {
  SparseMatrix m = dinv_v_row_factor.asDiagonal() * dinv_v_skeleton.matrix();
  return make_propagator(std::move(m), PropagatorTag::DinvV, false);
}

SparsePropagator JacobiPropagators::jacobi_operator() const {
  SparseMatrix m = dinv_u.matrix() + dinv_v().matrix();
  return make_propagator(std::move(m), PropagatorTag::Generic, false);
}

JacobiPropagators propagators(const Graph& g, const BoundaryPartition& part) {
  const Index n = g.node_count();
  if (part.indicator.size() != n || part.hat_degree.size() != n || part.ratio.size() != n) {
    throw DimensionError("propagators: partition does not match graph size");
  }
  const Vector s = inv_sqrt_hat_degrees(part.hat_degree);
  const Vector& I = part.indicator;

  std::vector<Triplet> u_trips, v_trips;
  u_trips.reserve(2 * g.edges().size());
  v_trips.reserve(2 * g.edges().size());
  for (Index i = 0; i < n; ++i) {
    for (Index j : g.neighbors(i)) {
      const double w = s(i) * s(j);
      if (w == 0.0) continue;
      if (I(i) != 0.0) u_trips.emplace_back(i, j, I(i) * w);
      if (I(j) != 0.0) v_trips.emplace_back(i, j, I(j) * w);
    }
  }
  JacobiPropagators out;
  out.dinv_u = make_propagator(n, n, u_trips, PropagatorTag::DinvU, false);
  out.dinv_v_skeleton = make_propagator(n, n, v_trips, PropagatorTag::DinvV, false);
  out.dinv_v_row_factor = part.ratio.array() + (1.0 - part.ratio.array()) * I.array();
  return out;
}

}  // namespace gbn
