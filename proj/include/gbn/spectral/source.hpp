#pragma once

#include "gbn/graph/graph.hpp"
#include "gbn/spectral/eig_sym.hpp"

#include <variant>
#include <vector>

namespace gbn {

/// No external input: plain heat flow.
struct ZeroSource {};

/// Per-mode source B_i(t) psi_i chosen so that mode i follows
///   c_i(t) = c_i(0) ((b + t) / b)^{(2 - a) / 2},
/// i.e. every mode's share of the Dirichlet energy scales as (b + t)^{2 - a}.
/// The source realising this is B_i = c_i' + lambda_i c_i.
struct PolynomialDecaySource {
  double a = 3.0;  // > 2
  double b = 0.5;  // in (0, 1)
};

/// Time-constant source amplitude * psi_mode.
struct ConstantModeSource {
  Index mode = 1;
  double amplitude = 1.0;
};

using SourceSchedule = std::variant<ZeroSource, PolynomialDecaySource, ConstantModeSource>;

struct EnergyTrace {
  std::vector<double> time;
  std::vector<double> energy;
};

/// Forward-Euler integration of x' = -L x + f(t) with the normalized
/// Laplacian of `g`, starting from `x0` (n x 1). Records Dir(x) every
/// `record_every` steps (and at t = 0). Throws if dt * lambda_max >= 2.
EnergyTrace source_term_energy_experiment(const Graph& g, const Vector& x0, const SourceSchedule& schedule,
                                          Index steps, double dt, Index record_every = 1);

/// Least-squares slope of log(energy) against log(time) over t in [t_lo, t_hi].
double loglog_slope(const EnergyTrace& trace, double t_lo, double t_hi);
/// Least-squares slope of log(energy) against time over t in [t_lo, t_hi].
double semilog_slope(const EnergyTrace& trace, double t_lo, double t_hi);

}  // namespace gbn
