#include "gbn/spectral/source.hpp"

#include <cmath>
#include <stdexcept>
#include <type_traits>

namespace gbn {

namespace {

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

double fit_slope(const std::vector<double>& xs, const std::vector<double>& ys) {
  if (xs.size() < 2) throw std::invalid_argument("slope fit needs at least two samples");
  const double n = static_cast<double>(xs.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sx += xs[i];
    sy += ys[i];
    sxx += xs[i] * xs[i];
    sxy += xs[i] * ys[i];
  }
  return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

}  // namespace

EnergyTrace source_term_energy_experiment(const Graph& g, const Vector& x0, const SourceSchedule& schedule,
                                          Index steps, double dt, Index record_every) {
  const Index n = g.node_count();
  if (x0.size() != n) throw DimensionError("source_term_energy_experiment: initial state has wrong length");
  if (record_every < 1) throw std::invalid_argument("record_every must be >= 1");
  const Matrix L = normalized_laplacian(g).dense();
  const Spectrum rep = eig_sym(L);
  const double lambda_max = rep.eigenvalues(n - 1);
  if (!(dt > 0.0) || dt * lambda_max >= 2.0) {
    throw std::invalid_argument("source_term_energy_experiment: unstable step, dt * lambda_max = " +
                                std::to_string(dt * lambda_max) + " (needs < 2)");
  }
  const Vector c0 = rep.eigenvectors.transpose() * x0;

  auto source_at = [&](double t) -> Vector {
    return std::visit(
        overloaded{
            [&](const ZeroSource&) -> Vector { return Vector::Zero(n); },
            [&](const PolynomialDecaySource& s) -> Vector {
              if (!(s.a > 2.0) || !(s.b > 0.0)) throw std::invalid_argument("polynomial source needs a > 2, b > 0");
              const double q = 0.5 * (2.0 - s.a);
              const double growth = std::pow((s.b + t) / s.b, q);
              const double dgrowth = q / (s.b + t) * growth;
              const Vector coeff = (c0.array() * (dgrowth + rep.eigenvalues.array() * growth)).matrix();
              return rep.eigenvectors * coeff;
            },
            [&](const ConstantModeSource& s) -> Vector {
              if (s.mode < 0 || s.mode >= n) throw std::out_of_range("constant source mode out of range");
              return s.amplitude * rep.eigenvectors.col(s.mode);
            }},
        schedule);
  };

  EnergyTrace trace;
  Vector x = x0;
  auto record = [&](double t) {
    trace.time.push_back(t);
    trace.energy.push_back(0.5 * x.dot(L * x));
  };
  record(0.0);
  for (Index k = 0; k < steps; ++k) {
    const double t = static_cast<double>(k) * dt;
    x += dt * (source_at(t) - L * x);
    if ((k + 1) % record_every == 0) record(static_cast<double>(k + 1) * dt);
  }
  return trace;
}

double loglog_slope(const EnergyTrace& trace, double t_lo, double t_hi) {
  std::vector<double> xs, ys;
  for (std::size_t i = 0; i < trace.time.size(); ++i) {
    const double t = trace.time[i];
    if (t >= t_lo && t <= t_hi && t > 0.0 && trace.energy[i] > 0.0) {
      xs.push_back(std::log(t));
      ys.push_back(std::log(trace.energy[i]));
    }
  }
  return fit_slope(xs, ys);
}

double semilog_slope(const EnergyTrace& trace, double t_lo, double t_hi) {
  std::vector<double> xs, ys;
  for (std::size_t i = 0; i < trace.time.size(); ++i) {
    const double t = trace.time[i];
    if (t >= t_lo && t <= t_hi && trace.energy[i] > 0.0) {
      xs.push_back(t);
      ys.push_back(std::log(trace.energy[i]));
    }
  }
  return fit_slope(xs, ys);
}

}  // namespace gbn
