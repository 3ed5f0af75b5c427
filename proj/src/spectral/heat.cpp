#include "gbn/spectral/heat.hpp"

namespace gbn {

double eigenmode_energy_ratio(const Spectrum& rep, const Matrix& laplacian, Index mode, double t) {
  if (mode < 0 || mode >= rep.size()) throw std::out_of_range("eigenmode_energy_ratio: mode out of range");
  const Matrix psi = rep.eigenvectors.col(mode);
  const double e0 = dirichlet_energy(laplacian, psi);
  if (e0 == 0.0) return 1.0;
  const Matrix ut = heat_kernel(rep, t) * psi;
  return dirichlet_energy(laplacian, ut) / e0;
}

}  // namespace gbn
