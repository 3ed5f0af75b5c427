#include "gbn/spectral/report.hpp"

#include <vector>

namespace gbn {

nlohmann::json to_json(const Spectrum& rep) {
  std::vector<double> values(rep.eigenvalues.data(), rep.eigenvalues.data() + rep.eigenvalues.size());
  return {{"eigenvalues", values},
          {"gap", rep.spectral_gap},
          {"condition", rep.condition.tag()},
          {"residual_max", rep.residual_max},
          {"sweeps", rep.sweeps}};
}

}  // namespace gbn
