#pragma once

#include "gbn/spectral/eig_sym.hpp"

#include <json.hpp>

namespace gbn {

/// {eigenvalues, gap, condition, residual_max}; eigenvectors are omitted.
nlohmann::json to_json(const Spectrum& rep);

}  // namespace gbn
