#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "rwt/ad/grad_check.h"
#include "rwt/model/resrnn.h"

namespace rwt::model {

struct ModelGradReport {
  std::string variant;  // VariantName, or "trnn-circle" for the temporal-only form
  ad::GradCheckResult result;
  std::string worst_param;
};

// Finite-difference check of a squared-error loss through Forward for every
// variant (plus the temporal-only circle variant) on random parameters,
// frames and targets drawn from `seed`. Meant for small configs such as
// ResRNNConfig::Toy().
std::vector<ModelGradReport> ModelGradCheck(const ResRNNConfig& base, std::uint64_t seed,
                                            double h = 1e-6);

}  // namespace rwt::model
