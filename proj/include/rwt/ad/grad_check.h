#pragma once

#include <cstddef>
#include <functional>
#include <span>

#include "rwt/ad/tensor.h"

namespace rwt::ad {

struct GradCheckResult {
  // max over coordinates of |analytic - central| / max(1, |analytic|)
  double max_rel_error = 0.0;
  std::size_t worst_tensor = 0;
  std::size_t worst_index = 0;
  // false when any difference quotient or analytic value was non-finite
  bool finite = true;

  bool Passed(double tolerance) const { return finite && max_rel_error < tolerance; }
};

// Compares reverse-mode gradients of a scalar function against central
// differences with step h. `loss` is re-evaluated for every perturbation and
// must read the current values of `params`.
GradCheckResult GradCheck(const std::function<Tensor()>& loss,
                          std::span<Tensor> params, double h);

// Single-point form: f maps `point` to a scalar.
GradCheckResult GradCheck(const std::function<Tensor(const Tensor&)>& f,
                          const Tensor& point, double h);

}  // namespace rwt::ad
