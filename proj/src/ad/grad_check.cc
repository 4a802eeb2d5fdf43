#include "rwt/ad/grad_check.h"

#include <algorithm>
#include <cmath>
#include <vector>

#include "rwt/ad/tape.h"

namespace rwt::ad {

GradCheckResult GradCheck(const std::function<Tensor()>& loss, std::span<Tensor> params,
                          double h) {
  std::vector<bool> previous(params.size());
  for (std::size_t p = 0; p < params.size(); ++p) {
    previous[p] = params[p].requires_grad();
    params[p].set_requires_grad(true);
    params[p].clear_grad();
  }

  {
    Tape tape;
    Tape::Scope scope(tape);
    tape.Backward(loss());
  }
  std::vector<std::vector<double>> analytic(params.size());
  for (std::size_t p = 0; p < params.size(); ++p) {
    if (params[p].has_grad()) {
      analytic[p].assign(params[p].grad().begin(), params[p].grad().end());
    } else {
      analytic[p].assign(params[p].size(), 0.0);
    }
    params[p].clear_grad();
  }

  GradCheckResult result;
  NoGradScope no_grad;
  for (std::size_t p = 0; p < params.size(); ++p) {
    auto values = params[p].data();
    for (std::size_t i = 0; i < values.size(); ++i) {
      const double saved = values[i];
      values[i] = saved + h;
      const double up = loss().item();
      values[i] = saved - h;
      const double down = loss().item();
      values[i] = saved;
      const double numeric = (up - down) / (2.0 * h);
      const double a = analytic[p][i];
      if (!std::isfinite(numeric) || !std::isfinite(a)) {
        result.finite = false;
        result.worst_tensor = p;
        result.worst_index = i;
        continue;
      }
      const double err = std::abs(a - numeric) / std::max(1.0, std::abs(a));
      if (err > result.max_rel_error) {
        result.max_rel_error = err;
        result.worst_tensor = p;
        result.worst_index = i;
      }
    }
  }
  for (std::size_t p = 0; p < params.size(); ++p) params[p].set_requires_grad(previous[p]);
  return result;
}

GradCheckResult GradCheck(const std::function<Tensor(const Tensor&)>& f,
                          const Tensor& point, double h) {
  Tensor x = point.Clone();
  x.clear_grad();
  std::vector<Tensor> params{x};
  return GradCheck([&] { return f(x); }, params, h);
}

}  // namespace rwt::ad
