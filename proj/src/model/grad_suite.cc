#include "rwt/model/grad_suite.h"

#include <random>

#include "rwt/ad/ops.h"

namespace rwt::model {

std::vector<ModelGradReport> ModelGradCheck(const ResRNNConfig& base, std::uint64_t seed,
                                            double h) {
  struct Case {
    Variant variant;
    bool spatial;
    const char* name;
  };
  std::vector<Case> cases;
  for (Variant v : kAllVariants) cases.push_back({v, true, VariantName(v).data()});
  cases.push_back({Variant::kRnnCircle, false, "trnn-circle"});

  std::vector<ModelGradReport> out;
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (const Case& c : cases) {
    ResRNNConfig cfg = base;
    cfg.variant = c.variant;
    cfg.spatial_rnn = c.spatial;
    ResRNNParams params = InitParams(cfg, rng());
    // Nonzero biases so every gate and relu path is exercised.
    for (auto& p : params.Named()) {
      if (!p.is_weight) {
        for (double& v : p.tensor.data()) v = 0.2 * (unit(rng) - 0.5);
      }
    }
    std::vector<double> pixels(cfg.frames * cfg.input_size * cfg.input_size);
    for (double& v : pixels) v = unit(rng);
    const Tensor frames({cfg.frames, 1, cfg.input_size, cfg.input_size}, std::move(pixels));
    std::vector<double> labels(cfg.frames * cfg.regions);
    for (double& v : labels) v = 0.25 * unit(rng);
    const Tensor target({cfg.frames, cfg.regions}, std::move(labels));

    std::vector<Tensor*> slots = params.Slots();
    std::vector<Tensor> tensors;
    for (Tensor* t : slots) tensors.push_back(*t);
    auto loss = [&] {
      Tensor d = ad::Sub(Forward(params, cfg, frames), target);
      return ad::Scale(ad::Sum(ad::Mul(d, d)), 0.5);
    };
    ModelGradReport report{c.name, ad::GradCheck(loss, tensors, h), {}};
    report.worst_param = params.Named()[report.result.worst_tensor].name;
    out.push_back(std::move(report));
  }
  return out;
}

}  // namespace rwt::model
