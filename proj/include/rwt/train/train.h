#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "rwt/ad/tensor.h"
#include "rwt/model/resrnn.h"
#include "rwt/nn/layers.h"
#include "rwt/phantom/phantom.h"

namespace rwt::train {

using ad::Tensor;

struct TrainConfig {
  double base_lr = 0.05;
  double weight_decay = 0.0005;
  double momentum = 0.9;
  double gamma = 0.5;
  int step_size = 2500;
  int max_iters = 7500;
  int batch_subjects = 4;
  // Maximum global L2 norm of the gradient; unset disables clipping.
  std::optional<double> grad_clip;
  std::uint64_t seed = 1;
  // Loss curve sampling period in iterations.
  int log_every = 100;
  nn::InitScheme init = nn::InitScheme::kUniformFanIn;

  // Rates positive, momentum in [0, 1), gamma in (0, 1), counts >= 1.
  void Validate() const;
};

// base_lr * gamma^floor(iter / step_size)
double LearningRate(const TrainConfig& cfg, int iter);

// Data term (1 / (2 S F)) * sum ||y - Q||^2 over the S subjects of a batch,
// each prediction and target [F x L]. Differentiable in `preds`.
Tensor DataLoss(std::span<const Tensor> preds, std::span<const Tensor> targets);

// (lambda / 2) * sum theta^2 over parameters flagged as weights.
double Regularizer(std::span<const nn::NamedParam> params, double lambda);

// Full objective value: data term plus regularizer.
double Objective(std::span<const Tensor> preds, std::span<const Tensor> targets,
                 std::span<const nn::NamedParam> params, double lambda);

struct SgdState {
  std::vector<std::vector<double>> velocity;
};

// v <- momentum * v - lr * (g + lambda * theta [weights only]); theta <- theta + v.
// Missing gradients count as zero. With grad_clip set, g is rescaled first so
// its global norm does not exceed the limit. Throws NumericalError naming the
// first parameter with a non-finite gradient; nothing is updated in that case.
void SgdStep(std::span<const nn::NamedParam> params, SgdState& state, const TrainConfig& cfg,
             int iter);

// Parameters that influence the output of cfg.variant.
std::vector<nn::NamedParam> TrainableParams(const model::ResRNNParams& params,
                                            const model::ResRNNConfig& cfg);

// [F x 1 x S x S] input tensor from an 80x80 sequence after cropping.
Tensor CroppedInput(const phantom::CineSequence& seq, phantom::CropMode mode,
                    std::mt19937_64* rng);
// [F x L] label tensor.
Tensor LabelTensor(const phantom::CineSequence& seq);

struct TrainResult {
  model::ResRNNParams params;
  std::vector<std::pair<int, double>> loss_curve;
  double initial_loss = 0.0;
};

// Called after every logged iteration with (iteration, objective).
using ProgressFn = std::function<void(int, double)>;

// Mini-batch SGD over whole subjects: each iteration draws batch_subjects
// sequences (epoch-wise shuffled), takes one random crop per sequence,
// minimizes the objective. Deterministic given cfg.seed. Throws
// NumericalError when the objective exceeds 1000x its initial value or turns
// non-finite.
TrainResult Train(const std::vector<phantom::CineSequence>& train_set,
                  const model::ResRNNConfig& model_cfg, const TrainConfig& cfg,
                  const ProgressFn& progress = nullptr);

// Same, continuing from given parameters.
TrainResult Train(const std::vector<phantom::CineSequence>& train_set,
                  const model::ResRNNConfig& model_cfg, const TrainConfig& cfg,
                  model::ResRNNParams init, const ProgressFn& progress = nullptr);

}  // namespace rwt::train
