#include "rwt/train/train.h"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>

#include "rwt/ad/ops.h"
#include "rwt/ad/tape.h"
#include "rwt/common/errors.h"

namespace rwt::train {

void TrainConfig::Validate() const {
  if (!(base_lr > 0.0)) throw std::invalid_argument("base_lr must be positive");
  if (!(weight_decay >= 0.0)) throw std::invalid_argument("weight_decay must be >= 0");
  if (!(momentum >= 0.0 && momentum < 1.0)) {
    throw std::invalid_argument("momentum must lie in [0, 1)");
  }
  if (!(gamma > 0.0 && gamma < 1.0)) throw std::invalid_argument("gamma must lie in (0, 1)");
  if (step_size < 1) throw std::invalid_argument("step_size must be >= 1");
  if (max_iters < 1) throw std::invalid_argument("max_iters must be >= 1");
  if (batch_subjects < 1) throw std::invalid_argument("batch_subjects must be >= 1");
  if (log_every < 1) throw std::invalid_argument("log_every must be >= 1");
  if (grad_clip && !(*grad_clip > 0.0)) throw std::invalid_argument("grad_clip must be positive");
}

double LearningRate(const TrainConfig& cfg, int iter) {
  if (iter < 0) throw std::invalid_argument("iteration must be >= 0");
  return cfg.base_lr * std::pow(cfg.gamma, iter / cfg.step_size);
}

namespace {

void CheckPairs(std::span<const Tensor> preds, std::span<const Tensor> targets) {
  if (preds.empty() || preds.size() != targets.size()) {
    throw std::invalid_argument("loss needs matching, non-empty prediction and target lists");
  }
  for (std::size_t s = 0; s < preds.size(); ++s) {
    if (preds[s].rank() != 2 || preds[s].shape() != targets[s].shape() ||
        preds[s].shape() != preds[0].shape()) {
      throw std::invalid_argument("loss: prediction " + ad::ShapeString(preds[s].shape()) +
                                  " vs target " + ad::ShapeString(targets[s].shape()));
    }
  }
}

}  // namespace

Tensor DataLoss(std::span<const Tensor> preds, std::span<const Tensor> targets) {
  CheckPairs(preds, targets);
  const double scale = 1.0 / (2.0 * static_cast<double>(preds.size()) *
                              static_cast<double>(preds[0].dim(0)));
  Tensor total;
  for (std::size_t s = 0; s < preds.size(); ++s) {
    Tensor d = ad::Sub(preds[s], targets[s]);
    Tensor sq = ad::Sum(ad::Mul(d, d));
    total = total.defined() ? ad::Add(total, sq) : sq;
  }
  return ad::Scale(total, scale);
}

double Regularizer(std::span<const nn::NamedParam> params, double lambda) {
  double acc = 0.0;
  for (const auto& p : params) {
    if (!p.is_weight) continue;
    for (double v : p.tensor.data()) acc += v * v;
  }
  return 0.5 * lambda * acc;
}

double Objective(std::span<const Tensor> preds, std::span<const Tensor> targets,
                 std::span<const nn::NamedParam> params, double lambda) {
  ad::NoGradScope no_grad;
  return DataLoss(preds, targets).item() + Regularizer(params, lambda);
}

void SgdStep(std::span<const nn::NamedParam> params, SgdState& state, const TrainConfig& cfg,
             int iter) {
  double norm2 = 0.0;
  for (const auto& p : params) {
    if (!p.tensor.has_grad()) continue;
    for (double g : p.tensor.grad()) {
      if (!std::isfinite(g)) {
        throw NumericalError("non-finite gradient in parameter '" + p.name + "' at iteration " +
                             std::to_string(iter));
      }
      norm2 += g * g;
    }
  }
  double clip_scale = 1.0;
  if (cfg.grad_clip && std::sqrt(norm2) > *cfg.grad_clip) {
    clip_scale = *cfg.grad_clip / std::sqrt(norm2);
  }
  if (state.velocity.size() != params.size()) {
    state.velocity.assign(params.size(), {});
  }
  const double lr = LearningRate(cfg, iter);
  for (std::size_t k = 0; k < params.size(); ++k) {
    Tensor t = params[k].tensor;
    auto theta = t.data();
    auto& v = state.velocity[k];
    if (v.size() != theta.size()) v.assign(theta.size(), 0.0);
    const bool has_grad = t.has_grad();
    const auto grad = t.grad();
    const double decay = params[k].is_weight ? cfg.weight_decay : 0.0;
    for (std::size_t i = 0; i < theta.size(); ++i) {
      const double g = (has_grad ? clip_scale * grad[i] : 0.0) + decay * theta[i];
      v[i] = cfg.momentum * v[i] - lr * g;
      theta[i] += v[i];
    }
  }
}

std::vector<nn::NamedParam> TrainableParams(const model::ResRNNParams& params,
                                            const model::ResRNNConfig& cfg) {
  const bool cnn = model::UsesCnnPath(cfg.variant);
  const bool rnn = model::UsesRnnPath(cfg.variant);
  std::vector<nn::NamedParam> out;
  for (auto& p : params.Named()) {
    const auto starts = [&](const char* prefix) { return p.name.rfind(prefix, 0) == 0; };
    if (starts("fc2.") && !cnn) continue;
    if (starts("temporal.") && !rnn) continue;
    if (starts("spatial.") && (!rnn || !cfg.spatial_rnn)) continue;
    out.push_back(std::move(p));
  }
  return out;
}

Tensor CroppedInput(const phantom::CineSequence& seq, phantom::CropMode mode,
                    std::mt19937_64* rng) {
  if (seq.height != seq.width) throw std::invalid_argument("sequence frames must be square");
  const int size = seq.width;
  const phantom::CropOffset at =
      phantom::ChooseCrop(size, phantom::kCropSize, mode, rng);
  const std::size_t plane = static_cast<std::size_t>(phantom::kCropSize) * phantom::kCropSize;
  std::vector<double> values;
  values.reserve(plane * seq.frames);
  for (int f = 0; f < seq.frames; ++f) {
    const auto crop = phantom::Crop(seq.Frame(f), size, phantom::kCropSize, at);
    values.insert(values.end(), crop.begin(), crop.end());
  }
  return Tensor({static_cast<std::size_t>(seq.frames), 1, phantom::kCropSize,
                 phantom::kCropSize},
                std::move(values));
}

Tensor LabelTensor(const phantom::CineSequence& seq) {
  if (seq.labels.size() != static_cast<std::size_t>(seq.frames) * phantom::kRegions) {
    throw std::invalid_argument("subject " + std::to_string(seq.subject_id) +
                                " carries no label matrix");
  }
  return Tensor({static_cast<std::size_t>(seq.frames), phantom::kRegions}, seq.labels);
}

TrainResult Train(const std::vector<phantom::CineSequence>& train_set,
                  const model::ResRNNConfig& model_cfg, const TrainConfig& cfg,
                  const ProgressFn& progress) {
  cfg.Validate();
  return Train(train_set, model_cfg, cfg, model::InitParams(model_cfg, cfg.seed, cfg.init),
               progress);
}

TrainResult Train(const std::vector<phantom::CineSequence>& train_set,
                  const model::ResRNNConfig& model_cfg, const TrainConfig& cfg,
                  model::ResRNNParams init, const ProgressFn& progress) {
  cfg.Validate();
  model_cfg.Validate();
  init.Validate(model_cfg);
  if (train_set.empty()) throw std::invalid_argument("training set is empty");
  if (static_cast<std::size_t>(model_cfg.input_size) != phantom::kCropSize) {
    throw std::invalid_argument("model input size must equal the crop size " +
                                std::to_string(phantom::kCropSize));
  }
  std::vector<Tensor> labels;
  labels.reserve(train_set.size());
  for (const auto& seq : train_set) {
    if (static_cast<std::size_t>(seq.frames) != model_cfg.frames) {
      throw std::invalid_argument("subject " + std::to_string(seq.subject_id) + " has " +
                                  std::to_string(seq.frames) + " frames, model expects " +
                                  std::to_string(model_cfg.frames));
    }
    labels.push_back(LabelTensor(seq));
  }

  TrainResult result;
  result.params = std::move(init);
  const auto params = TrainableParams(result.params, model_cfg);
  for (auto p : params) p.tensor.clear_grad();
  for (auto p : params) p.tensor.set_requires_grad(true);

  std::mt19937_64 rng(cfg.seed ^ 0x9E3779B97F4A7C15ull);
  std::vector<std::size_t> order(train_set.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::size_t cursor = order.size();
  const std::size_t batch =
      std::min<std::size_t>(static_cast<std::size_t>(cfg.batch_subjects), train_set.size());

  SgdState state;
  ad::Tape tape;
  for (int iter = 0; iter < cfg.max_iters; ++iter) {
    std::vector<Tensor> inputs, targets;
    for (std::size_t b = 0; b < batch; ++b) {
      if (cursor == order.size()) {
        std::shuffle(order.begin(), order.end(), rng);
        cursor = 0;
      }
      const std::size_t s = order[cursor++];
      inputs.push_back(CroppedInput(train_set[s], phantom::CropMode::kRandom, &rng));
      targets.push_back(labels[s]);
    }

    double data_term = 0.0;
    {
      ad::Tape::Scope scope(tape);
      const auto preds = model::ForwardBatch(result.params, model_cfg, inputs);
      Tensor loss = DataLoss(preds, targets);
      data_term = loss.item();
      tape.Backward(loss);
      tape.Clear();
    }
    const double objective = data_term + Regularizer(params, cfg.weight_decay);
    if (iter == 0) result.initial_loss = objective;
    if (!std::isfinite(objective) || objective > 1e3 * result.initial_loss) {
      throw NumericalError("training diverged at iteration " + std::to_string(iter) +
                           ": loss " + std::to_string(objective) + " vs initial " +
                           std::to_string(result.initial_loss));
    }
    if (iter % cfg.log_every == 0 || iter + 1 == cfg.max_iters) {
      result.loss_curve.emplace_back(iter, objective);
      if (progress) progress(iter, objective);
    }
    SgdStep(params, state, cfg, iter);
    for (auto p : params) p.tensor.zero_grad();
  }
  for (auto p : params) {
    p.tensor.set_requires_grad(false);
    p.tensor.clear_grad();
  }
  return result;
}

}  // namespace rwt::train
