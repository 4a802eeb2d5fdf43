#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "rwt/ad/tensor.h"
#include "rwt/nn/layers.h"

namespace rwt::model {

using ad::Tensor;

// The five architectures compared in the ablation.
enum class Variant { kCnn, kRnnPlain, kRnnCircle, kResRnnPlain, kResRnnCircle };

inline constexpr std::array<Variant, 5> kAllVariants = {
    Variant::kCnn, Variant::kRnnPlain, Variant::kRnnCircle, Variant::kResRnnPlain,
    Variant::kResRnnCircle};

// "cnn", "rnn-plain", "rnn-circle", "resrnn-plain", "resrnn-circle"
std::string_view VariantName(Variant v);
// "CNN", "RNN (plain)", ... as used in report headers
std::string_view VariantTitle(Variant v);
// Throws std::invalid_argument on an unknown name.
Variant ParseVariant(std::string_view name);

bool UsesCnnPath(Variant v);
bool UsesRnnPath(Variant v);
bool IsCircle(Variant v);

struct ConvSpec {
  std::size_t channels = 1;
  std::size_t kernel = 1;
  std::size_t stride = 1;
  std::size_t pad = 0;
};

struct ResRNNConfig {
  std::size_t frames = 20;
  std::size_t regions = 6;
  std::size_t input_size = 75;
  std::array<ConvSpec, 3> conv = {{{8, 5, 1, 0}, {16, 5, 1, 0}, {32, 3, 1, 0}}};
  std::size_t embed_dim = 100;
  // Forced equal to regions / frames; kept explicit so mismatches are caught.
  std::size_t temporal_hidden = 6;
  std::size_t spatial_hidden = 20;
  // Circle passes for each runner (ignored by plain variants).
  int temporal_depth = 20;
  int spatial_depth = 6;
  Variant variant = Variant::kResRnnCircle;
  // false: the RNN path is the temporal runner alone (no rearrangement).
  bool spatial_rnn = true;
  // Detach embeddings before the RNN path.
  bool freeze_trunk = false;

  // Throws std::invalid_argument describing the first inconsistency.
  void Validate() const;
  // [channels, height, width] after the third conv block.
  std::array<std::size_t, 3> FeatureShape() const;
  std::size_t FlattenDim() const;

  // 10x10 input, 3 frames, 2 regions, embed 5, depth 2.
  static ResRNNConfig Toy();
};

struct ResRNNParams {
  std::array<nn::ConvBlockParams, 3> conv;
  nn::FCParams fc1;
  nn::FCParams fc2;
  nn::LSTMCellParams temporal;
  nn::LSTMCellParams spatial;

  // Named handles sharing storage with this parameter set.
  std::vector<nn::NamedParam> Named() const;
  void Validate(const ResRNNConfig& cfg) const;
  ResRNNParams Clone() const;
  // Pointers to every tensor member, in Named() order.
  std::vector<Tensor*> Slots();
};

ResRNNParams InitParams(const ResRNNConfig& cfg, std::uint64_t seed,
                        nn::InitScheme scheme = nn::InitScheme::kUniformFanIn);

// frames: [1 x S x S] (single) or [N x 1 x S x S]; returns [E] or [N x E].
// conv1..3 (each relu + pool) -> flatten -> fc1 -> relu.
Tensor CnnEmbed(const ResRNNParams& params, const ResRNNConfig& cfg, const Tensor& frames);

// fc2 on embeddings [E] or [N x E]; returns [L] or [N x L].
Tensor CnnEstimate(const ResRNNParams& params, const Tensor& embeddings);

// Temporal runner over [F x E] embeddings -> [F x L]; transpose to [L x F];
// spatial runner over regions -> [L x F]; transpose back to [F x L].
Tensor RnnResidual(const ResRNNParams& params, const ResRNNConfig& cfg,
                   const Tensor& embeddings);

struct ForwardParts {
  Tensor cnn;     // [F x L]; undefined for RNN-only variants
  Tensor rnn;     // [F x L]; undefined for the CNN variant
  Tensor output;  // [F x L]
};

// sequence: [F x 1 x S x S] or [F x S x S].
ForwardParts ForwardDetailed(const ResRNNParams& params, const ResRNNConfig& cfg,
                             const Tensor& sequence);
Tensor Forward(const ResRNNParams& params, const ResRNNConfig& cfg, const Tensor& sequence);

// Runs several subjects with one batched trunk pass. Each output is [F x L].
std::vector<Tensor> ForwardBatch(const ResRNNParams& params, const ResRNNConfig& cfg,
                                 const std::vector<Tensor>& sequences);

}  // namespace rwt::model
