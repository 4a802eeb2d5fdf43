#include "rwt/model/resrnn.h"

#include <random>
#include <stdexcept>

#include "rwt/ad/ops.h"

namespace rwt::model {
namespace {

using ad::ShapeString;

std::size_t ConvOut(std::size_t in, const ConvSpec& c) {
  return (in + 2 * c.pad - c.kernel) / c.stride + 1;
}

// [N x 1 x S x S] view of the input frames; checks extents.
Tensor AsFrameBatch(const ResRNNConfig& cfg, const Tensor& frames, bool* single) {
  const std::size_t s = cfg.input_size;
  const auto& shape = frames.shape();
  *single = false;
  if (shape == ad::Shape{1, s, s}) {
    *single = true;
    return ad::Reshape(frames, {1, 1, s, s});
  }
  if (shape.size() == 4 && shape[1] == 1 && shape[2] == s && shape[3] == s) return frames;
  if (shape.size() == 3 && shape[1] == s && shape[2] == s) {
    return ad::Reshape(frames, {shape[0], 1, s, s});
  }
  throw std::invalid_argument("frames " + ShapeString(shape) + " do not match input size " +
                              std::to_string(s));
}

}  // namespace

std::string_view VariantName(Variant v) {
  switch (v) {
    case Variant::kCnn: return "cnn";
    case Variant::kRnnPlain: return "rnn-plain";
    case Variant::kRnnCircle: return "rnn-circle";
    case Variant::kResRnnPlain: return "resrnn-plain";
    case Variant::kResRnnCircle: return "resrnn-circle";
  }
  return "?";
}

std::string_view VariantTitle(Variant v) {
  switch (v) {
    case Variant::kCnn: return "CNN";
    case Variant::kRnnPlain: return "RNN (plain)";
    case Variant::kRnnCircle: return "RNN (circle)";
    case Variant::kResRnnPlain: return "ResRNN (plain)";
    case Variant::kResRnnCircle: return "ResRNN (circle)";
  }
  return "?";
}

Variant ParseVariant(std::string_view name) {
  for (Variant v : kAllVariants) {
    if (VariantName(v) == name) return v;
  }
  throw std::invalid_argument("unknown variant '" + std::string(name) +
                              "' (expected cnn, rnn-plain, rnn-circle, resrnn-plain or "
                              "resrnn-circle)");
}

bool UsesCnnPath(Variant v) { return v != Variant::kRnnPlain && v != Variant::kRnnCircle; }
bool UsesRnnPath(Variant v) { return v != Variant::kCnn; }
bool IsCircle(Variant v) { return v == Variant::kRnnCircle || v == Variant::kResRnnCircle; }

void ResRNNConfig::Validate() const {
  if (frames == 0 || regions == 0) throw std::invalid_argument("frames and regions must be >= 1");
  if (temporal_hidden != regions) {
    throw std::invalid_argument("temporal hidden width " + std::to_string(temporal_hidden) +
                                " must equal the number of regions " +
                                std::to_string(regions));
  }
  if (spatial_hidden != frames) {
    throw std::invalid_argument("spatial hidden width " + std::to_string(spatial_hidden) +
                                " must equal the number of frames " + std::to_string(frames));
  }
  if (temporal_depth < 1 || spatial_depth < 1) {
    throw std::invalid_argument("circle depth must be >= 1");
  }
  if (embed_dim == 0) throw std::invalid_argument("embed_dim must be >= 1");
  std::size_t size = input_size;
  for (std::size_t i = 0; i < conv.size(); ++i) {
    const ConvSpec& c = conv[i];
    if (c.channels == 0 || c.kernel == 0 || c.stride == 0) {
      throw std::invalid_argument("conv" + std::to_string(i + 1) + " has a zero extent");
    }
    if (size + 2 * c.pad < c.kernel) {
      throw std::invalid_argument("conv" + std::to_string(i + 1) + " kernel exceeds its " +
                                  std::to_string(size) + "px input");
    }
    size = ConvOut(size, c);
    if (size < 2) {
      throw std::invalid_argument("conv" + std::to_string(i + 1) + " output " +
                                  std::to_string(size) + "px is too small to pool");
    }
    size /= 2;
  }
}

std::array<std::size_t, 3> ResRNNConfig::FeatureShape() const {
  std::size_t size = input_size;
  for (const ConvSpec& c : conv) size = ConvOut(size, c) / 2;
  return {conv[2].channels, size, size};
}

std::size_t ResRNNConfig::FlattenDim() const {
  const auto s = FeatureShape();
  return s[0] * s[1] * s[2];
}

ResRNNConfig ResRNNConfig::Toy() {
  ResRNNConfig cfg;
  cfg.frames = 3;
  cfg.regions = 2;
  cfg.input_size = 10;
  cfg.conv = {{{2, 3, 1, 1}, {3, 3, 1, 1}, {4, 3, 1, 1}}};
  cfg.embed_dim = 5;
  cfg.temporal_hidden = 2;
  cfg.spatial_hidden = 3;
  cfg.temporal_depth = 2;
  cfg.spatial_depth = 2;
  return cfg;
}

std::vector<nn::NamedParam> ResRNNParams::Named() const {
  std::vector<nn::NamedParam> out;
  for (std::size_t i = 0; i < conv.size(); ++i) {
    conv[i].AppendParams("conv" + std::to_string(i + 1), out);
  }
  fc1.AppendParams("fc1", out);
  fc2.AppendParams("fc2", out);
  temporal.AppendParams("temporal", out);
  spatial.AppendParams("spatial", out);
  return out;
}

void ResRNNParams::Validate(const ResRNNConfig& cfg) const {
  cfg.Validate();
  std::size_t in_channels = 1;
  for (std::size_t i = 0; i < conv.size(); ++i) {
    conv[i].Validate();
    const ConvSpec& spec = cfg.conv[i];
    const ad::Shape want{spec.channels, in_channels, spec.kernel, spec.kernel};
    if (conv[i].kernels.shape() != want || conv[i].stride != spec.stride ||
        conv[i].pad != spec.pad) {
      throw std::invalid_argument("conv" + std::to_string(i + 1) + " kernels " +
                                  ShapeString(conv[i].kernels.shape()) +
                                  " do not match config " + ShapeString(want));
    }
    in_channels = spec.channels;
  }
  fc1.Validate();
  fc2.Validate();
  if (fc1.in_dim() != cfg.FlattenDim() || fc1.out_dim() != cfg.embed_dim) {
    throw std::invalid_argument("fc1 must map " + std::to_string(cfg.FlattenDim()) + " -> " +
                                std::to_string(cfg.embed_dim));
  }
  if (fc2.in_dim() != cfg.embed_dim || fc2.out_dim() != cfg.regions) {
    throw std::invalid_argument("fc2 must map " + std::to_string(cfg.embed_dim) + " -> " +
                                std::to_string(cfg.regions));
  }
  temporal.Validate();
  spatial.Validate();
  if (temporal.input_dim() != cfg.embed_dim || temporal.hidden_dim() != cfg.temporal_hidden) {
    throw std::invalid_argument("temporal cell must map " + std::to_string(cfg.embed_dim) +
                                " -> " + std::to_string(cfg.temporal_hidden));
  }
  if (spatial.input_dim() != cfg.frames || spatial.hidden_dim() != cfg.spatial_hidden) {
    throw std::invalid_argument("spatial cell must map " + std::to_string(cfg.frames) +
                                " -> " + std::to_string(cfg.spatial_hidden));
  }
}

ResRNNParams ResRNNParams::Clone() const {
  ResRNNParams copy = *this;
  for (Tensor* t : copy.Slots()) *t = t->Clone();
  return copy;
}

std::vector<Tensor*> ResRNNParams::Slots() {
  std::vector<Tensor*> out;
  for (auto& c : conv) {
    out.push_back(&c.kernels);
    out.push_back(&c.bias);
  }
  for (nn::FCParams* fc : {&fc1, &fc2}) {
    out.push_back(&fc->weight);
    out.push_back(&fc->bias);
  }
  for (nn::LSTMCellParams* cell : {&temporal, &spatial}) {
    for (Tensor* t : {&cell->w_xi, &cell->w_xf, &cell->w_xo, &cell->w_xc, &cell->w_hi,
                      &cell->w_hf, &cell->w_ho, &cell->w_hc, &cell->b_i, &cell->b_f,
                      &cell->b_o, &cell->b_c}) {
      out.push_back(t);
    }
  }
  return out;
}

ResRNNParams InitParams(const ResRNNConfig& cfg, std::uint64_t seed, nn::InitScheme scheme) {
  cfg.Validate();
  std::mt19937_64 rng(seed);
  ResRNNParams p;
  std::size_t in_channels = 1;
  for (std::size_t i = 0; i < cfg.conv.size(); ++i) {
    const ConvSpec& c = cfg.conv[i];
    p.conv[i] = nn::InitConv(c.channels, in_channels, c.kernel, c.stride, c.pad, rng, scheme);
    in_channels = c.channels;
  }
  p.fc1 = nn::InitFC(cfg.FlattenDim(), cfg.embed_dim, rng, scheme);
  p.fc2 = nn::InitFC(cfg.embed_dim, cfg.regions, rng, scheme);
  p.temporal = nn::InitLSTM(cfg.embed_dim, cfg.temporal_hidden, rng, scheme);
  p.spatial = nn::InitLSTM(cfg.frames, cfg.spatial_hidden, rng, scheme);
  return p;
}

Tensor CnnEmbed(const ResRNNParams& params, const ResRNNConfig& cfg, const Tensor& frames) {
  bool single = false;
  Tensor x = AsFrameBatch(cfg, frames, &single);
  const std::size_t n = x.dim(0);
  for (const auto& block : params.conv) x = nn::ConvBlockForward(block, x);
  x = ad::Reshape(x, {n, x.size() / n});
  Tensor e = ad::Relu(nn::FcForward(params.fc1, x));
  return single ? ad::Reshape(e, {e.size()}) : e;
}

Tensor CnnEstimate(const ResRNNParams& params, const Tensor& embeddings) {
  return nn::FcForward(params.fc2, embeddings);
}

Tensor RnnResidual(const ResRNNParams& params, const ResRNNConfig& cfg,
                   const Tensor& embeddings) {
  if (embeddings.rank() != 2 || embeddings.dim(0) != cfg.frames ||
      embeddings.dim(1) != cfg.embed_dim) {
    throw std::invalid_argument("rnn path expects [" + std::to_string(cfg.frames) + " x " +
                                std::to_string(cfg.embed_dim) + "] embeddings, got " +
                                ShapeString(embeddings.shape()));
  }
  const bool circle = IsCircle(cfg.variant);
  const nn::CircleConfig temporal_circle{circle ? cfg.temporal_depth : 1};
  const nn::CircleConfig spatial_circle{circle ? cfg.spatial_depth : 1};
  Tensor input = cfg.freeze_trunk ? embeddings.Detach() : embeddings;
  Tensor temporal = nn::RnnRunCircle(params.temporal, input, temporal_circle);  // [F x L]
  if (!cfg.spatial_rnn) return temporal;
  Tensor by_region = ad::Transpose2d(temporal);                                 // [L x F]
  Tensor spatial = nn::RnnRunCircle(params.spatial, by_region, spatial_circle); // [L x F]
  return ad::Transpose2d(spatial);
}

namespace {

ForwardParts Combine(const ResRNNParams& params, const ResRNNConfig& cfg,
                     const Tensor& embeddings) {
  ForwardParts parts;
  if (UsesCnnPath(cfg.variant)) parts.cnn = CnnEstimate(params, embeddings);
  if (UsesRnnPath(cfg.variant)) parts.rnn = RnnResidual(params, cfg, embeddings);
  if (parts.cnn.defined() && parts.rnn.defined()) {
    parts.output = ad::Add(parts.cnn, parts.rnn);
  } else {
    parts.output = parts.cnn.defined() ? parts.cnn : parts.rnn;
  }
  return parts;
}

}  // namespace

ForwardParts ForwardDetailed(const ResRNNParams& params, const ResRNNConfig& cfg,
                             const Tensor& sequence) {
  if (sequence.dim(0) != cfg.frames) {
    throw std::invalid_argument("sequence " + ShapeString(sequence.shape()) + " must hold " +
                                std::to_string(cfg.frames) + " frames");
  }
  Tensor embeddings = CnnEmbed(params, cfg, sequence);
  return Combine(params, cfg, embeddings);
}

Tensor Forward(const ResRNNParams& params, const ResRNNConfig& cfg, const Tensor& sequence) {
  return ForwardDetailed(params, cfg, sequence).output;
}

std::vector<Tensor> ForwardBatch(const ResRNNParams& params, const ResRNNConfig& cfg,
                                 const std::vector<Tensor>& sequences) {
  if (sequences.empty()) return {};
  for (const Tensor& s : sequences) {
    if (s.dim(0) != cfg.frames) {
      throw std::invalid_argument("sequence " + ShapeString(s.shape()) + " must hold " +
                                  std::to_string(cfg.frames) + " frames");
    }
  }
  Tensor all = sequences.size() == 1 ? sequences.front() : ad::ConcatRows(sequences);
  Tensor embeddings = CnnEmbed(params, cfg, all);
  std::vector<Tensor> out;
  out.reserve(sequences.size());
  for (std::size_t s = 0; s < sequences.size(); ++s) {
    Tensor e = sequences.size() == 1 ? embeddings
                                     : ad::SliceRows(embeddings, s * cfg.frames, cfg.frames);
    out.push_back(Combine(params, cfg, e).output);
  }
  return out;
}

}  // namespace rwt::model
