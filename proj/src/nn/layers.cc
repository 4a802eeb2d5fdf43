#include "rwt/nn/layers.h"

#include <cmath>
#include <stdexcept>

#include "rwt/ad/ops.h"

namespace rwt::nn {
namespace {

using ad::Shape;
using ad::ShapeString;

Tensor UniformFanIn(Shape shape, std::size_t fan_in, std::mt19937_64& rng,
                    InitScheme scheme) {
  Tensor t(std::move(shape));
  if (scheme == InitScheme::kUniformFanIn) {
    const double bound = std::sqrt(3.0 / static_cast<double>(fan_in));
    std::uniform_real_distribution<double> dist(-bound, bound);
    for (double& v : t.data()) v = dist(rng);
  }
  t.set_requires_grad(true);
  return t;
}

Tensor Bias(std::size_t n, double value) {
  Tensor t({n}, value);
  t.set_requires_grad(true);
  return t;
}

void CheckFinite(const Tensor& t, const char* what) {
  for (double v : t.data()) {
    if (!std::isfinite(v)) throw std::invalid_argument(std::string(what) + " is not finite");
  }
}

void Expect(const Tensor& t, const Shape& shape, const char* what) {
  if (!t.defined() || t.shape() != shape) {
    throw std::invalid_argument(std::string(what) + " must be " + ShapeString(shape) +
                                ", got " +
                                (t.defined() ? ShapeString(t.shape()) : "undefined"));
  }
  CheckFinite(t, what);
}

Tensor AsRow(const Tensor& v) {
  if (v.rank() == 2 && v.dim(0) == 1) return v;
  if (v.rank() == 1) return ad::Reshape(v, {1, v.size()});
  throw std::invalid_argument("expected a vector, got " + ShapeString(v.shape()));
}

struct StackedCell {
  Tensor wx_t;  // [input x 4H]
  Tensor wh_t;  // [H x 4H]
  Tensor bias;  // [4H]
};

StackedCell Stack(const LSTMCellParams& p) {
  const Tensor wx[] = {p.w_xi, p.w_xf, p.w_xo, p.w_xc};
  const Tensor wh[] = {p.w_hi, p.w_hf, p.w_ho, p.w_hc};
  const Tensor b[] = {p.b_i, p.b_f, p.b_o, p.b_c};
  return {ad::Transpose2d(ad::ConcatRows(wx)), ad::Transpose2d(ad::ConcatRows(wh)),
          ad::ConcatRows(b)};
}

Tensor RunCell(const LSTMCellParams& p, const Tensor& inputs, int passes) {
  p.Validate();
  if (inputs.rank() != 2 || inputs.dim(1) != p.input_dim()) {
    throw std::invalid_argument("recurrent inputs must be [T x " +
                                std::to_string(p.input_dim()) + "], got " +
                                ShapeString(inputs.shape()));
  }
  if (passes < 1) throw std::invalid_argument("circle depth must be >= 1");
  const std::size_t steps = inputs.dim(0);
  const std::size_t hidden = p.hidden_dim();
  const StackedCell cell = Stack(p);
  // Input projections are identical on every pass, so compute them once.
  const Tensor zx = ad::AddBias(ad::MatMul(inputs, cell.wx_t), cell.bias);

  Tensor h = Tensor::Zeros({1, hidden});
  Tensor c = Tensor::Zeros({1, hidden});
  std::vector<Tensor> outputs(steps);
  const std::size_t total = static_cast<std::size_t>(passes) * steps;
  const std::size_t last_pass = total - steps;
  for (std::size_t s = 0; s < total; ++s) {
    const std::size_t t = s % steps;
    Tensor gates = ad::Add(ad::SliceRow(zx, t), ad::MatMul(h, cell.wh_t));
    std::tie(h, c) = ad::LstmPointwise(gates, c);
    if (s >= last_pass) outputs[t] = h;
  }
  return ad::ConcatRows(outputs);
}

std::vector<Tensor> SplitRows(const Tensor& m) {
  std::vector<Tensor> rows;
  rows.reserve(m.dim(0));
  for (std::size_t t = 0; t < m.dim(0); ++t) rows.push_back(ad::SliceRow(m, t));
  return rows;
}

Tensor StackSteps(std::span<const Tensor> steps) {
  if (steps.empty()) throw std::invalid_argument("recurrent runner: empty sequence");
  std::vector<Tensor> rows;
  rows.reserve(steps.size());
  for (const Tensor& s : steps) rows.push_back(AsRow(s));
  return ad::ConcatRows(rows);
}

}  // namespace

void FCParams::Validate() const {
  if (!weight.defined() || weight.rank() != 2) {
    throw std::invalid_argument("fc weight must be a matrix");
  }
  Expect(bias, {weight.dim(0)}, "fc bias");
  CheckFinite(weight, "fc weight");
}

void FCParams::AppendParams(const std::string& prefix,
                            std::vector<NamedParam>& out) const {
  out.push_back({prefix + ".weight", weight, true});
  out.push_back({prefix + ".bias", bias, false});
}

FCParams InitFC(std::size_t in_dim, std::size_t out_dim, std::mt19937_64& rng,
                InitScheme scheme) {
  return {UniformFanIn({out_dim, in_dim}, in_dim, rng, scheme), Bias(out_dim, 0.0)};
}

Tensor FcForward(const FCParams& p, const Tensor& x) {
  const std::size_t in = p.in_dim();
  if (x.rank() == 1) {
    if (x.size() != in) {
      throw std::invalid_argument("fc: input " + ShapeString(x.shape()) + " but in_dim " +
                                  std::to_string(in));
    }
    Tensor y = ad::MatMul(ad::Reshape(x, {1, in}), ad::Transpose2d(p.weight));
    return ad::Reshape(ad::AddBias(y, p.bias), {p.out_dim()});
  }
  if (x.rank() != 2 || x.dim(1) != in) {
    throw std::invalid_argument("fc: input " + ShapeString(x.shape()) + " but in_dim " +
                                std::to_string(in));
  }
  return ad::AddBias(ad::MatMul(x, ad::Transpose2d(p.weight)), p.bias);
}

void ConvBlockParams::Validate() const {
  if (!kernels.defined() || kernels.rank() != 4) {
    throw std::invalid_argument("conv kernels must be [K x C x kh x kw]");
  }
  Expect(bias, {kernels.dim(0)}, "conv bias");
  CheckFinite(kernels, "conv kernels");
  if (stride == 0) throw std::invalid_argument("conv stride must be positive");
}

void ConvBlockParams::AppendParams(const std::string& prefix,
                                   std::vector<NamedParam>& out) const {
  out.push_back({prefix + ".kernels", kernels, true});
  out.push_back({prefix + ".bias", bias, false});
}

ConvBlockParams InitConv(std::size_t out_channels, std::size_t in_channels,
                         std::size_t kernel, std::size_t stride, std::size_t pad,
                         std::mt19937_64& rng, InitScheme scheme) {
  return {UniformFanIn({out_channels, in_channels, kernel, kernel},
                       in_channels * kernel * kernel, rng, scheme),
          Bias(out_channels, 0.0), stride, pad};
}

Tensor ConvBlockForward(const ConvBlockParams& p, const Tensor& x) {
  return ad::MaxPool2(ad::Relu(ad::Conv2d(x, p.kernels, p.bias, {p.stride, p.pad})));
}

void LSTMCellParams::Validate() const {
  if (!w_xi.defined() || w_xi.rank() != 2) {
    throw std::invalid_argument("lstm W_xi must be a matrix");
  }
  const std::size_t h = w_xi.dim(0), in = w_xi.dim(1);
  Expect(w_xi, {h, in}, "lstm W_xi");
  Expect(w_xf, {h, in}, "lstm W_xf");
  Expect(w_xo, {h, in}, "lstm W_xo");
  Expect(w_xc, {h, in}, "lstm W_xc");
  Expect(w_hi, {h, h}, "lstm W_hi");
  Expect(w_hf, {h, h}, "lstm W_hf");
  Expect(w_ho, {h, h}, "lstm W_ho");
  Expect(w_hc, {h, h}, "lstm W_hc");
  Expect(b_i, {h}, "lstm b_i");
  Expect(b_f, {h}, "lstm b_f");
  Expect(b_o, {h}, "lstm b_o");
  Expect(b_c, {h}, "lstm b_c");
}

void LSTMCellParams::AppendParams(const std::string& prefix,
                                  std::vector<NamedParam>& out) const {
  out.push_back({prefix + ".w_xi", w_xi, true});
  out.push_back({prefix + ".w_xf", w_xf, true});
  out.push_back({prefix + ".w_xo", w_xo, true});
  out.push_back({prefix + ".w_xc", w_xc, true});
  out.push_back({prefix + ".w_hi", w_hi, true});
  out.push_back({prefix + ".w_hf", w_hf, true});
  out.push_back({prefix + ".w_ho", w_ho, true});
  out.push_back({prefix + ".w_hc", w_hc, true});
  out.push_back({prefix + ".b_i", b_i, false});
  out.push_back({prefix + ".b_f", b_f, false});
  out.push_back({prefix + ".b_o", b_o, false});
  out.push_back({prefix + ".b_c", b_c, false});
}

LSTMCellParams InitLSTM(std::size_t input_dim, std::size_t hidden_dim,
                        std::mt19937_64& rng, InitScheme scheme) {
  LSTMCellParams p;
  p.w_xi = UniformFanIn({hidden_dim, input_dim}, input_dim, rng, scheme);
  p.w_xf = UniformFanIn({hidden_dim, input_dim}, input_dim, rng, scheme);
  p.w_xo = UniformFanIn({hidden_dim, input_dim}, input_dim, rng, scheme);
  p.w_xc = UniformFanIn({hidden_dim, input_dim}, input_dim, rng, scheme);
  p.w_hi = UniformFanIn({hidden_dim, hidden_dim}, hidden_dim, rng, scheme);
  p.w_hf = UniformFanIn({hidden_dim, hidden_dim}, hidden_dim, rng, scheme);
  p.w_ho = UniformFanIn({hidden_dim, hidden_dim}, hidden_dim, rng, scheme);
  p.w_hc = UniformFanIn({hidden_dim, hidden_dim}, hidden_dim, rng, scheme);
  p.b_i = Bias(hidden_dim, 0.0);
  p.b_f = Bias(hidden_dim, scheme == InitScheme::kUniformFanIn ? 1.0 : 0.0);
  p.b_o = Bias(hidden_dim, 0.0);
  p.b_c = Bias(hidden_dim, 0.0);
  return p;
}

LSTMState LstmStep(const LSTMCellParams& p, const Tensor& x, const Tensor& h_prev,
                   const Tensor& c_prev) {
  p.Validate();
  const std::size_t hidden = p.hidden_dim();
  const Tensor x_row = AsRow(x);
  const Tensor h_row = AsRow(h_prev);
  const Tensor c_row = AsRow(c_prev);
  if (x_row.dim(1) != p.input_dim() || h_row.dim(1) != hidden || c_row.dim(1) != hidden) {
    throw std::invalid_argument("lstm_step: dimensions " + ShapeString(x.shape()) + ", " +
                                ShapeString(h_prev.shape()) + ", " +
                                ShapeString(c_prev.shape()) + " do not match cell " +
                                std::to_string(p.input_dim()) + "->" +
                                std::to_string(hidden));
  }
  const StackedCell cell = Stack(p);
  Tensor gates = ad::Add(ad::AddBias(ad::MatMul(x_row, cell.wx_t), cell.bias),
                         ad::MatMul(h_row, cell.wh_t));
  auto [h, c] = ad::LstmPointwise(gates, c_row);
  return {h, c};
}

Tensor RnnRunPlain(const LSTMCellParams& p, const Tensor& inputs) {
  return RunCell(p, inputs, 1);
}

Tensor RnnRunCircle(const LSTMCellParams& p, const Tensor& inputs, CircleConfig cfg) {
  return RunCell(p, inputs, cfg.depth);
}

std::vector<Tensor> RnnRunPlain(const LSTMCellParams& p, std::span<const Tensor> steps) {
  return SplitRows(RunCell(p, StackSteps(steps), 1));
}

std::vector<Tensor> RnnRunCircle(const LSTMCellParams& p, std::span<const Tensor> steps,
                                 CircleConfig cfg) {
  return SplitRows(RunCell(p, StackSteps(steps), cfg.depth));
}

}  // namespace rwt::nn
