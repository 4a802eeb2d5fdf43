#pragma once

#include <cstddef>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "rwt/ad/tensor.h"

namespace rwt::nn {

using ad::Tensor;

enum class InitScheme {
  // U(-b, b) with b = sqrt(3 / fan_in); LSTM forget bias 1, other biases 0.
  kUniformFanIn,
  // Every parameter zero, including the forget bias.
  kZero,
};

// A parameter tensor with a stable name. `is_weight` marks tensors subject to
// weight decay (biases are not).
struct NamedParam {
  std::string name;
  Tensor tensor;
  bool is_weight = true;
};

struct FCParams {
  Tensor weight;  // [out x in]
  Tensor bias;    // [out]

  std::size_t in_dim() const { return weight.dim(1); }
  std::size_t out_dim() const { return weight.dim(0); }
  void Validate() const;
  void AppendParams(const std::string& prefix, std::vector<NamedParam>& out) const;
};

FCParams InitFC(std::size_t in_dim, std::size_t out_dim, std::mt19937_64& rng,
                InitScheme scheme);

// weight . x + bias for x [in]; row-wise for x [N x in].
Tensor FcForward(const FCParams& p, const Tensor& x);

struct ConvBlockParams {
  Tensor kernels;  // [K x C x kh x kw]
  Tensor bias;     // [K]
  std::size_t stride = 1;
  std::size_t pad = 0;

  void Validate() const;
  void AppendParams(const std::string& prefix, std::vector<NamedParam>& out) const;
};

ConvBlockParams InitConv(std::size_t out_channels, std::size_t in_channels,
                         std::size_t kernel, std::size_t stride, std::size_t pad,
                         std::mt19937_64& rng, InitScheme scheme);

// conv -> relu -> 2x2 max-pool.
Tensor ConvBlockForward(const ConvBlockParams& p, const Tensor& x);

struct LSTMCellParams {
  Tensor w_xi, w_xf, w_xo, w_xc;  // [hidden x input]
  Tensor w_hi, w_hf, w_ho, w_hc;  // [hidden x hidden]
  Tensor b_i, b_f, b_o, b_c;      // [hidden]

  std::size_t input_dim() const { return w_xi.dim(1); }
  std::size_t hidden_dim() const { return w_xi.dim(0); }
  void Validate() const;
  void AppendParams(const std::string& prefix, std::vector<NamedParam>& out) const;
};

LSTMCellParams InitLSTM(std::size_t input_dim, std::size_t hidden_dim,
                        std::mt19937_64& rng, InitScheme scheme);

struct LSTMState {
  Tensor h;  // [1 x hidden]
  Tensor c;  // [1 x hidden]
};

// One LSTM step:
//   i = sig(Wxi x + Whi h + bi), f = sig(Wxf x + Whf h + bf),
//   o = sig(Wxo x + Who h + bo), g = tanh(Wxc x + Whc h + bc),
//   c' = f * c + i * g, h' = o * tanh(c').
LSTMState LstmStep(const LSTMCellParams& p, const Tensor& x, const Tensor& h_prev,
                   const Tensor& c_prev);

struct CircleConfig {
  // Number of complete passes around the sequence; >= 1.
  int depth = 1;
};

// inputs: [T x input_dim], one row per step. Returns [T x hidden], row t the
// hidden state after step t. Starts from zero h and c.
Tensor RnnRunPlain(const LSTMCellParams& p, const Tensor& inputs);

// Circular recurrence: the cell is unrolled over the input stream repeated
// `depth` times, carrying h and c from step T of one pass into step 1 of the
// next. Returns the hidden states of the final pass. depth == 1 is exactly
// RnnRunPlain.
Tensor RnnRunCircle(const LSTMCellParams& p, const Tensor& inputs, CircleConfig cfg);

// List forms; each step is a vector [input_dim] or [1 x input_dim]. An empty
// list is rejected.
std::vector<Tensor> RnnRunPlain(const LSTMCellParams& p, std::span<const Tensor> steps);
std::vector<Tensor> RnnRunCircle(const LSTMCellParams& p, std::span<const Tensor> steps,
                                 CircleConfig cfg);

}  // namespace rwt::nn
