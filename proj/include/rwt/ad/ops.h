#pragma once

#include <cstddef>
#include <span>
#include <utility>
#include <vector>

#include "rwt/ad/tensor.h"

// Differentiable tensor operations. Every op validates shapes and throws
// std::invalid_argument with the offending shapes on mismatch.
namespace rwt::ad {

// [m x k] . [k x n] -> [m x n]
Tensor MatMul(const Tensor& a, const Tensor& b);

struct Conv2dOptions {
  std::size_t stride = 1;
  std::size_t pad = 0;
};

// Cross-correlation with zero padding.
// input: [C x H x W] or [N x C x H x W]; kernels: [K x C x kh x kw];
// bias: undefined or [K]. Output: [(N x) K x H' x W'] with
// H' = (H + 2 pad - kh) / stride + 1.
Tensor Conv2d(const Tensor& input, const Tensor& kernels, const Tensor& bias,
              Conv2dOptions options);
inline Tensor Conv2d(const Tensor& input, const Tensor& kernels,
                     Conv2dOptions options) {
  return Conv2d(input, kernels, Tensor(), options);
}

// 2x2 max pooling with stride 2 over the last two axes. Odd trailing
// rows/columns are dropped. Ties route the gradient to the first maximal
// element in row-major window order.
Tensor MaxPool2(const Tensor& input);

enum class Activation { kRelu, kSigmoid, kTanh };

Tensor Activate(const Tensor& input, Activation kind);
inline Tensor Relu(const Tensor& x) { return Activate(x, Activation::kRelu); }
inline Tensor Sigmoid(const Tensor& x) { return Activate(x, Activation::kSigmoid); }
inline Tensor Tanh(const Tensor& x) { return Activate(x, Activation::kTanh); }

// Element-wise ops on identical shapes.
Tensor Add(const Tensor& a, const Tensor& b);
Tensor Sub(const Tensor& a, const Tensor& b);
Tensor Mul(const Tensor& a, const Tensor& b);
Tensor Scale(const Tensor& a, double factor);

// x: [D] or [N x D...] with trailing extent(s) D; bias [D] is repeated along
// the leading axis.
Tensor AddBias(const Tensor& x, const Tensor& bias);

// Sum of all elements -> scalar [1].
Tensor Sum(const Tensor& a);

Tensor Reshape(const Tensor& a, Shape shape);
Tensor Transpose2d(const Tensor& a);
// Concatenates along axis 0. Inputs must agree on all trailing extents.
Tensor ConcatRows(std::span<const Tensor> parts);
// Rows [begin, begin + count) along axis 0.
Tensor SliceRows(const Tensor& a, std::size_t begin, std::size_t count);
// Row `index` of a 2-D tensor as a [1 x n] tensor.
Tensor SliceRow(const Tensor& a, std::size_t index);

// Gated recurrence pointwise stage. `gates` holds the four pre-activations
// [i | f | o | g] of width H each ([4H] or [1 x 4H]); c_prev is [1 x H].
// Returns (h, c), both [1 x H]:
//   i = sig(.), f = sig(.), o = sig(.), g = tanh(.)
//   c = f * c_prev + i * g,  h = o * tanh(c)
std::pair<Tensor, Tensor> LstmPointwise(const Tensor& gates, const Tensor& c_prev);

}  // namespace rwt::ad
