#include "rwt/ad/ops.h"

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <memory>
#include <stdexcept>
#include <string>

#include "rwt/ad/tape.h"

namespace rwt::ad {
namespace {

using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MapMat = Eigen::Map<RowMat>;
using ConstMapMat = Eigen::Map<const RowMat>;

[[noreturn]] void ShapeError(const std::string& op, const std::string& detail) {
  throw std::invalid_argument(op + ": " + detail);
}

// Returns the active tape when any input needs a gradient, else nullptr.
Tape* Recording(std::initializer_list<const Tensor*> inputs) {
  Tape* tape = Tape::Active();
  if (tape == nullptr) return nullptr;
  for (const Tensor* t : inputs) {
    if (t->defined() && t->requires_grad()) return tape;
  }
  return nullptr;
}

void RequireSameShape(const char* op, const Tensor& a, const Tensor& b) {
  if (a.shape() != b.shape()) {
    ShapeError(op, "shape mismatch " + ShapeString(a.shape()) + " vs " +
                       ShapeString(b.shape()));
  }
}

// Writes the receptive fields of one [C x H x W] image into a
// [C*kh*kw x Ho*Wo] matrix.
void Im2Col(const double* image, std::size_t channels, std::size_t height,
            std::size_t width, std::size_t kh, std::size_t kw, std::size_t stride,
            std::size_t pad, std::size_t out_h, std::size_t out_w, double* col) {
  const std::ptrdiff_t h = static_cast<std::ptrdiff_t>(height);
  const std::ptrdiff_t w = static_cast<std::ptrdiff_t>(width);
  for (std::size_t c = 0; c < channels; ++c) {
    const double* plane = image + c * height * width;
    for (std::size_t ki = 0; ki < kh; ++ki) {
      for (std::size_t kj = 0; kj < kw; ++kj) {
        for (std::size_t oy = 0; oy < out_h; ++oy) {
          const std::ptrdiff_t iy = static_cast<std::ptrdiff_t>(oy * stride + ki) -
                                    static_cast<std::ptrdiff_t>(pad);
          double* dst = col + oy * out_w;
          if (iy < 0 || iy >= h) {
            std::fill(dst, dst + out_w, 0.0);
            continue;
          }
          const double* src = plane + iy * w;
          for (std::size_t ox = 0; ox < out_w; ++ox) {
            const std::ptrdiff_t ix = static_cast<std::ptrdiff_t>(ox * stride + kj) -
                                      static_cast<std::ptrdiff_t>(pad);
            dst[ox] = (ix < 0 || ix >= w) ? 0.0 : src[ix];
          }
        }
        col += out_h * out_w;
      }
    }
  }
}

void Col2ImAdd(const double* col, std::size_t channels, std::size_t height,
               std::size_t width, std::size_t kh, std::size_t kw, std::size_t stride,
               std::size_t pad, std::size_t out_h, std::size_t out_w, double* image) {
  const std::ptrdiff_t h = static_cast<std::ptrdiff_t>(height);
  const std::ptrdiff_t w = static_cast<std::ptrdiff_t>(width);
  for (std::size_t c = 0; c < channels; ++c) {
    double* plane = image + c * height * width;
    for (std::size_t ki = 0; ki < kh; ++ki) {
      for (std::size_t kj = 0; kj < kw; ++kj) {
        for (std::size_t oy = 0; oy < out_h; ++oy) {
          const std::ptrdiff_t iy = static_cast<std::ptrdiff_t>(oy * stride + ki) -
                                    static_cast<std::ptrdiff_t>(pad);
          const double* src = col + oy * out_w;
          if (iy < 0 || iy >= h) continue;
          double* dst = plane + iy * w;
          for (std::size_t ox = 0; ox < out_w; ++ox) {
            const std::ptrdiff_t ix = static_cast<std::ptrdiff_t>(ox * stride + kj) -
                                      static_cast<std::ptrdiff_t>(pad);
            if (ix >= 0 && ix < w) dst[ix] += src[ox];
          }
        }
        col += out_h * out_w;
      }
    }
  }
}

}  // namespace

Tensor MatMul(const Tensor& a, const Tensor& b) {
  if (a.rank() != 2 || b.rank() != 2) {
    ShapeError("matmul", "expects 2-D operands, got " + ShapeString(a.shape()) + " and " +
                             ShapeString(b.shape()));
  }
  const std::size_t m = a.dim(0), k = a.dim(1), n = b.dim(1);
  if (b.dim(0) != k) {
    ShapeError("matmul", "inner extents disagree: " + ShapeString(a.shape()) + " . " +
                             ShapeString(b.shape()));
  }
  Tensor out({m, n});
  MapMat(out.data().data(), m, n).noalias() =
      ConstMapMat(a.data().data(), m, k) * ConstMapMat(b.data().data(), k, n);
  if (Tape* tape = Recording({&a, &b})) {
    out.set_requires_grad();
    tape->Record([a, b, out, m, k, n]() mutable {
      if (!out.has_grad()) return;
      ConstMapMat dc(out.grad().data(), m, n);
      if (a.requires_grad()) {
        MapMat(a.mutable_grad().data(), m, k).noalias() +=
            dc * ConstMapMat(b.data().data(), k, n).transpose();
      }
      if (b.requires_grad()) {
        MapMat(b.mutable_grad().data(), k, n).noalias() +=
            ConstMapMat(a.data().data(), m, k).transpose() * dc;
      }
    });
  }
  return out;
}

Tensor Conv2d(const Tensor& input, const Tensor& kernels, const Tensor& bias,
              Conv2dOptions options) {
  if (input.rank() != 3 && input.rank() != 4) {
    ShapeError("conv2d", "input must be [C x H x W] or [N x C x H x W], got " +
                             ShapeString(input.shape()));
  }
  if (kernels.rank() != 4) {
    ShapeError("conv2d", "kernels must be [K x C x kh x kw], got " +
                             ShapeString(kernels.shape()));
  }
  if (options.stride == 0) ShapeError("conv2d", "stride must be positive");
  const bool batched = input.rank() == 4;
  const std::size_t batch = batched ? input.dim(0) : 1;
  const std::size_t channels = input.dim(batched ? 1 : 0);
  const std::size_t height = input.dim(batched ? 2 : 1);
  const std::size_t width = input.dim(batched ? 3 : 2);
  const std::size_t out_channels = kernels.dim(0);
  const std::size_t kh = kernels.dim(2), kw = kernels.dim(3);
  const std::size_t stride = options.stride, pad = options.pad;
  if (kernels.dim(1) != channels) {
    ShapeError("conv2d", "kernel channels " + std::to_string(kernels.dim(1)) +
                             " != input channels " + std::to_string(channels));
  }
  if (height + 2 * pad < kh || width + 2 * pad < kw) {
    ShapeError("conv2d", "kernel " + ShapeString(kernels.shape()) +
                             " larger than padded input " + ShapeString(input.shape()));
  }
  if (bias.defined() && (bias.size() != out_channels)) {
    ShapeError("conv2d", "bias " + ShapeString(bias.shape()) + " does not match " +
                             std::to_string(out_channels) + " kernels");
  }
  const std::size_t out_h = (height + 2 * pad - kh) / stride + 1;
  const std::size_t out_w = (width + 2 * pad - kw) / stride + 1;
  const std::size_t patch = channels * kh * kw;
  const std::size_t pixels = out_h * out_w;
  const std::size_t in_stride = channels * height * width;
  const std::size_t out_stride = out_channels * pixels;

  Shape out_shape = batched ? Shape{batch, out_channels, out_h, out_w}
                            : Shape{out_channels, out_h, out_w};
  Tensor out(out_shape);
  RowMat col(patch, pixels);
  ConstMapMat weight(kernels.data().data(), out_channels, patch);
  for (std::size_t n = 0; n < batch; ++n) {
    Im2Col(input.data().data() + n * in_stride, channels, height, width, kh, kw, stride,
           pad, out_h, out_w, col.data());
    MapMat y(out.data().data() + n * out_stride, out_channels, pixels);
    y.noalias() = weight * col;
    if (bias.defined()) {
      for (std::size_t k = 0; k < out_channels; ++k) y.row(k).array() += bias.data()[k];
    }
  }

  if (Tape* tape = Recording({&input, &kernels, &bias})) {
    out.set_requires_grad();
    tape->Record([=]() mutable {
      if (!out.has_grad()) return;
      RowMat col(patch, pixels);
      RowMat dcol;
      ConstMapMat weight(kernels.data().data(), out_channels, patch);
      for (std::size_t n = 0; n < batch; ++n) {
        ConstMapMat dy(out.grad().data() + n * out_stride, out_channels, pixels);
        if (bias.defined() && bias.requires_grad()) {
          auto db = bias.mutable_grad();
          for (std::size_t k = 0; k < out_channels; ++k) db[k] += dy.row(k).sum();
        }
        if (kernels.requires_grad()) {
          Im2Col(input.data().data() + n * in_stride, channels, height, width, kh, kw,
                 stride, pad, out_h, out_w, col.data());
          MapMat(kernels.mutable_grad().data(), out_channels, patch).noalias() +=
              dy * col.transpose();
        }
        if (input.requires_grad()) {
          dcol.noalias() = weight.transpose() * dy;
          Col2ImAdd(dcol.data(), channels, height, width, kh, kw, stride, pad, out_h,
                    out_w, input.mutable_grad().data() + n * in_stride);
        }
      }
    });
  }
  return out;
}

Tensor MaxPool2(const Tensor& input) {
  if (input.rank() < 2) {
    ShapeError("maxpool2", "needs at least 2 axes, got " + ShapeString(input.shape()));
  }
  const std::size_t rank = input.rank();
  const std::size_t height = input.dim(rank - 2), width = input.dim(rank - 1);
  if (height < 2 || width < 2) {
    ShapeError("maxpool2", "spatial extents must be >= 2, got " +
                               ShapeString(input.shape()));
  }
  const std::size_t out_h = height / 2, out_w = width / 2;
  const std::size_t planes = input.size() / (height * width);
  Shape out_shape = input.shape();
  out_shape[rank - 2] = out_h;
  out_shape[rank - 1] = out_w;
  Tensor out(out_shape);

  auto argmax = std::make_shared<std::vector<std::uint32_t>>(out.size());
  const double* src = input.data().data();
  double* dst = out.data().data();
  for (std::size_t p = 0; p < planes; ++p) {
    const std::size_t in_base = p * height * width;
    for (std::size_t oy = 0; oy < out_h; ++oy) {
      for (std::size_t ox = 0; ox < out_w; ++ox) {
        std::size_t best = in_base + (2 * oy) * width + 2 * ox;
        // row-major window scan; strict comparison keeps the first maximum
        const std::size_t cand[3] = {best + 1, best + width, best + width + 1};
        for (std::size_t c : cand) {
          if (src[c] > src[best]) best = c;
        }
        const std::size_t o = (p * out_h + oy) * out_w + ox;
        dst[o] = src[best];
        (*argmax)[o] = static_cast<std::uint32_t>(best);
      }
    }
  }

  if (Tape* tape = Recording({&input})) {
    out.set_requires_grad();
    tape->Record([input, out, argmax]() mutable {
      if (!out.has_grad()) return;
      auto dx = input.mutable_grad();
      auto dy = out.grad();
      for (std::size_t o = 0; o < dy.size(); ++o) dx[(*argmax)[o]] += dy[o];
    });
  }
  return out;
}

Tensor Activate(const Tensor& input, Activation kind) {
  Tensor out(input.shape());
  auto x = input.data();
  auto y = out.data();
  switch (kind) {
    case Activation::kRelu:
      for (std::size_t i = 0; i < x.size(); ++i) y[i] = x[i] > 0.0 ? x[i] : 0.0;
      break;
    case Activation::kSigmoid:
      for (std::size_t i = 0; i < x.size(); ++i) y[i] = 1.0 / (1.0 + std::exp(-x[i]));
      break;
    case Activation::kTanh:
      for (std::size_t i = 0; i < x.size(); ++i) y[i] = std::tanh(x[i]);
      break;
  }
  if (Tape* tape = Recording({&input})) {
    out.set_requires_grad();
    tape->Record([input, out, kind]() mutable {
      if (!out.has_grad()) return;
      auto dx = input.mutable_grad();
      auto dy = out.grad();
      auto x = input.data();
      auto y = out.data();
      switch (kind) {
        case Activation::kRelu:
          for (std::size_t i = 0; i < dy.size(); ++i) {
            if (x[i] > 0.0) dx[i] += dy[i];
          }
          break;
        case Activation::kSigmoid:
          for (std::size_t i = 0; i < dy.size(); ++i) dx[i] += dy[i] * y[i] * (1.0 - y[i]);
          break;
        case Activation::kTanh:
          for (std::size_t i = 0; i < dy.size(); ++i) dx[i] += dy[i] * (1.0 - y[i] * y[i]);
          break;
      }
    });
  }
  return out;
}

Tensor Add(const Tensor& a, const Tensor& b) {
  RequireSameShape("add", a, b);
  Tensor out(a.shape());
  auto x = a.data(), y = b.data();
  auto z = out.data();
  for (std::size_t i = 0; i < z.size(); ++i) z[i] = x[i] + y[i];
  if (Tape* tape = Recording({&a, &b})) {
    out.set_requires_grad();
    tape->Record([a, b, out]() mutable {
      if (!out.has_grad()) return;
      auto dz = out.grad();
      if (a.requires_grad()) {
        auto da = a.mutable_grad();
        for (std::size_t i = 0; i < dz.size(); ++i) da[i] += dz[i];
      }
      if (b.requires_grad()) {
        auto db = b.mutable_grad();
        for (std::size_t i = 0; i < dz.size(); ++i) db[i] += dz[i];
      }
    });
  }
  return out;
}

Tensor Sub(const Tensor& a, const Tensor& b) {
  RequireSameShape("sub", a, b);
  Tensor out(a.shape());
  auto x = a.data(), y = b.data();
  auto z = out.data();
  for (std::size_t i = 0; i < z.size(); ++i) z[i] = x[i] - y[i];
  if (Tape* tape = Recording({&a, &b})) {
    out.set_requires_grad();
    tape->Record([a, b, out]() mutable {
      if (!out.has_grad()) return;
      auto dz = out.grad();
      if (a.requires_grad()) {
        auto da = a.mutable_grad();
        for (std::size_t i = 0; i < dz.size(); ++i) da[i] += dz[i];
      }
      if (b.requires_grad()) {
        auto db = b.mutable_grad();
        for (std::size_t i = 0; i < dz.size(); ++i) db[i] -= dz[i];
      }
    });
  }
  return out;
}

Tensor Mul(const Tensor& a, const Tensor& b) {
  RequireSameShape("mul", a, b);
  Tensor out(a.shape());
  auto x = a.data(), y = b.data();
  auto z = out.data();
  for (std::size_t i = 0; i < z.size(); ++i) z[i] = x[i] * y[i];
  if (Tape* tape = Recording({&a, &b})) {
    out.set_requires_grad();
    tape->Record([a, b, out]() mutable {
      if (!out.has_grad()) return;
      auto dz = out.grad();
      auto x = a.data(), y = b.data();
      if (a.requires_grad()) {
        auto da = a.mutable_grad();
        for (std::size_t i = 0; i < dz.size(); ++i) da[i] += dz[i] * y[i];
      }
      if (b.requires_grad()) {
        auto db = b.mutable_grad();
        for (std::size_t i = 0; i < dz.size(); ++i) db[i] += dz[i] * x[i];
      }
    });
  }
  return out;
}

Tensor Scale(const Tensor& a, double factor) {
  Tensor out(a.shape());
  auto x = a.data();
  auto z = out.data();
  for (std::size_t i = 0; i < z.size(); ++i) z[i] = x[i] * factor;
  if (Tape* tape = Recording({&a})) {
    out.set_requires_grad();
    tape->Record([a, out, factor]() mutable {
      if (!out.has_grad()) return;
      auto dz = out.grad();
      auto da = a.mutable_grad();
      for (std::size_t i = 0; i < dz.size(); ++i) da[i] += dz[i] * factor;
    });
  }
  return out;
}

Tensor AddBias(const Tensor& x, const Tensor& bias) {
  const std::size_t width = bias.size();
  const bool ok = (x.rank() == 1 && x.size() == width) ||
                  (x.rank() >= 2 && x.size() / x.dim(0) == width);
  if (bias.rank() != 1 || !ok) {
    ShapeError("add_bias", "bias " + ShapeString(bias.shape()) +
                               " cannot broadcast over the leading axis of " +
                               ShapeString(x.shape()));
  }
  Tensor out(x.shape());
  auto src = x.data();
  auto b = bias.data();
  auto dst = out.data();
  for (std::size_t i = 0; i < dst.size(); ++i) dst[i] = src[i] + b[i % width];
  if (Tape* tape = Recording({&x, &bias})) {
    out.set_requires_grad();
    tape->Record([x, bias, out, width]() mutable {
      if (!out.has_grad()) return;
      auto dy = out.grad();
      if (x.requires_grad()) {
        auto dx = x.mutable_grad();
        for (std::size_t i = 0; i < dy.size(); ++i) dx[i] += dy[i];
      }
      if (bias.requires_grad()) {
        auto db = bias.mutable_grad();
        for (std::size_t i = 0; i < dy.size(); ++i) db[i % width] += dy[i];
      }
    });
  }
  return out;
}

Tensor Sum(const Tensor& a) {
  double total = 0.0;
  for (double v : a.data()) total += v;
  Tensor out = Tensor::Scalar(total);
  if (Tape* tape = Recording({&a})) {
    out.set_requires_grad();
    tape->Record([a, out]() mutable {
      if (!out.has_grad()) return;
      const double g = out.grad()[0];
      for (double& d : a.mutable_grad()) d += g;
    });
  }
  return out;
}

Tensor Reshape(const Tensor& a, Shape shape) {
  if (NumElements(shape) != a.size()) {
    ShapeError("reshape", "cannot reshape " + ShapeString(a.shape()) + " to " +
                              ShapeString(shape));
  }
  Tensor out(std::move(shape), std::vector<double>(a.data().begin(), a.data().end()));
  if (Tape* tape = Recording({&a})) {
    out.set_requires_grad();
    tape->Record([a, out]() mutable {
      if (!out.has_grad()) return;
      auto dy = out.grad();
      auto dx = a.mutable_grad();
      for (std::size_t i = 0; i < dy.size(); ++i) dx[i] += dy[i];
    });
  }
  return out;
}

Tensor Transpose2d(const Tensor& a) {
  if (a.rank() != 2) ShapeError("transpose2d", "expects 2-D, got " + ShapeString(a.shape()));
  const std::size_t rows = a.dim(0), cols = a.dim(1);
  Tensor out({cols, rows});
  MapMat(out.data().data(), cols, rows) =
      ConstMapMat(a.data().data(), rows, cols).transpose();
  if (Tape* tape = Recording({&a})) {
    out.set_requires_grad();
    tape->Record([a, out, rows, cols]() mutable {
      if (!out.has_grad()) return;
      MapMat(a.mutable_grad().data(), rows, cols) +=
          ConstMapMat(out.grad().data(), cols, rows).transpose();
    });
  }
  return out;
}

Tensor ConcatRows(std::span<const Tensor> parts) {
  if (parts.empty()) ShapeError("concat_rows", "no inputs");
  Shape shape = parts.front().shape();
  std::size_t rows = 0;
  for (const Tensor& p : parts) {
    const Shape& s = p.shape();
    if (s.size() != shape.size() || !std::equal(s.begin() + 1, s.end(), shape.begin() + 1)) {
      ShapeError("concat_rows", "trailing extents disagree: " + ShapeString(s) + " vs " +
                                    ShapeString(shape));
    }
    rows += s[0];
  }
  shape[0] = rows;
  Tensor out(shape);
  auto dst = out.data();
  std::size_t offset = 0;
  bool any_grad = false;
  for (const Tensor& p : parts) {
    std::copy(p.data().begin(), p.data().end(), dst.begin() + offset);
    offset += p.size();
    any_grad = any_grad || p.requires_grad();
  }
  Tape* tape = Tape::Active();
  if (tape != nullptr && any_grad) {
    out.set_requires_grad();
    std::vector<Tensor> inputs(parts.begin(), parts.end());
    tape->Record([inputs, out]() mutable {
      if (!out.has_grad()) return;
      auto dy = out.grad();
      std::size_t offset = 0;
      for (Tensor& p : inputs) {
        if (p.requires_grad()) {
          auto dx = p.mutable_grad();
          for (std::size_t i = 0; i < dx.size(); ++i) dx[i] += dy[offset + i];
        }
        offset += p.size();
      }
    });
  }
  return out;
}

Tensor SliceRows(const Tensor& a, std::size_t begin, std::size_t count) {
  const std::size_t rows = a.dim(0);
  if (count == 0 || begin >= rows || count > rows - begin) {
    ShapeError("slice_rows", "rows [" + std::to_string(begin) + ", " +
                                 std::to_string(begin + count) + ") out of range for " +
                                 ShapeString(a.shape()));
  }
  Shape shape = a.shape();
  shape[0] = count;
  const std::size_t row_size = a.size() / rows;
  const auto src = a.data().subspan(begin * row_size, count * row_size);
  Tensor out(std::move(shape), std::vector<double>(src.begin(), src.end()));
  if (Tape* tape = Recording({&a})) {
    out.set_requires_grad();
    tape->Record([a, out, begin, row_size]() mutable {
      if (!out.has_grad()) return;
      auto dy = out.grad();
      auto dx = a.mutable_grad().subspan(begin * row_size, dy.size());
      for (std::size_t i = 0; i < dy.size(); ++i) dx[i] += dy[i];
    });
  }
  return out;
}

Tensor SliceRow(const Tensor& a, std::size_t index) {
  if (a.rank() != 2) ShapeError("slice_row", "expects 2-D, got " + ShapeString(a.shape()));
  return SliceRows(a, index, 1);
}

std::pair<Tensor, Tensor> LstmPointwise(const Tensor& gates, const Tensor& c_prev) {
  const std::size_t hidden = c_prev.size();
  if (gates.size() != 4 * hidden) {
    ShapeError("lstm_pointwise", "gates " + ShapeString(gates.shape()) +
                                     " must hold 4x the state width of " +
                                     ShapeString(c_prev.shape()));
  }
  Tensor h({1, hidden});
  Tensor c({1, hidden});
  // i, f, o, g, tanh(c) for the backward rule
  auto cache = std::make_shared<std::vector<double>>(5 * hidden);
  auto pre = gates.data();
  auto cp = c_prev.data();
  auto hv = h.data(), cv = c.data();
  double* i_ = cache->data();
  double* f_ = i_ + hidden;
  double* o_ = f_ + hidden;
  double* g_ = o_ + hidden;
  double* tc = g_ + hidden;
  for (std::size_t j = 0; j < hidden; ++j) {
    i_[j] = 1.0 / (1.0 + std::exp(-pre[j]));
    f_[j] = 1.0 / (1.0 + std::exp(-pre[hidden + j]));
    o_[j] = 1.0 / (1.0 + std::exp(-pre[2 * hidden + j]));
    g_[j] = std::tanh(pre[3 * hidden + j]);
    cv[j] = f_[j] * cp[j] + i_[j] * g_[j];
    tc[j] = std::tanh(cv[j]);
    hv[j] = o_[j] * tc[j];
  }
  if (Tape* tape = Recording({&gates, &c_prev})) {
    h.set_requires_grad();
    c.set_requires_grad();
    tape->Record([gates, c_prev, h, c, cache, hidden]() mutable {
      if (!h.has_grad() && !c.has_grad()) return;
      const double* i_ = cache->data();
      const double* f_ = i_ + hidden;
      const double* o_ = f_ + hidden;
      const double* g_ = o_ + hidden;
      const double* tc = g_ + hidden;
      auto dh = h.grad();
      auto dc = c.grad();
      auto cp = c_prev.data();
      std::span<double> dgates = gates.requires_grad() ? gates.mutable_grad()
                                                       : std::span<double>();
      std::span<double> dcp = c_prev.requires_grad() ? c_prev.mutable_grad()
                                                     : std::span<double>();
      for (std::size_t j = 0; j < hidden; ++j) {
        const double dhj = dh.empty() ? 0.0 : dh[j];
        double dct = dc.empty() ? 0.0 : dc[j];
        dct += dhj * o_[j] * (1.0 - tc[j] * tc[j]);
        if (!dgates.empty()) {
          const double di = dct * g_[j];
          const double df = dct * cp[j];
          const double dout = dhj * tc[j];
          const double dg = dct * i_[j];
          dgates[j] += di * i_[j] * (1.0 - i_[j]);
          dgates[hidden + j] += df * f_[j] * (1.0 - f_[j]);
          dgates[2 * hidden + j] += dout * o_[j] * (1.0 - o_[j]);
          dgates[3 * hidden + j] += dg * (1.0 - g_[j] * g_[j]);
        }
        if (!dcp.empty()) dcp[j] += dct * f_[j];
      }
    });
  }
  return {h, c};
}

}  // namespace rwt::ad
