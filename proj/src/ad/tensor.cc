#include "rwt/ad/tensor.h"

#include <algorithm>
#include <functional>
#include <numeric>
#include <sstream>
#include <stdexcept>

namespace rwt::ad {

std::size_t NumElements(const Shape& shape) {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1},
                         std::multiplies<>());
}

std::string ShapeString(const Shape& shape) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) os << 'x';
    os << shape[i];
  }
  os << ']';
  return os.str();
}

namespace {

void ValidateShape(const Shape& shape) {
  if (shape.empty()) throw std::invalid_argument("tensor shape must have rank >= 1");
  for (auto extent : shape) {
    if (extent == 0) {
      throw std::invalid_argument("tensor extents must be positive, got " +
                                  ShapeString(shape));
    }
  }
}

}  // namespace

Tensor::Tensor(Shape shape, double fill) : impl_(std::make_shared<Storage>()) {
  ValidateShape(shape);
  impl_->data.assign(NumElements(shape), fill);
  impl_->shape = std::move(shape);
}

Tensor::Tensor(Shape shape, std::vector<double> values)
    : impl_(std::make_shared<Storage>()) {
  ValidateShape(shape);
  if (NumElements(shape) != values.size()) {
    throw std::invalid_argument("tensor of shape " + ShapeString(shape) + " needs " +
                                std::to_string(NumElements(shape)) + " values, got " +
                                std::to_string(values.size()));
  }
  impl_->shape = std::move(shape);
  impl_->data.assign(values.begin(), values.end());
}

Tensor Tensor::FromRows(std::initializer_list<std::initializer_list<double>> rows) {
  if (rows.size() == 0) throw std::invalid_argument("FromRows: no rows");
  const std::size_t cols = rows.begin()->size();
  std::vector<double> values;
  values.reserve(rows.size() * cols);
  for (const auto& row : rows) {
    if (row.size() != cols) throw std::invalid_argument("FromRows: ragged rows");
    values.insert(values.end(), row.begin(), row.end());
  }
  return Tensor({rows.size(), cols}, std::move(values));
}

const Shape& Tensor::shape() const {
  if (!impl_) throw std::logic_error("use of undefined tensor");
  return impl_->shape;
}

std::size_t Tensor::dim(std::size_t axis) const {
  const auto& s = shape();
  if (axis >= s.size()) {
    throw std::out_of_range("axis " + std::to_string(axis) + " out of range for " +
                            ShapeString(s));
  }
  return s[axis];
}

std::size_t Tensor::size() const { return shape(), impl_->data.size(); }

std::span<double> Tensor::data() {
  shape();
  return impl_->data;
}

std::span<const double> Tensor::data() const {
  shape();
  return impl_->data;
}

double Tensor::item() const {
  if (size() != 1) {
    throw std::invalid_argument("item() on non-scalar tensor " + ShapeString(shape()));
  }
  return impl_->data[0];
}

bool Tensor::requires_grad() const { return impl_ && impl_->requires_grad; }

Tensor& Tensor::set_requires_grad(bool on) {
  shape();
  impl_->requires_grad = on;
  return *this;
}

bool Tensor::has_grad() const { return impl_ && !impl_->grad.empty(); }

std::span<const double> Tensor::grad() const {
  shape();
  return impl_->grad;
}

std::span<double> Tensor::mutable_grad() const {
  shape();
  if (impl_->grad.empty()) impl_->grad.assign(impl_->data.size(), 0.0);
  return impl_->grad;
}

void Tensor::zero_grad() {
  if (impl_ && !impl_->grad.empty()) {
    std::fill(impl_->grad.begin(), impl_->grad.end(), 0.0);
  }
}

void Tensor::clear_grad() {
  if (impl_) {
    impl_->grad.clear();
    impl_->grad.shrink_to_fit();
  }
}

Tensor Tensor::Clone() const {
  Tensor out(shape());
  out.impl_->data = impl_->data;
  out.impl_->requires_grad = impl_->requires_grad;
  out.impl_->grad = impl_->grad;
  return out;
}

Tensor Tensor::Detach() const {
  Tensor out(shape());
  out.impl_->data = impl_->data;
  return out;
}

}  // namespace rwt::ad
