#pragma once

#include <cstddef>
#include <initializer_list>
#include <new>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace rwt::ad {

using Shape = std::vector<std::size_t>;

// 64-byte aligned allocation. Vectorized kernels choose their summation split
// from the buffer address, so fixed alignment keeps results independent of
// heap state.
template <class T>
struct AlignedAllocator {
  using value_type = T;
  static constexpr std::align_val_t kAlign{64};
  AlignedAllocator() = default;
  template <class U>
  AlignedAllocator(const AlignedAllocator<U>&) {}
  T* allocate(std::size_t n) { return static_cast<T*>(::operator new(n * sizeof(T), kAlign)); }
  void deallocate(T* p, std::size_t) { ::operator delete(p, kAlign); }
  template <class U>
  bool operator==(const AlignedAllocator<U>&) const { return true; }
};

using Buffer = std::vector<double, AlignedAllocator<double>>;

std::size_t NumElements(const Shape& shape);
std::string ShapeString(const Shape& shape);

// Dense row-major float64 array with an optional gradient buffer.
//
// Tensor is a handle: copies share storage. Use Clone() for a deep copy.
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(Shape shape, double fill = 0.0);
  Tensor(Shape shape, std::vector<double> values);

  static Tensor Zeros(Shape shape) { return Tensor(std::move(shape), 0.0); }
  static Tensor Ones(Shape shape) { return Tensor(std::move(shape), 1.0); }
  static Tensor Scalar(double value) { return Tensor(Shape{1}, value); }
  static Tensor FromRows(std::initializer_list<std::initializer_list<double>> rows);

  bool defined() const { return impl_ != nullptr; }
  const Shape& shape() const;
  std::size_t rank() const { return shape().size(); }
  std::size_t dim(std::size_t axis) const;
  std::size_t size() const;

  std::span<double> data();
  std::span<const double> data() const;
  double at(std::size_t flat) const { return data()[flat]; }
  double item() const;

  bool requires_grad() const;
  Tensor& set_requires_grad(bool on = true);

  bool has_grad() const;
  std::span<const double> grad() const;
  // Allocates a zero gradient buffer on first use.
  // Storage is shared, so gradient accumulation is allowed through const handles.
  std::span<double> mutable_grad() const;
  void zero_grad();
  void clear_grad();

  Tensor Clone() const;
  // Copy of the values with no gradient tracking.
  Tensor Detach() const;

  bool SameStorage(const Tensor& other) const { return impl_ == other.impl_; }

 private:
  struct Storage {
    Shape shape;
    Buffer data;
    Buffer grad;
    bool requires_grad = false;
  };
  std::shared_ptr<Storage> impl_;
};

}  // namespace rwt::ad
