#pragma once

#include <algorithm>
#include <cstddef>
#include <functional>
#include <initializer_list>
#include <numeric>
#include <span>
#include <sstream>
#include <string>
#include <type_traits>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "mvg/errors.hpp"

namespace mvg {

// Scalar type for training builds. Verification code instantiates the
// templates with double directly.
#ifdef MVG_REAL_DOUBLE
using Real = double;
#else
using Real = float;
#endif

/// Extents of a dense row-major tensor. Never empty, no zero extents.
class Shape {
 public:
  Shape(std::initializer_list<std::size_t> dims) : dims_(dims) { validate(); }
  explicit Shape(std::vector<std::size_t> dims) : dims_(std::move(dims)) { validate(); }

  std::size_t rank() const noexcept { return dims_.size(); }
  std::size_t operator[](std::size_t axis) const { return dims_.at(axis); }
  const std::vector<std::size_t>& dims() const noexcept { return dims_; }

  std::size_t numel() const noexcept {
    return std::accumulate(dims_.begin(), dims_.end(), std::size_t{1},
                           std::multiplies<>());
  }

  std::string to_string() const {
    std::ostringstream out;
    for (std::size_t i = 0; i < dims_.size(); ++i) {
      if (i) out << 'x';
      out << dims_[i];
    }
    return out.str();
  }

  friend bool operator==(const Shape&, const Shape&) = default;

 private:
  void validate() const {
    if (dims_.empty()) throw DimensionError("shape must have at least one dimension");
    for (std::size_t d : dims_)
      if (d == 0) throw DimensionError("shape extents must be >= 1, got [" + to_string() + "]");
  }

  std::vector<std::size_t> dims_;
};

template <typename T>
class BasicTensor {
 public:
  using value_type = T;

  BasicTensor() : BasicTensor(Shape{1}) {}
  explicit BasicTensor(Shape shape, T fill = T{0})
      : shape_(std::move(shape)), data_(shape_.numel(), fill) {}
  BasicTensor(Shape shape, const std::vector<T>& data) : shape_(std::move(shape)), data_(data.begin(), data.end()) {
    if (data_.size() != shape_.numel())
      throw DimensionError("tensor data length " + std::to_string(data_.size()) +
                           " does not match shape [" + shape_.to_string() + "]");
  }

  static BasicTensor zeros(Shape shape) { return BasicTensor(std::move(shape)); }
  static BasicTensor zeros_like(const BasicTensor& other) { return BasicTensor(other.shape_); }

  const Shape& shape() const noexcept { return shape_; }
  std::size_t size() const noexcept { return data_.size(); }

  std::span<T> data() noexcept { return data_; }
  std::span<const T> data() const noexcept { return data_; }
  T* raw() noexcept { return data_.data(); }
  const T* raw() const noexcept { return data_.data(); }

  T& operator[](std::size_t flat) { return data_[flat]; }
  const T& operator[](std::size_t flat) const { return data_[flat]; }

  // Row-major coordinate access for rank-2 and rank-3 tensors.
  std::size_t offset(std::size_t i, std::size_t j) const noexcept { return i * shape_[1] + j; }
  std::size_t offset(std::size_t c, std::size_t i, std::size_t j) const noexcept {
    return (c * shape_[1] + i) * shape_[2] + j;
  }
  T& at(std::size_t i, std::size_t j) { return data_[offset(i, j)]; }
  const T& at(std::size_t i, std::size_t j) const { return data_[offset(i, j)]; }
  T& at(std::size_t c, std::size_t i, std::size_t j) { return data_[offset(c, i, j)]; }
  const T& at(std::size_t c, std::size_t i, std::size_t j) const { return data_[offset(c, i, j)]; }

  void fill(T value) { std::fill(data_.begin(), data_.end(), value); }

  // In-place change of extents; element order is untouched.
  void reshape_inplace(Shape shape) {
    if (shape.numel() != data_.size())
      throw DimensionError("cannot reshape [" + shape_.to_string() + "] to [" +
                           shape.to_string() + "]: element count differs");
    shape_ = std::move(shape);
  }

  friend bool operator==(const BasicTensor&, const BasicTensor&) = default;

 private:
  Shape shape_;
  // Fixed alignment keeps Eigen's vectorized loops (and so rounding)
  // independent of where the allocator happens to place the buffer.
  std::vector<T, Eigen::aligned_allocator<T>> data_;
};

using Tensor = BasicTensor<Real>;

template <typename To, typename From>
BasicTensor<To> tensor_cast(const BasicTensor<From>& t) {
  if constexpr (std::is_same_v<To, From>) {
    return t;
  } else {
    std::vector<To> out(t.data().begin(), t.data().end());
    return BasicTensor<To>(t.shape(), std::move(out));
  }
}

// Eigen views over tensor storage. All tensors are row-major.
template <typename T>
using RowMatrix = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <typename T>
using MatrixMap = Eigen::Map<RowMatrix<T>>;
template <typename T>
using ConstMatrixMap = Eigen::Map<const RowMatrix<T>>;

namespace detail {

inline void require_same_shape(const Shape& a, const Shape& b, const char* op) {
  if (!(a == b))
    throw DimensionError(std::string(op) + ": shape mismatch [" + a.to_string() + "] vs [" +
                         b.to_string() + "]");
}

template <typename T, typename F>
BasicTensor<T> zip(const BasicTensor<T>& a, const BasicTensor<T>& b, const char* op, F f) {
  require_same_shape(a.shape(), b.shape(), op);
  BasicTensor<T> out(a.shape());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = f(a[i], b[i]);
  return out;
}

template <typename T, typename F>
BasicTensor<T> map(const BasicTensor<T>& a, F f) {
  BasicTensor<T> out(a.shape());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = f(a[i]);
  return out;
}

}  // namespace detail

/// Matrix product of a rank-2 M×K tensor and a rank-2 K×N tensor.
template <typename T>
BasicTensor<T> matmul(const BasicTensor<T>& a, const BasicTensor<T>& b) {
  if (a.shape().rank() != 2 || b.shape().rank() != 2 || a.shape()[1] != b.shape()[0])
    throw DimensionError("matmul: incompatible shapes [" + a.shape().to_string() + "] and [" +
                         b.shape().to_string() + "]");
  const auto m = a.shape()[0], k = a.shape()[1], n = b.shape()[1];
  BasicTensor<T> out(Shape{m, n});
  MatrixMap<T>(out.raw(), m, n).noalias() =
      ConstMatrixMap<T>(a.raw(), m, k) * ConstMatrixMap<T>(b.raw(), k, n);
  return out;
}

template <typename T>
BasicTensor<T> add(const BasicTensor<T>& a, const BasicTensor<T>& b) {
  return detail::zip(a, b, "add", [](T x, T y) { return x + y; });
}
template <typename T>
BasicTensor<T> sub(const BasicTensor<T>& a, const BasicTensor<T>& b) {
  return detail::zip(a, b, "sub", [](T x, T y) { return x - y; });
}
template <typename T>
BasicTensor<T> mul(const BasicTensor<T>& a, const BasicTensor<T>& b) {
  return detail::zip(a, b, "mul", [](T x, T y) { return x * y; });
}
template <typename T>
BasicTensor<T> add(const BasicTensor<T>& a, T s) {
  return detail::map(a, [s](T x) { return x + s; });
}
template <typename T>
BasicTensor<T> sub(const BasicTensor<T>& a, T s) {
  return detail::map(a, [s](T x) { return x - s; });
}
template <typename T>
BasicTensor<T> mul(const BasicTensor<T>& a, T s) {
  return detail::map(a, [s](T x) { return x * s; });
}
template <typename T>
BasicTensor<T> scale(const BasicTensor<T>& a, T s) {
  return mul(a, s);
}

/// Same elements under new extents; row-major order is preserved.
template <typename T>
BasicTensor<T> reshape(BasicTensor<T> t, Shape shape) {
  t.reshape_inplace(std::move(shape));
  return t;
}

template <typename T>
T sum(const BasicTensor<T>& t) {
  return std::accumulate(t.data().begin(), t.data().end(), T{0});
}

// target += source, shapes must agree.
template <typename T>
void accumulate(BasicTensor<T>& target, const BasicTensor<T>& source) {
  detail::require_same_shape(target.shape(), source.shape(), "accumulate");
  for (std::size_t i = 0; i < target.size(); ++i) target[i] += source[i];
}

}  // namespace mvg
