#ifndef ADAPTAA_TENSOR_HPP_
#define ADAPTAA_TENSOR_HPP_

#include <algorithm>
#include <array>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace adaptaa {

/// Raised whenever operand extents are incompatible.
class ShapeError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Extents of a rank-4 (n, c, h, w) tensor.
struct Shape {
  std::size_t n = 0;
  std::size_t c = 0;
  std::size_t h = 0;
  std::size_t w = 0;

  constexpr std::size_t size() const { return n * c * h * w; }
  constexpr std::size_t plane() const { return h * w; }
  friend constexpr bool operator==(const Shape&, const Shape&) = default;

  std::string str() const;
};

/// Dense row-major (n, c, h, w) tensor. Float and double instantiations are
/// provided; the double one is used for gradient verification.
template <typename T>
class BasicTensor {
 public:
  using value_type = T;

  BasicTensor() = default;
  explicit BasicTensor(Shape shape, T fill = T(0))
      : shape_(shape), data_(shape.size(), fill) {}
  BasicTensor(Shape shape, std::vector<T> data)
      : shape_(shape), data_(std::move(data)) {
    if (data_.size() != shape_.size()) {
      throw ShapeError("tensor data length " + std::to_string(data_.size()) +
                       " does not match shape " + shape_.str());
    }
  }

  const Shape& shape() const { return shape_; }
  std::size_t n() const { return shape_.n; }
  std::size_t c() const { return shape_.c; }
  std::size_t h() const { return shape_.h; }
  std::size_t w() const { return shape_.w; }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  std::size_t offset(std::size_t in, std::size_t ic, std::size_t ih,
                     std::size_t iw) const {
    return ((in * shape_.c + ic) * shape_.h + ih) * shape_.w + iw;
  }

  T& operator()(std::size_t in, std::size_t ic, std::size_t ih,
                std::size_t iw) {
    return data_[offset(in, ic, ih, iw)];
  }
  const T& operator()(std::size_t in, std::size_t ic, std::size_t ih,
                      std::size_t iw) const {
    return data_[offset(in, ic, ih, iw)];
  }

  T& operator[](std::size_t i) { return data_[i]; }
  const T& operator[](std::size_t i) const { return data_[i]; }

  /// Contiguous (h, w) plane of image `in`, channel `ic`.
  std::span<T> plane(std::size_t in, std::size_t ic) {
    return {data_.data() + offset(in, ic, 0, 0), shape_.plane()};
  }
  std::span<const T> plane(std::size_t in, std::size_t ic) const {
    return {data_.data() + offset(in, ic, 0, 0), shape_.plane()};
  }

  std::span<T> data() { return data_; }
  std::span<const T> data() const { return data_; }
  const std::vector<T>& vec() const { return data_; }

  void fill(T v) { std::fill(data_.begin(), data_.end(), v); }

  /// Same data, new extents with identical element count.
  BasicTensor reshaped(Shape shape) const {
    if (shape.size() != shape_.size()) {
      throw ShapeError("cannot reshape " + shape_.str() + " to " + shape.str());
    }
    return BasicTensor(shape, data_);
  }

  template <typename U>
  BasicTensor<U> cast() const {
    std::vector<U> out(data_.begin(), data_.end());
    return BasicTensor<U>(shape_, std::move(out));
  }

  bool all_finite() const;

  friend bool operator==(const BasicTensor&, const BasicTensor&) = default;

 private:
  Shape shape_;
  std::vector<T> data_;
};

using Tensor = BasicTensor<float>;
using Tensor64 = BasicTensor<double>;

/// Throws ShapeError with `what` prefixed when the shapes differ.
void require_same_shape(const Shape& a, const Shape& b, const char* what);

/// Largest absolute elementwise difference; shapes must agree.
template <typename T>
double max_abs_diff(const BasicTensor<T>& a, const BasicTensor<T>& b);

}  // namespace adaptaa

#endif  // ADAPTAA_TENSOR_HPP_
