#include "adaptaa/tensor.hpp"

#include <cmath>

namespace adaptaa {

std::string Shape::str() const {
  return "(" + std::to_string(n) + ", " + std::to_string(c) + ", " +
         std::to_string(h) + ", " + std::to_string(w) + ")";
}

template <typename T>
bool BasicTensor<T>::all_finite() const {
  for (T v : data_) {
    if (!std::isfinite(v)) return false;
  }
  return true;
}

void require_same_shape(const Shape& a, const Shape& b, const char* what) {
  if (!(a == b)) {
    throw ShapeError(std::string(what) + ": shape " + a.str() +
                     " does not match " + b.str());
  }
}

template <typename T>
double max_abs_diff(const BasicTensor<T>& a, const BasicTensor<T>& b) {
  require_same_shape(a.shape(), b.shape(), "max_abs_diff");
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    m = std::max(m, std::abs(static_cast<double>(a[i]) -
                             static_cast<double>(b[i])));
  }
  return m;
}

template class BasicTensor<float>;
template class BasicTensor<double>;
template double max_abs_diff(const BasicTensor<float>&,
                             const BasicTensor<float>&);
template double max_abs_diff(const BasicTensor<double>&,
                             const BasicTensor<double>&);

}  // namespace adaptaa
