#ifndef ADAPTAA_OPS_HPP_
#define ADAPTAA_OPS_HPP_

#include <cstddef>
#include <vector>

#include "adaptaa/tensor.hpp"

namespace adaptaa {

enum class PadMode { kZero, kReflect };

/// Mirror an out-of-range index into [0, n) without repeating the edge
/// sample (…, 2, 1, 0, 1, 2, …). An axis of extent 1 always maps to 0.
std::ptrdiff_t reflect_index(std::ptrdiff_t i, std::ptrdiff_t n);

/// Output extent of a sliding window; throws ShapeError when non-positive.
std::size_t window_output_extent(std::size_t in, int k, int stride, int pad);

template <typename T>
struct BasicConvParams {
  BasicTensor<T> weight;  // (out_ch, in_ch, k, k)
  std::vector<T> bias;    // out_ch entries, or empty for no bias
  int stride = 1;
  int padding = 0;
  PadMode pad_mode = PadMode::kZero;

  std::size_t out_channels() const { return weight.n(); }
  std::size_t in_channels() const { return weight.c(); }
  int kernel() const { return static_cast<int>(weight.h()); }

  /// Checks square odd kernel, bias length, stride and padding ranges.
  void validate() const;

  template <typename U>
  BasicConvParams<U> cast() const {
    return {weight.template cast<U>(),
            std::vector<U>(bias.begin(), bias.end()), stride, padding,
            pad_mode};
  }
};
using ConvParams = BasicConvParams<float>;

/// 2-D cross-correlation (no kernel flip).
template <typename T>
BasicTensor<T> conv2d(const BasicTensor<T>& x, const BasicConvParams<T>& p);

/// Softmax over consecutive channel slices of length `m`: at every
/// (n, i, j), channels [s*m, (s+1)*m) are normalized together.
/// Outputs are clamped below at the smallest normal value of T, so every
/// entry stays positive even for saturated slices.
template <typename T>
BasicTensor<T> softmax_over_axis(const BasicTensor<T>& x, std::size_t m);

enum class BnMode { kTrain, kInference };

/// Per-channel batch normalization state. Running statistics follow the
/// usual exponential update with `momentum` weighting the new batch value;
/// the running variance receives the unbiased batch variance.
template <typename T>
struct BasicBatchNorm {
  std::vector<T> gamma;
  std::vector<T> beta;
  std::vector<T> running_mean;
  std::vector<T> running_var;
  double eps = 1e-5;
  double momentum = 0.1;

  static BasicBatchNorm identity(std::size_t channels);
  std::size_t channels() const { return gamma.size(); }
  void validate(std::size_t channels) const;

  template <typename U>
  BasicBatchNorm<U> cast() const {
    return {std::vector<U>(gamma.begin(), gamma.end()),
            std::vector<U>(beta.begin(), beta.end()),
            std::vector<U>(running_mean.begin(), running_mean.end()),
            std::vector<U>(running_var.begin(), running_var.end()), eps,
            momentum};
  }
};
using BatchNorm = BasicBatchNorm<float>;

/// Training mode normalizes with batch statistics over (n, h, w) and
/// updates the running statistics in `bn`; inference mode reads them.
template <typename T>
BasicTensor<T> batchnorm(const BasicTensor<T>& x, BasicBatchNorm<T>& bn,
                         BnMode mode);

template <typename T>
BasicTensor<T> batchnorm_inference(const BasicTensor<T>& x,
                                   const BasicBatchNorm<T>& bn);

template <typename T>
BasicTensor<T> add(const BasicTensor<T>& a, const BasicTensor<T>& b);

template <typename T>
BasicTensor<T> mul_scalar(const BasicTensor<T>& x, T s);

template <typename T>
BasicTensor<T> relu(const BasicTensor<T>& x);

/// Unpadded pooling window; kernel and stride may differ per axis.
struct PoolWindow {
  int kh = 2;
  int kw = 2;
  int sh = 2;
  int sw = 2;
};

template <typename T>
BasicTensor<T> max_pool2d(const BasicTensor<T>& x, PoolWindow win);

template <typename T>
BasicTensor<T> avg_pool2d(const BasicTensor<T>& x, PoolWindow win);

/// Keeps every `stride`-th sample starting at index 0 along h and w.
template <typename T>
BasicTensor<T> strided_subsample(const BasicTensor<T>& x, int stride);

/// Mean over (h, w); result has extents (n, c, 1, 1).
template <typename T>
BasicTensor<T> global_avg_pool(const BasicTensor<T>& x);

}  // namespace adaptaa

#endif  // ADAPTAA_OPS_HPP_
