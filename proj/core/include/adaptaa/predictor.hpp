#ifndef ADAPTAA_PREDICTOR_HPP_
#define ADAPTAA_PREDICTOR_HPP_

#include <cstddef>
#include <random>
#include <string>

#include "adaptaa/ops.hpp"
#include "adaptaa/t4f.hpp"
#include "adaptaa/tensor.hpp"

namespace adaptaa {

/// Shape of a filter predictor: k×k low-pass filters, one per channel group
/// and location, predicted by a conv_kernel×conv_kernel conv + batchnorm.
struct PredictorConfig {
  int k = 3;
  std::size_t groups = 1;
  std::size_t in_channels = 1;
  int conv_kernel = 3;
  PadMode pad_mode = PadMode::kReflect;

  std::size_t taps() const { return static_cast<std::size_t>(k * k); }
  std::size_t out_channels() const { return groups * taps(); }
  void validate() const;
};

/// Channel c_idx of a c-channel tensor belongs to group c_idx / (c / g).
std::size_t group_of_channel(std::size_t c_idx, std::size_t c, std::size_t g);

/// Throws ShapeError unless g is positive and divides c.
void require_groups_divide(std::size_t c, std::size_t g);

/// Bank of k×k filters with logical extents (n, g, k², h, w). Storage is a
/// (n, g·k², h, w) tensor, so tap t of group g sits in channel g·k² + t.
/// Taps are ordered row-major over the window: t = (dy + r)·k + (dx + r)
/// for offsets dy, dx in [-r, r], r = k / 2.
template <typename T>
class BasicFilterField {
 public:
  BasicFilterField() = default;
  BasicFilterField(std::size_t groups, int k, BasicTensor<T> values);

  static BasicFilterField uniform(std::size_t n, std::size_t groups, int k,
                                  std::size_t h, std::size_t w);
  static BasicFilterField identity(std::size_t n, std::size_t groups, int k,
                                   std::size_t h, std::size_t w);

  std::size_t n() const { return values_.n(); }
  std::size_t groups() const { return groups_; }
  int k() const { return k_; }
  std::size_t taps() const { return static_cast<std::size_t>(k_ * k_); }
  std::size_t h() const { return values_.h(); }
  std::size_t w() const { return values_.w(); }

  T operator()(std::size_t in, std::size_t g, std::size_t tap, std::size_t i,
               std::size_t j) const {
    return values_(in, g * taps() + tap, i, j);
  }
  T& operator()(std::size_t in, std::size_t g, std::size_t tap, std::size_t i,
                std::size_t j) {
    return values_(in, g * taps() + tap, i, j);
  }

  const BasicTensor<T>& values() const { return values_; }

  /// Largest |sum - 1| over all filters.
  double max_unit_sum_error() const;
  /// Smallest weight across the whole bank.
  T min_weight() const;

 private:
  std::size_t groups_ = 1;
  int k_ = 1;
  BasicTensor<T> values_;
};
using FilterField = BasicFilterField<float>;

template <typename T>
struct BasicPredictor {
  PredictorConfig cfg;
  BasicConvParams<T> conv;
  BasicBatchNorm<T> bn;

  /// All-zero conv, identity batchnorm: predicts uniform filters.
  static BasicPredictor zeros(const PredictorConfig& cfg);
  /// Conv weights uniform in ±1/sqrt(fan_in), zero bias, identity batchnorm.
  static BasicPredictor init(const PredictorConfig& cfg, std::mt19937_64& rng);

  std::size_t parameter_count() const;

  template <typename U>
  BasicPredictor<U> cast() const {
    return {cfg, conv.template cast<U>(), bn.template cast<U>()};
  }
};
using Predictor = BasicPredictor<float>;

/// conv (stride 1, same-size padding) followed by batchnorm; (n, g·k², h, w).
template <typename T>
BasicTensor<T> predictor_logits(const BasicTensor<T>& x, BasicPredictor<T>& p,
                                BnMode mode);

/// Logits followed by a softmax over each group's k² taps.
template <typename T>
BasicFilterField<T> predict_filters(const BasicTensor<T>& x,
                                    BasicPredictor<T>& p,
                                    BnMode mode = BnMode::kInference);

/// Stores predictor tensors as <prefix>.conv.weight, <prefix>.conv.bias and
/// <prefix>.bn.{gamma,beta,mean,var}.
void save_predictor(Checkpoint& ck, const std::string& prefix,
                    const Predictor& p);
Predictor load_predictor(const Checkpoint& ck, const std::string& prefix,
                         const PredictorConfig& cfg);

}  // namespace adaptaa

#endif  // ADAPTAA_PREDICTOR_HPP_
