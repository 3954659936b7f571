#include "adaptaa/predictor.hpp"

#include <cmath>
#include <limits>

namespace adaptaa {

void PredictorConfig::validate() const {
  if (k <= 0 || k % 2 == 0) {
    throw ShapeError("filter size k must be odd and positive, got " +
                     std::to_string(k));
  }
  if (conv_kernel <= 0 || conv_kernel % 2 == 0) {
    throw ShapeError("predictor conv kernel must be odd and positive, got " +
                     std::to_string(conv_kernel));
  }
  require_groups_divide(in_channels, groups);
}

void require_groups_divide(std::size_t c, std::size_t g) {
  if (g == 0 || c % g != 0) {
    throw ShapeError("group count " + std::to_string(g) +
                     " does not divide channel count " + std::to_string(c));
  }
}

std::size_t group_of_channel(std::size_t c_idx, std::size_t c, std::size_t g) {
  require_groups_divide(c, g);
  if (c_idx >= c) {
    throw ShapeError("channel index " + std::to_string(c_idx) +
                     " out of range for " + std::to_string(c) + " channels");
  }
  return c_idx / (c / g);
}

template <typename T>
BasicFilterField<T>::BasicFilterField(std::size_t groups, int k,
                                      BasicTensor<T> values)
    : groups_(groups), k_(k), values_(std::move(values)) {
  if (k <= 0 || k % 2 == 0) throw ShapeError("filter size k must be odd");
  if (groups == 0 || values_.c() != groups * taps()) {
    throw ShapeError("filter field storage " + values_.shape().str() +
                     " does not hold " + std::to_string(groups) +
                     " groups of " + std::to_string(taps()) + " taps");
  }
}

template <typename T>
BasicFilterField<T> BasicFilterField<T>::uniform(std::size_t n,
                                                 std::size_t groups, int k,
                                                 std::size_t h, std::size_t w) {
  const auto taps = static_cast<std::size_t>(k * k);
  return {groups, k,
          BasicTensor<T>(Shape{n, groups * taps, h, w}, T(1) / T(taps))};
}

template <typename T>
BasicFilterField<T> BasicFilterField<T>::identity(std::size_t n,
                                                  std::size_t groups, int k,
                                                  std::size_t h, std::size_t w) {
  const auto taps = static_cast<std::size_t>(k * k);
  BasicTensor<T> v(Shape{n, groups * taps, h, w});
  const std::size_t center = taps / 2;
  for (std::size_t in = 0; in < n; ++in) {
    for (std::size_t g = 0; g < groups; ++g) {
      for (auto& e : v.plane(in, g * taps + center)) e = T(1);
    }
  }
  return {groups, k, std::move(v)};
}

template <typename T>
double BasicFilterField<T>::max_unit_sum_error() const {
  double worst = 0.0;
  for (std::size_t in = 0; in < n(); ++in) {
    for (std::size_t g = 0; g < groups_; ++g) {
      for (std::size_t i = 0; i < h(); ++i) {
        for (std::size_t j = 0; j < w(); ++j) {
          double s = 0.0;
          for (std::size_t t = 0; t < taps(); ++t) s += (*this)(in, g, t, i, j);
          worst = std::max(worst, std::abs(s - 1.0));
        }
      }
    }
  }
  return worst;
}

template <typename T>
T BasicFilterField<T>::min_weight() const {
  T m = std::numeric_limits<T>::max();
  for (T v : values_.data()) m = std::min(m, v);
  return m;
}

template <typename T>
BasicPredictor<T> BasicPredictor<T>::zeros(const PredictorConfig& cfg) {
  cfg.validate();
  const auto kc = static_cast<std::size_t>(cfg.conv_kernel);
  BasicPredictor p;
  p.cfg = cfg;
  p.conv.weight = BasicTensor<T>(Shape{cfg.out_channels(), cfg.in_channels, kc, kc});
  p.conv.bias.assign(cfg.out_channels(), T(0));
  p.conv.stride = 1;
  p.conv.padding = cfg.conv_kernel / 2;
  p.conv.pad_mode = cfg.pad_mode;
  p.bn = BasicBatchNorm<T>::identity(cfg.out_channels());
  return p;
}

template <typename T>
BasicPredictor<T> BasicPredictor<T>::init(const PredictorConfig& cfg,
                                          std::mt19937_64& rng) {
  BasicPredictor p = zeros(cfg);
  const double fan_in = double(cfg.in_channels) * cfg.conv_kernel * cfg.conv_kernel;
  const double bound = 1.0 / std::sqrt(fan_in);
  std::uniform_real_distribution<double> dist(-bound, bound);
  for (auto& v : p.conv.weight.data()) v = static_cast<T>(dist(rng));
  return p;
}

template <typename T>
std::size_t BasicPredictor<T>::parameter_count() const {
  return conv.weight.size() + conv.bias.size() + 2 * bn.channels();
}

template <typename T>
BasicTensor<T> predictor_logits(const BasicTensor<T>& x, BasicPredictor<T>& p,
                                BnMode mode) {
  p.cfg.validate();
  if (x.c() != p.cfg.in_channels) {
    throw ShapeError("predictor expects " + std::to_string(p.cfg.in_channels) +
                     " input channels, got " + std::to_string(x.c()));
  }
  if (p.conv.out_channels() != p.cfg.out_channels()) {
    throw ShapeError("predictor conv emits " +
                     std::to_string(p.conv.out_channels()) +
                     " channels, expected g*k^2 = " +
                     std::to_string(p.cfg.out_channels()));
  }
  return batchnorm(conv2d(x, p.conv), p.bn, mode);
}

template <typename T>
BasicFilterField<T> predict_filters(const BasicTensor<T>& x,
                                    BasicPredictor<T>& p, BnMode mode) {
  auto logits = predictor_logits(x, p, mode);
  return {p.cfg.groups, p.cfg.k, softmax_over_axis(logits, p.cfg.taps())};
}

void save_predictor(Checkpoint& ck, const std::string& prefix,
                    const Predictor& p) {
  ck.put(prefix + ".conv.weight", p.conv.weight);
  ck.put_vector(prefix + ".conv.bias", p.conv.bias);
  ck.put_vector(prefix + ".bn.gamma", p.bn.gamma);
  ck.put_vector(prefix + ".bn.beta", p.bn.beta);
  ck.put_vector(prefix + ".bn.mean", p.bn.running_mean);
  ck.put_vector(prefix + ".bn.var", p.bn.running_var);
}

Predictor load_predictor(const Checkpoint& ck, const std::string& prefix,
                         const PredictorConfig& cfg) {
  Predictor p = Predictor::zeros(cfg);
  const Tensor& w = ck.get(prefix + ".conv.weight");
  require_same_shape(w.shape(), p.conv.weight.shape(), "predictor checkpoint");
  p.conv.weight = w;
  p.conv.bias = ck.get_vector(prefix + ".conv.bias");
  p.bn.gamma = ck.get_vector(prefix + ".bn.gamma");
  p.bn.beta = ck.get_vector(prefix + ".bn.beta");
  p.bn.running_mean = ck.get_vector(prefix + ".bn.mean");
  p.bn.running_var = ck.get_vector(prefix + ".bn.var");
  p.conv.validate();
  p.bn.validate(cfg.out_channels());
  return p;
}

template class BasicFilterField<float>;
template class BasicFilterField<double>;
template struct BasicPredictor<float>;
template struct BasicPredictor<double>;
template BasicTensor<float> predictor_logits(const BasicTensor<float>&,
                                             BasicPredictor<float>&, BnMode);
template BasicTensor<double> predictor_logits(const BasicTensor<double>&,
                                              BasicPredictor<double>&, BnMode);
template BasicFilterField<float> predict_filters(const BasicTensor<float>&,
                                                 BasicPredictor<float>&, BnMode);
template BasicFilterField<double> predict_filters(const BasicTensor<double>&,
                                                  BasicPredictor<double>&,
                                                  BnMode);

}  // namespace adaptaa
