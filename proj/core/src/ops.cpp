#include "adaptaa/ops.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "eigen_maps.hpp"
#include "padding.hpp"

namespace adaptaa {

std::ptrdiff_t reflect_index(std::ptrdiff_t i, std::ptrdiff_t n) {
  if (n <= 1) return 0;
  const std::ptrdiff_t period = 2 * (n - 1);
  i %= period;
  if (i < 0) i += period;
  return i < n ? i : period - i;
}

std::size_t window_output_extent(std::size_t in, int k, int stride, int pad) {
  if (stride <= 0) throw ShapeError("stride must be positive");
  const auto span = static_cast<std::ptrdiff_t>(in) + 2 * pad - k;
  if (span < 0) {
    throw ShapeError("window of size " + std::to_string(k) +
                     " does not fit input extent " + std::to_string(in) +
                     " with padding " + std::to_string(pad));
  }
  return static_cast<std::size_t>(span / stride + 1);
}

template <typename T>
void BasicConvParams<T>::validate() const {
  if (weight.h() != weight.w()) {
    throw ShapeError("conv kernel must be square, got " +
                     weight.shape().str());
  }
  if (weight.h() % 2 == 0) {
    throw ShapeError("conv kernel size must be odd, got " +
                     std::to_string(weight.h()));
  }
  if (!bias.empty() && bias.size() != weight.n()) {
    throw ShapeError("conv bias has " + std::to_string(bias.size()) +
                     " entries for " + std::to_string(weight.n()) +
                     " output channels");
  }
  if (stride <= 0) throw ShapeError("conv stride must be positive");
  if (padding < 0) throw ShapeError("conv padding must be non-negative");
}

template <typename T>
BasicTensor<T> conv2d(const BasicTensor<T>& x, const BasicConvParams<T>& p) {
  p.validate();
  if (x.c() != p.in_channels()) {
    throw ShapeError("conv2d: input has " + std::to_string(x.c()) +
                     " channels, weights expect " +
                     std::to_string(p.in_channels()));
  }
  const int k = p.kernel();
  const std::size_t oh = window_output_extent(x.h(), k, p.stride, p.padding);
  const std::size_t ow = window_output_extent(x.w(), k, p.stride, p.padding);
  const std::size_t pw = x.w() + 2 * static_cast<std::size_t>(p.padding);
  const std::size_t ph = x.h() + 2 * static_cast<std::size_t>(p.padding);
  const auto ku = static_cast<std::size_t>(k);
  const auto rows = static_cast<Eigen::Index>(x.c() * ku * ku);
  const auto cols = static_cast<Eigen::Index>(oh * ow);
  const auto oc = static_cast<Eigen::Index>(p.out_channels());

  BasicTensor<T> out(Shape{x.n(), p.out_channels(), oh, ow});
  const ConstMatrixMap<T> weight(p.weight.data().data(), oc, rows);
  std::vector<T> padded;
  std::vector<T> col;
  for (std::size_t in = 0; in < x.n(); ++in) {
    detail::pad_image(x, in, p.padding, p.pad_mode, padded);
    detail::im2col(padded, x.c(), ph, pw, ku, static_cast<std::size_t>(p.stride), oh, ow, col);
    MatrixMap<T> dst(out.plane(in, 0).data(), oc, cols);
    dst.noalias() = weight * ConstMatrixMap<T>(col.data(), rows, cols);
    if (!p.bias.empty()) {
      for (Eigen::Index o = 0; o < oc; ++o) dst.row(o).array() += p.bias[static_cast<std::size_t>(o)];
    }
  }
  return out;
}

template <typename T>
BasicTensor<T> softmax_over_axis(const BasicTensor<T>& x, std::size_t m) {
  if (m == 0) throw ShapeError("softmax slice length must be positive");
  if (x.c() % m != 0) {
    throw ShapeError("softmax: channel count " + std::to_string(x.c()) +
                     " is not a multiple of slice length " +
                     std::to_string(m));
  }
  BasicTensor<T> out(x.shape());
  const std::size_t plane = x.shape().plane();
  const T tiny = std::numeric_limits<T>::min();
  std::vector<double> e(m);
  for (std::size_t in = 0; in < x.n(); ++in) {
    for (std::size_t s = 0; s < x.c() / m; ++s) {
      for (std::size_t pix = 0; pix < plane; ++pix) {
        const std::size_t base = x.offset(in, s * m, 0, 0) + pix;
        double mx = -std::numeric_limits<double>::infinity();
        for (std::size_t t = 0; t < m; ++t) mx = std::max(mx, double(x[base + t * plane]));
        double sum = 0.0;
        for (std::size_t t = 0; t < m; ++t) {
          e[t] = std::exp(double(x[base + t * plane]) - mx);
          sum += e[t];
        }
        // Clamp to the smallest normal value so saturated slices stay positive.
        for (std::size_t t = 0; t < m; ++t) {
          out[base + t * plane] = std::max(static_cast<T>(e[t] / sum), tiny);
        }
      }
    }
  }
  return out;
}

template <typename T>
BasicBatchNorm<T> BasicBatchNorm<T>::identity(std::size_t channels) {
  return {std::vector<T>(channels, T(1)), std::vector<T>(channels, T(0)),
          std::vector<T>(channels, T(0)), std::vector<T>(channels, T(1))};
}

template <typename T>
void BasicBatchNorm<T>::validate(std::size_t c) const {
  if (gamma.size() != c || beta.size() != c || running_mean.size() != c ||
      running_var.size() != c) {
    throw ShapeError("batchnorm parameters sized for " +
                     std::to_string(gamma.size()) + " channels, input has " +
                     std::to_string(c));
  }
  if (!(eps > 0.0)) throw std::invalid_argument("batchnorm eps must be > 0");
  for (T v : running_var) {
    if (v < T(0)) throw std::invalid_argument("batchnorm variance must be >= 0");
  }
}

namespace {

template <typename T>
BasicTensor<T> apply_channel_affine(const BasicTensor<T>& x,
                                    const std::vector<double>& scale,
                                    const std::vector<double>& shift) {
  BasicTensor<T> out(x.shape());
  for (std::size_t in = 0; in < x.n(); ++in) {
    for (std::size_t ic = 0; ic < x.c(); ++ic) {
      const auto src = x.plane(in, ic);
      auto dst = out.plane(in, ic);
      for (std::size_t i = 0; i < src.size(); ++i) {
        dst[i] = static_cast<T>(double(src[i]) * scale[ic] + shift[ic]);
      }
    }
  }
  return out;
}

}  // namespace

template <typename T>
BasicTensor<T> batchnorm_inference(const BasicTensor<T>& x,
                                   const BasicBatchNorm<T>& bn) {
  bn.validate(x.c());
  std::vector<double> scale(x.c()), shift(x.c());
  for (std::size_t ic = 0; ic < x.c(); ++ic) {
    const double inv = 1.0 / std::sqrt(double(bn.running_var[ic]) + bn.eps);
    scale[ic] = double(bn.gamma[ic]) * inv;
    shift[ic] = double(bn.beta[ic]) - double(bn.running_mean[ic]) * scale[ic];
  }
  return apply_channel_affine(x, scale, shift);
}

template <typename T>
BasicTensor<T> batchnorm(const BasicTensor<T>& x, BasicBatchNorm<T>& bn,
                         BnMode mode) {
  if (mode == BnMode::kInference) return batchnorm_inference(x, bn);
  bn.validate(x.c());
  const std::size_t count = x.n() * x.shape().plane();
  if (count == 0) throw ShapeError("batchnorm on empty input");
  std::vector<double> scale(x.c()), shift(x.c());
  for (std::size_t ic = 0; ic < x.c(); ++ic) {
    double mean = 0.0;
    for (std::size_t in = 0; in < x.n(); ++in) {
      for (T v : x.plane(in, ic)) mean += v;
    }
    mean /= double(count);
    double var = 0.0;
    for (std::size_t in = 0; in < x.n(); ++in) {
      for (T v : x.plane(in, ic)) var += (v - mean) * (v - mean);
    }
    var /= double(count);
    const double inv = 1.0 / std::sqrt(var + bn.eps);
    scale[ic] = double(bn.gamma[ic]) * inv;
    shift[ic] = double(bn.beta[ic]) - mean * scale[ic];
    const double unbiased = count > 1 ? var * double(count) / double(count - 1) : var;
    bn.running_mean[ic] = static_cast<T>((1.0 - bn.momentum) * bn.running_mean[ic] +
                                         bn.momentum * mean);
    bn.running_var[ic] = static_cast<T>((1.0 - bn.momentum) * bn.running_var[ic] +
                                        bn.momentum * unbiased);
  }
  return apply_channel_affine(x, scale, shift);
}

template <typename T>
BasicTensor<T> add(const BasicTensor<T>& a, const BasicTensor<T>& b) {
  require_same_shape(a.shape(), b.shape(), "add");
  BasicTensor<T> out(a.shape());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] + b[i];
  return out;
}

template <typename T>
BasicTensor<T> mul_scalar(const BasicTensor<T>& x, T s) {
  BasicTensor<T> out(x.shape());
  for (std::size_t i = 0; i < x.size(); ++i) out[i] = x[i] * s;
  return out;
}

template <typename T>
BasicTensor<T> relu(const BasicTensor<T>& x) {
  BasicTensor<T> out(x.shape());
  for (std::size_t i = 0; i < x.size(); ++i) out[i] = x[i] > T(0) ? x[i] : T(0);
  return out;
}

namespace {

template <typename T, typename Reduce>
BasicTensor<T> pool2d(const BasicTensor<T>& x, PoolWindow win, Reduce reduce) {
  if (win.kh <= 0 || win.kw <= 0) throw ShapeError("pool kernel must be positive");
  const std::size_t oh = window_output_extent(x.h(), win.kh, win.sh, 0);
  const std::size_t ow = window_output_extent(x.w(), win.kw, win.sw, 0);
  BasicTensor<T> out(Shape{x.n(), x.c(), oh, ow});
  for (std::size_t in = 0; in < x.n(); ++in) {
    for (std::size_t ic = 0; ic < x.c(); ++ic) {
      for (std::size_t oy = 0; oy < oh; ++oy) {
        for (std::size_t ox = 0; ox < ow; ++ox) {
          out(in, ic, oy, ox) = reduce(x, in, ic, oy * win.sh, ox * win.sw);
        }
      }
    }
  }
  return out;
}

}  // namespace

template <typename T>
BasicTensor<T> max_pool2d(const BasicTensor<T>& x, PoolWindow win) {
  return pool2d(x, win, [&](const BasicTensor<T>& t, std::size_t in,
                            std::size_t ic, std::size_t y0, std::size_t x0) {
    T m = t(in, ic, y0, x0);
    for (int dy = 0; dy < win.kh; ++dy) {
      for (int dx = 0; dx < win.kw; ++dx) m = std::max(m, t(in, ic, y0 + dy, x0 + dx));
    }
    return m;
  });
}

template <typename T>
BasicTensor<T> avg_pool2d(const BasicTensor<T>& x, PoolWindow win) {
  return pool2d(x, win, [&](const BasicTensor<T>& t, std::size_t in,
                            std::size_t ic, std::size_t y0, std::size_t x0) {
    double s = 0.0;
    for (int dy = 0; dy < win.kh; ++dy) {
      for (int dx = 0; dx < win.kw; ++dx) s += t(in, ic, y0 + dy, x0 + dx);
    }
    return static_cast<T>(s / double(win.kh * win.kw));
  });
}

template <typename T>
BasicTensor<T> strided_subsample(const BasicTensor<T>& x, int stride) {
  if (stride <= 0) throw ShapeError("subsample stride must be positive");
  const auto s = static_cast<std::size_t>(stride);
  const std::size_t oh = (x.h() + s - 1) / s;
  const std::size_t ow = (x.w() + s - 1) / s;
  BasicTensor<T> out(Shape{x.n(), x.c(), oh, ow});
  for (std::size_t in = 0; in < x.n(); ++in) {
    for (std::size_t ic = 0; ic < x.c(); ++ic) {
      for (std::size_t oy = 0; oy < oh; ++oy) {
        for (std::size_t ox = 0; ox < ow; ++ox) {
          out(in, ic, oy, ox) = x(in, ic, oy * s, ox * s);
        }
      }
    }
  }
  return out;
}

template <typename T>
BasicTensor<T> global_avg_pool(const BasicTensor<T>& x) {
  BasicTensor<T> out(Shape{x.n(), x.c(), 1, 1});
  for (std::size_t in = 0; in < x.n(); ++in) {
    for (std::size_t ic = 0; ic < x.c(); ++ic) {
      double s = 0.0;
      for (T v : x.plane(in, ic)) s += v;
      out(in, ic, 0, 0) = static_cast<T>(s / double(x.shape().plane()));
    }
  }
  return out;
}

#define ADAPTAA_INSTANTIATE_OPS(T)                                              \
  template struct BasicConvParams<T>;                                           \
  template struct BasicBatchNorm<T>;                                            \
  template BasicTensor<T> conv2d(const BasicTensor<T>&,                         \
                                 const BasicConvParams<T>&);                    \
  template BasicTensor<T> softmax_over_axis(const BasicTensor<T>&, std::size_t); \
  template BasicTensor<T> batchnorm(const BasicTensor<T>&, BasicBatchNorm<T>&,  \
                                    BnMode);                                    \
  template BasicTensor<T> batchnorm_inference(const BasicTensor<T>&,            \
                                              const BasicBatchNorm<T>&);        \
  template BasicTensor<T> add(const BasicTensor<T>&, const BasicTensor<T>&);    \
  template BasicTensor<T> mul_scalar(const BasicTensor<T>&, T);                 \
  template BasicTensor<T> relu(const BasicTensor<T>&);                          \
  template BasicTensor<T> max_pool2d(const BasicTensor<T>&, PoolWindow);        \
  template BasicTensor<T> avg_pool2d(const BasicTensor<T>&, PoolWindow);        \
  template BasicTensor<T> strided_subsample(const BasicTensor<T>&, int);        \
  template BasicTensor<T> global_avg_pool(const BasicTensor<T>&);

ADAPTAA_INSTANTIATE_OPS(float)
ADAPTAA_INSTANTIATE_OPS(double)

}  // namespace adaptaa
