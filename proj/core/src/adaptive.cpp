#include "adaptaa/adaptive.hpp"

#include <cmath>
#include <stdexcept>

namespace adaptaa {

namespace {

// Reflected source index for every (output position, window offset).
std::vector<std::size_t> reflect_table(std::size_t extent, int k) {
  const int r = k / 2;
  std::vector<std::size_t> table(extent * static_cast<std::size_t>(k));
  for (std::size_t i = 0; i < extent; ++i) {
    for (int d = -r; d <= r; ++d) {
      table[i * k + (d + r)] = static_cast<std::size_t>(
          reflect_index(static_cast<std::ptrdiff_t>(i) + d,
                        static_cast<std::ptrdiff_t>(extent)));
    }
  }
  return table;
}

// Shared windowed sum. `weight(in, c, tap, i, j)` supplies the filter tap;
// every path sums taps in the same row-major order, in double.
template <typename T, typename WeightFn>
BasicTensor<T> filter_windows(const BasicTensor<T>& x, int k, WeightFn weight) {
  const auto ku = static_cast<std::size_t>(k);
  const auto rows = reflect_table(x.h(), k);
  const auto cols = reflect_table(x.w(), k);
  BasicTensor<T> out(x.shape());
  for (std::size_t in = 0; in < x.n(); ++in) {
    for (std::size_t c = 0; c < x.c(); ++c) {
      const auto src = x.plane(in, c);
      auto dst = out.plane(in, c);
      for (std::size_t i = 0; i < x.h(); ++i) {
        for (std::size_t j = 0; j < x.w(); ++j) {
          double acc = 0.0;
          for (std::size_t dy = 0; dy < ku; ++dy) {
            const std::size_t row = rows[i * ku + dy] * x.w();
            for (std::size_t dx = 0; dx < ku; ++dx) {
              acc += double(weight(in, c, dy * ku + dx, i, j)) *
                     double(src[row + cols[j * ku + dx]]);
            }
          }
          dst[i * x.w() + j] = static_cast<T>(acc);
        }
      }
    }
  }
  return out;
}

template <typename T>
void check_field_extents(const BasicTensor<T>& x, const BasicFilterField<T>& w) {
  if (w.n() != x.n() || w.h() != x.h() || w.w() != x.w()) {
    throw ShapeError("filter field extents (n=" + std::to_string(w.n()) +
                     ", h=" + std::to_string(w.h()) + ", w=" +
                     std::to_string(w.w()) + ") do not match input " +
                     x.shape().str());
  }
}

}  // namespace

template <typename T>
BasicTensor<T> apply_grouped_adaptive(const BasicTensor<T>& x,
                                      const BasicFilterField<T>& w) {
  check_field_extents(x, w);
  require_groups_divide(x.c(), w.groups());
  const std::size_t per_group = x.c() / w.groups();
  return filter_windows(x, w.k(),
                        [&](std::size_t in, std::size_t c, std::size_t tap,
                            std::size_t i, std::size_t j) {
                          return w(in, c / per_group, tap, i, j);
                        });
}

template <typename T>
BasicTensor<T> apply_spatial_adaptive(const BasicTensor<T>& x,
                                      const BasicFilterField<T>& w) {
  if (w.groups() != 1) {
    throw ShapeError("spatial adaptive filtering needs a single-group field, got " +
                     std::to_string(w.groups()) + " groups");
  }
  return apply_grouped_adaptive(x, w);
}

template <typename T>
BasicTensor<T> apply_fixed_blur(const BasicTensor<T>& x,
                                const std::vector<T>& kernel) {
  const auto k = static_cast<int>(std::lround(std::sqrt(double(kernel.size()))));
  if (k <= 0 || static_cast<std::size_t>(k * k) != kernel.size() || k % 2 == 0) {
    throw ShapeError("blur kernel must hold k*k weights for odd k, got " +
                     std::to_string(kernel.size()));
  }
  return filter_windows(x, k,
                        [&](std::size_t, std::size_t, std::size_t tap,
                            std::size_t, std::size_t) { return kernel[tap]; });
}

std::vector<float> gaussian_kernel(int k, double sigma) {
  if (k <= 0 || k % 2 == 0) throw ShapeError("gaussian kernel size must be odd");
  if (!(sigma > 0.0)) throw std::invalid_argument("gaussian sigma must be > 0");
  const int r = k / 2;
  std::vector<double> raw;
  double sum = 0.0;
  for (int dy = -r; dy <= r; ++dy) {
    for (int dx = -r; dx <= r; ++dx) {
      const double v = std::exp(-(dy * dy + dx * dx) / (2.0 * sigma * sigma));
      raw.push_back(v);
      sum += v;
    }
  }
  std::vector<float> out;
  out.reserve(raw.size());
  for (double v : raw) out.push_back(static_cast<float>(v / sum));
  return out;
}

std::vector<float> box_kernel(int k) {
  if (k <= 0 || k % 2 == 0) throw ShapeError("box kernel size must be odd");
  const auto taps = static_cast<std::size_t>(k * k);
  return std::vector<float>(taps, 1.0f / static_cast<float>(taps));
}

BlurKind parse_blur_kind(std::string_view s) {
  if (s == "none") return BlurKind::kNone;
  if (s == "gaussian") return BlurKind::kGaussian;
  if (s == "box") return BlurKind::kBox;
  if (s == "image") return BlurKind::kImageAdaptive;
  if (s == "spatial") return BlurKind::kSpatialAdaptive;
  if (s == "grouped") return BlurKind::kSpatialChannelAdaptive;
  throw std::invalid_argument("unknown blur kind '" + std::string(s) + "'");
}

std::string blur_kind_name(BlurKind kind) {
  switch (kind) {
    case BlurKind::kNone: return "none";
    case BlurKind::kGaussian: return "gaussian";
    case BlurKind::kBox: return "box";
    case BlurKind::kImageAdaptive: return "image";
    case BlurKind::kSpatialAdaptive: return "spatial";
    case BlurKind::kSpatialChannelAdaptive: return "grouped";
  }
  return "unknown";
}

bool is_adaptive(BlurKind kind) {
  return kind == BlurKind::kImageAdaptive || kind == BlurKind::kSpatialAdaptive ||
         kind == BlurKind::kSpatialChannelAdaptive;
}

BlurProvider BlurProvider::none() { return {}; }

BlurProvider BlurProvider::gaussian(int k, double sigma) {
  BlurProvider p;
  p.kind = BlurKind::kGaussian;
  p.k = k;
  p.sigma = sigma;
  return p;
}

BlurProvider BlurProvider::box(int k) {
  BlurProvider p;
  p.kind = BlurKind::kBox;
  p.k = k;
  return p;
}

BlurProvider BlurProvider::adaptive(BlurKind kind, Predictor predictor) {
  if (!is_adaptive(kind)) {
    throw std::invalid_argument("blur kind '" + blur_kind_name(kind) +
                                "' does not take a predictor");
  }
  BlurProvider p;
  p.kind = kind;
  p.k = predictor.cfg.k;
  p.groups = predictor.cfg.groups;
  p.predictor = std::move(predictor);
  p.validate();
  return p;
}

std::string BlurProvider::name() const {
  if (kind == BlurKind::kSpatialChannelAdaptive) {
    return blur_kind_name(kind) + "-g" + std::to_string(groups);
  }
  return blur_kind_name(kind);
}

void BlurProvider::validate() const {
  if (kind == BlurKind::kNone) return;
  if (k <= 0 || k % 2 == 0) throw ShapeError("blur size k must be odd");
  if (!is_adaptive(kind)) return;
  if (!predictor) {
    throw std::invalid_argument("adaptive blur '" + name() + "' has no predictor");
  }
  predictor->cfg.validate();
  if (predictor->cfg.k != k || predictor->cfg.groups != groups) {
    throw ShapeError("predictor config disagrees with blur provider");
  }
  if (kind != BlurKind::kSpatialChannelAdaptive && groups != 1) {
    throw ShapeError("image and spatial adaptive blur use exactly one group");
  }
}

Tensor BlurProvider::blur(const Tensor& x) const {
  validate();
  switch (kind) {
    case BlurKind::kNone:
      return x;
    case BlurKind::kGaussian:
      return apply_fixed_blur(x, gaussian_kernel(k, sigma));
    case BlurKind::kBox:
      return apply_fixed_blur(x, box_kernel(k));
    case BlurKind::kImageAdaptive: {
      Predictor p = *predictor;
      return apply_spatial_adaptive(x, image_adaptive_field(x, p));
    }
    case BlurKind::kSpatialAdaptive: {
      Predictor p = *predictor;
      return apply_spatial_adaptive(x, predict_filters(x, p));
    }
    case BlurKind::kSpatialChannelAdaptive: {
      Predictor p = *predictor;
      return apply_grouped_adaptive(x, predict_filters(x, p));
    }
  }
  throw std::logic_error("unhandled blur kind");
}

FilterField image_adaptive_field(const Tensor& x, Predictor& predictor,
                                 BnMode mode) {
  if (predictor.cfg.groups != 1) {
    throw ShapeError("image adaptive blur uses exactly one group");
  }
  const Tensor pooled = global_avg_pool(predictor_logits(x, predictor, mode));
  const Tensor filt = softmax_over_axis(pooled, predictor.cfg.taps());
  Tensor values(Shape{x.n(), predictor.cfg.taps(), x.h(), x.w()});
  for (std::size_t in = 0; in < x.n(); ++in) {
    for (std::size_t t = 0; t < predictor.cfg.taps(); ++t) {
      for (auto& v : values.plane(in, t)) v = filt(in, t, 0, 0);
    }
  }
  return {1, predictor.cfg.k, std::move(values)};
}

Tensor blur_then_downsample(const Tensor& x, const BlurProvider& provider,
                            int stride) {
  if (stride < 1) throw ShapeError("downsampling stride must be >= 1");
  return strided_subsample(provider.blur(x), stride);
}

Tensor blurred_max_pool(const Tensor& x, const BlurProvider& provider,
                        PoolWindow win) {
  if (win.sh != win.sw && x.h() > 1) {
    throw ShapeError("blurred max pool needs equal strides on 2-D input");
  }
  const Tensor dense = max_pool2d(x, PoolWindow{win.kh, win.kw, 1, 1});
  return strided_subsample(provider.blur(dense), win.sw);
}

template BasicTensor<float> apply_spatial_adaptive(const BasicTensor<float>&,
                                                   const BasicFilterField<float>&);
template BasicTensor<double> apply_spatial_adaptive(const BasicTensor<double>&,
                                                    const BasicFilterField<double>&);
template BasicTensor<float> apply_grouped_adaptive(const BasicTensor<float>&,
                                                   const BasicFilterField<float>&);
template BasicTensor<double> apply_grouped_adaptive(const BasicTensor<double>&,
                                                    const BasicFilterField<double>&);
template BasicTensor<float> apply_fixed_blur(const BasicTensor<float>&,
                                             const std::vector<float>&);
template BasicTensor<double> apply_fixed_blur(const BasicTensor<double>&,
                                              const std::vector<double>&);

}  // namespace adaptaa
