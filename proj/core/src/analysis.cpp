#include "adaptaa/analysis.hpp"

#include <algorithm>
#include <cmath>

#include "adaptaa/image_io.hpp"

namespace adaptaa {

double VarianceMap::max_variance(int k) {
  const double t = double(k) * k;
  return (t - 1.0) / (t * t);
}

VarianceMap filter_variance(const FilterField& w) {
  VarianceMap out;
  out.k = w.k();
  out.values = Tensor64(Shape{w.n(), w.groups(), w.h(), w.w()});
  const std::size_t taps = w.taps();
  for (std::size_t in = 0; in < w.n(); ++in) {
    for (std::size_t g = 0; g < w.groups(); ++g) {
      for (std::size_t i = 0; i < w.h(); ++i) {
        for (std::size_t j = 0; j < w.w(); ++j) {
          double mean = 0.0;
          for (std::size_t t = 0; t < taps; ++t) mean += w(in, g, t, i, j);
          mean /= double(taps);
          double var = 0.0;
          for (std::size_t t = 0; t < taps; ++t) {
            const double d = w(in, g, t, i, j) - mean;
            var += d * d;
          }
          out.values(in, g, i, j) = var / double(taps);
        }
      }
    }
  }
  return out;
}

std::vector<std::filesystem::path> export_variance_heatmaps(
    const VarianceMap& map, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  std::vector<std::filesystem::path> written;
  for (std::size_t in = 0; in < map.values.n(); ++in) {
    for (std::size_t g = 0; g < map.values.c(); ++g) {
      const auto path = dir / ("variance_n" + std::to_string(in) + "_g" +
                               std::to_string(g) + ".pgm");
      write_pnm(path, heatmap(map.values.plane(in, g), map.values.h(), map.values.w()));
      written.push_back(path);
    }
  }
  return written;
}

double pearson(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw ShapeError("pearson: length mismatch");
  if (a.empty()) return 0.0;
  double ma = 0.0, mb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    ma += a[i];
    mb += b[i];
  }
  ma /= double(a.size());
  mb /= double(b.size());
  double sab = 0.0, saa = 0.0, sbb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    sab += (a[i] - ma) * (b[i] - mb);
    saa += (a[i] - ma) * (a[i] - ma);
    sbb += (b[i] - mb) * (b[i] - mb);
  }
  if (saa <= 0.0 || sbb <= 0.0) return 0.0;
  return std::clamp(sab / std::sqrt(saa * sbb), -1.0, 1.0);
}

double GroupSimilarityReport::mean_within() const {
  double s = 0.0;
  for (std::size_t g = 0; g < groups; ++g) s += at(g, g);
  return groups ? s / double(groups) : 0.0;
}

double GroupSimilarityReport::mean_between() const {
  if (groups < 2) return 0.0;
  double s = 0.0;
  for (std::size_t a = 0; a < groups; ++a) {
    for (std::size_t b = 0; b < groups; ++b) {
      if (a != b) s += at(a, b);
    }
  }
  return s / double(groups * (groups - 1));
}

GroupSimilarityReport group_similarity(const Tensor& features, std::size_t groups) {
  require_groups_divide(features.c(), groups);
  const std::size_t c = features.c();
  const std::size_t per = c / groups;
  // Channel c flattened over (n, h, w).
  std::vector<std::vector<double>> flat(c);
  for (std::size_t ic = 0; ic < c; ++ic) {
    for (std::size_t in = 0; in < features.n(); ++in) {
      for (float v : features.plane(in, ic)) flat[ic].push_back(v);
    }
  }
  std::vector<double> corr(c * c, 0.0);
  for (std::size_t a = 0; a < c; ++a) {
    corr[a * c + a] = pearson(flat[a], flat[a]);
    for (std::size_t b = a + 1; b < c; ++b) {
      corr[a * c + b] = corr[b * c + a] = pearson(flat[a], flat[b]);
    }
  }
  GroupSimilarityReport r;
  r.groups = groups;
  r.matrix.assign(groups * groups, 0.0);
  for (std::size_t ga = 0; ga < groups; ++ga) {
    for (std::size_t gb = 0; gb < groups; ++gb) {
      double s = 0.0;
      std::size_t pairs = 0;
      for (std::size_t a = ga * per; a < (ga + 1) * per; ++a) {
        for (std::size_t b = gb * per; b < (gb + 1) * per; ++b) {
          if (ga == gb && a == b && per > 1) continue;
          s += corr[a * c + b];
          ++pairs;
        }
      }
      r.matrix[ga * groups + gb] = s / double(pairs);
    }
  }
  return r;
}

VarianceGradientStats variance_vs_gradient(const VarianceMap& map,
                                           const Tensor& image) {
  const std::size_t h = map.values.h();
  const std::size_t w = map.values.w();
  if (image.h() != h || image.w() != w || image.n() == 0 || image.c() == 0) {
    throw ShapeError("variance_vs_gradient: image extents do not match the map");
  }
  std::vector<double> grad(h * w);
  for (std::size_t i = 0; i < h; ++i) {
    for (std::size_t j = 0; j < w; ++j) {
      double mag = 0.0;
      for (std::size_t c = 0; c < image.c(); ++c) {
        const double gx = j + 1 < w ? image(0, c, i, j + 1) - image(0, c, i, j) : 0.0;
        const double gy = i + 1 < h ? image(0, c, i + 1, j) - image(0, c, i, j) : 0.0;
        mag += gx * gx + gy * gy;
      }
      grad[i * w + j] = std::sqrt(mag);
    }
  }
  std::vector<double> sorted = grad;
  std::nth_element(sorted.begin(), sorted.begin() + sorted.size() / 2, sorted.end());
  const double median = sorted[sorted.size() / 2];
  VarianceGradientStats s;
  const auto var = map.values.plane(0, 0);
  for (std::size_t i = 0; i < grad.size(); ++i) {
    if (grad[i] > median) {
      s.mean_variance_high_gradient += var[i];
      ++s.high_count;
    } else {
      s.mean_variance_low_gradient += var[i];
      ++s.low_count;
    }
  }
  if (s.high_count) s.mean_variance_high_gradient /= double(s.high_count);
  if (s.low_count) s.mean_variance_low_gradient /= double(s.low_count);
  return s;
}

}  // namespace adaptaa
