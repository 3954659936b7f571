#ifndef ADAPTAA_ANALYSIS_HPP_
#define ADAPTAA_ANALYSIS_HPP_

#include <cstddef>
#include <filesystem>
#include <vector>

#include "adaptaa/predictor.hpp"
#include "adaptaa/tensor.hpp"

namespace adaptaa {

/// Per-location population variance of the k² filter weights, with
/// extents (n, g, h, w). Zero means a uniform (maximally blurring) filter;
/// the identity filter attains the maximum (k²-1)/k⁴.
struct VarianceMap {
  int k = 3;
  Tensor64 values;

  static double max_variance(int k);
};

VarianceMap filter_variance(const FilterField& w);

/// Writes one min-max normalized 8-bit PGM per (image, group) plane as
/// variance_n<i>_g<j>.pgm; returns the written paths.
std::vector<std::filesystem::path> export_variance_heatmaps(
    const VarianceMap& map, const std::filesystem::path& dir);

/// g×g matrix of mean Pearson correlations between flattened channel maps.
/// Off-diagonal blocks average every cross-group channel pair; diagonal
/// blocks average the distinct pairs inside a group, or hold 1 when a group
/// has a single non-constant channel. Constant channels correlate as 0.
struct GroupSimilarityReport {
  std::size_t groups = 0;
  std::vector<double> matrix;

  double at(std::size_t a, std::size_t b) const { return matrix[a * groups + b]; }
  double mean_within() const;
  double mean_between() const;
};

GroupSimilarityReport group_similarity(const Tensor& features, std::size_t groups);

/// Pearson correlation of two equally long sequences; 0 if either is constant.
double pearson(std::span<const double> a, std::span<const double> b);

/// Mean filter variance over pixels whose image gradient magnitude lies
/// above versus at-or-below the median. Computed from image 0 / group 0.
struct VarianceGradientStats {
  double mean_variance_high_gradient = 0.0;
  double mean_variance_low_gradient = 0.0;
  std::size_t high_count = 0;
  std::size_t low_count = 0;
};

VarianceGradientStats variance_vs_gradient(const VarianceMap& map,
                                           const Tensor& image);

}  // namespace adaptaa

#endif  // ADAPTAA_ANALYSIS_HPP_
