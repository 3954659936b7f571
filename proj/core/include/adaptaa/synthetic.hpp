#ifndef ADAPTAA_SYNTHETIC_HPP_
#define ADAPTAA_SYNTHETIC_HPP_

#include <cstdint>
#include <string>
#include <vector>

#include "adaptaa/tensor.hpp"

namespace adaptaa {

/// Pattern classes of the shifted-pattern task. Every image is a smooth
/// blob background with one textured patch; the class is the patch texture.
/// An optional impulse-noise region adds class-independent high frequencies.
enum class PatternClass : int {
  kHorizontalBars = 0,
  kVerticalBars = 1,
  kFineCheckerboard = 2,    // period 2, at the sampling limit
  kCoarseCheckerboard = 3,  // period 6
};
inline constexpr int kPatternClassCount = 4;
std::string pattern_class_name(int label);

struct SyntheticTask {
  std::uint64_t seed = 7;
  std::size_t canvas = 32;
  std::size_t classes = kPatternClassCount;
  int max_shift = 2;
  std::size_t train_size = 512;
  std::size_t test_size = 1024;
  std::size_t min_patch = 10;  // textured patch side range, pixels
  std::size_t max_patch = 16;
  double min_contrast = 0.25;  // texture amplitude range
  double max_contrast = 0.5;
  double noise = 0.05;         // std-dev of additive Gaussian pixel noise
  double impulse_density = 0.3;  // salt density inside a class-independent distractor region

  void validate() const;
};

struct Sample {
  Tensor image;  // (1, 1, canvas, canvas), values in [0, 1]
  int label = 0;
};

/// Deterministic rendering of one image of class `label`.
Tensor render_pattern(const SyntheticTask& task, int label, std::uint64_t instance_seed);

/// out(i, j) = x(i - dy, j - dx) with reflected borders.
Tensor translate_reflect(const Tensor& x, int dy, int dx);

/// Balanced, shuffled split; `salt` separates train from test streams.
std::vector<Sample> make_split(const SyntheticTask& task, std::size_t count,
                               std::uint64_t salt);

/// Stacks (1, c, h, w) images into one (n, c, h, w) batch.
Tensor stack_images(const std::vector<const Tensor*>& images);

/// Impulse noise (salt with the given density) over a dark background with
/// a bright disc and bars: a high-frequency region next to lower-frequency
/// edges. Density 0 gives the clean image.
Tensor make_impulse_edges_image(std::size_t size, std::uint64_t seed, double density = 0.2);

}  // namespace adaptaa

#endif  // ADAPTAA_SYNTHETIC_HPP_
