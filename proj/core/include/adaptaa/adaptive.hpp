#ifndef ADAPTAA_ADAPTIVE_HPP_
#define ADAPTAA_ADAPTIVE_HPP_

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "adaptaa/ops.hpp"
#include "adaptaa/predictor.hpp"
#include "adaptaa/tensor.hpp"

namespace adaptaa {

// All blur windows are centered on the output pixel and reflect-padded at
// the borders, so output extents equal input extents.

/// Y(c, i, j) = sum over taps of w(i, j) * X(c, i + dy, j + dx); the field
/// must have a single group.
template <typename T>
BasicTensor<T> apply_spatial_adaptive(const BasicTensor<T>& x,
                                      const BasicFilterField<T>& w);

/// Like apply_spatial_adaptive, with channel c filtered by the field of
/// group group_of_channel(c, C, g).
template <typename T>
BasicTensor<T> apply_grouped_adaptive(const BasicTensor<T>& x,
                                      const BasicFilterField<T>& w);

/// One k×k kernel (row-major, k² weights) applied to every channel.
template <typename T>
BasicTensor<T> apply_fixed_blur(const BasicTensor<T>& x,
                                const std::vector<T>& kernel);

/// Sampled 2-D Gaussian normalized to unit sum.
std::vector<float> gaussian_kernel(int k, double sigma);
std::vector<float> box_kernel(int k);

enum class BlurKind {
  kNone,
  kGaussian,
  kBox,
  kImageAdaptive,
  kSpatialAdaptive,
  kSpatialChannelAdaptive,
};

/// Accepts the CLI spellings none, gaussian, box, image, spatial, grouped.
BlurKind parse_blur_kind(std::string_view s);
/// Inverse of parse_blur_kind.
std::string blur_kind_name(BlurKind kind);
bool is_adaptive(BlurKind kind);

/// Interchangeable smoothing stage placed in front of a subsampler.
/// Adaptive kinds carry their own filter predictor; image and spatial
/// kinds use one group.
struct BlurProvider {
  BlurKind kind = BlurKind::kNone;
  int k = 3;
  std::size_t groups = 1;
  double sigma = 1.0;
  std::optional<Predictor> predictor;

  static BlurProvider none();
  static BlurProvider gaussian(int k = 3, double sigma = 1.0);
  static BlurProvider box(int k = 3);
  /// Adaptive provider; the predictor config fixes k and the group count.
  static BlurProvider adaptive(BlurKind kind, Predictor predictor);

  std::string name() const;
  void validate() const;
  /// Applies the blur with the predictor's batchnorm in inference mode.
  Tensor blur(const Tensor& x) const;
};

/// One softmax-normalized filter per image, from spatially averaged
/// predictor logits, broadcast to every location.
FilterField image_adaptive_field(const Tensor& x, Predictor& predictor,
                                 BnMode mode = BnMode::kInference);

/// Blur with the provider, then keep every stride-th sample.
Tensor blur_then_downsample(const Tensor& x, const BlurProvider& provider,
                            int stride = 2);

/// Anti-aliased max pooling: max over the window at stride 1, then blur,
/// then subsample. With kind none this equals plain max pooling wherever
/// the strided windows fit.
Tensor blurred_max_pool(const Tensor& x, const BlurProvider& provider,
                        PoolWindow win);

}  // namespace adaptaa

#endif  // ADAPTAA_ADAPTIVE_HPP_
