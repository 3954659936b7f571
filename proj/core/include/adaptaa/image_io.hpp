#ifndef ADAPTAA_IMAGE_IO_HPP_
#define ADAPTAA_IMAGE_IO_HPP_

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <vector>

#include "adaptaa/metrics.hpp"
#include "adaptaa/tensor.hpp"

namespace adaptaa {

enum class PnmEncoding { kPlain, kBinary };

/// Netpbm grayscale (PGM, 1 channel) or color (PPM, 3 channels) image with
/// interleaved samples in [0, maxval]. maxval ≤ 255 stores one byte per
/// binary sample, larger values two bytes, most significant first.
struct Image {
  std::size_t width = 0;
  std::size_t height = 0;
  int channels = 1;
  int maxval = 255;
  PnmEncoding encoding = PnmEncoding::kBinary;
  std::vector<std::uint16_t> samples;

  std::uint16_t at(std::size_t y, std::size_t x, int ch = 0) const {
    return samples[(y * width + x) * channels + ch];
  }
};

/// Accepts P2, P3, P5 and P6 with '#' comments in the header.
Image read_pnm(std::istream& is);
Image read_pnm(const std::filesystem::path& path);

/// Writes the header as "P?\n<w> <h>\n<maxval>\n"; plain bodies put one
/// image row per line with single spaces between samples.
void write_pnm(std::ostream& os, const Image& img);
void write_pnm(const std::filesystem::path& path, const Image& img);

/// (1, channels, h, w) tensor holding sample / maxval.
Tensor image_to_tensor(const Image& img);

/// Inverse of image_to_tensor: clamps to [0, 1] and rounds to the nearest
/// sample. The tensor must have one image with 1 or 3 channels.
Image tensor_to_image(const Tensor& t, int maxval = 255,
                      PnmEncoding encoding = PnmEncoding::kBinary);

/// Min-max normalized 8-bit grayscale rendering of one (h, w) plane.
Image heatmap(std::span<const double> values, std::size_t h, std::size_t w);

/// 16-bit (or 8-bit) PGM whose samples are class ids.
LabelMap read_label_map(const std::filesystem::path& path);
void write_label_map(const std::filesystem::path& path, const LabelMap& map);

/// PGM mask; any non-zero sample is foreground.
Mask read_mask(const std::filesystem::path& path);
void write_mask(const std::filesystem::path& path, const Mask& mask);

}  // namespace adaptaa

#endif  // ADAPTAA_IMAGE_IO_HPP_
