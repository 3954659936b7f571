#include "adaptaa/image_io.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <limits>
#include <ostream>
#include <string>

#include "adaptaa/t4f.hpp"

namespace adaptaa {

namespace {

void skip_space_and_comments(std::istream& is) {
  for (;;) {
    const int ch = is.peek();
    if (ch == '#') {
      is.ignore(std::numeric_limits<std::streamsize>::max(), '\n');
    } else if (ch == ' ' || ch == '\t' || ch == '\n' || ch == '\r') {
      is.get();
    } else {
      return;
    }
  }
}

std::size_t read_header_int(std::istream& is, const char* what) {
  skip_space_and_comments(is);
  long long v = -1;
  if (!(is >> v) || v < 0) throw FormatError(std::string("PNM: bad ") + what);
  return static_cast<std::size_t>(v);
}

}  // namespace

Image read_pnm(std::istream& is) {
  char p = 0;
  char kind = 0;
  if (!is.get(p) || !is.get(kind) || p != 'P') throw FormatError("PNM: bad magic");
  Image img;
  switch (kind) {
    case '2': img.channels = 1; img.encoding = PnmEncoding::kPlain; break;
    case '3': img.channels = 3; img.encoding = PnmEncoding::kPlain; break;
    case '5': img.channels = 1; img.encoding = PnmEncoding::kBinary; break;
    case '6': img.channels = 3; img.encoding = PnmEncoding::kBinary; break;
    default: throw FormatError(std::string("PNM: unsupported type P") + kind);
  }
  img.width = read_header_int(is, "width");
  img.height = read_header_int(is, "height");
  const std::size_t maxval = read_header_int(is, "maxval");
  if (maxval == 0 || maxval > 65535) throw FormatError("PNM: maxval out of range");
  img.maxval = static_cast<int>(maxval);
  const std::size_t count = img.width * img.height * static_cast<std::size_t>(img.channels);
  img.samples.resize(count);
  if (img.encoding == PnmEncoding::kPlain) {
    for (auto& s : img.samples) {
      const std::size_t v = read_header_int(is, "sample");
      if (v > maxval) throw FormatError("PNM: sample exceeds maxval");
      s = static_cast<std::uint16_t>(v);
    }
    return img;
  }
  // Exactly one whitespace byte separates the header from binary data.
  is.get();
  const bool wide = maxval > 255;
  for (auto& s : img.samples) {
    unsigned char b[2] = {0, 0};
    if (!is.read(reinterpret_cast<char*>(b), wide ? 2 : 1)) {
      throw FormatError("PNM: truncated pixel data");
    }
    s = wide ? static_cast<std::uint16_t>((b[0] << 8) | b[1]) : b[0];
    if (s > maxval) throw FormatError("PNM: sample exceeds maxval");
  }
  return img;
}

Image read_pnm(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw FormatError("cannot open " + path.string());
  return read_pnm(is);
}

void write_pnm(std::ostream& os, const Image& img) {
  if (img.channels != 1 && img.channels != 3) {
    throw FormatError("PNM: only 1 or 3 channels are supported");
  }
  if (img.samples.size() != img.width * img.height * img.channels) {
    throw FormatError("PNM: sample count does not match extents");
  }
  const bool plain = img.encoding == PnmEncoding::kPlain;
  const char kind = img.channels == 1 ? (plain ? '2' : '5') : (plain ? '3' : '6');
  os << 'P' << kind << '\n' << img.width << ' ' << img.height << '\n'
     << img.maxval << '\n';
  const std::size_t row = img.width * img.channels;
  if (plain) {
    for (std::size_t y = 0; y < img.height; ++y) {
      for (std::size_t i = 0; i < row; ++i) {
        if (i) os << ' ';
        os << img.samples[y * row + i];
      }
      os << '\n';
    }
  } else {
    const bool wide = img.maxval > 255;
    for (std::uint16_t s : img.samples) {
      if (wide) os.put(static_cast<char>(s >> 8));
      os.put(static_cast<char>(s & 0xff));
    }
  }
  if (!os) throw FormatError("PNM: write failed");
}

void write_pnm(const std::filesystem::path& path, const Image& img) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw FormatError("cannot open " + path.string() + " for writing");
  write_pnm(os, img);
}

Tensor image_to_tensor(const Image& img) {
  Tensor t(Shape{1, static_cast<std::size_t>(img.channels), img.height, img.width});
  const float scale = 1.0f / static_cast<float>(img.maxval);
  for (std::size_t y = 0; y < img.height; ++y) {
    for (std::size_t x = 0; x < img.width; ++x) {
      for (int c = 0; c < img.channels; ++c) {
        t(0, c, y, x) = static_cast<float>(img.at(y, x, c)) * scale;
      }
    }
  }
  return t;
}

Image tensor_to_image(const Tensor& t, int maxval, PnmEncoding encoding) {
  if (t.n() != 1 || (t.c() != 1 && t.c() != 3)) {
    throw ShapeError("image tensor must be (1, 1|3, h, w), got " + t.shape().str());
  }
  if (maxval <= 0 || maxval > 65535) throw FormatError("PNM: maxval out of range");
  Image img;
  img.width = t.w();
  img.height = t.h();
  img.channels = static_cast<int>(t.c());
  img.maxval = maxval;
  img.encoding = encoding;
  img.samples.resize(t.size());
  for (std::size_t y = 0; y < t.h(); ++y) {
    for (std::size_t x = 0; x < t.w(); ++x) {
      for (std::size_t c = 0; c < t.c(); ++c) {
        const double v = std::clamp(double(t(0, c, y, x)), 0.0, 1.0) * maxval;
        img.samples[(y * t.w() + x) * t.c() + c] =
            static_cast<std::uint16_t>(std::lround(v));
      }
    }
  }
  return img;
}

Image heatmap(std::span<const double> values, std::size_t h, std::size_t w) {
  if (values.size() != h * w) throw ShapeError("heatmap: size mismatch");
  Image img;
  img.width = w;
  img.height = h;
  img.samples.resize(values.size());
  if (values.empty()) return img;
  const auto [lo, hi] = std::minmax_element(values.begin(), values.end());
  const double range = *hi - *lo;
  for (std::size_t i = 0; i < values.size(); ++i) {
    const double v = range > 0.0 ? (values[i] - *lo) / range : 0.0;
    img.samples[i] = static_cast<std::uint16_t>(std::lround(v * 255.0));
  }
  return img;
}

LabelMap read_label_map(const std::filesystem::path& path) {
  const Image img = read_pnm(path);
  if (img.channels != 1) throw FormatError("label map must be a PGM: " + path.string());
  std::vector<std::int32_t> ids(img.samples.begin(), img.samples.end());
  return {img.height, img.width, std::move(ids)};
}

void write_label_map(const std::filesystem::path& path, const LabelMap& map) {
  Image img;
  img.width = map.w();
  img.height = map.h();
  img.maxval = 65535;
  for (auto v : map.ids()) {
    if (v > 65535) throw FormatError("label id exceeds 16 bits");
    img.samples.push_back(static_cast<std::uint16_t>(v));
  }
  write_pnm(path, img);
}

Mask read_mask(const std::filesystem::path& path) {
  const Image img = read_pnm(path);
  if (img.channels != 1) throw FormatError("mask must be a PGM: " + path.string());
  std::vector<std::uint8_t> bits(img.samples.size());
  for (std::size_t i = 0; i < bits.size(); ++i) bits[i] = img.samples[i] != 0;
  return {img.height, img.width, std::move(bits)};
}

void write_mask(const std::filesystem::path& path, const Mask& mask) {
  Image img;
  img.width = mask.w();
  img.height = mask.h();
  img.maxval = 255;
  for (auto b : mask.bits()) img.samples.push_back(b ? 255 : 0);
  write_pnm(path, img);
}

}  // namespace adaptaa
