#include "adaptaa/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>

#include "adaptaa/ops.hpp"

namespace adaptaa {

namespace {

std::uint64_t mix(std::uint64_t a, std::uint64_t b) {
  // splitmix64 finalizer over a combined word.
  std::uint64_t z = a + 0x9e3779b97f4a7c15ull * (b + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

double uniform(std::mt19937_64& rng, double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}

int uniform_int(std::mt19937_64& rng, int lo, int hi) {
  return std::uniform_int_distribution<int>(lo, hi)(rng);
}

}  // namespace

std::string pattern_class_name(int label) {
  switch (static_cast<PatternClass>(label)) {
    case PatternClass::kHorizontalBars: return "hbars";
    case PatternClass::kVerticalBars: return "vbars";
    case PatternClass::kFineCheckerboard: return "fine_checker";
    case PatternClass::kCoarseCheckerboard: return "coarse_checker";
  }
  return "class" + std::to_string(label);
}

void SyntheticTask::validate() const {
  if (canvas < 16) throw std::invalid_argument("synthetic canvas must be >= 16");
  if (classes < 2 || classes > static_cast<std::size_t>(kPatternClassCount)) {
    throw std::invalid_argument("synthetic task supports 2..4 classes");
  }
  if (max_shift < 0) throw std::invalid_argument("max_shift must be >= 0");
  if (min_patch < 2 || min_patch > max_patch || max_patch > canvas) {
    throw std::invalid_argument("patch range must satisfy 2 <= min_patch <= max_patch <= canvas");
  }
  if (!(min_contrast >= 0) || min_contrast > max_contrast) {
    throw std::invalid_argument("contrast range must satisfy 0 <= min_contrast <= max_contrast");
  }
  if (!(noise >= 0)) throw std::invalid_argument("noise must be >= 0");
  if (!(impulse_density >= 0 && impulse_density <= 1)) {
    throw std::invalid_argument("impulse_density must lie in [0, 1]");
  }
  if (train_size == 0 || test_size == 0) {
    throw std::invalid_argument("synthetic splits must be non-empty");
  }
}

Tensor render_pattern(const SyntheticTask& task, int label, std::uint64_t instance_seed) {
  if (label < 0 || static_cast<std::size_t>(label) >= task.classes) {
    throw std::invalid_argument("pattern label out of range");
  }
  std::mt19937_64 rng(mix(mix(task.seed, static_cast<std::uint64_t>(label)), instance_seed));
  const auto s = static_cast<int>(task.canvas);
  Tensor img(Shape{1, 1, task.canvas, task.canvas});

  // Smooth background: two Gaussian blobs over a dark floor.
  struct Blob { double cy, cx, sigma, amp; };
  Blob blobs[2];
  for (auto& b : blobs) {
    b = {uniform(rng, 0, s), uniform(rng, 0, s), uniform(rng, 4, 8), uniform(rng, 0.15, 0.35)};
  }
  for (int y = 0; y < s; ++y) {
    for (int x = 0; x < s; ++x) {
      double v = 0.1;
      for (const auto& b : blobs) {
        const double d2 = (y - b.cy) * (y - b.cy) + (x - b.cx) * (x - b.cx);
        v += b.amp * std::exp(-d2 / (2 * b.sigma * b.sigma));
      }
      img(0, 0, y, x) = static_cast<float>(v);
    }
  }

  // Textured patch.
  const int ph = uniform_int(rng, static_cast<int>(task.min_patch), static_cast<int>(task.max_patch));
  const int pw = uniform_int(rng, static_cast<int>(task.min_patch), static_cast<int>(task.max_patch));
  const int py = uniform_int(rng, 0, s - ph);
  const int px = uniform_int(rng, 0, s - pw);
  const int period = uniform_int(rng, 2, 4);
  const int oy = uniform_int(rng, 0, 5);
  const int ox = uniform_int(rng, 0, 5);
  const double amp = uniform(rng, task.min_contrast, task.max_contrast);
  for (int y = py; y < py + ph; ++y) {
    for (int x = px; x < px + pw; ++x) {
      bool on = false;
      switch (static_cast<PatternClass>(label)) {
        case PatternClass::kHorizontalBars: on = (y + oy) % period < period / 2; break;
        case PatternClass::kVerticalBars: on = (x + ox) % period < period / 2; break;
        case PatternClass::kFineCheckerboard: on = (y + x + oy) % 2 == 0; break;
        case PatternClass::kCoarseCheckerboard: on = ((y + oy) / 3 + (x + ox) / 3) % 2 == 0; break;
      }
      if (on) img(0, 0, y, x) = static_cast<float>(img(0, 0, y, x) + amp);
    }
  }
  if (task.impulse_density > 0) {
    const int ih = uniform_int(rng, static_cast<int>(task.min_patch), static_cast<int>(task.max_patch));
    const int iw = uniform_int(rng, static_cast<int>(task.min_patch), static_cast<int>(task.max_patch));
    const int iy = uniform_int(rng, 0, s - ih);
    const int ix = uniform_int(rng, 0, s - iw);
    std::bernoulli_distribution salt(task.impulse_density);
    for (int y = iy; y < iy + ih; ++y) {
      for (int x = ix; x < ix + iw; ++x) {
        if (salt(rng)) img(0, 0, y, x) = 1.0f;
      }
    }
  }
  std::normal_distribution<double> noise(0.0, 1.0);
  for (auto& v : img.data()) {
    const double n = task.noise > 0 ? task.noise * noise(rng) : 0.0;
    v = std::clamp(static_cast<float>(v + n), 0.0f, 1.0f);
  }
  return img;
}

Tensor translate_reflect(const Tensor& x, int dy, int dx) {
  Tensor out(x.shape());
  const auto h = static_cast<std::ptrdiff_t>(x.h());
  const auto w = static_cast<std::ptrdiff_t>(x.w());
  for (std::size_t in = 0; in < x.n(); ++in) {
    for (std::size_t c = 0; c < x.c(); ++c) {
      for (std::ptrdiff_t i = 0; i < h; ++i) {
        const auto si = static_cast<std::size_t>(reflect_index(i - dy, h));
        for (std::ptrdiff_t j = 0; j < w; ++j) {
          out(in, c, i, j) = x(in, c, si, static_cast<std::size_t>(reflect_index(j - dx, w)));
        }
      }
    }
  }
  return out;
}

std::vector<Sample> make_split(const SyntheticTask& task, std::size_t count,
                               std::uint64_t salt) {
  task.validate();
  std::vector<Sample> out;
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    const int label = static_cast<int>(i % task.classes);
    out.push_back({render_pattern(task, label, mix(salt, i)), label});
  }
  std::mt19937_64 rng(mix(task.seed, salt ^ 0x5bd1e995ull));
  std::shuffle(out.begin(), out.end(), rng);
  return out;
}

Tensor stack_images(const std::vector<const Tensor*>& images) {
  if (images.empty()) throw ShapeError("stack_images: no images");
  const Shape s0 = images.front()->shape();
  if (s0.n != 1) throw ShapeError("stack_images expects single images");
  Tensor out(Shape{images.size(), s0.c, s0.h, s0.w});
  for (std::size_t i = 0; i < images.size(); ++i) {
    require_same_shape(images[i]->shape(), s0, "stack_images");
    std::copy(images[i]->data().begin(), images[i]->data().end(),
              out.data().begin() + static_cast<std::ptrdiff_t>(i * s0.size()));
  }
  return out;
}

Tensor make_impulse_edges_image(std::size_t size, std::uint64_t seed, double density) {
  if (size < 16) throw std::invalid_argument("impulse/edges image needs size >= 16");
  if (!(density >= 0 && density <= 1)) throw std::invalid_argument("impulse density must lie in [0, 1]");
  std::mt19937_64 rng(mix(seed, 0xf1a5ull));
  std::bernoulli_distribution impulse(density);
  const auto s = static_cast<double>(size);
  Tensor img(Shape{1, 1, size, size});
  for (std::size_t y = 0; y < size; ++y) {
    for (std::size_t x = 0; x < size; ++x) {
      const double dy = y - 0.5 * s;
      const double dx = x - 0.6 * s;
      const bool disc = dy * dy + dx * dx < (0.22 * s) * (0.22 * s);
      const bool bar = x < static_cast<std::size_t>(0.3 * s) &&
                       (y / std::max<std::size_t>(size / 8, 2)) % 2 == 0;
      float v = 0.15f;
      if (disc) {
        v = 0.85f;
      } else if (bar) {
        v = 0.6f;
      } else if (impulse(rng)) {
        v = 1.0f;
      }
      img(0, 0, y, x) = v;
    }
  }
  return img;
}

}  // namespace adaptaa
