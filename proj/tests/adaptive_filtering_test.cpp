#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "adaptaa/adaptive.hpp"
#include "oracles.hpp"

namespace adaptaa {
namespace {

Tensor64 fixed_kernel_oracle(const Tensor64& x, const std::vector<float>& kernel, int k) {
  Tensor64 field(Shape{x.n(), std::size_t(k * k), x.h(), x.w()});
  for (std::size_t n = 0; n < x.n(); ++n) {
    for (std::size_t t = 0; t < kernel.size(); ++t) {
      for (auto& v : field.plane(n, t)) v = kernel[t];
    }
  }
  return oracle::grouped_filter(x, field, 1, k);
}

double total_variation(const Tensor& x) {
  double tv = 0.0;
  for (std::size_t n = 0; n < x.n(); ++n) {
    for (std::size_t c = 0; c < x.c(); ++c) {
      for (std::size_t i = 0; i < x.h(); ++i) {
        for (std::size_t j = 0; j < x.w(); ++j) {
          if (i + 1 < x.h()) tv += std::abs(double(x(n, c, i + 1, j)) - x(n, c, i, j));
          if (j + 1 < x.w()) tv += std::abs(double(x(n, c, i, j + 1)) - x(n, c, i, j));
        }
      }
    }
  }
  return tv;
}

BlurProvider random_adaptive(BlurKind kind, std::size_t channels, std::size_t groups,
                             std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  Predictor p = Predictor::init({3, groups, channels}, rng);
  for (auto& b : p.conv.bias) b = std::uniform_real_distribution<float>(-1, 1)(rng);
  return BlurProvider::adaptive(kind, p);
}

TEST(SpatialAdaptive, UniformFieldIsBoxBlur) {
  std::mt19937_64 rng(1);
  const Tensor64 x = oracle::random_tensor(Shape{2, 3, 6, 7}, rng);
  const Tensor y = apply_spatial_adaptive(x.cast<float>(), FilterField::uniform(2, 1, 3, 6, 7));
  const Tensor64 ref = fixed_kernel_oracle(x, box_kernel(3), 3);
  for (std::size_t i = 0; i < y.size(); ++i) EXPECT_NEAR(y[i], ref[i], 1e-6);
  EXPECT_EQ(y, apply_fixed_blur(x.cast<float>(), box_kernel(3)));
}

TEST(SpatialAdaptive, IdentityFieldIsExact) {
  std::mt19937_64 rng(2);
  const Tensor x = oracle::random_tensor(Shape{1, 2, 5, 5}, rng).cast<float>();
  EXPECT_EQ(apply_spatial_adaptive(x, FilterField::identity(1, 1, 3, 5, 5)), x);
  EXPECT_EQ(apply_spatial_adaptive(x, FilterField::identity(1, 1, 5, 5, 5)), x);
}

TEST(SpatialAdaptive, RandomMatchesOracle) {
  std::mt19937_64 rng(3);
  const Tensor64 x = oracle::random_tensor(Shape{1, 2, 5, 5}, rng);
  const Tensor64 f = oracle::random_field(1, 1, 3, 5, 5, rng);
  const Tensor y = apply_spatial_adaptive(x.cast<float>(), FilterField(1, 3, f.cast<float>()));
  const Tensor64 ref = oracle::grouped_filter(x, f, 1, 3);
  for (std::size_t i = 0; i < y.size(); ++i) EXPECT_NEAR(y[i], ref[i], 1e-5);
}

TEST(SpatialAdaptive, RejectsMismatches) {
  const Tensor x(Shape{1, 4, 5, 5});
  EXPECT_THROW(apply_spatial_adaptive(x, FilterField::uniform(1, 2, 3, 5, 5)), ShapeError);
  EXPECT_THROW(apply_spatial_adaptive(x, FilterField::uniform(1, 1, 3, 5, 4)), ShapeError);
  EXPECT_THROW(apply_grouped_adaptive(x, FilterField::uniform(1, 3, 3, 5, 5)), ShapeError);
  EXPECT_THROW(apply_grouped_adaptive(x, FilterField::uniform(2, 2, 3, 5, 5)), ShapeError);
}

TEST(GroupedAdaptive, OneGroupEqualsSpatialBitwise) {
  for (std::uint64_t seed = 0; seed < 10000; ++seed) {
    std::mt19937_64 rng(seed);
    const std::size_t c = 1 + seed % 3, h = 2 + seed % 4, w = 2 + (seed / 4) % 4;
    const Tensor x = oracle::random_tensor(Shape{1, c, h, w}, rng).cast<float>();
    const FilterField f(1, 3, oracle::random_field(1, 1, 3, h, w, rng).cast<float>());
    ASSERT_EQ(apply_grouped_adaptive(x, f), apply_spatial_adaptive(x, f)) << "seed " << seed;
  }
}

TEST(GroupedAdaptive, MixedIdentityAndUniformPerChannel) {
  std::mt19937_64 rng(4);
  const std::size_t c = 4;
  const Tensor x = oracle::random_tensor(Shape{1, c, 5, 6}, rng).cast<float>();
  Tensor values(Shape{1, c * 9, 5, 6});
  for (std::size_t g = 0; g < c; ++g) {
    for (std::size_t t = 0; t < 9; ++t) {
      const float v = g % 2 == 0 ? (t == 4 ? 1.0f : 0.0f) : 1.0f / 9.0f;
      for (auto& e : values.plane(0, g * 9 + t)) e = v;
    }
  }
  const Tensor y = apply_grouped_adaptive(x, FilterField(c, 3, values));
  const Tensor box = apply_fixed_blur(x, box_kernel(3));
  for (std::size_t ch = 0; ch < c; ++ch) {
    const auto expect = ch % 2 == 0 ? x.plane(0, ch) : box.plane(0, ch);
    const auto got = y.plane(0, ch);
    for (std::size_t i = 0; i < got.size(); ++i) EXPECT_FLOAT_EQ(got[i], expect[i]);
  }
}

TEST(GroupedAdaptive, RandomTwoGroupsMatchOracle) {
  std::mt19937_64 rng(5);
  const Tensor64 x = oracle::random_tensor(Shape{1, 4, 6, 6}, rng);
  const Tensor64 f = oracle::random_field(1, 2, 3, 6, 6, rng);
  const Tensor y = apply_grouped_adaptive(x.cast<float>(), FilterField(2, 3, f.cast<float>()));
  const Tensor64 ref = oracle::grouped_filter(x, f, 2, 3);
  for (std::size_t i = 0; i < y.size(); ++i) EXPECT_NEAR(y[i], ref[i], 1e-5);
}

TEST(GroupedAdaptive, PropertyMatchesOracle) {
  for (std::uint64_t seed = 0; seed < 200; ++seed) {
    std::mt19937_64 rng(seed + 1000);
    auto pick = [&](std::size_t lo, std::size_t hi) {
      return std::uniform_int_distribution<std::size_t>(lo, hi)(rng);
    };
    const std::size_t g = std::size_t{1} << pick(0, 2);
    const std::size_t c = g * pick(1, 2);
    const int k = pick(0, 1) ? 3 : 5;
    const std::size_t n = pick(1, 2), h = pick(2, 9), w = pick(2, 9);
    const Tensor64 x = oracle::random_tensor(Shape{n, c, h, w}, rng);
    const Tensor64 f = oracle::random_field(n, g, k, h, w, rng);
    const Tensor64 y = apply_grouped_adaptive(x, BasicFilterField<double>(g, k, f));
    const Tensor64 ref = oracle::grouped_filter(x, f, g, k);
    ASSERT_LT(max_abs_diff(y, ref), 1e-10) << "seed " << seed;
  }
}

TEST(FixedKernels, GaussianAndBox) {
  const auto g = gaussian_kernel(3, 1.0);
  double sum = 0.0;
  for (float v : g) sum += v;
  EXPECT_NEAR(sum, 1.0, 1e-6);
  const double e1 = std::exp(-0.5), e2 = std::exp(-1.0);
  const double z = 1.0 + 4.0 * e1 + 4.0 * e2;
  EXPECT_NEAR(g[4], 1.0 / z, 1e-7);
  EXPECT_NEAR(g[1], e1 / z, 1e-7);
  EXPECT_NEAR(g[0], e2 / z, 1e-7);
  EXPECT_THROW(gaussian_kernel(3, 0.0), std::invalid_argument);
  EXPECT_THROW(gaussian_kernel(4, 1.0), ShapeError);
  for (float v : box_kernel(5)) EXPECT_FLOAT_EQ(v, 1.0f / 25.0f);
}

TEST(BlurProvider, ParseAndName) {
  for (const char* s : {"none", "gaussian", "box", "image", "spatial", "grouped"}) {
    EXPECT_EQ(blur_kind_name(parse_blur_kind(s)), s);
  }
  EXPECT_THROW(parse_blur_kind("median"), std::invalid_argument);
  EXPECT_EQ(random_adaptive(BlurKind::kSpatialChannelAdaptive, 8, 4, 1).name(), "grouped-g4");
  EXPECT_THROW(BlurProvider::adaptive(BlurKind::kGaussian, Predictor::zeros({3, 1, 2})),
               std::invalid_argument);
  EXPECT_THROW(BlurProvider::adaptive(BlurKind::kSpatialAdaptive, Predictor::zeros({3, 2, 2})),
               ShapeError);
}

TEST(BlurThenDownsample, MaxPoolShiftExample) {
  const Tensor a(Shape{1, 1, 1, 12}, {0, 0, 1, 1, 0, 0, 1, 1, 0, 0, 1, 1});
  const Tensor b(Shape{1, 1, 1, 12}, {0, 1, 1, 0, 0, 1, 1, 0, 0, 1, 1, 0});
  const PoolWindow win{1, 2, 1, 2};
  const Tensor pa = blurred_max_pool(a, BlurProvider::none(), win);
  const Tensor pb = blurred_max_pool(b, BlurProvider::none(), win);
  EXPECT_EQ(pa.vec(), (std::vector<float>{0, 1, 0, 1, 0, 1}));
  EXPECT_EQ(pb.vec(), (std::vector<float>{1, 1, 1, 1, 1, 1}));
  EXPECT_EQ(pa, max_pool2d(a, win));
}

TEST(BlurThenDownsample, ConstantInputPreservedByEveryProvider) {
  const Tensor x(Shape{2, 4, 8, 8}, 0.37f);
  std::vector<BlurProvider> providers{BlurProvider::none(), BlurProvider::gaussian(),
                                      BlurProvider::gaussian(5, 1.5), BlurProvider::box(),
                                      random_adaptive(BlurKind::kImageAdaptive, 4, 1, 1),
                                      random_adaptive(BlurKind::kSpatialAdaptive, 4, 1, 2),
                                      random_adaptive(BlurKind::kSpatialChannelAdaptive, 4, 2, 3)};
  for (const auto& p : providers) {
    const Tensor y = blur_then_downsample(x, p, 2);
    EXPECT_EQ(y.shape(), (Shape{2, 4, 4, 4}));
    for (float v : y.data()) ASSERT_NEAR(v, 0.37f, 1e-5) << p.name();
  }
}

TEST(BlurThenDownsample, ZeroGroupedPredictorEqualsBox) {
  std::mt19937_64 rng(6);
  const Tensor x = oracle::random_tensor(Shape{2, 8, 9, 9}, rng).cast<float>();
  const auto zero = BlurProvider::adaptive(BlurKind::kSpatialChannelAdaptive,
                                           Predictor::zeros({3, 4, 8}));
  EXPECT_EQ(blur_then_downsample(x, zero, 2), blur_then_downsample(x, BlurProvider::box(), 2));
}

TEST(BlurThenDownsample, OutputWithinWindowRange) {
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    std::mt19937_64 rng(seed);
    const Tensor x = oracle::random_tensor(Shape{1, 4, 7, 7}, rng).cast<float>();
    const auto p = random_adaptive(BlurKind::kSpatialChannelAdaptive, 4, 2, seed);
    const Tensor y = p.blur(x);
    for (std::size_t c = 0; c < 4; ++c) {
      for (long i = 0; i < 7; ++i) {
        for (long j = 0; j < 7; ++j) {
          float lo = 1e9f, hi = -1e9f;
          for (long dy = -1; dy <= 1; ++dy) {
            for (long dx = -1; dx <= 1; ++dx) {
              const float v = x(0, c, oracle::mirror(i + dy, 7), oracle::mirror(j + dx, 7));
              lo = std::min(lo, v);
              hi = std::max(hi, v);
            }
          }
          ASSERT_GE(y(0, c, i, j), lo - 1e-5f);
          ASSERT_LE(y(0, c, i, j), hi + 1e-5f);
        }
      }
    }
  }
}

TEST(BlurThenDownsample, UniformFieldDoesNotIncreaseTotalVariation) {
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    std::mt19937_64 rng(seed);
    const Tensor x = oracle::random_tensor(Shape{1, 2, 8, 8}, rng).cast<float>();
    const Tensor y = apply_spatial_adaptive(x, FilterField::uniform(1, 1, 3, 8, 8));
    EXPECT_LE(total_variation(y), total_variation(x) + 1e-4);
  }
}

TEST(ImageAdaptive, OneFilterPerImage) {
  std::mt19937_64 rng(7);
  Predictor p = Predictor::init({3, 1, 2}, rng);
  const Tensor x = oracle::random_tensor(Shape{2, 2, 6, 6}, rng).cast<float>();
  const FilterField f = image_adaptive_field(x, p);
  EXPECT_LT(f.max_unit_sum_error(), 1e-6);
  for (std::size_t n = 0; n < 2; ++n) {
    for (std::size_t t = 0; t < 9; ++t) {
      for (float v : f.values().plane(n, t)) EXPECT_EQ(v, f(n, 0, t, 0, 0));
    }
  }
  // The filter is the softmax of the spatially averaged logits.
  const Tensor logits = predictor_logits(x, p, BnMode::kInference);
  std::vector<double> z;
  for (std::size_t t = 0; t < 9; ++t) {
    double s = 0.0;
    for (float v : logits.plane(1, t)) s += v;
    z.push_back(s / 36.0);
  }
  const auto ref = oracle::softmax(z);
  for (std::size_t t = 0; t < 9; ++t) EXPECT_NEAR(f(1, 0, t, 3, 3), ref[t], 1e-6);
}

TEST(BlurThenDownsample, RejectsBadStride) {
  EXPECT_THROW(blur_then_downsample(Tensor(Shape{1, 1, 4, 4}), BlurProvider::box(), 0),
               ShapeError);
}

}  // namespace
}  // namespace adaptaa
