#include <benchmark/benchmark.h>

#include <random>

#include "adaptaa/adaptive.hpp"
#include "adaptaa/metrics.hpp"
#include "adaptaa/predictor.hpp"

namespace adaptaa {
namespace {

Tensor random_input(std::size_t n, std::size_t c, std::size_t hw, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<float> u(-1.0f, 1.0f);
  Tensor t(Shape{n, c, hw, hw});
  for (auto& v : t.data()) v = u(rng);
  return t;
}

// Args: channels, spatial size.
void BM_Conv2d(benchmark::State& state) {
  const auto c = static_cast<std::size_t>(state.range(0));
  const auto hw = static_cast<std::size_t>(state.range(1));
  const Tensor x = random_input(8, c, hw, 1);
  ConvParams p;
  p.weight = random_input(c, c, 3, 2);
  p.bias.assign(c, 0.0f);
  p.padding = 1;
  for (auto _ : state) benchmark::DoNotOptimize(conv2d(x, p));
  state.SetItemsProcessed(state.iterations() * std::int64_t(8 * c * c * 9 * hw * hw));
}
BENCHMARK(BM_Conv2d)->Args({16, 32})->Args({16, 16})->Args({64, 16});

// Args: channels, groups, k.
void BM_GroupedAdaptive(benchmark::State& state) {
  const auto c = static_cast<std::size_t>(state.range(0));
  const auto g = static_cast<std::size_t>(state.range(1));
  const int k = static_cast<int>(state.range(2));
  const Tensor x = random_input(8, c, 32, 3);
  const FilterField f = FilterField::uniform(8, g, k, 32, 32);
  for (auto _ : state) benchmark::DoNotOptimize(apply_grouped_adaptive(x, f));
  state.SetItemsProcessed(state.iterations() * std::int64_t(8 * c * 32 * 32));
}
BENCHMARK(BM_GroupedAdaptive)->Args({16, 1, 3})->Args({16, 8, 3})->Args({16, 8, 5});

// Args: channels, groups.
void BM_PredictFilters(benchmark::State& state) {
  const auto c = static_cast<std::size_t>(state.range(0));
  const auto g = static_cast<std::size_t>(state.range(1));
  std::mt19937_64 rng(4);
  Predictor p = Predictor::init({3, g, c}, rng);
  const Tensor x = random_input(8, c, 32, 5);
  for (auto _ : state) benchmark::DoNotOptimize(predict_filters(x, p));
}
BENCHMARK(BM_PredictFilters)->Args({16, 1})->Args({16, 8});

void BM_Iou(benchmark::State& state) {
  const auto side = static_cast<std::size_t>(state.range(0));
  std::mt19937_64 rng(6);
  std::bernoulli_distribution b(0.4);
  Mask a(side, side), m(side, side);
  for (std::size_t i = 0; i < side; ++i) {
    for (std::size_t j = 0; j < side; ++j) {
      a.set(i, j, b(rng));
      m.set(i, j, b(rng));
    }
  }
  for (auto _ : state) benchmark::DoNotOptimize(iou(a, m));
  state.SetItemsProcessed(state.iterations() * std::int64_t(side * side));
}
BENCHMARK(BM_Iou)->Arg(64)->Arg(512);

}  // namespace
}  // namespace adaptaa

BENCHMARK_MAIN();
