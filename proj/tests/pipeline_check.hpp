// Gradient check of the full filtering pipeline, shared by the autograd
// tests and the acceptance runner.
#ifndef ADAPTAA_TESTS_PIPELINE_CHECK_HPP_
#define ADAPTAA_TESTS_PIPELINE_CHECK_HPP_

#include <cstdint>
#include <random>

#include "adaptaa/autograd.hpp"
#include "adaptaa/gradcheck.hpp"
#include "oracles.hpp"

namespace oracle {

namespace ag = adaptaa::ag;
using adaptaa::BasicBatchNorm;
using adaptaa::PadMode;

inline constexpr double kStep = 1e-3;

// Random readout weights turn any tensor into a scalar loss with a
// non-trivial gradient everywhere.
inline ag::Var readout(ag::Tape<double>& tape, ag::Var x, std::uint64_t seed) {
  std::mt19937_64 rng(seed ^ 0x5eed);
  return ag::weighted_sum(tape, x, oracle::random_tensor(tape.value(x).shape(), rng));
}

// Predictor conv → batchnorm (train) → softmax → grouped filter → subsample,
// read out by fixed weights. Batchnorm makes the loss scale invariant in
// each conv filter, so its curvature grows as the weights shrink; unit-scale
// weights keep the h = 1e-3 truncation error well below the tolerance.
inline ag::GradCheckReport pipeline_check(std::uint64_t seed, std::size_t n, std::size_t c,
                                          std::size_t hw, std::size_t groups, int k) {
  std::mt19937_64 rng(seed);
  const std::size_t taps = std::size_t(k * k);
  ag::NamedParams params{
      {"x", oracle::random_tensor(Shape{n, c, hw, hw}, rng)},
      {"conv.weight", oracle::random_tensor(Shape{groups * taps, c, 3, 3}, rng)},
      {"conv.bias", oracle::random_tensor(Shape{1, groups * taps, 1, 1}, rng)},
      {"bn.gamma", oracle::random_tensor(Shape{1, groups * taps, 1, 1}, rng, 0.5, 1.5)},
      {"bn.beta", oracle::random_tensor(Shape{1, groups * taps, 1, 1}, rng)},
  };
  auto loss = [&](ag::Tape<double>& tape, const std::vector<ag::Var>& p) {
    BasicBatchNorm<double> state = BasicBatchNorm<double>::identity(groups * taps);
    ag::Var h = ag::conv2d(tape, p[0], p[1], p[2], 1, 1, PadMode::kReflect);
    h = ag::batchnorm_train(tape, h, p[3], p[4], state);
    ag::Var field = ag::softmax_slices(tape, h, taps);
    ag::Var y = ag::adaptive_filter(tape, p[0], field, groups, k);
    return readout(tape, ag::subsample(tape, y, 2), seed);
  };
  return ag::grad_check(params, loss, kStep);
}

}  // namespace oracle

#endif  // ADAPTAA_TESTS_PIPELINE_CHECK_HPP_
