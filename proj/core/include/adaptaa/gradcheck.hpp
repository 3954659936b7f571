#ifndef ADAPTAA_GRADCHECK_HPP_
#define ADAPTAA_GRADCHECK_HPP_

#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "adaptaa/autograd.hpp"

namespace adaptaa::ag {

/// |a - f| / max(|a|, |f|, 1e-8).
double relative_error(double analytic, double numeric);

struct GradCheckEntry {
  std::string name;
  double max_rel_error = 0.0;
  std::size_t elements = 0;
};

struct GradCheckReport {
  double step = 0.0;
  std::vector<GradCheckEntry> entries;

  double max_rel_error() const;
};

using NamedParams = std::vector<std::pair<std::string, Tensor64>>;

/// Builds a scalar loss on a fresh tape from leaves holding `params`, in
/// order. Called once for the analytic pass and twice per element for the
/// central differences, so it must not carry state between calls.
using LossBuilder =
    std::function<Var(Tape<double>& tape, const std::vector<Var>& params)>;

GradCheckReport grad_check(const NamedParams& params, const LossBuilder& loss,
                           double step = 1e-3);

}  // namespace adaptaa::ag

#endif  // ADAPTAA_GRADCHECK_HPP_
