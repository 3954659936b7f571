#include "adaptaa/gradcheck.hpp"

#include <algorithm>
#include <cmath>

namespace adaptaa::ag {

double relative_error(double analytic, double numeric) {
  const double denom = std::max({std::abs(analytic), std::abs(numeric), 1e-8});
  return std::abs(analytic - numeric) / denom;
}

double GradCheckReport::max_rel_error() const {
  double m = 0.0;
  for (const auto& e : entries) m = std::max(m, e.max_rel_error);
  return m;
}

namespace {

double evaluate(const NamedParams& params, const LossBuilder& loss) {
  Tape<double> tape;
  std::vector<Var> leaves;
  for (const auto& p : params) leaves.push_back(tape.leaf(p.second, false));
  return tape.value(loss(tape, leaves))[0];
}

}  // namespace

GradCheckReport grad_check(const NamedParams& params, const LossBuilder& loss,
                           double step) {
  Tape<double> tape;
  std::vector<Var> leaves;
  for (const auto& p : params) leaves.push_back(tape.leaf(p.second, true));
  tape.backward(loss(tape, leaves));

  GradCheckReport report;
  report.step = step;
  NamedParams probe = params;
  for (std::size_t pi = 0; pi < params.size(); ++pi) {
    const Tensor64 analytic = tape.grad(leaves[pi]);
    GradCheckEntry entry{params[pi].first, 0.0, analytic.size()};
    auto& value = probe[pi].second;
    for (std::size_t i = 0; i < value.size(); ++i) {
      const double saved = value[i];
      value[i] = saved + step;
      const double up = evaluate(probe, loss);
      value[i] = saved - step;
      const double down = evaluate(probe, loss);
      value[i] = saved;
      const double numeric = (up - down) / (2.0 * step);
      entry.max_rel_error =
          std::max(entry.max_rel_error, relative_error(analytic[i], numeric));
    }
    report.entries.push_back(entry);
  }
  return report;
}

}  // namespace adaptaa::ag
