#ifndef ADAPTAA_OPTIM_HPP_
#define ADAPTAA_OPTIM_HPP_

#include <span>
#include <vector>

#include "adaptaa/tensor.hpp"

namespace adaptaa {

struct SgdOptions {
  double lr = 0.1;
  double momentum = 0.9;
  double weight_decay = 1e-4;
};

/// Heavy-ball SGD. The optimizer folds weight_decay * p into the gradient,
/// then v <- momentum * v + g and p <- p - lr * v.
template <typename T>
class BasicSgd {
 public:
  explicit BasicSgd(SgdOptions opts = {});

  const SgdOptions& options() const { return opts_; }
  void set_lr(double lr);

  /// params[i] is updated with grads[i]; the parameter list must keep the
  /// same order and shapes across calls.
  void step(std::span<BasicTensor<T>* const> params,
            std::span<const BasicTensor<T>* const> grads);

  const std::vector<BasicTensor<T>>& velocity() const { return velocity_; }

 private:
  SgdOptions opts_;
  std::vector<BasicTensor<T>> velocity_;
};
using Sgd = BasicSgd<float>;

}  // namespace adaptaa

#endif  // ADAPTAA_OPTIM_HPP_
