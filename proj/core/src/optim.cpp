#include "adaptaa/optim.hpp"

#include <stdexcept>

namespace adaptaa {

template <typename T>
BasicSgd<T>::BasicSgd(SgdOptions opts) : opts_(opts) {
  set_lr(opts.lr);
}

template <typename T>
void BasicSgd<T>::set_lr(double lr) {
  if (!(lr > 0.0)) throw std::invalid_argument("learning rate must be > 0");
  opts_.lr = lr;
}

template <typename T>
void BasicSgd<T>::step(std::span<BasicTensor<T>* const> params,
                       std::span<const BasicTensor<T>* const> grads) {
  if (params.size() != grads.size()) {
    throw ShapeError("sgd: " + std::to_string(params.size()) + " parameters but " +
                     std::to_string(grads.size()) + " gradients");
  }
  if (velocity_.empty()) {
    for (const auto* p : params) velocity_.emplace_back(p->shape());
  }
  if (velocity_.size() != params.size()) {
    throw ShapeError("sgd: parameter list changed between steps");
  }
  for (std::size_t i = 0; i < params.size(); ++i) {
    BasicTensor<T>& p = *params[i];
    const BasicTensor<T>& g = *grads[i];
    require_same_shape(p.shape(), g.shape(), "sgd gradient");
    require_same_shape(p.shape(), velocity_[i].shape(), "sgd velocity");
    auto& v = velocity_[i];
    for (std::size_t j = 0; j < p.size(); ++j) {
      const double d = double(g[j]) + opts_.weight_decay * double(p[j]);
      v[j] = static_cast<T>(opts_.momentum * double(v[j]) + d);
      p[j] = static_cast<T>(double(p[j]) - opts_.lr * double(v[j]));
    }
  }
}

template class BasicSgd<float>;
template class BasicSgd<double>;

}  // namespace adaptaa
