#ifndef ADAPTAA_AUTOGRAD_HPP_
#define ADAPTAA_AUTOGRAD_HPP_

#include <cstddef>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "adaptaa/ops.hpp"
#include "adaptaa/tensor.hpp"

namespace adaptaa::ag {

/// Handle to a value recorded on a Tape.
struct Var {
  std::size_t id = 0;
};

/// Straight-line reverse-mode tape. Nodes are appended in forward order;
/// backward() walks them strictly in reverse. One tape per thread.
template <typename T>
class Tape {
 public:
  using TensorT = BasicTensor<T>;
  /// Receives the output gradient and one accumulation buffer per input;
  /// buffers of inputs that do not require gradients are null.
  using BackwardFn =
      std::function<void(const TensorT& grad_out, std::span<TensorT*> grad_in)>;

  struct Node {
    std::string op;
    std::vector<std::size_t> inputs;
    TensorT value;
    TensorT grad;
    bool requires_grad = false;
    BackwardFn backward;
  };

  Var leaf(TensorT value, bool requires_grad = true);
  Var constant(TensorT value) { return leaf(std::move(value), false); }

  Var record(std::string op, TensorT value, std::vector<Var> inputs,
             BackwardFn backward);

  const TensorT& value(Var v) const { return nodes_.at(v.id).value; }
  /// Gradient accumulated by the last backward(); zeros when untouched.
  TensorT grad(Var v) const;
  bool requires_grad(Var v) const { return nodes_.at(v.id).requires_grad; }
  std::size_t size() const { return nodes_.size(); }
  const Node& node(Var v) const { return nodes_.at(v.id); }

  /// Seeds d(root)/d(root) = 1 and propagates; root must hold one element.
  void backward(Var root);

  /// Node ids visited by the most recent backward(), in visit order.
  const std::vector<std::size_t>& visit_order() const { return visited_; }

 private:
  std::vector<Node> nodes_;
  std::vector<std::size_t> visited_;
};

// Differentiable operations. Shapes follow the forward ops in ops.hpp.

template <typename T>
Var conv2d(Tape<T>& tape, Var x, Var weight, std::optional<Var> bias,
           int stride, int padding, PadMode pad_mode);

/// Training-mode batchnorm with (1, c, 1, 1) affine parameters; updates the
/// running statistics held in `state`.
template <typename T>
Var batchnorm_train(Tape<T>& tape, Var x, Var gamma, Var beta,
                    BasicBatchNorm<T>& state);

/// Inference-mode batchnorm reading `state`'s running statistics.
template <typename T>
Var batchnorm_eval(Tape<T>& tape, Var x, Var gamma, Var beta,
                   const BasicBatchNorm<T>& state);

template <typename T>
Var softmax_slices(Tape<T>& tape, Var x, std::size_t m);

/// Grouped adaptive filtering; `field` holds (n, g·k², h, w) filter taps and
/// receives gradients as well as `x`.
template <typename T>
Var adaptive_filter(Tape<T>& tape, Var x, Var field, std::size_t groups, int k);

template <typename T>
Var fixed_blur(Tape<T>& tape, Var x, const std::vector<T>& kernel);

template <typename T>
Var subsample(Tape<T>& tape, Var x, int stride);

template <typename T>
Var relu(Tape<T>& tape, Var x);

template <typename T>
Var max_pool(Tape<T>& tape, Var x, PoolWindow win);

template <typename T>
Var global_avg_pool(Tape<T>& tape, Var x);

/// (n, c, 1, 1) -> (n, c, h, w) by replication.
template <typename T>
Var broadcast_hw(Tape<T>& tape, Var x, std::size_t h, std::size_t w);

/// Mean softmax cross-entropy of (n, classes, 1, 1) logits.
template <typename T>
Var cross_entropy(Tape<T>& tape, Var logits, std::span<const int> labels);

/// sum(x ⊙ weights) as a 1-element tensor.
template <typename T>
Var weighted_sum(Tape<T>& tape, Var x, const BasicTensor<T>& weights);

/// mean((x - target)²) as a 1-element tensor.
template <typename T>
Var mean_squared_error(Tape<T>& tape, Var x, const BasicTensor<T>& target);

template <typename T>
Var sum(Tape<T>& tape, Var x);

}  // namespace adaptaa::ag

#endif  // ADAPTAA_AUTOGRAD_HPP_
