#include "adaptaa/autograd.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "adaptaa/adaptive.hpp"
#include "eigen_maps.hpp"
#include "padding.hpp"

namespace adaptaa::ag {

template <typename T>
Var Tape<T>::leaf(TensorT value, bool requires_grad) {
  Node n;
  n.op = "leaf";
  n.value = std::move(value);
  n.requires_grad = requires_grad;
  nodes_.push_back(std::move(n));
  return Var{nodes_.size() - 1};
}

template <typename T>
Var Tape<T>::record(std::string op, TensorT value, std::vector<Var> inputs,
                    BackwardFn backward) {
  Node n;
  n.op = std::move(op);
  n.value = std::move(value);
  for (Var v : inputs) {
    if (v.id >= nodes_.size()) throw std::out_of_range("tape: unknown input");
    n.inputs.push_back(v.id);
    n.requires_grad = n.requires_grad || nodes_[v.id].requires_grad;
  }
  if (n.requires_grad) n.backward = std::move(backward);
  nodes_.push_back(std::move(n));
  return Var{nodes_.size() - 1};
}

template <typename T>
BasicTensor<T> Tape<T>::grad(Var v) const {
  const Node& n = nodes_.at(v.id);
  if (n.grad.empty()) return TensorT(n.value.shape());
  return n.grad;
}

template <typename T>
void Tape<T>::backward(Var root) {
  Node& r = nodes_.at(root.id);
  if (r.value.size() != 1) {
    throw ShapeError("backward needs a scalar root, got " + r.value.shape().str());
  }
  for (auto& n : nodes_) n.grad = TensorT();
  visited_.clear();
  r.grad = TensorT(r.value.shape(), T(1));
  std::vector<TensorT*> sinks;
  for (std::size_t i = root.id + 1; i-- > 0;) {
    Node& n = nodes_[i];
    if (!n.backward || n.grad.empty()) continue;
    visited_.push_back(i);
    sinks.clear();
    for (std::size_t in : n.inputs) {
      Node& src = nodes_[in];
      if (!src.requires_grad) {
        sinks.push_back(nullptr);
        continue;
      }
      if (src.grad.empty()) src.grad = TensorT(src.value.shape());
      sinks.push_back(&src.grad);
    }
    n.backward(n.grad, sinks);
  }
}

namespace {

template <typename T>
void require_scalar_like(const BasicTensor<T>& t, std::size_t c,
                         const char* what) {
  if (t.shape() != Shape{1, c, 1, 1}) {
    throw ShapeError(std::string(what) + ": expected (1, " + std::to_string(c) +
                     ", 1, 1), got " + t.shape().str());
  }
}

}  // namespace

template <typename T>
Var conv2d(Tape<T>& tape, Var x, Var weight, std::optional<Var> bias,
           int stride, int padding, PadMode pad_mode) {
  BasicConvParams<T> p{tape.value(weight), {}, stride, padding, pad_mode};
  if (bias) {
    require_scalar_like(tape.value(*bias), p.out_channels(), "conv2d bias");
    const auto& b = tape.value(*bias).vec();
    p.bias.assign(b.begin(), b.end());
  }
  auto out = adaptaa::conv2d(tape.value(x), p);
  std::vector<Var> inputs = {x, weight};
  if (bias) inputs.push_back(*bias);
  Tape<T>* tp = &tape;
  return tape.record(
      "conv2d", std::move(out), inputs,
      [tp, x, weight, stride, padding, pad_mode](const BasicTensor<T>& gout,
                                                  std::span<BasicTensor<T>*> gin) {
        const auto& xv = tp->value(x);
        const auto& wv = tp->value(weight);
        const std::size_t k = wv.h();
        const std::size_t ph = xv.h() + 2 * static_cast<std::size_t>(padding);
        const std::size_t pw = xv.w() + 2 * static_cast<std::size_t>(padding);
        const std::size_t oh = gout.h();
        const std::size_t ow = gout.w();
        const auto s = static_cast<std::size_t>(stride);
        const auto rows = static_cast<Eigen::Index>(xv.c() * k * k);
        const auto cols = static_cast<Eigen::Index>(oh * ow);
        const auto oc = static_cast<Eigen::Index>(wv.n());
        const ConstMatrixMap<T> w(wv.data().data(), oc, rows);
        RowMatrix<T> gw = RowMatrix<T>::Zero(gin[1] ? oc : 0, gin[1] ? rows : 0);
        std::vector<T> padded;
        std::vector<T> col;
        std::vector<T> gpad;
        for (std::size_t in = 0; in < xv.n(); ++in) {
          const ConstMatrixMap<T> g(gout.plane(in, 0).data(), oc, cols);
          if (gin.size() > 2 && gin[2]) {
            for (Eigen::Index o = 0; o < oc; ++o) {
              (*gin[2])[static_cast<std::size_t>(o)] += g.row(o).sum();
            }
          }
          if (gin[1]) {
            detail::pad_image(xv, in, padding, pad_mode, padded);
            detail::im2col(padded, xv.c(), ph, pw, k, s, oh, ow, col);
            gw.noalias() += g * ConstMatrixMap<T>(col.data(), rows, cols).transpose();
          }
          if (gin[0]) {
            col.resize(static_cast<std::size_t>(rows * cols));
            MatrixMap<T>(col.data(), rows, cols).noalias() = w.transpose() * g;
            gpad.assign(xv.c() * ph * pw, T(0));
            detail::col2im_add(col, xv.c(), ph, pw, k, s, oh, ow, gpad);
            detail::fold_padded_grad(gpad, in, padding, pad_mode, *gin[0]);
          }
        }
        if (gin[1]) {
          MatrixMap<T>(gin[1]->data().data(), oc, rows) += gw;
        }
      });
}

template <typename T>
Var batchnorm_train(Tape<T>& tape, Var x, Var gamma, Var beta,
                    BasicBatchNorm<T>& state) {
  const auto& xv = tape.value(x);
  const std::size_t c = xv.c();
  state.validate(c);
  require_scalar_like(tape.value(gamma), c, "batchnorm gamma");
  require_scalar_like(tape.value(beta), c, "batchnorm beta");
  const std::size_t count = xv.n() * xv.shape().plane();
  if (count == 0) throw ShapeError("batchnorm on empty input");

  BasicTensor<T> xhat(xv.shape());
  std::vector<double> inv_std(c);
  BasicTensor<T> out(xv.shape());
  for (std::size_t ic = 0; ic < c; ++ic) {
    double mean = 0.0;
    for (std::size_t in = 0; in < xv.n(); ++in) {
      for (T v : xv.plane(in, ic)) mean += v;
    }
    mean /= double(count);
    double var = 0.0;
    for (std::size_t in = 0; in < xv.n(); ++in) {
      for (T v : xv.plane(in, ic)) var += (v - mean) * (v - mean);
    }
    var /= double(count);
    inv_std[ic] = 1.0 / std::sqrt(var + state.eps);
    const double gm = tape.value(gamma)[ic];
    const double bt = tape.value(beta)[ic];
    for (std::size_t in = 0; in < xv.n(); ++in) {
      const auto src = xv.plane(in, ic);
      auto xh = xhat.plane(in, ic);
      auto dst = out.plane(in, ic);
      for (std::size_t i = 0; i < src.size(); ++i) {
        const double v = (src[i] - mean) * inv_std[ic];
        xh[i] = static_cast<T>(v);
        dst[i] = static_cast<T>(gm * v + bt);
      }
    }
    const double unbiased = count > 1 ? var * double(count) / double(count - 1) : var;
    state.running_mean[ic] = static_cast<T>((1.0 - state.momentum) * state.running_mean[ic] +
                                            state.momentum * mean);
    state.running_var[ic] = static_cast<T>((1.0 - state.momentum) * state.running_var[ic] +
                                           state.momentum * unbiased);
  }
  Tape<T>* tp = &tape;
  return tape.record(
      "batchnorm_train", std::move(out), {x, gamma, beta},
      [tp, gamma, xhat = std::move(xhat), inv_std = std::move(inv_std), count](
          const BasicTensor<T>& gout, std::span<BasicTensor<T>*> gin) {
        const auto& gm = tp->value(gamma);
        for (std::size_t ic = 0; ic < gout.c(); ++ic) {
          double sum_g = 0.0;
          double sum_gx = 0.0;
          for (std::size_t in = 0; in < gout.n(); ++in) {
            const auto g = gout.plane(in, ic);
            const auto xh = xhat.plane(in, ic);
            for (std::size_t i = 0; i < g.size(); ++i) {
              sum_g += g[i];
              sum_gx += double(g[i]) * xh[i];
            }
          }
          if (gin[1]) (*gin[1])[ic] += static_cast<T>(sum_gx);
          if (gin[2]) (*gin[2])[ic] += static_cast<T>(sum_g);
          if (!gin[0]) continue;
          const double scale = double(gm[ic]) * inv_std[ic] / double(count);
          for (std::size_t in = 0; in < gout.n(); ++in) {
            const auto g = gout.plane(in, ic);
            const auto xh = xhat.plane(in, ic);
            auto dst = gin[0]->plane(in, ic);
            for (std::size_t i = 0; i < g.size(); ++i) {
              dst[i] += static_cast<T>(
                  scale * (double(count) * g[i] - sum_g - xh[i] * sum_gx));
            }
          }
        }
      });
}

template <typename T>
Var batchnorm_eval(Tape<T>& tape, Var x, Var gamma, Var beta,
                   const BasicBatchNorm<T>& state) {
  const auto& xv = tape.value(x);
  const std::size_t c = xv.c();
  state.validate(c);
  require_scalar_like(tape.value(gamma), c, "batchnorm gamma");
  require_scalar_like(tape.value(beta), c, "batchnorm beta");
  std::vector<double> inv_std(c), mean(c);
  for (std::size_t ic = 0; ic < c; ++ic) {
    inv_std[ic] = 1.0 / std::sqrt(double(state.running_var[ic]) + state.eps);
    mean[ic] = state.running_mean[ic];
  }
  BasicTensor<T> out(xv.shape());
  for (std::size_t in = 0; in < xv.n(); ++in) {
    for (std::size_t ic = 0; ic < c; ++ic) {
      const auto src = xv.plane(in, ic);
      auto dst = out.plane(in, ic);
      const double gm = tape.value(gamma)[ic];
      const double bt = tape.value(beta)[ic];
      for (std::size_t i = 0; i < src.size(); ++i) {
        dst[i] = static_cast<T>(gm * (src[i] - mean[ic]) * inv_std[ic] + bt);
      }
    }
  }
  Tape<T>* tp = &tape;
  return tape.record(
      "batchnorm_eval", std::move(out), {x, gamma, beta},
      [tp, x, gamma, inv_std, mean](const BasicTensor<T>& gout,
                                    std::span<BasicTensor<T>*> gin) {
        const auto& xv = tp->value(x);
        const auto& gm = tp->value(gamma);
        for (std::size_t ic = 0; ic < gout.c(); ++ic) {
          double sum_g = 0.0;
          double sum_gx = 0.0;
          for (std::size_t in = 0; in < gout.n(); ++in) {
            const auto g = gout.plane(in, ic);
            const auto src = xv.plane(in, ic);
            for (std::size_t i = 0; i < g.size(); ++i) {
              sum_g += g[i];
              sum_gx += double(g[i]) * (src[i] - mean[ic]) * inv_std[ic];
              if (gin[0]) gin[0]->plane(in, ic)[i] += static_cast<T>(g[i] * gm[ic] * inv_std[ic]);
            }
          }
          if (gin[1]) (*gin[1])[ic] += static_cast<T>(sum_gx);
          if (gin[2]) (*gin[2])[ic] += static_cast<T>(sum_g);
        }
      });
}

template <typename T>
Var softmax_slices(Tape<T>& tape, Var x, std::size_t m) {
  auto out = softmax_over_axis(tape.value(x), m);
  Tape<T>* tp = &tape;
  const auto id = tape.size();
  return tape.record(
      "softmax", std::move(out), {x},
      [tp, id, m](const BasicTensor<T>& gout, std::span<BasicTensor<T>*> gin) {
        const auto& s = tp->value(Var{id});
        const std::size_t plane = s.shape().plane();
        for (std::size_t in = 0; in < s.n(); ++in) {
          for (std::size_t sl = 0; sl < s.c() / m; ++sl) {
            for (std::size_t pix = 0; pix < plane; ++pix) {
              const std::size_t base = s.offset(in, sl * m, 0, 0) + pix;
              double dot = 0.0;
              for (std::size_t t = 0; t < m; ++t) {
                dot += double(gout[base + t * plane]) * s[base + t * plane];
              }
              for (std::size_t t = 0; t < m; ++t) {
                const std::size_t o = base + t * plane;
                (*gin[0])[o] += static_cast<T>(s[o] * (gout[o] - dot));
              }
            }
          }
        }
      });
}

namespace {

std::vector<std::size_t> window_table(std::size_t extent, int k) {
  const int r = k / 2;
  std::vector<std::size_t> table(extent * static_cast<std::size_t>(k));
  for (std::size_t i = 0; i < extent; ++i) {
    for (int d = -r; d <= r; ++d) {
      table[i * k + (d + r)] = static_cast<std::size_t>(reflect_index(
          static_cast<std::ptrdiff_t>(i) + d, static_cast<std::ptrdiff_t>(extent)));
    }
  }
  return table;
}

}  // namespace

template <typename T>
Var adaptive_filter(Tape<T>& tape, Var x, Var field, std::size_t groups, int k) {
  const auto& xv = tape.value(x);
  BasicFilterField<T> w(groups, k, tape.value(field));
  auto out = apply_grouped_adaptive(xv, w);
  Tape<T>* tp = &tape;
  return tape.record(
      "adaptive_filter", std::move(out), {x, field},
      [tp, x, field, groups, k](const BasicTensor<T>& gout,
                                std::span<BasicTensor<T>*> gin) {
        const auto& xv = tp->value(x);
        const auto& wv = tp->value(field);
        const auto ku = static_cast<std::size_t>(k);
        const std::size_t taps = ku * ku;
        const std::size_t per_group = xv.c() / groups;
        const auto rows = window_table(xv.h(), k);
        const auto cols = window_table(xv.w(), k);
        for (std::size_t in = 0; in < xv.n(); ++in) {
          for (std::size_t c = 0; c < xv.c(); ++c) {
            const std::size_t g = c / per_group;
            const auto src = xv.plane(in, c);
            const auto go = gout.plane(in, c);
            for (std::size_t i = 0; i < xv.h(); ++i) {
              for (std::size_t j = 0; j < xv.w(); ++j) {
                const T gv = go[i * xv.w() + j];
                for (std::size_t dy = 0; dy < ku; ++dy) {
                  const std::size_t row = rows[i * ku + dy] * xv.w();
                  for (std::size_t dx = 0; dx < ku; ++dx) {
                    const std::size_t tap = dy * ku + dx;
                    const std::size_t sidx = row + cols[j * ku + dx];
                    if (gin[1]) (*gin[1])(in, g * taps + tap, i, j) += gv * src[sidx];
                    if (gin[0]) gin[0]->plane(in, c)[sidx] += gv * wv(in, g * taps + tap, i, j);
                  }
                }
              }
            }
          }
        }
      });
}

template <typename T>
Var fixed_blur(Tape<T>& tape, Var x, const std::vector<T>& kernel) {
  auto out = apply_fixed_blur(tape.value(x), kernel);
  Tape<T>* tp = &tape;
  return tape.record(
      "fixed_blur", std::move(out), {x},
      [tp, x, kernel](const BasicTensor<T>& gout, std::span<BasicTensor<T>*> gin) {
        const auto& xv = tp->value(x);
        const int k = static_cast<int>(std::lround(std::sqrt(double(kernel.size()))));
        const auto ku = static_cast<std::size_t>(k);
        const auto rows = window_table(xv.h(), k);
        const auto cols = window_table(xv.w(), k);
        for (std::size_t in = 0; in < xv.n(); ++in) {
          for (std::size_t c = 0; c < xv.c(); ++c) {
            const auto go = gout.plane(in, c);
            auto gx = gin[0]->plane(in, c);
            for (std::size_t i = 0; i < xv.h(); ++i) {
              for (std::size_t j = 0; j < xv.w(); ++j) {
                const T gv = go[i * xv.w() + j];
                for (std::size_t dy = 0; dy < ku; ++dy) {
                  const std::size_t row = rows[i * ku + dy] * xv.w();
                  for (std::size_t dx = 0; dx < ku; ++dx) {
                    gx[row + cols[j * ku + dx]] += gv * kernel[dy * ku + dx];
                  }
                }
              }
            }
          }
        }
      });
}

template <typename T>
Var subsample(Tape<T>& tape, Var x, int stride) {
  auto out = strided_subsample(tape.value(x), stride);
  return tape.record(
      "subsample", std::move(out), {x},
      [stride](const BasicTensor<T>& gout, std::span<BasicTensor<T>*> gin) {
        const auto s = static_cast<std::size_t>(stride);
        for (std::size_t in = 0; in < gout.n(); ++in) {
          for (std::size_t c = 0; c < gout.c(); ++c) {
            for (std::size_t i = 0; i < gout.h(); ++i) {
              for (std::size_t j = 0; j < gout.w(); ++j) {
                (*gin[0])(in, c, i * s, j * s) += gout(in, c, i, j);
              }
            }
          }
        }
      });
}

template <typename T>
Var relu(Tape<T>& tape, Var x) {
  auto out = adaptaa::relu(tape.value(x));
  Tape<T>* tp = &tape;
  return tape.record("relu", std::move(out), {x},
                     [tp, x](const BasicTensor<T>& gout,
                             std::span<BasicTensor<T>*> gin) {
                       const auto& xv = tp->value(x);
                       for (std::size_t i = 0; i < xv.size(); ++i) {
                         if (xv[i] > T(0)) (*gin[0])[i] += gout[i];
                       }
                     });
}

template <typename T>
Var max_pool(Tape<T>& tape, Var x, PoolWindow win) {
  const auto& xv = tape.value(x);
  auto out = max_pool2d(xv, win);
  // Gradient routes to the first maximal element of each window.
  std::vector<std::size_t> argmax(out.size());
  for (std::size_t in = 0; in < out.n(); ++in) {
    for (std::size_t c = 0; c < out.c(); ++c) {
      for (std::size_t oy = 0; oy < out.h(); ++oy) {
        for (std::size_t ox = 0; ox < out.w(); ++ox) {
          const std::size_t y0 = oy * win.sh;
          const std::size_t x0 = ox * win.sw;
          std::size_t best = xv.offset(in, c, y0, x0);
          for (int dy = 0; dy < win.kh; ++dy) {
            for (int dx = 0; dx < win.kw; ++dx) {
              const std::size_t o = xv.offset(in, c, y0 + dy, x0 + dx);
              if (xv[o] > xv[best]) best = o;
            }
          }
          argmax[out.offset(in, c, oy, ox)] = best;
        }
      }
    }
  }
  return tape.record("max_pool", std::move(out), {x},
                     [argmax = std::move(argmax)](const BasicTensor<T>& gout,
                                                  std::span<BasicTensor<T>*> gin) {
                       for (std::size_t i = 0; i < gout.size(); ++i) {
                         (*gin[0])[argmax[i]] += gout[i];
                       }
                     });
}

template <typename T>
Var global_avg_pool(Tape<T>& tape, Var x) {
  const Shape in_shape = tape.value(x).shape();
  auto out = adaptaa::global_avg_pool(tape.value(x));
  return tape.record("global_avg_pool", std::move(out), {x},
                     [in_shape](const BasicTensor<T>& gout,
                                std::span<BasicTensor<T>*> gin) {
                       const T scale = T(1) / T(in_shape.plane());
                       for (std::size_t in = 0; in < in_shape.n; ++in) {
                         for (std::size_t c = 0; c < in_shape.c; ++c) {
                           const T g = gout(in, c, 0, 0) * scale;
                           for (auto& v : gin[0]->plane(in, c)) v += g;
                         }
                       }
                     });
}

template <typename T>
Var broadcast_hw(Tape<T>& tape, Var x, std::size_t h, std::size_t w) {
  const auto& xv = tape.value(x);
  if (xv.h() != 1 || xv.w() != 1) {
    throw ShapeError("broadcast_hw expects (n, c, 1, 1), got " + xv.shape().str());
  }
  BasicTensor<T> out(Shape{xv.n(), xv.c(), h, w});
  for (std::size_t in = 0; in < xv.n(); ++in) {
    for (std::size_t c = 0; c < xv.c(); ++c) {
      for (auto& v : out.plane(in, c)) v = xv(in, c, 0, 0);
    }
  }
  return tape.record("broadcast_hw", std::move(out), {x},
                     [](const BasicTensor<T>& gout, std::span<BasicTensor<T>*> gin) {
                       for (std::size_t in = 0; in < gout.n(); ++in) {
                         for (std::size_t c = 0; c < gout.c(); ++c) {
                           double s = 0.0;
                           for (T v : gout.plane(in, c)) s += v;
                           (*gin[0])(in, c, 0, 0) += static_cast<T>(s);
                         }
                       }
                     });
}

template <typename T>
Var cross_entropy(Tape<T>& tape, Var logits, std::span<const int> labels) {
  const auto& lv = tape.value(logits);
  if (lv.h() != 1 || lv.w() != 1 || labels.size() != lv.n() || lv.n() == 0) {
    throw ShapeError("cross_entropy expects (n, classes, 1, 1) logits and n labels");
  }
  const auto probs = softmax_over_axis(lv, lv.c());
  double loss = 0.0;
  for (std::size_t in = 0; in < lv.n(); ++in) {
    const int y = labels[in];
    if (y < 0 || static_cast<std::size_t>(y) >= lv.c()) {
      throw std::out_of_range("cross_entropy: label out of range");
    }
    loss -= std::log(std::max(double(probs(in, y, 0, 0)),
                              double(std::numeric_limits<T>::min())));
  }
  loss /= double(lv.n());
  std::vector<int> y(labels.begin(), labels.end());
  return tape.record(
      "cross_entropy", BasicTensor<T>(Shape{1, 1, 1, 1}, static_cast<T>(loss)),
      {logits},
      [probs, y = std::move(y)](const BasicTensor<T>& gout,
                                std::span<BasicTensor<T>*> gin) {
        const T scale = gout[0] / T(probs.n());
        for (std::size_t in = 0; in < probs.n(); ++in) {
          for (std::size_t c = 0; c < probs.c(); ++c) {
            const T target = static_cast<int>(c) == y[in] ? T(1) : T(0);
            (*gin[0])(in, c, 0, 0) += scale * (probs(in, c, 0, 0) - target);
          }
        }
      });
}

template <typename T>
Var weighted_sum(Tape<T>& tape, Var x, const BasicTensor<T>& weights) {
  const auto& xv = tape.value(x);
  require_same_shape(xv.shape(), weights.shape(), "weighted_sum");
  double s = 0.0;
  for (std::size_t i = 0; i < xv.size(); ++i) s += double(xv[i]) * weights[i];
  return tape.record("weighted_sum",
                     BasicTensor<T>(Shape{1, 1, 1, 1}, static_cast<T>(s)), {x},
                     [weights](const BasicTensor<T>& gout,
                               std::span<BasicTensor<T>*> gin) {
                       for (std::size_t i = 0; i < weights.size(); ++i) {
                         (*gin[0])[i] += gout[0] * weights[i];
                       }
                     });
}

template <typename T>
Var mean_squared_error(Tape<T>& tape, Var x, const BasicTensor<T>& target) {
  const auto& xv = tape.value(x);
  require_same_shape(xv.shape(), target.shape(), "mean_squared_error");
  if (xv.size() == 0) throw ShapeError("mean_squared_error on empty input");
  double s = 0.0;
  for (std::size_t i = 0; i < xv.size(); ++i) {
    const double d = double(xv[i]) - target[i];
    s += d * d;
  }
  const double n = double(xv.size());
  Tape<T>* tp = &tape;
  return tape.record("mean_squared_error",
                     BasicTensor<T>(Shape{1, 1, 1, 1}, static_cast<T>(s / n)), {x},
                     [tp, x, target, n](const BasicTensor<T>& gout,
                                        std::span<BasicTensor<T>*> gin) {
                       const auto& xv = tp->value(x);
                       const double scale = 2.0 * double(gout[0]) / n;
                       for (std::size_t i = 0; i < xv.size(); ++i) {
                         (*gin[0])[i] += static_cast<T>(scale * (double(xv[i]) - target[i]));
                       }
                     });
}

template <typename T>
Var sum(Tape<T>& tape, Var x) {
  const auto& xv = tape.value(x);
  double s = 0.0;
  for (T v : xv.data()) s += v;
  return tape.record("sum", BasicTensor<T>(Shape{1, 1, 1, 1}, static_cast<T>(s)),
                     {x},
                     [](const BasicTensor<T>& gout, std::span<BasicTensor<T>*> gin) {
                       for (auto& v : gin[0]->data()) v += gout[0];
                     });
}

#define ADAPTAA_INSTANTIATE_AG(T)                                                 \
  template class Tape<T>;                                                         \
  template Var conv2d(Tape<T>&, Var, Var, std::optional<Var>, int, int, PadMode); \
  template Var batchnorm_train(Tape<T>&, Var, Var, Var, BasicBatchNorm<T>&);      \
  template Var batchnorm_eval(Tape<T>&, Var, Var, Var, const BasicBatchNorm<T>&); \
  template Var softmax_slices(Tape<T>&, Var, std::size_t);                        \
  template Var adaptive_filter(Tape<T>&, Var, Var, std::size_t, int);             \
  template Var fixed_blur(Tape<T>&, Var, const std::vector<T>&);                  \
  template Var subsample(Tape<T>&, Var, int);                                     \
  template Var relu(Tape<T>&, Var);                                               \
  template Var max_pool(Tape<T>&, Var, PoolWindow);                               \
  template Var global_avg_pool(Tape<T>&, Var);                                    \
  template Var broadcast_hw(Tape<T>&, Var, std::size_t, std::size_t);             \
  template Var cross_entropy(Tape<T>&, Var, std::span<const int>);                \
  template Var weighted_sum(Tape<T>&, Var, const BasicTensor<T>&);                \
  template Var mean_squared_error(Tape<T>&, Var, const BasicTensor<T>&);          \
  template Var sum(Tape<T>&, Var);

ADAPTAA_INSTANTIATE_AG(float)
ADAPTAA_INSTANTIATE_AG(double)

}  // namespace adaptaa::ag
