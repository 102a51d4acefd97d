#pragma once

// Reverse-mode automatic differentiation over Tensor values.
//
// Ops build a dynamic DAG eagerly: each call computes the forward value,
// records parent edges, and stores a closure that routes the node's gradient
// into its parents' gradients. backward() seeds a scalar root with 1 and
// walks the graph once in reverse topological order, so every node's
// gradient is complete before it is propagated. Ops are batched (one node
// per layer-step, not per element), keeping graphs small.
//
// Gradients accumulate with +=: parameters persist across batches and the
// trainer zeroes them explicitly between steps.

#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <unordered_set>
#include <utility>
#include <vector>

#include "lobbench/tensor.hpp"

namespace lobbench::ad {

struct Node;
using Var = std::shared_ptr<Node>;

struct Node {
  Tensor value;
  Tensor grad;  // allocated on first use; same shape as value
  bool requires_grad = false;
  std::vector<Var> parents;
  std::function<void()> backward_fn;  // captures Node* self (owned by this node)
  const char* op = "";
  std::string name;  // parameters only

  void ensure_grad() {
    if (grad.size() != value.size()) grad = Tensor::zeros(value.shape());
  }
};

inline Var constant(Tensor value) {
  auto n = std::make_shared<Node>();
  n->value = std::move(value);
  n->op = "constant";
  return n;
}

inline Var parameter(Tensor value, std::string name) {
  check_finite(value, "parameter");
  auto n = std::make_shared<Node>();
  n->value = std::move(value);
  n->requires_grad = true;
  n->op = "parameter";
  n->name = std::move(name);
  n->ensure_grad();
  return n;
}

namespace detail {

inline Var make_op(Tensor value, std::vector<Var> parents, const char* op) {
  auto n = std::make_shared<Node>();
  n->value = std::move(value);
  n->parents = std::move(parents);
  n->op = op;
  for (const auto& p : n->parents) {
    if (p->requires_grad) {
      n->requires_grad = true;
      break;
    }
  }
  check_finite(n->value, op);
  return n;
}

inline void accumulate_possible(Node* parent, const std::function<void(Tensor&)>& add) {
  if (!parent->requires_grad) return;
  parent->ensure_grad();
  add(parent->grad);
}

}  // namespace detail

// ---------------------------------------------------------------------------
// backward
// ---------------------------------------------------------------------------

inline void backward(const Var& root) {
  if (root->value.size() != 1) throw ConfigError("backward: root must be scalar");
  if (!root->requires_grad) return;

  // Iterative post-order DFS over grad-requiring nodes; order is a function
  // of graph structure only, so replays are bit-identical.
  std::vector<Node*> order;
  std::unordered_set<Node*> seen;
  std::vector<std::pair<Node*, std::size_t>> stack;
  stack.emplace_back(root.get(), 0);
  seen.insert(root.get());
  while (!stack.empty()) {
    auto& [node, next] = stack.back();
    if (next < node->parents.size()) {
      Node* p = node->parents[next++].get();
      if (p->requires_grad && seen.insert(p).second) stack.emplace_back(p, 0);
    } else {
      order.push_back(node);
      stack.pop_back();
    }
  }

  root->ensure_grad();
  root->grad[0] = 1.0;
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    (*it)->ensure_grad();
    if ((*it)->backward_fn) (*it)->backward_fn();
  }
}

inline void zero_grad(const std::vector<Var>& params) {
  for (const auto& p : params) {
    p->ensure_grad();
    p->grad.fill(0.0);
  }
}

// ---------------------------------------------------------------------------
// Elementwise and linear ops
// ---------------------------------------------------------------------------

inline Var add(const Var& a, const Var& b) {
  if (!a->value.same_shape(b->value)) throw ConfigError("add: shape mismatch");
  Tensor out = a->value;
  out.vec() += b->value.vec();
  Var n = detail::make_op(std::move(out), {a, b}, "add");
  Node* self = n.get();
  n->backward_fn = [self, a = a.get(), b = b.get()] {
    detail::accumulate_possible(a, [&](Tensor& g) { g.vec() += self->grad.vec(); });
    detail::accumulate_possible(b, [&](Tensor& g) { g.vec() += self->grad.vec(); });
  };
  return n;
}

// a: [n, m], b: vector of m values broadcast over rows.
inline Var add_rowvec(const Var& a, const Var& b) {
  if (a->value.rank() != 2 || b->value.size() != a->value.dim(1))
    throw ConfigError("add_rowvec: shape mismatch");
  Tensor out = a->value;
  out.mat().rowwise() += b->value.vec().transpose();
  Var n = detail::make_op(std::move(out), {a, b}, "add_rowvec");
  Node* self = n.get();
  n->backward_fn = [self, a = a.get(), b = b.get()] {
    const auto g = self->grad.mat(self->value.dim(0), self->value.dim(1));
    detail::accumulate_possible(a, [&](Tensor& ga) { ga.vec() += self->grad.vec(); });
    detail::accumulate_possible(
        b, [&](Tensor& gb) { gb.vec() += g.colwise().sum().transpose(); });
  };
  return n;
}

inline Var mul(const Var& a, const Var& b) {
  if (!a->value.same_shape(b->value)) throw ConfigError("mul: shape mismatch");
  Tensor out = a->value;
  out.vec().array() *= b->value.vec().array();
  Var n = detail::make_op(std::move(out), {a, b}, "mul");
  Node* self = n.get();
  n->backward_fn = [self, a = a.get(), b = b.get()] {
    detail::accumulate_possible(a, [&](Tensor& g) {
      g.vec().array() += self->grad.vec().array() * b->value.vec().array();
    });
    detail::accumulate_possible(b, [&](Tensor& g) {
      g.vec().array() += self->grad.vec().array() * a->value.vec().array();
    });
  };
  return n;
}

inline Var scale(const Var& a, double s) {
  Tensor out = a->value;
  out.vec() *= s;
  Var n = detail::make_op(std::move(out), {a}, "scale");
  Node* self = n.get();
  n->backward_fn = [self, a = a.get(), s] {
    detail::accumulate_possible(a, [&](Tensor& g) { g.vec() += s * self->grad.vec(); });
  };
  return n;
}

// a: [n, k] x b: [k, m] -> [n, m]
inline Var matmul(const Var& a, const Var& b) {
  if (a->value.rank() != 2 || b->value.rank() != 2 || a->value.dim(1) != b->value.dim(0))
    throw ConfigError("matmul: shape mismatch");
  Tensor out({a->value.dim(0), b->value.dim(1)});
  out.mat().noalias() = a->value.mat() * b->value.mat();
  Var n = detail::make_op(std::move(out), {a, b}, "matmul");
  Node* self = n.get();
  n->backward_fn = [self, a = a.get(), b = b.get()] {
    const auto g = self->grad.mat(self->value.dim(0), self->value.dim(1));
    detail::accumulate_possible(
        a, [&](Tensor& ga) { ga.mat().noalias() += g * b->value.mat().transpose(); });
    detail::accumulate_possible(
        b, [&](Tensor& gb) { gb.mat().noalias() += a->value.mat().transpose() * g; });
  };
  return n;
}

// x: [N, T*D] viewed as (N*T) x D, times W: [D, H] -> [N, T*H].
// Shared projection applied at every sequence step.
inline Var seq_linear(const Var& x, const Var& w, std::int64_t steps) {
  if (x->value.rank() != 2 || w->value.rank() != 2) throw ConfigError("seq_linear: rank");
  const std::int64_t n = x->value.dim(0);
  const std::int64_t d = w->value.dim(0);
  const std::int64_t h = w->value.dim(1);
  if (x->value.dim(1) != steps * d) throw ConfigError("seq_linear: geometry mismatch");
  Tensor out({n, steps * h});
  out.mat(n * steps, h).noalias() = x->value.mat(n * steps, d) * w->value.mat();
  Var node = detail::make_op(std::move(out), {x, w}, "seq_linear");
  Node* self = node.get();
  node->backward_fn = [self, x = x.get(), w = w.get(), n, d, h, steps] {
    const auto g = self->grad.mat(n * steps, h);
    detail::accumulate_possible(x, [&](Tensor& gx) {
      gx.mat(n * steps, d).noalias() += g * w->value.mat().transpose();
    });
    detail::accumulate_possible(w, [&](Tensor& gw) {
      gw.mat().noalias() += x->value.mat(n * steps, d).transpose() * g;
    });
  };
  return node;
}

inline Var tanh_op(const Var& a) {
  Tensor out = a->value;
  out.vec() = out.vec().array().tanh();
  Var n = detail::make_op(std::move(out), {a}, "tanh");
  Node* self = n.get();
  n->backward_fn = [self, a = a.get()] {
    detail::accumulate_possible(a, [&](Tensor& g) {
      g.vec().array() +=
          self->grad.vec().array() * (1.0 - self->value.vec().array().square());
    });
  };
  return n;
}

inline double sigmoid_scalar(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

inline Var sigmoid(const Var& a) {
  Tensor out = a->value;
  for (std::int64_t i = 0; i < out.size(); ++i) out[i] = sigmoid_scalar(out[i]);
  Var n = detail::make_op(std::move(out), {a}, "sigmoid");
  Node* self = n.get();
  n->backward_fn = [self, a = a.get()] {
    detail::accumulate_possible(a, [&](Tensor& g) {
      const auto y = self->value.vec().array();
      g.vec().array() += self->grad.vec().array() * y * (1.0 - y);
    });
  };
  return n;
}

inline Var leaky_relu(const Var& a, double slope) {
  Tensor out = a->value;
  for (std::int64_t i = 0; i < out.size(); ++i)
    if (out[i] < 0.0) out[i] *= slope;
  Var n = detail::make_op(std::move(out), {a}, "leaky_relu");
  Node* self = n.get();
  n->backward_fn = [self, a = a.get(), slope] {
    detail::accumulate_possible(a, [&](Tensor& g) {
      for (std::int64_t i = 0; i < g.size(); ++i)
        g[i] += self->grad[i] * (a->value[i] > 0.0 ? 1.0 : slope);
    });
  };
  return n;
}

inline Var relu(const Var& a) { return leaky_relu(a, 0.0); }

// Sum of squares -> scalar (L2 penalty building block).
inline Var sumsq(const Var& a) {
  Tensor out = Tensor::scalar(a->value.vec().squaredNorm());
  Var n = detail::make_op(std::move(out), {a}, "sumsq");
  Node* self = n.get();
  n->backward_fn = [self, a = a.get()] {
    detail::accumulate_possible(
        a, [&](Tensor& g) { g.vec() += (2.0 * self->grad[0]) * a->value.vec(); });
  };
  return n;
}

// ---------------------------------------------------------------------------
// Shape ops
// ---------------------------------------------------------------------------

inline Var reshape(const Var& a, std::vector<std::int64_t> shape) {
  Tensor out = a->value.reshaped(std::move(shape));
  Var n = detail::make_op(std::move(out), {a}, "reshape");
  Node* self = n.get();
  n->backward_fn = [self, a = a.get()] {
    detail::accumulate_possible(a, [&](Tensor& g) { g.vec() += self->grad.vec(); });
  };
  return n;
}

inline Var slice_cols(const Var& a, std::int64_t begin, std::int64_t len) {
  if (a->value.rank() != 2) throw ConfigError("slice_cols: rank-2 input required");
  const std::int64_t rows = a->value.dim(0), cols = a->value.dim(1);
  if (begin < 0 || len <= 0 || begin + len > cols) throw ConfigError("slice_cols: bad range");
  Tensor out({rows, len});
  out.mat() = a->value.mat().middleCols(begin, len);
  Var n = detail::make_op(std::move(out), {a}, "slice_cols");
  Node* self = n.get();
  n->backward_fn = [self, a = a.get(), begin, len, rows] {
    detail::accumulate_possible(a, [&](Tensor& g) {
      g.mat().middleCols(begin, len) += self->grad.mat(rows, len);
    });
  };
  return n;
}

inline Var concat_cols(const std::vector<Var>& xs) {
  if (xs.empty()) throw ConfigError("concat_cols: empty input");
  const std::int64_t rows = xs[0]->value.dim(0);
  std::int64_t cols = 0;
  for (const auto& x : xs) {
    if (x->value.rank() != 2 || x->value.dim(0) != rows)
      throw ConfigError("concat_cols: shape mismatch");
    cols += x->value.dim(1);
  }
  Tensor out({rows, cols});
  std::int64_t at = 0;
  for (const auto& x : xs) {
    out.mat().middleCols(at, x->value.dim(1)) = x->value.mat();
    at += x->value.dim(1);
  }
  std::vector<Var> parents(xs.begin(), xs.end());
  Var n = detail::make_op(std::move(out), std::move(parents), "concat_cols");
  Node* self = n.get();
  n->backward_fn = [self, rows, cols] {
    const auto g = self->grad.mat(rows, cols);
    std::int64_t at = 0;
    for (const auto& p : self->parents) {
      const std::int64_t w = p->value.dim(1);
      detail::accumulate_possible(p.get(),
                                  [&](Tensor& gp) { gp.mat() += g.middleCols(at, w); });
      at += w;
    }
  };
  return n;
}

// ---------------------------------------------------------------------------
// Softmax and losses
// ---------------------------------------------------------------------------

// Row-stable softmax over a rank-2 tensor.
inline Tensor softmax_rows_value(const Tensor& z) {
  Tensor p = z;
  auto m = p.mat();
  for (std::int64_t r = 0; r < m.rows(); ++r) {
    auto row = m.row(r);
    row = (row.array() - row.maxCoeff()).exp();
    row /= row.sum();
  }
  return p;
}

inline Var softmax_rows(const Var& a) {
  if (a->value.rank() != 2) throw ConfigError("softmax_rows: rank-2 input required");
  Var n = detail::make_op(softmax_rows_value(a->value), {a}, "softmax_rows");
  Node* self = n.get();
  n->backward_fn = [self, a = a.get()] {
    detail::accumulate_possible(a, [&](Tensor& g) {
      const auto y = self->value.mat();
      const auto gy = self->grad.mat(y.rows(), y.cols());
      // dz_r = (g_r - <g_r, y_r>) * y_r, rowwise
      for (std::int64_t r = 0; r < y.rows(); ++r) {
        const double dot = gy.row(r).dot(y.row(r));
        g.mat().row(r).array() += (gy.row(r).array() - dot) * y.row(r).array();
      }
    });
  };
  return n;
}

inline constexpr double kLogEps = 1e-7;

// Mean categorical cross-entropy of probability rows against one-hot
// targets: -(1/N) sum y * log(p + eps). Standalone form for callers that
// already hold probabilities.
inline Var categorical_crossentropy(const Var& probs, const Tensor& onehot,
                                    double eps_log = kLogEps) {
  if (probs->value.rank() != 2 || !probs->value.same_shape(onehot))
    throw ConfigError("categorical_crossentropy: shape mismatch");
  const std::int64_t n = probs->value.dim(0);
  if (n == 0) throw ConfigError("categorical_crossentropy: empty batch");
  const auto p = probs->value.mat();
  const auto y = onehot.mat();
  const double loss =
      -((p.array() + eps_log).log() * y.array()).sum() / static_cast<double>(n);
  Var node = detail::make_op(Tensor::scalar(loss), {probs}, "categorical_crossentropy");
  Node* self = node.get();
  node->backward_fn = [self, probs = probs.get(), onehot, eps_log, n] {
    detail::accumulate_possible(probs, [&](Tensor& g) {
      g.mat().array() -= (self->grad[0] / static_cast<double>(n)) * onehot.mat().array() /
                         (probs->value.mat().array() + eps_log);
    });
  };
  return node;
}

// Fused stable softmax + mean cross-entropy. The logit gradient is the
// classic (softmax - onehot) / N, which keeps training robust when a
// probability underflows.
inline Var softmax_cross_entropy(const Var& logits, const Tensor& onehot,
                                 double eps_log = kLogEps) {
  if (logits->value.rank() != 2 || !logits->value.same_shape(onehot))
    throw ConfigError("softmax_cross_entropy: shape mismatch");
  const std::int64_t n = logits->value.dim(0);
  if (n == 0) throw ConfigError("softmax_cross_entropy: empty batch");
  Tensor probs = softmax_rows_value(logits->value);
  const double loss = -((probs.mat().array() + eps_log).log() * onehot.mat().array()).sum() /
                      static_cast<double>(n);
  Var node = detail::make_op(Tensor::scalar(loss), {logits}, "softmax_cross_entropy");
  Node* self = node.get();
  node->backward_fn = [self, logits = logits.get(), probs = std::move(probs), onehot, n] {
    detail::accumulate_possible(logits, [&](Tensor& g) {
      g.mat().array() += (self->grad[0] / static_cast<double>(n)) *
                         (probs.mat().array() - onehot.mat().array());
    });
  };
  return node;
}

// ---------------------------------------------------------------------------
// Convolution (2D over [N, T*W*C] with channels innermost) and pooling
// ---------------------------------------------------------------------------

enum class Padding { same, valid };

struct ConvGeom {
  std::int64_t in_t = 0, in_w = 0, in_c = 0, out_c = 0;
  std::int64_t k_t = 1, k_w = 1;
  std::int64_t s_t = 1, s_w = 1;
  std::int64_t pad_t0 = 0, pad_t1 = 0, pad_w0 = 0, pad_w1 = 0;
  std::int64_t out_t = 0, out_w = 0;

  std::int64_t patch_len() const { return k_t * k_w * in_c; }
  std::int64_t in_len() const { return in_t * in_w * in_c; }
  std::int64_t out_len() const { return out_t * out_w * out_c; }
};

// `same` keeps out = ceil(in / stride) with the extra pad cell at the end;
// `valid` uses no padding and requires the kernel to fit.
inline ConvGeom make_conv_geom(std::int64_t in_t, std::int64_t in_w, std::int64_t in_c,
                               std::int64_t out_c, std::int64_t k_t, std::int64_t k_w,
                               std::int64_t s_t, std::int64_t s_w, Padding pad) {
  if (in_t < 1 || in_w < 1 || in_c < 1 || out_c < 1 || k_t < 1 || k_w < 1 || s_t < 1 || s_w < 1)
    throw ConfigError("conv geometry: all dimensions must be positive");
  ConvGeom g;
  g.in_t = in_t;
  g.in_w = in_w;
  g.in_c = in_c;
  g.out_c = out_c;
  g.k_t = k_t;
  g.k_w = k_w;
  g.s_t = s_t;
  g.s_w = s_w;
  if (pad == Padding::same) {
    g.out_t = (in_t + s_t - 1) / s_t;
    g.out_w = (in_w + s_w - 1) / s_w;
    const std::int64_t pt = std::max<std::int64_t>(0, (g.out_t - 1) * s_t + k_t - in_t);
    const std::int64_t pw = std::max<std::int64_t>(0, (g.out_w - 1) * s_w + k_w - in_w);
    g.pad_t0 = pt / 2;
    g.pad_t1 = pt - g.pad_t0;
    g.pad_w0 = pw / 2;
    g.pad_w1 = pw - g.pad_w0;
  } else {
    if (in_t < k_t || in_w < k_w) throw ConfigError("conv geometry: kernel larger than input");
    g.out_t = (in_t - k_t) / s_t + 1;
    g.out_w = (in_w - k_w) / s_w + 1;
  }
  return g;
}

namespace detail {

// Gather conv patches: rows = N*out_t*out_w, cols = k_t*k_w*in_c.
// Out-of-range taps contribute zeros.
inline Tensor im2col(const Tensor& x, const ConvGeom& g) {
  const std::int64_t n = x.dim(0);
  Tensor patches({n * g.out_t * g.out_w, g.patch_len()});
  const double* src = x.data();
  double* dst = patches.data();
  for (std::int64_t s = 0; s < n; ++s) {
    const double* xs = src + s * g.in_len();
    for (std::int64_t ot = 0; ot < g.out_t; ++ot) {
      for (std::int64_t ow = 0; ow < g.out_w; ++ow) {
        for (std::int64_t kt = 0; kt < g.k_t; ++kt) {
          const std::int64_t it = ot * g.s_t - g.pad_t0 + kt;
          for (std::int64_t kw = 0; kw < g.k_w; ++kw) {
            const std::int64_t iw = ow * g.s_w - g.pad_w0 + kw;
            if (it >= 0 && it < g.in_t && iw >= 0 && iw < g.in_w) {
              std::memcpy(dst, xs + (it * g.in_w + iw) * g.in_c,
                          static_cast<std::size_t>(g.in_c) * sizeof(double));
            } else {
              std::memset(dst, 0, static_cast<std::size_t>(g.in_c) * sizeof(double));
            }
            dst += g.in_c;
          }
        }
      }
    }
  }
  return patches;
}

// Scatter-add of patch gradients back into input layout (transpose of im2col).
inline void col2im_add(const Tensor& dpatches, const ConvGeom& g, Tensor& dx) {
  const std::int64_t n = dx.dim(0);
  const double* src = dpatches.data();
  double* dst = dx.data();
  for (std::int64_t s = 0; s < n; ++s) {
    double* xs = dst + s * g.in_len();
    for (std::int64_t ot = 0; ot < g.out_t; ++ot) {
      for (std::int64_t ow = 0; ow < g.out_w; ++ow) {
        for (std::int64_t kt = 0; kt < g.k_t; ++kt) {
          const std::int64_t it = ot * g.s_t - g.pad_t0 + kt;
          for (std::int64_t kw = 0; kw < g.k_w; ++kw) {
            const std::int64_t iw = ow * g.s_w - g.pad_w0 + kw;
            if (it >= 0 && it < g.in_t && iw >= 0 && iw < g.in_w) {
              double* cell = xs + (it * g.in_w + iw) * g.in_c;
              for (std::int64_t c = 0; c < g.in_c; ++c) cell[c] += src[c];
            }
            src += g.in_c;
          }
        }
      }
    }
  }
}

}  // namespace detail

// x: [N, T*W*C], kernel: [k_t*k_w*in_c, out_c], bias: [out_c] ->
// [N, out_t*out_w*out_c]. im2col + GEMM; patches are kept for backward.
inline Var conv2d(const Var& x, const Var& kernel, const Var& bias, const ConvGeom& g) {
  if (x->value.rank() != 2 || x->value.dim(1) != g.in_len())
    throw ConfigError("conv2d: input geometry mismatch");
  if (kernel->value.dim(0) != g.patch_len() || kernel->value.dim(1) != g.out_c)
    throw ConfigError("conv2d: kernel geometry mismatch");
  if (bias->value.size() != g.out_c) throw ConfigError("conv2d: bias geometry mismatch");
  const std::int64_t n = x->value.dim(0);
  auto patches = std::make_shared<Tensor>(detail::im2col(x->value, g));
  Tensor out({n, g.out_len()});
  auto om = out.mat(n * g.out_t * g.out_w, g.out_c);
  om.noalias() = patches->mat() * kernel->value.mat();
  om.rowwise() += bias->value.vec().transpose();
  Var node = detail::make_op(std::move(out), {x, kernel, bias}, "conv2d");
  Node* self = node.get();
  node->backward_fn = [self, x = x.get(), kernel = kernel.get(), bias = bias.get(), patches, g,
                       n] {
    const auto gout = self->grad.mat(n * g.out_t * g.out_w, g.out_c);
    detail::accumulate_possible(kernel, [&](Tensor& gk) {
      gk.mat().noalias() += patches->mat().transpose() * gout;
    });
    detail::accumulate_possible(
        bias, [&](Tensor& gb) { gb.vec() += gout.colwise().sum().transpose(); });
    detail::accumulate_possible(x, [&](Tensor& gx) {
      Tensor dpatches({n * g.out_t * g.out_w, g.patch_len()});
      dpatches.mat().noalias() = gout * kernel->value.mat().transpose();
      detail::col2im_add(dpatches, g, gx);
    });
  };
  return node;
}

// Max pool over the time axis with `same` padding and stride 1:
// out[n,t,w,c] = max over the k-tap time neighbourhood (missing taps are
// -inf, i.e. ignored). Shape is preserved.
inline Var maxpool_time(const Var& x, std::int64_t t_dim, std::int64_t w_dim,
                        std::int64_t c_dim, std::int64_t k) {
  if (x->value.rank() != 2 || x->value.dim(1) != t_dim * w_dim * c_dim)
    throw ConfigError("maxpool_time: geometry mismatch");
  if (k < 1) throw ConfigError("maxpool_time: window must be positive");
  const std::int64_t n = x->value.dim(0);
  const std::int64_t before = (k - 1) / 2;
  Tensor out(x->value.shape());
  auto argmax = std::make_shared<std::vector<std::int64_t>>(
      static_cast<std::size_t>(out.size()));
  const double* src = x->value.data();
  double* dst = out.data();
  const std::int64_t plane = w_dim * c_dim;
  std::int64_t flat = 0;
  for (std::int64_t s = 0; s < n; ++s) {
    const std::int64_t base = s * t_dim * plane;
    for (std::int64_t t = 0; t < t_dim; ++t) {
      const std::int64_t t_lo = std::max<std::int64_t>(0, t - before);
      const std::int64_t t_hi = std::min<std::int64_t>(t_dim - 1, t - before + k - 1);
      for (std::int64_t wc = 0; wc < plane; ++wc, ++flat) {
        std::int64_t best_idx = base + t_lo * plane + wc;
        double best = src[best_idx];
        for (std::int64_t tt = t_lo + 1; tt <= t_hi; ++tt) {
          const std::int64_t idx = base + tt * plane + wc;
          if (src[idx] > best) {
            best = src[idx];
            best_idx = idx;
          }
        }
        dst[flat] = best;
        (*argmax)[static_cast<std::size_t>(flat)] = best_idx;
      }
    }
  }
  Var node = detail::make_op(std::move(out), {x}, "maxpool_time");
  Node* self = node.get();
  node->backward_fn = [self, x = x.get(), argmax] {
    detail::accumulate_possible(x, [&](Tensor& g) {
      for (std::int64_t i = 0; i < self->grad.size(); ++i)
        g[(*argmax)[static_cast<std::size_t>(i)]] += self->grad[i];
    });
  };
  return node;
}

// ---------------------------------------------------------------------------
// Attention primitives over flat sequence batches
// ---------------------------------------------------------------------------

// q, k: [N, T*d] -> scores [N, T*T], scaled by 1/sqrt(d):
// per sample, S = Q K^T / sqrt(d) with Q, K viewed as [T, d].
inline Var attention_scores(const Var& q, const Var& k, std::int64_t steps, std::int64_t d) {
  if (q->value.rank() != 2 || !q->value.same_shape(k->value) ||
      q->value.dim(1) != steps * d)
    throw ConfigError("attention_scores: geometry mismatch");
  const std::int64_t n = q->value.dim(0);
  const double inv_sqrt_d = 1.0 / std::sqrt(static_cast<double>(d));
  Tensor out({n, steps * steps});
  for (std::int64_t s = 0; s < n; ++s) {
    ConstMatMap qs(q->value.data() + s * steps * d, steps, d);
    ConstMatMap ks(k->value.data() + s * steps * d, steps, d);
    MatMap os(out.data() + s * steps * steps, steps, steps);
    os.noalias() = qs * ks.transpose() * inv_sqrt_d;
  }
  Var node = detail::make_op(std::move(out), {q, k}, "attention_scores");
  Node* self = node.get();
  node->backward_fn = [self, q = q.get(), k = k.get(), steps, d, n, inv_sqrt_d] {
    for (std::int64_t s = 0; s < n; ++s) {
      ConstMatMap gs(self->grad.data() + s * steps * steps, steps, steps);
      ConstMatMap qs(q->value.data() + s * steps * d, steps, d);
      ConstMatMap ks(k->value.data() + s * steps * d, steps, d);
      detail::accumulate_possible(q, [&](Tensor& gq) {
        MatMap m(gq.data() + s * steps * d, steps, d);
        m.noalias() += gs * ks * inv_sqrt_d;
      });
      detail::accumulate_possible(k, [&](Tensor& gk) {
        MatMap m(gk.data() + s * steps * d, steps, d);
        m.noalias() += gs.transpose() * qs * inv_sqrt_d;
      });
    }
  };
  return node;
}

// weights: [N, T*T] (rows already normalized), v: [N, T*d] -> [N, T*d]:
// per sample, O = A V.
inline Var attention_apply(const Var& weights, const Var& v, std::int64_t steps,
                           std::int64_t d) {
  if (weights->value.rank() != 2 || weights->value.dim(1) != steps * steps ||
      v->value.rank() != 2 || v->value.dim(1) != steps * d ||
      weights->value.dim(0) != v->value.dim(0))
    throw ConfigError("attention_apply: geometry mismatch");
  const std::int64_t n = v->value.dim(0);
  Tensor out({n, steps * d});
  for (std::int64_t s = 0; s < n; ++s) {
    ConstMatMap as(weights->value.data() + s * steps * steps, steps, steps);
    ConstMatMap vs(v->value.data() + s * steps * d, steps, d);
    MatMap os(out.data() + s * steps * d, steps, d);
    os.noalias() = as * vs;
  }
  Var node = detail::make_op(std::move(out), {weights, v}, "attention_apply");
  Node* self = node.get();
  node->backward_fn = [self, weights = weights.get(), v = v.get(), steps, d, n] {
    for (std::int64_t s = 0; s < n; ++s) {
      ConstMatMap gs(self->grad.data() + s * steps * d, steps, d);
      ConstMatMap as(weights->value.data() + s * steps * steps, steps, steps);
      ConstMatMap vs(v->value.data() + s * steps * d, steps, d);
      detail::accumulate_possible(weights, [&](Tensor& gw) {
        MatMap m(gw.data() + s * steps * steps, steps, steps);
        m.noalias() += gs * vs.transpose();
      });
      detail::accumulate_possible(v, [&](Tensor& gv) {
        MatMap m(gv.data() + s * steps * d, steps, d);
        m.noalias() += as.transpose() * gs;
      });
    }
  };
  return node;
}

}  // namespace lobbench::ad
