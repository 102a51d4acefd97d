#pragma once

// Trainable layers: parameter containers plus graph-building apply().
// A layer owns persistent parameter nodes; apply() stitches fresh op nodes
// onto them for each batch, so gradients land in the same parameter tensors
// every step.
//
// Initialization (pinned for reproducibility): dense and conv weights are
// U(+-sqrt(1/fan_in)), recurrent weights U(+-0.08), biases zero except the
// LSTM forget-gate block, which starts at 1 so early training does not
// flush cell state.

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "lobbench/autodiff.hpp"
#include "lobbench/common.hpp"

namespace lobbench::ad {

inline Tensor uniform_tensor(std::vector<std::int64_t> shape, double bound, Rng& rng) {
  Tensor t(std::move(shape));
  for (std::int64_t i = 0; i < t.size(); ++i) t[i] = rng.uniform(-bound, bound);
  return t;
}

struct DenseLayer {
  Var w, b;
  std::int64_t in = 0, out = 0;

  static DenseLayer create(std::int64_t in, std::int64_t out, const std::string& name,
                           Rng& rng) {
    DenseLayer l;
    l.in = in;
    l.out = out;
    const double bound = std::sqrt(1.0 / static_cast<double>(in));
    l.w = parameter(uniform_tensor({in, out}, bound, rng), name + ".w");
    l.b = parameter(Tensor::zeros({out}), name + ".b");
    return l;
  }

  Var apply(const Var& x) const { return add_rowvec(matmul(x, w), b); }

  std::vector<Var> params() const { return {w, b}; }
  std::int64_t param_count() const { return in * out + out; }
};

// Single fused-matrix LSTM: W is [(in + hidden), 4*hidden] applied to
// [x_t, h_{t-1}]; gate blocks in order input, forget, candidate, output.
struct LstmLayer {
  Var w, b;
  std::int64_t in = 0, hidden = 0;

  static LstmLayer create(std::int64_t in, std::int64_t hidden, const std::string& name,
                          Rng& rng) {
    LstmLayer l;
    l.in = in;
    l.hidden = hidden;
    l.w = parameter(uniform_tensor({in + hidden, 4 * hidden}, 0.08, rng), name + ".w");
    Tensor bias = Tensor::zeros({4 * hidden});
    for (std::int64_t i = hidden; i < 2 * hidden; ++i) bias[i] = 1.0;  // forget gate
    l.b = parameter(std::move(bias), name + ".b");
    return l;
  }

  struct Out {
    Var sequence;  // [N, T*hidden], hidden state at every step
    Var last;      // [N, hidden]
  };

  // x: [N, T*in], steps = T. Initial h and c are zero.
  Out apply(const Var& x, std::int64_t steps) const {
    if (x->value.rank() != 2 || x->value.dim(1) != steps * in)
      throw ConfigError("lstm: input geometry mismatch");
    const std::int64_t n = x->value.dim(0);
    Var h = constant(Tensor::zeros({n, hidden}));
    Var c = constant(Tensor::zeros({n, hidden}));
    std::vector<Var> hs;
    hs.reserve(static_cast<std::size_t>(steps));
    for (std::int64_t t = 0; t < steps; ++t) {
      const Var x_t = slice_cols(x, t * in, in);
      const Var z = add_rowvec(matmul(concat_cols({x_t, h}), w), b);
      const Var gi = sigmoid(slice_cols(z, 0, hidden));
      const Var gf = sigmoid(slice_cols(z, hidden, hidden));
      const Var gc = tanh_op(slice_cols(z, 2 * hidden, hidden));
      const Var go = sigmoid(slice_cols(z, 3 * hidden, hidden));
      c = add(mul(gf, c), mul(gi, gc));
      h = mul(go, tanh_op(c));
      hs.push_back(h);
    }
    return {concat_cols(hs), h};
  }

  std::vector<Var> params() const { return {w, b}; }
  std::int64_t param_count() const { return (in + hidden) * 4 * hidden + 4 * hidden; }
};

struct Conv2dLayer {
  Var k, b;
  ConvGeom geom;
  double leak = 0.01;  // leaky ReLU slope; negative disables the activation

  static Conv2dLayer create(const ConvGeom& geom, const std::string& name, Rng& rng,
                            double leak = 0.01) {
    Conv2dLayer l;
    l.geom = geom;
    l.leak = leak;
    const double bound = std::sqrt(1.0 / static_cast<double>(geom.patch_len()));
    l.k = parameter(uniform_tensor({geom.patch_len(), geom.out_c}, bound, rng), name + ".k");
    l.b = parameter(Tensor::zeros({geom.out_c}), name + ".b");
    return l;
  }

  Var apply(const Var& x) const {
    const Var y = conv2d(x, k, b, geom);
    return leak >= 0.0 ? leaky_relu(y, leak) : y;
  }

  std::vector<Var> params() const { return {k, b}; }
  std::int64_t param_count() const { return geom.patch_len() * geom.out_c + geom.out_c; }
};

// Single-head scaled dot-product self-attention over a hidden sequence.
// Q, K, V are per-step linear projections (no biases); scores are softmaxed
// per query row and applied to V.
struct SelfAttentionLayer {
  Var wq, wk, wv;
  std::int64_t dim = 0;  // input and projection width

  static SelfAttentionLayer create(std::int64_t dim, const std::string& name, Rng& rng) {
    SelfAttentionLayer l;
    l.dim = dim;
    const double bound = std::sqrt(1.0 / static_cast<double>(dim));
    l.wq = parameter(uniform_tensor({dim, dim}, bound, rng), name + ".wq");
    l.wk = parameter(uniform_tensor({dim, dim}, bound, rng), name + ".wk");
    l.wv = parameter(uniform_tensor({dim, dim}, bound, rng), name + ".wv");
    return l;
  }

  // x: [N, T*dim] -> [N, T*dim]
  Var apply(const Var& x, std::int64_t steps) const {
    const std::int64_t n = x->value.dim(0);
    const Var q = seq_linear(x, wq, steps);
    const Var k = seq_linear(x, wk, steps);
    const Var v = seq_linear(x, wv, steps);
    const Var scores = attention_scores(q, k, steps, dim);
    // softmax over keys for each (sample, query) row
    const Var rows = reshape(scores, {n * steps, steps});
    const Var weights = reshape(softmax_rows(rows), {n, steps * steps});
    return attention_apply(weights, v, steps, dim);
  }

  std::vector<Var> params() const { return {wq, wk, wv}; }
  std::int64_t param_count() const { return 3 * dim * dim; }
};

// Inception block over a [N, T*1*C] tower: three branches on the time axis
// (1x1 -> 3x1, 1x1 -> 5x1, maxpool 3x1 -> 1x1), channel-concatenated.
struct InceptionBlock {
  Conv2dLayer reduce3, conv3, reduce5, conv5, after_pool;
  std::int64_t in_t = 0, in_c = 0, branch_c = 0;

  static InceptionBlock create(std::int64_t in_t, std::int64_t in_c, std::int64_t branch_c,
                               const std::string& name, Rng& rng) {
    InceptionBlock b;
    b.in_t = in_t;
    b.in_c = in_c;
    b.branch_c = branch_c;
    b.reduce3 = Conv2dLayer::create(
        make_conv_geom(in_t, 1, in_c, branch_c, 1, 1, 1, 1, Padding::same), name + ".r3", rng);
    b.conv3 = Conv2dLayer::create(
        make_conv_geom(in_t, 1, branch_c, branch_c, 3, 1, 1, 1, Padding::same), name + ".c3",
        rng);
    b.reduce5 = Conv2dLayer::create(
        make_conv_geom(in_t, 1, in_c, branch_c, 1, 1, 1, 1, Padding::same), name + ".r5", rng);
    b.conv5 = Conv2dLayer::create(
        make_conv_geom(in_t, 1, branch_c, branch_c, 5, 1, 1, 1, Padding::same), name + ".c5",
        rng);
    b.after_pool = Conv2dLayer::create(
        make_conv_geom(in_t, 1, in_c, branch_c, 1, 1, 1, 1, Padding::same), name + ".p1", rng);
    return b;
  }

  // x: [N, T*1*in_c] -> [N, T*1*(3*branch_c)]
  Var apply(const Var& x) const {
    const std::int64_t n = x->value.dim(0);
    const Var b3 = conv3.apply(reduce3.apply(x));
    const Var b5 = conv5.apply(reduce5.apply(x));
    const Var bp = after_pool.apply(maxpool_time(x, in_t, 1, in_c, 3));
    // concat on the channel axis == column concat of the [(N*T), C] views
    const Var out = concat_cols({reshape(b3, {n * in_t, branch_c}),
                                 reshape(b5, {n * in_t, branch_c}),
                                 reshape(bp, {n * in_t, branch_c})});
    return reshape(out, {n, in_t * 3 * branch_c});
  }

  std::vector<Var> params() const {
    std::vector<Var> out;
    for (const auto* l : {&reduce3, &conv3, &reduce5, &conv5, &after_pool}) {
      auto p = l->params();
      out.insert(out.end(), p.begin(), p.end());
    }
    return out;
  }

  std::int64_t param_count() const {
    return reduce3.param_count() + conv3.param_count() + reduce5.param_count() +
           conv5.param_count() + after_pool.param_count();
  }
};

}  // namespace lobbench::ad
