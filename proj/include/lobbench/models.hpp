#pragma once

// The benchmark model zoo. Every trainable model maps a flat window batch
// [N, window*features] to 3 logits (down / flat / up); training applies the
// fused softmax cross-entropy to the logits. The two baselines are
// prediction rules, not networks: `random` draws classes uniformly,
// `naive` always answers flat.

#include <cstdint>
#include <memory>
#include <string>
#include <variant>
#include <vector>

#include "lobbench/autodiff.hpp"
#include "lobbench/common.hpp"
#include "lobbench/layers.hpp"

namespace lobbench {

enum class ModelKind : int {
  random = 0,
  naive,
  logistic,
  mlp,
  lstm,
  attention_lstm,
  cnn_lstm,
};

inline const char* model_name(ModelKind k) {
  switch (k) {
    case ModelKind::random: return "random";
    case ModelKind::naive: return "naive";
    case ModelKind::logistic: return "logistic";
    case ModelKind::mlp: return "mlp";
    case ModelKind::lstm: return "lstm";
    case ModelKind::attention_lstm: return "attention_lstm";
    case ModelKind::cnn_lstm: return "cnn_lstm";
  }
  throw ConfigError("unknown model kind");
}

inline ModelKind model_from_name(const std::string& name) {
  for (const ModelKind k : {ModelKind::random, ModelKind::naive, ModelKind::logistic,
                            ModelKind::mlp, ModelKind::lstm, ModelKind::attention_lstm,
                            ModelKind::cnn_lstm}) {
    if (name == model_name(k)) return k;
  }
  throw ConfigError("unknown model name: " + name);
}

inline std::vector<ModelKind> all_model_kinds() {
  return {ModelKind::random,       ModelKind::naive, ModelKind::logistic, ModelKind::mlp,
          ModelKind::lstm, ModelKind::attention_lstm, ModelKind::cnn_lstm};
}

inline bool is_trainable(ModelKind k) {
  return k != ModelKind::random && k != ModelKind::naive;
}

struct ModelSpec {
  ModelKind kind = ModelKind::random;
  std::int64_t window = 10;
  std::int64_t features = 40;
  std::uint64_t seed = 0;
};

struct LayerInfo {
  std::string name;
  std::vector<std::int64_t> output_shape;  // per sample, batch dim omitted
  std::int64_t param_count = 0;
};

inline int argmax3(const double* p) {
  int best = 0;
  if (p[1] > p[best]) best = 1;
  if (p[2] > p[best]) best = 2;
  return best;
}

namespace detail {

struct LogisticNet {
  ad::DenseLayer out;
};

struct MlpNet {
  ad::DenseLayer h1, h2, h3, h4, out;
};

struct LstmNet {
  ad::LstmLayer rnn;
  ad::DenseLayer out;
};

struct AttnLstmNet {
  ad::LstmLayer rnn;
  ad::SelfAttentionLayer attn;
  ad::DenseLayer out;
};

struct CnnLstmNet {
  std::vector<ad::Conv2dLayer> convs;
  ad::InceptionBlock inception;
  ad::LstmLayer rnn;
  ad::DenseLayer out;
};

struct BaselineNet {};

}  // namespace detail

class Model {
public:
  static Model build(const ModelSpec& spec) {
    if (spec.window < 1 || spec.features < 1) throw ConfigError("model: bad input geometry");
    Model m;
    m.spec_ = spec;
    Rng rng(derive_seed(spec.seed, std::string("init/") + model_name(spec.kind)));
    const std::int64_t flat = spec.window * spec.features;
    switch (spec.kind) {
      case ModelKind::random:
      case ModelKind::naive:
        m.net_ = detail::BaselineNet{};
        break;
      case ModelKind::logistic: {
        detail::LogisticNet net;
        net.out = ad::DenseLayer::create(flat, 3, "out", rng);
        m.push_layer("dense_out", {3}, net.out.param_count());
        m.net_ = std::move(net);
        break;
      }
      case ModelKind::mlp: {
        detail::MlpNet net;
        net.h1 = ad::DenseLayer::create(flat, 512, "h1", rng);
        m.push_layer("dense_relu_1", {512}, net.h1.param_count());
        net.h2 = ad::DenseLayer::create(512, 1024, "h2", rng);
        m.push_layer("dense_relu_2", {1024}, net.h2.param_count());
        net.h3 = ad::DenseLayer::create(1024, 1024, "h3", rng);
        m.push_layer("dense_relu_3", {1024}, net.h3.param_count());
        net.h4 = ad::DenseLayer::create(1024, 64, "h4", rng);
        m.push_layer("dense_relu_4", {64}, net.h4.param_count());
        net.out = ad::DenseLayer::create(64, 3, "out", rng);
        m.push_layer("dense_out", {3}, net.out.param_count());
        m.net_ = std::move(net);
        break;
      }
      case ModelKind::lstm: {
        detail::LstmNet net;
        net.rnn = ad::LstmLayer::create(spec.features, 20, "lstm", rng);
        m.push_layer("lstm", {spec.window, 20}, net.rnn.param_count());
        net.out = ad::DenseLayer::create(20, 3, "out", rng);
        m.push_layer("dense_out", {3}, net.out.param_count());
        m.net_ = std::move(net);
        break;
      }
      case ModelKind::attention_lstm: {
        detail::AttnLstmNet net;
        net.rnn = ad::LstmLayer::create(spec.features, 40, "lstm", rng);
        m.push_layer("lstm", {spec.window, 40}, net.rnn.param_count());
        net.attn = ad::SelfAttentionLayer::create(40, "attn", rng);
        m.push_layer("self_attention", {spec.window, 40}, net.attn.param_count());
        net.out = ad::DenseLayer::create(spec.window * 40, 3, "out", rng);
        m.push_layer("dense_out", {3}, net.out.param_count());
        m.net_ = std::move(net);
        break;
      }
      case ModelKind::cnn_lstm: {
        m.net_ = build_cnn_lstm(m, spec, rng);
        break;
      }
    }
    m.collect_params();
    return m;
  }

  ModelKind kind() const { return spec_.kind; }
  const ModelSpec& spec() const { return spec_; }
  bool trainable() const { return is_trainable(spec_.kind); }
  const std::vector<ad::Var>& params() const { return params_; }
  const std::vector<LayerInfo>& layers() const { return layers_; }

  std::int64_t param_count() const {
    std::int64_t n = 0;
    for (const auto& p : params_) n += p->value.size();
    return n;
  }

  // Parameters subject to an L2 penalty during training: the logistic
  // weight matrix only (its bias stays unpenalized). Empty elsewhere.
  std::vector<ad::Var> penalized_params() const {
    if (const auto* net = std::get_if<detail::LogisticNet>(&net_)) return {net->out.w};
    return {};
  }

  // Build the logits graph for a batch input [N, window*features].
  ad::Var logits(const ad::Var& x) const {
    if (x->value.rank() != 2 || x->value.dim(1) != spec_.window * spec_.features)
      throw ConfigError("model: input shape mismatch");
    const std::int64_t steps = spec_.window;
    if (const auto* net = std::get_if<detail::LogisticNet>(&net_)) {
      return net->out.apply(x);
    }
    if (const auto* net = std::get_if<detail::MlpNet>(&net_)) {
      ad::Var h = ad::relu(net->h1.apply(x));
      h = ad::relu(net->h2.apply(h));
      h = ad::relu(net->h3.apply(h));
      h = ad::relu(net->h4.apply(h));
      return net->out.apply(h);
    }
    if (const auto* net = std::get_if<detail::LstmNet>(&net_)) {
      return net->out.apply(net->rnn.apply(x, steps).last);
    }
    if (const auto* net = std::get_if<detail::AttnLstmNet>(&net_)) {
      const ad::Var seq = net->rnn.apply(x, steps).sequence;
      return net->out.apply(net->attn.apply(seq, steps));
    }
    if (const auto* net = std::get_if<detail::CnnLstmNet>(&net_)) {
      ad::Var h = x;  // [N, 10*40*1]
      for (const auto& conv : net->convs) h = conv.apply(h);
      h = net->inception.apply(h);  // [N, 10*96]
      return net->out.apply(net->rnn.apply(h, steps).last);
    }
    throw ConfigError(std::string("model '") + model_name(spec_.kind) + "' produces no logits");
  }

  // Forward-only class probabilities (softmax over logits).
  ad::Tensor predict_probs(ad::Tensor batch) const {
    const ad::Var x = ad::constant(std::move(batch));
    return ad::softmax_rows_value(logits(x)->value);
  }

  std::vector<int> predict_classes(ad::Tensor batch) const {
    const ad::Tensor probs = predict_probs(std::move(batch));
    std::vector<int> out(static_cast<std::size_t>(probs.dim(0)));
    for (std::int64_t r = 0; r < probs.dim(0); ++r)
      out[static_cast<std::size_t>(r)] = argmax3(probs.data() + 3 * r);
    return out;
  }

private:
  static detail::CnnLstmNet build_cnn_lstm(Model& m, const ModelSpec& spec, Rng& rng) {
    using ad::Padding;
    if (spec.window != 10 || spec.features != 40)
      throw ConfigError("cnn_lstm expects 10x40 windows");
    detail::CnnLstmNet net;
    auto add_conv = [&](const ad::ConvGeom& g, const char* name) {
      net.convs.push_back(ad::Conv2dLayer::create(g, name, rng));
      m.push_layer(name, {g.out_t, g.out_w, g.out_c}, net.convs.back().param_count());
    };
    add_conv(ad::make_conv_geom(10, 40, 1, 16, 1, 2, 1, 2, Padding::same), "conv1_1x2s2");
    add_conv(ad::make_conv_geom(10, 20, 16, 16, 4, 1, 1, 1, Padding::same), "conv2_4x1");
    add_conv(ad::make_conv_geom(10, 20, 16, 16, 4, 1, 1, 1, Padding::same), "conv3_4x1");
    add_conv(ad::make_conv_geom(10, 20, 16, 16, 1, 2, 1, 2, Padding::same), "conv4_1x2s2");
    add_conv(ad::make_conv_geom(10, 10, 16, 16, 4, 1, 1, 1, Padding::same), "conv5_4x1");
    add_conv(ad::make_conv_geom(10, 10, 16, 16, 4, 1, 1, 1, Padding::same), "conv6_4x1");
    add_conv(ad::make_conv_geom(10, 10, 16, 16, 1, 10, 1, 1, Padding::valid), "conv7_1x10");
    add_conv(ad::make_conv_geom(10, 1, 16, 16, 4, 1, 1, 1, Padding::same), "conv8_4x1");
    add_conv(ad::make_conv_geom(10, 1, 16, 16, 4, 1, 1, 1, Padding::same), "conv9_4x1");
    net.inception = ad::InceptionBlock::create(10, 16, 32, "inception", rng);
    m.push_layer("inception", {10, 1, 96}, net.inception.param_count());
    net.rnn = ad::LstmLayer::create(96, 64, "lstm", rng);
    m.push_layer("lstm", {10, 64}, net.rnn.param_count());
    net.out = ad::DenseLayer::create(64, 3, "out", rng);
    m.push_layer("dense_out", {3}, net.out.param_count());
    return net;
  }

  void push_layer(std::string name, std::vector<std::int64_t> shape, std::int64_t params) {
    layers_.push_back(LayerInfo{std::move(name), std::move(shape), params});
  }

  void collect_params() {
    params_.clear();
    if (const auto* net = std::get_if<detail::LogisticNet>(&net_)) {
      append(net->out.params());
    } else if (const auto* net = std::get_if<detail::MlpNet>(&net_)) {
      for (const auto* l : {&net->h1, &net->h2, &net->h3, &net->h4, &net->out})
        append(l->params());
    } else if (const auto* net = std::get_if<detail::LstmNet>(&net_)) {
      append(net->rnn.params());
      append(net->out.params());
    } else if (const auto* net = std::get_if<detail::AttnLstmNet>(&net_)) {
      append(net->rnn.params());
      append(net->attn.params());
      append(net->out.params());
    } else if (const auto* net = std::get_if<detail::CnnLstmNet>(&net_)) {
      for (const auto& c : net->convs) append(c.params());
      append(net->inception.params());
      append(net->rnn.params());
      append(net->out.params());
    }
  }

  void append(const std::vector<ad::Var>& ps) {
    params_.insert(params_.end(), ps.begin(), ps.end());
  }

  ModelSpec spec_;
  std::variant<detail::BaselineNet, detail::LogisticNet, detail::MlpNet, detail::LstmNet,
               detail::AttnLstmNet, detail::CnnLstmNet>
      net_;
  std::vector<ad::Var> params_;
  std::vector<LayerInfo> layers_;
};

// Baseline prediction rules.
inline std::vector<int> random_predictions(std::size_t n, Rng& rng) {
  std::vector<int> out(n);
  for (auto& c : out) c = static_cast<int>(rng.uniform_int(0, 2));
  return out;
}

inline std::vector<int> naive_predictions(std::size_t n) {
  return std::vector<int>(n, 1);  // always flat
}

}  // namespace lobbench
