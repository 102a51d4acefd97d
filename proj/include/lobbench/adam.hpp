#pragma once

// Adam with bias correction. Moment estimates live here, aligned with the
// parameter list order, so a checkpoint can round-trip optimiser state.
// Update: p -= lr * m_hat / (sqrt(v_hat) + eps)   (epsilon OUTSIDE the sqrt).

#include <cmath>
#include <cstdint>
#include <vector>

#include "lobbench/autodiff.hpp"

namespace lobbench::ad {

struct AdamConfig {
  double lr = 0.001;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

class Adam {
public:
  Adam() = default;

  Adam(const AdamConfig& cfg, const std::vector<Var>& params) : cfg_(cfg) {
    reset(params);
  }

  void reset(const std::vector<Var>& params) {
    step_count_ = 0;
    m_.clear();
    v_.clear();
    for (const auto& p : params) {
      m_.push_back(Tensor::zeros(p->value.shape()));
      v_.push_back(Tensor::zeros(p->value.shape()));
    }
  }

  const AdamConfig& config() const { return cfg_; }
  std::int64_t step_count() const { return step_count_; }

  void step(const std::vector<Var>& params) {
    if (params.size() != m_.size()) throw ConfigError("adam: parameter list changed");
    ++step_count_;
    const double bc1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(step_count_));
    const double bc2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(step_count_));
    for (std::size_t i = 0; i < params.size(); ++i) {
      Node& p = *params[i];
      p.ensure_grad();
      check_finite(p.grad, "adam: gradient");
      Tensor& m = m_[i];
      Tensor& v = v_[i];
      for (std::int64_t j = 0; j < p.value.size(); ++j) {
        const double g = p.grad[j];
        m[j] = cfg_.beta1 * m[j] + (1.0 - cfg_.beta1) * g;
        v[j] = cfg_.beta2 * v[j] + (1.0 - cfg_.beta2) * g * g;
        const double m_hat = m[j] / bc1;
        const double v_hat = v[j] / bc2;
        p.value[j] -= cfg_.lr * m_hat / (std::sqrt(v_hat) + cfg_.eps);
      }
      check_finite(p.value, "adam: parameter");
    }
  }

  // Checkpoint access.
  std::vector<Tensor>& first_moments() { return m_; }
  std::vector<Tensor>& second_moments() { return v_; }
  const std::vector<Tensor>& first_moments() const { return m_; }
  const std::vector<Tensor>& second_moments() const { return v_; }
  void restore(std::int64_t step_count, std::vector<Tensor> m, std::vector<Tensor> v,
               const AdamConfig& cfg) {
    step_count_ = step_count;
    m_ = std::move(m);
    v_ = std::move(v);
    cfg_ = cfg;
  }

private:
  AdamConfig cfg_;
  std::int64_t step_count_ = 0;
  std::vector<Tensor> m_, v_;
};

}  // namespace lobbench::ad
