#pragma once

// Finite-difference gradient verification. For each checked parameter
// element: central difference (f(p+eps) - f(p-eps)) / (2 eps) against the
// analytic gradient from one backward pass. The relative error guard floor
// keeps near-zero gradient pairs from blowing up the ratio.

#include <cstdint>
#include <functional>
#include <vector>

#include "lobbench/autodiff.hpp"

namespace lobbench::ad {

struct GradCheckResult {
  double max_rel_error = 0.0;
  std::int64_t elements_checked = 0;
};

inline double rel_error(double a, double b, double guard = 1e-6) {
  const double denom = std::max({std::abs(a), std::abs(b), guard});
  return std::abs(a - b) / denom;
}

// make_loss must rebuild the graph from the parameters' CURRENT values and
// return a scalar. `stride` checks every stride-th element of big tensors.
inline GradCheckResult grad_check(const std::vector<Var>& params,
                                  const std::function<Var()>& make_loss, double eps = 1e-5,
                                  std::int64_t stride = 1) {
  if (stride < 1) throw ConfigError("grad_check: stride must be positive");
  zero_grad(params);
  backward(make_loss());
  std::vector<Tensor> analytic;
  analytic.reserve(params.size());
  for (const auto& p : params) analytic.push_back(p->grad);

  GradCheckResult res;
  for (std::size_t pi = 0; pi < params.size(); ++pi) {
    Node& p = *params[pi];
    for (std::int64_t j = 0; j < p.value.size(); j += stride) {
      const double saved = p.value[j];
      p.value[j] = saved + eps;
      const double up = make_loss()->value[0];
      p.value[j] = saved - eps;
      const double down = make_loss()->value[0];
      p.value[j] = saved;
      const double fd = (up - down) / (2.0 * eps);
      res.max_rel_error = std::max(res.max_rel_error, rel_error(analytic[pi][j], fd));
      ++res.elements_checked;
    }
  }
  return res;
}

}  // namespace lobbench::ad
