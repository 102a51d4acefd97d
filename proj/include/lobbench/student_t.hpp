#pragma once

// Student-t distribution pieces. The CDF goes through the regularized
// incomplete beta function evaluated with Lentz's continued fraction
// (double precision; absolute error well under 1e-12 for the dof used
// here), so the artifact needs no external special-function library.

#include <cmath>
#include <limits>
#include <stdexcept>

#include "lobbench/common.hpp"

namespace lobbench {

namespace detail {

// Continued fraction for the incomplete beta function (Lentz's method).
inline double betacf(double a, double b, double x) {
  constexpr int kMaxIter = 300;
  constexpr double kEps = 3e-16;
  constexpr double kTiny = 1e-300;
  const double qab = a + b;
  const double qap = a + 1.0;
  const double qam = a - 1.0;
  double c = 1.0;
  double d = 1.0 - qab * x / qap;
  if (std::abs(d) < kTiny) d = kTiny;
  d = 1.0 / d;
  double h = d;
  for (int m = 1; m <= kMaxIter; ++m) {
    const int m2 = 2 * m;
    double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
    d = 1.0 + aa * d;
    if (std::abs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::abs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    h *= d * c;
    aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
    d = 1.0 + aa * d;
    if (std::abs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::abs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::abs(del - 1.0) < kEps) return h;
  }
  throw NumericError("incomplete beta: continued fraction did not converge");
}

}  // namespace detail

// Regularized incomplete beta I_x(a, b).
inline double incomplete_beta(double a, double b, double x) {
  if (!(a > 0.0) || !(b > 0.0)) throw ConfigError("incomplete_beta: a, b must be positive");
  if (x < 0.0 || x > 1.0) throw ConfigError("incomplete_beta: x outside [0, 1]");
  if (x == 0.0) return 0.0;
  if (x == 1.0) return 1.0;
  const double ln_front = std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) +
                          a * std::log(x) + b * std::log1p(-x);
  const double front = std::exp(ln_front);
  // Use the fraction on the side where it converges fast.
  if (x < (a + 1.0) / (a + b + 2.0)) return front * detail::betacf(a, b, x) / a;
  return 1.0 - front * detail::betacf(b, a, 1.0 - x) / b;
}

// Standard Student-t density with `dof` degrees of freedom.
inline double student_t_pdf(double x, double dof) {
  if (!(dof > 0.0)) throw ConfigError("student_t_pdf: dof must be positive");
  const double ln = std::lgamma(0.5 * (dof + 1.0)) - std::lgamma(0.5 * dof) -
                    0.5 * std::log(dof * 3.14159265358979323846) -
                    0.5 * (dof + 1.0) * std::log1p(x * x / dof);
  return std::exp(ln);
}

// Standard Student-t CDF: F(x) with `dof` degrees of freedom.
//
// Deliberately not inlined: the pairwise comparator's exact-swap guarantee
// needs F to be the *same machine code* at every call site. When this body
// is inlined into different contexts the compiler may contract different
// multiply-adds into FMAs, and identical inputs then round differently.
#if defined(__GNUC__) || defined(__clang__)
__attribute__((noinline))
#endif
inline double student_t_cdf(double x, double dof) {
  if (!(dof > 0.0)) throw ConfigError("student_t_cdf: dof must be positive");
  if (x == 0.0) return 0.5;
  const double z = dof / (dof + x * x);
  const double tail = 0.5 * incomplete_beta(0.5 * dof, 0.5, z);
  return x > 0.0 ? 1.0 - tail : tail;
}

// CDF of a location-scale t variable: P(T <= x), T ~ t_dof(loc, scale).
inline double student_t_cdf(double x, double dof, double loc, double scale) {
  if (!(scale > 0.0)) throw ConfigError("student_t_cdf: scale must be positive");
  return student_t_cdf((x - loc) / scale, dof);
}

}  // namespace lobbench
