#pragma once

// Classification metrics over a 3x3 confusion matrix (rows = truth,
// columns = prediction). Every metric is a pure function of the counts.
//
// Degenerate-case conventions, pinned so single-class folds stay finite:
//  - precision of a never-predicted class is 0; recall of an absent class 0
//  - F1 is 0 when precision + recall is 0
//  - balanced accuracy averages recall over classes PRESENT in the truth
//  - MCC is 0 when either marginal has zero variance
//  - Cohen's kappa is 0 when expected agreement is 1

#include <array>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "lobbench/common.hpp"

namespace lobbench {

inline constexpr int kNumClasses = 3;

struct Confusion {
  std::array<std::array<std::int64_t, kNumClasses>, kNumClasses> counts{};

  void add(int truth, int pred, std::int64_t n = 1) {
    if (truth < 0 || truth >= kNumClasses || pred < 0 || pred >= kNumClasses)
      throw DataError("confusion: class index out of range");
    counts[static_cast<std::size_t>(truth)][static_cast<std::size_t>(pred)] += n;
  }

  std::int64_t at(int truth, int pred) const {
    return counts[static_cast<std::size_t>(truth)][static_cast<std::size_t>(pred)];
  }

  std::int64_t truth_total(int c) const {
    std::int64_t s = 0;
    for (int p = 0; p < kNumClasses; ++p) s += at(c, p);
    return s;
  }

  std::int64_t pred_total(int c) const {
    std::int64_t s = 0;
    for (int t = 0; t < kNumClasses; ++t) s += at(t, c);
    return s;
  }

  std::int64_t total() const {
    std::int64_t s = 0;
    for (int t = 0; t < kNumClasses; ++t) s += truth_total(t);
    return s;
  }

  std::int64_t diagonal() const {
    std::int64_t s = 0;
    for (int c = 0; c < kNumClasses; ++c) s += at(c, c);
    return s;
  }
};

struct Prf {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

inline Prf class_prf(const Confusion& m, int c) {
  Prf out;
  const std::int64_t tp = m.at(c, c);
  const std::int64_t predicted = m.pred_total(c);
  const std::int64_t actual = m.truth_total(c);
  out.precision = predicted > 0 ? static_cast<double>(tp) / static_cast<double>(predicted) : 0.0;
  out.recall = actual > 0 ? static_cast<double>(tp) / static_cast<double>(actual) : 0.0;
  const double pr = out.precision + out.recall;
  out.f1 = pr > 0.0 ? 2.0 * out.precision * out.recall / pr : 0.0;
  return out;
}

inline double balanced_accuracy(const Confusion& m) {
  double sum = 0.0;
  int present = 0;
  for (int c = 0; c < kNumClasses; ++c) {
    if (m.truth_total(c) > 0) {
      sum += class_prf(m, c).recall;
      ++present;
    }
  }
  if (present == 0) throw DataError("balanced accuracy: empty confusion");
  return sum / static_cast<double>(present);
}

struct WeightedPrf {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

// Support-weighted averages: weight of class c is its truth share.
inline WeightedPrf weighted_prf(const Confusion& m) {
  const std::int64_t n = m.total();
  if (n == 0) throw DataError("weighted metrics: empty confusion");
  WeightedPrf out;
  for (int c = 0; c < kNumClasses; ++c) {
    const double w = static_cast<double>(m.truth_total(c)) / static_cast<double>(n);
    const Prf prf = class_prf(m, c);
    out.precision += w * prf.precision;
    out.recall += w * prf.recall;
    out.f1 += w * prf.f1;
  }
  return out;
}

// Multiclass Matthews correlation, covariance form:
//   (c*s - sum_k t_k p_k) / sqrt((s^2 - sum p_k^2)(s^2 - sum t_k^2))
// where c = diagonal, s = total, t_k/p_k = truth/prediction totals.
inline double mcc(const Confusion& m) {
  const double s = static_cast<double>(m.total());
  if (s == 0.0) throw DataError("mcc: empty confusion");
  const double c = static_cast<double>(m.diagonal());
  double tp_dot = 0.0, t_sq = 0.0, p_sq = 0.0;
  for (int k = 0; k < kNumClasses; ++k) {
    const double t_k = static_cast<double>(m.truth_total(k));
    const double p_k = static_cast<double>(m.pred_total(k));
    tp_dot += t_k * p_k;
    t_sq += t_k * t_k;
    p_sq += p_k * p_k;
  }
  const double cov = c * s - tp_dot;
  const double var_p = s * s - p_sq;
  const double var_t = s * s - t_sq;
  if (var_p <= 0.0 || var_t <= 0.0) return 0.0;
  return cov / std::sqrt(var_p * var_t);
}

// Cohen's kappa: (p_o - p_e) / (1 - p_e), 0 when p_e == 1.
inline double cohen_kappa(const Confusion& m) {
  const double s = static_cast<double>(m.total());
  if (s == 0.0) throw DataError("kappa: empty confusion");
  const double p_o = static_cast<double>(m.diagonal()) / s;
  double p_e = 0.0;
  for (int k = 0; k < kNumClasses; ++k)
    p_e += (static_cast<double>(m.truth_total(k)) / s) *
           (static_cast<double>(m.pred_total(k)) / s);
  if (p_e >= 1.0) return 0.0;
  return (p_o - p_e) / (1.0 - p_e);
}

// The full per-fold metric row.
struct FoldMetrics {
  int fold = 0;
  Confusion confusion;
  double accuracy = 0.0;
  double balanced_accuracy = 0.0;
  WeightedPrf weighted;
  std::array<Prf, kNumClasses> per_class;
  double mcc = 0.0;
  double kappa = 0.0;

  static FoldMetrics from_confusion(int fold, const Confusion& m) {
    FoldMetrics out;
    out.fold = fold;
    out.confusion = m;
    const std::int64_t n = m.total();
    if (n == 0) throw DataError("fold metrics: empty confusion");
    out.accuracy = static_cast<double>(m.diagonal()) / static_cast<double>(n);
    out.balanced_accuracy = lobbench::balanced_accuracy(m);
    out.weighted = weighted_prf(m);
    for (int c = 0; c < kNumClasses; ++c)
      out.per_class[static_cast<std::size_t>(c)] = class_prf(m, c);
    out.mcc = lobbench::mcc(m);
    out.kappa = cohen_kappa(m);
    return out;
  }

  // Lookup used by the comparison stage; names are the stable CSV names.
  double metric(const std::string& name) const {
    if (name == "accuracy") return accuracy;
    if (name == "balanced_accuracy") return balanced_accuracy;
    if (name == "weighted_precision") return weighted.precision;
    if (name == "weighted_recall") return weighted.recall;
    if (name == "weighted_f1") return weighted.f1;
    if (name == "mcc") return mcc;
    if (name == "kappa") return kappa;
    if (name == "precision_down") return per_class[0].precision;
    if (name == "recall_down") return per_class[0].recall;
    if (name == "f1_down") return per_class[0].f1;
    if (name == "precision_flat") return per_class[1].precision;
    if (name == "recall_flat") return per_class[1].recall;
    if (name == "f1_flat") return per_class[1].f1;
    if (name == "precision_up") return per_class[2].precision;
    if (name == "recall_up") return per_class[2].recall;
    if (name == "f1_up") return per_class[2].f1;
    throw ConfigError("unknown metric: " + name);
  }
};

inline const std::vector<std::string>& all_metric_names() {
  static const std::vector<std::string> names = {
      "accuracy",       "balanced_accuracy", "weighted_precision", "weighted_recall",
      "weighted_f1",    "precision_down",    "recall_down",        "f1_down",
      "precision_flat", "recall_flat",       "f1_flat",            "precision_up",
      "recall_up",      "f1_up",             "mcc",                "kappa"};
  return names;
}

}  // namespace lobbench
