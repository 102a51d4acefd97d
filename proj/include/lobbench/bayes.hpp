#pragma once

// Bayesian model comparison on per-fold metric differences.
//
// For models A and B the fold-wise differences d_i = metric_B(i) -
// metric_A(i) share training data, so they are correlated; the correlated
// t-test posterior for the mean difference is a Student-t with location
// mean(d), scale sd(d) * sqrt(1/k + rho/(1-rho)) and k-1 degrees of
// freedom. Posterior mass is split across {below -rope, inside, above
// +rope}; mass below -rope favours A. Zero-variance differences collapse
// to a point mass rather than a degenerate t.
//
// Rankings come from the decisive verdicts: equivalence classes are grouped,
// dominance orders the groups, and relations that contradict each other
// (equivalence chains bridging a dominance edge, dominance cycles) are
// REPORTED as intersection entries, never silently dropped.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "lobbench/common.hpp"
#include "lobbench/student_t.hpp"

namespace lobbench {

inline constexpr double kDefaultRope = 0.03;
inline constexpr double kDefaultVerdictThreshold = 0.95;

struct PairedDiffs {
  std::string model_a, model_b;
  std::string metric;
  int horizon = 0;
  std::vector<double> diffs;  // fold-wise metric(model_b) - metric(model_a)
  double rho = -1.0;          // correlation; <= 0 requests the 1/k default
};

struct TPosterior {
  bool point_mass = false;
  double location = 0.0;
  double scale = 0.0;  // 0 for point mass
  double dof = 0.0;
  double rho_used = 0.0;
};

inline TPosterior fit_posterior(const PairedDiffs& in) {
  const std::size_t k = in.diffs.size();
  if (k < 2) throw DataError("posterior: need at least two folds");
  if (in.rho >= 1.0) throw ConfigError("posterior: rho must be below 1");
  TPosterior post;
  post.rho_used = in.rho > 0.0 ? in.rho : 1.0 / static_cast<double>(k);
  double mean = 0.0;
  for (const double d : in.diffs) mean += d;
  mean /= static_cast<double>(k);
  double var = 0.0;
  for (const double d : in.diffs) var += (d - mean) * (d - mean);
  var /= static_cast<double>(k - 1);
  post.location = mean;
  post.dof = static_cast<double>(k - 1);
  if (var == 0.0) {
    post.point_mass = true;
    post.scale = 0.0;
    return post;
  }
  post.scale = std::sqrt(var * (1.0 / static_cast<double>(k) +
                                post.rho_used / (1.0 - post.rho_used)));
  return post;
}

struct RopeProbs {
  double p_left = 0.0;   // P(mean diff < -rope): A outperforms B
  double p_rope = 0.0;   // P(-rope <= mean diff <= rope): practically equal
  double p_right = 0.0;  // P(mean diff > rope): B outperforms A
};

inline RopeProbs rope_probabilities(const TPosterior& post, double rope) {
  if (rope < 0.0) throw ConfigError("rope half-width must be non-negative");
  RopeProbs p;
  if (post.point_mass) {
    // closed rope interval: a point mass exactly on the edge counts inside
    if (post.location < -rope) p.p_left = 1.0;
    else if (post.location > rope) p.p_right = 1.0;
    else p.p_rope = 1.0;
    return p;
  }
  // Evaluate both tails as *lower*-tail CDF calls: p_right uses the density's
  // symmetry (1 - F(z) == F(-z)) instead of subtracting from one, so swapping
  // the pair (which negates the location exactly) swaps p_left and p_right
  // bitwise and keeps small tail masses at full precision.
  const double zl = (-rope - post.location) / post.scale;
  const double zr = (rope - post.location) / post.scale;
  p.p_left = student_t_cdf(zl, post.dof);
  p.p_right = student_t_cdf(-zr, post.dof);
  p.p_rope = student_t_cdf(zr, post.dof) - p.p_left;
  return p;
}

enum class VerdictRegion : int { a_better = 0, equivalent = 1, b_better = 2 };

struct Verdict {
  VerdictRegion region = VerdictRegion::equivalent;
  bool decisive = false;
};

// Decisive when the winning region's mass exceeds the threshold; otherwise
// an "undecided, leaning X" verdict that imposes no ranking constraint.
// Ties lean to equivalence.
inline Verdict decide(const RopeProbs& p, double threshold = kDefaultVerdictThreshold) {
  if (!(threshold > 0.5 && threshold <= 1.0))
    throw ConfigError("verdict threshold must be in (0.5, 1]");
  Verdict v;
  double best = p.p_rope;
  v.region = VerdictRegion::equivalent;
  if (p.p_left > best) {
    best = p.p_left;
    v.region = VerdictRegion::a_better;
  }
  if (p.p_right > best) {
    best = p.p_right;
    v.region = VerdictRegion::b_better;
  }
  if (v.region != VerdictRegion::equivalent) {
    // exact symmetric tie between the outer regions leans to equivalence
    if (p.p_left == p.p_right) {
      v.region = VerdictRegion::equivalent;
      best = p.p_rope;
    }
  }
  v.decisive = best > threshold;
  return v;
}

inline std::string verdict_string(const Verdict& v) {
  const char* region = v.region == VerdictRegion::a_better     ? "a_better"
                       : v.region == VerdictRegion::b_better   ? "b_better"
                                                               : "equivalent";
  return v.decisive ? region : std::string("undecided_lean_") + region;
}

inline Verdict verdict_from_string(const std::string& s) {
  Verdict v;
  std::string region = s;
  v.decisive = true;
  if (s.rfind("undecided_lean_", 0) == 0) {
    v.decisive = false;
    region = s.substr(15);
  }
  if (region == "a_better") v.region = VerdictRegion::a_better;
  else if (region == "b_better") v.region = VerdictRegion::b_better;
  else if (region == "equivalent") v.region = VerdictRegion::equivalent;
  else throw DataError("unknown verdict: " + s);
  return v;
}

struct PairDecision {
  std::string model_a, model_b, metric;
  int horizon = 0;
  int folds = 0;
  TPosterior post;
  RopeProbs probs;
  Verdict verdict;
  double rope = kDefaultRope;
  double threshold = kDefaultVerdictThreshold;
};

inline PairDecision compare_pair(const PairedDiffs& diffs, double rope = kDefaultRope,
                                 double threshold = kDefaultVerdictThreshold) {
  PairDecision d;
  d.model_a = diffs.model_a;
  d.model_b = diffs.model_b;
  d.metric = diffs.metric;
  d.horizon = diffs.horizon;
  d.folds = static_cast<int>(diffs.diffs.size());
  d.post = fit_posterior(diffs);
  d.probs = rope_probabilities(d.post, rope);
  d.verdict = decide(d.probs, threshold);
  d.rope = rope;
  d.threshold = threshold;
  return d;
}

// --- decisions CSV ------------------------------------------------------------

inline const char* kDecisionsCsvHeader =
    "model_a,model_b,metric,horizon,folds,mean_diff_b_minus_a,scale,dof,rho,rope,threshold,"
    "p_left,p_rope,p_right,verdict";

inline void write_decisions_csv(const std::string& path,
                                const std::vector<PairDecision>& decisions,
                                const std::string& comment = {}) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot open decisions file for write: " + path);
  if (!comment.empty()) out << "# " << comment << '\n';
  out << kDecisionsCsvHeader << '\n';
  for (const auto& d : decisions) {
    out << d.model_a << ',' << d.model_b << ',' << d.metric << ',' << d.horizon << ','
        << d.folds << ',' << format_double(d.post.location) << ','
        << format_double(d.post.scale) << ',' << format_double(d.post.dof) << ','
        << format_double(d.post.rho_used) << ',' << format_double(d.rope) << ','
        << format_double(d.threshold) << ',' << format_double(d.probs.p_left) << ','
        << format_double(d.probs.p_rope) << ',' << format_double(d.probs.p_right) << ','
        << verdict_string(d.verdict) << '\n';
  }
  if (!out) throw DataError("write failed: " + path);
}

inline std::vector<PairDecision> read_decisions_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open decisions file: " + path);
  std::string line;
  std::vector<PairDecision> out;
  std::size_t line_no = 0;
  bool header_seen = false;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line[0] == '#') continue;
    if (!header_seen) {
      if (line != kDecisionsCsvHeader)
        throw DataError("decisions file has unexpected header: " + path);
      header_seen = true;
      continue;
    }
    const auto f = split_csv_row(line);
    const std::string where = path + ":" + std::to_string(line_no);
    if (f.size() != 15) throw DataError(where + ": expected 15 fields");
    PairDecision d;
    d.model_a = std::string(f[0]);
    d.model_b = std::string(f[1]);
    d.metric = std::string(f[2]);
    d.horizon = static_cast<int>(parse_int_field(f[3], where));
    d.folds = static_cast<int>(parse_int_field(f[4], where));
    d.post.location = parse_double_field(f[5], where);
    d.post.scale = parse_double_field(f[6], where);
    d.post.point_mass = d.post.scale == 0.0;
    d.post.dof = parse_double_field(f[7], where);
    d.post.rho_used = parse_double_field(f[8], where);
    d.rope = parse_double_field(f[9], where);
    d.threshold = parse_double_field(f[10], where);
    d.probs.p_left = parse_double_field(f[11], where);
    d.probs.p_rope = parse_double_field(f[12], where);
    d.probs.p_right = parse_double_field(f[13], where);
    d.verdict = verdict_from_string(std::string(f[14]));
    out.push_back(std::move(d));
  }
  if (!header_seen) throw DataError("decisions file empty: " + path);
  return out;
}

}  // namespace lobbench
