// Acceptance gate: eight structural criteria, each printed as a single
// [PASS]/[FAIL] line with its pinned tolerance and the measured value.
// Exit code = number of failed criteria.
//
//   1 gradient checks on every layer family     (rel err < 1e-4, < 2 min)
//   2 metrics vs extended-precision oracles     (1000 matrices, 1e-12)
//   3 event-time labelling vs linear-scan oracle (exact, + 100 augmentations)
//   4 quantile class masses 25/50/25             (tie-induced bound, boundary)
//   5 baseline metrics                           (random BA/MCC, naive recalls)
//   6 Bayesian comparator invariants             (rope limits, quadrature, swap)
//   7 desk-scale end-to-end reproduction         (MCC floors, tiers, < 15 min)
//   8 same-seed determinism                      (byte-identical outputs)

#include <chrono>
#include <cmath>
#include <cstdarg>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "lobbench/experiment.hpp"
#include "lobbench/grad_check.hpp"

using namespace lobbench;
using namespace lobbench::ad;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw DataError("cannot read " + p.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string fmt(const char* f, ...) {
  char buf[512];
  va_list args;
  va_start(args, f);
  std::vsnprintf(buf, sizeof(buf), f, args);
  va_end(args);
  return buf;
}

// ---------------------------------------------------------------------------
// Criterion 1: finite-difference gradient checks, every layer family
// ---------------------------------------------------------------------------

// Asymmetric positive weights make the reduction sensitive to element
// permutation bugs that a plain sum of squares would hide.
ad::Var weighted_sumsq(const ad::Var& y) {
  Tensor w = y->value;
  for (std::int64_t i = 0; i < w.size(); ++i)
    w[i] = std::sin(static_cast<double>(i)) + 1.5;
  return ad::sumsq(ad::mul(y, ad::constant(w)));
}

Outcome criterion1() {
  constexpr double kTol = 1e-4;
  constexpr double kBudget = 120.0;
  constexpr int kSeeds = 20;
  const auto t0 = std::chrono::steady_clock::now();

  struct Family {
    const char* name;
    double max_rel = 0.0;
  };
  std::vector<Family> families = {{"dense"},     {"lstm"},           {"conv2d"},
                                  {"inception"}, {"self-attention"}, {"softmax-ce"}};

  for (int s = 0; s < kSeeds; ++s) {
    const std::uint64_t seed = 9000 + static_cast<std::uint64_t>(s);
    {
      Rng rng(seed);
      DenseLayer l = DenseLayer::create(7, 4, "d", rng);
      const ad::Var x = ad::constant(uniform_tensor({5, 7}, 1.0, rng));
      const auto r = ad::grad_check(l.params(), [&] { return weighted_sumsq(l.apply(x)); });
      families[0].max_rel = std::max(families[0].max_rel, r.max_rel_error);
    }
    {
      Rng rng(seed);
      LstmLayer l = LstmLayer::create(4, 3, "l", rng);
      const ad::Var x = ad::constant(uniform_tensor({2, 12}, 1.0, rng));
      const auto r = ad::grad_check(
          l.params(), [&] { return weighted_sumsq(l.apply(x, 3).sequence); });
      families[1].max_rel = std::max(families[1].max_rel, r.max_rel_error);
    }
    {
      Rng rng(seed);
      // alternate geometry: SAME with a 3x2 kernel, VALID with stride 2
      const ConvGeom geom =
          (s % 2 == 0) ? ad::make_conv_geom(5, 2, 3, 2, 3, 2, 1, 1, ad::Padding::same)
                       : ad::make_conv_geom(6, 2, 3, 3, 2, 2, 2, 1, ad::Padding::valid);
      Conv2dLayer l = Conv2dLayer::create(geom, "c", rng, -1.0);  // pure conv + bias
      const ad::Var x = ad::constant(uniform_tensor({2, geom.in_t * geom.in_w * geom.in_c},
                                                    1.0, rng));
      const auto r = ad::grad_check(l.params(), [&] { return weighted_sumsq(l.apply(x)); });
      families[2].max_rel = std::max(families[2].max_rel, r.max_rel_error);
    }
    {
      Rng rng(seed);
      InceptionBlock l = InceptionBlock::create(5, 4, 3, "i", rng);
      const ad::Var x = ad::constant(uniform_tensor({2, 20}, 1.0, rng));
      const auto r = ad::grad_check(l.params(), [&] { return weighted_sumsq(l.apply(x)); });
      families[3].max_rel = std::max(families[3].max_rel, r.max_rel_error);
    }
    {
      Rng rng(seed);
      SelfAttentionLayer l = SelfAttentionLayer::create(4, "a", rng);
      const ad::Var x = ad::constant(uniform_tensor({2, 12}, 1.0, rng));
      const auto r =
          ad::grad_check(l.params(), [&] { return weighted_sumsq(l.apply(x, 3)); });
      families[4].max_rel = std::max(families[4].max_rel, r.max_rel_error);
    }
    {
      Rng rng(seed);
      const ad::Var logits = ad::parameter(uniform_tensor({8, 3}, 2.0, rng), "logits");
      Tensor onehot = Tensor::zeros({8, 3});
      for (std::int64_t i = 0; i < 8; ++i) onehot[i * 3 + rng.uniform_int(0, 2)] = 1.0;
      const auto r = ad::grad_check(
          {logits}, [&] { return ad::softmax_cross_entropy(logits, onehot); });
      families[5].max_rel = std::max(families[5].max_rel, r.max_rel_error);
    }
  }

  const double elapsed = seconds_since(t0);
  double worst = 0.0;
  std::string worst_name = "none";
  for (const auto& f : families) {
    if (f.max_rel > worst) {
      worst = f.max_rel;
      worst_name = f.name;
    }
  }
  const bool pass = worst < kTol && elapsed < kBudget;
  return {pass, fmt("max rel err %.2e (%s; tol 1e-4), 6 families x %d seeds, %.1fs "
                    "(budget 120s)",
                    worst, worst_name.c_str(), kSeeds, elapsed)};
}

// ---------------------------------------------------------------------------
// Criterion 2: metric oracle equivalence in extended precision
// ---------------------------------------------------------------------------

// Direct-formula oracle in long double, arranged like all_metric_names().
// Shares no code with the library implementation.
std::vector<long double> metric_oracle(const std::array<std::array<long long, 3>, 3>& m) {
  long double row[3] = {}, col[3] = {}, n = 0.0L, diag = 0.0L;
  for (int t = 0; t < 3; ++t) {
    for (int p = 0; p < 3; ++p) {
      const long double v = static_cast<long double>(m[static_cast<std::size_t>(t)]
                                                      [static_cast<std::size_t>(p)]);
      row[t] += v;
      col[p] += v;
      n += v;
      if (t == p) diag += v;
    }
  }
  long double prec[3], rec[3], f1[3];
  for (int c = 0; c < 3; ++c) {
    const long double tp = static_cast<long double>(m[static_cast<std::size_t>(c)]
                                                     [static_cast<std::size_t>(c)]);
    prec[c] = col[c] > 0.0L ? tp / col[c] : 0.0L;
    rec[c] = row[c] > 0.0L ? tp / row[c] : 0.0L;
    f1[c] = (prec[c] + rec[c]) > 0.0L ? 2.0L * prec[c] * rec[c] / (prec[c] + rec[c]) : 0.0L;
  }
  long double ba = 0.0L;
  int present = 0;
  for (int c = 0; c < 3; ++c)
    if (row[c] > 0.0L) {
      ba += rec[c];
      ++present;
    }
  ba /= static_cast<long double>(present);
  long double wp = 0.0L, wr = 0.0L, wf = 0.0L;
  for (int c = 0; c < 3; ++c) {
    const long double w = row[c] / n;
    wp += w * prec[c];
    wr += w * rec[c];
    wf += w * f1[c];
  }
  long double tp_dot = 0.0L, t_sq = 0.0L, p_sq = 0.0L;
  for (int c = 0; c < 3; ++c) {
    tp_dot += row[c] * col[c];
    t_sq += row[c] * row[c];
    p_sq += col[c] * col[c];
  }
  const long double var_t = n * n - t_sq;
  const long double var_p = n * n - p_sq;
  const long double mcc_v =
      (var_t <= 0.0L || var_p <= 0.0L) ? 0.0L : (diag * n - tp_dot) / sqrtl(var_p * var_t);
  const long double p_o = diag / n;
  const long double p_e = tp_dot / (n * n);
  const long double kappa_v = p_e >= 1.0L ? 0.0L : (p_o - p_e) / (1.0L - p_e);

  return {diag / n, ba,      wp,      wr,      wf,      prec[0], rec[0],  f1[0],
          prec[1],  rec[1],  f1[1],   prec[2], rec[2],  f1[2],   mcc_v,   kappa_v};
}

Outcome criterion2() {
  constexpr long double kTol = 1e-12L;
  std::mt19937_64 gen(24680);
  long double worst = 0.0L;
  std::string worst_name;
  for (int rep = 0; rep < 1000; ++rep) {
    std::array<std::array<long long, 3>, 3> counts{};
    for (auto& r : counts)
      for (auto& v : r) v = static_cast<long long>(gen() % 201);
    if (rep % 7 == 0) counts[gen() % 3] = {0, 0, 0};  // absent truth class
    if (rep % 11 == 0) {                              // never-predicted class
      const std::size_t c = gen() % 3;
      for (auto& r : counts) r[c] = 0;
    }
    long long total = 0;
    for (const auto& r : counts)
      for (const long long v : r) total += v;
    if (total == 0) counts[1][1] = 1;

    Confusion conf;
    for (int t = 0; t < 3; ++t)
      for (int p = 0; p < 3; ++p)
        conf.add(t, p, counts[static_cast<std::size_t>(t)][static_cast<std::size_t>(p)]);
    const FoldMetrics fm = FoldMetrics::from_confusion(0, conf);
    const std::vector<long double> oracle = metric_oracle(counts);
    const auto& names = all_metric_names();
    for (std::size_t i = 0; i < names.size(); ++i) {
      const long double diff =
          fabsl(static_cast<long double>(fm.metric(names[i])) - oracle[i]);
      if (diff > worst) {
        worst = diff;
        worst_name = names[i];
      }
    }
  }
  const bool pass = worst <= kTol;
  return {pass, fmt("max |diff| %.2Le (%s; tol 1e-12) over 1000 random confusions x 16 "
                    "metrics",
                    worst, worst_name.empty() ? "-" : worst_name.c_str())};
}

// ---------------------------------------------------------------------------
// Criterion 3: event-time labelling against a linear-scan oracle
// ---------------------------------------------------------------------------

Outcome criterion3() {
  Rng rng(31415);
  std::vector<double> mids(10001);
  mids[0] = 100.0;
  for (std::size_t i = 1; i < mids.size(); ++i) {
    const double step = rng.bernoulli(0.5) ? 0.0 : (rng.bernoulli(0.5) ? 0.01 : -0.01);
    mids[i] = mids[i - 1] + step;
  }
  const std::vector<double> returns = log_returns(mids);
  std::size_t zeros = 0;
  for (const double r : returns)
    if (r == 0.0) ++zeros;
  const double zero_share = static_cast<double>(zeros) / static_cast<double>(returns.size());
  if (zero_share < 0.45 || zero_share > 0.55)
    return {false, fmt("zero-return share %.3f outside [0.45, 0.55]", zero_share)};

  // independent counting oracle
  const auto oracle = [&](std::size_t t, int dtau) -> std::optional<std::size_t> {
    std::size_t seen = 0;
    for (std::size_t k = t; k < returns.size(); ++k) {
      if (returns[k] != 0.0 && static_cast<int>(++seen) == dtau) return k + 1;
    }
    return std::nullopt;
  };

  const EventTimeIndex index(returns);
  std::size_t checked = 0;
  for (const int dtau : {10, 50, 100}) {
    const HorizonSpec h{dtau};
    for (std::size_t t = 0; t < returns.size(); ++t) {
      const auto want = oracle(t, dtau);
      if (horizon_endpoint(returns, t, h) != want || index.endpoint(t, h) != want)
        return {false, fmt("endpoint mismatch at t=%zu dtau=%d", t, dtau)};
      ++checked;
    }
  }

  // zero-insertion invariance: duplicated ticks never change any target
  std::size_t verified = 0;
  for (int rep = 0; rep < 100; ++rep) {
    const std::size_t j = rng.index(mids.size());
    std::vector<double> aug;
    aug.reserve(mids.size() + 1);
    aug.insert(aug.end(), mids.begin(), mids.begin() + static_cast<std::ptrdiff_t>(j + 1));
    aug.push_back(mids[j]);  // duplicate: one zero-return tick
    aug.insert(aug.end(), mids.begin() + static_cast<std::ptrdiff_t>(j + 1), mids.end());
    for (const int dtau : {10, 50, 100}) {
      const HorizonSpec h{dtau};
      const HorizonTargets orig = compute_horizon_targets(mids, h);
      const HorizonTargets moved = compute_horizon_targets(aug, h);
      for (std::size_t i = 0; i < orig.t.size(); ++i) {
        const auto t = static_cast<std::size_t>(orig.t[i]);
        const std::size_t mapped = t > j ? t + 1 : t;
        if (mapped >= moved.target.size() || moved.target[mapped] != orig.target[i])
          return {false, fmt("augmentation %d changed the target at t=%zu dtau=%d",
                             rep, t, dtau)};
        ++verified;
      }
    }
  }
  return {true, fmt("3 horizons exact at %zu starts; 100 zero insertions left %zu "
                    "targets unchanged",
                    checked / 3, verified)};
}

// ---------------------------------------------------------------------------
// Criterion 4: quantile construction on the fitting sample
// ---------------------------------------------------------------------------

Outcome criterion4() {
  Rng rng(27182);
  std::vector<double> targets(100003);
  for (auto& v : targets) {
    const double x = rng.normal() * 0.01;
    // 40% of values snap to a coarse grid so exact threshold ties occur
    v = rng.bernoulli(0.4) ? std::round(x * 2000.0) / 2000.0 : x;
  }
  const QuantileThresholds th = fit_quantile_thresholds(targets);

  std::size_t counts[3] = {0, 0, 0};
  std::size_t ties25 = 0, ties75 = 0;
  for (const double v : targets) {
    ++counts[static_cast<std::size_t>(class_index(classify_return(v, th)))];
    if (v == th.q25) ++ties25;
    if (v == th.q75) ++ties75;
  }
  const auto n = static_cast<double>(targets.size());
  // ties at a threshold all land in flat; interpolation adds at most a
  // couple of samples of slack on each edge
  const double bound_down = (static_cast<double>(ties25) + 2.5) / n + 1e-12;
  const double bound_up = (static_cast<double>(ties75) + 2.5) / n + 1e-12;
  const double bound_flat = bound_down + bound_up;
  const double m_down = static_cast<double>(counts[0]) / n;
  const double m_flat = static_cast<double>(counts[1]) / n;
  const double m_up = static_cast<double>(counts[2]) / n;

  const bool masses_ok = std::abs(m_down - 0.25) <= bound_down &&
                         std::abs(m_flat - 0.50) <= bound_flat &&
                         std::abs(m_up - 0.25) <= bound_up;
  const bool boundary_ok = classify_return(th.q25, th) == MoveClass::flat &&
                           classify_return(th.q75, th) == MoveClass::flat;
  return {masses_ok && boundary_ok,
          fmt("masses %.4f/%.4f/%.4f (bounds +-%.1e/+-%.1e via %zu+%zu threshold ties), "
              "boundaries -> flat: %s",
              m_down, m_flat, m_up, bound_down, bound_up, ties25, ties75,
              boundary_ok ? "yes" : "NO")};
}

// ---------------------------------------------------------------------------
// Criterion 5: baseline metrics at scale
// ---------------------------------------------------------------------------

Outcome criterion5() {
  constexpr std::size_t kN = 1000000;
  Rng label_rng(55501);
  std::vector<int> truth(kN);
  for (auto& t : truth) {
    const double u = label_rng.uniform();
    t = u < 0.25 ? 0 : (u < 0.75 ? 1 : 2);
  }

  Rng pred_rng(55502);
  const std::vector<int> random_preds = random_predictions(kN, pred_rng);
  Confusion random_conf;
  for (std::size_t i = 0; i < kN; ++i) random_conf.add(truth[i], random_preds[i]);
  const FoldMetrics rm = FoldMetrics::from_confusion(0, random_conf);

  const std::vector<int> naive_preds = naive_predictions(kN);
  Confusion naive_conf;
  for (std::size_t i = 0; i < kN; ++i) naive_conf.add(truth[i], naive_preds[i]);
  const FoldMetrics nm = FoldMetrics::from_confusion(0, naive_conf);

  const bool random_ok =
      std::abs(rm.balanced_accuracy - 0.33) <= 0.01 && std::abs(rm.mcc) < 0.01;
  const bool naive_ok = nm.per_class[1].recall == 1.0 && nm.per_class[0].recall == 0.0 &&
                        nm.per_class[2].recall == 0.0 && nm.mcc == 0.0;
  return {random_ok && naive_ok,
          fmt("random BA %.4f (0.33+-0.01), |MCC| %.2e (<0.01); naive recalls "
              "down/flat/up %.0f/%.0f/%.0f (want 0/1/0), MCC %.1f exactly, n=1e6",
              rm.balanced_accuracy, std::abs(rm.mcc), nm.per_class[0].recall,
              nm.per_class[1].recall, nm.per_class[2].recall, nm.mcc)};
}

// ---------------------------------------------------------------------------
// Criterion 6: Bayesian comparator invariants
// ---------------------------------------------------------------------------

double simpson_leg(double a, double b, double fa, double fm, double fb) {
  return (b - a) / 6.0 * (fa + 4.0 * fm + fb);
}

double adaptive(double dof, double a, double b, double fa, double fm, double fb,
                double whole, double tol, int depth) {
  const double m = 0.5 * (a + b);
  const double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
  const double flm = student_t_pdf(lm, dof), frm = student_t_pdf(rm, dof);
  const double left = simpson_leg(a, m, fa, flm, fm);
  const double right = simpson_leg(m, b, fm, frm, fb);
  if (depth <= 0 || std::abs(left + right - whole) < 15.0 * tol)
    return left + right + (left + right - whole) / 15.0;
  return adaptive(dof, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1) +
         adaptive(dof, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1);
}

double quadrature_cdf(double z, double dof) {
  const double a = std::min(z, 0.0), b = std::max(z, 0.0);
  const double fa = student_t_pdf(a, dof), fb = student_t_pdf(b, dof);
  const double fm = student_t_pdf(0.5 * (a + b), dof);
  const double leg = adaptive(dof, a, b, fa, fm, fb, simpson_leg(a, b, fa, fm, fb),
                              1e-12, 40);
  return z >= 0.0 ? 0.5 + leg : 0.5 - leg;
}

PairedDiffs diffs_of(std::vector<double> d) {
  PairedDiffs p;
  p.model_a = "a";
  p.model_b = "b";
  p.metric = "mcc";
  p.horizon = 10;
  p.diffs = std::move(d);
  return p;
}

Outcome criterion6() {
  // degenerate limits
  const PairDecision zero = compare_pair(diffs_of({0.0, 0.0, 0.0, 0.0, 0.0}), 0.03);
  if (zero.probs.p_rope != 1.0)
    return {false, fmt("zero diffs: p_rope %.17g != 1", zero.probs.p_rope)};
  const PairDecision shifted = compare_pair(diffs_of({0.5, 0.5, 0.5, 0.5}), 0.03);
  if (shifted.probs.p_right != 1.0)
    return {false, fmt("constant +0.5 diffs: p_right %.17g != 1", shifted.probs.p_right)};

  // symmetric differences: left and right mass balance
  double worst_sym = 0.0;
  for (const auto& d : {std::vector<double>{-0.5, -0.25, 0.0, 0.25, 0.5},
                        std::vector<double>{-0.375, -0.125, 0.125, 0.375}}) {
    const PairDecision sym = compare_pair(diffs_of(d), 0.03);
    worst_sym = std::max(worst_sym, std::abs(sym.probs.p_left - sym.probs.p_right));
  }
  if (worst_sym >= 1e-9)
    return {false, fmt("symmetric diffs: |p_left - p_right| %.2e >= 1e-9", worst_sym)};

  // CDF vs quadrature over location +-10 scales
  double worst_quad = 0.0;
  for (const double dof : {2.0, 4.5, 9.0, 30.0, 100.0}) {
    for (double z = -10.0; z <= 10.0; z += 1.25) {
      worst_quad = std::max(worst_quad, std::abs(student_t_cdf(z, dof) - quadrature_cdf(z, dof)));
    }
  }
  if (worst_quad > 1e-8)
    return {false, fmt("CDF vs quadrature: max |diff| %.2e > 1e-8", worst_quad)};

  // antisymmetry under pair swap: bitwise, including the posterior location
  Rng rng(60606);
  for (int rep = 0; rep < 50; ++rep) {
    std::vector<double> d(5), neg(5);
    for (std::size_t i = 0; i < d.size(); ++i) {
      d[i] = rng.uniform(-0.2, 0.2);
      neg[i] = -d[i];
    }
    const PairDecision ab = compare_pair(diffs_of(d), 0.03);
    const PairDecision ba = compare_pair(diffs_of(neg), 0.03);
    if (ab.probs.p_left != ba.probs.p_right || ab.probs.p_right != ba.probs.p_left ||
        ab.post.location != -ba.post.location)
      return {false, fmt("pair swap not exact at rep %d", rep)};
  }

  return {true, fmt("rope limits exact; sym |pL-pR| %.1e (<1e-9); CDF vs quadrature "
                    "%.1e (<=1e-8); 50 pair swaps bitwise",
                    worst_sym, worst_quad)};
}

// ---------------------------------------------------------------------------
// Criteria 7 and 8: desk-scale end-to-end run and its determinism
// ---------------------------------------------------------------------------

ExperimentConfig desk_scale_config(const fs::path& out) {
  ExperimentConfig cfg;
  cfg.seed = 4242;
  cfg.out_dir = out.string();
  cfg.workers = 1;
  cfg.data.synthetic.events = 200000;
  cfg.data.synthetic.signal_strength = 0.9;
  cfg.horizons = {10, 50};
  cfg.models = {ModelKind::random, ModelKind::naive, ModelKind::mlp, ModelKind::cnn_lstm};
  cfg.train.batch_size = 256;
  cfg.train.batches_per_epoch = 200;
  cfg.train.epochs = 5;
  cfg.eval.fold_size = 10000;
  return cfg;
}

struct DeskScale {
  Outcome c7;
  Outcome c8;
};

DeskScale criterion7_and_8(const fs::path& root) {
  DeskScale out;
  const fs::path dir_a = root / "run_a";
  const fs::path dir_b = root / "run_b";

  const auto t0 = std::chrono::steady_clock::now();
  ExperimentRun run_a(desk_scale_config(dir_a));
  run_a.run_all();
  const double elapsed = seconds_since(t0);

  // per-fold MCC floors and ceilings
  const auto rows = read_metrics_csv((dir_a / "metrics.csv").string());
  double min_trained = 1.0, max_baseline = 0.0;
  for (const auto& r : rows) {
    const double v = r.metrics.metric("mcc");
    if (r.model == "mlp" || r.model == "cnn_lstm")
      min_trained = std::min(min_trained, v);
    else
      max_baseline = std::max(max_baseline, std::abs(v));
  }

  // rankings: every trained model strictly above both baselines
  int strict = 0, wanted = 0;
  {
    const auto doc = nlohmann::json::parse(slurp(dir_a / "ranking.json"));
    std::map<std::pair<std::string, int>, Ranking> by_key;
    for (const auto& item : doc.at("rankings")) {
      Ranking r = ranking_from_json(item);
      by_key[{r.metric, r.horizon}] = std::move(r);
    }
    for (const std::string metric : {"mcc", "weighted_f1"}) {
      for (const int horizon : {10, 50}) {
        ++wanted;
        const auto it = by_key.find({metric, horizon});
        if (it == by_key.end()) continue;
        const Ranking& r = it->second;
        bool ok = true;
        for (const char* trained : {"mlp", "cnn_lstm"}) {
          const int tt = r.tier_of(trained);
          for (const char* baseline : {"random", "naive"}) {
            const int tb = r.tier_of(baseline);
            if (tt < 0 || tb < 0 || tt >= tb) ok = false;
          }
        }
        if (ok) ++strict;
      }
    }
  }

  const bool pass7 =
      min_trained > 0.2 && max_baseline < 0.05 && strict == wanted && elapsed < 900.0;
  out.c7 = {pass7, fmt("min trained-fold MCC %.3f (>0.2), max baseline |MCC| %.3f "
                       "(<0.05), strict tiers %d/%d (mcc & weighted_f1 x 2 horizons), "
                       "%.0fs (budget 900s)",
                       min_trained, max_baseline, strict, wanted, elapsed)};

  // same-seed rerun into a fresh directory: byte-identical outputs
  ExperimentConfig cfg_b = desk_scale_config(dir_b);
  ExperimentRun run_b(cfg_b);
  run_b.run_all();
  const bool metrics_same = slurp(dir_a / "metrics.csv") == slurp(dir_b / "metrics.csv");
  const bool ranking_same = slurp(dir_a / "ranking.json") == slurp(dir_b / "ranking.json");
  out.c8 = {metrics_same && ranking_same,
            fmt("same-seed rerun: metrics.csv %s, ranking.json %s",
                metrics_same ? "byte-identical" : "DIFFERS",
                ranking_same ? "byte-identical" : "DIFFERS")};
  return out;
}

}  // namespace

int main() {
  const fs::path root = fs::temp_directory_path() / "lobbench_acceptance";
  std::error_code ec;
  fs::remove_all(root, ec);

  std::vector<std::pair<std::string, Outcome>> results;
  const auto guard = [&results](const char* name, auto fn) {
    try {
      results.emplace_back(name, fn());
    } catch (const std::exception& e) {
      results.emplace_back(name, Outcome{false, std::string("exception: ") + e.what()});
    }
  };

  guard("criterion-1 gradient-checks", criterion1);
  guard("criterion-2 metric-oracles", criterion2);
  guard("criterion-3 event-time-labelling", criterion3);
  guard("criterion-4 quantile-masses", criterion4);
  guard("criterion-5 baseline-metrics", criterion5);
  guard("criterion-6 bayes-comparator", criterion6);
  try {
    const DeskScale ds = criterion7_and_8(root);
    results.emplace_back("criterion-7 desk-scale-structure", ds.c7);
    results.emplace_back("criterion-8 determinism", ds.c8);
  } catch (const std::exception& e) {
    const Outcome failed{false, std::string("exception: ") + e.what()};
    results.emplace_back("criterion-7 desk-scale-structure", failed);
    results.emplace_back("criterion-8 determinism", failed);
  }

  int failures = 0;
  for (const auto& [name, outcome] : results) {
    std::printf("[%s] %s: %s\n", outcome.pass ? "PASS" : "FAIL", name.c_str(),
                outcome.detail.c_str());
    if (!outcome.pass) ++failures;
  }
  std::printf("acceptance: %zu/%zu criteria passed\n", results.size() - failures,
              results.size());

  fs::remove_all(root, ec);
  return failures;
}
