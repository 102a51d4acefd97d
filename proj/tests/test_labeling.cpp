// Event-time horizon labelling: endpoints that count non-zero returns,
// quantile thresholds, class assignment, and the label CSV.

#include <catch2/catch_amalgamated.hpp>

#include <cstdio>
#include <filesystem>

#include "lobbench/common.hpp"
#include "lobbench/labeling.hpp"

using namespace lobbench;

namespace {

const std::vector<double> kMids = {100.0, 100.0, 101.0, 101.0, 99.0, 99.0,
                                   99.0,  102.0, 103.0, 103.0, 101.0};

std::vector<double> random_mids(Rng& rng, std::size_t n, double zero_fraction) {
  std::vector<double> mids(n);
  double m = 100.0;
  for (std::size_t i = 0; i < n; ++i) {
    if (i > 0 && !rng.bernoulli(zero_fraction)) m *= std::exp(rng.uniform(-0.002, 0.002));
    mids[i] = m;
  }
  return mids;
}

}  // namespace

TEST_CASE("horizon endpoints count exactly delta_tau non-zero returns") {
  // oracle: independent reference implementation; mids above give non-zero
  // return flags [0,1,0,1,0,0,1,1,0,1] and endpoints
  //   dtau=1: [2,2,4,4,7,7,7,8,10,10,-]
  //   dtau=2: [4,4,7,7,8,8,8,10,-,-,-]
  //   dtau=3: [7,7,8,8,10,10,10,-,-,-,-]
  const auto returns = log_returns(kMids);

  struct Case {
    int dtau;
    std::vector<std::optional<std::size_t>> endpoints;
  };
  const std::vector<Case> cases = {
      {1, {2, 2, 4, 4, 7, 7, 7, 8, 10, 10, std::nullopt}},
      {2, {4, 4, 7, 7, 8, 8, 8, 10, std::nullopt, std::nullopt, std::nullopt}},
      {3,
       {7, 7, 8, 8, 10, 10, 10, std::nullopt, std::nullopt, std::nullopt, std::nullopt}},
  };
  for (const auto& c : cases) {
    const HorizonSpec h{c.dtau};
    const EventTimeIndex index(returns);
    for (std::size_t t = 0; t < kMids.size(); ++t) {
      CAPTURE(c.dtau, t);
      CHECK(horizon_endpoint(returns, t, h) == c.endpoints[t]);
      CHECK(index.endpoint(t, h) == c.endpoints[t]);
    }
  }
}

TEST_CASE("horizon targets are log mid returns to the endpoint") {
  // oracle: independent reference implementation over the same mids
  const HorizonSpec h{2};
  const HorizonTargets ht = compute_horizon_targets(kMids, h);
  REQUIRE(ht.t.size() == 8);
  CHECK(ht.t == std::vector<std::int64_t>{0, 1, 2, 3, 4, 5, 6, 7});
  CHECK(ht.t_end == std::vector<std::int64_t>{4, 4, 7, 7, 8, 8, 8, 10});
  const std::vector<double> expect = {
      -0.01005033585350145, -0.01005033585350145, 0.00985229644301164,
      0.00985229644301164,  0.03960913809504588,  0.03960913809504588,
      0.03960913809504588,  -0.009852296443011594};
  for (std::size_t i = 0; i < expect.size(); ++i) {
    CAPTURE(i);
    CHECK(ht.target[i] == Catch::Approx(expect[i]).epsilon(1e-13));
  }
}

TEST_CASE("indexed endpoints agree with the scan reference everywhere") {
  Rng rng(1004);
  for (int rep = 0; rep < 20; ++rep) {
    const auto mids = random_mids(rng, 400, 0.6);
    const auto returns = log_returns(mids);
    const EventTimeIndex index(returns);
    for (const int dtau : {1, 3, 10, 50}) {
      const HorizonSpec h{dtau};
      for (std::size_t t = 0; t < mids.size(); ++t) {
        CAPTURE(rep, dtau, t);
        REQUIRE(index.endpoint(t, h) == horizon_endpoint(returns, t, h));
      }
    }
  }
}

TEST_CASE("missing endpoints are a suffix: the bulk path may stop at the first") {
  Rng rng(1005);
  for (int rep = 0; rep < 20; ++rep) {
    const auto mids = random_mids(rng, 300, 0.7);
    const auto returns = log_returns(mids);
    const HorizonSpec h{7};
    bool seen_missing = false;
    for (std::size_t t = 0; t < mids.size(); ++t) {
      const bool missing = !horizon_endpoint(returns, t, h).has_value();
      if (seen_missing) REQUIRE(missing);  // monotone: once gone, gone for good
      seen_missing = seen_missing || missing;
    }
    const HorizonTargets ht = compute_horizon_targets(mids, h);
    // bulk output = exactly the ticks with endpoints
    std::size_t valid = 0;
    while (valid < mids.size() && horizon_endpoint(returns, valid, h)) ++valid;
    REQUIRE(ht.t.size() == valid);
  }
}

TEST_CASE("targets are invariant to inserting zero returns") {
  Rng rng(1006);
  for (int rep = 0; rep < 10; ++rep) {
    const auto mids = random_mids(rng, 200, 0.0);
    // augment: duplicate random ticks (a duplicated mid is a zero return)
    std::vector<double> aug;
    std::vector<std::size_t> pos(mids.size());  // original tick -> augmented tick
    for (std::size_t i = 0; i < mids.size(); ++i) {
      pos[i] = aug.size();
      aug.push_back(mids[i]);
      while (rng.bernoulli(0.3)) aug.push_back(mids[i]);
    }
    for (const int dtau : {1, 4, 9}) {
      const HorizonSpec h{dtau};
      const HorizonTargets base = compute_horizon_targets(mids, h);
      const HorizonTargets got = compute_horizon_targets(aug, h);
      REQUIRE(got.t.size() >= base.t.size());
      for (std::size_t i = 0; i < base.t.size(); ++i) {
        CAPTURE(rep, dtau, i);
        // same start tick, mapped into the augmented series -> same target
        const std::size_t at = pos[static_cast<std::size_t>(base.t[i])];
        const auto it = std::find(got.t.begin(), got.t.end(), static_cast<std::int64_t>(at));
        REQUIRE(it != got.t.end());
        const std::size_t gi = static_cast<std::size_t>(it - got.t.begin());
        REQUIRE(got.target[gi] == base.target[i]);
      }
    }
  }
}

TEST_CASE("percentile uses linear interpolation at rank q*(n-1)") {
  // oracle: numpy.quantile(vals, q, method="linear")
  const std::vector<double> vals = {3.0, 1.0, 4.0, 1.0, 5.0, 9.0, 2.0, 6.0};
  CHECK(percentile(vals, 0.25) == 1.75);
  CHECK(percentile(vals, 0.5) == 3.5);
  CHECK(percentile(vals, 0.75) == 5.25);
  CHECK(percentile(vals, 0.0) == 1.0);
  CHECK(percentile(vals, 1.0) == 9.0);
  CHECK(percentile(vals, 0.1) == 1.0);
  CHECK(percentile({42.0}, 0.75) == 42.0);
  CHECK_THROWS_AS(percentile({}, 0.5), DataError);
  CHECK_THROWS_AS(percentile(vals, 1.5), ConfigError);
}

TEST_CASE("classifying the fitting sample yields 25/50/25 class masses") {
  Rng rng(1007);
  std::vector<double> targets(10007);
  for (auto& v : targets) v = rng.normal() * 0.01;  // continuous: no ties
  const QuantileThresholds th = fit_quantile_thresholds(targets);
  REQUIRE(th.q25 < th.q75);
  std::size_t counts[3] = {0, 0, 0};
  for (const double v : targets) ++counts[class_index(classify_return(v, th))];
  const auto n = static_cast<double>(targets.size());
  // interpolation places each threshold between two order statistics, so the
  // masses can be off by at most a couple of samples
  CHECK(std::abs(static_cast<double>(counts[0]) / n - 0.25) < 2.5 / n + 1e-12);
  CHECK(std::abs(static_cast<double>(counts[1]) / n - 0.50) < 5.0 / n + 1e-12);
  CHECK(std::abs(static_cast<double>(counts[2]) / n - 0.25) < 2.5 / n + 1e-12);
}

TEST_CASE("the flat interval is closed: threshold hits are flat") {
  const QuantileThresholds th{-0.001, 0.002};
  CHECK(classify_return(-0.0011, th) == MoveClass::down);
  CHECK(classify_return(-0.001, th) == MoveClass::flat);
  CHECK(classify_return(0.0, th) == MoveClass::flat);
  CHECK(classify_return(0.002, th) == MoveClass::flat);
  CHECK(classify_return(0.0021, th) == MoveClass::up);
  CHECK(class_name(MoveClass::down) == std::string("down"));
  CHECK(class_index(MoveClass::up) == 2);
  CHECK(class_from_index(1) == MoveClass::flat);
  CHECK_THROWS_AS(class_from_index(3), DataError);
}

TEST_CASE("ties at a threshold all land in flat") {
  // 8 equal values around the q25 rank: quantile == that value -> flat
  std::vector<double> targets;
  for (int i = 0; i < 8; ++i) targets.push_back(-0.005);
  for (int i = 0; i < 8; ++i) targets.push_back(0.0);
  for (int i = 0; i < 8; ++i) targets.push_back(0.005);
  const QuantileThresholds th = fit_quantile_thresholds(targets);
  CHECK(th.q25 == -0.005);
  CHECK(th.q75 == 0.005);
  std::size_t counts[3] = {0, 0, 0};
  for (const double v : targets) ++counts[class_index(classify_return(v, th))];
  CHECK(counts[0] == 0);
  CHECK(counts[1] == 24);  // every tied value equals a threshold -> flat
  CHECK(counts[2] == 0);
}

TEST_CASE("label_return and log_returns reject bad input") {
  CHECK_THROWS_AS(log_returns({100.0}), DataError);
  CHECK_THROWS_AS(log_returns({100.0, -1.0}), DataError);
  CHECK_THROWS_AS(log_returns({0.0, 100.0}), DataError);
  CHECK_THROWS_AS(label_return(kMids, 3, 3), DataError);
  CHECK_THROWS_AS(label_return(kMids, 3, 2), DataError);
  CHECK_THROWS_AS(label_return(kMids, 0, kMids.size()), DataError);
  CHECK_THROWS_AS(horizon_endpoint({0.1, 0.0}, 0, HorizonSpec{0}), ConfigError);
}

TEST_CASE("labels CSV round-trips rows and tolerates a comment line") {
  const HorizonSpec h{2};
  const HorizonTargets ht = compute_horizon_targets(kMids, h);
  const QuantileThresholds th = fit_quantile_thresholds(ht.target);
  const auto rows = classify_targets(ht, h, th, 3);
  REQUIRE(rows.size() == 8);
  for (const auto& r : rows) {
    CHECK(r.file_id == 3);
    CHECK(r.delta_tau == 2);
    CHECK(r.label == classify_return(r.target_return, th));
  }

  const auto path = std::filesystem::temp_directory_path() / "lobbench_labels_test.csv";
  write_labels_csv(path.string(), rows, "config_hash: deadbeef");
  const auto back = read_labels_csv(path.string());
  REQUIRE(back.size() == rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    CAPTURE(i);
    CHECK(back[i].file_id == rows[i].file_id);
    CHECK(back[i].t == rows[i].t);
    CHECK(back[i].t_end == rows[i].t_end);
    CHECK(back[i].delta_tau == rows[i].delta_tau);
    CHECK(back[i].target_return == rows[i].target_return);  // %.17g exact
    CHECK(back[i].label == rows[i].label);
  }
  std::filesystem::remove(path);
}

TEST_CASE("reading labels rejects a wrong header and empty files") {
  const auto path = std::filesystem::temp_directory_path() / "lobbench_labels_bad.csv";
  {
    std::ofstream out(path);
    out << "nope,nope\n";
  }
  CHECK_THROWS_AS(read_labels_csv(path.string()), DataError);
  {
    std::ofstream out(path);
    out << "";
  }
  CHECK_THROWS_AS(read_labels_csv(path.string()), DataError);
  std::filesystem::remove(path);
}
