#pragma once

// Event-time horizon labelling.
//
// The horizon of a start tick t is not t + k in wall ticks: it is reached
// after `delta_tau` NON-ZERO log returns have occurred. Zero returns (book
// shuffles that leave the mid untouched) do not advance event time. The
// label of (t, delta_tau) is the log mid return from t to that endpoint,
// classified against quantile thresholds fit on training targets.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include "lobbench/common.hpp"
#include "lobbench/lob_state.hpp"

namespace lobbench {

inline double mid_price(const LobState& s) { return 0.5 * (s.best_ask() + s.best_bid()); }

inline std::vector<double> mid_series(const std::vector<LobState>& states) {
  std::vector<double> mids(states.size());
  for (std::size_t i = 0; i < states.size(); ++i) mids[i] = mid_price(states[i]);
  return mids;
}

// returns[t] = log(mids[t+1]) - log(mids[t]); size n-1.
inline std::vector<double> log_returns(const std::vector<double>& mids) {
  if (mids.size() < 2) throw DataError("log_returns: need at least two mids");
  std::vector<double> r(mids.size() - 1);
  for (std::size_t t = 0; t + 1 < mids.size(); ++t) {
    if (!(mids[t] > 0.0) || !(mids[t + 1] > 0.0))
      throw DataError("log_returns: non-positive mid at tick " + std::to_string(t));
    r[t] = std::log(mids[t + 1]) - std::log(mids[t]);
  }
  return r;
}

struct HorizonSpec {
  int delta_tau = 10;
};

inline void validate_horizon(const HorizonSpec& h) {
  if (h.delta_tau < 1) throw ConfigError("delta_tau must be >= 1");
}

// Smallest t' > t such that returns[t .. t'-1] contains exactly
// `delta_tau` non-zero entries; nullopt when the series ends first.
// Straightforward scan; the reference semantics for the indexed bulk path.
inline std::optional<std::size_t> horizon_endpoint(const std::vector<double>& returns,
                                                   std::size_t t, const HorizonSpec& h) {
  validate_horizon(h);
  int count = 0;
  for (std::size_t k = t; k < returns.size(); ++k) {
    if (returns[k] != 0.0) {
      if (++count == h.delta_tau) return k + 1;
    }
  }
  return std::nullopt;
}

// O(1)-per-query endpoint lookup over a fixed return series: stores the
// positions of non-zero returns plus, for each tick, how many non-zero
// returns precede it. Must agree with horizon_endpoint everywhere.
class EventTimeIndex {
public:
  explicit EventTimeIndex(const std::vector<double>& returns)
      : prefix_(returns.size() + 1, 0) {
    for (std::size_t k = 0; k < returns.size(); ++k) {
      prefix_[k + 1] = prefix_[k] + (returns[k] != 0.0 ? 1 : 0);
      if (returns[k] != 0.0) nonzero_pos_.push_back(k);
    }
  }

  std::size_t ticks() const { return prefix_.size() - 1; }

  std::optional<std::size_t> endpoint(std::size_t t, const HorizonSpec& h) const {
    validate_horizon(h);
    if (t >= prefix_.size()) return std::nullopt;
    // index (into nonzero_pos_) of the delta_tau-th non-zero return at or after t
    const std::size_t want = prefix_[t] + static_cast<std::size_t>(h.delta_tau);
    if (want > nonzero_pos_.size()) return std::nullopt;
    return nonzero_pos_[want - 1] + 1;
  }

private:
  std::vector<std::size_t> prefix_;       // prefix_[t] = #nonzero among returns[0..t)
  std::vector<std::size_t> nonzero_pos_;  // ascending positions of non-zero returns
};

// log(mids[t_end]) - log(mids[t_start]); equals the sum of the log returns
// over (t_start, t_end].
inline double label_return(const std::vector<double>& mids, std::size_t t_start,
                           std::size_t t_end) {
  if (t_end >= mids.size() || t_start >= t_end)
    throw DataError("label_return: bad tick range");
  return std::log(mids[t_end]) - std::log(mids[t_start]);
}

// --- quantile classification ------------------------------------------------

// Linear-interpolation percentile on a sorted copy: rank h = q * (n - 1),
// value = v[floor(h)] + (h - floor(h)) * (v[floor(h)+1] - v[floor(h)]).
inline double percentile(std::vector<double> values, double q) {
  if (values.empty()) throw DataError("percentile: empty input");
  if (!(q >= 0.0 && q <= 1.0)) throw ConfigError("percentile: q outside [0, 1]");
  std::sort(values.begin(), values.end());
  const double h = q * static_cast<double>(values.size() - 1);
  const auto lo = static_cast<std::size_t>(h);
  if (lo + 1 >= values.size()) return values.back();
  const double frac = h - static_cast<double>(lo);
  return values[lo] + frac * (values[lo + 1] - values[lo]);
}

struct QuantileThresholds {
  double q25 = 0.0;
  double q75 = 0.0;
};

inline QuantileThresholds fit_quantile_thresholds(const std::vector<double>& train_targets) {
  if (train_targets.empty()) throw DataError("quantile fit: no training targets");
  QuantileThresholds th;
  th.q25 = percentile(train_targets, 0.25);
  th.q75 = percentile(train_targets, 0.75);
  // sorted percentiles of one sample are monotone in q
  return th;
}

// Three classes by training quantiles. The middle interval is CLOSED:
// a target exactly equal to either threshold is "flat".
enum class MoveClass : std::int8_t { down = 0, flat = 1, up = 2 };

inline MoveClass classify_return(double target, const QuantileThresholds& th) {
  if (target < th.q25) return MoveClass::down;
  if (target > th.q75) return MoveClass::up;
  return MoveClass::flat;
}

inline int class_index(MoveClass c) { return static_cast<int>(c); }

inline const char* class_name(MoveClass c) {
  switch (c) {
    case MoveClass::down: return "down";
    case MoveClass::flat: return "flat";
    case MoveClass::up: return "up";
  }
  throw ConfigError("unknown class");
}

inline MoveClass class_from_index(int i) {
  if (i < 0 || i > 2) throw DataError("class index out of range");
  return static_cast<MoveClass>(i);
}

// --- bulk labelling ----------------------------------------------------------

// Horizon targets for every start tick of one contiguous segment that has an
// endpoint within the segment. Start ticks run over mids indices.
struct HorizonTargets {
  std::vector<std::int64_t> t;
  std::vector<std::int64_t> t_end;
  std::vector<double> target;
};

inline HorizonTargets compute_horizon_targets(const std::vector<double>& mids,
                                              const HorizonSpec& h) {
  const std::vector<double> returns = log_returns(mids);
  const EventTimeIndex index(returns);
  HorizonTargets out;
  for (std::size_t t = 0; t + 1 < mids.size(); ++t) {
    const auto e = index.endpoint(t, h);
    if (!e) break;  // later starts only see a suffix: no endpoint either
    out.t.push_back(static_cast<std::int64_t>(t));
    out.t_end.push_back(static_cast<std::int64_t>(*e));
    out.target.push_back(label_return(mids, t, *e));
  }
  return out;
}

struct LabeledSample {
  int file_id = 0;         // source segment (windows never cross segments)
  std::int64_t t = 0;      // start tick (window end state), segment-local
  std::int64_t t_end = 0;  // event-time horizon endpoint, segment-local
  int delta_tau = 0;
  double target_return = 0.0;
  MoveClass label = MoveClass::flat;
};

inline std::vector<LabeledSample> classify_targets(const HorizonTargets& ht,
                                                   const HorizonSpec& h,
                                                   const QuantileThresholds& th,
                                                   int file_id = 0) {
  std::vector<LabeledSample> out(ht.t.size());
  for (std::size_t i = 0; i < ht.t.size(); ++i) {
    out[i] = LabeledSample{file_id, ht.t[i], ht.t_end[i], h.delta_tau, ht.target[i],
                           classify_return(ht.target[i], th)};
  }
  return out;
}

// --- label CSV ---------------------------------------------------------------

inline constexpr const char* kLabelsCsvHeader = "file_id,t,t_end,delta_tau,target_return,label";

inline void write_labels_csv(const std::string& path, const std::vector<LabeledSample>& rows,
                             const std::string& comment = {}) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot open labels file for write: " + path);
  if (!comment.empty()) out << "# " << comment << '\n';
  out << kLabelsCsvHeader << '\n';
  for (const auto& r : rows) {
    out << r.file_id << ',' << r.t << ',' << r.t_end << ',' << r.delta_tau << ','
        << format_double(r.target_return) << ',' << class_index(r.label) << '\n';
  }
  if (!out) throw DataError("write failed: " + path);
}

inline std::vector<LabeledSample> read_labels_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open labels file: " + path);
  std::string line;
  std::size_t line_no = 0;
  bool header_seen = false;
  std::vector<LabeledSample> out;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line[0] == '#') continue;
    if (!header_seen) {
      if (line != kLabelsCsvHeader) throw DataError(path + ": unexpected labels header");
      header_seen = true;
      continue;
    }
    const auto f = split_csv_row(line);
    const std::string where = path + ":" + std::to_string(line_no);
    if (f.size() != 6) throw DataError(where + ": expected 6 fields");
    LabeledSample r;
    r.file_id = static_cast<int>(parse_int_field(f[0], where));
    r.t = parse_int_field(f[1], where);
    r.t_end = parse_int_field(f[2], where);
    r.delta_tau = static_cast<int>(parse_int_field(f[3], where));
    r.target_return = parse_double_field(f[4], where);
    r.label = class_from_index(static_cast<int>(parse_int_field(f[5], where)));
    out.push_back(r);
  }
  if (!header_seen) throw DataError("labels file empty: " + path);
  return out;
}

}  // namespace lobbench
