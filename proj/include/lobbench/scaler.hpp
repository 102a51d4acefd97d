#pragma once

// Per-column min-max scaling to [0, 1], fit over chunks so arbitrarily long
// feeds never need to be resident at once. Chunk boundaries cannot change
// the result: the fit is a pure column-wise min/max reduction.

#include <fstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "lobbench/common.hpp"
#include "lobbench/lob_state.hpp"

namespace lobbench {

struct ScalerParams {
  std::vector<double> per_column_min;
  std::vector<double> per_column_max;
  std::size_t columns_seen = 0;

  bool fitted() const { return columns_seen > 0; }
};

class MinMaxScaler {
public:
  explicit MinMaxScaler(std::size_t columns = kFeatureCount) : columns_(columns) {
    if (columns_ == 0) throw ConfigError("scaler needs at least one column");
  }

  void observe_row(const double* row) {
    if (!seen_any_) {
      params_.per_column_min.assign(row, row + columns_);
      params_.per_column_max.assign(row, row + columns_);
      params_.columns_seen = columns_;
      seen_any_ = true;
      return;
    }
    for (std::size_t c = 0; c < columns_; ++c) {
      if (row[c] < params_.per_column_min[c]) params_.per_column_min[c] = row[c];
      if (row[c] > params_.per_column_max[c]) params_.per_column_max[c] = row[c];
    }
  }

  void observe(const LobState& s) {
    if (4 * s.depth() != columns_) throw DataError("scaler: depth mismatch");
    double buf[kFeatureCount];
    std::vector<double> big;
    double* row = buf;
    if (columns_ > kFeatureCount) {
      big.resize(columns_);
      row = big.data();
    }
    flatten(s, row);
    observe_row(row);
  }

  void observe_chunk(const std::vector<LobState>& chunk) {
    for (const auto& s : chunk) observe(s);
  }

  const ScalerParams& params() const {
    if (!seen_any_) throw DataError("scaler: no data observed");
    return params_;
  }

private:
  std::size_t columns_;
  ScalerParams params_;
  bool seen_any_ = false;
};

// Combine fits from disjoint chunks (used by chunked / multi-file ingest).
inline ScalerParams merge(const ScalerParams& a, const ScalerParams& b) {
  if (a.columns_seen != b.columns_seen) throw DataError("scaler merge: column count mismatch");
  ScalerParams out = a;
  for (std::size_t c = 0; c < a.columns_seen; ++c) {
    if (b.per_column_min[c] < out.per_column_min[c]) out.per_column_min[c] = b.per_column_min[c];
    if (b.per_column_max[c] > out.per_column_max[c]) out.per_column_max[c] = b.per_column_max[c];
  }
  return out;
}

// (x - min) / (max - min). Degenerate columns (max == min) map to 0.
// Values outside the fitted range are NOT clipped; a scaler fit on training
// data reports test data faithfully, excursions included.
inline void transform_row(const ScalerParams& p, const double* in, double* out) {
  for (std::size_t c = 0; c < p.columns_seen; ++c) {
    const double span = p.per_column_max[c] - p.per_column_min[c];
    out[c] = span > 0.0 ? (in[c] - p.per_column_min[c]) / span : 0.0;
  }
}

inline std::vector<double> transform(const ScalerParams& p, const LobState& s) {
  if (4 * s.depth() != p.columns_seen) throw DataError("scaler transform: depth mismatch");
  std::vector<double> flat = flatten(s);
  std::vector<double> out(flat.size());
  transform_row(p, flat.data(), out.data());
  return out;
}

// --- persistence ------------------------------------------------------------

inline nlohmann::ordered_json scaler_to_json(const ScalerParams& p, double price_scale) {
  nlohmann::ordered_json j;
  j["columns"] = p.columns_seen;
  j["price_scale"] = price_scale;
  j["per_column_min"] = p.per_column_min;
  j["per_column_max"] = p.per_column_max;
  return j;
}

inline ScalerParams scaler_from_json(const nlohmann::json& j, double* price_scale_out = nullptr) {
  ScalerParams p;
  p.columns_seen = j.at("columns").get<std::size_t>();
  p.per_column_min = j.at("per_column_min").get<std::vector<double>>();
  p.per_column_max = j.at("per_column_max").get<std::vector<double>>();
  if (p.per_column_min.size() != p.columns_seen || p.per_column_max.size() != p.columns_seen)
    throw DataError("scaler json: length mismatch");
  if (price_scale_out) *price_scale_out = j.at("price_scale").get<double>();
  return p;
}

inline void save_scaler(const std::string& path, const ScalerParams& p, double price_scale) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot open scaler file for write: " + path);
  out << scaler_to_json(p, price_scale).dump(2) << '\n';
}

inline ScalerParams load_scaler(const std::string& path, double* price_scale_out = nullptr) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open scaler file: " + path);
  nlohmann::json j;
  in >> j;
  return scaler_from_json(j, price_scale_out);
}

}  // namespace lobbench
