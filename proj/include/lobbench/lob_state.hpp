#pragma once

// Limit order book snapshot at a fixed depth. The flat feature layout is
// [(ask price, ask volume, bid price, bid volume) x depth], best level first,
// matching the 40-column layout used by depth-10 feeds.

#include <string>
#include <vector>

#include "lobbench/common.hpp"

namespace lobbench {

struct LobLevel {
  double price = 0.0;
  double volume = 0.0;
};

struct LobState {
  std::vector<LobLevel> asks;  // ascending prices, asks[0] = best ask
  std::vector<LobLevel> bids;  // descending prices, bids[0] = best bid

  std::size_t depth() const { return asks.size(); }

  double best_ask() const { return asks.front().price; }
  double best_bid() const { return bids.front().price; }
};

inline constexpr std::size_t kDefaultDepth = 10;
inline constexpr std::size_t kFeatureCount = 4 * kDefaultDepth;

// Flatten to the canonical feature order: per level i, columns
// 4i..4i+3 = ask price, ask volume, bid price, bid volume.
inline void flatten(const LobState& s, double* out) {
  for (std::size_t i = 0; i < s.depth(); ++i) {
    out[4 * i + 0] = s.asks[i].price;
    out[4 * i + 1] = s.asks[i].volume;
    out[4 * i + 2] = s.bids[i].price;
    out[4 * i + 3] = s.bids[i].volume;
  }
}

inline std::vector<double> flatten(const LobState& s) {
  std::vector<double> out(4 * s.depth());
  flatten(s, out.data());
  return out;
}

// Returns an empty string when the book is well formed, else a description
// of the first violated invariant. Checked invariants: equal non-zero depth
// on both sides, positive prices, positive volumes, strictly increasing ask
// prices, strictly decreasing bid prices, best ask >= best bid (uncrossed).
inline std::string validate(const LobState& s) {
  if (s.asks.empty() || s.bids.empty()) return "empty book side";
  if (s.asks.size() != s.bids.size()) return "ask/bid depth mismatch";
  for (std::size_t i = 0; i < s.depth(); ++i) {
    if (!(s.asks[i].price > 0.0)) return "non-positive ask price at level " + std::to_string(i);
    if (!(s.bids[i].price > 0.0)) return "non-positive bid price at level " + std::to_string(i);
    if (!(s.asks[i].volume > 0.0)) return "non-positive ask volume at level " + std::to_string(i);
    if (!(s.bids[i].volume > 0.0)) return "non-positive bid volume at level " + std::to_string(i);
    if (i > 0) {
      if (!(s.asks[i].price > s.asks[i - 1].price))
        return "ask prices not strictly increasing at level " + std::to_string(i);
      if (!(s.bids[i].price < s.bids[i - 1].price))
        return "bid prices not strictly decreasing at level " + std::to_string(i);
    }
  }
  if (!(s.best_ask() >= s.best_bid())) return "crossed book (best ask < best bid)";
  return {};
}

inline bool is_valid(const LobState& s) { return validate(s).empty(); }

}  // namespace lobbench
