#pragma once

// Synthetic depth-10 order book feed with a plantable predictive pattern.
//
// Mid-price dynamics: the bid sits on a tick grid with a fixed one-tick
// spread. At a "move" event the bid jumps 1..max_move_ticks ticks in the
// regime direction; quiet events reshuffle volumes only -> exactly zero
// returns, which event-time horizon counting must skip. Move directions
// follow a slowly flipping regime, reflected at a band around the initial
// mid so the walk neither escapes nor goes non-positive.
//
// The band is deliberately narrow (2% of the initial mid by default): label
// thresholds are quantiles of LOG returns fitted on the train split, and a
// log return scales with 1/mid, so letting the level wander far would shift
// the test split's return scale away from the train split's and skew its
// class masses. Mixed move sizes keep the return distribution spread out
// instead of concentrating on displacement atoms, for the same reason.
//
// The flip probability is small (0.005 per move) so regime legs last a few
// hundred moves on average: a multi-move horizon label is then determined
// by the prevailing regime for most samples instead of straddling a
// reversal, which keeps long-horizon labels learnable from the current
// book state.
//
// Signal plant: with probability `signal_strength` the top-of-book volume
// imbalance sign of a snapshot equals the direction of the NEXT non-zero
// move (a look-ahead plant, so it is genuinely predictive); otherwise the
// imbalance sign is a fair coin. signal_strength 0 gives a pattern-free
// book, 1 a perfectly informative one.

#include <cmath>
#include <cstdint>
#include <vector>

#include "lobbench/common.hpp"
#include "lobbench/lob_state.hpp"

namespace lobbench {

struct SyntheticConfig {
  std::size_t events = 0;
  std::uint64_t seed = 0;
  double signal_strength = 0.0;  // in [0, 1]
  double tick_size = 0.01;
  std::int64_t lot_size = 50;  // base volume unit v0
  double initial_mid = 100.0;
  std::size_t depth = kDefaultDepth;
  double move_prob = 0.3;    // P(mid moves at an event)
  double flip_prob = 0.005;  // P(regime flips before a move)
  double band_fraction = 0.02;  // reflecting band half-width, fraction of initial mid
  std::int64_t max_move_ticks = 3;  // move size drawn uniformly from 1..max
};

inline void validate_config(const SyntheticConfig& c) {
  if (c.events == 0) throw ConfigError("synthetic: events must be positive");
  if (!(c.signal_strength >= 0.0 && c.signal_strength <= 1.0))
    throw ConfigError("synthetic: signal_strength must be in [0, 1]");
  if (!(c.tick_size > 0.0)) throw ConfigError("synthetic: tick_size must be positive");
  if (c.lot_size < 10) throw ConfigError("synthetic: lot_size must be at least 10");
  if (!(c.initial_mid > 0.0)) throw ConfigError("synthetic: initial_mid must be positive");
  if (c.depth == 0) throw ConfigError("synthetic: depth must be positive");
  if (!(c.move_prob > 0.0 && c.move_prob <= 1.0))
    throw ConfigError("synthetic: move_prob must be in (0, 1]");
  if (!(c.flip_prob >= 0.0 && c.flip_prob <= 1.0))
    throw ConfigError("synthetic: flip_prob must be in [0, 1]");
  if (!(c.band_fraction > 0.0 && c.band_fraction < 1.0))
    throw ConfigError("synthetic: band_fraction must be in (0, 1)");
  if (c.max_move_ticks < 1) throw ConfigError("synthetic: max_move_ticks must be positive");
}

// Sign of the planted top-of-book imbalance: +1 when the best bid carries
// more volume than the best ask (book "leans up"), -1 otherwise.
inline int top_imbalance_sign(const LobState& s) {
  return s.bids[0].volume > s.asks[0].volume ? 1 : -1;
}

inline std::vector<LobState> generate_synthetic_lob(const SyntheticConfig& cfg) {
  validate_config(cfg);
  Rng rng(cfg.seed);

  // Phase 1: mid walk on the bid tick grid.
  const std::int64_t b0 = std::llround(cfg.initial_mid / cfg.tick_size);
  const std::int64_t band =
      std::max<std::int64_t>(10, std::llround(cfg.band_fraction * static_cast<double>(b0)));
  const std::int64_t lo = b0 - band, hi = b0 + band;
  std::vector<std::int64_t> bid_tick(cfg.events);
  std::vector<std::int8_t> move(cfg.events, 0);
  std::int64_t b = b0;
  int regime = rng.sign();
  bid_tick[0] = b;
  for (std::size_t i = 1; i < cfg.events; ++i) {
    if (rng.bernoulli(cfg.move_prob)) {
      if (rng.bernoulli(cfg.flip_prob)) regime = -regime;
      const std::int64_t size = rng.uniform_int(1, cfg.max_move_ticks);
      if (b + regime * size < lo) regime = 1;
      if (b + regime * size > hi) regime = -1;
      move[i] = static_cast<std::int8_t>(regime);
      b += regime * size;
    }
    bid_tick[i] = b;
  }

  // Phase 2: direction of the next non-zero move after each event (the
  // plant's look-ahead target). Tail events fall back to the final regime.
  std::vector<std::int8_t> next_dir(cfg.events, static_cast<std::int8_t>(regime));
  std::int8_t pending = static_cast<std::int8_t>(regime);
  for (std::size_t i = cfg.events; i-- > 1;) {
    next_dir[i - 1] = pending = (move[i] != 0 ? move[i] : pending);
  }

  // Phase 3: books. Volume bands in lot units.
  const double v0 = static_cast<double>(cfg.lot_size);
  const std::int64_t heavy_lo = static_cast<std::int64_t>(std::ceil(1.6 * v0));
  const std::int64_t heavy_hi = static_cast<std::int64_t>(std::floor(2.0 * v0));
  const std::int64_t light_lo = std::max<std::int64_t>(1, static_cast<std::int64_t>(std::ceil(0.1 * v0)));
  const std::int64_t light_hi = static_cast<std::int64_t>(std::floor(0.4 * v0));
  const std::int64_t deep_lo = static_cast<std::int64_t>(std::ceil(0.5 * v0));
  const std::int64_t deep_hi = static_cast<std::int64_t>(std::floor(1.5 * v0));

  std::vector<LobState> out(cfg.events);
  for (std::size_t i = 0; i < cfg.events; ++i) {
    const int pattern = rng.bernoulli(cfg.signal_strength) ? next_dir[i] : rng.sign();
    const auto heavy = static_cast<double>(rng.uniform_int(heavy_lo, heavy_hi));
    const auto light = static_cast<double>(rng.uniform_int(light_lo, light_hi));
    LobState& s = out[i];
    s.asks.resize(cfg.depth);
    s.bids.resize(cfg.depth);
    const std::int64_t bt = bid_tick[i];
    for (std::size_t j = 0; j < cfg.depth; ++j) {
      s.asks[j].price = static_cast<double>(bt + 1 + static_cast<std::int64_t>(j)) * cfg.tick_size;
      s.bids[j].price = static_cast<double>(bt - static_cast<std::int64_t>(j)) * cfg.tick_size;
    }
    s.bids[0].volume = pattern > 0 ? heavy : light;
    s.asks[0].volume = pattern > 0 ? light : heavy;
    for (std::size_t j = 1; j < cfg.depth; ++j)
      s.asks[j].volume = static_cast<double>(rng.uniform_int(deep_lo, deep_hi));
    for (std::size_t j = 1; j < cfg.depth; ++j)
      s.bids[j].volume = static_cast<double>(rng.uniform_int(deep_lo, deep_hi));
  }
  return out;
}

}  // namespace lobbench
