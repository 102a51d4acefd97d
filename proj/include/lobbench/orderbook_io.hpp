#pragma once

// CSV order book I/O. One row per snapshot, 4*depth columns in the canonical
// feature order. Feeds store prices as integers in units of 1/price_scale
// currency (e.g. price_scale 1e4 -> 123400 means 12.34); volumes are plain
// counts. With price_scale == 1 both columns pass through as doubles.

#include <fstream>
#include <functional>
#include <istream>
#include <ostream>
#include <string>
#include <vector>

#include "lobbench/common.hpp"
#include "lobbench/lob_state.hpp"

namespace lobbench {

enum class InvalidRowPolicy {
  reject,          // throw DataError on the first invariant-violating row
  skip_with_count  // drop such rows, counting them
};

struct ParseStats {
  std::size_t rows_parsed = 0;
  std::size_t rows_skipped = 0;
};

struct ParseOptions {
  double price_scale = 1e4;
  InvalidRowPolicy policy = InvalidRowPolicy::reject;
  std::size_t depth = kDefaultDepth;
};

// Streaming parse; sink receives each valid snapshot in file order.
// Malformed rows (wrong field count, unparseable numbers) always throw with
// a 1-based line number: silent field loss is never acceptable. Rows that
// parse but violate book invariants follow the configured policy.
inline ParseStats parse_orderbook_stream(std::istream& in, const ParseOptions& opt,
                                         const std::function<void(LobState&&)>& sink) {
  if (!(opt.price_scale > 0.0)) throw ConfigError("price_scale must be positive");
  if (opt.depth == 0) throw ConfigError("depth must be positive");
  ParseStats stats;
  std::string line;
  std::size_t line_no = 0;
  const std::size_t want = 4 * opt.depth;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto fields = split_csv_row(line);
    if (fields.size() != want)
      throw DataError("line " + std::to_string(line_no) + ": expected " + std::to_string(want) +
                      " fields, got " + std::to_string(fields.size()));
    LobState s;
    s.asks.resize(opt.depth);
    s.bids.resize(opt.depth);
    const std::string where = "line " + std::to_string(line_no);
    for (std::size_t i = 0; i < opt.depth; ++i) {
      s.asks[i].price = parse_double_field(fields[4 * i + 0], where) / opt.price_scale;
      s.asks[i].volume = parse_double_field(fields[4 * i + 1], where);
      s.bids[i].price = parse_double_field(fields[4 * i + 2], where) / opt.price_scale;
      s.bids[i].volume = parse_double_field(fields[4 * i + 3], where);
    }
    const std::string problem = validate(s);
    if (!problem.empty()) {
      if (opt.policy == InvalidRowPolicy::reject)
        throw DataError(where + ": invalid book: " + problem);
      ++stats.rows_skipped;
      continue;
    }
    ++stats.rows_parsed;
    sink(std::move(s));
  }
  return stats;
}

inline std::vector<LobState> parse_orderbook_csv(std::istream& in, const ParseOptions& opt,
                                                 ParseStats* stats_out = nullptr) {
  std::vector<LobState> out;
  const ParseStats stats =
      parse_orderbook_stream(in, opt, [&out](LobState&& s) { out.push_back(std::move(s)); });
  if (stats_out) *stats_out = stats;
  return out;
}

inline std::vector<LobState> load_orderbook_file(const std::string& path, const ParseOptions& opt,
                                                 ParseStats* stats_out = nullptr) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open order book file: " + path);
  return parse_orderbook_csv(in, opt, stats_out);
}

inline void serialize_row(const LobState& s, double price_scale, std::ostream& out) {
  if (!(price_scale > 0.0)) throw ConfigError("price_scale must be positive");
  const bool integral = price_scale != 1.0;
  for (std::size_t i = 0; i < s.depth(); ++i) {
    if (i) out << ',';
    if (integral) {
      out << std::llround(s.asks[i].price * price_scale) << ',' << std::llround(s.asks[i].volume)
          << ',' << std::llround(s.bids[i].price * price_scale) << ','
          << std::llround(s.bids[i].volume);
    } else {
      out << format_double(s.asks[i].price) << ',' << format_double(s.asks[i].volume) << ','
          << format_double(s.bids[i].price) << ',' << format_double(s.bids[i].volume);
    }
  }
  out << '\n';
}

inline void write_orderbook_file(const std::string& path, const std::vector<LobState>& states,
                                 double price_scale) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot open output file: " + path);
  for (const auto& s : states) serialize_row(s, price_scale, out);
  if (!out) throw DataError("write failed: " + path);
}

}  // namespace lobbench
