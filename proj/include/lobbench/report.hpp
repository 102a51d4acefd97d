#pragma once

// Report rendering: plain-text metric tables, a flat summary CSV, and a
// radar SVG. Everything here is a pure function of already-persisted
// artifacts (per-fold confusion matrices and rankings), so reports can be
// regenerated at any time without recomputation.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "lobbench/common.hpp"
#include "lobbench/metrics.hpp"
#include "lobbench/pipeline.hpp"
#include "lobbench/ranking.hpp"

namespace lobbench {

struct ModelHorizonSummary {
  std::string model;
  int horizon = 0;
  int folds = 0;
  std::vector<double> mean;  // indexed like all_metric_names()
  std::vector<double> sd;    // sample sd; 0 when folds < 2
};

inline std::size_t metric_index(const std::string& name) {
  const auto& names = all_metric_names();
  for (std::size_t i = 0; i < names.size(); ++i)
    if (names[i] == name) return i;
  throw ConfigError("unknown metric '" + name + "'");
}

// Fold-wise mean and sample sd of every metric, one row per (model, horizon),
// in the given canonical order.
inline std::vector<ModelHorizonSummary> summarize_metrics(
    const std::vector<MetricsRow>& rows, const std::vector<std::string>& models,
    const std::vector<int>& horizons) {
  const auto& names = all_metric_names();
  std::vector<ModelHorizonSummary> out;
  for (const auto& model : models) {
    for (const int horizon : horizons) {
      ModelHorizonSummary s;
      s.model = model;
      s.horizon = horizon;
      s.mean.assign(names.size(), 0.0);
      s.sd.assign(names.size(), 0.0);
      std::vector<const FoldMetrics*> folds;
      for (const auto& r : rows)
        if (r.model == model && r.horizon == horizon) folds.push_back(&r.metrics);
      if (folds.empty())
        throw DataError("no metric rows for model " + model + " at horizon " +
                        std::to_string(horizon));
      s.folds = static_cast<int>(folds.size());
      for (std::size_t m = 0; m < names.size(); ++m) {
        double sum = 0.0;
        for (const auto* f : folds) sum += f->metric(names[m]);
        const double mean = sum / static_cast<double>(folds.size());
        s.mean[m] = mean;
        if (folds.size() >= 2) {
          double ss = 0.0;
          for (const auto* f : folds) {
            const double d = f->metric(names[m]) - mean;
            ss += d * d;
          }
          s.sd[m] = std::sqrt(ss / static_cast<double>(folds.size() - 1));
        }
      }
      out.push_back(std::move(s));
    }
  }
  return out;
}

namespace detail {

inline std::string fmt_fixed(double v, int digits) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*f", digits, v);
  return buf;
}

inline std::string table_cell(const ModelHorizonSummary& s, std::size_t metric) {
  std::string cell = fmt_fixed(s.mean[metric], 4);
  if (s.folds >= 2) cell += " +- " + fmt_fixed(s.sd[metric], 4);
  return cell;
}

inline std::string pad(const std::string& s, std::size_t width) {
  return s.size() >= width ? s : s + std::string(width - s.size(), ' ');
}

}  // namespace detail

// One table per horizon (metrics down, models across, cells mean +- sd over
// folds), followed by the tier ranking for every compared metric.
inline std::string render_tables(const std::vector<ModelHorizonSummary>& summaries,
                                 const std::vector<Ranking>& rankings,
                                 const std::vector<std::string>& models,
                                 const std::vector<int>& horizons) {
  const auto& names = all_metric_names();
  std::ostringstream out;
  for (std::size_t hi = 0; hi < horizons.size(); ++hi) {
    const int horizon = horizons[hi];
    std::vector<const ModelHorizonSummary*> cols;
    for (const auto& model : models) {
      const ModelHorizonSummary* found = nullptr;
      for (const auto& s : summaries)
        if (s.model == model && s.horizon == horizon) found = &s;
      if (!found)
        throw DataError("missing summary for model " + model + " at horizon " +
                        std::to_string(horizon));
      cols.push_back(found);
    }
    int folds = cols.empty() ? 0 : cols.front()->folds;

    std::size_t name_width = std::string("metric").size();
    for (const auto& n : names) name_width = std::max(name_width, n.size());
    std::vector<std::size_t> widths(cols.size());
    for (std::size_t c = 0; c < cols.size(); ++c) {
      widths[c] = models[c].size();
      for (std::size_t m = 0; m < names.size(); ++m)
        widths[c] = std::max(widths[c], detail::table_cell(*cols[c], m).size());
    }

    if (hi > 0) out << '\n';
    out << "Horizon " << horizon << " (" << folds << (folds == 1 ? " fold" : " folds")
        << ")\n";
    out << detail::pad("metric", name_width);
    for (std::size_t c = 0; c < cols.size(); ++c)
      out << "  " << detail::pad(models[c], widths[c]);
    out << '\n';
    out << std::string(name_width, '-');
    for (std::size_t c = 0; c < cols.size(); ++c) out << "  " << std::string(widths[c], '-');
    out << '\n';
    for (std::size_t m = 0; m < names.size(); ++m) {
      out << detail::pad(names[m], name_width);
      for (std::size_t c = 0; c < cols.size(); ++c)
        out << "  " << detail::pad(detail::table_cell(*cols[c], m), widths[c]);
      out << '\n';
    }
  }

  for (const auto& r : rankings) {
    out << "\nRanking (metric=" << r.metric << ", horizon=" << r.horizon << ")\n";
    for (const auto& g : r.groups) {
      out << "  tier " << g.tier << ":";
      for (std::size_t i = 0; i < g.models.size(); ++i)
        out << (i == 0 ? " " : ", ") << g.models[i];
      out << '\n';
    }
    for (const auto& e : r.intersections) {
      out << "  intersection: " << e.model << " (" << e.reason << ") spans groups";
      for (std::size_t i = 0; i < e.group_indices.size(); ++i)
        out << (i == 0 ? " " : ", ") << e.group_indices[i];
      out << '\n';
    }
  }
  return out.str();
}

// Flat per-(model, horizon) mean metrics, machine-readable.
inline std::string render_summary_csv(const std::vector<ModelHorizonSummary>& summaries) {
  const auto& names = all_metric_names();
  std::ostringstream out;
  out << "model,horizon,folds";
  for (const auto& n : names) out << ',' << n;
  out << '\n';
  for (const auto& s : summaries) {
    out << s.model << ',' << s.horizon << ',' << s.folds;
    for (std::size_t m = 0; m < names.size(); ++m) out << ',' << format_double(s.mean[m]);
    out << '\n';
  }
  return out.str();
}

// Radar chart: one chart per horizon, one polygon per model, axes = the
// requested metrics (at least 3). Axis radius maps the metric value clamped
// to [0, 1], so an all-zero model collapses to the centre point and
// identical models produce coincident polygons.
inline std::string render_radar(const std::vector<ModelHorizonSummary>& summaries,
                                const std::vector<std::string>& axes,
                                const std::vector<std::string>& models,
                                const std::vector<int>& horizons,
                                const std::string& comment = {}) {
  if (axes.size() < 3)
    throw ConfigError("radar chart needs at least 3 axes, got " +
                      std::to_string(axes.size()));
  std::vector<std::size_t> axis_idx;
  for (const auto& a : axes) axis_idx.push_back(metric_index(a));

  static const char* kPalette[] = {"#1b6ca8", "#d1495b", "#2e933c", "#e09f3e",
                                   "#6d597a", "#118ab2", "#8d5524"};
  constexpr int kPaletteSize = 7;
  const double chart_w = 380.0, chart_h = 420.0, radius = 130.0;
  const double legend_h = 26.0 * (1.0 + static_cast<double>((models.size() - 1) / 3));
  const double width = chart_w * static_cast<double>(horizons.size());
  const double height = chart_h + legend_h + 10.0;

  auto num = [](double v) { return detail::fmt_fixed(v, 2); };
  std::ostringstream out;
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << num(width) << "\" height=\""
      << num(height) << "\" viewBox=\"0 0 " << num(width) << ' ' << num(height) << "\">\n";
  if (!comment.empty()) out << "<!-- " << comment << " -->\n";
  out << "<rect width=\"" << num(width) << "\" height=\"" << num(height)
      << "\" fill=\"#ffffff\"/>\n";

  const double pi = 3.14159265358979323846;
  for (std::size_t hi = 0; hi < horizons.size(); ++hi) {
    const double cx = chart_w * (static_cast<double>(hi) + 0.5);
    const double cy = 30.0 + radius + 40.0;
    auto point = [&](std::size_t axis, double r01) {
      const double ang =
          -pi / 2.0 + 2.0 * pi * static_cast<double>(axis) / static_cast<double>(axes.size());
      const double r = radius * std::clamp(r01, 0.0, 1.0);
      return std::pair<double, double>{cx + r * std::cos(ang), cy + r * std::sin(ang)};
    };
    out << "<text x=\"" << num(cx) << "\" y=\"24\" text-anchor=\"middle\" "
        << "font-family=\"sans-serif\" font-size=\"15\" fill=\"#222222\">horizon "
        << horizons[hi] << "</text>\n";
    for (const double ring : {0.25, 0.5, 0.75, 1.0}) {
      out << "<polygon points=\"";
      for (std::size_t a = 0; a < axes.size(); ++a) {
        const auto [x, y] = point(a, ring);
        out << (a == 0 ? "" : " ") << num(x) << ',' << num(y);
      }
      out << "\" fill=\"none\" stroke=\"#cccccc\" stroke-width=\"1\"/>\n";
    }
    for (std::size_t a = 0; a < axes.size(); ++a) {
      const auto [x, y] = point(a, 1.0);
      out << "<line x1=\"" << num(cx) << "\" y1=\"" << num(cy) << "\" x2=\"" << num(x)
          << "\" y2=\"" << num(y) << "\" stroke=\"#bbbbbb\" stroke-width=\"1\"/>\n";
      const auto [lx, ly] = point(a, 1.16);
      out << "<text x=\"" << num(lx) << "\" y=\"" << num(ly + 4.0)
          << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"11\" "
          << "fill=\"#444444\">" << axes[a] << "</text>\n";
    }
    for (std::size_t mi = 0; mi < models.size(); ++mi) {
      const ModelHorizonSummary* found = nullptr;
      for (const auto& s : summaries)
        if (s.model == models[mi] && s.horizon == horizons[hi]) found = &s;
      if (!found)
        throw DataError("missing summary for model " + models[mi] + " at horizon " +
                        std::to_string(horizons[hi]));
      const char* color = kPalette[mi % kPaletteSize];
      out << "<polygon points=\"";
      for (std::size_t a = 0; a < axes.size(); ++a) {
        const auto [x, y] = point(a, found->mean[axis_idx[a]]);
        out << (a == 0 ? "" : " ") << num(x) << ',' << num(y);
      }
      out << "\" fill=\"" << color << "\" fill-opacity=\"0.08\" stroke=\"" << color
          << "\" stroke-width=\"2\"/>\n";
    }
  }

  for (std::size_t mi = 0; mi < models.size(); ++mi) {
    const double lx = 20.0 + 130.0 * static_cast<double>(mi % 3);
    const double ly = chart_h + 14.0 + 26.0 * static_cast<double>(mi / 3);
    const char* color = kPalette[mi % kPaletteSize];
    out << "<rect x=\"" << num(lx) << "\" y=\"" << num(ly - 9.0)
        << "\" width=\"12\" height=\"12\" fill=\"" << color << "\"/>\n";
    out << "<text x=\"" << num(lx + 18.0) << "\" y=\"" << num(ly + 2.0)
        << "\" font-family=\"sans-serif\" font-size=\"12\" fill=\"#222222\">" << models[mi]
        << "</text>\n";
  }
  out << "</svg>\n";
  return out.str();
}

}  // namespace lobbench
