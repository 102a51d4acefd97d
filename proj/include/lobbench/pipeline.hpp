#pragma once

// Training and evaluation over labelled window samples.
//
// A SampleSet pairs a scaled feature table with (window end row, class)
// samples; batches gather windows on demand so the [N, 400] buffers never
// exist for the whole dataset at once. Training samples batches uniformly
// WITH replacement; evaluation walks chronological, non-overlapping folds.

#include <algorithm>
#include <cstdint>
#include <fstream>
#include <string>
#include <vector>

#include "lobbench/adam.hpp"
#include "lobbench/autodiff.hpp"
#include "lobbench/labeling.hpp"
#include "lobbench/metrics.hpp"
#include "lobbench/models.hpp"
#include "lobbench/windows.hpp"

namespace lobbench {

struct SampleSet {
  const FeatureTable* features = nullptr;
  std::int64_t window = kWindowLength;
  std::vector<std::int64_t> row;  // feature row of each sample's window END state
  std::vector<std::int8_t> cls;   // class index 0/1/2

  std::size_t size() const { return row.size(); }
};

// Join labels with window eligibility for one contiguous segment whose
// feature rows start at `row_offset` in the table: a label at tick t is a
// sample iff the full window [t-window+1, t] exists inside the segment.
inline void append_samples(SampleSet& set, const std::vector<LabeledSample>& labels,
                           std::int64_t row_offset, std::int64_t segment_rows) {
  for (const auto& l : labels) {
    if (l.t + 1 < set.window) continue;
    if (l.t >= segment_rows) throw DataError("append_samples: label tick outside segment");
    set.row.push_back(row_offset + l.t);
    set.cls.push_back(static_cast<std::int8_t>(class_index(l.label)));
  }
}

inline void gather_windows(const FeatureTable& f, std::int64_t window,
                           const std::int64_t* rows, std::size_t count, ad::Tensor& out) {
  const std::int64_t width = window * static_cast<std::int64_t>(f.cols);
  if (out.rank() != 2 || out.dim(0) != static_cast<std::int64_t>(count) || out.dim(1) != width)
    throw ConfigError("gather_windows: bad output shape");
  for (std::size_t i = 0; i < count; ++i)
    copy_window_ending_at(f, static_cast<std::size_t>(rows[i]),
                          static_cast<std::size_t>(window), out.data() + i * width);
}

inline ad::Tensor one_hot(const std::int8_t* cls, std::size_t count) {
  ad::Tensor t({static_cast<std::int64_t>(count), kNumClasses});
  for (std::size_t i = 0; i < count; ++i) {
    const int c = cls[i];
    if (c < 0 || c >= kNumClasses) throw DataError("one_hot: class out of range");
    t[static_cast<std::int64_t>(i * kNumClasses) + c] = 1.0;
  }
  return t;
}

// Uniform with-replacement batch sampling (every sample equally likely in
// every draw, so a much-larger-than-N draw count still leaves about
// (1 - 1/N)^draws of the pool untouched).
inline std::vector<std::size_t> sample_batch_indices(Rng& rng, std::size_t pool,
                                                     std::size_t count) {
  if (pool == 0) throw DataError("sample_batch_indices: empty pool");
  std::vector<std::size_t> out(count);
  for (auto& i : out) i = rng.index(pool);
  return out;
}

struct TrainConfig {
  std::int64_t batch_size = 1024;
  std::int64_t batches_per_epoch = 16000;
  int epochs = 30;
  ad::AdamConfig adam;
  double logistic_l2 = 1e-4;
  int logistic_epoch_cap = 20;
  double logistic_rel_tol = 1e-3;  // stop on relative epoch-loss improvement below this
  std::uint64_t seed = 0;
};

inline void validate_train_config(const TrainConfig& c) {
  if (c.batch_size < 1) throw ConfigError("train: batch_size must be positive");
  if (c.batches_per_epoch < 1) throw ConfigError("train: batches_per_epoch must be positive");
  if (c.epochs < 1) throw ConfigError("train: epochs must be positive");
  if (!(c.adam.lr > 0.0)) throw ConfigError("train: learning rate must be positive");
  if (c.logistic_l2 < 0.0) throw ConfigError("train: l2 must be non-negative");
}

struct TrainResult {
  std::vector<double> epoch_losses;  // mean batch objective per epoch
  std::int64_t steps = 0;
  bool stopped_early = false;
};

inline TrainResult train_model(Model& model, ad::Adam& adam, const SampleSet& train,
                               const TrainConfig& cfg) {
  validate_train_config(cfg);
  if (!model.trainable())
    throw ConfigError(std::string("model '") + model_name(model.kind()) + "' is not trainable");
  if (train.size() == 0) throw DataError("train: no samples");

  Rng rng(cfg.seed);
  const bool logistic = model.kind() == ModelKind::logistic;
  const int epochs = logistic ? std::min(cfg.epochs, cfg.logistic_epoch_cap) : cfg.epochs;
  const std::vector<ad::Var> penalized = logistic ? model.penalized_params() : std::vector<ad::Var>{};

  TrainResult result;
  const std::int64_t width = train.window * static_cast<std::int64_t>(train.features->cols);
  std::vector<std::int64_t> rows(static_cast<std::size_t>(cfg.batch_size));
  std::vector<std::int8_t> cls(static_cast<std::size_t>(cfg.batch_size));

  for (int epoch = 0; epoch < epochs; ++epoch) {
    double loss_sum = 0.0;
    for (std::int64_t b = 0; b < cfg.batches_per_epoch; ++b) {
      const auto picks =
          sample_batch_indices(rng, train.size(), static_cast<std::size_t>(cfg.batch_size));
      for (std::size_t i = 0; i < picks.size(); ++i) {
        rows[i] = train.row[picks[i]];
        cls[i] = train.cls[picks[i]];
      }
      ad::Tensor input({cfg.batch_size, width});
      gather_windows(*train.features, train.window, rows.data(), rows.size(), input);
      try {
        const ad::Var x = ad::constant(std::move(input));
        ad::Var loss = ad::softmax_cross_entropy(model.logits(x), one_hot(cls.data(), cls.size()));
        if (logistic && cfg.logistic_l2 > 0.0) {
          for (const auto& w : penalized)
            loss = ad::add(loss, ad::scale(ad::sumsq(w), 0.5 * cfg.logistic_l2));
        }
        ad::zero_grad(model.params());
        ad::backward(loss);
        adam.step(model.params());
        loss_sum += loss->value[0];
      } catch (const NumericError& e) {
        throw NumericError(std::string("training ") + model_name(model.kind()) + ", epoch " +
                           std::to_string(epoch) + ", batch " + std::to_string(b) + ": " +
                           e.what());
      }
      ++result.steps;
    }
    const double epoch_loss = loss_sum / static_cast<double>(cfg.batches_per_epoch);
    require_finite(epoch_loss, "epoch loss");
    result.epoch_losses.push_back(epoch_loss);
    if (logistic && result.epoch_losses.size() >= 2) {
      const double prev = result.epoch_losses[result.epoch_losses.size() - 2];
      const double rel = (prev - epoch_loss) / std::max(std::abs(prev), 1e-12);
      if (rel < cfg.logistic_rel_tol) {
        result.stopped_early = true;
        break;
      }
    }
  }
  return result;
}

// --- evaluation ---------------------------------------------------------------

struct FoldRange {
  std::int64_t begin = 0;
  std::int64_t end = 0;
  std::int64_t size() const { return end - begin; }
};

// Chronological, non-overlapping, equal-size folds; the remainder after the
// last full fold is dropped. A test set smaller than one fold is an error.
inline std::vector<FoldRange> make_test_folds(std::int64_t n_samples, std::int64_t fold_size) {
  if (fold_size < 1) throw ConfigError("fold_size must be positive");
  if (n_samples < fold_size)
    throw DataError("test set (" + std::to_string(n_samples) + " samples) smaller than one fold (" +
                    std::to_string(fold_size) + ")");
  std::vector<FoldRange> folds;
  for (std::int64_t at = 0; at + fold_size <= n_samples; at += fold_size)
    folds.push_back(FoldRange{at, at + fold_size});
  return folds;
}

// Forward the trained model over one fold in chunks.
inline Confusion evaluate_model_fold(const Model& model, const SampleSet& test,
                                     const FoldRange& fold, std::int64_t eval_batch = 512) {
  if (fold.begin < 0 || fold.end > static_cast<std::int64_t>(test.size()) ||
      fold.begin >= fold.end)
    throw ConfigError("evaluate: bad fold range");
  Confusion m;
  const std::int64_t width = test.window * static_cast<std::int64_t>(test.features->cols);
  for (std::int64_t at = fold.begin; at < fold.end; at += eval_batch) {
    const std::int64_t n = std::min(eval_batch, fold.end - at);
    ad::Tensor input({n, width});
    gather_windows(*test.features, test.window, test.row.data() + at,
                   static_cast<std::size_t>(n), input);
    const std::vector<int> preds = model.predict_classes(std::move(input));
    for (std::int64_t i = 0; i < n; ++i)
      m.add(test.cls[static_cast<std::size_t>(at + i)], preds[static_cast<std::size_t>(i)]);
  }
  return m;
}

// Score fixed predictions (baselines) over one fold.
inline Confusion evaluate_predictions_fold(const std::vector<int>& preds, const SampleSet& test,
                                           const FoldRange& fold) {
  if (preds.size() != test.size())
    throw ConfigError("evaluate: prediction count mismatch");
  Confusion m;
  for (std::int64_t i = fold.begin; i < fold.end; ++i)
    m.add(test.cls[static_cast<std::size_t>(i)], preds[static_cast<std::size_t>(i)]);
  return m;
}

// --- metrics CSV ---------------------------------------------------------------

struct MetricsRow {
  std::string model;
  int horizon = 0;
  FoldMetrics metrics;
};

inline const char* kMetricsCsvHeader =
    "model,horizon,fold,n,"
    "c_dd,c_df,c_du,c_fd,c_ff,c_fu,c_ud,c_uf,c_uu,"
    "accuracy,balanced_accuracy,weighted_precision,weighted_recall,weighted_f1,"
    "precision_down,recall_down,f1_down,precision_flat,recall_flat,f1_flat,"
    "precision_up,recall_up,f1_up,mcc,kappa";

inline void write_metrics_csv(const std::string& path, const std::vector<MetricsRow>& rows,
                              const std::string& comment = {}) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot open metrics file for write: " + path);
  if (!comment.empty()) out << "# " << comment << '\n';
  out << kMetricsCsvHeader << '\n';
  for (const auto& r : rows) {
    out << r.model << ',' << r.horizon << ',' << r.metrics.fold << ','
        << r.metrics.confusion.total();
    for (int t = 0; t < kNumClasses; ++t)
      for (int p = 0; p < kNumClasses; ++p) out << ',' << r.metrics.confusion.at(t, p);
    for (const auto& name : std::vector<std::string>{"accuracy", "balanced_accuracy",
                                                     "weighted_precision", "weighted_recall",
                                                     "weighted_f1"})
      out << ',' << format_double(r.metrics.metric(name));
    for (const char* cls : {"down", "flat", "up"}) {
      out << ',' << format_double(r.metrics.metric(std::string("precision_") + cls));
      out << ',' << format_double(r.metrics.metric(std::string("recall_") + cls));
      out << ',' << format_double(r.metrics.metric(std::string("f1_") + cls));
    }
    out << ',' << format_double(r.metrics.mcc) << ',' << format_double(r.metrics.kappa) << '\n';
  }
  if (!out) throw DataError("write failed: " + path);
}

inline std::vector<MetricsRow> read_metrics_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open metrics file: " + path);
  std::string line;
  std::vector<MetricsRow> rows;
  std::size_t line_no = 0;
  bool header_seen = false;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line[0] == '#') continue;
    if (!header_seen) {
      if (line != kMetricsCsvHeader)
        throw DataError("metrics file has unexpected header: " + path);
      header_seen = true;
      continue;
    }
    const auto f = split_csv_row(line);
    const std::string where = path + ":" + std::to_string(line_no);
    if (f.size() != 29) throw DataError(where + ": expected 29 fields");
    MetricsRow r;
    r.model = std::string(f[0]);
    r.horizon = static_cast<int>(parse_int_field(f[1], where));
    const int fold = static_cast<int>(parse_int_field(f[2], where));
    Confusion m;
    std::size_t at = 4;
    for (int t = 0; t < kNumClasses; ++t)
      for (int p = 0; p < kNumClasses; ++p) m.add(t, p, parse_int_field(f[at++], where));
    r.metrics = FoldMetrics::from_confusion(fold, m);
    rows.push_back(std::move(r));
  }
  if (!header_seen) throw DataError("metrics file empty: " + path);
  return rows;
}

}  // namespace lobbench
