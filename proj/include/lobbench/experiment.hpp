#pragma once

// Experiment orchestration: one config, six stages (ingest, label, train,
// evaluate, compare, report), one output directory.
//
// Stages communicate through files only, so a run can stop and resume: the
// manifest records which stages completed under which config hash, and a
// completed stage is never recomputed. Every stage seeds its randomness
// from derive_seed(global_seed, stable_tag), so adding a model or running
// stages in separate processes cannot perturb another job's stream, and
// worker count never changes results (jobs own disjoint seeds; outputs are
// written in canonical order after all jobs finish).
//
// The config hash stamped on outputs covers the experiment identity: all
// config fields EXCEPT out_dir and workers, which affect where and how fast
// results are computed, never what they are.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "lobbench/bayes.hpp"
#include "lobbench/checkpoint.hpp"
#include "lobbench/labeling.hpp"
#include "lobbench/metrics.hpp"
#include "lobbench/models.hpp"
#include "lobbench/orderbook_io.hpp"
#include "lobbench/pipeline.hpp"
#include "lobbench/ranking.hpp"
#include "lobbench/report.hpp"
#include "lobbench/scaler.hpp"
#include "lobbench/synthetic.hpp"
#include "lobbench/windows.hpp"

namespace lobbench {

using ordered_json = nlohmann::ordered_json;

// ---------------------------------------------------------------------------
// Config
// ---------------------------------------------------------------------------

struct DataConfig {
  std::string source = "synthetic";  // "synthetic" | "files"
  std::string files_dir;             // directory of snapshot CSVs (source == "files")
  double price_scale = 1e4;
  double train_fraction = 0.7;
  SyntheticConfig synthetic;  // events/signal/... ; seed is derived at ingest
};

struct EvalConfig {
  std::int64_t fold_size = 500000;
  std::int64_t eval_batch = 512;
};

struct CompareConfig {
  double rope = kDefaultRope;
  double rho = -1.0;  // <= 0: default 1/k
  double threshold = kDefaultVerdictThreshold;
  std::vector<std::string> metrics = {"balanced_accuracy", "weighted_f1", "mcc"};
};

struct ExperimentConfig {
  std::uint64_t seed = 0;
  std::string out_dir = "run";
  int workers = 1;
  DataConfig data;
  std::vector<int> horizons = {10, 50, 100};
  std::vector<ModelKind> models = all_model_kinds();
  TrainConfig train;  // .seed is derived per job and ignored here
  EvalConfig eval;
  CompareConfig compare;
};

namespace detail {

inline void require_keys(const nlohmann::json& j, const std::vector<std::string>& allowed,
                         const std::string& where) {
  for (const auto& [key, value] : j.items()) {
    (void)value;
    bool ok = false;
    for (const auto& a : allowed)
      if (key == a) ok = true;
    if (!ok) throw ConfigError("unknown config key '" + key + "' in " + where);
  }
}

}  // namespace detail

inline ordered_json experiment_config_to_json(const ExperimentConfig& c) {
  ordered_json j;
  j["seed"] = c.seed;
  j["out_dir"] = c.out_dir;
  j["workers"] = c.workers;
  auto& jd = j["data"];
  jd["source"] = c.data.source;
  jd["files_dir"] = c.data.files_dir;
  jd["price_scale"] = c.data.price_scale;
  jd["train_fraction"] = c.data.train_fraction;
  auto& js = jd["synthetic"];
  js["events"] = c.data.synthetic.events;
  js["signal_strength"] = c.data.synthetic.signal_strength;
  js["tick_size"] = c.data.synthetic.tick_size;
  js["lot_size"] = c.data.synthetic.lot_size;
  js["initial_mid"] = c.data.synthetic.initial_mid;
  js["depth"] = c.data.synthetic.depth;
  js["move_prob"] = c.data.synthetic.move_prob;
  js["flip_prob"] = c.data.synthetic.flip_prob;
  js["band_fraction"] = c.data.synthetic.band_fraction;
  js["max_move_ticks"] = c.data.synthetic.max_move_ticks;
  j["horizons"] = c.horizons;
  auto& jm = j["models"] = ordered_json::array();
  for (const ModelKind k : c.models) jm.push_back(model_name(k));
  auto& jt = j["train"];
  jt["batch_size"] = c.train.batch_size;
  jt["batches_per_epoch"] = c.train.batches_per_epoch;
  jt["epochs"] = c.train.epochs;
  jt["learning_rate"] = c.train.adam.lr;
  jt["beta1"] = c.train.adam.beta1;
  jt["beta2"] = c.train.adam.beta2;
  jt["epsilon"] = c.train.adam.eps;
  jt["logistic_l2"] = c.train.logistic_l2;
  jt["logistic_epoch_cap"] = c.train.logistic_epoch_cap;
  jt["logistic_rel_tol"] = c.train.logistic_rel_tol;
  auto& je = j["evaluate"];
  je["fold_size"] = c.eval.fold_size;
  je["eval_batch"] = c.eval.eval_batch;
  auto& jc = j["compare"];
  jc["rope"] = c.compare.rope;
  jc["rho"] = c.compare.rho;
  jc["threshold"] = c.compare.threshold;
  jc["metrics"] = c.compare.metrics;
  return j;
}

inline ExperimentConfig experiment_config_from_json(const nlohmann::json& j) {
  ExperimentConfig c;
  detail::require_keys(j, {"seed", "out_dir", "workers", "data", "horizons", "models", "train",
                           "evaluate", "compare"},
                       "config root");
  if (j.contains("seed")) c.seed = j["seed"].get<std::uint64_t>();
  if (j.contains("out_dir")) c.out_dir = j["out_dir"].get<std::string>();
  if (j.contains("workers")) c.workers = j["workers"].get<int>();
  if (j.contains("data")) {
    const auto& jd = j["data"];
    detail::require_keys(jd, {"source", "files_dir", "price_scale", "train_fraction", "synthetic"},
                         "data");
    if (jd.contains("source")) c.data.source = jd["source"].get<std::string>();
    if (jd.contains("files_dir")) c.data.files_dir = jd["files_dir"].get<std::string>();
    if (jd.contains("price_scale")) c.data.price_scale = jd["price_scale"].get<double>();
    if (jd.contains("train_fraction"))
      c.data.train_fraction = jd["train_fraction"].get<double>();
    if (jd.contains("synthetic")) {
      const auto& js = jd["synthetic"];
      detail::require_keys(js,
                           {"events", "signal_strength", "tick_size", "lot_size", "initial_mid",
                            "depth", "move_prob", "flip_prob", "band_fraction",
                            "max_move_ticks"},
                           "data.synthetic");
      if (js.contains("events")) c.data.synthetic.events = js["events"].get<std::size_t>();
      if (js.contains("signal_strength"))
        c.data.synthetic.signal_strength = js["signal_strength"].get<double>();
      if (js.contains("tick_size")) c.data.synthetic.tick_size = js["tick_size"].get<double>();
      if (js.contains("lot_size"))
        c.data.synthetic.lot_size = js["lot_size"].get<std::int64_t>();
      if (js.contains("initial_mid"))
        c.data.synthetic.initial_mid = js["initial_mid"].get<double>();
      if (js.contains("depth")) c.data.synthetic.depth = js["depth"].get<std::size_t>();
      if (js.contains("move_prob")) c.data.synthetic.move_prob = js["move_prob"].get<double>();
      if (js.contains("flip_prob")) c.data.synthetic.flip_prob = js["flip_prob"].get<double>();
      if (js.contains("band_fraction"))
        c.data.synthetic.band_fraction = js["band_fraction"].get<double>();
      if (js.contains("max_move_ticks"))
        c.data.synthetic.max_move_ticks = js["max_move_ticks"].get<std::int64_t>();
    }
  }
  if (j.contains("horizons")) c.horizons = j["horizons"].get<std::vector<int>>();
  if (j.contains("models")) {
    c.models.clear();
    for (const auto& name : j["models"]) c.models.push_back(model_from_name(name));
  }
  if (j.contains("train")) {
    const auto& jt = j["train"];
    detail::require_keys(jt,
                         {"batch_size", "batches_per_epoch", "epochs", "learning_rate", "beta1",
                          "beta2", "epsilon", "logistic_l2", "logistic_epoch_cap",
                          "logistic_rel_tol"},
                         "train");
    if (jt.contains("batch_size")) c.train.batch_size = jt["batch_size"].get<std::int64_t>();
    if (jt.contains("batches_per_epoch"))
      c.train.batches_per_epoch = jt["batches_per_epoch"].get<std::int64_t>();
    if (jt.contains("epochs")) c.train.epochs = jt["epochs"].get<int>();
    if (jt.contains("learning_rate")) c.train.adam.lr = jt["learning_rate"].get<double>();
    if (jt.contains("beta1")) c.train.adam.beta1 = jt["beta1"].get<double>();
    if (jt.contains("beta2")) c.train.adam.beta2 = jt["beta2"].get<double>();
    if (jt.contains("epsilon")) c.train.adam.eps = jt["epsilon"].get<double>();
    if (jt.contains("logistic_l2")) c.train.logistic_l2 = jt["logistic_l2"].get<double>();
    if (jt.contains("logistic_epoch_cap"))
      c.train.logistic_epoch_cap = jt["logistic_epoch_cap"].get<int>();
    if (jt.contains("logistic_rel_tol"))
      c.train.logistic_rel_tol = jt["logistic_rel_tol"].get<double>();
  }
  if (j.contains("evaluate")) {
    const auto& je = j["evaluate"];
    detail::require_keys(je, {"fold_size", "eval_batch"}, "evaluate");
    if (je.contains("fold_size")) c.eval.fold_size = je["fold_size"].get<std::int64_t>();
    if (je.contains("eval_batch")) c.eval.eval_batch = je["eval_batch"].get<std::int64_t>();
  }
  if (j.contains("compare")) {
    const auto& jc = j["compare"];
    detail::require_keys(jc, {"rope", "rho", "threshold", "metrics"}, "compare");
    if (jc.contains("rope")) c.compare.rope = jc["rope"].get<double>();
    if (jc.contains("rho")) c.compare.rho = jc["rho"].get<double>();
    if (jc.contains("threshold")) c.compare.threshold = jc["threshold"].get<double>();
    if (jc.contains("metrics"))
      c.compare.metrics = jc["metrics"].get<std::vector<std::string>>();
  }
  return c;
}

inline void validate_experiment_config(const ExperimentConfig& c) {
  if (c.models.empty()) throw ConfigError("config: at least one model required");
  for (std::size_t i = 0; i < c.models.size(); ++i)
    for (std::size_t k = i + 1; k < c.models.size(); ++k)
      if (c.models[i] == c.models[k])
        throw ConfigError(std::string("config: duplicate model ") + model_name(c.models[i]));
  if (c.horizons.empty()) throw ConfigError("config: at least one horizon required");
  for (std::size_t i = 0; i < c.horizons.size(); ++i) {
    if (c.horizons[i] < 1) throw ConfigError("config: horizons must be positive");
    for (std::size_t k = i + 1; k < c.horizons.size(); ++k)
      if (c.horizons[i] == c.horizons[k]) throw ConfigError("config: duplicate horizon");
  }
  if (c.workers < 1) throw ConfigError("config: workers must be positive");
  if (c.out_dir.empty()) throw ConfigError("config: out_dir required");
  if (c.data.source != "synthetic" && c.data.source != "files")
    throw ConfigError("config: data.source must be 'synthetic' or 'files'");
  if (c.data.source == "files" && c.data.files_dir.empty())
    throw ConfigError("config: data.files_dir required for source 'files'");
  if (!(c.data.price_scale > 0.0)) throw ConfigError("config: price_scale must be positive");
  if (!(c.data.train_fraction > 0.0 && c.data.train_fraction < 1.0))
    throw ConfigError("config: train_fraction must be in (0, 1)");
  if (c.data.source == "synthetic") validate_config(c.data.synthetic);
  validate_train_config(c.train);
  if (c.eval.fold_size < 1) throw ConfigError("config: fold_size must be positive");
  if (c.eval.eval_batch < 1) throw ConfigError("config: eval_batch must be positive");
  if (c.compare.rope < 0.0) throw ConfigError("config: rope must be non-negative");
  if (c.compare.rho >= 1.0) throw ConfigError("config: rho must be below 1");
  if (!(c.compare.threshold > 0.5 && c.compare.threshold <= 1.0))
    throw ConfigError("config: threshold must be in (0.5, 1]");
  if (c.compare.metrics.empty()) throw ConfigError("config: compare.metrics required");
  for (const auto& m : c.compare.metrics) {
    bool known = false;
    for (const auto& k : all_metric_names())
      if (m == k) known = true;
    if (!known) throw ConfigError("config: unknown compare metric '" + m + "'");
  }
}

inline std::string to_hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
  return std::string(buf, 16);
}

// Identity hash of the experiment: everything except placement (out_dir)
// and execution width (workers).
inline std::string experiment_config_hash(const ExperimentConfig& c) {
  ordered_json j = experiment_config_to_json(c);
  j.erase("out_dir");
  j.erase("workers");
  return to_hex64(fnv1a64(j.dump()));
}

inline ExperimentConfig load_experiment_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file: " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("config file " + path + " is not valid JSON: " + e.what());
  }
  return experiment_config_from_json(j);
}

// ---------------------------------------------------------------------------
// Stages
// ---------------------------------------------------------------------------

enum class Stage : int { ingest = 0, label, train, evaluate, compare, report };

inline const char* stage_name(Stage s) {
  switch (s) {
    case Stage::ingest: return "ingest";
    case Stage::label: return "label";
    case Stage::train: return "train";
    case Stage::evaluate: return "evaluate";
    case Stage::compare: return "compare";
    case Stage::report: return "report";
  }
  throw ConfigError("unknown stage");
}

inline std::vector<Stage> all_stages() {
  return {Stage::ingest, Stage::label,   Stage::train,
          Stage::evaluate, Stage::compare, Stage::report};
}

namespace detail {

// Run jobs with a bounded worker pool. Results must be written into
// pre-sized slots; errors are rethrown in job order after all workers stop.
inline void run_jobs(std::vector<std::function<void()>>& jobs, int workers) {
  if (jobs.empty()) return;
  const int width = std::min<int>(workers, static_cast<int>(jobs.size()));
  std::vector<std::exception_ptr> errors(jobs.size());
  if (width <= 1) {
    for (std::size_t i = 0; i < jobs.size(); ++i) {
      try {
        jobs[i]();
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(width));
    for (int w = 0; w < width; ++w) {
      pool.emplace_back([&] {
        while (true) {
          const std::size_t i = next.fetch_add(1);
          if (i >= jobs.size()) return;
          try {
            jobs[i]();
          } catch (...) {
            errors[i] = std::current_exception();
          }
        }
      });
    }
    for (auto& t : pool) t.join();
  }
  for (const auto& e : errors)
    if (e) std::rethrow_exception(e);
}

inline std::string hash_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open file for hashing: " + path);
  std::uint64_t h = 0xcbf29ce484222325ULL;
  char buf[65536];
  while (in.read(buf, sizeof(buf)) || in.gcount() > 0) {
    const std::streamsize n = in.gcount();
    for (std::streamsize i = 0; i < n; ++i) {
      h ^= static_cast<unsigned char>(buf[i]);
      h *= 0x100000001b3ULL;
    }
    if (!in) break;
  }
  return to_hex64(h);
}

}  // namespace detail

// Scaled feature rows for one data split, segment boundaries preserved so
// windows never straddle files.
struct SegmentedFeatures {
  FeatureTable table;
  std::vector<std::int64_t> offsets;  // first row of each segment
  std::vector<std::int64_t> sizes;
};

class ExperimentRun {
public:
  explicit ExperimentRun(ExperimentConfig cfg) : cfg_(std::move(cfg)) {
    validate_experiment_config(cfg_);
    hash_ = experiment_config_hash(cfg_);
  }

  const ExperimentConfig& config() const { return cfg_; }
  const std::string& config_hash() const { return hash_; }

  std::filesystem::path out_dir() const { return cfg_.out_dir; }
  std::filesystem::path manifest_path() const { return out_dir() / "manifest.json"; }
  std::filesystem::path data_dir() const { return out_dir() / "data"; }
  std::filesystem::path labels_dir() const { return out_dir() / "labels"; }
  std::filesystem::path checkpoints_dir() const { return out_dir() / "checkpoints"; }
  std::filesystem::path report_dir() const { return out_dir() / "report"; }
  std::filesystem::path scaler_path() const { return out_dir() / "scaler.json"; }
  std::filesystem::path metrics_path() const { return out_dir() / "metrics.csv"; }
  std::filesystem::path decisions_path() const { return out_dir() / "decisions.csv"; }
  std::filesystem::path ranking_path() const { return out_dir() / "ranking.json"; }

  std::filesystem::path labels_path(const char* split, int horizon) const {
    return labels_dir() / (std::string(split) + "_h" + std::to_string(horizon) + ".csv");
  }
  std::filesystem::path checkpoint_path(ModelKind kind, int horizon) const {
    return checkpoints_dir() /
           (std::string(model_name(kind)) + "_h" + std::to_string(horizon) + ".ckpt");
  }

  bool stage_completed(Stage s) const {
    if (!manifest_.contains("stages")) return false;
    const auto& st = manifest_["stages"];
    return st.contains(stage_name(s)) && st[stage_name(s)].value("completed", false);
  }

  // Run one stage if it has not completed yet. Prerequisite stages must be
  // complete. Returns false when the stage was skipped as already done.
  bool run_stage(Stage s) {
    open_manifest();
    if (stage_completed(s)) return false;
    for (const Stage prev : all_stages()) {
      if (prev == s) break;
      if (!stage_completed(prev))
        throw DataError(std::string("stage '") + stage_name(s) + "' requires completed stage '" +
                        stage_name(prev) + "'; run it (or run-all) first");
    }
    switch (s) {
      case Stage::ingest: stage_ingest(); break;
      case Stage::label: stage_label(); break;
      case Stage::train: stage_train(); break;
      case Stage::evaluate: stage_evaluate(); break;
      case Stage::compare: stage_compare(); break;
      case Stage::report: stage_report(); break;
    }
    manifest_["stages"][stage_name(s)]["completed"] = true;
    save_manifest();
    return true;
  }

  // All stages in order; completed ones are skipped.
  void run_all() {
    for (const Stage s : all_stages()) run_stage(s);
  }

private:
  // --- manifest ---------------------------------------------------------------

  void open_manifest() {
    if (manifest_open_) return;
    std::filesystem::create_directories(out_dir());
    if (std::filesystem::exists(manifest_path())) {
      std::ifstream in(manifest_path());
      if (!in) throw DataError("cannot open manifest: " + manifest_path().string());
      try {
        in >> manifest_;
      } catch (const nlohmann::json::exception& e) {
        throw DataError("manifest is not valid JSON: " + std::string(e.what()));
      }
      const std::string existing = manifest_.value("config_hash", "");
      if (existing != hash_)
        throw ConfigError("output directory " + out_dir().string() +
                          " holds a run with a different config (hash " + existing +
                          " vs " + hash_ + "); use a fresh --out");
    } else {
      manifest_ = ordered_json();
      manifest_["config_hash"] = hash_;
      manifest_["config"] = experiment_config_to_json(cfg_);
      manifest_["stages"] = ordered_json::object();
      save_manifest();
    }
    manifest_open_ = true;
  }

  void save_manifest() {
    std::ofstream out(manifest_path());
    if (!out) throw DataError("cannot write manifest: " + manifest_path().string());
    out << manifest_.dump(2) << '\n';
    if (!out) throw DataError("manifest write failed");
  }

  std::uint64_t seed_for(const std::string& tag) {
    const std::uint64_t s = derive_seed(cfg_.seed, tag);
    manifest_["seeds"][tag] = s;
    return s;
  }

  // --- data plumbing ----------------------------------------------------------

  // Snapshot files of one split, in segment order.
  std::vector<std::string> split_files(bool train) const {
    const char* split = train ? "train" : "test";
    if (!manifest_.contains("data") || !manifest_["data"].contains(split))
      throw DataError(std::string("manifest lacks data file list for ") + split +
                      "; run ingest first");
    return manifest_["data"][split].get<std::vector<std::string>>();
  }

  ParseOptions parse_options() const {
    ParseOptions opt;
    opt.price_scale = cfg_.data.price_scale;
    opt.policy = InvalidRowPolicy::reject;
    opt.depth = cfg_.data.source == "synthetic" ? cfg_.data.synthetic.depth : kDefaultDepth;
    return opt;
  }

  // Source snapshot files for a "files" run, sorted by name for stable
  // segment order.
  std::vector<std::string> list_source_files() const {
    std::vector<std::string> files;
    const std::filesystem::path dir(cfg_.data.files_dir);
    if (!std::filesystem::is_directory(dir))
      throw DataError("data.files_dir is not a directory: " + dir.string());
    for (const auto& e : std::filesystem::directory_iterator(dir))
      if (e.is_regular_file() && e.path().extension() == ".csv")
        files.push_back(e.path().string());
    std::sort(files.begin(), files.end());
    if (files.empty()) throw DataError("no .csv snapshot files in " + dir.string());
    return files;
  }

  std::vector<double> segment_mids(const std::string& path) const {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open snapshot file: " + path);
    std::vector<double> mids;
    parse_orderbook_stream(in, parse_options(),
                           [&mids](LobState&& s) { mids.push_back(mid_price(s)); });
    return mids;
  }

  SegmentedFeatures load_features(bool train, const ScalerParams& scaler) const {
    SegmentedFeatures out;
    out.table.cols = scaler.columns_seen;
    std::vector<double> flat(scaler.columns_seen);
    for (const auto& path : split_files(train)) {
      std::ifstream in(path);
      if (!in) throw DataError("cannot open snapshot file: " + path);
      out.offsets.push_back(static_cast<std::int64_t>(out.table.rows));
      std::size_t rows_before = out.table.rows;
      parse_orderbook_stream(in, parse_options(), [&](LobState&& s) {
        flatten(s, flat.data());
        out.table.values.resize(out.table.values.size() + out.table.cols);
        transform_row(scaler, flat.data(),
                      out.table.values.data() + out.table.rows * out.table.cols);
        ++out.table.rows;
      });
      out.sizes.push_back(static_cast<std::int64_t>(out.table.rows - rows_before));
    }
    return out;
  }

  SampleSet build_sample_set(const SegmentedFeatures& feats,
                             const std::vector<LabeledSample>& labels) const {
    SampleSet set;
    set.features = &feats.table;
    set.window = static_cast<std::int64_t>(kWindowLength);
    for (const auto& l : labels) {
      if (l.file_id < 0 || static_cast<std::size_t>(l.file_id) >= feats.offsets.size())
        throw DataError("label references unknown segment " + std::to_string(l.file_id));
      if (l.t + 1 < set.window) continue;
      if (l.t >= feats.sizes[static_cast<std::size_t>(l.file_id)])
        throw DataError("label tick outside segment");
      set.row.push_back(feats.offsets[static_cast<std::size_t>(l.file_id)] + l.t);
      set.cls.push_back(static_cast<std::int8_t>(class_index(l.label)));
    }
    return set;
  }

  // --- stages -------------------------------------------------------------

  void stage_ingest() {
    std::filesystem::create_directories(data_dir());
    std::vector<std::string> train_files, test_files;
    if (cfg_.data.source == "synthetic") {
      SyntheticConfig sc = cfg_.data.synthetic;
      sc.seed = seed_for("ingest/synthetic");
      const std::vector<LobState> states = generate_synthetic_lob(sc);
      std::size_t n_train = static_cast<std::size_t>(
          std::llround(cfg_.data.train_fraction * static_cast<double>(states.size())));
      n_train = std::min(std::max<std::size_t>(n_train, 1), states.size() - 1);
      const std::string train_path = (data_dir() / "train.csv").string();
      const std::string test_path = (data_dir() / "test.csv").string();
      {
        std::ofstream out(train_path);
        if (!out) throw DataError("cannot open " + train_path);
        for (std::size_t i = 0; i < n_train; ++i)
          serialize_row(states[i], cfg_.data.price_scale, out);
      }
      {
        std::ofstream out(test_path);
        if (!out) throw DataError("cannot open " + test_path);
        for (std::size_t i = n_train; i < states.size(); ++i)
          serialize_row(states[i], cfg_.data.price_scale, out);
      }
      train_files = {train_path};
      test_files = {test_path};
    } else {
      const auto files = list_source_files();
      if (files.size() == 1) {
        // single feed: split rows chronologically into two segment files
        std::vector<LobState> states;
        ParseStats stats;
        {
          std::ifstream in(files[0]);
          if (!in) throw DataError("cannot open snapshot file: " + files[0]);
          states = parse_orderbook_csv(in, parse_options(), &stats);
        }
        if (states.size() < 2) throw DataError("snapshot file too short to split");
        std::size_t n_train = static_cast<std::size_t>(
            std::llround(cfg_.data.train_fraction * static_cast<double>(states.size())));
        n_train = std::min(std::max<std::size_t>(n_train, 1), states.size() - 1);
        const std::string train_path = (data_dir() / "train.csv").string();
        const std::string test_path = (data_dir() / "test.csv").string();
        {
          std::ofstream out(train_path);
          for (std::size_t i = 0; i < n_train; ++i)
            serialize_row(states[i], cfg_.data.price_scale, out);
        }
        {
          std::ofstream out(test_path);
          for (std::size_t i = n_train; i < states.size(); ++i)
            serialize_row(states[i], cfg_.data.price_scale, out);
        }
        train_files = {train_path};
        test_files = {test_path};
      } else {
        // one segment per file; leading fraction of files trains
        std::size_t n_train = static_cast<std::size_t>(
            std::llround(cfg_.data.train_fraction * static_cast<double>(files.size())));
        n_train = std::min(std::max<std::size_t>(n_train, 1), files.size() - 1);
        train_files.assign(files.begin(), files.begin() + static_cast<std::ptrdiff_t>(n_train));
        test_files.assign(files.begin() + static_cast<std::ptrdiff_t>(n_train), files.end());
      }
    }

    manifest_["data"]["train"] = train_files;
    manifest_["data"]["test"] = test_files;
    auto& hashes = manifest_["data"]["hashes"] = ordered_json::object();
    for (const auto& f : train_files)
      hashes[std::filesystem::path(f).filename().string()] = detail::hash_file(f);
    for (const auto& f : test_files)
      hashes[std::filesystem::path(f).filename().string()] = detail::hash_file(f);

    // scaler: column-wise min/max over the TRAIN split only, streamed
    MinMaxScaler scaler(4 * parse_options().depth);
    for (const auto& path : train_files) {
      std::ifstream in(path);
      if (!in) throw DataError("cannot open snapshot file: " + path);
      parse_orderbook_stream(in, parse_options(), [&](LobState&& s) { scaler.observe(s); });
    }
    ordered_json sj = scaler_to_json(scaler.params(), cfg_.data.price_scale);
    sj["config_hash"] = hash_;
    std::ofstream sout(scaler_path());
    if (!sout) throw DataError("cannot write scaler: " + scaler_path().string());
    sout << sj.dump(2) << '\n';
  }

  void stage_label() {
    std::filesystem::create_directories(labels_dir());
    std::vector<std::vector<double>> train_mids, test_mids;
    for (const auto& f : split_files(true)) train_mids.push_back(segment_mids(f));
    for (const auto& f : split_files(false)) test_mids.push_back(segment_mids(f));

    auto& jth = manifest_["thresholds"] = ordered_json::object();
    for (const int dt : cfg_.horizons) {
      const HorizonSpec h{dt};
      std::vector<HorizonTargets> train_targets, test_targets;
      std::vector<double> pooled;
      for (const auto& mids : train_mids) {
        train_targets.push_back(compute_horizon_targets(mids, h));
        const auto& t = train_targets.back().target;
        pooled.insert(pooled.end(), t.begin(), t.end());
      }
      if (pooled.empty())
        throw DataError("horizon " + std::to_string(dt) +
                        ": no training targets (series too short for this horizon)");
      const QuantileThresholds th = fit_quantile_thresholds(pooled);
      jth["h" + std::to_string(dt)] = {{"q25", th.q25}, {"q75", th.q75}};

      std::vector<LabeledSample> train_labels, test_labels;
      for (std::size_t f = 0; f < train_targets.size(); ++f) {
        const auto rows = classify_targets(train_targets[f], h, th, static_cast<int>(f));
        train_labels.insert(train_labels.end(), rows.begin(), rows.end());
      }
      for (std::size_t f = 0; f < test_mids.size(); ++f) {
        const auto targets = compute_horizon_targets(test_mids[f], h);
        const auto rows = classify_targets(targets, h, th, static_cast<int>(f));
        test_labels.insert(test_labels.end(), rows.begin(), rows.end());
      }
      write_labels_csv(labels_path("train", dt).string(), train_labels,
                       "config_hash: " + hash_);
      write_labels_csv(labels_path("test", dt).string(), test_labels,
                       "config_hash: " + hash_);
    }

    ordered_json tj;
    tj["config_hash"] = hash_;
    tj["thresholds"] = jth;
    std::ofstream out(labels_dir() / "thresholds.json");
    if (!out) throw DataError("cannot write thresholds.json");
    out << tj.dump(2) << '\n';
  }

  void stage_train() {
    std::filesystem::create_directories(checkpoints_dir());
    const ScalerParams scaler = load_scaler(scaler_path().string());
    const SegmentedFeatures feats = load_features(true, scaler);

    struct Job {
      ModelKind kind;
      int horizon;
      SampleSet samples;
      std::uint64_t model_seed, train_seed;
      std::vector<double> epoch_losses;
      std::int64_t steps = 0;
      bool stopped_early = false;
    };
    std::vector<Job> jobs;
    for (const ModelKind kind : cfg_.models) {
      if (!is_trainable(kind)) continue;
      for (const int dt : cfg_.horizons) {
        Job job;
        job.kind = kind;
        job.horizon = dt;
        job.samples = build_sample_set(feats, read_labels_csv(labels_path("train", dt).string()));
        const std::string tag = std::string(model_name(kind)) + "/h" + std::to_string(dt);
        job.model_seed = seed_for("model/" + tag);
        job.train_seed = seed_for("train/" + tag);
        jobs.push_back(std::move(job));
      }
    }

    std::vector<std::function<void()>> tasks;
    tasks.reserve(jobs.size());
    for (auto& job : jobs) {
      tasks.emplace_back([this, &job] {
        ModelSpec spec;
        spec.kind = job.kind;
        spec.seed = job.model_seed;
        Model model = Model::build(spec);
        ad::Adam adam(cfg_.train.adam, model.params());
        TrainConfig tc = cfg_.train;
        tc.seed = job.train_seed;
        const TrainResult res = train_model(model, adam, job.samples, tc);
        job.epoch_losses = res.epoch_losses;
        job.steps = res.steps;
        job.stopped_early = res.stopped_early;
        ordered_json meta;
        meta["model"] = model_name(job.kind);
        meta["horizon"] = job.horizon;
        meta["config_hash"] = hash_;
        meta["model_seed"] = job.model_seed;
        meta["train_seed"] = job.train_seed;
        save_checkpoint(checkpoint_path(job.kind, job.horizon).string(),
                        ad::make_checkpoint(std::move(meta), model.params(), &adam));
      });
    }
    detail::run_jobs(tasks, cfg_.workers);

    for (const auto& job : jobs) {
      auto& jt = manifest_["train"][std::string(model_name(job.kind)) + "_h" +
                                    std::to_string(job.horizon)];
      jt["epoch_losses"] = job.epoch_losses;
      jt["steps"] = job.steps;
      jt["stopped_early"] = job.stopped_early;
    }
  }

  void stage_evaluate() {
    const ScalerParams scaler = load_scaler(scaler_path().string());
    const SegmentedFeatures feats = load_features(false, scaler);

    struct Job {
      ModelKind kind;
      int horizon;
      SampleSet samples;
      std::vector<FoldRange> folds;
      std::uint64_t eval_seed = 0;
      std::vector<FoldMetrics> results;
    };
    std::vector<Job> jobs;
    for (const ModelKind kind : cfg_.models) {
      for (const int dt : cfg_.horizons) {
        Job job;
        job.kind = kind;
        job.horizon = dt;
        job.samples = build_sample_set(feats, read_labels_csv(labels_path("test", dt).string()));
        job.folds = make_test_folds(static_cast<std::int64_t>(job.samples.size()),
                                    cfg_.eval.fold_size);
        if (kind == ModelKind::random)
          job.eval_seed = seed_for("eval/random/h" + std::to_string(dt));
        jobs.push_back(std::move(job));
      }
    }

    std::vector<std::function<void()>> tasks;
    tasks.reserve(jobs.size());
    for (auto& job : jobs) {
      tasks.emplace_back([this, &job] {
        if (is_trainable(job.kind)) {
          const ad::CheckpointData ckpt =
              ad::load_checkpoint(checkpoint_path(job.kind, job.horizon).string());
          if (ckpt.meta.value("config_hash", "") != hash_)
            throw DataError("checkpoint for " + std::string(model_name(job.kind)) +
                            " belongs to a different config");
          ModelSpec spec;
          spec.kind = job.kind;
          spec.seed = ckpt.meta.at("model_seed").get<std::uint64_t>();
          Model model = Model::build(spec);
          ad::restore_checkpoint(ckpt, model.params(), nullptr);
          for (std::size_t f = 0; f < job.folds.size(); ++f) {
            const Confusion m =
                evaluate_model_fold(model, job.samples, job.folds[f], cfg_.eval.eval_batch);
            job.results.push_back(FoldMetrics::from_confusion(static_cast<int>(f), m));
          }
        } else {
          std::vector<int> preds;
          if (job.kind == ModelKind::random) {
            Rng rng(job.eval_seed);
            preds = random_predictions(job.samples.size(), rng);
          } else {
            preds = naive_predictions(job.samples.size());
          }
          for (std::size_t f = 0; f < job.folds.size(); ++f) {
            const Confusion m = evaluate_predictions_fold(preds, job.samples, job.folds[f]);
            job.results.push_back(FoldMetrics::from_confusion(static_cast<int>(f), m));
          }
        }
      });
    }
    detail::run_jobs(tasks, cfg_.workers);

    std::vector<MetricsRow> rows;
    for (const auto& job : jobs)
      for (const auto& fm : job.results)
        rows.push_back(MetricsRow{model_name(job.kind), job.horizon, fm});
    write_metrics_csv(metrics_path().string(), rows, "config_hash: " + hash_);

    for (const auto& job : jobs)
      manifest_["evaluate"][std::string(model_name(job.kind)) + "_h" +
                            std::to_string(job.horizon)]["folds"] =
          static_cast<std::int64_t>(job.folds.size());
  }

  void stage_compare() {
    const std::vector<MetricsRow> rows = read_metrics_csv(metrics_path().string());
    auto fold_values = [&](ModelKind kind, int horizon,
                           const std::string& metric) -> std::vector<double> {
      std::vector<std::pair<int, double>> found;
      for (const auto& r : rows)
        if (r.model == model_name(kind) && r.horizon == horizon)
          found.emplace_back(r.metrics.fold, r.metrics.metric(metric));
      std::sort(found.begin(), found.end());
      std::vector<double> out;
      out.reserve(found.size());
      for (const auto& [fold, v] : found) {
        (void)fold;
        out.push_back(v);
      }
      return out;
    };

    std::vector<PairDecision> decisions;
    std::vector<Ranking> rankings;
    std::vector<std::string> model_names;
    for (const ModelKind k : cfg_.models) model_names.push_back(model_name(k));

    for (const auto& metric : cfg_.compare.metrics) {
      for (const int dt : cfg_.horizons) {
        for (std::size_t i = 0; i < cfg_.models.size(); ++i) {
          for (std::size_t j = i + 1; j < cfg_.models.size(); ++j) {
            PairedDiffs diffs;
            diffs.model_a = model_name(cfg_.models[i]);
            diffs.model_b = model_name(cfg_.models[j]);
            diffs.metric = metric;
            diffs.horizon = dt;
            diffs.rho = cfg_.compare.rho;
            const auto a = fold_values(cfg_.models[i], dt, metric);
            const auto b = fold_values(cfg_.models[j], dt, metric);
            if (a.size() != b.size())
              throw DataError("fold count mismatch between " + diffs.model_a + " and " +
                              diffs.model_b);
            if (a.size() < 2)
              throw DataError("comparison needs at least 2 folds, got " +
                              std::to_string(a.size()));
            diffs.diffs.resize(a.size());
            for (std::size_t f = 0; f < a.size(); ++f) diffs.diffs[f] = b[f] - a[f];
            decisions.push_back(
                compare_pair(diffs, cfg_.compare.rope, cfg_.compare.threshold));
          }
        }
        rankings.push_back(build_ranking(model_names, decisions, metric, dt));
      }
    }

    write_decisions_csv(decisions_path().string(), decisions, "config_hash: " + hash_);

    ordered_json rj;
    rj["config_hash"] = hash_;
    rj["rope"] = cfg_.compare.rope;
    rj["threshold"] = cfg_.compare.threshold;
    auto& arr = rj["rankings"] = ordered_json::array();
    for (const auto& r : rankings) arr.push_back(ranking_to_json(r));
    std::ofstream out(ranking_path());
    if (!out) throw DataError("cannot write ranking.json");
    out << rj.dump(2) << '\n';
  }

  void stage_report() {
    std::filesystem::create_directories(report_dir());
    const std::vector<MetricsRow> rows = read_metrics_csv(metrics_path().string());

    std::vector<Ranking> rankings;
    {
      std::ifstream in(ranking_path());
      if (!in) throw DataError("cannot open ranking.json; run compare first");
      nlohmann::json rj;
      try {
        in >> rj;
      } catch (const nlohmann::json::exception& e) {
        throw DataError("ranking.json is not valid JSON: " + std::string(e.what()));
      }
      if (rj.value("config_hash", "") != hash_)
        throw DataError("ranking.json belongs to a different config");
      for (const auto& item : rj.at("rankings")) rankings.push_back(ranking_from_json(item));
    }

    std::vector<std::string> model_names;
    for (const ModelKind k : cfg_.models) model_names.push_back(model_name(k));
    const std::vector<ModelHorizonSummary> summaries =
        summarize_metrics(rows, model_names, cfg_.horizons);

    {
      std::ofstream out(report_dir() / "tables.txt");
      if (!out) throw DataError("cannot write tables.txt");
      out << "# config_hash: " << hash_ << '\n';
      out << render_tables(summaries, rankings, model_names, cfg_.horizons);
    }
    {
      std::ofstream out(report_dir() / "summary.csv");
      if (!out) throw DataError("cannot write summary.csv");
      out << "# config_hash: " << hash_ << '\n';
      out << render_summary_csv(summaries);
    }
    {
      std::ofstream out(report_dir() / "radar.svg");
      if (!out) throw DataError("cannot write radar.svg");
      std::vector<std::string> axes = cfg_.compare.metrics;
      if (axes.size() < 3) axes = {"balanced_accuracy", "weighted_f1", "mcc"};
      out << render_radar(summaries, axes, model_names, cfg_.horizons,
                          "config_hash: " + hash_);
    }
  }

  ExperimentConfig cfg_;
  std::string hash_;
  ordered_json manifest_;
  bool manifest_open_ = false;
};

}  // namespace lobbench
