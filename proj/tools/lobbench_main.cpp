// lobbench command-line interface.
//
// One subcommand per pipeline stage plus run-all. Every invocation loads a
// JSON config, applies any command-line overrides, and executes against an
// output directory whose manifest tracks completed stages, so stages can run
// in separate processes (or be re-run as no-ops).
//
// Exit codes: 0 success, 1 config error, 2 data error, 3 numerical failure.

#include <cstdio>
#include <exception>
#include <string>

#include <CLI11.hpp>

#include "lobbench/experiment.hpp"

namespace {

int run(int argc, char** argv) {
  CLI::App app{"lobbench: limit order book move-classification benchmark"};
  app.require_subcommand(1);
  app.fallthrough();

  std::string config_path;
  std::uint64_t seed = 0;
  std::string out_dir;
  int workers = 0;
  std::int64_t fold_size = 0;
  double rope = 0.0;
  double rho = 0.0;

  app.add_option("--config", config_path, "experiment config (JSON)")->required();
  auto* opt_seed = app.add_option("--seed", seed, "override config seed");
  auto* opt_out = app.add_option("--out", out_dir, "override output directory");
  auto* opt_workers = app.add_option("--workers", workers, "override worker count");
  auto* opt_fold = app.add_option("--fold-size", fold_size, "override evaluation fold size");
  auto* opt_rope = app.add_option("--rope", rope, "override rope half-width");
  auto* opt_rho = app.add_option("--rho", rho, "override fold correlation (<=0: 1/k)");

  const std::vector<std::pair<std::string, lobbench::Stage>> stages = {
      {"ingest", lobbench::Stage::ingest},     {"label", lobbench::Stage::label},
      {"train", lobbench::Stage::train},       {"evaluate", lobbench::Stage::evaluate},
      {"compare", lobbench::Stage::compare},   {"report", lobbench::Stage::report},
  };
  for (const auto& [name, stage] : stages) {
    (void)stage;
    app.add_subcommand(name, "run the " + name + " stage");
  }
  app.add_subcommand("run-all", "run every stage in order");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;  // usage problems are config errors
  }

  lobbench::ExperimentConfig cfg = lobbench::load_experiment_config(config_path);
  if (opt_seed->count() > 0) cfg.seed = seed;
  if (opt_out->count() > 0) cfg.out_dir = out_dir;
  if (opt_workers->count() > 0) cfg.workers = workers;
  if (opt_fold->count() > 0) cfg.eval.fold_size = fold_size;
  if (opt_rope->count() > 0) cfg.compare.rope = rope;
  if (opt_rho->count() > 0) cfg.compare.rho = rho;

  lobbench::ExperimentRun exp(std::move(cfg));
  std::printf("config hash: %s\n", exp.config_hash().c_str());
  std::printf("output dir:  %s\n", exp.out_dir().string().c_str());

  auto run_one = [&](lobbench::Stage s) {
    if (exp.run_stage(s))
      std::printf("%-8s : done\n", lobbench::stage_name(s));
    else
      std::printf("%-8s : skipped (already complete)\n", lobbench::stage_name(s));
  };

  if (app.got_subcommand("run-all")) {
    for (const auto& [name, stage] : stages) {
      (void)name;
      run_one(stage);
    }
  } else {
    for (const auto& [name, stage] : stages)
      if (app.got_subcommand(name)) run_one(stage);
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run(argc, argv);
  } catch (const lobbench::ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return 1;
  } catch (const lobbench::DataError& e) {
    std::fprintf(stderr, "data error: %s\n", e.what());
    return 2;
  } catch (const lobbench::NumericError& e) {
    std::fprintf(stderr, "numerical failure: %s\n", e.what());
    return 3;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "data error: %s\n", e.what());
    return 2;
  }
}
