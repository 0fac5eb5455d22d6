#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <memory>
#include <string>

#include "CLI11.hpp"
#include "cpsbench.h"

namespace {

struct CtxDeleter {
  void operator()(cpsb_ctx* c) const { cpsb_ctx_free(c); }
};

bool env_seed(std::uint64_t& out) {
  const char* s = std::getenv("CPSBENCH_SEED");
  if (!s || !*s) return false;
  try {
    out = std::stoull(s);
    return true;
  } catch (const std::exception&) {
    std::fprintf(stderr, "CPSBENCH_SEED: expected an integer, got '%s'\n", s);
    std::exit(CPSB_ERR_USAGE);
  }
}

int finish(cpsb_ctx* ctx, int rc) {
  if (rc == CPSB_OK) {
    std::fputs(cpsb_last_output(ctx), stdout);
  } else {
    std::fprintf(stderr, "error: %s\n", cpsb_last_error(ctx));
  }
  return rc;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Benchmarking harness for a simulated sorting cell"};
  app.require_subcommand(1);

  std::string manifest, out_dir, sweep_out = "out", data_dir, run_dir;
  std::string sweep_task = "app", train_task;
  std::string velocity, acceleration, belt, payload;
  std::uint64_t seed = 0;
  bool one_factor = false;
  int rounds = 0, folds = 5;

  auto* run = app.add_subcommand("run", "Execute the experiments of a manifest");
  run->add_option("--manifest", manifest, "Manifest file")->required();
  run->add_option("--out", out_dir, "Output directory override");
  auto* run_seed = run->add_option("--seed", seed, "Master seed override");

  auto* sweep = app.add_subcommand("sweep", "Run a parameter sweep");
  sweep->add_option("--task", sweep_task, "app or micro");
  sweep->add_flag("--one-factor", one_factor,
                  "Vary one parameter at a time, others at defaults");
  sweep->add_option("--velocity", velocity, "Comma-separated velocity %");
  sweep->add_option("--acceleration", acceleration,
                    "Comma-separated acceleration %");
  sweep->add_option("--belt", belt, "Comma-separated belt speeds (mm/s)");
  sweep->add_option("--payload", payload, "Comma-separated payloads (g)");
  sweep->add_option("--rounds", rounds, "Sorting rounds per app trial");
  sweep->add_option("--out", sweep_out, "Output directory");
  auto* sweep_seed = sweep->add_option("--seed", seed, "Master seed");

  auto* analyze = app.add_subcommand("analyze", "Render figures for a dataset");
  analyze->add_option("--data", data_dir, "Dataset directory")->required();

  auto* train = app.add_subcommand("train", "Cross-validate the regressors");
  train->add_option("--data", data_dir, "Dataset directory")->required();
  train->add_option("--task", train_task,
                    "power_state, round_energy or round_duration")
      ->required();
  train->add_option("--folds", folds, "Cross-validation folds");
  auto* train_seed = train->add_option("--seed", seed, "Master seed");

  auto* report = app.add_subcommand("report", "Summarize a run directory");
  report->add_option("dir", run_dir, "Run directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return CPSB_ERR_USAGE;
  }

  std::unique_ptr<cpsb_ctx, CtxDeleter> ctx(cpsb_ctx_new());

  if (run->parsed()) {
    std::uint64_t s = seed;
    int has = run_seed->count() > 0 ? 1 : env_seed(s) ? 1 : 0;
    return finish(ctx.get(),
                  cpsb_run_manifest(ctx.get(), manifest.c_str(),
                                    out_dir.c_str(), s, has));
  }
  if (sweep->parsed()) {
    if (sweep_seed->count() == 0) env_seed(seed);
    return finish(ctx.get(),
                  cpsb_sweep(ctx.get(), sweep_task.c_str(), one_factor ? 1 : 0,
                             velocity.c_str(), acceleration.c_str(),
                             belt.c_str(), payload.c_str(), rounds,
                             sweep_out.c_str(), seed));
  }
  if (analyze->parsed())
    return finish(ctx.get(), cpsb_analyze(ctx.get(), data_dir.c_str()));
  if (train->parsed()) {
    if (train_seed->count() == 0) env_seed(seed);
    return finish(ctx.get(), cpsb_train(ctx.get(), data_dir.c_str(),
                                        train_task.c_str(), folds, seed));
  }
  return finish(ctx.get(), cpsb_report(ctx.get(), run_dir.c_str()));
}
