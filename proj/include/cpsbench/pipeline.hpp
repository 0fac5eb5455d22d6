#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "cpsbench/manifest.hpp"
#include "cpsbench/mlcore.hpp"
#include "cpsbench/workloads.hpp"

namespace cpsbench::pipeline {

struct TrialSpec {
  ExperimentParams params;
  // Micro workloads may carry an explicit grid (sweep expansion uses
  // single-value grids); absent = the workload's default grid.
  std::optional<workloads::MicroGrid> grid;
};

struct TrialSummary {
  std::string trial_id;
  std::string csv_file;  // relative to out_dir
  std::size_t rows = 0;
  std::size_t rounds = 0;
  double duration_s = 0.0;
  std::size_t dropped_messages = 0;
};

struct RunResult {
  std::string out_dir;
  std::vector<TrialSummary> trials;
  std::size_t total_rows = 0;
  std::string combined_csv;  // empty if not written
  std::string rounds_csv;    // empty if no rounds
};

// Executes every trial (in parallel; seeds are derived per trial up
// front), writes one CSV per trial plus combined.csv and rounds.csv into
// out_dir. All files are written atomically; identical inputs and seeds
// give byte-identical outputs.
RunResult run_trials(const std::vector<TrialSpec>& specs,
                     const std::string& out_dir, std::uint64_t master_seed,
                     bool combined);
RunResult run_manifest(const RunManifest& m);

struct SweepOptions {
  std::string task = "app";  // "app" | "micro"
  bool one_factor = false;
  std::vector<double> velocity, acceleration, belt, payload;
  int rounds = 60;  // sorting rounds per app trial
  std::string out_dir = "out";
  std::uint64_t seed = 0;
};

// app: cross-product of the provided value lists (one-factor mode holds
// the others at velocity 50 / acceleration 100 / belt 40 / payload 195);
// no lists = the default one-factor star over the full application
// ranges. micro: one trial per provided value (arm, belt, payload
// sweeps); no lists = one trial per micro workload with default grids.
std::vector<TrialSpec> expand_sweep(const SweepOptions& opts);
RunResult run_sweep(const SweepOptions& opts);

struct AnalyzeResult {
  std::vector<std::string> figures;  // file names under <data>/figures
};
AnalyzeResult analyze(const std::string& data_dir);

struct TrainResult {
  std::vector<mlcore::CvResult> models;  // decision tree, RF, extra trees
  std::string table_text;
  std::string warning;
};
TrainResult train(const std::string& data_dir, mlcore::Task task, int folds,
                  std::uint64_t seed);

// Gathers run artifacts into <run_dir>/report.md and returns the text.
std::string report(const std::string& run_dir);

void write_rounds_csv(std::span<const workloads::RoundRecord> rounds,
                      const std::string& path);
std::vector<workloads::RoundRecord> read_rounds_csv(const std::string& path);

}  // namespace cpsbench::pipeline
