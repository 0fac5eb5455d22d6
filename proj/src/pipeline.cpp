#include "cpsbench/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>
#include <thread>

#include "cpsbench/analysis.hpp"
#include "cpsbench/control.hpp"

namespace fs = std::filesystem;

namespace cpsbench::pipeline {

namespace {

using telemetry::format_double;

std::uint64_t mix(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

std::string num_id(double v) {
  if (v == std::floor(v))
    return std::to_string(static_cast<long long>(v));
  std::string s = format_double(v);
  std::replace(s.begin(), s.end(), '.', 'p');
  return s;
}

control::RunLog build_and_run(const TrialSpec& spec) {
  InstructionProgram program;
  try {
    if (spec.grid) {
      auto kind = workloads::micro_kind_from_string(spec.params.workload_id);
      program = workloads::build_micro(kind, spec.params, *spec.grid);
    } else {
      program = control::generate(spec.params);
    }
  } catch (const std::invalid_argument& e) {
    throw UsageError(std::string("trial '") + spec.params.trial_id + "': " +
                     e.what());
  }
  return control::execute(program);
}

}  // namespace

RunResult run_trials(const std::vector<TrialSpec>& specs,
                     const std::string& out_dir, std::uint64_t master_seed,
                     bool combined) {
  if (specs.empty()) throw UsageError("no trials to run");
  std::set<std::string> ids;
  for (const auto& s : specs) {
    if (s.params.trial_id.empty())
      throw UsageError("every trial needs a non-empty id");
    if (!ids.insert(s.params.trial_id).second)
      throw UsageError("duplicate trial id '" + s.params.trial_id + "'");
  }
  fs::create_directories(out_dir);

  std::vector<TrialSpec> seeded(specs);
  for (auto& s : seeded)
    if (s.params.seed == 0)
      s.params.seed = mix(master_seed ^ fnv1a(s.params.trial_id));

  std::vector<control::RunLog> logs(seeded.size());
  std::vector<std::exception_ptr> errors(seeded.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next.fetch_add(1); i < seeded.size();
         i = next.fetch_add(1)) {
      try {
        logs[i] = build_and_run(seeded[i]);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  unsigned workers = std::min<std::size_t>(
      std::max(1u, std::thread::hardware_concurrency()), seeded.size());
  std::vector<std::thread> pool;
  for (unsigned w = 0; w + 1 < workers; ++w) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
  for (const auto& e : errors)
    if (e) std::rethrow_exception(e);

  RunResult res;
  res.out_dir = out_dir;
  std::vector<telemetry::SnapshotRow> all_rows;
  std::vector<workloads::RoundRecord> all_rounds;
  for (std::size_t i = 0; i < seeded.size(); ++i) {
    const auto& log = logs[i];
    TrialSummary sum;
    sum.trial_id = seeded[i].params.trial_id;
    sum.csv_file = "trial_" + sum.trial_id + ".csv";
    sum.rows = log.rows.size();
    sum.rounds = log.rounds.size();
    sum.duration_s = log.duration_s;
    sum.dropped_messages = log.dropped_messages;
    telemetry::export_csv(log.rows, (fs::path(out_dir) / sum.csv_file).string());
    res.total_rows += log.rows.size();
    res.trials.push_back(std::move(sum));
    if (combined)
      all_rows.insert(all_rows.end(), log.rows.begin(), log.rows.end());
    all_rounds.insert(all_rounds.end(), log.rounds.begin(), log.rounds.end());
  }
  if (combined) {
    res.combined_csv = (fs::path(out_dir) / "combined.csv").string();
    telemetry::export_csv(all_rows, res.combined_csv);
  }
  if (!all_rounds.empty()) {
    res.rounds_csv = (fs::path(out_dir) / "rounds.csv").string();
    write_rounds_csv(all_rounds, res.rounds_csv);
  }
  return res;
}

RunResult run_manifest(const RunManifest& m) {
  std::vector<TrialSpec> specs;
  for (const auto& e : m.experiments) specs.push_back({e, std::nullopt});
  return run_trials(specs, m.out_dir, m.seed, m.combined);
}

namespace {

constexpr int kBaseVel = 50, kBaseAcc = 100;
constexpr double kBaseBelt = 40.0, kBasePayload = 195.0;

std::vector<double> default_list(const char* which) {
  std::vector<double> v;
  if (std::string(which) == "velocity")
    for (int x = 30; x <= 100; x += 10) v.push_back(x);
  else if (std::string(which) == "acceleration")
    for (int x = 20; x <= 100; x += 10) v.push_back(x);
  else if (std::string(which) == "belt")
    for (int x = 10; x <= 80; x += 10) v.push_back(x);
  else
    v = {0.0, 195.0, 340.0, 535.0, 730.0};
  return v;
}

ExperimentParams app_base(const SweepOptions& opts) {
  ExperimentParams p;
  p.workload_id = "sorting";
  p.velocity_pct = kBaseVel;
  p.acceleration_pct = kBaseAcc;
  p.belt_speed_mms = kBaseBelt;
  p.payload_g = kBasePayload;
  p.rounds = opts.rounds;
  return p;
}

void expand_app(const SweepOptions& opts, std::vector<TrialSpec>& out) {
  bool any_list = !opts.velocity.empty() || !opts.acceleration.empty() ||
                  !opts.belt.empty() || !opts.payload.empty();
  if (!any_list || opts.one_factor) {
    auto vel = opts.velocity.empty() ? default_list("velocity") : opts.velocity;
    auto acc = opts.acceleration.empty() ? default_list("acceleration")
                                         : opts.acceleration;
    auto belt = opts.belt.empty() ? default_list("belt") : opts.belt;
    auto pay = opts.payload.empty() ? default_list("payload") : opts.payload;
    if (any_list) {
      // One-factor mode varies only the lists the caller provided.
      if (opts.velocity.empty()) vel.clear();
      if (opts.acceleration.empty()) acc.clear();
      if (opts.belt.empty()) belt.clear();
      if (opts.payload.empty()) pay.clear();
    }
    for (double v : vel) {
      auto p = app_base(opts);
      p.velocity_pct = static_cast<int>(std::lround(v));
      p.trial_id = "vel_" + num_id(v);
      out.push_back({p, std::nullopt});
    }
    for (double a : acc) {
      auto p = app_base(opts);
      p.acceleration_pct = static_cast<int>(std::lround(a));
      p.trial_id = "acc_" + num_id(a);
      out.push_back({p, std::nullopt});
    }
    for (double b : belt) {
      auto p = app_base(opts);
      p.belt_speed_mms = b;
      p.trial_id = "belt_" + num_id(b);
      out.push_back({p, std::nullopt});
    }
    for (double w : pay) {
      auto p = app_base(opts);
      p.payload_g = w;
      p.trial_id = "payload_" + num_id(w);
      out.push_back({p, std::nullopt});
    }
    return;
  }
  auto vel = opts.velocity.empty() ? std::vector<double>{kBaseVel}
                                   : opts.velocity;
  auto acc = opts.acceleration.empty() ? std::vector<double>{kBaseAcc}
                                       : opts.acceleration;
  auto belt = opts.belt.empty() ? std::vector<double>{kBaseBelt} : opts.belt;
  auto pay = opts.payload.empty() ? std::vector<double>{kBasePayload}
                                  : opts.payload;
  for (double v : vel)
    for (double a : acc)
      for (double b : belt)
        for (double w : pay) {
          auto p = app_base(opts);
          p.velocity_pct = static_cast<int>(std::lround(v));
          p.acceleration_pct = static_cast<int>(std::lround(a));
          p.belt_speed_mms = b;
          p.payload_g = w;
          p.trial_id = "v" + num_id(v) + "_a" + num_id(a) + "_b" + num_id(b) +
                       "_p" + num_id(w);
          out.push_back({p, std::nullopt});
        }
}

void expand_micro(const SweepOptions& opts, std::vector<TrialSpec>& out) {
  bool any_list = !opts.velocity.empty() || !opts.acceleration.empty() ||
                  !opts.belt.empty() || !opts.payload.empty();
  if (!any_list) {
    const std::pair<const char*, workloads::MicroKind> kinds[] = {
        {"arm_sweep", workloads::MicroKind::arm_sweep},
        {"arm_sweep_acc", workloads::MicroKind::arm_sweep},
        {"belt_sweep", workloads::MicroKind::belt_sweep},
        {"suction_toggle", workloads::MicroKind::suction_toggle},
        {"camera_toggle", workloads::MicroKind::camera_toggle},
        {"payload_sweep", workloads::MicroKind::payload_sweep},
    };
    for (const auto& [id, kind] : kinds) {
      TrialSpec s;
      s.params.workload_id = workloads::to_string(kind);
      s.params.trial_id = id;
      s.grid = workloads::default_grid(kind);
      if (std::string(id) == "arm_sweep_acc") s.grid->sweep_acceleration = true;
      out.push_back(std::move(s));
    }
    return;
  }
  for (double v : opts.velocity) {
    TrialSpec s;
    s.params.workload_id = "arm_sweep";
    s.params.trial_id = "arm_vel_" + num_id(v);
    s.params.velocity_pct = static_cast<int>(std::lround(v));
    s.grid = workloads::MicroGrid{{v}, 60.0, false};
    out.push_back(std::move(s));
  }
  for (double a : opts.acceleration) {
    TrialSpec s;
    s.params.workload_id = "arm_sweep";
    s.params.trial_id = "arm_acc_" + num_id(a);
    s.params.acceleration_pct = static_cast<int>(std::lround(a));
    s.grid = workloads::MicroGrid{{a}, 60.0, true};
    out.push_back(std::move(s));
  }
  for (double b : opts.belt) {
    TrialSpec s;
    s.params.workload_id = "belt_sweep";
    s.params.trial_id = "belt_" + num_id(b);
    s.params.belt_speed_mms = b;
    s.grid = workloads::MicroGrid{{b}, 150.0, false};
    out.push_back(std::move(s));
  }
  for (double w : opts.payload) {
    TrialSpec s;
    s.params.workload_id = "payload_sweep";
    s.params.trial_id = "micro_payload_" + num_id(w);
    s.params.payload_g = w;
    s.grid = workloads::MicroGrid{{w}, 60.0, false};
    out.push_back(std::move(s));
  }
}

}  // namespace

std::vector<TrialSpec> expand_sweep(const SweepOptions& opts) {
  std::vector<TrialSpec> out;
  if (opts.task == "app")
    expand_app(opts, out);
  else if (opts.task == "micro")
    expand_micro(opts, out);
  else
    throw UsageError("unknown sweep task '" + opts.task +
                     "' (expected app or micro)");
  if (out.empty()) throw UsageError("sweep grid is empty");
  return out;
}

RunResult run_sweep(const SweepOptions& opts) {
  return run_trials(expand_sweep(opts), opts.out_dir, opts.seed, true);
}

void write_rounds_csv(std::span<const workloads::RoundRecord> rounds,
                      const std::string& path) {
  telemetry::CsvTable t;
  t.header = {"trial_id",     "workload_id",  "round_id",
              "velocity_pct", "acceleration_pct", "belt_speed_mms",
              "payload_g",    "rounds",       "duration_s",
              "mean_power_w", "peak_power_w", "energy_j",
              "throughput_obj_per_min"};
  for (const auto& r : rounds)
    t.rows.push_back({r.params.trial_id, r.params.workload_id,
                      std::to_string(r.round_id),
                      std::to_string(r.params.velocity_pct),
                      std::to_string(r.params.acceleration_pct),
                      format_double(r.params.belt_speed_mms),
                      format_double(r.params.payload_g),
                      std::to_string(r.params.rounds),
                      format_double(r.duration_s),
                      format_double(r.mean_power_w),
                      format_double(r.peak_power_w),
                      format_double(r.energy_j),
                      format_double(r.throughput_obj_per_min)});
  telemetry::write_table(t, path);
}

std::vector<workloads::RoundRecord> read_rounds_csv(const std::string& path) {
  auto t = telemetry::read_table(path);
  if (t.header.size() != 13 || t.header[0] != "trial_id")
    throw UsageError("unexpected rounds schema in " + path);
  std::vector<workloads::RoundRecord> out;
  for (const auto& row : t.rows) {
    workloads::RoundRecord r;
    r.params.trial_id = row[0];
    r.params.workload_id = row[1];
    r.round_id = std::stoi(row[2]);
    r.params.velocity_pct = std::stoi(row[3]);
    r.params.acceleration_pct = std::stoi(row[4]);
    r.params.belt_speed_mms = std::stod(row[5]);
    r.params.payload_g = std::stod(row[6]);
    r.params.rounds = std::stoi(row[7]);
    r.duration_s = std::stod(row[8]);
    r.mean_power_w = std::stod(row[9]);
    r.peak_power_w = std::stod(row[10]);
    r.energy_j = std::stod(row[11]);
    r.throughput_obj_per_min = std::stod(row[12]);
    out.push_back(std::move(r));
  }
  return out;
}

AnalyzeResult analyze(const std::string& data_dir) {
  auto combined = fs::path(data_dir) / "combined.csv";
  if (!fs::exists(combined))
    throw UsageError("no combined.csv in " + data_dir);
  auto rows = telemetry::parse_csv(combined.string());
  std::vector<workloads::RoundRecord> rounds;
  auto rounds_path = fs::path(data_dir) / "rounds.csv";
  if (fs::exists(rounds_path)) rounds = read_rounds_csv(rounds_path.string());
  auto figs = analysis::emit_plots(rows, rounds,
                                   (fs::path(data_dir) / "figures").string());
  return AnalyzeResult{figs.files};
}

TrainResult train(const std::string& data_dir, mlcore::Task task, int folds,
                  std::uint64_t seed) {
  if (folds < 2) throw UsageError("folds must be >= 2");
  std::vector<telemetry::SnapshotRow> rows;
  std::vector<workloads::RoundRecord> rounds;
  if (task == mlcore::Task::power_state) {
    auto combined = fs::path(data_dir) / "combined.csv";
    if (!fs::exists(combined))
      throw UsageError("no combined.csv in " + data_dir);
    rows = telemetry::parse_csv(combined.string());
  } else {
    auto rounds_path = fs::path(data_dir) / "rounds.csv";
    if (!fs::exists(rounds_path))
      throw UsageError("no rounds.csv in " + data_dir);
    rounds = read_rounds_csv(rounds_path.string());
  }
  auto d = mlcore::assemble(task, rows, rounds);

  TrainResult res;
  for (auto kind : {mlcore::ModelKind::decision_tree,
                    mlcore::ModelKind::random_forest,
                    mlcore::ModelKind::extra_trees})
    res.models.push_back(mlcore::cross_validate(
        d, kind, folds, seed, res.warning.empty() ? &res.warning : nullptr));
  res.table_text = mlcore::render_metrics_table(d.target_name, res.models);

  auto models_dir = fs::path(data_dir) / "models";
  fs::create_directories(models_dir);
  std::string tag = mlcore::to_string(task);
  mlcore::write_metrics_csv(
      d.target_name, res.models,
      (models_dir / ("metrics_" + tag + ".csv")).string());
  mlcore::write_importance_csv(
      d, res.models, (models_dir / ("importance_" + tag + ".csv")).string());
  {
    auto path = (models_dir / ("metrics_" + tag + ".txt")).string();
    std::string tmp = path + ".tmp";
    std::ofstream out(tmp, std::ios::binary);
    out << res.table_text;
    out.close();
    fs::rename(tmp, path);
  }
  return res;
}

std::string report(const std::string& run_dir) {
  if (!fs::is_directory(run_dir))
    throw UsageError("not a directory: " + run_dir);
  std::ostringstream os;
  os << "# Cell benchmark report\n\n";

  bool any = false;
  auto combined = fs::path(run_dir) / "combined.csv";
  if (fs::exists(combined)) {
    auto rows = telemetry::parse_csv(combined.string());
    std::set<std::string> trials;
    for (const auto& r : rows) trials.insert(r.workload_id);
    os << "## Dataset\n\n- snapshot rows: " << rows.size()
       << "\n- trials: " << trials.size() << "\n";
    any = true;
  }
  auto rounds_path = fs::path(run_dir) / "rounds.csv";
  if (fs::exists(rounds_path)) {
    auto rounds = read_rounds_csv(rounds_path.string());
    os << "- rounds: " << rounds.size() << "\n";
    any = true;
  }
  if (any) os << "\n";

  auto models_dir = fs::path(run_dir) / "models";
  if (fs::is_directory(models_dir)) {
    std::vector<std::string> tables, importances;
    for (const auto& e : fs::directory_iterator(models_dir)) {
      auto name = e.path().filename().string();
      if (name.starts_with("metrics_") && name.ends_with(".txt"))
        tables.push_back(e.path().string());
      if (name.starts_with("importance_") && name.ends_with(".csv"))
        importances.push_back(e.path().string());
    }
    std::sort(tables.begin(), tables.end());
    std::sort(importances.begin(), importances.end());
    if (!tables.empty()) {
      os << "## Model comparison\n\n";
      for (const auto& p : tables) {
        std::ifstream in(p, std::ios::binary);
        os << "```\n" << in.rdbuf() << "```\n\n";
      }
      any = true;
    }
    if (!importances.empty()) {
      os << "## Feature importance\n\n";
      for (const auto& p : importances) {
        auto t = telemetry::read_table(p);
        os << "### " << fs::path(p).filename().string() << "\n\n";
        os << "| model | feature | importance |\n|---|---|---|\n";
        for (const auto& row : t.rows)
          os << "| " << row[0] << " | " << row[1] << " | " << row[2]
             << " |\n";
        os << "\n";
      }
      any = true;
    }
  }

  auto fig_dir = fs::path(run_dir) / "figures";
  if (fs::is_directory(fig_dir)) {
    std::vector<std::string> figs;
    for (const auto& e : fs::directory_iterator(fig_dir))
      if (e.path().extension() == ".svg")
        figs.push_back(e.path().filename().string());
    std::sort(figs.begin(), figs.end());
    if (!figs.empty()) {
      os << "## Figures\n\n";
      for (const auto& f : figs) os << "- figures/" << f << "\n";
      os << "\n";
      any = true;
    }
  }

  if (!any) throw UsageError("no run artifacts found in " + run_dir);

  std::string text = os.str();
  auto path = (fs::path(run_dir) / "report.md").string();
  std::string tmp = path + ".tmp";
  std::ofstream out(tmp, std::ios::binary);
  out << text;
  out.close();
  fs::rename(tmp, path);
  return text;
}

}  // namespace cpsbench::pipeline
