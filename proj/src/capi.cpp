#include "cpsbench.h"

#include <sstream>
#include <string>
#include <vector>

#include "cpsbench/pipeline.hpp"

struct cpsb_ctx {
  std::string error;
  std::string output;
};

namespace {

using cpsbench::pipeline::UsageError;

template <typename Fn>
int wrap(cpsb_ctx* ctx, Fn&& fn) {
  if (!ctx) return CPSB_ERR_USAGE;
  ctx->error.clear();
  ctx->output.clear();
  try {
    fn();
    return CPSB_OK;
  } catch (const UsageError& e) {
    ctx->error = e.what();
    return CPSB_ERR_USAGE;
  } catch (const std::exception& e) {
    ctx->error = e.what();
    return CPSB_ERR_INTERNAL;
  } catch (...) {
    ctx->error = "unknown error";
    return CPSB_ERR_INTERNAL;
  }
}

std::vector<double> parse_list(const char* s, const char* flag) {
  std::vector<double> out;
  if (!s || !*s) return out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t pos = 0;
      double v = std::stod(item, &pos);
      if (pos != item.size()) throw std::invalid_argument(item);
      out.push_back(v);
    } catch (const std::exception&) {
      throw UsageError(std::string(flag) + ": expected a number, got '" +
                       item + "'");
    }
  }
  if (out.empty())
    throw UsageError(std::string(flag) + ": empty value list");
  return out;
}

std::string run_summary(const cpsbench::pipeline::RunResult& res) {
  std::ostringstream os;
  for (const auto& t : res.trials)
    os << t.trial_id << ": " << t.rows << " rows, " << t.rounds
       << " rounds, " << cpsbench::telemetry::format_double(t.duration_s)
       << " s -> " << t.csv_file << "\n";
  os << "total rows: " << res.total_rows << "\n";
  if (!res.combined_csv.empty()) os << "combined: " << res.combined_csv << "\n";
  if (!res.rounds_csv.empty()) os << "rounds: " << res.rounds_csv << "\n";
  return os.str();
}

}  // namespace

extern "C" {

cpsb_ctx* cpsb_ctx_new(void) { return new cpsb_ctx; }

void cpsb_ctx_free(cpsb_ctx* ctx) { delete ctx; }

const char* cpsb_last_error(const cpsb_ctx* ctx) {
  return ctx ? ctx->error.c_str() : "null context";
}

const char* cpsb_last_output(const cpsb_ctx* ctx) {
  return ctx ? ctx->output.c_str() : "";
}

int cpsb_run_manifest(cpsb_ctx* ctx, const char* manifest_path,
                      const char* out_dir, uint64_t seed, int has_seed) {
  return wrap(ctx, [&] {
    if (!manifest_path) throw UsageError("manifest path is required");
    auto m = cpsbench::pipeline::parse_manifest(manifest_path);
    if (out_dir && *out_dir) m.out_dir = out_dir;
    if (has_seed) m.seed = seed;
    ctx->output = run_summary(cpsbench::pipeline::run_manifest(m));
  });
}

int cpsb_sweep(cpsb_ctx* ctx, const char* task, int one_factor,
               const char* velocity, const char* acceleration,
               const char* belt, const char* payload, int rounds,
               const char* out_dir, uint64_t seed) {
  return wrap(ctx, [&] {
    cpsbench::pipeline::SweepOptions opts;
    if (task && *task) opts.task = task;
    opts.one_factor = one_factor != 0;
    opts.velocity = parse_list(velocity, "--velocity");
    opts.acceleration = parse_list(acceleration, "--acceleration");
    opts.belt = parse_list(belt, "--belt");
    opts.payload = parse_list(payload, "--payload");
    if (rounds > 0) opts.rounds = rounds;
    if (out_dir && *out_dir) opts.out_dir = out_dir;
    opts.seed = seed;
    ctx->output = run_summary(cpsbench::pipeline::run_sweep(opts));
  });
}

int cpsb_analyze(cpsb_ctx* ctx, const char* data_dir) {
  return wrap(ctx, [&] {
    if (!data_dir) throw UsageError("data directory is required");
    auto res = cpsbench::pipeline::analyze(data_dir);
    std::ostringstream os;
    for (const auto& f : res.figures) os << "figures/" << f << "\n";
    os << res.figures.size() << " figures\n";
    ctx->output = os.str();
  });
}

int cpsb_train(cpsb_ctx* ctx, const char* data_dir, const char* task,
               int folds, uint64_t seed) {
  return wrap(ctx, [&] {
    if (!data_dir) throw UsageError("data directory is required");
    if (!task) throw UsageError("task is required");
    cpsbench::mlcore::Task t;
    try {
      t = cpsbench::mlcore::task_from_string(task);
    } catch (const std::invalid_argument& e) {
      throw UsageError(e.what());
    }
    auto res = cpsbench::pipeline::train(data_dir, t, folds, seed);
    ctx->output = res.warning + res.table_text;
  });
}

int cpsb_report(cpsb_ctx* ctx, const char* run_dir) {
  return wrap(ctx, [&] {
    if (!run_dir) throw UsageError("run directory is required");
    ctx->output = cpsbench::pipeline::report(run_dir);
  });
}

}  // extern "C"
