#pragma once

#include <span>
#include <string>
#include <vector>

#include "cpsbench/instruction.hpp"
#include "cpsbench/scene.hpp"
#include "cpsbench/telemetry.hpp"

namespace cpsbench::workloads {

struct RoundRecord {
  int round_id = 0;
  ExperimentParams params;
  double duration_s = 0.0;
  double mean_power_w = 0.0;
  double peak_power_w = 0.0;
  double energy_j = 0.0;  // mean_power_w * duration_s
  double throughput_obj_per_min = 0.0;
};

enum class MicroKind {
  arm_sweep,
  camera_toggle,
  belt_sweep,
  suction_toggle,
  payload_sweep
};

MicroKind micro_kind_from_string(const std::string& s);
const char* to_string(MicroKind k);

struct MicroGrid {
  std::vector<double> values;  // setting per phase; meaning depends on kind
  double dwell_s = 60.0;       // per-phase duration
  bool sweep_acceleration = false;  // arm_sweep: sweep accel instead of vel
};

// Default grids: arm 0..100 step 10, belt 0..80 step 10 (150 s dwell),
// payload {0,195,340,535,730}, camera/suction two phases.
MicroGrid default_grid(MicroKind kind);

InstructionProgram build_micro(MicroKind kind, const ExperimentParams& params,
                               const MicroGrid& grid);
InstructionProgram build_micro(MicroKind kind, const ExperimentParams& params);

// Full sorting pipeline, one round per queued cube. Enforces the
// application setting ranges (velocity 30-100, acceleration 20-100,
// belt 10-80).
InstructionProgram build_sorting(const ExperimentParams& params,
                                 const SortingScene& scene);

RoundRecord summarize_round(std::span<const telemetry::SnapshotRow> rows,
                            double begin_s, double end_s,
                            const ExperimentParams& params, int round_id);

}  // namespace cpsbench::workloads
