#include "cpsbench/workloads.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "cpsbench/control.hpp"

namespace cpsbench::workloads {

using control::WorkloadStep;
using powerkin::ArmSettings;

MicroKind micro_kind_from_string(const std::string& s) {
  if (s == "arm_sweep") return MicroKind::arm_sweep;
  if (s == "camera_toggle") return MicroKind::camera_toggle;
  if (s == "belt_sweep") return MicroKind::belt_sweep;
  if (s == "suction_toggle") return MicroKind::suction_toggle;
  if (s == "payload_sweep") return MicroKind::payload_sweep;
  throw std::invalid_argument("unknown micro kind: " + s);
}

const char* to_string(MicroKind k) {
  switch (k) {
    case MicroKind::arm_sweep: return "arm_sweep";
    case MicroKind::camera_toggle: return "camera_toggle";
    case MicroKind::belt_sweep: return "belt_sweep";
    case MicroKind::suction_toggle: return "suction_toggle";
    case MicroKind::payload_sweep: return "payload_sweep";
  }
  return "?";
}

MicroGrid default_grid(MicroKind kind) {
  MicroGrid g;
  switch (kind) {
    case MicroKind::arm_sweep:
      for (int v = 0; v <= 100; v += 10) g.values.push_back(v);
      g.dwell_s = 60.0;
      break;
    case MicroKind::belt_sweep:
      for (int v = 0; v <= 80; v += 10) g.values.push_back(v);
      g.dwell_s = 150.0;
      break;
    case MicroKind::payload_sweep:
      g.values = {0.0, 195.0, 340.0, 535.0, 730.0};
      g.dwell_s = 60.0;
      break;
    case MicroKind::camera_toggle:
    case MicroKind::suction_toggle:
      g.values = {1.0, 0.0};
      g.dwell_s = 60.0;
      break;
  }
  return g;
}

namespace {

void emit(std::vector<Instruction>& out, const WorkloadStep& step,
          const SortingScene& scene, const ArmSettings& settings) {
  auto ins = control::translate(step, scene, settings);
  out.insert(out.end(), ins.begin(), ins.end());
}

void build_arm_phase(std::vector<Instruction>& out, const SortingScene& scene,
                     const ArmSettings& s, double dwell_s) {
  if (s.velocity_pct == 0 || s.acceleration_pct == 0) {
    // No motion possible at this setting; the phase is idle dwell.
    emit(out, control::StepWait{dwell_s}, scene, s);
    return;
  }
  double leg = powerkin::move_duration(90.0, s);
  int pairs = std::max(1, static_cast<int>(std::ceil(dwell_s / (2.0 * leg))));
  for (int i = 0; i < pairs; ++i) {
    emit(out, control::StepMoveTo{"sweep_b", s}, scene, s);
    emit(out, control::StepMoveTo{"sweep_a", s}, scene, s);
  }
}

}  // namespace

InstructionProgram build_micro(MicroKind kind, const ExperimentParams& params) {
  return build_micro(kind, params, default_grid(kind));
}

InstructionProgram build_micro(MicroKind kind, const ExperimentParams& params,
                               const MicroGrid& grid) {
  if (grid.values.empty())
    throw std::invalid_argument("micro grid must not be empty");
  if (grid.dwell_s <= 0.0)
    throw std::invalid_argument("micro dwell must be > 0");
  SortingScene scene = default_scene();
  ArmSettings base{params.velocity_pct, params.acceleration_pct};
  InstructionProgram p;
  p.params = params;
  p.params.workload_id = to_string(kind);
  auto& out = p.instructions;

  switch (kind) {
    case MicroKind::arm_sweep: {
      // Park at the sweep start with the base settings once.
      emit(out, control::StepMoveTo{"sweep_a", base}, scene, base);
      for (double v : grid.values) {
        ArmSettings s = base;
        int pct = static_cast<int>(v);
        if (pct < 0 || pct > 100)
          throw std::invalid_argument("arm_sweep: setting outside [0,100]");
        if (grid.sweep_acceleration)
          s.acceleration_pct = pct;
        else
          s.velocity_pct = pct;
        build_arm_phase(out, scene, s, grid.dwell_s);
      }
      break;
    }
    case MicroKind::belt_sweep: {
      for (double v : grid.values) {
        if (v < 0.0 || v > 80.0)
          throw std::invalid_argument("belt_sweep: speed outside [0,80]");
        if (v == 0.0) {
          emit(out, control::StepWait{grid.dwell_s}, scene, base);
        } else {
          emit(out, control::StepBelt{true, v}, scene, base);
          emit(out, control::StepWait{grid.dwell_s}, scene, base);
          emit(out, control::StepBelt{false, 0.0}, scene, base);
        }
      }
      break;
    }
    case MicroKind::suction_toggle: {
      for (double v : grid.values) {
        emit(out, control::StepSuction{v != 0.0}, scene, base);
        emit(out, control::StepWait{grid.dwell_s}, scene, base);
      }
      emit(out, control::StepSuction{false}, scene, base);
      break;
    }
    case MicroKind::camera_toggle: {
      int queries = std::max(1, static_cast<int>(std::ceil(
                                    grid.dwell_s / kCameraLatencyS)));
      for (double v : grid.values) {
        if (v != 0.0)
          emit(out,
               control::StepScene{{CubeSpot::camera_view, Color::red, 0.0}},
               scene, base);
        else
          emit(out, control::StepScene{{CubeSpot::removed, Color::none, 0.0}},
               scene, base);
        for (int q = 0; q < queries; ++q)
          emit(out, control::StepCameraQuery{}, scene, base);
      }
      break;
    }
    case MicroKind::payload_sweep: {
      double leg = powerkin::move_duration(20.0, base);
      int pairs =
          std::max(1, static_cast<int>(std::ceil(grid.dwell_s / (2.0 * leg))));
      for (double w : grid.values) {
        if (w < 0.0 || w > powerkin::kPayloadMaxG)
          throw std::invalid_argument("payload_sweep: weight outside [0,730]");
        emit(out, control::StepScene{{CubeSpot::belt_pick, Color::red, w}},
             scene, base);
        emit(out, control::StepMoveTo{"belt_above", base}, scene, base);
        emit(out, control::StepMoveTo{"belt_pick", base}, scene, base);
        emit(out, control::StepSuction{true}, scene, base);
        for (int i = 0; i < pairs; ++i) {
          emit(out, control::StepMoveTo{"belt_above", base}, scene, base);
          emit(out, control::StepMoveTo{"belt_pick", base}, scene, base);
        }
        emit(out, control::StepSuction{false}, scene, base);
        emit(out, control::StepScene{{CubeSpot::removed, Color::none, 0.0}},
             scene, base);
      }
      emit(out, control::StepMoveTo{"home", base}, scene, base);
      break;
    }
  }
  return p;
}

InstructionProgram build_sorting(const ExperimentParams& params,
                                 const SortingScene& scene) {
  if (params.velocity_pct < 30 || params.velocity_pct > 100)
    throw std::invalid_argument(
        "sorting: velocity_pct outside application range [30,100]");
  if (params.acceleration_pct < 20 || params.acceleration_pct > 100)
    throw std::invalid_argument(
        "sorting: acceleration_pct outside application range [20,100]");
  if (params.belt_speed_mms < 10.0 || params.belt_speed_mms > 80.0)
    throw std::invalid_argument(
        "sorting: belt_speed_mms outside application range [10,80]");
  if (scene.cube_queue.empty())
    throw std::invalid_argument("sorting: cube queue is empty");

  ArmSettings s{params.velocity_pct, params.acceleration_pct};
  InstructionProgram p;
  p.params = params;
  auto& out = p.instructions;

  int round = 0;
  for (const auto& cube : scene.cube_queue) {
    ++round;
    emit(out, control::StepMarkRound{true, round}, scene, s);
    emit(out, control::StepInjectCube{cube}, scene, s);                // 1
    emit(out, control::StepRunBelt{params.belt_speed_mms,
                                   scene.belt_transfer_mm}, scene, s);  // 2
    emit(out, control::StepPickAtBelt{}, scene, s);                     // 3
    emit(out, control::StepPresentToCamera{}, scene, s);                // 4
    emit(out, control::StepPlaceInBucket{cube.color}, scene, s);        // 5
    // Clear the drop zone and settle before the next cube; the two long
    // repositioning legs split the idle stretch so no single quiet span
    // reaches the inrush threshold.
    emit(out, control::StepMoveTo{"settle", s}, scene, s);
    emit(out, control::StepWait{2.6}, scene, s);
    emit(out, control::StepMoveTo{"park", s}, scene, s);
    emit(out, control::StepWait{2.6}, scene, s);
    emit(out, control::StepMarkRound{false, round}, scene, s);
  }
  return p;
}

RoundRecord summarize_round(std::span<const telemetry::SnapshotRow> rows,
                            double begin_s, double end_s,
                            const ExperimentParams& params, int round_id) {
  if (rows.empty())
    throw std::invalid_argument("summarize_round: no rows in round");
  if (end_s <= begin_s)
    throw std::invalid_argument("summarize_round: unmatched round markers");
  RoundRecord r;
  r.round_id = round_id;
  r.params = params;
  r.duration_s = end_s - begin_s;
  double sum = 0.0, peak = 0.0;
  for (const auto& row : rows) {
    sum += row.system_power_w;
    peak = std::max(peak, row.system_power_w);
  }
  r.mean_power_w = sum / static_cast<double>(rows.size());
  r.peak_power_w = peak;
  r.energy_j = r.mean_power_w * r.duration_s;
  r.throughput_obj_per_min = 60.0 / r.duration_s;
  return r;
}

}  // namespace cpsbench::workloads
