#pragma once

#include <cstdint>
#include <string>
#include <variant>
#include <vector>

#include "cpsbench/instruction.hpp"
#include "cpsbench/scene.hpp"
#include "cpsbench/sim_cell.hpp"
#include "cpsbench/telemetry.hpp"
#include "cpsbench/workloads.hpp"

namespace cpsbench::control {

// Workload steps: the mid-level vocabulary the translator lowers into
// device instructions.
struct StepInjectCube {
  CubeSpec cube;
};
struct StepRunBelt {
  double speed_mms = 0.0;
  double distance_mm = 0.0;
};
struct StepPickAtBelt {};
struct StepPresentToCamera {};
struct StepPlaceInBucket {
  Color color = Color::none;
};
struct StepReturnHome {};
struct StepWait {
  double seconds = 0.0;
};
struct StepMoveTo {
  std::string station;
  powerkin::ArmSettings settings;
};
struct StepSuction {
  bool on = false;
};
struct StepBelt {
  bool on = false;
  double speed_mms = 0.0;
};
struct StepCameraQuery {};
struct StepScene {
  ScenePlace place;
};
struct StepMarkRound {
  bool begin = true;
  int round_id = 0;
};

using WorkloadStep =
    std::variant<StepInjectCube, StepRunBelt, StepPickAtBelt,
                 StepPresentToCamera, StepPlaceInBucket, StepReturnHome,
                 StepWait, StepMoveTo, StepSuction, StepBelt, StepCameraQuery,
                 StepScene, StepMarkRound>;

// Pure lowering of one step into device instructions; stable ordering.
// Throws std::invalid_argument naming the offending field.
std::vector<Instruction> translate(const WorkloadStep& step,
                                   const SortingScene& scene,
                                   const powerkin::ArmSettings& settings);

// Builds the program for params.workload_id ("sorting" or a micro kind).
InstructionProgram generate(const ExperimentParams& params);
InstructionProgram generate(const ExperimentParams& params,
                            const SortingScene& scene);

struct RunLog {
  ExperimentParams params;
  std::vector<AdapterEvent> events;
  std::vector<telemetry::SnapshotRow> rows;
  std::vector<workloads::RoundRecord> rounds;
  double duration_s = 0.0;
  std::size_t dropped_messages = 0;
};

struct ExecOptions {
  // Artificial per-message consumer latency; exercises the non-blocking
  // telemetry contract. 0 = drain inline after the run.
  int consumer_delay_us = 0;
  powerkin::NoiseParams noise;
};

// Drives the virtual clock through the program: 100 ms motion ticks,
// plug samples at exactly 1 Hz, metric messages published to an
// in-process topic bus without ever blocking on the consumer. Rejected
// instructions are logged and skipped. Deterministic in (program, seed).
RunLog execute(const InstructionProgram& program, const SortingScene& scene,
               const ExecOptions& opts = {});
RunLog execute(const InstructionProgram& program);

}  // namespace cpsbench::control
