#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <variant>
#include <vector>

#include "cpsbench/powerkin.hpp"

namespace cpsbench {

enum class Color { none, red, green, blue, yellow };

const char* to_string(Color c);
Color color_from_string(const std::string& s);

// Device-level commands consumed by the execution controller.
struct ArmMoveJoints {
  std::array<double, 4> target_deg{};
  powerkin::ArmSettings settings;
};

struct BeltSet {
  bool on = false;
  double speed_mms = 0.0;
};

struct SuctionSet {
  bool on = false;
};

struct CameraQuery {};

struct WaitFor {
  double seconds = 0.0;
};

struct MarkRound {
  bool begin = true;
  int round_id = 0;
};

// Where a cube can be placed by the (simulated) operator. Stands in for the
// manual steps of a trial: loading the belt head, holding an object in front
// of the camera, or clearing the scene.
enum class CubeSpot { removed, belt_head, belt_pick, camera_view };

struct ScenePlace {
  CubeSpot spot = CubeSpot::removed;
  Color color = Color::none;
  double payload_g = 0.0;
};

using Instruction = std::variant<ArmMoveJoints, BeltSet, SuctionSet,
                                 CameraQuery, WaitFor, MarkRound, ScenePlace>;

struct ExperimentParams {
  std::string workload_id;  // e.g. "sorting", "arm_sweep"
  std::string trial_id;     // unique per trial in a run
  int velocity_pct = 50;
  int acceleration_pct = 100;
  double belt_speed_mms = 40.0;
  double payload_g = 195.0;
  int rounds = 1;
  std::uint64_t seed = 0;
};

struct InstructionProgram {
  std::vector<Instruction> instructions;
  ExperimentParams params;
};

}  // namespace cpsbench
