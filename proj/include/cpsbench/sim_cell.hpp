#pragma once

#include <optional>
#include <string>
#include <vector>

#include "cpsbench/instruction.hpp"
#include "cpsbench/scene.hpp"

namespace cpsbench {

struct AdapterEvent {
  double t_s = 0.0;
  std::string device;  // arm | belt | suction | camera | plug | scene
  std::string detail;
  bool rejected = false;
};

enum class PlugChannel { arm, belt, suction, camera };

inline constexpr double kJointLimitDeg = 135.0;
inline constexpr double kCameraLatencyS = 1.0;
inline constexpr double kCameraJitterS = 0.1;  // uniform, either side
inline constexpr double kStationTolDeg = 1.0;

// The simulated cell behind the sensor/actuator adapter surface. Commands
// mutate state instantaneously; durative behavior (arm motion, belt
// transport) is advanced by the execution controller's virtual clock.
// A hardware-backed implementation would satisfy the same call contract.
class SimCell {
 public:
  SimCell(SortingScene scene, std::uint64_t seed,
          powerkin::NoiseParams np = powerkin::NoiseParams{});

  const powerkin::CellState& state() const { return state_; }
  const SortingScene& scene() const { return scene_; }
  const std::vector<AdapterEvent>& events() const { return events_; }

  void set_settings(const powerkin::ArmSettings& settings) {
    state_.settings = settings;
  }

  // Arm adapter. Returns the move duration in virtual seconds, or nullopt
  // when the command is rejected (out-of-limits target, unreachable
  // settings). A zero-distance move completes immediately.
  std::optional<double> arm_move_joints(const std::array<double, 4>& target,
                                        const powerkin::ArmSettings& settings,
                                        double t_s);
  // Interpolates joints t_rel seconds into the pending move.
  void arm_motion_at(double t_rel);
  void arm_finish_move();

  // Belt / suction adapters. Return false on rejection.
  bool belt_set(bool on, double speed_mms, double t_s);
  bool suction_set(bool on, double t_s);

  struct CameraReading {
    bool detected = false;
    Color color = Color::none;
  };
  CameraReading camera_query(double t_s);
  // Seeded per-query processing latency: kCameraLatencyS +- jitter.
  double camera_latency_s();

  // Smart-plug adapter: one channel of the power sample at instant t_s.
  double plug_read(PlugChannel ch, double t_s);
  powerkin::PowerBreakdown sample_power(double t_s);

  // Operator action: put a cube at a spot (or clear the scene).
  void scene_place(const ScenePlace& p, double t_s);

  // Belt transport over a dt window ending now.
  void advance_belt(double dt_s);

  bool cube_at(CubeSpot spot) const;

 private:
  struct ActiveCube {
    Color color = Color::none;
    double payload_g = 0.0;
    CubeSpot spot = CubeSpot::removed;
    bool held = false;
    double belt_progress_mm = 0.0;
  };

  void log(double t_s, const std::string& device, const std::string& detail,
           bool rejected = false);
  void refresh_payload();
  bool arm_at(const std::string& station) const;

  SortingScene scene_;
  powerkin::CellState state_;
  powerkin::PowerSampler sampler_;
  std::uint64_t latency_state_;  // splitmix stream for camera jitter
  std::vector<AdapterEvent> events_;
  std::optional<ActiveCube> cube_;

  struct PendingMove {
    std::array<double, 4> from{}, to{};
    powerkin::ArmSettings settings;
    double duration_s = 0.0;
  };
  std::optional<PendingMove> move_;
};

}  // namespace cpsbench
