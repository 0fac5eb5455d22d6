#pragma once

#include <array>
#include <cstdint>
#include <random>
#include <span>

namespace cpsbench::powerkin {

// Normalized device settings, 0-100 as exposed by the arm API.
struct ArmSettings {
  int velocity_pct = 50;
  int acceleration_pct = 50;
};

struct MotionLimits {
  double max_joint_speed_dps = 320.0;
  double max_joint_accel_dps2 = 640.0;
};

struct CellState {
  std::array<double, 4> joint_angles_deg{0.0, 0.0, 0.0, 0.0};
  bool arm_moving = false;
  ArmSettings settings;
  bool suction_on = false;
  bool belt_on = false;
  double belt_speed_mms = 0.0;  // 0 iff belt_on == false
  bool camera_detect = false;
  double payload_g = 0.0;  // [0, 730]
};

struct PowerBreakdown {
  double arm_w = 0.0;
  double belt_w = 0.0;
  double suction_w = 0.0;
  double camera_w = 0.0;
  // arm + belt + suction; the camera channel is metered separately and
  // never counted into the system total.
  double system_total_w = 0.0;
};

inline constexpr double kArmIdleW = 16.0;
inline constexpr double kArmMovingW = 16.5;
inline constexpr double kSuctionW = 6.0;
inline constexpr double kCameraBaseW = 1.5;
inline constexpr double kCameraDetectDeltaW = 2.13;
inline constexpr double kBeltMaxSpeedMms = 80.0;
inline constexpr double kPayloadMaxG = 730.0;

// Throws std::domain_error when state invariants are violated.
void validate(const CellState& st);

// Duration of a symmetric trapezoidal joint move covering distance_deg,
// with peak speed and acceleration scaled by the normalized settings.
// Degenerates to a triangular profile for short moves. Throws
// std::domain_error for negative distance or unreachable settings
// (velocity or acceleration 0 with nonzero distance).
double move_duration(double distance_deg, const ArmSettings& s,
                     const MotionLimits& lim = {});

// Distance covered at time t_s into the move, clamped to [0, distance_deg].
double move_progress(double distance_deg, const ArmSettings& s,
                     const MotionLimits& lim, double t_s);

// Belt power draw above idle, piecewise-linear over calibration anchors.
// Non-monotonic: peaks on [30,40] mm/s, plateaus from 60 mm/s up.
double belt_delta(double speed_mms);

PowerBreakdown mean_power(const CellState& st);

// Left Riemann sum: sum(powers) * dt. Empty series -> 0 J.
double energy_of_series(std::span<const double> powers_w, double dt_s);

struct NoiseParams {
  double sigma_arm_w = 0.8;
  double sigma_belt_w = 0.3;
  double sigma_suction_w = 0.4;
  double spike_min_w = 2.0;
  double spike_max_w = 3.5;
  double idle_threshold_s = 6.0;
  int spike_samples = 2;
};

// Seeded stochastic layer over mean_power. One sampler per simulated cell;
// instances are single-owner and not thread-safe. Repeated reads at the
// same instant return the cached sample.
class PowerSampler {
 public:
  explicit PowerSampler(std::uint64_t seed, NoiseParams np = NoiseParams{});

  PowerBreakdown sample(const CellState& st, double t_s);

  const NoiseParams& noise() const { return np_; }

 private:
  double gauss(double sigma);
  double uniform(double lo, double hi);

  std::mt19937_64 rng_;
  NoiseParams np_;
  double last_t_ = -1.0;
  bool has_last_ = false;
  PowerBreakdown last_{};
  double last_active_t_ = 0.0;
  int spike_left_ = 0;
  bool spike_on_suction_ = false;
};

}  // namespace cpsbench::powerkin
