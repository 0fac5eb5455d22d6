#include "cpsbench/powerkin.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace cpsbench::powerkin {

namespace {

struct Profile {
  double v = 0.0;       // peak speed, deg/s
  double a = 0.0;       // accel, deg/s^2
  double d = 0.0;       // total distance, deg
  double t_ramp = 0.0;  // accel (== decel) phase length, s
  double t_cruise = 0.0;
  double duration() const { return 2.0 * t_ramp + t_cruise; }
};

Profile make_profile(double distance_deg, const ArmSettings& s,
                     const MotionLimits& lim) {
  if (distance_deg < 0.0)
    throw std::domain_error("move_duration: negative distance");
  if (s.velocity_pct < 0 || s.velocity_pct > 100 || s.acceleration_pct < 0 ||
      s.acceleration_pct > 100)
    throw std::domain_error("move_duration: settings outside [0,100]");
  if (lim.max_joint_speed_dps <= 0.0 || lim.max_joint_accel_dps2 <= 0.0)
    throw std::domain_error("move_duration: non-positive motion limits");

  Profile p;
  p.d = distance_deg;
  if (distance_deg == 0.0) return p;
  if (s.velocity_pct == 0 || s.acceleration_pct == 0)
    throw std::domain_error("unreachable motion: zero velocity or acceleration");

  p.v = s.velocity_pct / 100.0 * lim.max_joint_speed_dps;
  p.a = s.acceleration_pct / 100.0 * lim.max_joint_accel_dps2;
  if (p.v * p.v / p.a >= distance_deg) {
    // Triangular: cruise speed never reached.
    p.t_ramp = std::sqrt(distance_deg / p.a);
    p.t_cruise = 0.0;
  } else {
    p.t_ramp = p.v / p.a;
    p.t_cruise = (distance_deg - p.v * p.v / p.a) / p.v;
  }
  return p;
}

}  // namespace

void validate(const CellState& st) {
  if (st.settings.velocity_pct < 0 || st.settings.velocity_pct > 100 ||
      st.settings.acceleration_pct < 0 || st.settings.acceleration_pct > 100)
    throw std::domain_error("CellState: settings outside [0,100]");
  if (st.belt_speed_mms < 0.0 || st.belt_speed_mms > kBeltMaxSpeedMms)
    throw std::domain_error("CellState: belt speed outside [0,80]");
  if (st.belt_on != (st.belt_speed_mms > 0.0))
    throw std::domain_error("CellState: belt_speed must be 0 iff belt off");
  if (st.payload_g < 0.0 || st.payload_g > kPayloadMaxG)
    throw std::domain_error("CellState: payload outside [0,730]");
}

double move_duration(double distance_deg, const ArmSettings& s,
                     const MotionLimits& lim) {
  return make_profile(distance_deg, s, lim).duration();
}

double move_progress(double distance_deg, const ArmSettings& s,
                     const MotionLimits& lim, double t_s) {
  Profile p = make_profile(distance_deg, s, lim);
  if (p.d == 0.0) return 0.0;
  double t = std::clamp(t_s, 0.0, p.duration());
  double peak = p.a * p.t_ramp;  // == v for trapezoid, sqrt(d*a) for triangle
  double covered;
  if (t <= p.t_ramp) {
    covered = 0.5 * p.a * t * t;
  } else if (t <= p.t_ramp + p.t_cruise) {
    covered = 0.5 * p.a * p.t_ramp * p.t_ramp + peak * (t - p.t_ramp);
  } else {
    double td = p.duration() - t;
    covered = p.d - 0.5 * p.a * td * td;
  }
  return std::clamp(covered, 0.0, p.d);
}

double belt_delta(double speed_mms) {
  if (speed_mms < 0.0 || speed_mms > kBeltMaxSpeedMms)
    throw std::domain_error("belt_delta: speed outside [0,80]");
  // Calibration anchors at 10 mm/s spacing.
  static constexpr double kAnchors[9] = {0.0, 1.5, 2.5, 3.5, 3.5,
                                         2.5, 1.0, 1.0, 1.0};
  double pos = speed_mms / 10.0;
  int lo = static_cast<int>(pos);
  if (lo >= 8) return kAnchors[8];
  double frac = pos - lo;
  return kAnchors[lo] + frac * (kAnchors[lo + 1] - kAnchors[lo]);
}

PowerBreakdown mean_power(const CellState& st) {
  PowerBreakdown pb;
  pb.arm_w = st.arm_moving ? kArmMovingW : kArmIdleW;
  pb.suction_w = st.suction_on ? kSuctionW : 0.0;
  pb.belt_w = st.belt_on ? belt_delta(st.belt_speed_mms) : 0.0;
  pb.camera_w = kCameraBaseW + (st.camera_detect ? kCameraDetectDeltaW : 0.0);
  pb.system_total_w = pb.arm_w + pb.belt_w + pb.suction_w;
  return pb;
}

double energy_of_series(std::span<const double> powers_w, double dt_s) {
  if (powers_w.empty()) return 0.0;
  if (dt_s <= 0.0) throw std::domain_error("energy_of_series: dt must be > 0");
  double sum = 0.0;
  for (double p : powers_w) sum += p;
  return sum * dt_s;
}

PowerSampler::PowerSampler(std::uint64_t seed, NoiseParams np)
    : rng_(seed), np_(np) {}

double PowerSampler::gauss(double sigma) {
  // Box-Muller on raw 64-bit draws; std::normal_distribution is
  // implementation-defined, this keeps sequences stable across toolchains.
  double u1 = (static_cast<double>(rng_() >> 11) + 1.0) / 9007199254740993.0;
  double u2 = static_cast<double>(rng_() >> 11) / 9007199254740992.0;
  double z = std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586 * u2);
  return sigma * z;
}

double PowerSampler::uniform(double lo, double hi) {
  double u = static_cast<double>(rng_() >> 11) / 9007199254740992.0;
  return lo + u * (hi - lo);
}

PowerBreakdown PowerSampler::sample(const CellState& st, double t_s) {
  if (has_last_ && t_s == last_t_) return last_;
  validate(st);

  bool active = st.arm_moving || st.suction_on;
  if (active) {
    if (spike_left_ == 0 && t_s - last_active_t_ >= np_.idle_threshold_s) {
      spike_left_ = np_.spike_samples;
      spike_on_suction_ = st.suction_on && !st.arm_moving;
    }
    last_active_t_ = t_s;
  }

  PowerBreakdown pb = mean_power(st);
  pb.arm_w += gauss(np_.sigma_arm_w);
  pb.belt_w += gauss(np_.sigma_belt_w);
  pb.suction_w += gauss(np_.sigma_suction_w);
  if (active && spike_left_ > 0) {
    double spike = uniform(np_.spike_min_w, np_.spike_max_w);
    if (spike_on_suction_)
      pb.suction_w += spike;
    else
      pb.arm_w += spike;
    --spike_left_;
  }
  pb.arm_w = std::max(0.0, pb.arm_w);
  pb.belt_w = std::max(0.0, pb.belt_w);
  pb.suction_w = std::max(0.0, pb.suction_w);
  pb.system_total_w = pb.arm_w + pb.belt_w + pb.suction_w;

  last_t_ = t_s;
  last_ = pb;
  has_last_ = true;
  return pb;
}

}  // namespace cpsbench::powerkin
