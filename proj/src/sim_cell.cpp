#include "cpsbench/sim_cell.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

namespace cpsbench {

namespace {

std::string fmt_joints(const std::array<double, 4>& j) {
  std::ostringstream os;
  os << "[" << j[0] << "," << j[1] << "," << j[2] << "," << j[3] << "]";
  return os.str();
}

}  // namespace

SimCell::SimCell(SortingScene scene, std::uint64_t seed,
                 powerkin::NoiseParams np)
    : scene_(std::move(scene)),
      sampler_(seed, np),
      latency_state_(seed ^ 0xc2b2ae3d27d4eb4fULL) {
  state_.joint_angles_deg = scene_.station("home");
}

double SimCell::camera_latency_s() {
  // splitmix64 step; independent of the power-noise stream.
  std::uint64_t z = (latency_state_ += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  z ^= z >> 31;
  double u = static_cast<double>(z >> 11) / 9007199254740992.0;
  return kCameraLatencyS + (2.0 * u - 1.0) * kCameraJitterS;
}

void SimCell::log(double t_s, const std::string& device,
                  const std::string& detail, bool rejected) {
  events_.push_back({t_s, device, detail, rejected});
}

bool SimCell::arm_at(const std::string& station) const {
  const auto& target = scene_.station(station);
  for (int i = 0; i < 4; ++i)
    if (std::abs(state_.joint_angles_deg[i] - target[i]) > kStationTolDeg)
      return false;
  return true;
}

void SimCell::refresh_payload() {
  if (cube_ && (cube_->held || cube_->spot == CubeSpot::belt_head ||
                cube_->spot == CubeSpot::belt_pick))
    state_.payload_g = cube_->payload_g;
  else
    state_.payload_g = 0.0;
}

std::optional<double> SimCell::arm_move_joints(
    const std::array<double, 4>& target, const powerkin::ArmSettings& settings,
    double t_s) {
  for (double a : target) {
    if (std::abs(a) > kJointLimitDeg) {
      log(t_s, "arm", "move rejected: target outside joint limits " +
          fmt_joints(target), true);
      return std::nullopt;
    }
  }
  double duration = 0.0;
  try {
    for (int i = 0; i < 4; ++i) {
      double d = std::abs(target[i] - state_.joint_angles_deg[i]);
      duration = std::max(duration, powerkin::move_duration(d, settings));
    }
  } catch (const std::domain_error& e) {
    log(t_s, "arm", std::string("move rejected: ") + e.what(), true);
    return std::nullopt;
  }
  state_.settings = settings;
  log(t_s, "arm", "move_joints " + fmt_joints(target));
  if (duration == 0.0) return 0.0;
  move_ = PendingMove{state_.joint_angles_deg, target, settings, duration};
  state_.arm_moving = true;
  return duration;
}

void SimCell::arm_motion_at(double t_rel) {
  if (!move_) return;
  for (int i = 0; i < 4; ++i) {
    double d = move_->to[i] - move_->from[i];
    if (d == 0.0) continue;
    double covered =
        powerkin::move_progress(std::abs(d), move_->settings, {}, t_rel);
    state_.joint_angles_deg[i] =
        move_->from[i] + (d > 0 ? covered : -covered);
  }
}

void SimCell::arm_finish_move() {
  if (!move_) return;
  state_.joint_angles_deg = move_->to;
  state_.arm_moving = false;
  move_.reset();
}

bool SimCell::belt_set(bool on, double speed_mms, double t_s) {
  if (on && (speed_mms < 10.0 || speed_mms > 80.0)) {
    std::ostringstream os;
    os << "set rejected: speed " << speed_mms << " outside [10,80]";
    log(t_s, "belt", os.str(), true);
    return false;
  }
  if (!on && speed_mms != 0.0) {
    log(t_s, "belt", "set rejected: nonzero speed with belt off", true);
    return false;
  }
  std::ostringstream os;
  os << "set on=" << (on ? "true" : "false") << " speed=" << speed_mms;
  log(t_s, "belt", os.str());
  state_.belt_on = on;
  state_.belt_speed_mms = on ? speed_mms : 0.0;
  return true;
}

bool SimCell::suction_set(bool on, double t_s) {
  log(t_s, "suction", on ? "set on=true" : "set on=false");
  if (on == state_.suction_on) return true;  // idempotent re-send
  state_.suction_on = on;
  if (on) {
    if (cube_ && cube_->spot == CubeSpot::belt_pick && arm_at("belt_pick")) {
      cube_->held = true;
      cube_->spot = CubeSpot::removed;
    }
  } else if (cube_ && cube_->held) {
    cube_->held = false;
    std::string bucket = scene_.bucket_for(cube_->color);
    if (!bucket.empty() && arm_at(bucket + "_at")) {
      log(t_s, "scene", std::string("cube sorted into ") + bucket);
      cube_.reset();
    } else if (arm_at("belt_pick")) {
      cube_->spot = CubeSpot::belt_pick;
    } else {
      log(t_s, "scene", "cube released off-station");
      cube_.reset();
    }
  }
  refresh_payload();
  return true;
}

SimCell::CameraReading SimCell::camera_query(double t_s) {
  CameraReading r;
  bool held_at_camera = cube_ && cube_->held && arm_at("camera");
  bool placed_at_camera = cube_ && cube_->spot == CubeSpot::camera_view;
  if (held_at_camera || placed_at_camera) {
    r.detected = true;
    r.color = cube_->color;
  }
  state_.camera_detect = r.detected;
  std::ostringstream os;
  os << "query detected=" << (r.detected ? "true" : "false") << " color="
     << to_string(r.color);
  log(t_s, "camera", os.str());
  return r;
}

powerkin::PowerBreakdown SimCell::sample_power(double t_s) {
  return sampler_.sample(state_, t_s);
}

double SimCell::plug_read(PlugChannel ch, double t_s) {
  auto pb = sample_power(t_s);
  switch (ch) {
    case PlugChannel::arm: return pb.arm_w;
    case PlugChannel::belt: return pb.belt_w;
    case PlugChannel::suction: return pb.suction_w;
    case PlugChannel::camera: return pb.camera_w;
  }
  throw std::invalid_argument("plug_read: unknown channel");
}

void SimCell::scene_place(const ScenePlace& p, double t_s) {
  std::ostringstream os;
  if (p.spot == CubeSpot::removed) {
    os << "clear";
    cube_.reset();
  } else {
    os << "place color=" << to_string(p.color) << " payload_g=" << p.payload_g
       << " spot="
       << (p.spot == CubeSpot::belt_head
               ? "belt_head"
               : p.spot == CubeSpot::belt_pick ? "belt_pick" : "camera_view");
    cube_ = ActiveCube{p.color, p.payload_g, p.spot, false, 0.0};
  }
  log(t_s, "scene", os.str());
  refresh_payload();
}

void SimCell::advance_belt(double dt_s) {
  if (!state_.belt_on || !cube_ || cube_->spot != CubeSpot::belt_head) return;
  cube_->belt_progress_mm += state_.belt_speed_mms * dt_s;
  if (cube_->belt_progress_mm >= scene_.belt_transfer_mm)
    cube_->spot = CubeSpot::belt_pick;
}

bool SimCell::cube_at(CubeSpot spot) const {
  if (spot == CubeSpot::removed) return !cube_.has_value();
  if (!cube_) return false;
  if (cube_->held) return false;
  return cube_->spot == spot;
}

}  // namespace cpsbench
