#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>
#include <filesystem>

#include "cpsbench/sim_cell.hpp"
#include "doctest.h"

using namespace cpsbench;
namespace fs = std::filesystem;

namespace {

SimCell make_cell(std::uint64_t seed = 1) {
  powerkin::NoiseParams np;
  np.sigma_arm_w = 0.0;
  np.sigma_belt_w = 0.0;
  np.sigma_suction_w = 0.0;
  return SimCell(default_scene(), seed, np);
}

void run_move(SimCell& cell, const std::string& station,
              const powerkin::ArmSettings& s = {50, 100}) {
  auto d = cell.arm_move_joints(cell.scene().station(station), s, 0.0);
  REQUIRE(d.has_value());
  cell.arm_finish_move();
}

}  // namespace

TEST_CASE("cell starts at home with no payload") {
  auto cell = make_cell();
  CHECK(cell.state().joint_angles_deg == default_scene().station("home"));
  CHECK(cell.state().payload_g == 0.0);
  CHECK_FALSE(cell.state().arm_moving);
}

TEST_CASE("arm move duration is the slowest joint's profile time") {
  auto cell = make_cell();
  // home {0,20,20,0} -> camera {125,30,40,90}: base joint travels 125 deg.
  auto d = cell.arm_move_joints(cell.scene().station("camera"), {50, 100}, 0.0);
  REQUIRE(d.has_value());
  CHECK(*d == doctest::Approx(powerkin::move_duration(125.0, {50, 100}))
                  .epsilon(1e-12));
  CHECK(cell.state().arm_moving);
  cell.arm_motion_at(*d / 2.0);
  CHECK(cell.state().joint_angles_deg[0] ==
        doctest::Approx(125.0 / 2.0).epsilon(1e-9));
  cell.arm_finish_move();
  CHECK_FALSE(cell.state().arm_moving);
  CHECK(cell.state().joint_angles_deg == cell.scene().station("camera"));
}

TEST_CASE("zero-distance move completes immediately") {
  auto cell = make_cell();
  auto d = cell.arm_move_joints(cell.scene().station("home"), {50, 100}, 0.0);
  REQUIRE(d.has_value());
  CHECK(*d == 0.0);
  CHECK_FALSE(cell.state().arm_moving);
}

TEST_CASE("out-of-limit target is rejected and logged") {
  auto cell = make_cell();
  auto before = cell.state().joint_angles_deg;
  auto d = cell.arm_move_joints({140.0, 0.0, 0.0, 0.0}, {50, 100}, 1.5);
  CHECK_FALSE(d.has_value());
  CHECK(cell.state().joint_angles_deg == before);
  REQUIRE_FALSE(cell.events().empty());
  const auto& ev = cell.events().back();
  CHECK(ev.device == "arm");
  CHECK(ev.rejected);
  CHECK(ev.t_s == doctest::Approx(1.5));
}

TEST_CASE("unreachable settings are rejected, not thrown") {
  auto cell = make_cell();
  auto d = cell.arm_move_joints(cell.scene().station("camera"), {0, 50}, 0.0);
  CHECK_FALSE(d.has_value());
  CHECK(cell.events().back().rejected);
}

TEST_CASE("belt set validation") {
  auto cell = make_cell();
  CHECK_FALSE(cell.belt_set(true, 5.0, 0.0));   // below range
  CHECK_FALSE(cell.belt_set(true, 81.0, 0.0));  // above range
  CHECK_FALSE(cell.belt_set(false, 5.0, 0.0));  // speed with belt off
  CHECK_FALSE(cell.state().belt_on);
  CHECK(cell.belt_set(true, 40.0, 0.0));
  CHECK(cell.state().belt_speed_mms == 40.0);
  CHECK(cell.belt_set(false, 0.0, 1.0));
  CHECK(cell.state().belt_speed_mms == 0.0);
}

TEST_CASE("belt transports a cube over the transfer distance") {
  // 200 mm at 10 mm/s arrives at the pick point after 20 s.
  SortingScene scene = default_scene();
  scene.belt_transfer_mm = 200.0;
  SimCell cell(scene, 1);
  cell.scene_place({CubeSpot::belt_head, Color::red, 100.0}, 0.0);
  REQUIRE(cell.belt_set(true, 10.0, 0.0));
  for (int i = 0; i < 199; ++i) cell.advance_belt(0.1);
  CHECK(cell.cube_at(CubeSpot::belt_head));  // 19.9 s: still in transit
  cell.advance_belt(0.1);
  CHECK(cell.cube_at(CubeSpot::belt_pick));  // 20.0 s: arrived
}

TEST_CASE("belt does not move a cube while off") {
  auto cell = make_cell();
  cell.scene_place({CubeSpot::belt_head, Color::red, 100.0}, 0.0);
  cell.advance_belt(1000.0);
  CHECK(cell.cube_at(CubeSpot::belt_head));
}

TEST_CASE("pick, carry, and sort lifecycle") {
  auto cell = make_cell();
  cell.scene_place({CubeSpot::belt_pick, Color::blue, 340.0}, 0.0);
  CHECK(cell.state().payload_g == doctest::Approx(340.0));  // cube on belt end

  run_move(cell, "belt_pick");
  cell.suction_set(true, 1.0);
  CHECK(cell.state().suction_on);
  CHECK(cell.state().payload_g == doctest::Approx(340.0));  // now held
  CHECK_FALSE(cell.cube_at(CubeSpot::belt_pick));

  cell.suction_set(true, 1.5);  // idempotent re-send keeps the cube
  CHECK(cell.state().payload_g == doctest::Approx(340.0));

  run_move(cell, "bucket_blue_at");
  cell.suction_set(false, 2.0);
  CHECK(cell.state().payload_g == 0.0);
  CHECK(cell.cube_at(CubeSpot::removed));
  bool sorted = false;
  for (const auto& ev : cell.events())
    sorted = sorted || ev.detail.find("sorted into bucket_blue") !=
                           std::string::npos;
  CHECK(sorted);
}

TEST_CASE("suction without a cube under the gripper grabs nothing") {
  auto cell = make_cell();
  cell.suction_set(true, 0.0);
  CHECK(cell.state().suction_on);
  CHECK(cell.state().payload_g == 0.0);
}

TEST_CASE("releasing away from any station drops the cube out of play") {
  auto cell = make_cell();
  cell.scene_place({CubeSpot::belt_pick, Color::red, 100.0}, 0.0);
  run_move(cell, "belt_pick");
  cell.suction_set(true, 0.0);
  run_move(cell, "camera");
  cell.suction_set(false, 1.0);
  CHECK(cell.cube_at(CubeSpot::removed));
  CHECK(cell.state().payload_g == 0.0);
}

TEST_CASE("camera detects a held cube only at the camera station") {
  auto cell = make_cell();
  auto r0 = cell.camera_query(0.0);
  CHECK_FALSE(r0.detected);
  CHECK_FALSE(cell.state().camera_detect);

  cell.scene_place({CubeSpot::belt_pick, Color::yellow, 50.0}, 0.0);
  run_move(cell, "belt_pick");
  cell.suction_set(true, 0.0);
  auto r1 = cell.camera_query(1.0);  // held, but arm is at the belt
  CHECK_FALSE(r1.detected);

  run_move(cell, "camera");
  auto r2 = cell.camera_query(2.0);
  CHECK(r2.detected);
  CHECK(r2.color == Color::yellow);
  CHECK(cell.state().camera_detect);
}

TEST_CASE("camera also sees a cube placed directly in view") {
  auto cell = make_cell();
  cell.scene_place({CubeSpot::camera_view, Color::green, 0.0}, 0.0);
  auto r = cell.camera_query(0.0);
  CHECK(r.detected);
  CHECK(r.color == Color::green);
}

TEST_CASE("camera latency stays within the jitter band and is seeded") {
  SimCell a(default_scene(), 7), b(default_scene(), 7), c(default_scene(), 8);
  bool all_equal = true, any_spread = false, any_diff = false;
  double lo = 1e9, hi = -1e9;
  for (int i = 0; i < 200; ++i) {
    double la = a.camera_latency_s();
    double lb = b.camera_latency_s();
    double lc = c.camera_latency_s();
    all_equal = all_equal && la == lb;
    any_diff = any_diff || la != lc;
    lo = std::min(lo, la);
    hi = std::max(hi, la);
  }
  any_spread = hi - lo > 0.01;
  CHECK(all_equal);
  CHECK(any_diff);
  CHECK(any_spread);
  CHECK(lo >= kCameraLatencyS - kCameraJitterS);
  CHECK(hi <= kCameraLatencyS + kCameraJitterS);
}

TEST_CASE("plug channels agree with the cached power sample") {
  SimCell cell(default_scene(), 3);
  cell.belt_set(true, 40.0, 0.0);
  auto pb = cell.sample_power(5.0);
  CHECK(cell.plug_read(PlugChannel::arm, 5.0) == pb.arm_w);
  CHECK(cell.plug_read(PlugChannel::belt, 5.0) == pb.belt_w);
  CHECK(cell.plug_read(PlugChannel::suction, 5.0) == pb.suction_w);
  CHECK(cell.plug_read(PlugChannel::camera, 5.0) == pb.camera_w);
}

TEST_CASE("scene clear removes the active cube") {
  auto cell = make_cell();
  cell.scene_place({CubeSpot::belt_head, Color::red, 100.0}, 0.0);
  CHECK(cell.state().payload_g == doctest::Approx(100.0));
  cell.scene_place({CubeSpot::removed, Color::none, 0.0}, 1.0);
  CHECK(cell.cube_at(CubeSpot::removed));
  CHECK(cell.state().payload_g == 0.0);
}

TEST_CASE("event log records every command with its device") {
  auto cell = make_cell();
  cell.belt_set(true, 40.0, 0.0);
  cell.suction_set(true, 1.0);
  cell.camera_query(2.0);
  cell.scene_place({CubeSpot::belt_head, Color::red, 10.0}, 3.0);
  REQUIRE(cell.events().size() == 4);
  CHECK(cell.events()[0].device == "belt");
  CHECK(cell.events()[1].device == "suction");
  CHECK(cell.events()[2].device == "camera");
  CHECK(cell.events()[3].device == "scene");
  for (const auto& ev : cell.events()) CHECK_FALSE(ev.rejected);
}

TEST_CASE("scene file round-trip and diagnostics") {
  auto path = (fs::temp_directory_path() / "cps_scene.txt").string();
  SortingScene s = default_scene();
  s.belt_transfer_mm = 123.0;
  s.cube_queue.push_back({Color::green, 42.0});
  save_scene(s, path);
  SortingScene back = load_scene(path);
  CHECK(back.belt_transfer_mm == 123.0);
  CHECK(back.stations.at("camera") == s.stations.at("camera"));
  REQUIRE(back.cube_queue.size() == 1);
  CHECK(back.cube_queue[0].color == Color::green);
  CHECK(back.cube_queue[0].payload_g == 42.0);
  fs::remove(path);

  std::ofstream(path) << "station.bad = 1 2\n";
  CHECK_THROWS_WITH_AS(load_scene(path),
                       doctest::Contains(":1:"), std::runtime_error);
  fs::remove(path);
  CHECK_THROWS(load_scene(path));  // missing file
}

TEST_CASE("unknown station name raises a descriptive error") {
  SortingScene s = default_scene();
  CHECK_THROWS_WITH_AS(s.station("nowhere"),
                       doctest::Contains("nowhere"), std::invalid_argument);
  CHECK(s.bucket_for(Color::none).empty());
  CHECK(s.bucket_for(Color::red) == "bucket_red");
}
