#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>

#include "cpsbench/control.hpp"
#include "doctest.h"

using namespace cpsbench;
using namespace cpsbench::control;

namespace {

ExperimentParams sorting_params(int rounds = 2, std::uint64_t seed = 7) {
  ExperimentParams p;
  p.workload_id = "sorting";
  p.trial_id = "t";
  p.rounds = rounds;
  p.seed = seed;
  return p;
}

bool rows_equal(const std::vector<telemetry::SnapshotRow>& a,
                const std::vector<telemetry::SnapshotRow>& b) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a[i].t_s != b[i].t_s || a[i].j1_deg != b[i].j1_deg ||
        a[i].system_power_w != b[i].system_power_w ||
        a[i].plug_arm_w != b[i].plug_arm_w ||
        a[i].round_id != b[i].round_id ||
        a[i].arm_moving != b[i].arm_moving ||
        a[i].payload_g != b[i].payload_g)
      return false;
  }
  return true;
}

}  // namespace

TEST_CASE("run_belt lowers to belt-on, timed wait, belt-off") {
  auto scene = default_scene();
  auto ins = translate(StepRunBelt{10.0, 200.0}, scene, {50, 100});
  REQUIRE(ins.size() == 3);
  auto* on = std::get_if<BeltSet>(&ins[0]);
  auto* wait = std::get_if<WaitFor>(&ins[1]);
  auto* off = std::get_if<BeltSet>(&ins[2]);
  REQUIRE(on);
  REQUIRE(wait);
  REQUIRE(off);
  CHECK(on->on);
  CHECK(on->speed_mms == 10.0);
  // 200 mm at 10 mm/s: 20 s of transport plus the stop margin.
  CHECK(wait->seconds == doctest::Approx(20.05));
  CHECK_FALSE(off->on);

  CHECK_THROWS_AS(translate(StepRunBelt{5.0, 100.0}, scene, {50, 100}),
                  std::invalid_argument);
  CHECK_THROWS_AS(translate(StepRunBelt{81.0, 100.0}, scene, {50, 100}),
                  std::invalid_argument);
  CHECK_THROWS_AS(translate(StepRunBelt{40.0, 0.0}, scene, {50, 100}),
                  std::invalid_argument);
}

TEST_CASE("pick and place lower to the documented move sequences") {
  auto scene = default_scene();
  auto pick = translate(StepPickAtBelt{}, scene, {50, 100});
  REQUIRE(pick.size() == 4);
  CHECK(std::get<ArmMoveJoints>(pick[0]).target_deg ==
        scene.station("belt_above"));
  CHECK(std::get<ArmMoveJoints>(pick[1]).target_deg ==
        scene.station("belt_pick"));
  CHECK(std::get<SuctionSet>(pick[2]).on);
  CHECK(std::get<ArmMoveJoints>(pick[3]).target_deg ==
        scene.station("belt_above"));

  auto place = translate(StepPlaceInBucket{Color::red}, scene, {50, 100});
  REQUIRE(place.size() == 4);
  CHECK(std::get<ArmMoveJoints>(place[1]).target_deg ==
        scene.station("bucket_red_at"));
  CHECK_FALSE(std::get<SuctionSet>(place[2]).on);

  // A color without a bucket degrades to a drop at home.
  auto drop = translate(StepPlaceInBucket{Color::none}, scene, {50, 100});
  REQUIRE(drop.size() == 2);
  CHECK(std::get<ArmMoveJoints>(drop[0]).target_deg == scene.station("home"));
  CHECK_FALSE(std::get<SuctionSet>(drop[1]).on);
}

TEST_CASE("negative wait is rejected at translation time") {
  CHECK_THROWS_AS(translate(StepWait{-1.0}, default_scene(), {50, 100}),
                  std::invalid_argument);
}

TEST_CASE("camera presentation queries after reaching the camera") {
  auto scene = default_scene();
  auto ins = translate(StepPresentToCamera{}, scene, {60, 80});
  REQUIRE(ins.size() == 2);
  const auto& mv = std::get<ArmMoveJoints>(ins[0]);
  CHECK(mv.target_deg == scene.station("camera"));
  CHECK(mv.settings.velocity_pct == 60);
  CHECK(std::holds_alternative<CameraQuery>(ins[1]));
}

TEST_CASE("unknown workload error lists the available ids") {
  ExperimentParams p = sorting_params();
  p.workload_id = "drilling";
  CHECK_THROWS_WITH_AS(generate(p), doctest::Contains("sorting"),
                       std::invalid_argument);
  CHECK_THROWS_WITH_AS(generate(p), doctest::Contains("drilling"),
                       std::invalid_argument);
  p.workload_id = "sorting";
  p.rounds = 0;
  CHECK_THROWS_AS(generate(p), std::invalid_argument);
}

TEST_CASE("sorting generation queues one cube per round") {
  auto prog = generate(sorting_params(5));
  int begins = 0;
  for (const auto& ins : prog.instructions)
    if (const auto* m = std::get_if<MarkRound>(&ins))
      begins += m->begin ? 1 : 0;
  CHECK(begins == 5);
}

TEST_CASE("execution samples at exactly 1 Hz") {
  auto log = execute(generate(sorting_params(2)));
  CHECK(log.duration_s > 0.0);
  CHECK(log.rows.size() ==
        static_cast<std::size_t>(std::floor(log.duration_s)));
  for (std::size_t i = 0; i < log.rows.size(); ++i)
    CHECK(log.rows[i].t_s == static_cast<std::int64_t>(i + 1));
  CHECK(log.dropped_messages == 0);
  REQUIRE(log.rounds.size() == 2);
  for (const auto& r : log.rounds) {
    CHECK(r.duration_s > 0.0);
    CHECK(r.energy_j ==
          doctest::Approx(r.mean_power_w * r.duration_s).epsilon(1e-12));
    CHECK(r.throughput_obj_per_min == doctest::Approx(60.0 / r.duration_s));
  }
}

TEST_CASE("fixed-seed replay reproduces every row and event") {
  auto a = execute(generate(sorting_params(2, 11)));
  auto b = execute(generate(sorting_params(2, 11)));
  auto c = execute(generate(sorting_params(2, 12)));
  CHECK(rows_equal(a.rows, b.rows));
  CHECK(a.events.size() == b.events.size());
  CHECK(a.duration_s == b.duration_s);
  CHECK_FALSE(rows_equal(a.rows, c.rows));  // seed reaches the noise
}

TEST_CASE("a slow consumer changes neither rows nor events") {
  auto prog = generate(sorting_params(2, 11));
  auto fast = execute(prog, default_scene(), ExecOptions{});
  ExecOptions slow;
  slow.consumer_delay_us = 200;
  auto lagged = execute(prog, default_scene(), slow);
  CHECK(rows_equal(fast.rows, lagged.rows));
  REQUIRE(fast.events.size() == lagged.events.size());
  for (std::size_t i = 0; i < fast.events.size(); ++i) {
    CHECK(fast.events[i].t_s == lagged.events[i].t_s);
    CHECK(fast.events[i].detail == lagged.events[i].detail);
  }
  CHECK(lagged.dropped_messages == 0);
}

TEST_CASE("unmatched round markers abort the run") {
  InstructionProgram p;
  p.params = sorting_params();
  p.instructions = {MarkRound{true, 1}, WaitFor{2.0}};
  CHECK_THROWS_WITH_AS(execute(p), doctest::Contains("unmatched"),
                       std::runtime_error);
  p.instructions = {WaitFor{2.0}, MarkRound{false, 1}};
  CHECK_THROWS_AS(execute(p), std::runtime_error);
}

TEST_CASE("rejected device commands are logged and skipped") {
  InstructionProgram p;
  p.params = sorting_params();
  p.instructions = {ArmMoveJoints{{140.0, 0.0, 0.0, 0.0}, {50, 100}},
                    BeltSet{true, 99.0}, WaitFor{3.0}};
  auto log = execute(p);
  CHECK(log.duration_s == doctest::Approx(3.0));
  int rejected = 0;
  for (const auto& ev : log.events) rejected += ev.rejected ? 1 : 0;
  CHECK(rejected == 2);
  CHECK_FALSE(log.rows.empty());
  CHECK_FALSE(log.rows.back().belt_on);
}

TEST_CASE("camera latency advances the clock by about one second") {
  InstructionProgram p;
  p.params = sorting_params();
  p.instructions = {CameraQuery{}, CameraQuery{}, CameraQuery{}};
  auto log = execute(p);
  CHECK(log.duration_s > 3.0 * (kCameraLatencyS - kCameraJitterS) - 1e-9);
  CHECK(log.duration_s < 3.0 * (kCameraLatencyS + kCameraJitterS) + 1e-9);
}
