#include "cpsbench/control.hpp"

#include <atomic>
#include <chrono>
#include <cmath>
#include <stdexcept>
#include <thread>

namespace cpsbench::control {

namespace {

using powerkin::ArmSettings;
using telemetry::MetricMessage;
using telemetry::TopicBus;

namespace tp = telemetry::topics;

struct Visitor;

class Executor {
 public:
  Executor(const InstructionProgram& program, const SortingScene& scene,
           const ExecOptions& opts)
      : program_(program),
        cell_(scene, program.params.seed, opts.noise),
        opts_(opts),
        joiner_(program.params.trial_id.empty() ? program.params.workload_id
                                                : program.params.trial_id) {
    for (const auto& t : tp::all()) bus_.register_topic(t);
  }

  RunLog run();

  void exec(const ArmMoveJoints& in);
  void exec(const BeltSet& in);
  void exec(const SuctionSet& in);
  void exec(const CameraQuery& in);
  void exec(const WaitFor& in);
  void exec(const MarkRound& in);
  void exec(const ScenePlace& in);

 private:
  double now_s() const { return static_cast<double>(t_ms_) / 1000.0; }

  void pub(const char* topic, telemetry::MetricValue v) {
    bus_.publish(MetricMessage{topic, now_s(), std::move(v)});
  }

  void publish_bootstrap();
  void take_sample();
  void publish_joints();
  void advance_ms(std::int64_t dur_ms, bool in_move);

  void consume_available(int delay_us);

  const InstructionProgram& program_;
  SimCell cell_;
  ExecOptions opts_;
  TopicBus bus_;
  telemetry::SnapshotJoiner joiner_;
  std::int64_t t_ms_ = 0;
  std::int64_t next_sample_ms_ = 1000;
  std::int64_t move_start_ms_ = 0;

  struct RoundWindow {
    int id;
    double begin_s;
    double end_s = -1.0;
  };
  std::vector<RoundWindow> windows_;
};

void Executor::publish_bootstrap() {
  const auto& st = cell_.state();
  for (int i = 0; i < 4; ++i) pub(tp::joints[i], st.joint_angles_deg[i]);
  pub(tp::velocity, static_cast<std::int64_t>(st.settings.velocity_pct));
  pub(tp::acceleration,
      static_cast<std::int64_t>(st.settings.acceleration_pct));
  pub(tp::arm_moving, st.arm_moving);
  pub(tp::suction_on, st.suction_on);
  pub(tp::belt_on, st.belt_on);
  pub(tp::belt_speed, st.belt_speed_mms);
  pub(tp::camera_detect, st.camera_detect);
  pub(tp::payload, st.payload_g);
  pub(tp::round_id, static_cast<std::int64_t>(0));
}

void Executor::publish_joints() {
  const auto& st = cell_.state();
  for (int i = 0; i < 4; ++i) pub(tp::joints[i], st.joint_angles_deg[i]);
}

void Executor::take_sample() {
  publish_joints();
  auto pb = cell_.sample_power(now_s());
  pub(tp::power_arm, pb.arm_w);
  pub(tp::power_belt, pb.belt_w);
  pub(tp::power_suction, pb.suction_w);
  pub(tp::power_camera, pb.camera_w);
}

void Executor::advance_ms(std::int64_t dur_ms, bool in_move) {
  const std::int64_t target = t_ms_ + dur_ms;
  while (t_ms_ < target) {
    std::int64_t next = std::min(t_ms_ + 100, target);  // 100 ms motion tick
    if (next_sample_ms_ > t_ms_ && next_sample_ms_ < next)
      next = next_sample_ms_;
    double dt = static_cast<double>(next - t_ms_) / 1000.0;
    cell_.advance_belt(dt);
    t_ms_ = next;
    if (in_move)
      cell_.arm_motion_at(static_cast<double>(t_ms_ - move_start_ms_) /
                          1000.0);
    if (t_ms_ == next_sample_ms_) {
      take_sample();
      next_sample_ms_ += 1000;
    }
  }
}

void Executor::exec(const ArmMoveJoints& in) {
  auto dur = cell_.arm_move_joints(in.target_deg, in.settings, now_s());
  if (!dur) return;  // rejected; fail-soft
  pub(tp::velocity, static_cast<std::int64_t>(in.settings.velocity_pct));
  pub(tp::acceleration,
      static_cast<std::int64_t>(in.settings.acceleration_pct));
  if (*dur == 0.0) return;
  pub(tp::arm_moving, true);
  move_start_ms_ = t_ms_;
  advance_ms(std::llround(*dur * 1000.0), true);
  cell_.arm_finish_move();
  pub(tp::arm_moving, false);
  publish_joints();
}

void Executor::exec(const BeltSet& in) {
  if (!cell_.belt_set(in.on, in.speed_mms, now_s())) return;
  pub(tp::belt_on, in.on);
  pub(tp::belt_speed, cell_.state().belt_speed_mms);
}

void Executor::exec(const SuctionSet& in) {
  cell_.suction_set(in.on, now_s());
  pub(tp::suction_on, cell_.state().suction_on);
  pub(tp::payload, cell_.state().payload_g);
}

void Executor::exec(const CameraQuery&) {
  advance_ms(std::llround(cell_.camera_latency_s() * 1000.0), false);
  cell_.camera_query(now_s());
  pub(tp::camera_detect, cell_.state().camera_detect);
}

void Executor::exec(const WaitFor& in) {
  if (in.seconds < 0.0) return;
  advance_ms(std::llround(in.seconds * 1000.0), false);
}

void Executor::exec(const MarkRound& in) {
  pub(tp::round_id, static_cast<std::int64_t>(in.begin ? in.round_id : 0));
  if (in.begin) {
    windows_.push_back({in.round_id, now_s()});
  } else {
    for (auto it = windows_.rbegin(); it != windows_.rend(); ++it) {
      if (it->id == in.round_id && it->end_s < 0.0) {
        it->end_s = now_s();
        return;
      }
    }
    throw std::runtime_error("unmatched round end marker, id=" +
                             std::to_string(in.round_id));
  }
}

void Executor::exec(const ScenePlace& in) {
  cell_.scene_place(in, now_s());
  pub(tp::payload, cell_.state().payload_g);
}

void Executor::consume_available(int delay_us) {
  for (const auto& topic : bus_.topic_names()) {
    while (auto m = bus_.try_pop(topic)) {
      joiner_.feed(*m);
      if (delay_us > 0)
        std::this_thread::sleep_for(std::chrono::microseconds(delay_us));
    }
  }
}

RunLog Executor::run() {
  cell_.set_settings({program_.params.velocity_pct,
                      program_.params.acceleration_pct});
  publish_bootstrap();

  std::atomic<bool> done{false};
  std::thread consumer;
  if (opts_.consumer_delay_us > 0) {
    consumer = std::thread([this, &done] {
      while (!done.load()) consume_available(opts_.consumer_delay_us);
    });
  }

  for (const auto& ins : program_.instructions)
    std::visit([this](const auto& i) { exec(i); }, ins);

  done.store(true);
  if (consumer.joinable()) consumer.join();
  consume_available(0);  // drain whatever is left

  RunLog log;
  log.params = program_.params;
  log.duration_s = now_s();
  log.events = cell_.events();
  log.rows = joiner_.finalize(log.duration_s);
  log.dropped_messages = bus_.dropped();

  for (const auto& w : windows_) {
    if (w.end_s < 0.0)
      throw std::runtime_error("unmatched round begin marker, id=" +
                               std::to_string(w.id));
    std::vector<telemetry::SnapshotRow> round_rows;
    for (const auto& r : log.rows)
      if (r.round_id == w.id) round_rows.push_back(r);
    if (round_rows.empty()) continue;
    log.rounds.push_back(workloads::summarize_round(
        round_rows, w.begin_s, w.end_s, program_.params, w.id));
  }
  return log;
}

}  // namespace

std::vector<Instruction> translate(const WorkloadStep& step,
                                   const SortingScene& scene,
                                   const ArmSettings& settings) {
  std::vector<Instruction> out;
  auto move_to = [&](const std::string& station) {
    out.push_back(ArmMoveJoints{scene.station(station), settings});
  };

  if (const auto* s = std::get_if<StepInjectCube>(&step)) {
    out.push_back(
        ScenePlace{CubeSpot::belt_head, s->cube.color, s->cube.payload_g});
  } else if (const auto* s = std::get_if<StepRunBelt>(&step)) {
    if (s->speed_mms < 10.0 || s->speed_mms > 80.0)
      throw std::invalid_argument("run_belt: speed_mms outside [10,80]");
    if (s->distance_mm <= 0.0)
      throw std::invalid_argument("run_belt: distance_mm must be > 0");
    out.push_back(BeltSet{true, s->speed_mms});
    // Small margin so the cube is at the pick point when the belt stops.
    out.push_back(WaitFor{s->distance_mm / s->speed_mms + 0.05});
    out.push_back(BeltSet{false, 0.0});
  } else if (std::get_if<StepPickAtBelt>(&step)) {
    move_to("belt_above");
    move_to("belt_pick");
    out.push_back(SuctionSet{true});
    move_to("belt_above");
  } else if (std::get_if<StepPresentToCamera>(&step)) {
    move_to("camera");
    out.push_back(CameraQuery{});
  } else if (const auto* s = std::get_if<StepPlaceInBucket>(&step)) {
    std::string bucket = scene.bucket_for(s->color);
    if (bucket.empty()) {
      // Degenerate input: no bucket for this color, drop at home.
      move_to("home");
      out.push_back(SuctionSet{false});
    } else {
      move_to(bucket + "_above");
      move_to(bucket + "_at");
      out.push_back(SuctionSet{false});
      move_to(bucket + "_above");
    }
  } else if (std::get_if<StepReturnHome>(&step)) {
    move_to("home");
  } else if (const auto* s = std::get_if<StepWait>(&step)) {
    if (s->seconds < 0.0)
      throw std::invalid_argument("wait: seconds must be >= 0");
    out.push_back(WaitFor{s->seconds});
  } else if (const auto* s = std::get_if<StepMoveTo>(&step)) {
    out.push_back(ArmMoveJoints{scene.station(s->station), s->settings});
  } else if (const auto* s = std::get_if<StepSuction>(&step)) {
    out.push_back(SuctionSet{s->on});
  } else if (const auto* s = std::get_if<StepBelt>(&step)) {
    out.push_back(BeltSet{s->on, s->speed_mms});
  } else if (std::get_if<StepCameraQuery>(&step)) {
    out.push_back(CameraQuery{});
  } else if (const auto* s = std::get_if<StepScene>(&step)) {
    out.push_back(s->place);
  } else if (const auto* s = std::get_if<StepMarkRound>(&step)) {
    out.push_back(MarkRound{s->begin, s->round_id});
  }
  return out;
}

InstructionProgram generate(const ExperimentParams& params) {
  SortingScene scene = default_scene();
  if (params.workload_id == "sorting") {
    static const Color cycle[4] = {Color::red, Color::green, Color::blue,
                                   Color::yellow};
    for (int i = 0; i < params.rounds; ++i)
      scene.cube_queue.push_back({cycle[i % 4], params.payload_g});
  }
  return generate(params, scene);
}

InstructionProgram generate(const ExperimentParams& params,
                            const SortingScene& scene) {
  if (params.rounds < 1)
    throw std::invalid_argument("experiment rounds must be >= 1");
  if (params.workload_id == "sorting")
    return workloads::build_sorting(params, scene);
  try {
    auto kind = workloads::micro_kind_from_string(params.workload_id);
    return workloads::build_micro(kind, params);
  } catch (const std::invalid_argument&) {
    throw std::invalid_argument(
        "unknown workload '" + params.workload_id +
        "'; available: sorting, arm_sweep, camera_toggle, belt_sweep, "
        "suction_toggle, payload_sweep");
  }
}

RunLog execute(const InstructionProgram& program, const SortingScene& scene,
               const ExecOptions& opts) {
  Executor ex(program, scene, opts);
  return ex.run();
}

RunLog execute(const InstructionProgram& program) {
  return execute(program, default_scene(), ExecOptions{});
}

}  // namespace cpsbench::control
