#pragma once

#include <cstdint>
#include <deque>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <variant>
#include <vector>

namespace cpsbench::telemetry {

using MetricValue = std::variant<double, bool, std::int64_t, std::string>;

struct MetricMessage {
  std::string topic;
  double t_s = 0.0;
  MetricValue value;
};

// Topic names used by the execution controller.
namespace topics {
inline constexpr const char* power_arm = "power.arm";
inline constexpr const char* power_belt = "power.belt";
inline constexpr const char* power_suction = "power.suction";
inline constexpr const char* power_camera = "power.camera";
inline constexpr const char* joints[4] = {"state.j1", "state.j2", "state.j3",
                                          "state.j4"};
inline constexpr const char* velocity = "state.velocity_pct";
inline constexpr const char* acceleration = "state.acceleration_pct";
inline constexpr const char* arm_moving = "state.arm_moving";
inline constexpr const char* suction_on = "state.suction_on";
inline constexpr const char* belt_on = "state.belt_on";
inline constexpr const char* belt_speed = "state.belt_speed_mms";
inline constexpr const char* camera_detect = "state.camera_detect";
inline constexpr const char* payload = "state.payload_g";
inline constexpr const char* round_id = "round.id";
std::vector<std::string> all();
}  // namespace topics

// In-process stand-in for the external broker: one FIFO queue per metric
// topic. publish() enqueues under a short lock and returns; it never waits
// on a consumer, the buffers grow as needed. Messages to unregistered
// topics are dropped and counted.
class TopicBus {
 public:
  void register_topic(const std::string& topic);
  void publish(const MetricMessage& msg);
  std::optional<MetricMessage> try_pop(const std::string& topic);
  std::vector<MetricMessage> drain(const std::string& topic);
  std::vector<std::string> topic_names() const;
  std::size_t pending() const;
  std::size_t dropped() const;

 private:
  mutable std::mutex mu_;
  std::map<std::string, std::deque<MetricMessage>> queues_;
  std::size_t dropped_ = 0;
};

// One exported per-second telemetry record.
struct SnapshotRow {
  std::int64_t t_s = 0;
  double j1_deg = 0, j2_deg = 0, j3_deg = 0, j4_deg = 0;
  int velocity_pct = 0;
  int acceleration_pct = 0;
  bool arm_moving = false;
  bool suction_on = false;
  bool belt_on = false;
  double belt_speed_mms = 0;
  bool camera_detect = false;
  double payload_g = 0;
  double plug_arm_w = 0, plug_belt_w = 0, plug_suction_w = 0;
  double system_power_w = 0;  // sum of the three plug channels
  int round_id = 0;           // 0 = outside any round
  std::string workload_id;
};

// Joins the per-topic streams into 1 Hz rows, last value carried forward
// at each second boundary. Feed order must respect per-topic FIFO; topics
// may interleave arbitrarily.
class SnapshotJoiner {
 public:
  explicit SnapshotJoiner(std::string workload_id);
  void feed(const MetricMessage& msg);
  // Rows for t = 1 .. floor(duration_s). Requires every state topic to
  // have a value at or before each emitted second (t=0 bootstrap).
  std::vector<SnapshotRow> finalize(double duration_s) const;

 private:
  std::string workload_id_;
  std::map<std::string, std::vector<std::pair<double, MetricValue>>> series_;
};

std::string csv_header();
void export_csv(const std::vector<SnapshotRow>& rows, const std::string& path);
void append_csv(const std::vector<SnapshotRow>& rows, std::ostream& out);
std::vector<SnapshotRow> parse_csv(const std::string& path);

// Generic comma-separated table, used for every secondary artifact so all
// emitted CSVs share one dialect.
struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
};
void write_table(const CsvTable& t, const std::string& path);
CsvTable read_table(const std::string& path);

std::string format_double(double v);  // fixed, 3 decimal places

}  // namespace cpsbench::telemetry
