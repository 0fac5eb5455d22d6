#include "cpsbench/telemetry.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <ostream>
#include <sstream>
#include <stdexcept>

namespace cpsbench::telemetry {

namespace topics {
std::vector<std::string> all() {
  std::vector<std::string> v = {power_arm, power_belt, power_suction,
                                power_camera};
  for (const char* j : joints) v.push_back(j);
  for (const char* t : {velocity, acceleration, arm_moving, suction_on,
                        belt_on, belt_speed, camera_detect, payload, round_id})
    v.push_back(t);
  return v;
}
}  // namespace topics

void TopicBus::register_topic(const std::string& topic) {
  std::lock_guard<std::mutex> lock(mu_);
  queues_.try_emplace(topic);
}

void TopicBus::publish(const MetricMessage& msg) {
  std::lock_guard<std::mutex> lock(mu_);
  auto it = queues_.find(msg.topic);
  if (it == queues_.end()) {
    ++dropped_;
    return;
  }
  it->second.push_back(msg);
}

std::optional<MetricMessage> TopicBus::try_pop(const std::string& topic) {
  std::lock_guard<std::mutex> lock(mu_);
  auto it = queues_.find(topic);
  if (it == queues_.end() || it->second.empty()) return std::nullopt;
  MetricMessage m = std::move(it->second.front());
  it->second.pop_front();
  return m;
}

std::vector<MetricMessage> TopicBus::drain(const std::string& topic) {
  std::lock_guard<std::mutex> lock(mu_);
  auto it = queues_.find(topic);
  std::vector<MetricMessage> out;
  if (it == queues_.end()) return out;
  out.assign(it->second.begin(), it->second.end());
  it->second.clear();
  return out;
}

std::vector<std::string> TopicBus::topic_names() const {
  std::lock_guard<std::mutex> lock(mu_);
  std::vector<std::string> names;
  for (const auto& [k, q] : queues_) names.push_back(k);
  return names;
}

std::size_t TopicBus::pending() const {
  std::lock_guard<std::mutex> lock(mu_);
  std::size_t n = 0;
  for (const auto& [k, q] : queues_) n += q.size();
  return n;
}

std::size_t TopicBus::dropped() const {
  std::lock_guard<std::mutex> lock(mu_);
  return dropped_;
}

SnapshotJoiner::SnapshotJoiner(std::string workload_id)
    : workload_id_(std::move(workload_id)) {}

void SnapshotJoiner::feed(const MetricMessage& msg) {
  series_[msg.topic].emplace_back(msg.t_s, msg.value);
}

namespace {

double as_double(const MetricValue& v) {
  if (auto* d = std::get_if<double>(&v)) return *d;
  if (auto* b = std::get_if<bool>(&v)) return *b ? 1.0 : 0.0;
  if (auto* i = std::get_if<std::int64_t>(&v)) return static_cast<double>(*i);
  throw std::runtime_error("metric value is not numeric");
}

bool as_bool(const MetricValue& v) {
  if (auto* b = std::get_if<bool>(&v)) return *b;
  return as_double(v) != 0.0;
}

double round3(double v) { return std::round(v * 1000.0) / 1000.0; }

}  // namespace

std::vector<SnapshotRow> SnapshotJoiner::finalize(double duration_s) const {
  std::vector<SnapshotRow> rows;
  auto total = static_cast<std::int64_t>(std::floor(duration_s + 1e-9));
  if (total < 1) return rows;

  // LVCF cursor per topic.
  std::map<std::string, std::size_t> cursor;
  auto last_at = [&](const std::string& topic, double t) -> const MetricValue* {
    auto it = series_.find(topic);
    if (it == series_.end()) return nullptr;
    const auto& vec = it->second;
    std::size_t& c = cursor[topic];
    while (c < vec.size() && vec[c].first <= t + 1e-9) ++c;
    if (c == 0) return nullptr;
    return &vec[c - 1].second;
  };
  auto need = [&](const std::string& topic, double t) -> const MetricValue& {
    const MetricValue* v = last_at(topic, t);
    if (!v)
      throw std::runtime_error("snapshot join: no value for topic " + topic +
                               " at or before t=" + std::to_string(t));
    return *v;
  };

  for (std::int64_t t = 1; t <= total; ++t) {
    double td = static_cast<double>(t);
    SnapshotRow r;
    r.t_s = t;
    r.workload_id = workload_id_;
    r.j1_deg = as_double(need(topics::joints[0], td));
    r.j2_deg = as_double(need(topics::joints[1], td));
    r.j3_deg = as_double(need(topics::joints[2], td));
    r.j4_deg = as_double(need(topics::joints[3], td));
    r.velocity_pct = static_cast<int>(as_double(need(topics::velocity, td)));
    r.acceleration_pct =
        static_cast<int>(as_double(need(topics::acceleration, td)));
    r.arm_moving = as_bool(need(topics::arm_moving, td));
    r.suction_on = as_bool(need(topics::suction_on, td));
    r.belt_on = as_bool(need(topics::belt_on, td));
    r.belt_speed_mms = as_double(need(topics::belt_speed, td));
    r.camera_detect = as_bool(need(topics::camera_detect, td));
    r.payload_g = as_double(need(topics::payload, td));
    r.plug_arm_w = as_double(need(topics::power_arm, td));
    r.plug_belt_w = as_double(need(topics::power_belt, td));
    r.plug_suction_w = as_double(need(topics::power_suction, td));
    r.system_power_w = r.plug_arm_w + r.plug_belt_w + r.plug_suction_w;
    if (const MetricValue* v = last_at(topics::round_id, td))
      r.round_id = static_cast<int>(as_double(*v));
    rows.push_back(std::move(r));
  }
  return rows;
}

std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.3f", v);
  // Avoid the "-0.000" artifact so re-exports stay byte-stable.
  if (std::string(buf) == "-0.000") return "0.000";
  return buf;
}

std::string csv_header() {
  return "t_s,j1_deg,j2_deg,j3_deg,j4_deg,velocity_pct,acceleration_pct,"
         "arm_moving,suction_on,belt_on,belt_speed_mms,camera_detect,"
         "payload_g,plug_arm_w,plug_belt_w,plug_suction_w,system_power_w,"
         "round_id,workload_id";
}

namespace {
const char* b2s(bool b) { return b ? "true" : "false"; }
}  // namespace

void append_csv(const std::vector<SnapshotRow>& rows, std::ostream& out) {
  for (const auto& r : rows) {
    double pa = round3(r.plug_arm_w);
    double pb = round3(r.plug_belt_w);
    double ps = round3(r.plug_suction_w);
    out << r.t_s << ',' << format_double(r.j1_deg) << ','
        << format_double(r.j2_deg) << ',' << format_double(r.j3_deg) << ','
        << format_double(r.j4_deg) << ',' << r.velocity_pct << ','
        << r.acceleration_pct << ',' << b2s(r.arm_moving) << ','
        << b2s(r.suction_on) << ',' << b2s(r.belt_on) << ','
        << format_double(r.belt_speed_mms) << ',' << b2s(r.camera_detect)
        << ',' << format_double(r.payload_g) << ',' << format_double(pa) << ','
        << format_double(pb) << ',' << format_double(ps) << ','
        << format_double(pa + pb + ps) << ',' << r.round_id << ','
        << r.workload_id << '\n';
  }
}

void export_csv(const std::vector<SnapshotRow>& rows,
                const std::string& path) {
  std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write CSV: " + path);
    out << csv_header() << '\n';
    append_csv(rows, out);
    if (!out) throw std::runtime_error("I/O error writing CSV: " + path);
  }
  std::filesystem::rename(tmp, path);
}

namespace {

std::vector<std::string> split_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      out.push_back(cur);
      cur.clear();
    } else if (c != '\r') {
      cur.push_back(c);
    }
  }
  out.push_back(cur);
  return out;
}

bool parse_bool(const std::string& s) {
  if (s == "true") return true;
  if (s == "false") return false;
  throw std::runtime_error("bad boolean field: " + s);
}

}  // namespace

std::vector<SnapshotRow> parse_csv(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open CSV: " + path);
  std::string line;
  if (!std::getline(in, line))
    throw std::runtime_error("empty CSV: " + path);
  if (split_line(line) != split_line(csv_header()))
    throw std::runtime_error("unexpected CSV header in " + path);
  std::vector<SnapshotRow> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    auto f = split_line(line);
    if (f.size() != 19)
      throw std::runtime_error("bad CSV row in " + path + ": " + line);
    SnapshotRow r;
    r.t_s = std::stoll(f[0]);
    r.j1_deg = std::stod(f[1]);
    r.j2_deg = std::stod(f[2]);
    r.j3_deg = std::stod(f[3]);
    r.j4_deg = std::stod(f[4]);
    r.velocity_pct = std::stoi(f[5]);
    r.acceleration_pct = std::stoi(f[6]);
    r.arm_moving = parse_bool(f[7]);
    r.suction_on = parse_bool(f[8]);
    r.belt_on = parse_bool(f[9]);
    r.belt_speed_mms = std::stod(f[10]);
    r.camera_detect = parse_bool(f[11]);
    r.payload_g = std::stod(f[12]);
    r.plug_arm_w = std::stod(f[13]);
    r.plug_belt_w = std::stod(f[14]);
    r.plug_suction_w = std::stod(f[15]);
    r.system_power_w = std::stod(f[16]);
    r.round_id = std::stoi(f[17]);
    r.workload_id = f[18];
    rows.push_back(std::move(r));
  }
  return rows;
}

void write_table(const CsvTable& t, const std::string& path) {
  std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write CSV: " + path);
    for (std::size_t i = 0; i < t.header.size(); ++i)
      out << (i ? "," : "") << t.header[i];
    out << '\n';
    for (const auto& row : t.rows) {
      for (std::size_t i = 0; i < row.size(); ++i)
        out << (i ? "," : "") << row[i];
      out << '\n';
    }
    if (!out) throw std::runtime_error("I/O error writing CSV: " + path);
  }
  std::filesystem::rename(tmp, path);
}

CsvTable read_table(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open CSV: " + path);
  CsvTable t;
  std::string line;
  if (std::getline(in, line)) t.header = split_line(line);
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    t.rows.push_back(split_line(line));
  }
  return t;
}

}  // namespace cpsbench::telemetry
