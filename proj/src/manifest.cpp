#include "cpsbench/manifest.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include "cpsbench/powerkin.hpp"

namespace cpsbench::pipeline {

namespace {

struct Parser {
  std::string origin;
  int line_no = 0;

  [[noreturn]] void fail(const std::string& field, const std::string& what) {
    throw UsageError(origin + ":" + std::to_string(line_no) + ": field '" +
                     field + "': " + what);
  }

  long long to_int(const std::string& field, const std::string& v) {
    try {
      std::size_t pos = 0;
      long long n = std::stoll(v, &pos);
      if (pos != v.size()) throw std::invalid_argument(v);
      return n;
    } catch (const std::exception&) {
      fail(field, "expected an integer, got '" + v + "'");
    }
  }

  double to_double(const std::string& field, const std::string& v) {
    try {
      std::size_t pos = 0;
      double d = std::stod(v, &pos);
      if (pos != v.size()) throw std::invalid_argument(v);
      return d;
    } catch (const std::exception&) {
      fail(field, "expected a number, got '" + v + "'");
    }
  }

  bool to_bool(const std::string& field, const std::string& v) {
    if (v == "true") return true;
    if (v == "false") return false;
    fail(field, "expected true or false, got '" + v + "'");
  }
};

std::string trim(const std::string& s) {
  auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

}  // namespace

RunManifest parse_manifest_text(const std::string& text,
                                const std::string& origin) {
  RunManifest m;
  Parser p{origin};
  enum class Section { none, output, experiment } section = Section::none;
  ExperimentParams cur;
  bool have_cur = false, cur_has_id = false;
  int cur_line = 0;
  std::set<std::string> ids;

  auto finish_experiment = [&] {
    if (!have_cur) return;
    if (!cur_has_id) {
      p.line_no = cur_line;
      p.fail("id", "every [experiment] block needs an id");
    }
    m.experiments.push_back(cur);
    cur = ExperimentParams{};
    have_cur = cur_has_id = false;
  };

  std::istringstream in(text);
  std::string raw;
  while (std::getline(in, raw)) {
    ++p.line_no;
    std::string line = raw;
    if (auto h = line.find('#'); h != std::string::npos) line.resize(h);
    line = trim(line);
    if (line.empty()) continue;

    if (line.front() == '[') {
      if (line == "[output]") {
        finish_experiment();
        section = Section::output;
      } else if (line == "[experiment]") {
        finish_experiment();
        section = Section::experiment;
        have_cur = true;
        cur_line = p.line_no;
      } else {
        p.fail(line, "unknown section (expected [output] or [experiment])");
      }
      continue;
    }

    auto eq = line.find('=');
    if (eq == std::string::npos)
      p.fail(line, "expected 'key = value'");
    std::string key = trim(line.substr(0, eq));
    std::string val = trim(line.substr(eq + 1));
    if (val.empty()) p.fail(key, "missing value");

    if (section == Section::output) {
      if (key == "dir") {
        m.out_dir = val;
      } else if (key == "seed") {
        m.seed = static_cast<std::uint64_t>(p.to_int(key, val));
      } else if (key == "combined") {
        m.combined = p.to_bool(key, val);
      } else {
        p.fail(key, "unknown [output] key (dir, seed, combined)");
      }
    } else if (section == Section::experiment) {
      if (key == "id") {
        if (!ids.insert(val).second) p.fail(key, "duplicate id '" + val + "'");
        cur.trial_id = val;
        cur_has_id = true;
      } else if (key == "workload") {
        cur.workload_id = val;
      } else if (key == "velocity") {
        long long v = p.to_int(key, val);
        if (v < 0 || v > 100) p.fail(key, "value outside [0,100]");
        cur.velocity_pct = static_cast<int>(v);
      } else if (key == "acceleration") {
        long long v = p.to_int(key, val);
        if (v < 0 || v > 100) p.fail(key, "value outside [0,100]");
        cur.acceleration_pct = static_cast<int>(v);
      } else if (key == "belt") {
        double v = p.to_double(key, val);
        if (v < 0.0 || v > powerkin::kBeltMaxSpeedMms)
          p.fail(key, "value outside [0,80]");
        cur.belt_speed_mms = v;
      } else if (key == "payload") {
        double v = p.to_double(key, val);
        if (v < 0.0 || v > powerkin::kPayloadMaxG)
          p.fail(key, "value outside [0,730]");
        cur.payload_g = v;
      } else if (key == "rounds") {
        long long v = p.to_int(key, val);
        if (v < 1) p.fail(key, "value must be >= 1");
        cur.rounds = static_cast<int>(v);
      } else if (key == "seed") {
        cur.seed = static_cast<std::uint64_t>(p.to_int(key, val));
      } else {
        p.fail(key,
               "unknown [experiment] key (id, workload, velocity, "
               "acceleration, belt, payload, rounds, seed)");
      }
    } else {
      p.fail(key, "key outside any section");
    }
  }
  finish_experiment();
  if (m.experiments.empty()) {
    p.line_no = 0;
    p.fail("experiment", "manifest defines no [experiment] blocks");
  }
  for (const auto& e : m.experiments) {
    if (e.workload_id.empty()) {
      p.line_no = 0;
      p.fail("workload", "experiment '" + e.trial_id + "' has no workload");
    }
  }
  return m;
}

RunManifest parse_manifest(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw UsageError("cannot open manifest: " + path);
  std::ostringstream os;
  os << in.rdbuf();
  return parse_manifest_text(os.str(), path);
}

std::string render_manifest(const RunManifest& m) {
  std::ostringstream os;
  os << "[output]\n"
     << "dir = " << m.out_dir << "\n"
     << "seed = " << m.seed << "\n"
     << "combined = " << (m.combined ? "true" : "false") << "\n";
  for (const auto& e : m.experiments) {
    os << "\n[experiment]\n"
       << "id = " << e.trial_id << "\n"
       << "workload = " << e.workload_id << "\n"
       << "velocity = " << e.velocity_pct << "\n"
       << "acceleration = " << e.acceleration_pct << "\n"
       << "belt = " << e.belt_speed_mms << "\n"
       << "payload = " << e.payload_g << "\n"
       << "rounds = " << e.rounds << "\n";
    if (e.seed != 0) os << "seed = " << e.seed << "\n";
  }
  return os.str();
}

}  // namespace cpsbench::pipeline
