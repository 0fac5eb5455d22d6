#include "cpsbench/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace cpsbench::analysis {

using telemetry::format_double;

double quantile(std::vector<double> v, double q) {
  if (v.empty()) throw std::invalid_argument("quantile: empty input");
  if (q < 0.0 || q > 1.0) throw std::invalid_argument("quantile: q not in [0,1]");
  std::sort(v.begin(), v.end());
  double pos = q * static_cast<double>(v.size() - 1);
  std::size_t lo = static_cast<std::size_t>(pos);
  if (lo + 1 >= v.size()) return v.back();
  double frac = pos - static_cast<double>(lo);
  return v[lo] + frac * (v[lo + 1] - v[lo]);
}

BoxSummary box_summary(std::span<const double> values) {
  if (values.empty()) throw std::invalid_argument("box_summary: empty input");
  std::vector<double> v(values.begin(), values.end());
  std::sort(v.begin(), v.end());
  BoxSummary b;
  b.q1 = quantile(v, 0.25);
  b.median = quantile(v, 0.5);
  b.q3 = quantile(v, 0.75);
  b.iqr = b.q3 - b.q1;
  double lo_fence = b.q1 - 1.5 * b.iqr;
  double hi_fence = b.q3 + 1.5 * b.iqr;
  b.whisker_low = v.back();
  b.whisker_high = v.front();
  for (double x : v) {
    if (x < lo_fence || x > hi_fence) {
      b.outliers.push_back(x);
    } else {
      b.whisker_low = std::min(b.whisker_low, x);
      b.whisker_high = std::max(b.whisker_high, x);
    }
  }
  return b;
}

GroupKey group_key_from_string(const std::string& s) {
  if (s == "velocity") return GroupKey::velocity;
  if (s == "acceleration") return GroupKey::acceleration;
  if (s == "belt_speed") return GroupKey::belt_speed;
  if (s == "payload") return GroupKey::payload;
  throw std::invalid_argument("unknown group key: " + s);
}

namespace {

double row_key(const telemetry::SnapshotRow& r, GroupKey key) {
  switch (key) {
    case GroupKey::velocity: return r.velocity_pct;
    case GroupKey::acceleration: return r.acceleration_pct;
    case GroupKey::belt_speed: return r.belt_speed_mms;
    case GroupKey::payload: return r.payload_g;
  }
  throw std::invalid_argument("unknown group key");
}

double round_key(const workloads::RoundRecord& r, GroupKey key) {
  switch (key) {
    case GroupKey::velocity: return r.params.velocity_pct;
    case GroupKey::acceleration: return r.params.acceleration_pct;
    case GroupKey::belt_speed: return r.params.belt_speed_mms;
    case GroupKey::payload: return r.params.payload_g;
  }
  throw std::invalid_argument("unknown group key");
}

}  // namespace

std::map<double, BoxSummary> group_by_config(
    std::span<const telemetry::SnapshotRow> rows, GroupKey key) {
  std::map<double, std::vector<double>> grouped;
  for (const auto& r : rows)
    grouped[row_key(r, key)].push_back(r.system_power_w);
  std::map<double, BoxSummary> out;
  for (const auto& [k, v] : grouped) out[k] = box_summary(v);
  return out;
}

std::vector<ThroughputPoint> throughput_curves(
    std::span<const workloads::RoundRecord> rounds) {
  if (rounds.empty())
    throw std::invalid_argument("throughput_curves: no rounds");
  // Average duplicated configurations.
  std::map<std::tuple<int, int, double, double>,
           std::pair<ThroughputPoint, int>>
      acc;
  for (const auto& r : rounds) {
    auto key = std::make_tuple(r.params.velocity_pct,
                               r.params.acceleration_pct,
                               r.params.belt_speed_mms, r.params.payload_g);
    auto& [p, n] = acc[key];
    p.peak_power_w += r.peak_power_w;
    p.energy_j += r.energy_j;
    p.mean_power_w += r.mean_power_w;
    p.duration_s += r.duration_s;
    ++n;
  }
  std::vector<ThroughputPoint> out;
  for (auto& [k, pn] : acc) {
    auto& [p, n] = pn;
    p.peak_power_w /= n;
    p.energy_j /= n;
    p.mean_power_w /= n;
    p.duration_s /= n;
    p.objects_per_min = 60.0 / p.duration_s;
    out.push_back(p);
  }
  std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) {
    return a.objects_per_min < b.objects_per_min;
  });
  return out;
}

std::vector<TrendPoint> energy_trend(
    std::span<const workloads::RoundRecord> rounds, GroupKey key) {
  std::map<double, std::pair<TrendPoint, int>> acc;
  for (const auto& r : rounds) {
    auto& [p, n] = acc[round_key(r, key)];
    p.energy_j += r.energy_j;
    p.mean_power_w += r.mean_power_w;
    p.duration_s += r.duration_s;
    ++n;
  }
  std::vector<TrendPoint> out;
  for (auto& [k, pn] : acc) {
    auto& [p, n] = pn;
    p.key = k;
    p.energy_j /= n;
    p.mean_power_w /= n;
    p.duration_s /= n;
    out.push_back(p);
  }
  return out;
}

namespace {

constexpr int kW = 640, kH = 400;
constexpr int kLeft = 60, kRight = 60, kTop = 40, kBottom = 50;

struct Scale {
  double lo, hi;
  double y(double v) const {
    if (hi == lo) return kH - kBottom;
    return (kH - kBottom) -
           (v - lo) / (hi - lo) * (kH - kTop - kBottom);
  }
};

std::string svg_open(const std::string& title) {
  std::ostringstream os;
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kW
     << "\" height=\"" << kH << "\">\n"
     << "<rect width=\"" << kW << "\" height=\"" << kH
     << "\" fill=\"white\"/>\n"
     << "<text x=\"" << kW / 2 << "\" y=\"24\" text-anchor=\"middle\" "
        "font-family=\"sans-serif\" font-size=\"15\">" << title
     << "</text>\n";
  return os.str();
}

void svg_axes(std::ostringstream& os, const Scale& s,
              const std::string& x_label, const std::string& y_label) {
  os << "<line x1=\"" << kLeft << "\" y1=\"" << kTop << "\" x2=\"" << kLeft
     << "\" y2=\"" << kH - kBottom << "\" stroke=\"black\"/>\n"
     << "<line x1=\"" << kLeft << "\" y1=\"" << kH - kBottom << "\" x2=\""
     << kW - kRight << "\" y2=\"" << kH - kBottom << "\" stroke=\"black\"/>\n";
  for (int i = 0; i <= 4; ++i) {
    double v = s.lo + (s.hi - s.lo) * i / 4.0;
    os << "<text x=\"" << kLeft - 6 << "\" y=\""
       << format_double(s.y(v) + 4) << "\" text-anchor=\"end\" "
          "font-family=\"sans-serif\" font-size=\"11\">"
       << format_double(v) << "</text>\n";
  }
  os << "<text x=\"" << (kLeft + kW - kRight) / 2 << "\" y=\"" << kH - 12
     << "\" text-anchor=\"middle\" font-family=\"sans-serif\" "
        "font-size=\"12\">" << x_label << "</text>\n"
     << "<text x=\"16\" y=\"" << kTop - 12
     << "\" font-family=\"sans-serif\" font-size=\"12\">" << y_label
     << "</text>\n";
}

}  // namespace

std::string render_box_svg(const std::map<double, BoxSummary>& groups,
                           const std::string& title,
                           const std::string& x_label) {
  std::ostringstream os;
  os << svg_open(title);
  if (groups.empty()) {
    os << "</svg>\n";
    return os.str();
  }
  double lo = 1e300, hi = -1e300;
  for (const auto& [k, b] : groups) {
    lo = std::min({lo, b.whisker_low,
                   b.outliers.empty() ? b.whisker_low : b.outliers.front()});
    hi = std::max({hi, b.whisker_high,
                   b.outliers.empty() ? b.whisker_high : b.outliers.back()});
  }
  double pad = std::max(0.5, (hi - lo) * 0.05);
  Scale s{lo - pad, hi + pad};
  svg_axes(os, s, x_label, "system power (W)");
  double slot = static_cast<double>(kW - kLeft - kRight) / groups.size();
  double box_w = std::min(30.0, slot * 0.5);
  int i = 0;
  for (const auto& [k, b] : groups) {
    double cx = kLeft + slot * (i + 0.5);
    auto X = [&](double dx) { return format_double(cx + dx); };
    auto Y = [&](double v) { return format_double(s.y(v)); };
    os << "<line x1=\"" << X(0) << "\" y1=\"" << Y(b.whisker_low)
       << "\" x2=\"" << X(0) << "\" y2=\"" << Y(b.whisker_high)
       << "\" stroke=\"black\"/>\n";
    os << "<rect x=\"" << X(-box_w / 2) << "\" y=\"" << Y(b.q3)
       << "\" width=\"" << format_double(box_w) << "\" height=\""
       << format_double(s.y(b.q1) - s.y(b.q3))
       << "\" fill=\"#9ecae1\" stroke=\"black\"/>\n";
    os << "<line x1=\"" << X(-box_w / 2) << "\" y1=\"" << Y(b.median)
       << "\" x2=\"" << X(box_w / 2) << "\" y2=\"" << Y(b.median)
       << "\" stroke=\"black\" stroke-width=\"2\"/>\n";
    for (double o : b.outliers)
      os << "<circle cx=\"" << X(0) << "\" cy=\"" << Y(o)
         << "\" r=\"2\" fill=\"none\" stroke=\"black\"/>\n";
    os << "<text x=\"" << X(0) << "\" y=\"" << kH - kBottom + 16
       << "\" text-anchor=\"middle\" font-family=\"sans-serif\" "
          "font-size=\"11\">" << format_double(k) << "</text>\n";
    ++i;
  }
  os << "</svg>\n";
  return os.str();
}

std::string render_dual_axis_svg(const std::vector<TrendPoint>& points,
                                 const std::string& title,
                                 const std::string& x_label) {
  std::ostringstream os;
  os << svg_open(title);
  if (points.empty()) {
    os << "</svg>\n";
    return os.str();
  }
  double e_lo = 1e300, e_hi = -1e300, p_lo = 1e300, p_hi = -1e300;
  for (const auto& p : points) {
    e_lo = std::min(e_lo, p.energy_j);
    e_hi = std::max(e_hi, p.energy_j);
    p_lo = std::min(p_lo, p.mean_power_w);
    p_hi = std::max(p_hi, p.mean_power_w);
  }
  Scale se{e_lo - 1.0, e_hi + 1.0};
  Scale sp{p_lo - 1.0, p_hi + 1.0};
  svg_axes(os, se, x_label, "energy per round (J); dashed: mean power (W)");
  double slot = static_cast<double>(kW - kLeft - kRight) / points.size();
  auto cx = [&](std::size_t i) { return kLeft + slot * (i + 0.5); };
  for (std::size_t i = 0; i + 1 < points.size(); ++i) {
    os << "<line x1=\"" << format_double(cx(i)) << "\" y1=\""
       << format_double(se.y(points[i].energy_j)) << "\" x2=\""
       << format_double(cx(i + 1)) << "\" y2=\""
       << format_double(se.y(points[i + 1].energy_j))
       << "\" stroke=\"#d62728\" stroke-width=\"2\"/>\n";
    os << "<line x1=\"" << format_double(cx(i)) << "\" y1=\""
       << format_double(sp.y(points[i].mean_power_w)) << "\" x2=\""
       << format_double(cx(i + 1)) << "\" y2=\""
       << format_double(sp.y(points[i + 1].mean_power_w))
       << "\" stroke=\"#1f77b4\" stroke-width=\"2\" "
          "stroke-dasharray=\"5,3\"/>\n";
  }
  for (std::size_t i = 0; i < points.size(); ++i)
    os << "<text x=\"" << format_double(cx(i)) << "\" y=\""
       << kH - kBottom + 16 << "\" text-anchor=\"middle\" "
          "font-family=\"sans-serif\" font-size=\"11\">"
       << format_double(points[i].key) << "</text>\n";
  os << "</svg>\n";
  return os.str();
}

std::string render_scatter_svg(const std::vector<ThroughputPoint>& points,
                               const std::string& title) {
  std::ostringstream os;
  os << svg_open(title);
  if (points.empty()) {
    os << "</svg>\n";
    return os.str();
  }
  double x_lo = 1e300, x_hi = -1e300, y_lo = 1e300, y_hi = -1e300;
  for (const auto& p : points) {
    x_lo = std::min(x_lo, p.objects_per_min);
    x_hi = std::max(x_hi, p.objects_per_min);
    y_lo = std::min(y_lo, p.energy_j);
    y_hi = std::max(y_hi, p.energy_j);
  }
  Scale sy{y_lo - 1.0, y_hi + 1.0};
  svg_axes(os, sy, "objects per minute", "energy per object (J)");
  double span = std::max(1e-9, x_hi - x_lo);
  for (const auto& p : points) {
    double px = kLeft + (p.objects_per_min - x_lo) / span *
                            (kW - kLeft - kRight);
    os << "<circle cx=\"" << format_double(px) << "\" cy=\""
       << format_double(sy.y(p.energy_j))
       << "\" r=\"3\" fill=\"#d62728\"/>\n";
  }
  os << "</svg>\n";
  return os.str();
}

namespace {

void write_text(const std::string& path, const std::string& content) {
  std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write: " + path);
    out << content;
    if (!out) throw std::runtime_error("I/O error writing: " + path);
  }
  std::filesystem::rename(tmp, path);
}

void write_box_csv(const std::map<double, BoxSummary>& groups,
                   const std::string& path) {
  telemetry::CsvTable t;
  t.header = {"key",          "median",       "q1",          "q3",
              "iqr",          "whisker_low",  "whisker_high", "n_outliers"};
  for (const auto& [k, b] : groups)
    t.rows.push_back({format_double(k), format_double(b.median),
                      format_double(b.q1), format_double(b.q3),
                      format_double(b.iqr), format_double(b.whisker_low),
                      format_double(b.whisker_high),
                      std::to_string(b.outliers.size())});
  telemetry::write_table(t, path);
}

void write_trend_csv(const std::vector<TrendPoint>& points,
                     const std::string& path) {
  telemetry::CsvTable t;
  t.header = {"key", "energy_j", "mean_power_w", "duration_s"};
  for (const auto& p : points)
    t.rows.push_back({format_double(p.key), format_double(p.energy_j),
                      format_double(p.mean_power_w),
                      format_double(p.duration_s)});
  telemetry::write_table(t, path);
}

void write_scatter_csv(const std::vector<ThroughputPoint>& points,
                       const std::string& path) {
  telemetry::CsvTable t;
  t.header = {"objects_per_min", "energy_j", "peak_power_w", "mean_power_w",
              "duration_s"};
  for (const auto& p : points)
    t.rows.push_back({format_double(p.objects_per_min),
                      format_double(p.energy_j), format_double(p.peak_power_w),
                      format_double(p.mean_power_w),
                      format_double(p.duration_s)});
  telemetry::write_table(t, path);
}

}  // namespace

FigureSet emit_plots(std::span<const telemetry::SnapshotRow> rows,
                     std::span<const workloads::RoundRecord> rounds,
                     const std::string& out_dir) {
  std::filesystem::create_directories(out_dir);
  FigureSet fs;
  auto dir = std::filesystem::path(out_dir);

  struct BoxFig {
    const char* name;
    GroupKey key;
    const char* title;
    const char* x;
  };
  const BoxFig box_figs[] = {
      {"power_by_velocity", GroupKey::velocity,
       "Power demand vs arm velocity", "velocity setting (%)"},
      {"power_by_acceleration", GroupKey::acceleration,
       "Power demand vs arm acceleration", "acceleration setting (%)"},
      {"power_by_payload", GroupKey::payload, "Power demand vs payload",
       "payload (g)"},
      {"power_by_pump", GroupKey::velocity, "Power demand vs pump state",
       "suction enabled"},
      {"power_by_belt_speed", GroupKey::belt_speed,
       "Power demand vs belt speed", "belt speed (mm/s)"},
  };
  for (const auto& f : box_figs) {
    std::map<double, BoxSummary> groups;
    if (std::string(f.name) == "power_by_pump") {
      std::map<double, std::vector<double>> g;
      for (const auto& r : rows)
        g[r.suction_on ? 1.0 : 0.0].push_back(r.system_power_w);
      for (const auto& [k, v] : g) groups[k] = box_summary(v);
    } else if (!rows.empty()) {
      groups = group_by_config(rows, f.key);
    }
    if (groups.empty()) continue;  // skipped: nothing to plot
    write_text((dir / (std::string(f.name) + ".svg")).string(),
               render_box_svg(groups, f.title, f.x));
    write_box_csv(groups, (dir / (std::string(f.name) + ".csv")).string());
    fs.files.push_back(std::string(f.name) + ".svg");
  }

  const std::pair<const char*, GroupKey> trend_figs[] = {
      {"energy_by_velocity", GroupKey::velocity},
      {"energy_by_acceleration", GroupKey::acceleration},
      {"energy_by_belt_speed", GroupKey::belt_speed},
  };
  for (const auto& [name, key] : trend_figs) {
    std::vector<TrendPoint> points;
    if (!rounds.empty()) points = energy_trend(rounds, key);
    if (points.empty()) continue;
    write_text((dir / (std::string(name) + ".svg")).string(),
               render_dual_axis_svg(points, name, "setting"));
    write_trend_csv(points, (dir / (std::string(name) + ".csv")).string());
    fs.files.push_back(std::string(name) + ".svg");
  }

  if (!rounds.empty()) {
    auto points = throughput_curves(rounds);
    write_text((dir / "energy_vs_throughput.svg").string(),
               render_scatter_svg(points, "Energy per object vs throughput"));
    write_scatter_csv(points, (dir / "energy_vs_throughput.csv").string());
    fs.files.push_back("energy_vs_throughput.svg");
  }
  return fs;
}

}  // namespace cpsbench::analysis
