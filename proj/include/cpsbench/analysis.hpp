#pragma once

#include <map>
#include <span>
#include <string>
#include <vector>

#include "cpsbench/telemetry.hpp"
#include "cpsbench/workloads.hpp"

namespace cpsbench::analysis {

struct BoxSummary {
  double median = 0, q1 = 0, q3 = 0, iqr = 0;
  double whisker_low = 0, whisker_high = 0;
  std::vector<double> outliers;
};

// Quartiles by linear interpolation, Tukey 1.5*IQR whiskers clamped to
// observed values. Throws on empty input.
BoxSummary box_summary(std::span<const double> values);

// Linearly interpolated quantile, q in [0,1], matching box_summary's method.
double quantile(std::vector<double> sorted_values, double q);

enum class GroupKey { velocity, acceleration, belt_speed, payload };
GroupKey group_key_from_string(const std::string& s);

// System-power distribution per distinct key value (row columns carry the
// configuration), ascending.
std::map<double, BoxSummary> group_by_config(
    std::span<const telemetry::SnapshotRow> rows, GroupKey key);

struct ThroughputPoint {
  double objects_per_min = 0;
  double peak_power_w = 0;
  double energy_j = 0;
  double mean_power_w = 0;
  double duration_s = 0;
};

// One point per distinct configuration (duplicates averaged), sorted by
// throughput ascending. Requires at least one round.
std::vector<ThroughputPoint> throughput_curves(
    std::span<const workloads::RoundRecord> rounds);

// Per-config mean energy/duration keyed by one parameter, for the
// energy-vs-setting trend figures.
struct TrendPoint {
  double key = 0;
  double energy_j = 0;
  double mean_power_w = 0;
  double duration_s = 0;
};
std::vector<TrendPoint> energy_trend(
    std::span<const workloads::RoundRecord> rounds, GroupKey key);

// Deterministic SVG renderers.
std::string render_box_svg(const std::map<double, BoxSummary>& groups,
                           const std::string& title,
                           const std::string& x_label);
std::string render_dual_axis_svg(const std::vector<TrendPoint>& points,
                                 const std::string& title,
                                 const std::string& x_label);
std::string render_scatter_svg(const std::vector<ThroughputPoint>& points,
                               const std::string& title);

struct FigureSet {
  std::vector<std::string> files;  // emitted file names, in order
};

// Renders the figure analogues (one SVG + one CSV per figure) into
// out_dir. Empty groups are skipped with a warning entry.
FigureSet emit_plots(std::span<const telemetry::SnapshotRow> rows,
                     std::span<const workloads::RoundRecord> rounds,
                     const std::string& out_dir);

}  // namespace cpsbench::analysis
