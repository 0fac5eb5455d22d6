#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "cpsbench/telemetry.hpp"
#include "cpsbench/workloads.hpp"

namespace cpsbench::mlcore {

struct DesignMatrix {
  std::vector<std::string> feature_names;
  std::vector<std::vector<double>> x;  // row-major, |row| == |feature_names|
  std::vector<double> y;
  std::vector<std::string> strata;  // configuration label per row
  std::string target_name;

  std::size_t rows() const { return x.size(); }
  std::size_t cols() const { return feature_names.size(); }
};

enum class Task { power_state, round_energy, round_duration };
Task task_from_string(const std::string& s);
const char* to_string(Task t);

// power_state: 16 per-second state features -> system_power_w, one row per
// snapshot. round_energy / round_duration: the 4 round parameters
// (velocity_pct, acceleration_pct, belt_speed, payload_g) -> energy_j or
// duration_s, one row per round. Strata are the configuration tuples.
DesignMatrix assemble(Task task,
                      std::span<const telemetry::SnapshotRow> rows,
                      std::span<const workloads::RoundRecord> rounds);

struct TreeParams {
  int max_depth = 12;
  int min_leaf = 2;
  double feature_frac = 1.0;  // candidate-feature fraction per split
  bool extra_random = false;  // uniform random thresholds (extra-trees)
};

struct TreeNode {
  int feature = -1;  // -1 = leaf
  double threshold = 0.0;
  double value = 0.0;  // leaf mean
  int left = -1, right = -1;
  double gain = 0.0;  // total squared-error reduction of this split
};

struct TreeModel {
  std::vector<TreeNode> nodes;  // nodes[0] is the root
  double predict(std::span<const double> row) const;
};

// CART regression: greedy best split by maximum variance reduction,
// midpoint thresholds, ties broken by lowest feature index then lowest
// threshold. Deterministic when feature_frac == 1 and !extra_random.
TreeModel train_tree(const DesignMatrix& d, const TreeParams& params,
                     std::uint64_t seed = 0,
                     std::span<const std::size_t> sample = {});

struct ForestParams {
  int n_trees = 100;
  bool bootstrap = true;
  TreeParams tree;
  std::uint64_t seed = 0;
};

struct ForestModel {
  std::vector<TreeModel> trees;
  std::vector<std::string> feature_names;
  double predict(std::span<const double> row) const;  // mean over trees
  // Split-gain totals per feature, normalized to sum to 1. Throws if the
  // model has no trees.
  std::vector<double> feature_importance() const;
};

// Per-tree seeds derive from params.seed before dispatch, so results do
// not depend on training order. Throws on n_trees < 1 or feature_frac
// outside (0,1].
ForestModel train_forest(const DesignMatrix& d, const ForestParams& params);

struct MetricsReport {
  double mae = 0, mse = 0, rmse = 0, r2 = 0, rmsle = 0, mape = 0;
};

// Throws if any y <= -1 (rmsle) or y == 0 (mape).
MetricsReport evaluate(std::span<const double> y_true,
                       std::span<const double> y_pred);

// Fold assignments: result[f] holds the row indices of fold f. Each
// stratum's rows are spread across folds as evenly as possible;
// deterministic for a fixed seed. If any stratum has fewer rows than k a
// warning is appended to *warning (when non-null).
std::vector<std::vector<std::size_t>> kfold_stratified(
    std::span<const std::string> strata, int k, std::uint64_t seed,
    std::string* warning = nullptr);

enum class ModelKind { decision_tree, random_forest, extra_trees };
const char* to_string(ModelKind k);

struct CvResult {
  ModelKind kind = ModelKind::decision_tree;
  std::vector<MetricsReport> folds;
  MetricsReport mean;
  std::vector<double> importance;  // from a fit on the full dataset
};

ForestParams default_params(ModelKind kind, std::size_t n_features,
                            std::uint64_t seed);

CvResult cross_validate(const DesignMatrix& d, ModelKind kind, int k,
                        std::uint64_t seed, std::string* warning = nullptr);

// Fixed-width text table, one row per model, six metric columns.
std::string render_metrics_table(const std::string& target,
                                 std::span<const CvResult> results);
void write_metrics_csv(const std::string& target,
                       std::span<const CvResult> results,
                       const std::string& path);
void write_importance_csv(const DesignMatrix& d,
                          std::span<const CvResult> results,
                          const std::string& path);

}  // namespace cpsbench::mlcore
