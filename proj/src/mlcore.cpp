#include "cpsbench/mlcore.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <map>
#include <numeric>
#include <random>
#include <sstream>
#include <stdexcept>
#include <thread>

namespace cpsbench::mlcore {

Task task_from_string(const std::string& s) {
  if (s == "power_state") return Task::power_state;
  if (s == "round_energy") return Task::round_energy;
  if (s == "round_duration") return Task::round_duration;
  throw std::invalid_argument(
      "unknown task '" + s +
      "'; available: power_state, round_energy, round_duration");
}

const char* to_string(Task t) {
  switch (t) {
    case Task::power_state: return "power_state";
    case Task::round_energy: return "round_energy";
    case Task::round_duration: return "round_duration";
  }
  return "?";
}

const char* to_string(ModelKind k) {
  switch (k) {
    case ModelKind::decision_tree: return "decision_tree";
    case ModelKind::random_forest: return "random_forest";
    case ModelKind::extra_trees: return "extra_trees";
  }
  return "?";
}

namespace {

std::string config_label(const ExperimentParams& p) {
  std::ostringstream os;
  os << p.velocity_pct << '/' << p.acceleration_pct << '/' << p.belt_speed_mms
     << '/' << p.payload_g;
  return os.str();
}

// splitmix64: stable per-tree / per-stratum seed derivation.
std::uint64_t mix(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

}  // namespace

DesignMatrix assemble(Task task,
                      std::span<const telemetry::SnapshotRow> rows,
                      std::span<const workloads::RoundRecord> rounds) {
  DesignMatrix d;
  if (task == Task::power_state) {
    if (rows.empty())
      throw std::invalid_argument("power_state: no snapshot rows");
    d.feature_names = {"t_s",          "j1_deg",         "j2_deg",
                       "j3_deg",       "j4_deg",         "velocity_pct",
                       "acceleration_pct", "arm_moving", "suction_on",
                       "belt_on",      "belt_speed_mms", "camera_detect",
                       "payload_g",    "plug_arm_w",     "plug_belt_w",
                       "plug_suction_w"};
    d.target_name = "system_power_w";
    d.x.reserve(rows.size());
    for (const auto& r : rows) {
      d.x.push_back({static_cast<double>(r.t_s), r.j1_deg, r.j2_deg, r.j3_deg,
                     r.j4_deg, static_cast<double>(r.velocity_pct),
                     static_cast<double>(r.acceleration_pct),
                     r.arm_moving ? 1.0 : 0.0, r.suction_on ? 1.0 : 0.0,
                     r.belt_on ? 1.0 : 0.0, r.belt_speed_mms,
                     r.camera_detect ? 1.0 : 0.0, r.payload_g, r.plug_arm_w,
                     r.plug_belt_w, r.plug_suction_w});
      d.y.push_back(r.system_power_w);
      d.strata.push_back(r.workload_id);
    }
    return d;
  }
  if (rounds.empty())
    throw std::invalid_argument(std::string(to_string(task)) + ": no rounds");
  d.feature_names = {"velocity_pct", "acceleration_pct", "belt_speed",
                     "payload_g"};
  d.target_name = task == Task::round_energy ? "energy_j" : "duration_s";
  d.x.reserve(rounds.size());
  for (const auto& r : rounds) {
    d.x.push_back({static_cast<double>(r.params.velocity_pct),
                   static_cast<double>(r.params.acceleration_pct),
                   r.params.belt_speed_mms, r.params.payload_g});
    d.y.push_back(task == Task::round_energy ? r.energy_j : r.duration_s);
    d.strata.push_back(config_label(r.params));
  }
  return d;
}

double TreeModel::predict(std::span<const double> row) const {
  int i = 0;
  while (nodes[i].feature >= 0)
    i = row[nodes[i].feature] <= nodes[i].threshold ? nodes[i].left
                                                    : nodes[i].right;
  return nodes[i].value;
}

namespace {

// Row indices sorted by each feature; computed once per training set and
// shared by every tree grown on it.
using SortedOrders = std::vector<std::vector<std::uint32_t>>;

SortedOrders presort(const DesignMatrix& d) {
  SortedOrders orders(d.cols());
  for (std::size_t f = 0; f < d.cols(); ++f) {
    auto& ord = orders[f];
    ord.resize(d.rows());
    std::iota(ord.begin(), ord.end(), std::uint32_t{0});
    std::sort(ord.begin(), ord.end(), [&](std::uint32_t a, std::uint32_t b) {
      return d.x[a][f] != d.x[b][f] ? d.x[a][f] < d.x[b][f] : a < b;
    });
  }
  return orders;
}

// Bootstrap samples are carried as integer row weights so each node keeps
// one presorted index list per feature instead of re-sorting at every split.
struct TreeBuilder {
  const DesignMatrix& d;
  const TreeParams& params;
  std::mt19937_64 rng;
  std::vector<double> w;  // per-row multiplicity; 0 = outside this sample
  std::vector<TreeNode> nodes;

  // Candidate features for one split, ascending so ties resolve to the
  // lowest feature index.
  std::vector<int> pick_features() {
    int f = static_cast<int>(d.cols());
    int m = f;
    if (params.feature_frac < 1.0)
      m = std::max(1, static_cast<int>(std::lround(params.feature_frac * f)));
    std::vector<int> all(f);
    std::iota(all.begin(), all.end(), 0);
    if (m >= f) return all;
    for (int i = 0; i < m; ++i) {
      std::uniform_int_distribution<int> pick(i, f - 1);
      std::swap(all[i], all[pick(rng)]);
    }
    all.resize(m);
    std::sort(all.begin(), all.end());
    return all;
  }

  int build(SortedOrders& lists, int depth) {
    double n = 0.0, sum = 0.0, sumsq = 0.0;
    for (std::uint32_t i : lists[0]) {
      n += w[i];
      sum += w[i] * d.y[i];
      sumsq += w[i] * d.y[i] * d.y[i];
    }
    const double mean = sum / n;
    const double sse = sumsq - sum * sum / n;
    const double min_leaf = static_cast<double>(params.min_leaf);

    int node_id = static_cast<int>(nodes.size());
    nodes.push_back(TreeNode{});
    nodes[node_id].value = mean;

    if (depth >= params.max_depth || n < 2.0 * min_leaf || sse <= 1e-12)
      return node_id;

    int best_f = -1;
    double best_thr = 0.0, best_score = sum * sum / n;  // score if unsplit
    for (int f : pick_features()) {
      const auto& ord = lists[f];
      auto xv = [&](std::size_t k) { return d.x[ord[k]][f]; };
      if (params.extra_random) {
        double lo = xv(0), hi = xv(ord.size() - 1);
        if (lo == hi) continue;
        std::uniform_real_distribution<double> u(lo, hi);
        double thr = u(rng);
        double ls = 0.0, ln = 0.0;
        for (std::uint32_t i : ord) {
          if (d.x[i][f] > thr) break;
          ls += w[i] * d.y[i];
          ln += w[i];
        }
        if (ln < min_leaf || n - ln < min_leaf) continue;
        double rs = sum - ls, rn = n - ln;
        double score = ls * ls / ln + rs * rs / rn;
        if (score > best_score) {
          best_score = score;
          best_f = f;
          best_thr = thr;
        }
        continue;
      }
      double ls = 0.0, ln = 0.0;
      for (std::size_t k = 0; k + 1 < ord.size(); ++k) {
        std::uint32_t i = ord[k];
        ls += w[i] * d.y[i];
        ln += w[i];
        if (xv(k) == xv(k + 1)) continue;
        if (ln < min_leaf || n - ln < min_leaf) continue;
        double rs = sum - ls, rn = n - ln;
        double score = ls * ls / ln + rs * rs / rn;
        if (score > best_score) {
          best_score = score;
          best_f = f;
          best_thr = (xv(k) + xv(k + 1)) / 2.0;
        }
      }
    }
    if (best_f < 0) return node_id;

    SortedOrders left(lists.size()), right(lists.size());
    for (std::size_t f = 0; f < lists.size(); ++f) {
      for (std::uint32_t i : lists[f])
        (d.x[i][best_f] <= best_thr ? left[f] : right[f]).push_back(i);
      lists[f].clear();
      lists[f].shrink_to_fit();
    }
    nodes[node_id].feature = best_f;
    nodes[node_id].threshold = best_thr;
    nodes[node_id].gain = best_score - sum * sum / n;
    int l = build(left, depth + 1);
    left.clear();
    int r = build(right, depth + 1);
    nodes[node_id].left = l;
    nodes[node_id].right = r;
    return node_id;
  }
};

TreeModel train_tree_presorted(const DesignMatrix& d, const TreeParams& params,
                               std::uint64_t seed, const SortedOrders& orders,
                               std::vector<double> weights) {
  TreeBuilder b{d, params, std::mt19937_64(seed), std::move(weights), {}};
  SortedOrders root(d.cols());
  bool all_in =
      std::all_of(b.w.begin(), b.w.end(), [](double v) { return v > 0.0; });
  for (std::size_t f = 0; f < d.cols(); ++f) {
    if (all_in) {
      root[f] = orders[f];
      continue;
    }
    root[f].reserve(d.rows());
    for (std::uint32_t i : orders[f])
      if (b.w[i] > 0.0) root[f].push_back(i);
  }
  b.build(root, 0);
  return TreeModel{std::move(b.nodes)};
}

void check_tree_params(const TreeParams& params) {
  if (params.max_depth < 0)
    throw std::invalid_argument("train_tree: max_depth must be >= 0");
  if (params.min_leaf < 1)
    throw std::invalid_argument("train_tree: min_leaf must be >= 1");
}

}  // namespace

TreeModel train_tree(const DesignMatrix& d, const TreeParams& params,
                     std::uint64_t seed, std::span<const std::size_t> sample) {
  if (d.rows() == 0) throw std::invalid_argument("train_tree: empty matrix");
  check_tree_params(params);
  std::vector<double> w(d.rows(), sample.empty() ? 1.0 : 0.0);
  for (std::size_t i : sample) {
    if (i >= d.rows())
      throw std::invalid_argument("train_tree: sample index out of range");
    w[i] += 1.0;
  }
  return train_tree_presorted(d, params, seed, presort(d), std::move(w));
}

double ForestModel::predict(std::span<const double> row) const {
  double s = 0.0;
  for (const auto& t : trees) s += t.predict(row);
  return s / static_cast<double>(trees.size());
}

std::vector<double> ForestModel::feature_importance() const {
  if (trees.empty())
    throw std::invalid_argument("feature_importance: untrained model");
  std::vector<double> imp(feature_names.size(), 0.0);
  for (const auto& t : trees)
    for (const auto& n : t.nodes)
      if (n.feature >= 0) imp[n.feature] += n.gain;
  double total = std::accumulate(imp.begin(), imp.end(), 0.0);
  if (total > 0.0)
    for (double& v : imp) v /= total;
  return imp;
}

ForestModel train_forest(const DesignMatrix& d, const ForestParams& params) {
  if (params.n_trees < 1)
    throw std::invalid_argument("train_forest: n_trees must be >= 1");
  if (params.tree.feature_frac <= 0.0 || params.tree.feature_frac > 1.0)
    throw std::invalid_argument("train_forest: feature_frac outside (0,1]");
  if (d.rows() == 0) throw std::invalid_argument("train_forest: empty matrix");
  check_tree_params(params.tree);

  // Seeds fixed up front so parallel scheduling cannot affect results.
  std::vector<std::uint64_t> seeds(params.n_trees);
  for (int i = 0; i < params.n_trees; ++i)
    seeds[i] = mix(params.seed + static_cast<std::uint64_t>(i) * 2 + 1);

  const SortedOrders orders = presort(d);
  auto fit_one = [&](int i) {
    std::vector<double> w(d.rows(), params.bootstrap ? 0.0 : 1.0);
    if (params.bootstrap) {
      std::mt19937_64 rng(mix(seeds[i]));
      std::uniform_int_distribution<std::size_t> pick(0, d.rows() - 1);
      for (std::size_t s = 0; s < d.rows(); ++s) w[pick(rng)] += 1.0;
    }
    return train_tree_presorted(d, params.tree, seeds[i], orders,
                                std::move(w));
  };

  ForestModel m;
  m.feature_names = d.feature_names;
  m.trees.resize(params.n_trees);
  unsigned workers = std::max(1u, std::thread::hardware_concurrency());
  if (params.n_trees == 1 || workers == 1) {
    for (int i = 0; i < params.n_trees; ++i) m.trees[i] = fit_one(i);
  } else {
    std::atomic<int> next{0};
    auto worker = [&] {
      for (int i = next.fetch_add(1); i < params.n_trees;
           i = next.fetch_add(1))
        m.trees[i] = fit_one(i);
    };
    std::vector<std::thread> pool;
    for (unsigned w = 0; w + 1 < workers; ++w) pool.emplace_back(worker);
    worker();
    for (auto& t : pool) t.join();
  }
  return m;
}

MetricsReport evaluate(std::span<const double> y_true,
                       std::span<const double> y_pred) {
  if (y_true.empty() || y_true.size() != y_pred.size())
    throw std::invalid_argument("evaluate: size mismatch or empty");
  const double n = static_cast<double>(y_true.size());
  double mean_y = 0.0;
  for (double y : y_true) mean_y += y;
  mean_y /= n;
  MetricsReport m;
  double ss_res = 0.0, ss_tot = 0.0, sle = 0.0;
  for (std::size_t i = 0; i < y_true.size(); ++i) {
    double y = y_true[i], p = y_pred[i], e = p - y;
    if (y <= -1.0 || p <= -1.0)
      throw std::domain_error("evaluate: rmsle undefined for values <= -1");
    if (y == 0.0)
      throw std::domain_error("evaluate: mape undefined for zero target");
    m.mae += std::abs(e);
    m.mse += e * e;
    ss_res += e * e;
    ss_tot += (y - mean_y) * (y - mean_y);
    double l = std::log1p(p) - std::log1p(y);
    sle += l * l;
    m.mape += std::abs(e / y);
  }
  m.mae /= n;
  m.mse /= n;
  m.rmse = std::sqrt(m.mse);
  m.rmsle = std::sqrt(sle / n);
  m.mape /= n;
  m.r2 = ss_tot > 0.0 ? 1.0 - ss_res / ss_tot : (ss_res == 0.0 ? 1.0 : 0.0);
  return m;
}

std::vector<std::vector<std::size_t>> kfold_stratified(
    std::span<const std::string> strata, int k, std::uint64_t seed,
    std::string* warning) {
  if (k < 2) throw std::invalid_argument("kfold: k must be >= 2");
  if (strata.empty()) throw std::invalid_argument("kfold: no rows");
  std::map<std::string, std::vector<std::size_t>> groups;
  for (std::size_t i = 0; i < strata.size(); ++i)
    groups[strata[i]].push_back(i);

  std::vector<std::vector<std::size_t>> folds(k);
  std::size_t small_strata = 0;
  for (auto& [label, idx] : groups) {
    if (idx.size() < static_cast<std::size_t>(k)) ++small_strata;
    std::mt19937_64 rng(mix(seed ^ fnv1a(label)));
    std::shuffle(idx.begin(), idx.end(), rng);
    std::size_t offset = rng() % static_cast<std::size_t>(k);
    for (std::size_t i = 0; i < idx.size(); ++i)
      folds[(i + offset) % k].push_back(idx[i]);
  }
  if (small_strata > 0 && warning)
    *warning += "warning: " + std::to_string(small_strata) + " of " +
                std::to_string(groups.size()) + " strata have fewer than k=" +
                std::to_string(k) + " rows; their rows were still assigned\n";
  for (auto& f : folds) std::sort(f.begin(), f.end());
  return folds;
}

ForestParams default_params(ModelKind kind, std::size_t n_features,
                            std::uint64_t seed) {
  ForestParams p;
  p.seed = seed;
  p.tree.max_depth = 12;
  p.tree.min_leaf = 2;
  p.tree.feature_frac = n_features > 8 ? 0.6 : 1.0;
  switch (kind) {
    case ModelKind::decision_tree:
      p.n_trees = 1;
      p.bootstrap = false;
      p.tree.feature_frac = 1.0;
      break;
    case ModelKind::random_forest:
      p.n_trees = 100;
      p.bootstrap = true;
      break;
    case ModelKind::extra_trees:
      p.n_trees = 100;
      p.bootstrap = false;
      p.tree.extra_random = true;
      break;
  }
  return p;
}

CvResult cross_validate(const DesignMatrix& d, ModelKind kind, int k,
                        std::uint64_t seed, std::string* warning) {
  auto folds = kfold_stratified(d.strata, k, seed, warning);
  ForestParams params = default_params(kind, d.cols(), seed);

  CvResult cv;
  cv.kind = kind;
  std::vector<bool> in_test(d.rows());
  for (int f = 0; f < k; ++f) {
    if (folds[f].empty()) continue;
    std::fill(in_test.begin(), in_test.end(), false);
    for (std::size_t i : folds[f]) in_test[i] = true;
    DesignMatrix train;
    train.feature_names = d.feature_names;
    train.target_name = d.target_name;
    for (std::size_t i = 0; i < d.rows(); ++i) {
      if (in_test[i]) continue;
      train.x.push_back(d.x[i]);
      train.y.push_back(d.y[i]);
      train.strata.push_back(d.strata[i]);
    }
    ForestParams fp = params;
    fp.seed = mix(seed + static_cast<std::uint64_t>(f) * 2 + 1);
    ForestModel model = train_forest(train, fp);
    std::vector<double> y_true, y_pred;
    for (std::size_t i : folds[f]) {
      y_true.push_back(d.y[i]);
      y_pred.push_back(model.predict(d.x[i]));
    }
    cv.folds.push_back(evaluate(y_true, y_pred));
  }
  if (cv.folds.empty())
    throw std::runtime_error("cross_validate: all folds empty");
  for (const auto& m : cv.folds) {
    cv.mean.mae += m.mae;
    cv.mean.mse += m.mse;
    cv.mean.rmse += m.rmse;
    cv.mean.r2 += m.r2;
    cv.mean.rmsle += m.rmsle;
    cv.mean.mape += m.mape;
  }
  double nf = static_cast<double>(cv.folds.size());
  cv.mean.mae /= nf;
  cv.mean.mse /= nf;
  cv.mean.rmse /= nf;
  cv.mean.r2 /= nf;
  cv.mean.rmsle /= nf;
  cv.mean.mape /= nf;

  cv.importance = train_forest(d, params).feature_importance();
  return cv;
}

namespace {

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4f", v);
  return buf;
}

}  // namespace

std::string render_metrics_table(const std::string& target,
                                 std::span<const CvResult> results) {
  std::ostringstream os;
  os << "Target: " << target << "\n";
  char line[160];
  std::snprintf(line, sizeof line, "%-15s %10s %10s %10s %10s %10s %10s\n",
                "Model", "MAE", "MSE", "RMSE", "R2", "RMSLE", "MAPE");
  os << line;
  for (const auto& r : results) {
    const auto& m = r.mean;
    std::snprintf(line, sizeof line,
                  "%-15s %10s %10s %10s %10s %10s %10s\n", to_string(r.kind),
                  fmt(m.mae).c_str(), fmt(m.mse).c_str(), fmt(m.rmse).c_str(),
                  fmt(m.r2).c_str(), fmt(m.rmsle).c_str(),
                  fmt(m.mape).c_str());
    os << line;
  }
  return os.str();
}

void write_metrics_csv(const std::string& target,
                       std::span<const CvResult> results,
                       const std::string& path) {
  telemetry::CsvTable t;
  t.header = {"target", "model", "fold", "mae", "mse", "rmse",
              "r2",     "rmsle", "mape"};
  auto push = [&](const CvResult& r, const std::string& fold,
                  const MetricsReport& m) {
    t.rows.push_back({target, to_string(r.kind), fold, fmt(m.mae), fmt(m.mse),
                      fmt(m.rmse), fmt(m.r2), fmt(m.rmsle), fmt(m.mape)});
  };
  for (const auto& r : results) {
    for (std::size_t f = 0; f < r.folds.size(); ++f)
      push(r, std::to_string(f + 1), r.folds[f]);
    push(r, "mean", r.mean);
  }
  telemetry::write_table(t, path);
}

void write_importance_csv(const DesignMatrix& d,
                          std::span<const CvResult> results,
                          const std::string& path) {
  telemetry::CsvTable t;
  t.header = {"model", "feature", "importance"};
  for (const auto& r : results)
    for (std::size_t f = 0; f < r.importance.size(); ++f)
      t.rows.push_back(
          {to_string(r.kind), d.feature_names[f], fmt(r.importance[f])});
  telemetry::write_table(t, path);
}

}  // namespace cpsbench::mlcore
