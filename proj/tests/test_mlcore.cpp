#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <algorithm>
#include <cmath>
#include <filesystem>
#include <memory>
#include <random>
#include <set>

#include "cpsbench/mlcore.hpp"
#include "doctest.h"

using namespace cpsbench;
using namespace cpsbench::mlcore;

namespace {

DesignMatrix make_matrix(std::vector<std::vector<double>> x,
                         std::vector<double> y) {
  DesignMatrix d;
  d.x = std::move(x);
  d.y = std::move(y);
  for (std::size_t f = 0; f < d.x[0].size(); ++f)
    d.feature_names.push_back("f" + std::to_string(f));
  d.strata.assign(d.y.size(), "s");
  d.target_name = "y";
  return d;
}

// Reference CART, written independently: at each node, try every feature
// and every midpoint between adjacent distinct values by brute force,
// recomputing both side sums from scratch. Same gain formula, same
// first-found tie-break (lowest feature, then lowest threshold).
struct OracleNode {
  int feature = -1;
  double threshold = 0.0, value = 0.0;
  std::unique_ptr<OracleNode> left, right;
};

std::unique_ptr<OracleNode> oracle_build(const DesignMatrix& d,
                                         const TreeParams& params,
                                         const std::vector<std::size_t>& idx,
                                         int depth) {
  auto node = std::make_unique<OracleNode>();
  double sum = 0.0, sumsq = 0.0;
  for (std::size_t i : idx) {
    sum += d.y[i];
    sumsq += d.y[i] * d.y[i];
  }
  double n = static_cast<double>(idx.size());
  node->value = sum / n;
  double sse = sumsq - sum * sum / n;
  if (depth >= params.max_depth ||
      idx.size() < 2 * static_cast<std::size_t>(params.min_leaf) ||
      sse <= 1e-12)
    return node;

  int best_f = -1;
  double best_thr = 0.0, best_score = sum * sum / n;
  for (std::size_t f = 0; f < d.cols(); ++f) {
    std::vector<double> vals;
    for (std::size_t i : idx) vals.push_back(d.x[i][f]);
    std::sort(vals.begin(), vals.end());
    vals.erase(std::unique(vals.begin(), vals.end()), vals.end());
    for (std::size_t v = 0; v + 1 < vals.size(); ++v) {
      double thr = (vals[v] + vals[v + 1]) / 2.0;
      double ls = 0.0, ln = 0.0;
      for (std::size_t i : idx)
        if (d.x[i][f] <= thr) {
          ls += d.y[i];
          ln += 1.0;
        }
      double rn = n - ln;
      if (ln < params.min_leaf || rn < params.min_leaf) continue;
      double rs = sum - ls;
      double score = ls * ls / ln + rs * rs / rn;
      if (score > best_score) {
        best_score = score;
        best_f = static_cast<int>(f);
        best_thr = thr;
      }
    }
  }
  if (best_f < 0) return node;
  std::vector<std::size_t> left, right;
  for (std::size_t i : idx)
    (d.x[i][best_f] <= best_thr ? left : right).push_back(i);
  node->feature = best_f;
  node->threshold = best_thr;
  node->left = oracle_build(d, params, left, depth + 1);
  node->right = oracle_build(d, params, right, depth + 1);
  return node;
}

bool trees_match(const TreeModel& impl, int node, const OracleNode& ref) {
  const TreeNode& a = impl.nodes[node];
  if ((a.feature < 0) != (ref.feature < 0)) return false;
  if (std::abs(a.value - ref.value) > 1e-9) return false;
  if (a.feature < 0) return true;
  if (a.feature != ref.feature) return false;
  if (std::abs(a.threshold - ref.threshold) > 1e-9) return false;
  return trees_match(impl, a.left, *ref.left) &&
         trees_match(impl, a.right, *ref.right);
}

MetricsReport ev(std::vector<double> y, std::vector<double> p) {
  return evaluate(y, p);
}

}  // namespace

TEST_CASE("tree matches the exhaustive-split reference on random data") {
  std::mt19937_64 rng(31);
  for (int trial = 0; trial < 100; ++trial) {
    std::size_t n = 5 + rng() % 46;           // 5..50 rows
    std::size_t f = 1 + rng() % 4;            // 1..4 features
    std::vector<std::vector<double>> x(n, std::vector<double>(f));
    std::vector<double> y(n);
    std::uniform_int_distribution<int> grid(0, 9);  // repeats exercise ties
    // Integer targets keep partial sums exact, so mathematically tied
    // splits are tied bit-for-bit and both sides apply the same tie-break.
    std::uniform_int_distribution<int> target(-20, 20);
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < f; ++j) x[i][j] = grid(rng);
      y[i] = target(rng);
    }
    auto d = make_matrix(std::move(x), std::move(y));
    TreeParams params;
    params.max_depth = 3;
    params.min_leaf = 1 + static_cast<int>(rng() % 3);
    auto impl = train_tree(d, params);
    std::vector<std::size_t> idx(n);
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    auto ref = oracle_build(d, params, idx, 0);
    CHECK(trees_match(impl, 0, *ref));
  }
}

TEST_CASE("two separable points split at their midpoint") {
  auto d = make_matrix({{0.0}, {1.0}}, {0.0, 10.0});
  TreeParams p;
  p.min_leaf = 1;
  auto t = train_tree(d, p);
  REQUIRE(t.nodes.size() == 3);
  CHECK(t.nodes[0].feature == 0);
  CHECK(t.nodes[0].threshold == doctest::Approx(0.5));
  CHECK(t.predict(std::vector<double>{0.2}) == doctest::Approx(0.0));
  CHECK(t.predict(std::vector<double>{0.8}) == doctest::Approx(10.0));
  CHECK(t.nodes[0].gain == doctest::Approx(50.0));  // sse drops 50 -> 0
}

TEST_CASE("constant target yields a single leaf") {
  auto d = make_matrix({{0.0}, {1.0}, {2.0}}, {4.0, 4.0, 4.0});
  TreeParams p;
  p.min_leaf = 1;
  auto t = train_tree(d, p);
  CHECK(t.nodes.size() == 1);
  CHECK(t.nodes[0].feature == -1);
  CHECK(t.nodes[0].value == doctest::Approx(4.0));
}

TEST_CASE("min_leaf keeps both sides populated") {
  std::mt19937_64 rng(5);
  std::vector<std::vector<double>> x;
  std::vector<double> y;
  for (int i = 0; i < 40; ++i) {
    x.push_back({static_cast<double>(i % 7)});
    y.push_back(static_cast<double>(rng() % 100));
  }
  auto d = make_matrix(std::move(x), std::move(y));
  TreeParams p;
  p.min_leaf = 5;
  auto t = train_tree(d, p);
  // Route every training row and count rows per leaf.
  std::map<int, int> leaf_count;
  for (const auto& row : d.x) {
    int i = 0;
    while (t.nodes[i].feature >= 0)
      i = row[t.nodes[i].feature] <= t.nodes[i].threshold ? t.nodes[i].left
                                                          : t.nodes[i].right;
    ++leaf_count[i];
  }
  for (const auto& [leaf, cnt] : leaf_count) CHECK(cnt >= 5);
}

TEST_CASE("tree parameter validation") {
  auto d = make_matrix({{0.0}}, {1.0});
  TreeParams p;
  p.max_depth = -1;
  CHECK_THROWS_AS(train_tree(d, p), std::invalid_argument);
  p = TreeParams{};
  p.min_leaf = 0;
  CHECK_THROWS_AS(train_tree(d, p), std::invalid_argument);
  CHECK_THROWS_AS(train_tree(DesignMatrix{}, TreeParams{}),
                  std::invalid_argument);
  CHECK_THROWS_AS(
      train_tree(d, TreeParams{}, 0, std::vector<std::size_t>{5}),
      std::invalid_argument);  // sample index out of range
}

TEST_CASE("a one-tree unbagged forest equals the plain tree") {
  std::mt19937_64 rng(11);
  std::vector<std::vector<double>> x;
  std::vector<double> y;
  for (int i = 0; i < 60; ++i) {
    x.push_back({double(rng() % 10), double(rng() % 10)});
    y.push_back(x.back()[0] * 3.0 + double(rng() % 5));
  }
  auto d = make_matrix(std::move(x), std::move(y));
  ForestParams fp;
  fp.n_trees = 1;
  fp.bootstrap = false;
  fp.seed = 42;
  auto forest = train_forest(d, fp);
  auto tree = train_tree(d, fp.tree, 0);
  REQUIRE(forest.trees.size() == 1);
  CHECK(forest.trees[0].nodes.size() == tree.nodes.size());
  for (const auto& row : d.x)
    CHECK(forest.predict(row) == doctest::Approx(tree.predict(row)));
}

TEST_CASE("forests are deterministic in the seed") {
  std::mt19937_64 rng(13);
  std::vector<std::vector<double>> x;
  std::vector<double> y;
  for (int i = 0; i < 80; ++i) {
    x.push_back({double(rng() % 20), double(rng() % 20)});
    y.push_back(x.back()[0] - x.back()[1] + double(rng() % 3));
  }
  auto d = make_matrix(std::move(x), std::move(y));
  ForestParams fp;
  fp.n_trees = 10;
  fp.seed = 7;
  auto a = train_forest(d, fp);
  auto b = train_forest(d, fp);
  fp.seed = 8;
  auto c = train_forest(d, fp);
  bool same = true, diff = false;
  for (const auto& row : d.x) {
    same = same && a.predict(row) == b.predict(row);
    diff = diff || a.predict(row) != c.predict(row);
  }
  CHECK(same);
  CHECK(diff);
}

TEST_CASE("bagging beats a deep single tree on noisy data") {
  std::mt19937_64 rng(19);
  std::normal_distribution<double> noise(0.0, 1.0);
  std::uniform_real_distribution<double> u(0.0, 10.0);
  auto gen = [&](std::size_t n) {
    std::vector<std::vector<double>> x;
    std::vector<double> y;
    for (std::size_t i = 0; i < n; ++i) {
      x.push_back({u(rng), u(rng), u(rng), u(rng)});
      y.push_back(x.back()[0] + 2.0 * x.back()[1] + noise(rng));
    }
    return make_matrix(std::move(x), std::move(y));
  };
  auto train = gen(400), test = gen(200);
  ForestParams rf;
  rf.seed = 3;
  auto forest = train_forest(train, rf);
  auto tree = train_tree(train, rf.tree);
  double mse_forest = 0.0, mse_tree = 0.0;
  for (std::size_t i = 0; i < test.rows(); ++i) {
    double ef = forest.predict(test.x[i]) - test.y[i];
    double et = tree.predict(test.x[i]) - test.y[i];
    mse_forest += ef * ef;
    mse_tree += et * et;
  }
  CHECK(mse_forest < mse_tree);
}

TEST_CASE("forest parameter validation") {
  auto d = make_matrix({{0.0}, {1.0}}, {0.0, 1.0});
  ForestParams fp;
  fp.n_trees = 0;
  CHECK_THROWS_AS(train_forest(d, fp), std::invalid_argument);
  fp = ForestParams{};
  fp.tree.feature_frac = 0.0;
  CHECK_THROWS_AS(train_forest(d, fp), std::invalid_argument);
  fp.tree.feature_frac = 1.5;
  CHECK_THROWS_AS(train_forest(d, fp), std::invalid_argument);
  CHECK_THROWS_AS(train_forest(DesignMatrix{}, ForestParams{}),
                  std::invalid_argument);
}

TEST_CASE("metric values on a worked example") {
  std::vector<double> y{10.0, 20.0}, p{11.0, 18.0};
  auto m = evaluate(y, p);
  CHECK(m.mae == doctest::Approx(1.5));
  CHECK(m.mse == doctest::Approx(2.5));
  CHECK(m.rmse == doctest::Approx(std::sqrt(2.5)));
  CHECK(m.mape == doctest::Approx(0.1));
  double l1 = std::log1p(11.0) - std::log1p(10.0);
  double l2 = std::log1p(18.0) - std::log1p(20.0);
  CHECK(m.rmsle == doctest::Approx(std::sqrt((l1 * l1 + l2 * l2) / 2.0)));
  CHECK(m.r2 == doctest::Approx(1.0 - 5.0 / 50.0));
}

TEST_CASE("metric identities") {
  std::mt19937_64 rng(29);
  std::uniform_real_distribution<double> u(1.0, 100.0);
  std::vector<double> y(50), p(50);
  for (std::size_t i = 0; i < y.size(); ++i) {
    y[i] = u(rng);
    p[i] = u(rng);
  }
  auto m = evaluate(y, p);
  CHECK(std::abs(m.rmse * m.rmse - m.mse) < 1e-9);
  auto perfect = evaluate(y, y);
  CHECK(std::abs(perfect.r2 - 1.0) < 1e-9);
  CHECK(perfect.mae < 1e-12);
  CHECK(perfect.rmsle < 1e-12);
  // Predicting the mean everywhere gives r2 = 0.
  double mean = 0.0;
  for (double v : y) mean += v;
  mean /= static_cast<double>(y.size());
  std::vector<double> mp(y.size(), mean);
  CHECK(std::abs(evaluate(y, mp).r2) < 1e-9);
}

TEST_CASE("metric domain errors") {
  CHECK_THROWS_AS(ev({1.0}, {1.0, 2.0}), std::invalid_argument);
  CHECK_THROWS_AS(ev({}, {}), std::invalid_argument);
  CHECK_THROWS_AS(ev({0.0}, {1.0}), std::domain_error);   // mape
  CHECK_THROWS_AS(ev({-2.0}, {1.0}), std::domain_error);  // rmsle
  CHECK_THROWS_AS(ev({1.0}, {-2.0}), std::domain_error);
  // Constant target with an exact prediction: r2 defined as 1.
  CHECK(ev({5.0, 5.0}, {5.0, 5.0}).r2 == doctest::Approx(1.0));
  CHECK(ev({5.0, 5.0}, {4.0, 6.0}).r2 == doctest::Approx(0.0));
}

TEST_CASE("stratified folds spread each stratum evenly") {
  std::vector<std::string> strata;
  for (int i = 0; i < 5; ++i) strata.push_back("a");
  for (int i = 0; i < 5; ++i) strata.push_back("b");
  auto folds = kfold_stratified(strata, 5, 1);
  REQUIRE(folds.size() == 5);
  std::set<std::size_t> seen;
  for (const auto& f : folds) {
    REQUIRE(f.size() == 2);
    int a = 0, b = 0;
    for (std::size_t i : f) {
      (i < 5 ? a : b)++;
      CHECK(seen.insert(i).second);  // disjoint
    }
    CHECK(a == 1);  // one row of each stratum per fold
    CHECK(b == 1);
  }
  CHECK(seen.size() == 10);
}

TEST_CASE("fold assignment is deterministic and seed-sensitive") {
  std::vector<std::string> strata(40, "a");
  for (int i = 0; i < 40; ++i) strata.push_back("b" + std::to_string(i % 4));
  auto f1 = kfold_stratified(strata, 5, 9);
  auto f2 = kfold_stratified(strata, 5, 9);
  auto f3 = kfold_stratified(strata, 5, 10);
  CHECK(f1 == f2);
  CHECK(f1 != f3);
}

TEST_CASE("small strata produce one aggregated warning") {
  std::vector<std::string> strata{"a", "a", "b", "c", "c", "c", "c", "c"};
  std::string warning;
  auto folds = kfold_stratified(strata, 5, 1, &warning);
  std::size_t assigned = 0;
  for (const auto& f : folds) assigned += f.size();
  CHECK(assigned == strata.size());
  CHECK(warning.find("2 of 3") != std::string::npos);
  CHECK(std::count(warning.begin(), warning.end(), '\n') == 1);
  CHECK_THROWS_AS(kfold_stratified(strata, 1, 1), std::invalid_argument);
  CHECK_THROWS_AS(kfold_stratified({}, 5, 1), std::invalid_argument);
}

TEST_CASE("importance concentrates on the only informative feature") {
  std::mt19937_64 rng(37);
  std::vector<std::vector<double>> x;
  std::vector<double> y;
  for (int i = 0; i < 200; ++i) {
    x.push_back({double(rng() % 50), double(rng() % 50)});
    y.push_back(x.back()[0] * 2.0);  // feature 1 is pure noise input
  }
  auto d = make_matrix(std::move(x), std::move(y));
  ForestParams fp;
  fp.n_trees = 20;
  fp.seed = 2;
  auto forest = train_forest(d, fp);
  auto imp = forest.feature_importance();
  REQUIRE(imp.size() == 2);
  CHECK(imp[0] > 0.99);
  CHECK(imp[1] < 0.01);
  CHECK(std::abs(imp[0] + imp[1] - 1.0) < 1e-9);
  CHECK_THROWS_AS(ForestModel{}.feature_importance(), std::invalid_argument);
}

TEST_CASE("design matrices have the documented shapes") {
  std::vector<telemetry::SnapshotRow> rows(120);
  for (int i = 0; i < 120; ++i) {
    rows[i].t_s = i + 1;
    rows[i].system_power_w = 16.0 + i * 0.01;
    rows[i].workload_id = i < 60 ? "t1" : "t2";
  }
  auto d = assemble(Task::power_state, rows, {});
  CHECK(d.rows() == 120);
  CHECK(d.cols() == 16);
  CHECK(d.target_name == "system_power_w");
  CHECK(d.strata[0] == "t1");
  CHECK(d.strata[119] == "t2");
  CHECK(d.y[0] == doctest::Approx(16.0));

  std::vector<workloads::RoundRecord> rounds(3);
  for (int i = 0; i < 3; ++i) {
    rounds[i].params.velocity_pct = 30 + i * 10;
    rounds[i].duration_s = 20.0 - i;
    rounds[i].energy_j = 400.0 - i * 10;
  }
  auto e = assemble(Task::round_energy, {}, rounds);
  CHECK(e.rows() == 3);
  CHECK(e.cols() == 4);
  CHECK(e.target_name == "energy_j");
  CHECK(e.y[2] == doctest::Approx(380.0));
  auto t = assemble(Task::round_duration, {}, rounds);
  CHECK(t.target_name == "duration_s");
  CHECK(t.y[0] == doctest::Approx(20.0));
  CHECK(t.strata[0] != t.strata[1]);  // distinct configurations

  CHECK_THROWS_WITH_AS(assemble(Task::power_state, {}, rounds),
                       doctest::Contains("power_state"),
                       std::invalid_argument);
  CHECK_THROWS_AS(assemble(Task::round_energy, rows, {}),
                  std::invalid_argument);
  CHECK_THROWS_AS(task_from_string("nope"), std::invalid_argument);
  CHECK(task_from_string("power_state") == Task::power_state);
}

TEST_CASE("default model parameters") {
  auto dt = default_params(ModelKind::decision_tree, 4, 1);
  CHECK(dt.n_trees == 1);
  CHECK_FALSE(dt.bootstrap);
  CHECK(dt.tree.feature_frac == 1.0);
  auto rf4 = default_params(ModelKind::random_forest, 4, 1);
  CHECK(rf4.n_trees == 100);
  CHECK(rf4.bootstrap);
  CHECK(rf4.tree.feature_frac == 1.0);
  auto rf16 = default_params(ModelKind::random_forest, 16, 1);
  CHECK(rf16.tree.feature_frac == doctest::Approx(0.6));
  auto et = default_params(ModelKind::extra_trees, 4, 1);
  CHECK(et.tree.extra_random);
  CHECK_FALSE(et.bootstrap);
}

TEST_CASE("cross-validation produces per-fold and mean metrics") {
  std::mt19937_64 rng(41);
  DesignMatrix d;
  d.feature_names = {"f0", "f1"};
  d.target_name = "y";
  for (int i = 0; i < 100; ++i) {
    double a = double(rng() % 10), b = double(rng() % 10);
    d.x.push_back({a, b});
    d.y.push_back(3.0 * a + b + 1.0);
    d.strata.push_back("g" + std::to_string(i % 5));
  }
  auto cv = cross_validate(d, ModelKind::random_forest, 5, 1);
  CHECK(cv.folds.size() == 5);
  CHECK(cv.kind == ModelKind::random_forest);
  double mean_mae = 0.0;
  for (const auto& f : cv.folds) mean_mae += f.mae;
  CHECK(cv.mean.mae == doctest::Approx(mean_mae / 5.0));
  REQUIRE(cv.importance.size() == 2);
  CHECK(cv.importance[0] > cv.importance[1]);  // f0 has 3x the weight
  double sum = cv.importance[0] + cv.importance[1];
  CHECK(std::abs(sum - 1.0) < 1e-9);
}

TEST_CASE("metrics render as a fixed-width table and csv") {
  CvResult r;
  r.kind = ModelKind::decision_tree;
  r.folds.resize(2);
  r.folds[0].mae = 1.0;
  r.folds[1].mae = 2.0;
  r.mean.mae = 1.5;
  auto text = render_metrics_table("energy_j", {&r, 1});
  CHECK(text.find("Target: energy_j") != std::string::npos);
  CHECK(text.find("decision_tree") != std::string::npos);
  CHECK(text.find("MAPE") != std::string::npos);

  auto dir = std::filesystem::temp_directory_path();
  auto mpath = (dir / "cps_metrics.csv").string();
  write_metrics_csv("energy_j", {&r, 1}, mpath);
  auto table = telemetry::read_table(mpath);
  CHECK(table.rows.size() == 3);  // 2 folds + mean
  CHECK(table.rows[2][2] == "mean");
  std::filesystem::remove(mpath);
}
