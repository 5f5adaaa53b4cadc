#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <vector>

#include "doctest.h"
#include "lbm/boosting.hpp"
#include "lbm/error.hpp"
#include "lbm/evalstats.hpp"
#include "lbm/matrix.hpp"
#include "lbm/rng.hpp"

using namespace lbm;

namespace {

Matrix random_matrix(size_t rows, size_t cols, uint64_t seed) {
  Rng rng(seed);
  Matrix m(rows, cols);
  for (size_t i = 0; i < m.size(); ++i) m.data()[i] = rng.uniform();
  return m;
}

double route(const GbmTree& tree, const Matrix& x, size_t row) {
  int id = 0;
  while (tree.nodes[static_cast<size_t>(id)].feature >= 0) {
    const GbmTreeNode& node = tree.nodes[static_cast<size_t>(id)];
    id = x(row, static_cast<size_t>(node.feature)) < node.threshold ? node.left
                                                                    : node.right;
  }
  return tree.nodes[static_cast<size_t>(id)].weight;
}

// exhaustive (feature, boundary) scan with the documented gain rule
struct OracleSplit {
  int feature = -1;
  double threshold = 0.0;
  double gain = 0.0;
};

OracleSplit oracle_split(const Matrix& x, const std::vector<double>& g, double lambda,
                         double min_child) {
  const size_t n = x.rows();
  double g_total = 0.0;
  for (double v : g) g_total += v;
  const double h_total = static_cast<double>(n);
  const double parent = g_total * g_total / (h_total + lambda);

  OracleSplit best;
  for (size_t f = 0; f < x.cols(); ++f) {
    std::vector<size_t> order(n);
    for (size_t i = 0; i < n; ++i) order[i] = i;
    std::stable_sort(order.begin(), order.end(),
                     [&](size_t a, size_t b) { return x(a, f) < x(b, f); });
    double g_left = 0.0;
    for (size_t p = 0; p + 1 < n; ++p) {
      g_left += g[order[p]];
      if (x(order[p], f) == x(order[p + 1], f)) continue;
      const double h_left = static_cast<double>(p + 1);
      const double h_right = h_total - h_left;
      if (h_left < min_child || h_right < min_child) continue;
      const double g_right = g_total - g_left;
      const double gain = 0.5 * (g_left * g_left / (h_left + lambda) +
                                 g_right * g_right / (h_right + lambda) - parent);
      if (gain > best.gain) {
        best.gain = gain;
        best.feature = static_cast<int>(f);
        best.threshold = 0.5 * (x(order[p], f) + x(order[p + 1], f));
      }
    }
  }
  return best;
}

}  // namespace

TEST_CASE("constant targets produce zero-weight stumps and exact predictions") {
  const Matrix x = random_matrix(16, 3, 41);
  const std::vector<double> y(16, 3.25);
  GbmConfig cfg;
  cfg.n_rounds = 5;
  const GbmModel model = gbm_fit(x, y, cfg);

  CHECK(model.base_score == 3.25);
  REQUIRE(model.trees.size() == 5);
  for (const GbmTree& tree : model.trees) {
    REQUIRE(tree.nodes.size() == 1);
    CHECK(tree.nodes[0].feature == -1);
    CHECK(tree.nodes[0].weight == 0.0);
  }
  for (double p : gbm_predict(model, x)) CHECK(p == 3.25);
}

TEST_CASE("unregularized stump recovers residual means") {
  const Matrix x = Matrix::from_rows({{0.0}, {0.1}, {0.9}, {1.0}});
  const std::vector<double> y = {0.0, 0.0, 1.0, 1.0};
  GbmConfig cfg;
  cfg.n_rounds = 1;
  cfg.max_depth = 1;
  cfg.learning_rate = 0.5;
  cfg.l2_leaf = 0.0;
  const GbmModel model = gbm_fit(x, y, cfg);

  CHECK(model.base_score == 0.5);
  REQUIRE(model.trees.size() == 1);
  const GbmTree& tree = model.trees[0];
  REQUIRE(tree.nodes.size() == 3);
  CHECK(tree.nodes[0].feature == 0);
  CHECK(tree.nodes[0].threshold == 0.5);  // midpoint of 0.1 and 0.9
  const int l = tree.nodes[0].left;
  const int r = tree.nodes[0].right;
  CHECK(tree.nodes[static_cast<size_t>(l)].weight == -0.5);  // mean residual
  CHECK(tree.nodes[static_cast<size_t>(r)].weight == 0.5);

  const std::vector<double> pred = gbm_predict(model, x);
  for (size_t i = 0; i < 4; ++i) CHECK(pred[i] == 0.5 + 0.5 * (y[i] - 0.5));

  const std::string dump = gbm_dump(model);
  CHECK(dump.find("node 0 split 0 0.5 1 2") != std::string::npos);
  CHECK(dump.find("leaf -0.5") != std::string::npos);
  CHECK(dump.find("leaf 0.5") != std::string::npos);
}

TEST_CASE("first split agrees with the exhaustive oracle") {
  for (uint64_t seed : {110u, 111u, 112u}) {
    const Matrix x = random_matrix(20, 5, seed);
    Rng rng(seed + 1000);
    std::vector<double> y(20);
    for (size_t i = 0; i < 20; ++i)
      y[i] = 2.0 * x(i, 1) - x(i, 3) + 0.1 * rng.normal();

    GbmConfig cfg;
    cfg.n_rounds = 1;
    const GbmModel model = gbm_fit(x, y, cfg);
    const GbmTreeNode& root = model.trees[0].nodes[0];

    std::vector<double> g(20);
    for (size_t i = 0; i < 20; ++i) g[i] = model.base_score - y[i];
    const OracleSplit expect = oracle_split(x, g, cfg.l2_leaf, cfg.min_child_weight);
    REQUIRE(expect.feature >= 0);
    CHECK(root.feature == expect.feature);
    CHECK(root.threshold == expect.threshold);
  }
}

TEST_CASE("every leaf weight equals -G/(H+lambda) over its routed rows") {
  const Matrix x = random_matrix(30, 4, 113);
  Rng rng(1130);
  std::vector<double> y(30);
  for (size_t i = 0; i < 30; ++i) y[i] = std::sin(6.0 * x(i, 0)) + 0.2 * x(i, 2);

  GbmConfig cfg;
  cfg.n_rounds = 1;
  cfg.max_depth = 2;
  const GbmModel model = gbm_fit(x, y, cfg);
  const GbmTree& tree = model.trees[0];

  std::vector<double> g(30);
  for (size_t i = 0; i < 30; ++i) g[i] = model.base_score - y[i];

  // gather rows per leaf in ascending row order, mirroring the builder
  std::vector<std::vector<size_t>> rows_at(tree.nodes.size());
  for (size_t i = 0; i < 30; ++i) {
    int id = 0;
    while (tree.nodes[static_cast<size_t>(id)].feature >= 0) {
      const GbmTreeNode& node = tree.nodes[static_cast<size_t>(id)];
      id = x(i, static_cast<size_t>(node.feature)) < node.threshold ? node.left
                                                                    : node.right;
    }
    rows_at[static_cast<size_t>(id)].push_back(i);
  }

  size_t leaves = 0;
  for (size_t id = 0; id < tree.nodes.size(); ++id) {
    if (tree.nodes[id].feature >= 0) continue;
    ++leaves;
    REQUIRE(!rows_at[id].empty());
    double g_sum = 0.0;
    for (size_t i : rows_at[id]) g_sum += g[i];
    const double expect = -g_sum / (static_cast<double>(rows_at[id].size()) + cfg.l2_leaf);
    CHECK(tree.nodes[id].weight == expect);
  }
  CHECK(leaves >= 2);
}

TEST_CASE("hand-built tree routes on strict less-than") {
  GbmModel model;
  model.base_score = 1.0;
  model.learning_rate = 0.5;
  GbmTree tree;
  tree.nodes.resize(3);
  tree.nodes[0].feature = 0;
  tree.nodes[0].threshold = 0.5;
  tree.nodes[0].left = 1;
  tree.nodes[0].right = 2;
  tree.nodes[1].weight = -1.0;
  tree.nodes[2].weight = 2.0;
  model.trees.push_back(tree);

  const Matrix x = Matrix::from_rows({{0.4}, {0.5}, {0.6}});
  const std::vector<double> pred = gbm_predict(model, x);
  CHECK(pred[0] == 0.5);  // 1 + 0.5*(-1)
  CHECK(pred[1] == 2.0);  // boundary goes right
  CHECK(pred[2] == 2.0);
}

TEST_CASE("deep unregularized boosting memorizes a small set") {
  const Matrix x = random_matrix(50, 3, 114);
  std::vector<double> y(50);
  for (size_t i = 0; i < 50; ++i)
    y[i] = std::cos(6.0 * x(i, 0)) * x(i, 1) + 0.5 * x(i, 2);

  GbmConfig cfg;
  cfg.n_rounds = 300;
  cfg.max_depth = 8;
  cfg.learning_rate = 0.3;
  cfg.l2_leaf = 0.0;
  const GbmModel model = gbm_fit(x, y, cfg);
  CHECK(r2(y, gbm_predict(model, x)) >= 0.99);
}

TEST_CASE("training rmse never increases across rounds") {
  const Matrix x = random_matrix(40, 4, 115);
  Rng rng(1150);
  std::vector<double> y(40);
  for (size_t i = 0; i < 40; ++i) y[i] = x(i, 0) - 2.0 * x(i, 3) + 0.05 * rng.normal();

  GbmConfig cfg;
  cfg.n_rounds = 12;
  const GbmModel model = gbm_fit(x, y, cfg);

  GbmModel partial;
  partial.base_score = model.base_score;
  partial.learning_rate = model.learning_rate;
  double prev = rmse(y, gbm_predict(partial, x));
  for (const GbmTree& tree : model.trees) {
    partial.trees.push_back(tree);
    const double cur = rmse(y, gbm_predict(partial, x));
    CHECK(cur <= prev + 1e-12);
    prev = cur;
  }
}

TEST_CASE("predictions are row-order equivariant") {
  const Matrix x = random_matrix(25, 3, 116);
  std::vector<double> y(25);
  for (size_t i = 0; i < 25; ++i) y[i] = x(i, 0) + x(i, 1) * x(i, 2);
  GbmConfig cfg;
  cfg.n_rounds = 20;
  const GbmModel model = gbm_fit(x, y, cfg);

  Rng rng(1160);
  const std::vector<size_t> perm = rng.permutation(25);
  const Matrix shuffled = select_rows(x, perm);
  const std::vector<double> base = gbm_predict(model, x);
  const std::vector<double> moved = gbm_predict(model, shuffled);
  for (size_t i = 0; i < 25; ++i) CHECK(moved[i] == base[perm[i]]);
}

TEST_CASE("grid search picks the structured model over a weak one") {
  const Matrix x = random_matrix(60, 3, 117);
  std::vector<double> y(60);
  for (size_t i = 0; i < 60; ++i) y[i] = 3.0 * x(i, 0) - x(i, 1);

  GbmConfig weak;
  weak.n_rounds = 1;
  weak.max_depth = 1;
  weak.learning_rate = 0.05;
  GbmConfig strong;
  strong.n_rounds = 100;
  strong.max_depth = 4;
  strong.learning_rate = 0.1;
  const std::vector<GbmConfig> grid = {weak, strong};

  const GbmGridResult res = gbm_grid_search(x, y, grid, 5, 7);
  REQUIRE(res.cv_rmse.size() == 2);
  CHECK(res.best_index == 1);
  CHECK(res.cv_rmse[1] < res.cv_rmse[0]);
  CHECK(res.best.n_rounds == 100);
  CHECK(res.model.trees.size() == 100);
}

TEST_CASE("grid ties break toward fewer rounds then shallower trees") {
  const Matrix x = random_matrix(20, 2, 118);
  const std::vector<double> y(20, 1.5);  // constant: every config scores 0

  GbmConfig a, b, c, d;
  a.n_rounds = 200;
  a.max_depth = 4;
  b.n_rounds = 50;
  b.max_depth = 4;
  c.n_rounds = 50;
  c.max_depth = 2;
  d.n_rounds = 50;
  d.max_depth = 2;  // duplicate of c; first wins
  const std::vector<GbmConfig> grid = {a, b, c, d};

  const GbmGridResult res = gbm_grid_search(x, y, grid, 4, 21);
  for (double v : res.cv_rmse) CHECK(v == 0.0);
  CHECK(res.best_index == 2);
}

TEST_CASE("grid search is deterministic in the seed") {
  const Matrix x = random_matrix(40, 3, 119);
  Rng rng(1190);
  std::vector<double> y(40);
  for (size_t i = 0; i < 40; ++i) y[i] = x(i, 2) + 0.3 * rng.normal();

  GbmConfig cfg;
  cfg.n_rounds = 10;
  const std::vector<GbmConfig> grid = {cfg};

  const GbmGridResult r1 = gbm_grid_search(x, y, grid, 5, 42);
  const GbmGridResult r2 = gbm_grid_search(x, y, grid, 5, 42);
  CHECK(r1.cv_rmse == r2.cv_rmse);
  const GbmGridResult r3 = gbm_grid_search(x, y, grid, 5, 43);
  CHECK(r1.cv_rmse[0] != r3.cv_rmse[0]);  // folds moved with the seed
}

TEST_CASE("default grid covers the documented axes") {
  const std::vector<GbmConfig> grid = default_grid();
  REQUIRE(grid.size() == 18);
  size_t rounds50 = 0;
  for (const GbmConfig& cfg : grid) {
    CHECK((cfg.max_depth == 2 || cfg.max_depth == 4 || cfg.max_depth == 6));
    CHECK((cfg.learning_rate == 0.05 || cfg.learning_rate == 0.1 ||
           cfg.learning_rate == 0.3));
    CHECK((cfg.n_rounds == 50 || cfg.n_rounds == 200));
    CHECK(cfg.l2_leaf == 1.0);
    if (cfg.n_rounds == 50) ++rounds50;
  }
  CHECK(rounds50 == 9);
}

TEST_CASE("invalid inputs are rejected") {
  const Matrix x = random_matrix(10, 2, 120);
  const std::vector<double> y(10, 0.5);
  GbmConfig cfg;

  std::vector<double> short_y(9, 0.5);
  CHECK_THROWS_AS(gbm_fit(x, short_y, cfg), InvalidInput);

  std::vector<double> bad_y = y;
  bad_y[3] = std::nan("");
  CHECK_THROWS_AS(gbm_fit(x, bad_y, cfg), NonFiniteValue);

  GbmConfig zero_rounds = cfg;
  zero_rounds.n_rounds = 0;
  CHECK_THROWS_AS(gbm_fit(x, y, zero_rounds), InvalidInput);

  GbmConfig bad_lr = cfg;
  bad_lr.learning_rate = 0.0;
  CHECK_THROWS_AS(gbm_fit(x, y, bad_lr), InvalidInput);
  bad_lr.learning_rate = 1.5;
  CHECK_THROWS_AS(gbm_fit(x, y, bad_lr), InvalidInput);

  const std::vector<GbmConfig> grid = {cfg};
  CHECK_THROWS_AS(gbm_grid_search(x, y, grid, 1, 0), InvalidInput);
  CHECK_THROWS_AS(gbm_grid_search(x, y, grid, 6, 0), InvalidInput);
  CHECK_THROWS_AS(gbm_grid_search(x, y, std::vector<GbmConfig>{}, 5, 0), InvalidInput);
}

TEST_CASE("dump round-trips leaf weights at full precision") {
  const Matrix x = random_matrix(15, 2, 121);
  std::vector<double> y(15);
  for (size_t i = 0; i < 15; ++i) y[i] = x(i, 0) * 7.0;
  GbmConfig cfg;
  cfg.n_rounds = 2;
  cfg.max_depth = 2;
  const GbmModel model = gbm_fit(x, y, cfg);
  const std::string dump = gbm_dump(model);
  CHECK(dump.rfind("gbm base ", 0) == 0);
  CHECK(dump.find("tree 0") != std::string::npos);
  CHECK(dump.find("tree 1") != std::string::npos);

  // parse the first leaf line back and match the stored weight bitwise
  const GbmTree& tree = model.trees[0];
  size_t leaf_id = 0;
  while (tree.nodes[leaf_id].feature >= 0) ++leaf_id;
  const std::string needle = "node " + std::to_string(leaf_id) + " leaf ";
  const size_t at = dump.find(needle);
  REQUIRE(at != std::string::npos);
  const double parsed = std::strtod(dump.c_str() + at + needle.size(), nullptr);
  CHECK(parsed == tree.nodes[leaf_id].weight);

  // routing oracle agrees with gbm_predict
  const std::vector<double> pred = gbm_predict(model, x);
  for (size_t i = 0; i < 15; ++i) {
    double acc = model.base_score;
    for (const GbmTree& t : model.trees) acc += model.learning_rate * route(t, x, i);
    CHECK(acc == pred[i]);
  }
}
