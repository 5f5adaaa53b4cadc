#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <sstream>

#include "lbm/boosting.hpp"
#include "lbm/error.hpp"
#include "lbm/evalstats.hpp"
#include "lbm/rng.hpp"

namespace lbm {

namespace {

void check_config(const GbmConfig& cfg) {
  if (cfg.learning_rate <= 0.0 || cfg.learning_rate > 1.0)
    throw InvalidInput("gbm: learning_rate must be in (0, 1]");
  if (cfg.l2_leaf < 0.0) throw InvalidInput("gbm: l2_leaf must be >= 0");
  if (cfg.n_rounds == 0) throw InvalidInput("gbm: n_rounds must be >= 1");
}

struct Split {
  double gain = 0.0;
  int feature = -1;
  double threshold = 0.0;
};

// Exact greedy search over all (feature, boundary) candidates; the first
// strictly-best candidate in feature-then-threshold order wins.
Split best_split(const Matrix& x, const std::vector<double>& g,
                 const std::vector<size_t>& idx, const GbmConfig& cfg) {
  const double lambda = cfg.l2_leaf;
  double g_total = 0.0;
  for (size_t i : idx) g_total += g[i];
  const double h_total = static_cast<double>(idx.size());
  const double parent = g_total * g_total / (h_total + lambda);

  Split best;
  std::vector<std::pair<double, size_t>> order(idx.size());
  for (size_t f = 0; f < x.cols(); ++f) {
    for (size_t p = 0; p < idx.size(); ++p) order[p] = {x(idx[p], f), idx[p]};
    std::sort(order.begin(), order.end());
    double g_left = 0.0;
    for (size_t p = 0; p + 1 < order.size(); ++p) {
      g_left += g[order[p].second];
      if (order[p].first == order[p + 1].first) continue;  // not separable here
      const double h_left = static_cast<double>(p + 1);
      const double h_right = h_total - h_left;
      if (h_left < cfg.min_child_weight || h_right < cfg.min_child_weight) continue;
      const double g_right = g_total - g_left;
      const double gain = 0.5 * (g_left * g_left / (h_left + lambda) +
                                 g_right * g_right / (h_right + lambda) - parent);
      if (gain > best.gain) {
        best.gain = gain;
        best.feature = static_cast<int>(f);
        best.threshold = 0.5 * (order[p].first + order[p + 1].first);
      }
    }
  }
  return best;
}

int build_node(GbmTree& tree, const Matrix& x, const std::vector<double>& g,
               const std::vector<size_t>& idx, size_t depth, const GbmConfig& cfg) {
  const int id = static_cast<int>(tree.nodes.size());
  tree.nodes.emplace_back();

  Split split;
  if (depth < cfg.max_depth && idx.size() >= 2) split = best_split(x, g, idx, cfg);
  if (split.feature < 0 || split.gain <= 0.0) {
    double g_total = 0.0;
    for (size_t i : idx) g_total += g[i];
    tree.nodes[id].weight =
        -g_total / (static_cast<double>(idx.size()) + cfg.l2_leaf);
    return id;
  }

  std::vector<size_t> left, right;
  for (size_t i : idx)
    (x(i, static_cast<size_t>(split.feature)) < split.threshold ? left : right)
        .push_back(i);
  tree.nodes[id].feature = split.feature;
  tree.nodes[id].threshold = split.threshold;
  const int l = build_node(tree, x, g, left, depth + 1, cfg);
  const int r = build_node(tree, x, g, right, depth + 1, cfg);
  tree.nodes[id].left = l;
  tree.nodes[id].right = r;
  return id;
}

double tree_output(const GbmTree& tree, const Matrix& x, size_t row) {
  int id = 0;
  while (tree.nodes[id].feature >= 0) {
    const GbmTreeNode& node = tree.nodes[id];
    id = x(row, static_cast<size_t>(node.feature)) < node.threshold ? node.left
                                                                    : node.right;
  }
  return tree.nodes[id].weight;
}

}  // namespace

GbmModel gbm_fit(const Matrix& x, std::span<const double> y, const GbmConfig& cfg) {
  check_config(cfg);
  const size_t n = x.rows();
  if (n < 2) throw InvalidInput("gbm_fit: need at least 2 rows");
  if (y.size() != n) throw InvalidInput("gbm_fit: target length does not match rows");
  for (double v : y)
    if (!std::isfinite(v)) throw NonFiniteValue("gbm_fit: target contains a non-finite value");

  GbmModel model;
  model.learning_rate = cfg.learning_rate;
  model.base_score = std::accumulate(y.begin(), y.end(), 0.0) / static_cast<double>(n);

  std::vector<double> pred(n, model.base_score);
  std::vector<double> g(n);
  std::vector<size_t> all(n);
  std::iota(all.begin(), all.end(), 0);
  for (size_t round = 0; round < cfg.n_rounds; ++round) {
    for (size_t i = 0; i < n; ++i) g[i] = pred[i] - y[i];
    GbmTree tree;
    build_node(tree, x, g, all, 0, cfg);
    for (size_t i = 0; i < n; ++i)
      pred[i] += cfg.learning_rate * tree_output(tree, x, i);
    model.trees.push_back(std::move(tree));
  }
  return model;
}

std::vector<double> gbm_predict(const GbmModel& model, const Matrix& x) {
  std::vector<double> pred(x.rows(), model.base_score);
  for (const GbmTree& tree : model.trees)
    for (size_t i = 0; i < x.rows(); ++i)
      pred[i] += model.learning_rate * tree_output(tree, x, i);
  return pred;
}

std::string gbm_dump(const GbmModel& model) {
  std::ostringstream out;
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", model.base_score);
  out << "gbm base " << buf << " lr " << model.learning_rate << " trees "
      << model.trees.size() << "\n";
  for (size_t t = 0; t < model.trees.size(); ++t) {
    out << "tree " << t << "\n";
    const GbmTree& tree = model.trees[t];
    for (size_t i = 0; i < tree.nodes.size(); ++i) {
      const GbmTreeNode& node = tree.nodes[i];
      if (node.feature < 0) {
        std::snprintf(buf, sizeof buf, "%.17g", node.weight);
        out << "  node " << i << " leaf " << buf << "\n";
      } else {
        std::snprintf(buf, sizeof buf, "%.17g", node.threshold);
        out << "  node " << i << " split " << node.feature << " " << buf << " "
            << node.left << " " << node.right << "\n";
      }
    }
  }
  return out.str();
}

std::vector<GbmConfig> default_grid() {
  std::vector<GbmConfig> grid;
  for (size_t depth : {2, 4, 6})
    for (double eta : {0.05, 0.1, 0.3})
      for (size_t rounds : {50, 200}) {
        GbmConfig cfg;
        cfg.max_depth = depth;
        cfg.learning_rate = eta;
        cfg.n_rounds = rounds;
        cfg.l2_leaf = 1.0;
        grid.push_back(cfg);
      }
  return grid;
}

GbmGridResult gbm_grid_search(const Matrix& x, std::span<const double> y,
                              std::span<const GbmConfig> grid, size_t folds,
                              uint64_t seed) {
  const size_t n = x.rows();
  if (grid.empty()) throw InvalidInput("gbm_grid_search: empty grid");
  if (folds < 2) throw InvalidInput("gbm_grid_search: folds must be >= 2");
  if (n < folds * 2) throw InvalidInput("gbm_grid_search: need at least folds*2 rows");

  Rng rng(mix_seed(seed, "gbm_cv"));
  const std::vector<size_t> perm = rng.permutation(n);

  GbmGridResult result;
  result.cv_rmse.resize(grid.size());
  for (size_t c = 0; c < grid.size(); ++c) {
    double rmse_sum = 0.0;
    for (size_t fold = 0; fold < folds; ++fold) {
      std::vector<size_t> tr_idx, val_idx;
      for (size_t i = 0; i < n; ++i)
        (i % folds == fold ? val_idx : tr_idx).push_back(perm[i]);
      std::sort(tr_idx.begin(), tr_idx.end());
      std::sort(val_idx.begin(), val_idx.end());
      const Matrix x_tr = select_rows(x, tr_idx);
      const Matrix x_val = select_rows(x, val_idx);
      std::vector<double> y_tr(tr_idx.size()), y_val(val_idx.size());
      for (size_t i = 0; i < tr_idx.size(); ++i) y_tr[i] = y[tr_idx[i]];
      for (size_t i = 0; i < val_idx.size(); ++i) y_val[i] = y[val_idx[i]];

      const GbmModel model = gbm_fit(x_tr, y_tr, grid[c]);
      rmse_sum += rmse(y_val, gbm_predict(model, x_val));
    }
    result.cv_rmse[c] = rmse_sum / static_cast<double>(folds);

    const bool better =
        c == 0 || result.cv_rmse[c] < result.cv_rmse[result.best_index] ||
        (result.cv_rmse[c] == result.cv_rmse[result.best_index] &&
         (grid[c].n_rounds < grid[result.best_index].n_rounds ||
          (grid[c].n_rounds == grid[result.best_index].n_rounds &&
           grid[c].max_depth < grid[result.best_index].max_depth)));
    if (better) result.best_index = c;
  }
  result.best = grid[result.best_index];
  result.model = gbm_fit(x, y, result.best);
  return result;
}

}  // namespace lbm
