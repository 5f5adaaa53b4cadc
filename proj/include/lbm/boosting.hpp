#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "lbm/matrix.hpp"

namespace lbm {

struct GbmConfig {
  size_t n_rounds = 50;
  size_t max_depth = 4;
  double learning_rate = 0.1;  // eta in (0, 1]
  double l2_leaf = 1.0;        // lambda on leaf weights
  double min_child_weight = 1.0;
};

/// feature < 0 marks a leaf. Rows with x[feature] < threshold go left.
struct GbmTreeNode {
  int feature = -1;
  double threshold = 0.0;
  int left = -1;
  int right = -1;
  double weight = 0.0;
};

struct GbmTree {
  std::vector<GbmTreeNode> nodes;  // root at 0
};

struct GbmModel {
  double base_score = 0.0;
  double learning_rate = 0.1;
  std::vector<GbmTree> trees;
};

/// Second-order boosting on squared error (g = pred - y, h = 1): exact
/// greedy splits maximizing 0.5*(GL^2/(HL+l) + GR^2/(HR+l) - G^2/(H+l)),
/// leaf weight -G/(H+l). Splits with gain <= 0 or a child below
/// min_child_weight are not taken.
GbmModel gbm_fit(const Matrix& x, std::span<const double> y, const GbmConfig& cfg);

std::vector<double> gbm_predict(const GbmModel& model, const Matrix& x);

/// Human-readable dump; leaf lines carry full-precision weights.
std::string gbm_dump(const GbmModel& model);

/// depth {2,4,6} x eta {0.05,0.1,0.3} x rounds {50,200}, lambda 1.
std::vector<GbmConfig> default_grid();

struct GbmGridResult {
  GbmConfig best;
  size_t best_index = 0;
  std::vector<double> cv_rmse;  // mean validation RMSE per grid entry
  GbmModel model;               // refit of the winner on all rows
};

/// 5-fold CV over the grid. Ties break toward fewer rounds, then shallower
/// trees, then grid order.
GbmGridResult gbm_grid_search(const Matrix& x, std::span<const double> y,
                              std::span<const GbmConfig> grid, size_t folds,
                              uint64_t seed);

}  // namespace lbm
