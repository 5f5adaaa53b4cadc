#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace lbm {

double rmse(std::span<const double> y_true, std::span<const double> y_pred);

/// Coefficient of determination, 1 - SS_res/SS_tot about the mean of y_true.
/// Throws UndefinedMetric when y_true has zero variance.
double r2(std::span<const double> y_true, std::span<const double> y_pred);

/// Regularized incomplete beta I_x(a, b), continued-fraction evaluation.
double reg_incomplete_beta(double a, double b, double x);

/// CDF of the F distribution with (d1, d2) degrees of freedom.
double f_cdf(double f, double d1, double d2);

/// CDF of the studentized range for k groups and `df` error degrees of
/// freedom, by two-level Gauss-Legendre quadrature (abs err < 1e-6).
double studentized_range_cdf(double q, size_t k, double df);

/// Inverse of the studentized range CDF by bisection.
double studentized_range_quantile(double p, size_t k, double df);

struct AnovaResult {
  double f = 0.0;
  double p = 1.0;
  size_t df_between = 0;
  size_t df_within = 0;
  double ms_within = 0.0;
  std::vector<double> group_means;
  std::vector<size_t> group_sizes;
};

AnovaResult anova_oneway(const std::vector<std::vector<double>>& groups);

struct TukeyRow {
  size_t a = 0;
  size_t b = 0;
  double mean_diff = 0.0;  // mean_a - mean_b
  double q = 0.0;
  double p_adj = 1.0;
};

/// Tukey-Kramer pairwise comparisons (handles unequal group sizes).
std::vector<TukeyRow> tukey_hsd(const std::vector<std::vector<double>>& groups);

struct StatsReport {
  std::vector<std::string> groups;
  double f_stat = 0.0;
  double p_value = 1.0;
  std::vector<TukeyRow> pairwise;
};

StatsReport make_stats_report(const std::vector<std::string>& names,
                              const std::vector<std::vector<double>>& groups);

/// One benchmark result: a (method, latent_dim, resolution) cell.
struct TargetScore {
  std::string target;
  double test_rmse = 0.0;
  double test_r2 = 0.0;
};

struct BenchCell {
  std::string method;
  size_t latent_dim = 0;
  std::string resolution;
  std::optional<double> test_rmse;  // absent when reconstruction is unsupported
  std::string recon_status = "ok";  // "ok" | "unsupported: ..." | "failed: ..."
  std::vector<TargetScore> per_target;
  double wall_time_s = 0.0;
  uint64_t seed = 0;
};

struct MethodSummary {
  std::string method;
  size_t n_cells = 0;
  size_t n_recon = 0;
  std::optional<double> rmse_mean, rmse_sd;
  std::optional<double> r2_mean, r2_sd;
  std::optional<double> rmse_slope_vs_log2dim;
};

/// Per-method means/SDs of test RMSE and downstream R^2, plus the slope of
/// RMSE against log2(latent_dim) where at least two dimensionalities exist.
std::vector<MethodSummary> aggregate(const std::vector<BenchCell>& cells);

std::string aggregate_csv(const std::vector<MethodSummary>& summaries);

}  // namespace lbm
