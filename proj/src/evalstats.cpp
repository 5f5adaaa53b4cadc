#include "lbm/evalstats.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <map>
#include <sstream>

#include "lbm/error.hpp"

namespace lbm {

namespace {

double mean_of(std::span<const double> v) {
  double s = 0.0;
  for (const double x : v) s += x;
  return s / static_cast<double>(v.size());
}

double norm_cdf(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }

double norm_pdf(double z) {
  return std::exp(-0.5 * z * z) / std::sqrt(2.0 * 3.14159265358979323846);
}

// 16-point Gauss-Legendre nodes/weights on [-1, 1].
constexpr int kGL = 16;
constexpr double kGLNodes[kGL] = {
    -0.9894009349916499, -0.9445750230732326, -0.8656312023878318,
    -0.7554044083550030, -0.6178762444026438, -0.4580167776572274,
    -0.2816035507792589, -0.0950125098376374, 0.0950125098376374,
    0.2816035507792589,  0.4580167776572274,  0.6178762444026438,
    0.7554044083550030,  0.8656312023878318,  0.9445750230732326,
    0.9894009349916499};
constexpr double kGLWeights[kGL] = {
    0.0271524594117541, 0.0622535239386479, 0.0951585116824928,
    0.1246289712555339, 0.1495959888165767, 0.1691565193950025,
    0.1826034150449236, 0.1894506104550685, 0.1894506104550685,
    0.1826034150449236, 0.1691565193950025, 0.1495959888165767,
    0.1246289712555339, 0.0951585116824928, 0.0622535239386479,
    0.0271524594117541};

template <typename F>
double gl_integrate(F&& f, double lo, double hi, int segments) {
  double total = 0.0;
  const double seg_w = (hi - lo) / segments;
  for (int s = 0; s < segments; ++s) {
    const double a = lo + s * seg_w;
    const double mid = a + 0.5 * seg_w;
    const double half = 0.5 * seg_w;
    for (int i = 0; i < kGL; ++i)
      total += kGLWeights[i] * f(mid + half * kGLNodes[i]);
  }
  return total * 0.5 * seg_w;
}

// P(range of k standard normals <= w): k * int phi(z) [Phi(z) - Phi(z-w)]^(k-1) dz.
double normal_range_cdf(double w, size_t k) {
  if (w <= 0.0) return 0.0;
  const auto integrand = [w, k](double z) {
    const double inner = norm_cdf(z) - norm_cdf(z - w);
    if (inner <= 0.0) return 0.0;
    return norm_pdf(z) * std::pow(inner, static_cast<double>(k - 1));
  };
  // phi(z) kills the integrand beyond |z| ~ 8.
  return static_cast<double>(k) * gl_integrate(integrand, -8.5, 8.5, 24);
}

double betacf(double a, double b, double x) {
  // Lentz's continued fraction for the incomplete beta function.
  const int max_iter = 500;
  const double eps = 1e-15;
  const double fpmin = 1e-300;
  const double qab = a + b;
  const double qap = a + 1.0;
  const double qam = a - 1.0;
  double c = 1.0;
  double d = 1.0 - qab * x / qap;
  if (std::fabs(d) < fpmin) d = fpmin;
  d = 1.0 / d;
  double h = d;
  for (int m = 1; m <= max_iter; ++m) {
    const double m2 = 2.0 * m;
    double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
    d = 1.0 + aa * d;
    if (std::fabs(d) < fpmin) d = fpmin;
    c = 1.0 + aa / c;
    if (std::fabs(c) < fpmin) c = fpmin;
    d = 1.0 / d;
    h *= d * c;
    aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
    d = 1.0 + aa * d;
    if (std::fabs(d) < fpmin) d = fpmin;
    c = 1.0 + aa / c;
    if (std::fabs(c) < fpmin) c = fpmin;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::fabs(del - 1.0) < eps) return h;
  }
  throw NumericalFailure("reg_incomplete_beta: continued fraction did not converge");
}

std::optional<double> sample_sd(const std::vector<double>& v) {
  if (v.size() < 2) return std::nullopt;
  const double m = mean_of(v);
  double s = 0.0;
  for (const double x : v) s += (x - m) * (x - m);
  return std::sqrt(s / static_cast<double>(v.size() - 1));
}

std::string fmt_opt(const std::optional<double>& v) {
  if (!v) return "";
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", *v);
  return buf;
}

}  // namespace

double rmse(std::span<const double> y_true, std::span<const double> y_pred) {
  if (y_true.size() != y_pred.size())
    throw InvalidInput("rmse: length mismatch");
  if (y_true.empty()) throw InvalidInput("rmse: empty input");
  double s = 0.0;
  for (size_t i = 0; i < y_true.size(); ++i) {
    const double d = y_true[i] - y_pred[i];
    s += d * d;
  }
  return std::sqrt(s / static_cast<double>(y_true.size()));
}

double r2(std::span<const double> y_true, std::span<const double> y_pred) {
  if (y_true.size() != y_pred.size()) throw InvalidInput("r2: length mismatch");
  if (y_true.size() < 2) throw InvalidInput("r2: need at least 2 values");
  const double m = mean_of(y_true);
  double ss_res = 0.0, ss_tot = 0.0;
  for (size_t i = 0; i < y_true.size(); ++i) {
    ss_res += (y_true[i] - y_pred[i]) * (y_true[i] - y_pred[i]);
    ss_tot += (y_true[i] - m) * (y_true[i] - m);
  }
  if (ss_tot == 0.0) throw UndefinedMetric("r2: zero-variance target");
  return 1.0 - ss_res / ss_tot;
}

double reg_incomplete_beta(double a, double b, double x) {
  if (x < 0.0 || x > 1.0) throw InvalidInput("reg_incomplete_beta: x outside [0,1]");
  if (x == 0.0) return 0.0;
  if (x == 1.0) return 1.0;
  const double ln_front = std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) +
                          a * std::log(x) + b * std::log(1.0 - x);
  const double front = std::exp(ln_front);
  if (x < (a + 1.0) / (a + b + 2.0)) return front * betacf(a, b, x) / a;
  return 1.0 - front * betacf(b, a, 1.0 - x) / b;
}

double f_cdf(double f, double d1, double d2) {
  if (f <= 0.0) return 0.0;
  if (std::isinf(f)) return 1.0;
  const double x = d1 * f / (d1 * f + d2);
  return reg_incomplete_beta(d1 / 2.0, d2 / 2.0, x);
}

double studentized_range_cdf(double q, size_t k, double df) {
  if (k < 2) throw InvalidInput("studentized_range_cdf: need k >= 2");
  if (df < 1.0) throw InvalidInput("studentized_range_cdf: need df >= 1");
  if (q <= 0.0) return 0.0;

  // df large: the scaled chi factor degenerates to the point mass at 1.
  if (df > 5000.0) return normal_range_cdf(q, k);

  // Outer integral over s = chi_df / sqrt(df); density concentrates near 1,
  // so segment the axis more finely there.
  const double ln_coef = (1.0 - df / 2.0) * std::log(2.0) +
                         (df / 2.0) * std::log(df) - std::lgamma(df / 2.0);
  const auto outer = [&](double s) {
    if (s <= 0.0) return 0.0;
    const double ln_pdf = ln_coef + (df - 1.0) * std::log(s) - df * s * s / 2.0;
    return std::exp(ln_pdf) * normal_range_cdf(q * s, k);
  };
  const double s_hi = std::max(6.0, 1.0 + 12.0 / std::sqrt(df));
  double total = 0.0;
  total += gl_integrate(outer, 0.0, 0.5, 4);
  total += gl_integrate(outer, 0.5, 1.5, 16);
  total += gl_integrate(outer, 1.5, 3.0, 8);
  total += gl_integrate(outer, 3.0, s_hi, 8);
  return std::min(total, 1.0);
}

double studentized_range_quantile(double p, size_t k, double df) {
  if (p <= 0.0 || p >= 1.0)
    throw InvalidInput("studentized_range_quantile: p must be in (0,1)");
  double lo = 0.0, hi = 1.0;
  while (studentized_range_cdf(hi, k, df) < p && hi < 1e4) hi *= 2.0;
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    if (studentized_range_cdf(mid, k, df) < p)
      lo = mid;
    else
      hi = mid;
    if (hi - lo < 1e-10) break;
  }
  return 0.5 * (lo + hi);
}

AnovaResult anova_oneway(const std::vector<std::vector<double>>& groups) {
  if (groups.size() < 2) throw InvalidInput("anova_oneway: need >= 2 groups");
  size_t total_n = 0;
  for (const auto& g : groups) {
    if (g.size() < 2) throw InvalidInput("anova_oneway: every group needs >= 2 values");
    total_n += g.size();
  }

  double grand = 0.0;
  for (const auto& g : groups)
    for (const double v : g) grand += v;
  grand /= static_cast<double>(total_n);

  AnovaResult res;
  res.df_between = groups.size() - 1;
  res.df_within = total_n - groups.size();

  double ss_between = 0.0, ss_within = 0.0;
  for (const auto& g : groups) {
    const double m = mean_of(g);
    res.group_means.push_back(m);
    res.group_sizes.push_back(g.size());
    ss_between += static_cast<double>(g.size()) * (m - grand) * (m - grand);
    for (const double v : g) ss_within += (v - m) * (v - m);
  }

  const double ms_between = ss_between / static_cast<double>(res.df_between);
  res.ms_within = ss_within / static_cast<double>(res.df_within);

  if (res.ms_within == 0.0) {
    if (ms_between == 0.0) {
      res.f = 0.0;
      res.p = 1.0;
    } else {
      res.f = std::numeric_limits<double>::infinity();
      res.p = 0.0;
    }
    return res;
  }
  res.f = ms_between / res.ms_within;
  res.p = 1.0 - f_cdf(res.f, static_cast<double>(res.df_between),
                      static_cast<double>(res.df_within));
  return res;
}

std::vector<TukeyRow> tukey_hsd(const std::vector<std::vector<double>>& groups) {
  const AnovaResult a = anova_oneway(groups);
  const size_t k = groups.size();
  std::vector<TukeyRow> rows;
  for (size_t i = 0; i < k; ++i) {
    for (size_t j = i + 1; j < k; ++j) {
      TukeyRow r;
      r.a = i;
      r.b = j;
      r.mean_diff = a.group_means[i] - a.group_means[j];
      const double ni = static_cast<double>(a.group_sizes[i]);
      const double nj = static_cast<double>(a.group_sizes[j]);
      const double se = std::sqrt(a.ms_within / 2.0 * (1.0 / ni + 1.0 / nj));
      if (se == 0.0) {
        r.q = r.mean_diff == 0.0 ? 0.0 : std::numeric_limits<double>::infinity();
        r.p_adj = r.mean_diff == 0.0 ? 1.0 : 0.0;
      } else {
        r.q = std::fabs(r.mean_diff) / se;
        r.p_adj = 1.0 - studentized_range_cdf(r.q, k, static_cast<double>(a.df_within));
        r.p_adj = std::clamp(r.p_adj, 0.0, 1.0);
      }
      rows.push_back(r);
    }
  }
  return rows;
}

StatsReport make_stats_report(const std::vector<std::string>& names,
                              const std::vector<std::vector<double>>& groups) {
  if (names.size() != groups.size())
    throw InvalidInput("make_stats_report: names/groups length mismatch");
  StatsReport rep;
  rep.groups = names;
  const AnovaResult a = anova_oneway(groups);
  rep.f_stat = a.f;
  rep.p_value = a.p;
  rep.pairwise = tukey_hsd(groups);
  return rep;
}

std::vector<MethodSummary> aggregate(const std::vector<BenchCell>& cells) {
  if (cells.empty()) throw InvalidInput("aggregate: no cells");
  // Preserve first-seen method order.
  std::vector<std::string> order;
  std::map<std::string, std::vector<const BenchCell*>> by_method;
  for (const auto& c : cells) {
    if (!by_method.count(c.method)) order.push_back(c.method);
    by_method[c.method].push_back(&c);
  }

  std::vector<MethodSummary> out;
  for (const auto& method : order) {
    const auto& group = by_method[method];
    MethodSummary s;
    s.method = method;
    s.n_cells = group.size();

    std::vector<double> rmses, r2s, log2dims;
    for (const BenchCell* c : group) {
      if (c->test_rmse) {
        rmses.push_back(*c->test_rmse);
        log2dims.push_back(std::log2(static_cast<double>(c->latent_dim)));
      }
      for (const auto& t : c->per_target) r2s.push_back(t.test_r2);
    }
    s.n_recon = rmses.size();
    if (!rmses.empty()) {
      s.rmse_mean = mean_of(rmses);
      s.rmse_sd = sample_sd(rmses);
    }
    if (!r2s.empty()) {
      s.r2_mean = mean_of(r2s);
      s.r2_sd = sample_sd(r2s);
    }
    // Slope of RMSE against log2(dim); needs two distinct dims.
    std::vector<double> uniq(log2dims);
    std::sort(uniq.begin(), uniq.end());
    uniq.erase(std::unique(uniq.begin(), uniq.end()), uniq.end());
    if (uniq.size() >= 2) {
      const double mx = mean_of(log2dims);
      const double my = mean_of(rmses);
      double sxx = 0.0, sxy = 0.0;
      for (size_t i = 0; i < rmses.size(); ++i) {
        sxx += (log2dims[i] - mx) * (log2dims[i] - mx);
        sxy += (log2dims[i] - mx) * (rmses[i] - my);
      }
      s.rmse_slope_vs_log2dim = sxy / sxx;
    }
    out.push_back(std::move(s));
  }
  return out;
}

std::string aggregate_csv(const std::vector<MethodSummary>& summaries) {
  std::ostringstream os;
  os << "method,n_cells,n_recon,rmse_mean,rmse_sd,r2_mean,r2_sd,rmse_slope_vs_log2dim\n";
  for (const auto& s : summaries) {
    os << s.method << ',' << s.n_cells << ',' << s.n_recon << ','
       << fmt_opt(s.rmse_mean) << ',' << fmt_opt(s.rmse_sd) << ','
       << fmt_opt(s.r2_mean) << ',' << fmt_opt(s.r2_sd) << ','
       << fmt_opt(s.rmse_slope_vs_log2dim) << '\n';
  }
  return os.str();
}

}  // namespace lbm
