#include <algorithm>
#include <cmath>
#include <iostream>
#include <limits>
#include <memory>
#include <numeric>
#include <vector>

#include "lbm/embedder.hpp"
#include "lbm/error.hpp"
#include "lbm/linalg.hpp"
#include "lbm/rng.hpp"

namespace lbm {

namespace umap {

namespace {

constexpr double kSigmaFloor = 1e-12;

// Binary search for sigma so sum_j exp(-max(0, d_j - rho)/sigma) hits the
// target (monotone increasing in sigma).
double solve_sigma(const std::vector<double>& dists, double rho, double target) {
  auto eval = [&](double sigma) {
    double s = 0.0;
    for (double d : dists) s += std::exp(-std::max(0.0, d - rho) / sigma);
    return s;
  };
  double lo = 0.0;
  double hi = std::numeric_limits<double>::infinity();
  double sigma = 1.0;
  for (int step = 0; step < 500; ++step) {
    const double s = eval(sigma);
    if (std::fabs(s - target) < 1e-5) break;
    if (s > target) {
      hi = sigma;
      sigma = 0.5 * (lo + hi);
    } else {
      lo = sigma;
      sigma = std::isinf(hi) ? sigma * 2.0 : 0.5 * (lo + hi);
    }
    if (sigma < kSigmaFloor) {
      sigma = kSigmaFloor;
      break;
    }
  }
  return sigma;
}

}  // namespace

SmoothKnnResult smooth_knn(const Matrix& x, size_t n_neighbors) {
  const size_t n = x.rows();
  if (n_neighbors == 0) throw InvalidInput("smooth_knn: n_neighbors must be >= 1");
  if (n <= n_neighbors) throw InvalidInput("smooth_knn: need more rows than neighbors");

  SmoothKnnResult out;
  out.neighbors.resize(n);
  out.distances.resize(n);
  out.rhos.resize(n);
  out.sigmas.resize(n);
  const double target = std::log2(static_cast<double>(n_neighbors));

  std::vector<std::pair<double, size_t>> order(n - 1);
  for (size_t i = 0; i < n; ++i) {
    size_t m = 0;
    for (size_t j = 0; j < n; ++j) {
      if (j == i) continue;
      double d2 = 0.0;
      for (size_t c = 0; c < x.cols(); ++c) {
        const double diff = x(i, c) - x(j, c);
        d2 += diff * diff;
      }
      order[m++] = {d2, j};
    }
    std::partial_sort(order.begin(), order.begin() + static_cast<long>(n_neighbors),
                      order.end());
    out.neighbors[i].resize(n_neighbors);
    out.distances[i].resize(n_neighbors);
    for (size_t j = 0; j < n_neighbors; ++j) {
      out.neighbors[i][j] = order[j].second;
      out.distances[i][j] = std::sqrt(order[j].first);
    }
    out.rhos[i] = out.distances[i][0];
    out.sigmas[i] = solve_sigma(out.distances[i], out.rhos[i], target);
  }
  return out;
}

CurveParams fit_curve_params(double min_dist, double spread) {
  if (min_dist < 0.0 || spread <= 0.0)
    throw InvalidInput("fit_curve_params: need min_dist >= 0 and spread > 0");

  // Offset-exponential target sampled past zero (the Jacobian needs log d).
  const size_t m = 300;
  std::vector<double> ds(m), phi(m);
  for (size_t i = 0; i < m; ++i) {
    const double d = 3.0 * spread * static_cast<double>(i + 1) / static_cast<double>(m);
    ds[i] = d;
    phi[i] = d <= min_dist ? 1.0 : std::exp(-(d - min_dist) / spread);
  }

  auto sse = [&](double a, double b) {
    double s = 0.0;
    for (size_t i = 0; i < m; ++i) {
      const double r = 1.0 / (1.0 + a * std::pow(ds[i], 2.0 * b)) - phi[i];
      s += r * r;
    }
    return s;
  };

  // Damped Gauss-Newton on (a, b).
  double a = 1.0, b = 1.0;
  double lambda = 1e-3;
  double cur = sse(a, b);
  for (int it = 0; it < 500; ++it) {
    double jaa = 0.0, jab = 0.0, jbb = 0.0, ga = 0.0, gb = 0.0;
    for (size_t i = 0; i < m; ++i) {
      const double t = std::pow(ds[i], 2.0 * b);
      const double denom = 1.0 + a * t;
      const double r = 1.0 / denom - phi[i];
      const double da = -t / (denom * denom);
      const double db = -2.0 * a * t * std::log(ds[i]) / (denom * denom);
      jaa += da * da;
      jab += da * db;
      jbb += db * db;
      ga += da * r;
      gb += db * r;
    }
    bool stepped = false;
    for (int tries = 0; tries < 60; ++tries) {
      const double paa = jaa + lambda, pbb = jbb + lambda;
      const double det = paa * pbb - jab * jab;
      if (det <= 0.0) {
        lambda *= 4.0;
        continue;
      }
      const double step_a = -(pbb * ga - jab * gb) / det;
      const double step_b = -(-jab * ga + paa * gb) / det;
      const double na = a + step_a;
      const double nb = b + step_b;
      if (na <= 0.0 || nb <= 0.0) {
        lambda *= 4.0;
        continue;
      }
      const double nxt = sse(na, nb);
      if (nxt <= cur) {
        if (std::fabs(step_a) + std::fabs(step_b) < 1e-13) {
          return {na, nb};
        }
        a = na;
        b = nb;
        cur = nxt;
        lambda = std::max(lambda * 0.5, 1e-12);
        stepped = true;
        break;
      }
      lambda *= 4.0;
    }
    if (!stepped) break;
  }
  return {a, b};
}

}  // namespace umap

namespace {

// Connected components of the fuzzy graph (edges = nonzero weights).
std::vector<size_t> graph_components(const Matrix& b, size_t* n_components) {
  const size_t n = b.rows();
  std::vector<size_t> comp(n, SIZE_MAX);
  size_t next = 0;
  std::vector<size_t> stack;
  for (size_t s = 0; s < n; ++s) {
    if (comp[s] != SIZE_MAX) continue;
    comp[s] = next;
    stack.push_back(s);
    while (!stack.empty()) {
      const size_t i = stack.back();
      stack.pop_back();
      for (size_t j = 0; j < n; ++j)
        if (b(i, j) > 0.0 && comp[j] == SIZE_MAX) {
          comp[j] = next;
          stack.push_back(j);
        }
    }
    ++next;
  }
  *n_components = next;
  return comp;
}

// Spectral coordinates for one component: eigenvectors 2..k+1 of the
// degree-normalized adjacency (equivalently the bottom nontrivial
// eigenvectors of the symmetric normalized Laplacian).
void spectral_component(const Matrix& b, const std::vector<size_t>& ids, size_t k,
                        Matrix& y) {
  const size_t n = ids.size();
  if (n == 1) return;  // stays at the origin of its offset slot
  std::vector<double> inv_sqrt_deg(n);
  for (size_t i = 0; i < n; ++i) {
    double deg = 0.0;
    for (size_t j = 0; j < n; ++j) deg += b(ids[i], ids[j]);
    inv_sqrt_deg[i] = 1.0 / std::sqrt(deg);
  }
  Matrix m(n, n);
  for (size_t i = 0; i < n; ++i)
    for (size_t j = 0; j < n; ++j)
      m(i, j) = b(ids[i], ids[j]) * (inv_sqrt_deg[i] * inv_sqrt_deg[j]);
  const EigResult eig = sym_eig(m);
  const size_t take = std::min(k, n - 1);
  for (size_t c = 0; c < take; ++c)
    for (size_t i = 0; i < n; ++i) y(ids[i], c) = eig.vectors(i, c + 1);
}

double curve_pow(double d2, double b) { return std::pow(d2, b); }  // d^(2b) on squared input

}  // namespace

std::unique_ptr<UmapModel> umap_fit(const Matrix& x_train, size_t k, uint64_t seed,
                                    const EmbedderParams& params) {
  const size_t n = x_train.rows();
  const size_t n_neighbors = params.umap_neighbors;
  if (n <= n_neighbors) throw InvalidInput("umap_fit: need more rows than neighbors");
  if (k == 0) throw InvalidInput("umap_fit: k must be >= 1");

  EmbedderSpec spec;
  spec.method = Method::umap;
  spec.latent_dim = k;
  spec.seed = seed;
  spec.params = params;
  auto model = std::unique_ptr<UmapModel>(new UmapModel(std::move(spec)));
  model->x_train_ = x_train;
  model->inverse_budget_ = n <= 4096 ? params.umap_inverse_budget_small
                                     : params.umap_inverse_budget;

  const umap::SmoothKnnResult knn = umap::smooth_knn(x_train, n_neighbors);
  model->rhos_ = knn.rhos;
  model->sigmas_ = knn.sigmas;

  // Directed memberships, then fuzzy union B = A + A' - A.A'.
  Matrix a(n, n);
  for (size_t i = 0; i < n; ++i)
    for (size_t j = 0; j < n_neighbors; ++j) {
      const double d = knn.distances[i][j];
      a(i, knn.neighbors[i][j]) =
          std::exp(-std::max(0.0, d - knn.rhos[i]) / std::max(knn.sigmas[i], 1e-12));
    }
  Matrix b(n, n);
  for (size_t i = 0; i < n; ++i)
    for (size_t j = 0; j < n; ++j)
      b(i, j) = a(i, j) + a(j, i) - a(i, j) * a(j, i);
  model->graph_ = b;

  const umap::CurveParams curve = umap::fit_curve_params(params.umap_min_dist);
  model->curve_a_ = curve.a;
  model->curve_b_ = curve.b;

  // Initial layout: spectral at desk scale, seeded random above it.
  Matrix y(n, k);
  if (n > params.umap_spectral_max_n) {
    Rng init_rng(mix_seed(seed, "umap_init"));
    for (size_t i = 0; i < y.size(); ++i) y.data()[i] = init_rng.uniform(-10.0, 10.0);
  } else {
    size_t n_components = 0;
    const std::vector<size_t> comp = graph_components(b, &n_components);
    if (n_components > 1)
      std::cerr << "warning: kNN graph has " << n_components
                << " components; laying them out independently\n";
    for (size_t c = 0; c < n_components; ++c) {
      std::vector<size_t> ids;
      for (size_t i = 0; i < n; ++i)
        if (comp[i] == c) ids.push_back(i);
      spectral_component(b, ids, k, y);
      for (size_t i : ids) y(i, 0) += 20.0 * static_cast<double>(c);
    }
    const double scale = max_abs(y);
    if (scale > 0.0)
      for (size_t i = 0; i < y.size(); ++i) y.data()[i] *= 10.0 / scale;
  }

  // Edge list over the upper triangle.
  struct Edge {
    size_t i, j;
    double w;
  };
  std::vector<Edge> edges;
  double w_max = 0.0;
  for (size_t i = 0; i < n; ++i)
    for (size_t j = i + 1; j < n; ++j)
      if (b(i, j) > 0.0) {
        edges.push_back({i, j, b(i, j)});
        w_max = std::max(w_max, b(i, j));
      }

  const size_t n_epochs = params.umap_epochs;
  const double neg_rate = 5.0;
  std::vector<double> epochs_per_sample(edges.size());
  std::vector<double> next_sample(edges.size());
  std::vector<double> next_neg(edges.size());
  for (size_t e = 0; e < edges.size(); ++e) {
    epochs_per_sample[e] = w_max / edges[e].w;
    next_sample[e] = epochs_per_sample[e];
    next_neg[e] = epochs_per_sample[e] / neg_rate;
  }

  Rng rng(mix_seed(seed, "umap_layout"));
  const double a_p = curve.a;
  const double b_p = curve.b;
  const auto clip4 = [](double v) { return std::clamp(v, -4.0, 4.0); };
  for (size_t epoch = 0; epoch < n_epochs; ++epoch) {
    const double alpha =
        1.0 - static_cast<double>(epoch) / static_cast<double>(n_epochs);
    for (size_t e = 0; e < edges.size(); ++e) {
      if (next_sample[e] > static_cast<double>(epoch)) continue;
      const size_t i = edges[e].i;
      const size_t j = edges[e].j;
      double d2 = 0.0;
      for (size_t d = 0; d < k; ++d) {
        const double diff = y(i, d) - y(j, d);
        d2 += diff * diff;
      }
      if (d2 > 0.0) {
        const double t = a_p * curve_pow(d2, b_p);
        const double g = -2.0 * b_p * t / (d2 * (1.0 + t));
        for (size_t d = 0; d < k; ++d) {
          const double move = alpha * clip4(g * (y(i, d) - y(j, d)));
          y(i, d) += move;
          y(j, d) -= move;
        }
      }
      next_sample[e] += epochs_per_sample[e];

      const double neg_gap = static_cast<double>(epoch) - next_neg[e];
      const size_t n_negs =
          neg_gap <= 0.0
              ? 0
              : static_cast<size_t>(neg_gap / (epochs_per_sample[e] / neg_rate));
      for (size_t p = 0; p < n_negs; ++p) {
        const size_t other = rng.below(n);
        if (other == i || other == j) continue;
        double nd2 = 0.0;
        for (size_t d = 0; d < k; ++d) {
          const double diff = y(i, d) - y(other, d);
          nd2 += diff * diff;
        }
        const double t = a_p * curve_pow(nd2, b_p);
        const double g = 2.0 * b_p / ((0.001 + nd2) * (1.0 + t));
        for (size_t d = 0; d < k; ++d) {
          const double raw = nd2 > 0.0 ? clip4(g * (y(i, d) - y(other, d))) : 4.0;
          y(i, d) += alpha * raw;
        }
      }
      next_neg[e] += static_cast<double>(n_negs) * (epochs_per_sample[e] / neg_rate);
    }
  }
  model->train_embedding_ = y;
  return model;
}

bool UmapModel::can_inverse() const { return latent_dim() <= inverse_budget_; }

Matrix UmapModel::transform(const Matrix& x) const {
  if (x.cols() != x_train_.cols()) throw InvalidInput("umap transform: column count mismatch");
  if (x == x_train_) return train_embedding_;

  const size_t n_train = x_train_.rows();
  const size_t m = std::min(spec_.params.umap_neighbors, n_train);
  const size_t k = latent_dim();
  const double target = std::log2(static_cast<double>(m));
  Matrix out(x.rows(), k);
  std::vector<std::pair<double, size_t>> order(n_train);
  std::vector<double> dists(m);
  for (size_t r = 0; r < x.rows(); ++r) {
    for (size_t i = 0; i < n_train; ++i) {
      double d2 = 0.0;
      for (size_t c = 0; c < x.cols(); ++c) {
        const double diff = x(r, c) - x_train_(i, c);
        d2 += diff * diff;
      }
      order[i] = {d2, i};
    }
    std::partial_sort(order.begin(), order.begin() + static_cast<long>(m), order.end());
    for (size_t j = 0; j < m; ++j) dists[j] = std::sqrt(order[j].first);
    const double rho = dists[0];
    const double sigma = umap::solve_sigma(dists, rho, target);

    double wsum = 0.0;
    std::vector<double> acc(k, 0.0);
    for (size_t j = 0; j < m; ++j) {
      const double w =
          std::exp(-std::max(0.0, dists[j] - rho) / std::max(sigma, 1e-12));
      wsum += w;
      for (size_t d = 0; d < k; ++d) acc[d] += w * train_embedding_(order[j].second, d);
    }
    for (size_t d = 0; d < k; ++d) out(r, d) = acc[d] / wsum;
  }
  return out;
}

Matrix UmapModel::inverse_raw(const Matrix& z) const {
  const size_t k = latent_dim();
  if (z.cols() != k) throw InvalidInput("umap inverse: latent dimension mismatch");

  // Weighted local linear regression latent -> input over the nearest
  // training embeddings.
  const size_t n_train = train_embedding_.rows();
  const size_t genes = x_train_.cols();
  const size_t m = std::min(std::max(spec_.params.umap_neighbors, k + 2), n_train);
  Matrix out(z.rows(), genes);
  std::vector<std::pair<double, size_t>> order(n_train);
  for (size_t r = 0; r < z.rows(); ++r) {
    for (size_t i = 0; i < n_train; ++i) {
      double d2 = 0.0;
      for (size_t d = 0; d < k; ++d) {
        const double diff = z(r, d) - train_embedding_(i, d);
        d2 += diff * diff;
      }
      order[i] = {d2, i};
    }
    std::partial_sort(order.begin(), order.begin() + static_cast<long>(m), order.end());
    double band = 0.0;
    for (size_t j = 0; j < m; ++j) band += std::sqrt(order[j].first);
    band = std::max(band / static_cast<double>(m), 1e-12);

    // Weighted normal equations for [1, z] -> x.
    Matrix g(k + 1, k + 1);
    Matrix rhs(k + 1, genes);
    std::vector<double> row(k + 1, 1.0);
    for (size_t j = 0; j < m; ++j) {
      const size_t idx = order[j].second;
      const double w = std::exp(-order[j].first / (2.0 * band * band));
      for (size_t d = 0; d < k; ++d) row[d + 1] = train_embedding_(idx, d);
      for (size_t p = 0; p <= k; ++p) {
        for (size_t q = 0; q <= k; ++q) g(p, q) += w * row[p] * row[q];
        for (size_t c = 0; c < genes; ++c) rhs(p, c) += w * row[p] * x_train_(idx, c);
      }
    }
    double diag_mean = 0.0;
    for (size_t p = 0; p <= k; ++p) diag_mean += g(p, p);
    diag_mean /= static_cast<double>(k + 1);
    const Matrix beta = solve_spd(g, rhs, 1e-6 * std::max(diag_mean, 1e-12));
    for (size_t c = 0; c < genes; ++c) {
      double v = beta(0, c);
      for (size_t d = 0; d < k; ++d) v += z(r, d) * beta(d + 1, c);
      out(r, c) = v;
    }
  }
  return out;
}

}  // namespace lbm
