#include <algorithm>
#include <cmath>
#include <iostream>
#include <limits>
#include <memory>
#include <numeric>

#include "lbm/embedder.hpp"
#include "lbm/error.hpp"
#include "lbm/linalg.hpp"
#include "lbm/rng.hpp"

namespace lbm {

namespace tsne {

ConditionalResult conditional_affinities(const Matrix& sq_dists, double perplexity) {
  const size_t n = sq_dists.rows();
  if (sq_dists.cols() != n) throw InvalidInput("conditional_affinities: matrix not square");
  if (n < 2) throw InvalidInput("conditional_affinities: need at least 2 points");
  if (perplexity <= 0.0) throw InvalidInput("conditional_affinities: perplexity must be > 0");

  // A row over n-1 neighbors cannot exceed perplexity n-1.
  const double target = std::min(perplexity, static_cast<double>(n - 1));
  const double log_target = std::log(target);

  ConditionalResult out;
  out.p_cond = Matrix(n, n);
  out.betas.assign(n, 1.0);
  std::vector<double> row(n);

  for (size_t i = 0; i < n; ++i) {
    double beta = 1.0;
    double beta_lo = 0.0;
    double beta_hi = std::numeric_limits<double>::infinity();
    bool ok = false;
    for (int step = 0; step < 500; ++step) {
      double sum = 0.0, weighted = 0.0;
      for (size_t j = 0; j < n; ++j) {
        if (j == i) {
          row[j] = 0.0;
          continue;
        }
        row[j] = std::exp(-beta * sq_dists(i, j));
        sum += row[j];
        weighted += sq_dists(i, j) * row[j];
      }
      if (sum <= 0.0) {  // all mass underflowed; lower beta
        beta_hi = beta;
        beta = 0.5 * (beta_lo + beta);
        continue;
      }
      const double entropy = std::log(sum) + beta * weighted / sum;
      // |exp(entropy) - target| < 1e-3 is what callers rely on; converge
      // in log space with margin.
      if (std::fabs(entropy - log_target) < 1e-4 / target) {
        ok = true;
        break;
      }
      if (entropy > log_target) {
        beta_lo = beta;
        beta = std::isinf(beta_hi) ? beta * 2.0 : 0.5 * (beta_lo + beta_hi);
      } else {
        beta_hi = beta;
        beta = 0.5 * (beta_lo + beta_hi);
      }
    }
    if (!ok) {
      std::cerr << "warning: perplexity " << target << " infeasible for row " << i
                << "; using uniform affinities\n";
      const double u = 1.0 / static_cast<double>(n - 1);
      for (size_t j = 0; j < n; ++j) out.p_cond(i, j) = (j == i) ? 0.0 : u;
      out.betas[i] = beta;
      continue;
    }
    double sum = 0.0;
    for (size_t j = 0; j < n; ++j) sum += row[j];
    for (size_t j = 0; j < n; ++j) out.p_cond(i, j) = row[j] / sum;
    out.betas[i] = beta;
  }
  return out;
}

Matrix symmetrize_affinities(const Matrix& p_cond) {
  const size_t n = p_cond.rows();
  if (p_cond.cols() != n) throw InvalidInput("symmetrize_affinities: matrix not square");
  Matrix p(n, n);
  const double scale = 1.0 / (2.0 * static_cast<double>(n));
  for (size_t i = 0; i < n; ++i)
    for (size_t j = 0; j < n; ++j) p(i, j) = (p_cond(i, j) + p_cond(j, i)) * scale;
  return p;
}

namespace {

// Student-t weights w_ij = 1/(1 + |y_i - y_j|^2) and their total.
Matrix student_weights(const Matrix& y, double* total) {
  const Matrix d2 = pairwise_sq_dists(y);
  const size_t n = y.rows();
  Matrix w(n, n);
  double z = 0.0;
  for (size_t i = 0; i < n; ++i)
    for (size_t j = 0; j < n; ++j) {
      if (i == j) continue;
      w(i, j) = 1.0 / (1.0 + d2(i, j));
      z += w(i, j);
    }
  *total = z;
  return w;
}

}  // namespace

double kl_divergence(const Matrix& p, const Matrix& y) {
  double z = 0.0;
  const Matrix w = student_weights(y, &z);
  const size_t n = y.rows();
  double kl = 0.0;
  for (size_t i = 0; i < n; ++i)
    for (size_t j = 0; j < n; ++j) {
      if (i == j || p(i, j) <= 0.0) continue;
      const double q = std::max(w(i, j) / z, 1e-300);
      kl += p(i, j) * std::log(p(i, j) / q);
    }
  return kl;
}

Matrix kl_gradient(const Matrix& p, const Matrix& y) {
  double z = 0.0;
  const Matrix w = student_weights(y, &z);
  const size_t n = y.rows();
  const size_t k = y.cols();
  Matrix grad(n, k);
  for (size_t i = 0; i < n; ++i)
    for (size_t j = 0; j < n; ++j) {
      if (i == j) continue;
      const double coeff = 4.0 * (p(i, j) - w(i, j) / z) * w(i, j);
      for (size_t d = 0; d < k; ++d) grad(i, d) += coeff * (y(i, d) - y(j, d));
    }
  return grad;
}

}  // namespace tsne

std::unique_ptr<TsneModel> tsne_fit(const Matrix& x_train, size_t k, double perplexity,
                                    uint64_t seed, const EmbedderParams& params) {
  const size_t n = x_train.rows();
  if (static_cast<double>(n) <= 3.0 * perplexity)
    throw InvalidInput("tsne_fit: need more than 3*perplexity rows");
  if (k == 0) throw InvalidInput("tsne_fit: k must be >= 1");

  EmbedderSpec spec;
  spec.method = Method::tsne;
  spec.latent_dim = k;
  spec.seed = seed;
  spec.params = params;
  spec.params.tsne_perplexity = perplexity;
  auto model = std::unique_ptr<TsneModel>(new TsneModel(std::move(spec)));
  model->x_train_ = x_train;

  const Matrix d2 = pairwise_sq_dists(x_train);
  model->p_ = tsne::symmetrize_affinities(
      tsne::conditional_affinities(d2, perplexity).p_cond);

  const size_t iters = params.tsne_iters;
  const double lr = params.tsne_learning_rate > 0.0
                        ? params.tsne_learning_rate
                        : std::max(static_cast<double>(n) / 48.0, 50.0);

  Rng rng(mix_seed(seed, "tsne_init"));
  Matrix y(n, k);
  for (size_t i = 0; i < y.size(); ++i) y.data()[i] = 1e-4 * rng.normal();

  Matrix p_ex = model->p_;
  for (size_t i = 0; i < p_ex.size(); ++i) p_ex.data()[i] *= 12.0;

  Matrix velocity(n, k);
  for (size_t it = 0; it < iters; ++it) {
    const bool exaggerate = it < 250;
    const double momentum = it < 250 ? 0.5 : 0.8;
    const Matrix grad = tsne::kl_gradient(exaggerate ? p_ex : model->p_, y);
    for (size_t i = 0; i < y.size(); ++i) {
      velocity.data()[i] = momentum * velocity.data()[i] - lr * grad.data()[i];
      y.data()[i] += velocity.data()[i];
    }
    // recenter so the embedding does not drift
    const std::vector<double> mean = col_means(y);
    for (size_t i = 0; i < n; ++i)
      for (size_t d = 0; d < k; ++d) y(i, d) -= mean[d];
  }
  model->train_embedding_ = y;
  return model;
}

Matrix TsneModel::transform(const Matrix& x) const {
  if (x.cols() != x_train_.cols()) throw InvalidInput("tsne transform: column count mismatch");
  if (x == x_train_) return train_embedding_;

  // Out-of-sample rule: inverse-distance interpolation over the nearest
  // training latents.
  const size_t n_train = x_train_.rows();
  const size_t m = std::min<size_t>(30, n_train);
  const size_t k = latent_dim();
  Matrix out(x.rows(), k);
  std::vector<std::pair<double, size_t>> order(n_train);
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
    double wsum = 0.0;
    std::vector<double> acc(k, 0.0);
    for (size_t j = 0; j < m; ++j) {
      const double w = 1.0 / (std::sqrt(order[j].first) + 1e-12);
      wsum += w;
      for (size_t d = 0; d < k; ++d) acc[d] += w * train_embedding_(order[j].second, d);
    }
    for (size_t d = 0; d < k; ++d) out(r, d) = acc[d] / wsum;
  }
  return out;
}

}  // namespace lbm
