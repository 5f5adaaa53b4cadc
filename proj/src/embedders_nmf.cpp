#include <algorithm>
#include <cmath>
#include <memory>

#include "lbm/embedder.hpp"
#include "lbm/error.hpp"
#include "lbm/linalg.hpp"

namespace lbm {

namespace {

constexpr double kEpsFloor = 1e-9;   // keeps factors strictly positive
constexpr double kDenomEps = 1e-12;  // guards the multiplicative denominators

// Nonnegative double SVD initialization (positive/negative part splitting),
// zeros floored at kEpsFloor.
void nndsvd_init(const Matrix& x, size_t k, Matrix& w, Matrix& h) {
  const SvdResult s = svd(x);
  const size_t n = x.rows();
  const size_t m = x.cols();
  w = Matrix(n, k);
  h = Matrix(k, m);

  // Leading singular pair of a nonnegative matrix can be taken nonnegative.
  for (size_t i = 0; i < n; ++i) w(i, 0) = std::sqrt(s.s[0]) * std::fabs(s.u(i, 0));
  for (size_t j = 0; j < m; ++j) h(0, j) = std::sqrt(s.s[0]) * std::fabs(s.v(j, 0));

  for (size_t c = 1; c < k; ++c) {
    double up_norm = 0.0, un_norm = 0.0, vp_norm = 0.0, vn_norm = 0.0;
    for (size_t i = 0; i < n; ++i) {
      const double u = s.u(i, c);
      (u > 0.0 ? up_norm : un_norm) += u * u;
    }
    for (size_t j = 0; j < m; ++j) {
      const double v = s.v(j, c);
      (v > 0.0 ? vp_norm : vn_norm) += v * v;
    }
    up_norm = std::sqrt(up_norm);
    un_norm = std::sqrt(un_norm);
    vp_norm = std::sqrt(vp_norm);
    vn_norm = std::sqrt(vn_norm);

    const double pos = up_norm * vp_norm;
    const double neg = un_norm * vn_norm;
    const bool use_pos = pos >= neg;
    const double norm_u = use_pos ? up_norm : un_norm;
    const double norm_v = use_pos ? vp_norm : vn_norm;
    const double sigma = std::sqrt(s.s[c] * (use_pos ? pos : neg));
    for (size_t i = 0; i < n; ++i) {
      const double u = s.u(i, c);
      const double part = use_pos ? std::max(u, 0.0) : std::max(-u, 0.0);
      w(i, c) = norm_u > 0.0 ? sigma * part / norm_u : 0.0;
    }
    for (size_t j = 0; j < m; ++j) {
      const double v = s.v(j, c);
      const double part = use_pos ? std::max(v, 0.0) : std::max(-v, 0.0);
      h(c, j) = norm_v > 0.0 ? sigma * part / norm_v : 0.0;
    }
  }
  for (size_t i = 0; i < w.size(); ++i) w.data()[i] = std::max(w.data()[i], kEpsFloor);
  for (size_t i = 0; i < h.size(); ++i) h.data()[i] = std::max(h.data()[i], kEpsFloor);
}

// One Lee-Seung step on W with H fixed: W *= (X H') / (W H H').
void update_w(const Matrix& x, Matrix& w, const Matrix& h) {
  const Matrix xht = matmul_a_bt(x, h);
  const Matrix hht = matmul_a_bt(h, h);
  const Matrix whht = matmul(w, hht);
  for (size_t i = 0; i < w.size(); ++i) {
    const double updated = w.data()[i] * xht.data()[i] / (whht.data()[i] + kDenomEps);
    w.data()[i] = std::max(updated, kEpsFloor);
  }
}

void update_h(const Matrix& x, const Matrix& w, Matrix& h) {
  const Matrix wtx = matmul_at_b(w, x);
  const Matrix wtw = matmul_at_b(w, w);
  const Matrix wtwh = matmul(wtw, h);
  for (size_t i = 0; i < h.size(); ++i) {
    const double updated = h.data()[i] * wtx.data()[i] / (wtwh.data()[i] + kDenomEps);
    h.data()[i] = std::max(updated, kEpsFloor);
  }
}

double sq_residual(const Matrix& x, const Matrix& w, const Matrix& h) {
  const Matrix wh = matmul(w, h);
  double s = 0.0;
  for (size_t i = 0; i < x.size(); ++i) {
    const double d = x.data()[i] - wh.data()[i];
    s += d * d;
  }
  return s;
}

}  // namespace

std::unique_ptr<NmfModel> nmf_fit(const Matrix& x_train, size_t k, size_t max_iters,
                                  double tol) {
  if (x_train.rows() == 0 || x_train.cols() == 0)
    throw InvalidInput("nmf_fit: empty matrix");
  if (k == 0) throw InvalidInput("nmf_fit: k must be >= 1");
  for (size_t i = 0; i < x_train.size(); ++i)
    if (x_train.data()[i] < 0.0)
      throw InvalidInput("nmf_fit: input must be nonnegative");

  EmbedderSpec spec;
  spec.method = Method::nmf;
  spec.latent_dim = k;
  spec.params.nmf_max_iters = max_iters;
  spec.params.nmf_tol = tol;
  auto model = std::unique_ptr<NmfModel>(new NmfModel(std::move(spec)));
  model->x_train_ = x_train;

  nndsvd_init(x_train, k, model->w_, model->h_);
  double prev = sq_residual(x_train, model->w_, model->h_);
  model->objective_trace_.push_back(prev);
  for (size_t it = 0; it < max_iters; ++it) {
    update_w(x_train, model->w_, model->h_);
    update_h(x_train, model->w_, model->h_);
    const double cur = sq_residual(x_train, model->w_, model->h_);
    model->objective_trace_.push_back(cur);
    if (prev > 0.0 && std::fabs(prev - cur) / prev < tol) break;
    prev = cur;
  }
  return model;
}

Matrix NmfModel::transform(const Matrix& x) const {
  if (x.cols() != h_.cols()) throw InvalidInput("nmf transform: column count mismatch");
  if (x == x_train_) return w_;  // fitted factor for the training set

  // Solve for W with H fixed, warm-started from a diagonal least-squares
  // guess, then the same multiplicative update as the fit.
  const Matrix hht = matmul_a_bt(h_, h_);
  Matrix w(x.rows(), h_.rows());
  const Matrix xht = matmul_a_bt(x, h_);
  for (size_t i = 0; i < w.rows(); ++i)
    for (size_t j = 0; j < w.cols(); ++j)
      w(i, j) = std::max(xht(i, j) / (hht(j, j) + kDenomEps), kEpsFloor);
  double prev = sq_residual(x, w, h_);
  for (size_t it = 0; it < spec_.params.nmf_max_iters; ++it) {
    update_w(x, w, h_);
    const double cur = sq_residual(x, w, h_);
    if (prev > 0.0 && std::fabs(prev - cur) / prev < spec_.params.nmf_tol) break;
    prev = cur;
  }
  return w;
}

Matrix NmfModel::inverse_raw(const Matrix& z) const {
  if (z.cols() != h_.rows()) throw InvalidInput("nmf inverse: latent dimension mismatch");
  return matmul(z, h_);
}

}  // namespace lbm
