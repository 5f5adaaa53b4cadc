#include <cmath>
#include <memory>

#include "lbm/embedder.hpp"
#include "lbm/error.hpp"
#include "lbm/linalg.hpp"

namespace lbm {

namespace {

Matrix rbf_kernel(const Matrix& a, const Matrix& b, double gamma) {
  // K(i,j) = exp(-gamma * ||a_i - b_j||^2)
  Matrix k(a.rows(), b.rows());
  for (size_t i = 0; i < a.rows(); ++i) {
    const double* ai = a.data() + i * a.cols();
    for (size_t j = 0; j < b.rows(); ++j) {
      const double* bj = b.data() + j * b.cols();
      double acc = 0.0;
      for (size_t c = 0; c < a.cols(); ++c) {
        const double d = ai[c] - bj[c];
        acc += d * d;
      }
      k(i, j) = std::exp(-gamma * acc);
    }
  }
  return k;
}

}  // namespace

Matrix double_center(const Matrix& gram) {
  const size_t n = gram.rows();
  if (n != gram.cols()) throw InvalidInput("double_center: matrix must be square");
  std::vector<double> row_mean(n, 0.0);
  double total = 0.0;
  for (size_t i = 0; i < n; ++i) {
    for (size_t j = 0; j < n; ++j) row_mean[i] += gram(i, j);
    total += row_mean[i];
    row_mean[i] /= static_cast<double>(n);
  }
  total /= static_cast<double>(n) * static_cast<double>(n);
  Matrix out(n, n);
  for (size_t i = 0; i < n; ++i)
    for (size_t j = 0; j < n; ++j)
      out(i, j) = gram(i, j) - row_mean[i] - row_mean[j] + total;
  return out;
}

std::unique_ptr<KpcaModel> kpca_fit(const Matrix& x_train, size_t k, double gamma,
                                    double ridge) {
  const size_t n = x_train.rows();
  if (n < 2) throw InvalidInput("kpca_fit: need at least 2 rows");
  if (k == 0 || k > n - 1)
    throw InvalidInput("kpca_fit: k must satisfy 1 <= k <= rows-1");
  if (gamma <= 0.0) gamma = 1.0 / static_cast<double>(x_train.cols());

  EmbedderSpec spec;
  spec.method = Method::kpca;
  spec.latent_dim = k;
  spec.params.kpca_gamma = gamma;
  spec.params.kpca_ridge = ridge;
  auto model = std::unique_ptr<KpcaModel>(new KpcaModel(std::move(spec)));
  model->x_train_ = x_train;
  model->gamma_ = gamma;

  const Matrix gram = rbf_kernel(x_train, x_train, gamma);
  model->row_means_.assign(n, 0.0);
  model->total_mean_ = 0.0;
  for (size_t i = 0; i < n; ++i) {
    for (size_t j = 0; j < n; ++j) model->row_means_[i] += gram(i, j);
    model->total_mean_ += model->row_means_[i];
    model->row_means_[i] /= static_cast<double>(n);
  }
  model->total_mean_ /= static_cast<double>(n) * static_cast<double>(n);

  const Matrix centered = double_center(gram);
  const EigResult eig = sym_eig(centered);

  // RBF Gram matrices are PSD; anything materially negative after centering
  // signals a numerical breakdown.
  const double floor = -1e-8 * std::max(1.0, std::fabs(eig.values.front()));
  if (eig.values.back() < floor)
    throw NumericalFailure("kpca_fit: centered Gram matrix is not PSD");
  if (eig.values[k - 1] <= 0.0)
    throw NumericalFailure("kpca_fit: requested components exceed the Gram rank");

  model->eigenvalues_.assign(eig.values.begin(), eig.values.begin() + k);
  model->alphas_ = Matrix(n, k);
  for (size_t i = 0; i < n; ++i)
    for (size_t j = 0; j < k; ++j) model->alphas_(i, j) = eig.vectors(i, j);

  // Train latent: z_ij = sqrt(lambda_j) * alpha_ij.
  model->train_latent_ = Matrix(n, k);
  for (size_t i = 0; i < n; ++i)
    for (size_t j = 0; j < k; ++j)
      model->train_latent_(i, j) = std::sqrt(model->eigenvalues_[j]) * model->alphas_(i, j);

  // Pre-image: ridge regression from the train latent back to input space.
  model->latent_means_ = col_means(model->train_latent_);
  Matrix zc = model->train_latent_;
  for (size_t i = 0; i < n; ++i)
    for (size_t j = 0; j < k; ++j) zc(i, j) -= model->latent_means_[j];
  const std::vector<double> x_means = col_means(x_train);
  Matrix xc = x_train;
  for (size_t i = 0; i < n; ++i)
    for (size_t j = 0; j < xc.cols(); ++j) xc(i, j) -= x_means[j];

  const Matrix ztz = matmul_at_b(zc, zc);
  const Matrix ztx = matmul_at_b(zc, xc);
  model->preimage_weights_ = solve_spd(ztz, ztx, ridge);
  model->preimage_bias_ = x_means;
  for (size_t j = 0; j < xc.cols(); ++j)
    for (size_t a = 0; a < k; ++a)
      model->preimage_bias_[j] -= model->latent_means_[a] * model->preimage_weights_(a, j);

  return model;
}

Matrix KpcaModel::transform(const Matrix& x) const {
  if (x.cols() != x_train_.cols()) throw InvalidInput("kpca transform: column count mismatch");
  const size_t n = x_train_.rows();
  const size_t k = latent_dim();
  const Matrix kx = rbf_kernel(x, x_train_, gamma_);

  Matrix out(x.rows(), k);
  for (size_t r = 0; r < x.rows(); ++r) {
    double kx_mean = 0.0;
    for (size_t i = 0; i < n; ++i) kx_mean += kx(r, i);
    kx_mean /= static_cast<double>(n);
    // Centered cross-kernel row, projected onto alpha / sqrt(lambda).
    for (size_t j = 0; j < k; ++j) {
      double acc = 0.0;
      for (size_t i = 0; i < n; ++i) {
        const double centered = kx(r, i) - row_means_[i] - kx_mean + total_mean_;
        acc += centered * alphas_(i, j);
      }
      out(r, j) = acc / std::sqrt(eigenvalues_[j]);
    }
  }
  return out;
}

Matrix KpcaModel::inverse_raw(const Matrix& z) const {
  if (z.cols() != latent_dim()) throw InvalidInput("kpca inverse: latent dimension mismatch");
  Matrix x = matmul(z, preimage_weights_);
  for (size_t i = 0; i < x.rows(); ++i)
    for (size_t j = 0; j < x.cols(); ++j) x(i, j) += preimage_bias_[j];
  return x;
}

}  // namespace lbm
