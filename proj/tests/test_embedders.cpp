#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>
#include <vector>

#include "doctest.h"
#include "lbm/dataio.hpp"
#include "lbm/embedder.hpp"
#include "lbm/error.hpp"
#include "lbm/linalg.hpp"
#include "lbm/matrix.hpp"
#include "lbm/rng.hpp"
#include "testutil.hpp"

using namespace lbm;

namespace {

Matrix random_matrix(size_t rows, size_t cols, uint64_t seed) {
  Rng rng(seed);
  return gaussian_matrix(rows, cols, rng);
}

Matrix random_positive(size_t rows, size_t cols, uint64_t seed) {
  Rng rng(seed);
  Matrix m(rows, cols);
  for (size_t i = 0; i < m.size(); ++i) m.data()[i] = 0.05 + 0.9 * rng.uniform();
  return m;
}

}  // namespace

TEST_CASE("pca reconstructs collinear data exactly with one component") {
  const Matrix x = Matrix::from_rows({{0, 0}, {1, 1}, {2, 2}});
  const auto m = pca_fit(x, 1);
  const Matrix rec = m->inverse_raw(m->transform(x));  // raw: (2,2) lies outside [0,1]
  CHECK(rmse_all(rec, x) < 1e-10);
}

TEST_CASE("pca components are orthonormal and the mean row maps to zero") {
  const Matrix x = random_matrix(30, 6, 404);
  const auto m = pca_fit(x, 4);
  const Matrix& v = m->components();
  REQUIRE(v.rows() == 6);
  REQUIRE(v.cols() == 4);
  for (size_t i = 0; i < 4; ++i)
    for (size_t j = i; j < 4; ++j) {
      double dot = 0.0;
      for (size_t r = 0; r < 6; ++r) dot += v(r, i) * v(r, j);
      CHECK(std::fabs(dot - (i == j ? 1.0 : 0.0)) < 1e-9);
    }

  Matrix mean_row(1, 6);
  for (size_t g = 0; g < 6; ++g) mean_row(0, g) = m->mean()[g];
  const Matrix z = m->transform(mean_row);
  for (size_t j = 0; j < 4; ++j) CHECK(z(0, j) == 0.0);
}

TEST_CASE("pca latent variances equal the covariance eigenvalues") {
  const Matrix x = random_matrix(50, 8, 405);
  const auto m = pca_fit(x, 8);
  const Matrix z = m->transform(x);

  const std::vector<double> mu = col_means(x);
  Matrix cov(8, 8);
  for (size_t a = 0; a < 8; ++a)
    for (size_t b = a; b < 8; ++b) {
      double acc = 0.0;
      for (size_t i = 0; i < 50; ++i) acc += (x(i, a) - mu[a]) * (x(i, b) - mu[b]);
      cov(a, b) = cov(b, a) = acc / 49.0;
    }
  const std::vector<double> lambda = testutil::charpoly_eigs(cov);

  const std::vector<double> zmu = col_means(z);
  for (size_t j = 0; j < 8; ++j) {
    double var = 0.0;
    for (size_t i = 0; i < 50; ++i) var += (z(i, j) - zmu[j]) * (z(i, j) - zmu[j]);
    var /= 49.0;
    CHECK(std::fabs(var - lambda[j]) <= 1e-8 * std::fabs(lambda[0]));
  }
}

TEST_CASE("pca at full rank is lossless and rejects oversized k") {
  const Matrix x = random_matrix(12, 5, 406);
  const auto m = pca_fit(x, 5);
  const Matrix rec = m->inverse_raw(m->transform(x));  // raw: x is not in [0,1]
  CHECK(max_abs(rec - x) < 1e-9);

  CHECK_THROWS_AS(pca_fit(x, 6), InvalidInput);
  CHECK_THROWS_AS(pca_fit(random_matrix(3, 8, 1), 3), InvalidInput);  // k > rows-1
}

TEST_CASE("pca reconstruction rmse is nonincreasing in k") {
  SynthSpec spec;
  spec.n_voxels = 80;
  spec.n_genes = 20;
  spec.intrinsic_dim = 4;
  spec.noise_sd = 0.05;
  spec.seed = 12;
  const Matrix x = synth_dataset(spec).dataset.values;
  const SplitIndex si = split(80, 2);
  const Matrix xtr = select_rows(x, si.train_rows);
  const Matrix xte = select_rows(x, si.test_rows);
  double prev = 1e300;
  for (size_t k : {1, 2, 4, 8, 16}) {
    const auto m = pca_fit(xtr, k);
    const double r = rmse_all(inverse(*m, m->transform(xte)), xte);
    CHECK(r <= prev + 1e-12);
    prev = r;
  }
}

TEST_CASE("kpca double-centered gram rows sum to zero") {
  const Matrix x = random_matrix(15, 4, 500);
  const Matrix d = pairwise_sq_dists(x);
  Matrix k(15, 15);
  for (size_t i = 0; i < 15; ++i)
    for (size_t j = 0; j < 15; ++j) k(i, j) = std::exp(-0.25 * d(i, j));
  const Matrix kc = double_center(k);
  for (size_t i = 0; i < 15; ++i) {
    double row = 0.0, col = 0.0;
    for (size_t j = 0; j < 15; ++j) {
      row += kc(i, j);
      col += kc(j, i);
    }
    CHECK(std::fabs(row) < 1e-9);
    CHECK(std::fabs(col) < 1e-9);
  }
}

TEST_CASE("kpca gives duplicate training points identical latents") {
  Matrix x = random_matrix(10, 3, 501);
  for (size_t c = 0; c < 3; ++c) x(7, c) = x(2, c);
  const auto m = kpca_fit(x, 3, 0.5, 1.0);
  const Matrix& z = m->train_latent();
  for (size_t j = 0; j < 3; ++j) CHECK(std::fabs(z(7, j) - z(2, j)) < 1e-9);
}

TEST_CASE("kpca 6-point latent matches the centered-gram eigen solution") {
  const Matrix x = random_matrix(6, 3, 502);
  const double gamma = 0.7;
  const auto m = kpca_fit(x, 2, gamma, 1.0);

  const Matrix d = pairwise_sq_dists(x);
  Matrix k(6, 6);
  for (size_t i = 0; i < 6; ++i)
    for (size_t j = 0; j < 6; ++j) k(i, j) = std::exp(-gamma * d(i, j));
  const EigResult eig = sym_eig(double_center(k));

  // latent column j = sqrt(lambda_j) * eigenvector_j, up to sign
  const Matrix& z = m->train_latent();
  for (size_t j = 0; j < 2; ++j) {
    const double scale = std::sqrt(eig.values[j]);
    double plus = 0.0, minus = 0.0;
    for (size_t i = 0; i < 6; ++i) {
      plus = std::max(plus, std::fabs(z(i, j) - scale * eig.vectors(i, j)));
      minus = std::max(minus, std::fabs(z(i, j) + scale * eig.vectors(i, j)));
    }
    CHECK(std::min(plus, minus) < 1e-8);
  }
}

TEST_CASE("kpca transform of a training point reproduces its fitted latent") {
  const Matrix x = random_matrix(25, 5, 503);
  const auto m = kpca_fit(x, 3, 0.0, 1.0);  // gamma 0 -> auto 1/n_genes
  CHECK(m->gamma() == doctest::Approx(1.0 / 5.0).epsilon(1e-15));
  const Matrix z = m->transform(x);
  const Matrix& stored = m->train_latent();
  for (size_t i = 0; i < 25; ++i)
    for (size_t j = 0; j < 3; ++j) CHECK(std::fabs(z(i, j) - stored(i, j)) < 1e-8);
}

TEST_CASE("kpca inverse is a usable pre-image on smooth data") {
  SynthSpec spec;
  spec.n_voxels = 90;
  spec.n_genes = 15;
  spec.intrinsic_dim = 2;
  spec.noise_sd = 0.01;
  spec.seed = 44;
  const Matrix x = synth_dataset(spec).dataset.values;
  const auto m = kpca_fit(x, 4, 0.0, 1.0);
  const Matrix rec = inverse(*m, m->transform(x));
  REQUIRE(rec.rows() == 90);
  REQUIRE(rec.cols() == 15);
  for (double v : rec.values()) {
    CHECK(v >= 0.0);
    CHECK(v <= 1.0);
  }
  CHECK(rmse_all(rec, x) < 0.12);  // loose: the regressor tracks the manifold
}

TEST_CASE("nmf factors are nonnegative and recover a rank-1 positive matrix") {
  std::vector<double> u{1.0, 2.0, 0.5, 1.5, 3.0, 0.25};
  std::vector<double> v{0.7, 0.2, 1.1, 0.9};
  Matrix x(6, 4);
  for (size_t i = 0; i < 6; ++i)
    for (size_t j = 0; j < 4; ++j) x(i, j) = u[i] * v[j];

  const auto m = nmf_fit(x, 1, 500, 0.0);
  for (double w : m->w().values()) CHECK(w >= 0.0);
  for (double h : m->h().values()) CHECK(h >= 0.0);
  const Matrix rec = matmul(m->w(), m->h());
  CHECK(frobenius_distance(rec, x) / frobenius_norm(x) < 1e-6);
}

TEST_CASE("nmf objective is nonincreasing over 200 iterations") {
  for (uint64_t seed : {600, 601}) {
    const Matrix x = random_positive(40, 12, seed);
    const auto m = nmf_fit(x, 4, 200, 0.0);  // tol 0 keeps all 200 iterations
    const auto& trace = m->objective_trace();
    CHECK(trace.size() >= 100);
    for (size_t i = 1; i < trace.size(); ++i) CHECK(trace[i] <= trace[i - 1] + 1e-12);
  }
}

TEST_CASE("nmf transform of the training set returns the fitted w") {
  const Matrix x = random_positive(20, 8, 602);
  const auto m = nmf_fit(x, 3, 150, 1e-7);
  CHECK(m->transform(x) == m->w());  // bitwise: training data short-circuits
}

TEST_CASE("nmf inverse residual agrees with the objective bookkeeping") {
  const Matrix x = random_positive(25, 10, 603);
  const auto m = nmf_fit(x, 4, 200, 0.0);
  const Matrix rec = m->inverse_raw(m->transform(x));
  double sq = 0.0;
  for (size_t i = 0; i < x.rows(); ++i) {
    double row = 0.0;
    for (size_t j = 0; j < x.cols(); ++j) {
      const double diff = x(i, j) - rec(i, j);
      row += diff * diff;
    }
    sq += row;
  }
  CHECK(std::fabs(sq - m->objective_trace().back()) < 1e-8);
}

TEST_CASE("nmf transform solves fresh rows against the fixed h") {
  const Matrix x = random_positive(30, 8, 604);
  const auto m = nmf_fit(x, 3, 200, 1e-9);
  const Matrix xnew = random_positive(5, 8, 605);
  const Matrix z = m->transform(xnew);
  REQUIRE(z.rows() == 5);
  REQUIRE(z.cols() == 3);
  for (double v : z.values()) CHECK(v >= 0.0);
  // the solved code reconstructs new rows about as well as a from-scratch fit
  const Matrix rec = m->inverse_raw(z);
  CHECK(rmse_all(rec, xnew) < 0.45);
  CHECK_THROWS_AS(m->transform(random_positive(3, 9, 1)), InvalidInput);
  CHECK_THROWS_AS(nmf_fit(random_matrix(6, 4, 2), 2, 10, 0.0), InvalidInput);  // negatives
}

TEST_CASE("embedder fits are deterministic") {
  const Matrix x = random_positive(30, 10, 700);
  const auto p1 = pca_fit(x, 3), p2 = pca_fit(x, 3);
  CHECK(p1->transform(x) == p2->transform(x));
  const auto k1 = kpca_fit(x, 3, 0.0, 1.0), k2 = kpca_fit(x, 3, 0.0, 1.0);
  CHECK(k1->train_latent() == k2->train_latent());
  const auto n1 = nmf_fit(x, 3, 50, 0.0), n2 = nmf_fit(x, 3, 50, 0.0);
  CHECK(n1->w() == n2->w());
  CHECK(n1->h() == n2->h());
}

TEST_CASE("inverse clips into [0,1] and respects capabilities") {
  const Matrix x = random_positive(20, 6, 701);
  const auto m = pca_fit(x, 2);
  const Matrix z = m->transform(1.5 * x);  // push reconstructions out of range
  const Matrix rec = inverse(*m, z);
  for (double v : rec.values()) {
    CHECK(v >= 0.0);
    CHECK(v <= 1.0);
  }
  CHECK(method_from_name("kpca") == Method::kpca);
  CHECK(method_name(Method::umap) == "umap");
  CHECK_THROWS_AS(method_from_name("pcax"), InvalidInput);
}
