#include "lbm/embedder.hpp"

#include <algorithm>
#include <cmath>

#include "lbm/error.hpp"
#include "lbm/linalg.hpp"

namespace lbm {

std::string method_name(Method m) {
  switch (m) {
    case Method::pca: return "pca";
    case Method::kpca: return "kpca";
    case Method::nmf: return "nmf";
    case Method::tsne: return "tsne";
    case Method::umap: return "umap";
    case Method::ae: return "ae";
  }
  throw InvalidInput("method_name: unknown method");
}

Method method_from_name(const std::string& name) {
  if (name == "pca") return Method::pca;
  if (name == "kpca") return Method::kpca;
  if (name == "nmf") return Method::nmf;
  if (name == "tsne") return Method::tsne;
  if (name == "umap") return Method::umap;
  if (name == "ae") return Method::ae;
  throw InvalidInput("unknown method: " + name);
}

Matrix Embedder::inverse_raw(const Matrix&) const {
  throw UnsupportedOperation(name() + ": no inverse transform implementation is available");
}

Matrix transform(const Embedder& model, const Matrix& x) {
  if (!model.can_transform_new())
    throw UnsupportedOperation(model.name() + ": cannot transform new points");
  return model.transform(x);
}

Matrix inverse(const Embedder& model, const Matrix& z) {
  if (!model.can_inverse())
    throw UnsupportedOperation(model.name() + ": no inverse transform implementation is available");
  if (z.cols() != model.latent_dim())
    throw InvalidInput(model.name() + ": latent dimension mismatch");
  return clip01(model.inverse_raw(z));
}

// ---------------------------------------------------------------------------
// PCA

PcaModel::PcaModel(EmbedderSpec spec, std::vector<double> mean, Matrix components,
                   std::vector<double> singular_values)
    : Embedder(std::move(spec)),
      mean_(std::move(mean)),
      components_(std::move(components)),
      singular_values_(std::move(singular_values)) {}

std::unique_ptr<PcaModel> pca_fit(const Matrix& x_train, size_t k) {
  if (x_train.rows() < 2) throw InvalidInput("pca_fit: need at least 2 rows");
  if (k == 0 || k > std::min(x_train.rows() - 1, x_train.cols()))
    throw InvalidInput("pca_fit: k must satisfy 1 <= k <= min(rows-1, cols)");

  std::vector<double> mu = col_means(x_train);
  Matrix centered = x_train;
  for (size_t i = 0; i < centered.rows(); ++i)
    for (size_t j = 0; j < centered.cols(); ++j) centered(i, j) -= mu[j];

  const SvdResult s = svd(centered);
  Matrix components(x_train.cols(), k);
  std::vector<double> sv(k);
  for (size_t j = 0; j < k; ++j) {
    sv[j] = s.s[j];
    for (size_t i = 0; i < x_train.cols(); ++i) components(i, j) = s.v(i, j);
  }
  EmbedderSpec spec;
  spec.method = Method::pca;
  spec.latent_dim = k;
  return std::make_unique<PcaModel>(std::move(spec), std::move(mu),
                                    std::move(components), std::move(sv));
}

Matrix PcaModel::transform(const Matrix& x) const {
  if (x.cols() != mean_.size()) throw InvalidInput("pca transform: column count mismatch");
  Matrix centered = x;
  for (size_t i = 0; i < centered.rows(); ++i)
    for (size_t j = 0; j < centered.cols(); ++j) centered(i, j) -= mean_[j];
  return matmul(centered, components_);
}

Matrix PcaModel::inverse_raw(const Matrix& z) const {
  if (z.cols() != latent_dim()) throw InvalidInput("pca inverse: latent dimension mismatch");
  Matrix x = matmul_a_bt(z, components_);
  for (size_t i = 0; i < x.rows(); ++i)
    for (size_t j = 0; j < x.cols(); ++j) x(i, j) += mean_[j];
  return x;
}

}  // namespace lbm
