#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "lbm/matrix.hpp"

namespace lbm {

enum class Method { pca, kpca, nmf, tsne, umap, ae };

std::string method_name(Method m);
Method method_from_name(const std::string& name);

/// Per-method settings with the benchmark defaults.
struct EmbedderParams {
  double kpca_gamma = 0.0;  // 0 = auto (1 / n_genes)
  double kpca_ridge = 1.0;  // pre-image regressor regularization
  size_t nmf_max_iters = 200;
  double nmf_tol = 1e-6;
  double tsne_perplexity = 30.0;
  size_t tsne_iters = 1000;
  double tsne_learning_rate = 0.0;  // 0 = auto, max(n/48, 50)
  size_t umap_neighbors = 30;
  double umap_min_dist = 0.1;
  size_t umap_epochs = 300;
  size_t umap_spectral_max_n = 2048;  // above this, seeded random init
  // Latent dims up to which the UMAP inverse is attempted; the budget is
  // raised to `umap_inverse_budget_small` for datasets of <= 4096 rows.
  size_t umap_inverse_budget = 2;
  size_t umap_inverse_budget_small = 4;
};

struct EmbedderSpec {
  Method method = Method::pca;
  size_t latent_dim = 2;
  uint64_t seed = 0;
  EmbedderParams params;
};

/// A fitted representation model. `transform` maps data rows to latents;
/// `inverse_raw` maps latents back to input space where the method supports
/// it. The free function `inverse` additionally clips into [0,1], matching
/// the dataset value range.
class Embedder {
 public:
  explicit Embedder(EmbedderSpec spec) : spec_(std::move(spec)) {}
  virtual ~Embedder() = default;

  const EmbedderSpec& spec() const { return spec_; }
  size_t latent_dim() const { return spec_.latent_dim; }
  std::string name() const { return method_name(spec_.method); }

  virtual Matrix transform(const Matrix& x) const = 0;
  virtual Matrix inverse_raw(const Matrix& z) const;
  virtual bool can_transform_new() const { return true; }
  virtual bool can_inverse() const = 0;

 protected:
  EmbedderSpec spec_;
};

/// Capability-checked transform (errors with UnsupportedOperation).
Matrix transform(const Embedder& model, const Matrix& x);

/// Capability-checked inverse; output clipped into [0,1].
Matrix inverse(const Embedder& model, const Matrix& z);

// ---------------------------------------------------------------------------
// PCA

class PcaModel final : public Embedder {
 public:
  PcaModel(EmbedderSpec spec, std::vector<double> mean, Matrix components,
           std::vector<double> singular_values);

  Matrix transform(const Matrix& x) const override;
  Matrix inverse_raw(const Matrix& z) const override;
  bool can_inverse() const override { return true; }

  const std::vector<double>& mean() const { return mean_; }
  const Matrix& components() const { return components_; }  // n_genes x k
  const std::vector<double>& singular_values() const { return singular_values_; }

 private:
  std::vector<double> mean_;
  Matrix components_;
  std::vector<double> singular_values_;
};

std::unique_ptr<PcaModel> pca_fit(const Matrix& x_train, size_t k);

// ---------------------------------------------------------------------------
// RBF kernel PCA

class KpcaModel final : public Embedder {
 public:
  Matrix transform(const Matrix& x) const override;
  Matrix inverse_raw(const Matrix& z) const override;
  bool can_inverse() const override { return true; }

  double gamma() const { return gamma_; }
  const Matrix& train_latent() const { return train_latent_; }
  const std::vector<double>& eigenvalues() const { return eigenvalues_; }

 private:
  friend std::unique_ptr<KpcaModel> kpca_fit(const Matrix&, size_t, double, double);
  using Embedder::Embedder;

  Matrix x_train_;
  double gamma_ = 0.0;
  Matrix alphas_;                    // n x k eigenvectors of the centered Gram
  std::vector<double> eigenvalues_;  // top-k, descending
  std::vector<double> row_means_;    // per-column means of K
  double total_mean_ = 0.0;
  Matrix train_latent_;
  Matrix preimage_weights_;  // k x n_genes ridge regressor
  std::vector<double> preimage_bias_;
  std::vector<double> latent_means_;
};

/// gamma <= 0 selects the default 1 / n_genes.
std::unique_ptr<KpcaModel> kpca_fit(const Matrix& x_train, size_t k,
                                    double gamma = 0.0, double ridge = 1.0);

/// Double-centers a Gram matrix in place: K - rowmean - colmean + totalmean.
Matrix double_center(const Matrix& gram);

// ---------------------------------------------------------------------------
// NMF (multiplicative updates)

class NmfModel final : public Embedder {
 public:
  Matrix transform(const Matrix& x) const override;
  Matrix inverse_raw(const Matrix& z) const override;
  bool can_inverse() const override { return true; }

  const Matrix& w() const { return w_; }
  const Matrix& h() const { return h_; }
  const std::vector<double>& objective_trace() const { return objective_trace_; }

 private:
  friend std::unique_ptr<NmfModel> nmf_fit(const Matrix&, size_t, size_t, double);
  using Embedder::Embedder;

  Matrix x_train_;  // kept so transform(train) can return the fitted W
  Matrix w_;        // n x k
  Matrix h_;        // k x n_genes
  std::vector<double> objective_trace_;  // squared Frobenius residual per iteration
};

std::unique_ptr<NmfModel> nmf_fit(const Matrix& x_train, size_t k,
                                  size_t max_iters = 200, double tol = 1e-6);

// ---------------------------------------------------------------------------
// t-SNE (exact)

class TsneModel final : public Embedder {
 public:
  Matrix transform(const Matrix& x) const override;
  bool can_inverse() const override { return false; }

  const Matrix& train_embedding() const { return train_embedding_; }
  const Matrix& affinities() const { return p_; }

 private:
  friend std::unique_ptr<TsneModel> tsne_fit(const Matrix&, size_t, double,
                                             uint64_t, const EmbedderParams&);
  using Embedder::Embedder;

  Matrix x_train_;
  Matrix p_;  // symmetrized joint affinities
  Matrix train_embedding_;
};

std::unique_ptr<TsneModel> tsne_fit(const Matrix& x_train, size_t k = 2,
                                    double perplexity = 30.0, uint64_t seed = 0,
                                    const EmbedderParams& params = {});

namespace tsne {

/// Conditional affinities p_{j|i}: per-row Gaussian bandwidths found by
/// binary search so every row attains the target perplexity within 1e-3
/// (degenerate rows fall back to uniform with a warning). Returns the
/// row-stochastic matrix and the precisions beta_i = 1/(2 sigma_i^2).
struct ConditionalResult {
  Matrix p_cond;
  std::vector<double> betas;
};
ConditionalResult conditional_affinities(const Matrix& sq_dists, double perplexity);

/// P = (P_cond + P_cond') / (2n); entries sum to 1.
Matrix symmetrize_affinities(const Matrix& p_cond);

/// KL(P||Q) and its gradient with respect to the embedding.
double kl_divergence(const Matrix& p, const Matrix& y);
Matrix kl_gradient(const Matrix& p, const Matrix& y);

}  // namespace tsne

// ---------------------------------------------------------------------------
// UMAP (exact kNN, SGD layout)

class UmapModel final : public Embedder {
 public:
  Matrix transform(const Matrix& x) const override;
  Matrix inverse_raw(const Matrix& z) const override;
  bool can_inverse() const override;

  const Matrix& train_embedding() const { return train_embedding_; }
  const std::vector<double>& rhos() const { return rhos_; }
  const std::vector<double>& sigmas() const { return sigmas_; }
  double curve_a() const { return curve_a_; }
  double curve_b() const { return curve_b_; }
  /// Symmetrized fuzzy graph (dense at desk scale).
  const Matrix& fuzzy_graph() const { return graph_; }

 private:
  friend std::unique_ptr<UmapModel> umap_fit(const Matrix&, size_t, uint64_t,
                                             const EmbedderParams&);
  using Embedder::Embedder;

  Matrix x_train_;
  std::vector<double> rhos_, sigmas_;
  Matrix graph_;
  double curve_a_ = 0.0, curve_b_ = 0.0;
  Matrix train_embedding_;
  size_t inverse_budget_ = 2;
};

std::unique_ptr<UmapModel> umap_fit(const Matrix& x_train, size_t k,
                                    uint64_t seed = 0,
                                    const EmbedderParams& params = {});

namespace umap {

/// Per-point connectivity calibration: rho_i is the nearest-neighbor
/// distance; sigma_i solves sum_j exp(-max(0, d_ij - rho_i)/sigma_i) =
/// log2(n_neighbors) within 1e-3 by binary search.
struct SmoothKnnResult {
  std::vector<std::vector<size_t>> neighbors;  // per row, n_neighbors ids
  std::vector<std::vector<double>> distances;  // matching Euclidean distances
  std::vector<double> rhos;
  std::vector<double> sigmas;
};
SmoothKnnResult smooth_knn(const Matrix& x, size_t n_neighbors);

/// Least-squares fit of (a, b) so 1/(1 + a d^(2b)) tracks the offset
/// exponential target exp(-(d - min_dist)/spread) past min_dist.
struct CurveParams {
  double a = 0.0;
  double b = 0.0;
};
CurveParams fit_curve_params(double min_dist, double spread = 1.0);

}  // namespace umap

}  // namespace lbm
