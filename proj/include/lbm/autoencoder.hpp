#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "lbm/embedder.hpp"
#include "lbm/matrix.hpp"

namespace lbm {

/// Symmetric fully-connected auto-encoder layout. The decoder mirrors the
/// encoder. Batchnorm + ELU follow every hidden linear layer; the latent
/// layer is linear and the output layer is a plain sigmoid.
struct AeArchitecture {
  size_t input_dim = 0;
  std::vector<size_t> hidden;  // e.g. {500, 250, 125}
  size_t latent_dim = 2;
};

/// Trainable scalars: in*out + out per linear layer, 2*width per batchnorm
/// (running stats excluded).
size_t ae_param_count(const AeArchitecture& arch);

struct AeTrainConfig {
  double learning_rate = 0.001;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double adam_eps = 1e-8;
  size_t batch_size = 128;
  double l2_lambda = 1e-5;
  size_t max_epochs = 50000;
  size_t early_stop_min_epoch = 300;  // stopping disabled before this epoch
  size_t patience = 50;
  size_t folds = 5;
  uint64_t seed = 0;
};

enum class AeMode { train, eval };

enum class AeActivation { elu, sigmoid, identity };

struct AeBlock {
  Matrix w;               // in x out
  std::vector<double> b;  // out
  bool has_bn = false;
  std::vector<double> gamma, beta;              // learned affine
  std::vector<double> run_mean, run_var;        // eval-mode statistics
  AeActivation act = AeActivation::identity;
};

class AeModel {
 public:
  AeModel() = default;
  /// Seeded init: Kaiming-style uniform weights, zero biases, identity BN.
  AeModel(const AeArchitecture& arch, uint64_t seed);

  const AeArchitecture& arch() const { return arch_; }
  uint64_t init_seed() const { return seed_; }
  const std::vector<AeBlock>& blocks() const { return blocks_; }
  std::vector<AeBlock>& blocks() { return blocks_; }
  /// Blocks [0, encoder_blocks) form the encoder.
  size_t encoder_blocks() const { return arch_.hidden.size() + 1; }

  size_t param_count() const;
  /// Pointers to every trainable scalar in a fixed order (per block: w
  /// row-major, b, gamma, beta). Valid until the model is copied or moved.
  std::vector<double*> param_ptrs();

  /// Per-block forward cache for backpropagation.
  struct Cache {
    Matrix x_in;
    Matrix z_lin;
    std::vector<double> mean, var;  // biased batch statistics
    Matrix x_hat;
    Matrix out;
  };

  /// Train-mode forward: batch statistics (batch >= 2), running stats
  /// updated with momentum 0.1 unless update_running is false.
  Matrix train_forward(const Matrix& x, std::vector<Cache>& caches,
                       bool update_running = true);
  /// Eval-mode forward: running statistics, pure function of the inputs.
  Matrix eval_forward(const Matrix& x) const;

 private:
  Matrix run_blocks(const Matrix& x, size_t first, size_t last, AeMode mode,
                    std::vector<Cache>* caches, bool update_running) const;
  friend Matrix ae_embed(const AeModel&, const Matrix&);
  friend Matrix ae_decode(const AeModel&, const Matrix&);

  AeArchitecture arch_;
  uint64_t seed_ = 0;
  std::vector<AeBlock> blocks_;
};

struct AeForwardResult {
  Matrix reconstruction;
  Matrix latent;
};
AeForwardResult ae_forward(AeModel& model, const Matrix& x, AeMode mode);

/// Loss (MSE over all entries + l2_lambda * sum of squared weights) and its
/// gradient, flattened in param_ptrs() order. Running stats are untouched.
struct AeBackwardResult {
  double loss = 0.0;
  std::vector<double> grad;
};
AeBackwardResult ae_backward(AeModel& model, const Matrix& x, double l2_lambda);

struct AeTrainResult {
  AeModel model;
  std::vector<std::vector<double>> fold_val_loss;  // per fold, per epoch
  std::vector<double> mean_val_loss;  // across folds, shorter traces carried forward
  size_t best_epoch = 0;              // 1-based argmin of mean_val_loss
};

/// Stage 1: k-fold CV picks the epoch budget; stage 2 retrains on the full
/// set for that many epochs.
AeTrainResult ae_train(const Matrix& x_train, const AeArchitecture& arch,
                       const AeTrainConfig& cfg);

Matrix ae_embed(const AeModel& model, const Matrix& x);
Matrix ae_decode(const AeModel& model, const Matrix& z);

/// Checkpoint: lbm-binary matrices per layer plus a text manifest.
void ae_save(const AeModel& model, const std::string& dir);
AeModel ae_load(const std::string& dir);

/// Adapter so a trained auto-encoder joins the embedder benchmark.
class AeEmbedder final : public Embedder {
 public:
  AeEmbedder(EmbedderSpec spec, AeModel model)
      : Embedder(std::move(spec)), model_(std::move(model)) {}

  Matrix transform(const Matrix& x) const override { return ae_embed(model_, x); }
  Matrix inverse_raw(const Matrix& z) const override { return ae_decode(model_, z); }
  bool can_inverse() const override { return true; }
  const AeModel& model() const { return model_; }

 private:
  AeModel model_;
};

/// Trains on x_train with hidden sizes from `hidden` and wraps the result.
std::unique_ptr<AeEmbedder> ae_fit_embedder(const Matrix& x_train, size_t k,
                                            const std::vector<size_t>& hidden,
                                            const AeTrainConfig& cfg);

}  // namespace lbm
