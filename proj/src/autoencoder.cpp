#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>

#include "lbm/autoencoder.hpp"
#include "lbm/dataio.hpp"
#include "lbm/error.hpp"
#include "lbm/rng.hpp"

namespace lbm {

namespace {

constexpr double kBnEps = 1e-5;
constexpr double kBnMomentum = 0.1;
constexpr double kSigmoidClamp = 30.0;  // keeps outputs strictly inside (0,1)

std::vector<size_t> layer_widths(const AeArchitecture& arch) {
  std::vector<size_t> widths;
  widths.push_back(arch.input_dim);
  for (size_t h : arch.hidden) widths.push_back(h);
  widths.push_back(arch.latent_dim);
  for (size_t i = arch.hidden.size(); i-- > 0;) widths.push_back(arch.hidden[i]);
  widths.push_back(arch.input_dim);
  return widths;
}

void check_arch(const AeArchitecture& arch) {
  if (arch.input_dim == 0 || arch.latent_dim == 0)
    throw InvalidInput("autoencoder: input_dim and latent_dim must be >= 1");
  for (size_t h : arch.hidden)
    if (h == 0) throw InvalidInput("autoencoder: hidden widths must be >= 1");
}

double sigmoid_clamped(double z) {
  return 1.0 / (1.0 + std::exp(-std::clamp(z, -kSigmoidClamp, kSigmoidClamp)));
}

double mse(const Matrix& a, const Matrix& b) {
  double s = 0.0;
  for (size_t i = 0; i < a.size(); ++i) {
    const double d = a.data()[i] - b.data()[i];
    s += d * d;
  }
  return s / static_cast<double>(a.size());
}

}  // namespace

size_t ae_param_count(const AeArchitecture& arch) {
  check_arch(arch);
  const std::vector<size_t> widths = layer_widths(arch);
  const size_t latent_pos = arch.hidden.size() + 1;
  size_t count = 0;
  for (size_t i = 0; i + 1 < widths.size(); ++i) {
    count += widths[i] * widths[i + 1] + widths[i + 1];  // linear
    const bool is_latent = i + 1 == latent_pos;
    const bool is_output = i + 2 == widths.size();
    if (!is_latent && !is_output) count += 2 * widths[i + 1];  // BN gamma/beta
  }
  return count;
}

AeModel::AeModel(const AeArchitecture& arch, uint64_t seed) : arch_(arch), seed_(seed) {
  check_arch(arch);
  const std::vector<size_t> widths = layer_widths(arch);
  const size_t latent_pos = arch.hidden.size() + 1;
  Rng rng(mix_seed(seed, "ae_init"));
  for (size_t i = 0; i + 1 < widths.size(); ++i) {
    AeBlock block;
    const size_t in = widths[i];
    const size_t out = widths[i + 1];
    block.w = Matrix(in, out);
    const double bound = std::sqrt(6.0 / static_cast<double>(in));
    for (size_t p = 0; p < block.w.size(); ++p)
      block.w.data()[p] = rng.uniform(-bound, bound);
    block.b.assign(out, 0.0);
    const bool is_latent = i + 1 == latent_pos;
    const bool is_output = i + 2 == widths.size();
    if (!is_latent && !is_output) {
      block.has_bn = true;
      block.gamma.assign(out, 1.0);
      block.beta.assign(out, 0.0);
      block.run_mean.assign(out, 0.0);
      block.run_var.assign(out, 1.0);
      block.act = AeActivation::elu;
    } else {
      block.act = is_output ? AeActivation::sigmoid : AeActivation::identity;
    }
    blocks_.push_back(std::move(block));
  }
}

size_t AeModel::param_count() const { return ae_param_count(arch_); }

std::vector<double*> AeModel::param_ptrs() {
  std::vector<double*> ptrs;
  ptrs.reserve(param_count());
  for (AeBlock& block : blocks_) {
    for (size_t i = 0; i < block.w.size(); ++i) ptrs.push_back(&block.w.data()[i]);
    for (double& v : block.b) ptrs.push_back(&v);
    for (double& v : block.gamma) ptrs.push_back(&v);
    for (double& v : block.beta) ptrs.push_back(&v);
  }
  return ptrs;
}

Matrix AeModel::run_blocks(const Matrix& x, size_t first, size_t last, AeMode mode,
                           std::vector<Cache>* caches, bool /*update_running*/) const {
  Matrix cur = x;
  for (size_t bi = first; bi < last; ++bi) {
    const AeBlock& block = blocks_[bi];
    if (cur.cols() != block.w.rows())
      throw InvalidInput("autoencoder: input width mismatch at block " + std::to_string(bi));
    const size_t batch = cur.rows();
    const size_t out_w = block.w.cols();
    if (mode == AeMode::train && batch < 2)
      throw InvalidInput("autoencoder: train-mode batch must have >= 2 rows");

    Cache cache;
    if (caches) cache.x_in = cur;
    Matrix z = matmul(cur, block.w);
    for (size_t r = 0; r < batch; ++r)
      for (size_t c = 0; c < out_w; ++c) z(r, c) += block.b[c];
    if (caches) cache.z_lin = z;

    if (block.has_bn) {
      std::vector<double> mean(out_w, 0.0), var(out_w, 0.0);
      if (mode == AeMode::train) {
        mean = col_means(z);
        for (size_t r = 0; r < batch; ++r)
          for (size_t c = 0; c < out_w; ++c) {
            const double d = z(r, c) - mean[c];
            var[c] += d * d;
          }
        for (size_t c = 0; c < out_w; ++c) var[c] /= static_cast<double>(batch);
      } else {
        mean = block.run_mean;
        var = block.run_var;
      }
      Matrix x_hat(batch, out_w);
      for (size_t c = 0; c < out_w; ++c) {
        const double inv = 1.0 / std::sqrt(var[c] + kBnEps);
        for (size_t r = 0; r < batch; ++r) x_hat(r, c) = (z(r, c) - mean[c]) * inv;
      }
      for (size_t r = 0; r < batch; ++r)
        for (size_t c = 0; c < out_w; ++c)
          z(r, c) = block.gamma[c] * x_hat(r, c) + block.beta[c];
      if (caches) {
        cache.mean = std::move(mean);
        cache.var = std::move(var);
        cache.x_hat = std::move(x_hat);
      }
    }

    switch (block.act) {
      case AeActivation::elu:
        for (size_t i = 0; i < z.size(); ++i) {
          const double v = z.data()[i];
          if (v <= 0.0) z.data()[i] = std::exp(v) - 1.0;
        }
        break;
      case AeActivation::sigmoid:
        for (size_t i = 0; i < z.size(); ++i) z.data()[i] = sigmoid_clamped(z.data()[i]);
        break;
      case AeActivation::identity:
        break;
    }
    if (caches) {
      cache.out = z;
      (*caches)[bi] = std::move(cache);
    }
    cur = std::move(z);
  }
  return cur;
}

Matrix AeModel::train_forward(const Matrix& x, std::vector<Cache>& caches,
                              bool update_running) {
  caches.assign(blocks_.size(), Cache{});
  Matrix out = run_blocks(x, 0, blocks_.size(), AeMode::train, &caches, false);
  if (update_running) {
    const double batch = static_cast<double>(x.rows());
    for (size_t bi = 0; bi < blocks_.size(); ++bi) {
      AeBlock& block = blocks_[bi];
      if (!block.has_bn) continue;
      const Cache& cache = caches[bi];
      const double unbias = batch / (batch - 1.0);
      for (size_t c = 0; c < block.run_mean.size(); ++c) {
        block.run_mean[c] =
            (1.0 - kBnMomentum) * block.run_mean[c] + kBnMomentum * cache.mean[c];
        block.run_var[c] = (1.0 - kBnMomentum) * block.run_var[c] +
                           kBnMomentum * cache.var[c] * unbias;
      }
    }
  }
  return out;
}

Matrix AeModel::eval_forward(const Matrix& x) const {
  return run_blocks(x, 0, blocks_.size(), AeMode::eval, nullptr, false);
}

AeForwardResult ae_forward(AeModel& model, const Matrix& x, AeMode mode) {
  if (x.cols() != model.arch().input_dim)
    throw InvalidInput("ae_forward: column count differs from input_dim");
  std::vector<AeModel::Cache> caches;
  AeForwardResult res;
  if (mode == AeMode::train) {
    res.reconstruction = model.train_forward(x, caches, true);
    res.latent = caches[model.encoder_blocks() - 1].out;
  } else {
    res.latent = ae_embed(model, x);
    res.reconstruction = ae_decode(model, res.latent);
  }
  return res;
}

namespace {

// Gradient of MSE + l2*|W|^2 given filled train-mode caches.
AeBackwardResult backward_from_caches(AeModel& model, const Matrix& x,
                                      const std::vector<AeModel::Cache>& caches,
                                      double l2_lambda) {
  const auto& blocks = model.blocks();
  const size_t batch = x.rows();
  const Matrix& recon = caches.back().out;

  AeBackwardResult res;
  res.loss = mse(recon, x);
  for (const AeBlock& block : blocks)
    for (size_t i = 0; i < block.w.size(); ++i)
      res.loss += l2_lambda * block.w.data()[i] * block.w.data()[i];

  res.grad.assign(model.param_count(), 0.0);
  // per-block offsets into the flat gradient, matching param_ptrs()
  std::vector<size_t> offsets(blocks.size());
  size_t off = 0;
  for (size_t bi = 0; bi < blocks.size(); ++bi) {
    offsets[bi] = off;
    off += blocks[bi].w.size() + blocks[bi].b.size() + blocks[bi].gamma.size() +
           blocks[bi].beta.size();
  }

  const double scale = 2.0 / static_cast<double>(x.size());
  Matrix d_out(batch, x.cols());
  for (size_t i = 0; i < x.size(); ++i)
    d_out.data()[i] = scale * (recon.data()[i] - x.data()[i]);

  for (size_t bi = blocks.size(); bi-- > 0;) {
    const AeBlock& block = blocks[bi];
    const AeModel::Cache& cache = caches[bi];
    const size_t out_w = block.w.cols();

    // activation backward
    Matrix d_post = std::move(d_out);
    switch (block.act) {
      case AeActivation::elu:
        for (size_t i = 0; i < d_post.size(); ++i) {
          const double o = cache.out.data()[i];
          if (o <= 0.0) d_post.data()[i] *= o + 1.0;  // elu' = elu + 1 below zero
        }
        break;
      case AeActivation::sigmoid:
        for (size_t i = 0; i < d_post.size(); ++i) {
          const double z = cache.z_lin.data()[i];
          const double o = cache.out.data()[i];
          d_post.data()[i] *= std::fabs(z) < kSigmoidClamp ? o * (1.0 - o) : 0.0;
        }
        break;
      case AeActivation::identity:
        break;
    }

    // batchnorm backward (through the batch statistics)
    Matrix d_lin;
    if (block.has_bn) {
      const double bn = static_cast<double>(batch);
      d_lin = Matrix(batch, out_w);
      double* g_gamma = &res.grad[offsets[bi] + block.w.size() + block.b.size()];
      double* g_beta = g_gamma + out_w;
      for (size_t c = 0; c < out_w; ++c) {
        const double inv = 1.0 / std::sqrt(cache.var[c] + kBnEps);
        double d_gamma = 0.0, d_beta = 0.0, d_var = 0.0, d_mean = 0.0, sum_dx_hat = 0.0;
        for (size_t r = 0; r < batch; ++r) {
          const double dy = d_post(r, c);
          d_gamma += dy * cache.x_hat(r, c);
          d_beta += dy;
        }
        for (size_t r = 0; r < batch; ++r) {
          const double dx_hat = d_post(r, c) * block.gamma[c];
          sum_dx_hat += dx_hat;
          d_var += dx_hat * (cache.z_lin(r, c) - cache.mean[c]);
        }
        d_var *= -0.5 * inv * inv * inv;
        double sum_centered = 0.0;
        for (size_t r = 0; r < batch; ++r) sum_centered += cache.z_lin(r, c) - cache.mean[c];
        d_mean = -inv * sum_dx_hat + d_var * (-2.0 / bn) * sum_centered;
        for (size_t r = 0; r < batch; ++r) {
          const double dx_hat = d_post(r, c) * block.gamma[c];
          d_lin(r, c) = dx_hat * inv +
                        d_var * 2.0 * (cache.z_lin(r, c) - cache.mean[c]) / bn +
                        d_mean / bn;
        }
        g_gamma[c] = d_gamma;
        g_beta[c] = d_beta;
      }
    } else {
      d_lin = std::move(d_post);
    }

    // linear backward
    const Matrix d_w = matmul_at_b(cache.x_in, d_lin);
    double* g_w = &res.grad[offsets[bi]];
    for (size_t i = 0; i < d_w.size(); ++i)
      g_w[i] = d_w.data()[i] + 2.0 * l2_lambda * block.w.data()[i];
    double* g_b = g_w + block.w.size();
    for (size_t r = 0; r < batch; ++r)
      for (size_t c = 0; c < out_w; ++c) g_b[c] += d_lin(r, c);
    if (bi > 0) d_out = matmul_a_bt(d_lin, block.w);
  }
  return res;
}

struct AdamState {
  std::vector<double> m, v;
  size_t t = 0;
};

void adam_step(std::vector<double*>& params, const std::vector<double>& grad,
               AdamState& st, const AeTrainConfig& cfg) {
  if (st.m.empty()) {
    st.m.assign(grad.size(), 0.0);
    st.v.assign(grad.size(), 0.0);
  }
  ++st.t;
  const double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(st.t));
  const double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(st.t));
  for (size_t i = 0; i < grad.size(); ++i) {
    st.m[i] = cfg.beta1 * st.m[i] + (1.0 - cfg.beta1) * grad[i];
    st.v[i] = cfg.beta2 * st.v[i] + (1.0 - cfg.beta2) * grad[i] * grad[i];
    const double m_hat = st.m[i] / bc1;
    const double v_hat = st.v[i] / bc2;
    *params[i] -= cfg.learning_rate * m_hat / (std::sqrt(v_hat) + cfg.adam_eps);
  }
}

// Minibatch training; returns the per-epoch validation trace (empty when
// x_val is null). fold_label only feeds error reports.
std::vector<double> run_training(AeModel& model, const Matrix& x_tr, const Matrix* x_val,
                                 const AeTrainConfig& cfg, size_t max_epochs,
                                 bool early_stop, Rng& rng, size_t fold_label) {
  std::vector<double> val_trace;
  std::vector<double*> params = model.param_ptrs();
  AdamState adam;
  std::vector<AeModel::Cache> caches;
  const size_t n = x_tr.rows();

  double best_val = std::numeric_limits<double>::infinity();
  size_t since_best = 0;
  for (size_t epoch = 1; epoch <= max_epochs; ++epoch) {
    const std::vector<size_t> perm = rng.permutation(n);
    size_t start = 0;
    while (start < n) {
      size_t bs = std::min(cfg.batch_size, n - start);
      if (n - start - bs == 1) bs += 1;  // BN cannot take a singleton batch
      const Matrix xb =
          select_rows(x_tr, std::span<const size_t>(perm.data() + start, bs));
      model.train_forward(xb, caches, true);
      const AeBackwardResult back = backward_from_caches(model, xb, caches, cfg.l2_lambda);
      if (!std::isfinite(back.loss))
        throw TrainingFailure("autoencoder training diverged", epoch, fold_label);
      adam_step(params, back.grad, adam, cfg);
      start += bs;
    }
    if (x_val) {
      const double val = mse(model.eval_forward(*x_val), *x_val);
      if (!std::isfinite(val))
        throw TrainingFailure("autoencoder validation loss diverged", epoch, fold_label);
      val_trace.push_back(val);
      if (early_stop) {
        if (val < best_val) {
          best_val = val;
          since_best = 0;
        } else {
          ++since_best;
        }
        if (epoch >= cfg.early_stop_min_epoch && since_best >= cfg.patience) break;
      }
    }
  }
  return val_trace;
}

}  // namespace

AeBackwardResult ae_backward(AeModel& model, const Matrix& x, double l2_lambda) {
  if (x.cols() != model.arch().input_dim)
    throw InvalidInput("ae_backward: column count differs from input_dim");
  std::vector<AeModel::Cache> caches;
  model.train_forward(x, caches, false);
  return backward_from_caches(model, x, caches, l2_lambda);
}

AeTrainResult ae_train(const Matrix& x_train, const AeArchitecture& arch,
                       const AeTrainConfig& cfg) {
  check_arch(arch);
  if (x_train.cols() != arch.input_dim)
    throw InvalidInput("ae_train: column count differs from input_dim");
  if (cfg.folds < 2) throw InvalidInput("ae_train: folds must be >= 2");
  if (cfg.batch_size < 1) throw InvalidInput("ae_train: batch_size must be >= 1");
  if (cfg.learning_rate <= 0.0) throw InvalidInput("ae_train: learning rate must be > 0");
  const size_t n = x_train.rows();
  if (n < cfg.folds * 2) throw InvalidInput("ae_train: need at least folds*2 rows");

  // Stage 1: per-fold training with early stopping; validation traces pick
  // the epoch budget.
  Rng fold_rng(mix_seed(cfg.seed, "ae_cv"));
  const std::vector<size_t> perm = fold_rng.permutation(n);
  AeTrainResult result;
  result.fold_val_loss.resize(cfg.folds);
  for (size_t fold = 0; fold < cfg.folds; ++fold) {
    std::vector<size_t> tr_idx, val_idx;
    for (size_t i = 0; i < n; ++i)
      (i % cfg.folds == fold ? val_idx : tr_idx).push_back(perm[i]);
    std::sort(tr_idx.begin(), tr_idx.end());
    std::sort(val_idx.begin(), val_idx.end());
    const Matrix x_tr = select_rows(x_train, tr_idx);
    const Matrix x_val = select_rows(x_train, val_idx);

    AeModel model(arch, mix_seed(mix_seed(cfg.seed, "ae_fold"), fold));
    Rng rng(mix_seed(mix_seed(cfg.seed, "ae_fold_shuffle"), fold));
    result.fold_val_loss[fold] =
        run_training(model, x_tr, &x_val, cfg, cfg.max_epochs, true, rng, fold + 1);
  }

  size_t longest = 0;
  for (const auto& trace : result.fold_val_loss)
    longest = std::max(longest, trace.size());
  result.mean_val_loss.resize(longest);
  for (size_t e = 0; e < longest; ++e) {
    double sum = 0.0;
    for (const auto& trace : result.fold_val_loss)
      sum += trace[std::min(e, trace.size() - 1)];  // carry the last value forward
    result.mean_val_loss[e] = sum / static_cast<double>(cfg.folds);
  }
  size_t best = 0;
  for (size_t e = 1; e < longest; ++e)
    if (result.mean_val_loss[e] < result.mean_val_loss[best]) best = e;
  result.best_epoch = best + 1;

  // Stage 2: full retrain for the selected number of epochs.
  result.model = AeModel(arch, mix_seed(cfg.seed, "ae_final"));
  Rng rng(mix_seed(cfg.seed, "ae_final_shuffle"));
  run_training(result.model, x_train, nullptr, cfg, result.best_epoch, false, rng, 0);
  return result;
}

Matrix ae_embed(const AeModel& model, const Matrix& x) {
  if (x.cols() != model.arch().input_dim)
    throw InvalidInput("ae_embed: column count differs from input_dim");
  return model.run_blocks(x, 0, model.encoder_blocks(), AeMode::eval, nullptr, false);
}

Matrix ae_decode(const AeModel& model, const Matrix& z) {
  if (z.cols() != model.arch().latent_dim)
    throw InvalidInput("ae_decode: column count differs from latent_dim");
  return model.run_blocks(z, model.encoder_blocks(), model.blocks().size(), AeMode::eval,
                          nullptr, false);
}

void ae_save(const AeModel& model, const std::string& dir) {
  namespace fs = std::filesystem;
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("ae_save: cannot create directory " + dir);

  std::ofstream manifest(fs::path(dir) / "manifest.txt");
  if (!manifest) throw IoError("ae_save: cannot write manifest in " + dir);
  manifest << "lbm-ae 1\n";
  manifest << "input " << model.arch().input_dim << "\n";
  manifest << "hidden";
  for (size_t h : model.arch().hidden) manifest << " " << h;
  manifest << "\n";
  manifest << "latent " << model.arch().latent_dim << "\n";
  manifest << "seed " << model.init_seed() << "\n";
  manifest << "blocks " << model.blocks().size() << "\n";

  auto vec_matrix = [](const std::vector<double>& v) {
    return Matrix(1, v.size(), std::vector<double>(v));
  };
  for (size_t bi = 0; bi < model.blocks().size(); ++bi) {
    const AeBlock& block = model.blocks()[bi];
    const char* act = block.act == AeActivation::elu       ? "elu"
                      : block.act == AeActivation::sigmoid ? "sigmoid"
                                                           : "identity";
    manifest << "block " << bi << " in " << block.w.rows() << " out " << block.w.cols()
             << " bn " << (block.has_bn ? 1 : 0) << " act " << act << "\n";
    const std::string stem = (fs::path(dir) / ("block" + std::to_string(bi))).string();
    save_matrix(block.w, stem + "_w.lbm", MatrixFormat::lbm_binary);
    save_matrix(vec_matrix(block.b), stem + "_b.lbm", MatrixFormat::lbm_binary);
    if (block.has_bn) {
      save_matrix(vec_matrix(block.gamma), stem + "_g.lbm", MatrixFormat::lbm_binary);
      save_matrix(vec_matrix(block.beta), stem + "_be.lbm", MatrixFormat::lbm_binary);
      save_matrix(vec_matrix(block.run_mean), stem + "_rm.lbm", MatrixFormat::lbm_binary);
      save_matrix(vec_matrix(block.run_var), stem + "_rv.lbm", MatrixFormat::lbm_binary);
    }
  }
}

AeModel ae_load(const std::string& dir) {
  namespace fs = std::filesystem;
  std::ifstream manifest(fs::path(dir) / "manifest.txt");
  if (!manifest) throw IoError("ae_load: cannot open manifest in " + dir);

  std::string line;
  auto next_line = [&](const std::string& what) {
    if (!std::getline(manifest, line))
      throw MalformedFile("ae_load: manifest truncated before " + what);
    return std::istringstream(line);
  };
  {
    auto is = next_line("header");
    std::string tag;
    int version = 0;
    is >> tag >> version;
    if (tag != "lbm-ae" || version != 1)
      throw MalformedFile("ae_load: unrecognized manifest header");
  }
  AeArchitecture arch;
  uint64_t seed = 0;
  size_t n_blocks = 0;
  {
    auto is = next_line("input");
    std::string key;
    is >> key >> arch.input_dim;
  }
  {
    auto is = next_line("hidden");
    std::string key;
    is >> key;
    size_t h = 0;
    while (is >> h) arch.hidden.push_back(h);
  }
  {
    auto is = next_line("latent");
    std::string key;
    is >> key >> arch.latent_dim;
  }
  {
    auto is = next_line("seed");
    std::string key;
    is >> key >> seed;
  }
  {
    auto is = next_line("blocks");
    std::string key;
    is >> key >> n_blocks;
  }

  AeModel model(arch, seed);
  if (model.blocks().size() != n_blocks)
    throw MalformedFile("ae_load: block count does not match the architecture");

  auto vec_from = [](const Matrix& m, const std::string& what) {
    if (m.rows() != 1) throw MalformedFile("ae_load: " + what + " is not a row vector");
    return std::vector<double>(m.data(), m.data() + m.size());
  };
  for (size_t bi = 0; bi < n_blocks; ++bi) {
    next_line("block " + std::to_string(bi));
    AeBlock& block = model.blocks()[bi];
    const std::string stem = (fs::path(dir) / ("block" + std::to_string(bi))).string();
    Matrix w = load_matrix(stem + "_w.lbm", MatrixFormat::lbm_binary);
    if (w.rows() != block.w.rows() || w.cols() != block.w.cols())
      throw MalformedFile("ae_load: weight shape mismatch at block " + std::to_string(bi));
    block.w = std::move(w);
    block.b = vec_from(load_matrix(stem + "_b.lbm", MatrixFormat::lbm_binary), "bias");
    if (block.has_bn) {
      block.gamma = vec_from(load_matrix(stem + "_g.lbm", MatrixFormat::lbm_binary), "gamma");
      block.beta = vec_from(load_matrix(stem + "_be.lbm", MatrixFormat::lbm_binary), "beta");
      block.run_mean =
          vec_from(load_matrix(stem + "_rm.lbm", MatrixFormat::lbm_binary), "running mean");
      block.run_var =
          vec_from(load_matrix(stem + "_rv.lbm", MatrixFormat::lbm_binary), "running var");
    }
  }
  return model;
}

std::unique_ptr<AeEmbedder> ae_fit_embedder(const Matrix& x_train, size_t k,
                                            const std::vector<size_t>& hidden,
                                            const AeTrainConfig& cfg) {
  AeArchitecture arch;
  arch.input_dim = x_train.cols();
  arch.hidden = hidden;
  arch.latent_dim = k;
  AeTrainResult trained = ae_train(x_train, arch, cfg);
  EmbedderSpec spec;
  spec.method = Method::ae;
  spec.latent_dim = k;
  spec.seed = cfg.seed;
  return std::make_unique<AeEmbedder>(std::move(spec), std::move(trained.model));
}

}  // namespace lbm
