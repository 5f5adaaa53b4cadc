#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "lbm/matrix.hpp"

namespace lbm {

/// Voxel-wise expression dataset: one matrix row per voxel, values in [0,1],
/// plus the integer grid coordinate of each voxel. Row order of `values`,
/// `coords` and any TargetMap is the voxel order everywhere.
struct ExpressionDataset {
  Matrix values;                             // n_voxels x n_genes
  std::vector<std::array<int, 3>> coords;    // one (i,j,k) per voxel, distinct
  std::string resolution = "synthetic";      // "4", "8" or "synthetic"
  std::vector<std::string> gene_ids;

  size_t n_voxels() const { return values.rows(); }
  size_t n_genes() const { return values.cols(); }
  void validate() const;
};

/// One scalar per voxel, aligned to the dataset voxel order.
struct TargetMap {
  std::string name;
  std::vector<double> values;
};

/// Disjoint train/test row partition with |train| = round(0.8 * n).
struct SplitIndex {
  std::vector<size_t> train_rows;
  std::vector<size_t> test_rows;
  uint64_t seed = 0;
};

enum class MatrixFormat { csv, lbm_binary };

Matrix load_matrix(const std::string& path, MatrixFormat format);
void save_matrix(const Matrix& m, const std::string& path, MatrixFormat format);

std::vector<std::array<int, 3>> load_coords(const std::string& path);
void save_coords(const std::vector<std::array<int, 3>>& coords, const std::string& path);

TargetMap load_target(const std::string& path);
void save_target(const TargetMap& t, const std::string& path);

/// Clamps every entry into [q_lo, q_hi], the global lo_pct/hi_pct percentiles
/// of all entries (linear interpolation on the sorted values).
Matrix clamp_percentiles(const Matrix& x, double lo_pct = 0.01, double hi_pct = 99.9);

/// Train/test split: uniform random permutation under Rng(seed). Requires n >= 5.
SplitIndex split(size_t n, uint64_t seed, double train_fraction = 0.8);

enum class SynthKind { linear_rank_r, nonlinear_manifold };

struct SynthSpec {
  SynthKind kind = SynthKind::nonlinear_manifold;
  size_t n_voxels = 512;
  size_t n_genes = 200;
  size_t intrinsic_dim = 2;
  double noise_sd = 0.0;
  uint64_t seed = 0;
  size_t n_targets = 0;
};

struct SynthResult {
  ExpressionDataset dataset;
  Matrix latent;                   // the generative latent, n_voxels x intrinsic_dim
  std::vector<TargetMap> targets;  // smooth functions of the latent
};

/// Deterministic synthetic stand-in for voxel-wise expression data. The
/// linear kind squashes an affine image of a rank-r Gaussian latent through a
/// sigmoid; the nonlinear kind first expands the latent with fixed sine and
/// product interactions.
SynthResult synth_dataset(const SynthSpec& spec);

/// Dense volume on the coord bounding box, x-fastest order, absent cells -1.
struct Volume {
  size_t nx = 0, ny = 0, nz = 0;
  double fill = -1.0;
  std::vector<double> values;  // nx*ny*nz, x fastest
};

void export_volume(const std::vector<std::array<int, 3>>& coords,
                   const std::vector<double>& values, const std::string& path);
Volume import_volume(const std::string& path);

struct Histogram {
  std::vector<double> bin_edges;  // n_bins + 1
  std::vector<size_t> counts;     // n_bins, sums to rows*cols
};

Histogram histogram(const Matrix& x, size_t n_bins);

}  // namespace lbm
