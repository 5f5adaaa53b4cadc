#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "lbm/autoencoder.hpp"
#include "lbm/dataio.hpp"
#include "lbm/embedder.hpp"
#include "lbm/evalstats.hpp"

namespace lbm {

struct BenchConfig {
  // data source: explicit files, or a synthetic spec when matrix_path is empty
  std::string matrix_path;
  std::string coords_path;
  MatrixFormat matrix_format = MatrixFormat::csv;
  std::vector<std::string> target_paths;
  std::string resolution = "synthetic";
  bool clamp = false;  // apply percentile clamping after load
  SynthSpec synth;

  std::vector<Method> methods;
  std::vector<size_t> dims;
  uint64_t seed = 0;        // run seed; cells derive theirs from it
  uint64_t split_seed = 0;
  size_t workers = 0;       // 0 = hardware concurrency
  bool predict_all_dims = false;  // default: downstream prediction at 2D only

  EmbedderParams params;
  std::vector<size_t> ae_hidden = {64, 32};
  AeTrainConfig ae_cfg;
  size_t gbm_folds = 5;

  std::string out_dir = "out";
  std::string echo;  // verbatim config text, copied into reports
};

/// Parses the flat key-value config (see README for the key list) and
/// validates it: nonempty methods and dims, referenced paths exist.
BenchConfig parse_bench_config(const std::string& path);

struct BenchResult {
  std::vector<BenchCell> cells;
  std::vector<std::string> failures;  // one line per failed cell
};

/// Runs every (method, dim) cell on a shared split, writes cells/*.json,
/// aggregate.csv and stats.json under cfg.out_dir, and returns the cells.
BenchResult run_bench(const BenchConfig& cfg);

}  // namespace lbm
