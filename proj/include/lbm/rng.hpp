#pragma once

#include <cstddef>
#include <cstdint>
#include <string_view>
#include <vector>

namespace lbm {

/// Deterministic 64-bit generator (xoshiro256** seeded through splitmix64).
/// Identical seeds produce identical streams within one build. A single Rng
/// instance is single-owner; concurrent use of one instance is forbidden.
class Rng {
 public:
  explicit Rng(uint64_t seed);

  uint64_t seed() const { return seed_; }

  uint64_t next_u64();

  /// Uniform double in [0, 1) with 53 random bits.
  double uniform();

  /// Uniform double in [lo, hi).
  double uniform(double lo, double hi);

  /// Standard normal via Box-Muller (second draw cached).
  double normal();

  /// Unbiased integer in [0, n). n must be > 0.
  size_t below(size_t n);

  /// Fisher-Yates permutation of 0..n-1.
  std::vector<size_t> permutation(size_t n);

 private:
  uint64_t seed_;
  uint64_t state_[4];
  double cached_normal_ = 0.0;
  bool has_cached_normal_ = false;
};

/// Derives an independent sub-stream seed from (seed, tag). Stable within a
/// build; used to decouple e.g. per-fold or per-cell streams.
uint64_t mix_seed(uint64_t seed, uint64_t salt);
uint64_t mix_seed(uint64_t seed, std::string_view tag);

}  // namespace lbm
