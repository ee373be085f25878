#ifndef CSDESIGN_RNG_HPP
#define CSDESIGN_RNG_HPP

#include "csdesign/common.hpp"

#include <cstdint>
#include <random>

namespace csd {

/// Seedable, splittable random source.
///
/// Child streams are derived from the seed and a stream counter only, never
/// from the parent's consumed state, so `split(i)` yields the same generator
/// regardless of how many draws the parent has made or which worker thread
/// asks for it.
class Rng {
 public:
  explicit Rng(std::uint64_t seed);

  std::uint64_t seed() const { return seed_; }

  Rng split(std::uint64_t stream) const;

  double normal();
  double uniform();
  /// Uniform integer in [lo, hi].
  int uniform_int(int lo, int hi);
  std::uint64_t next_u64() { return engine_(); }

  /// Matrix of iid N(0, stddev^2) entries.
  Matrix gaussian(int rows, int cols, double stddev = 1.0);
  Vector gaussian(int size, double stddev = 1.0);

  /// Uniformly random K-subset of {0..n-1}, sorted ascending.
  Support k_subset(int n, int k);

 private:
  std::uint64_t seed_;
  std::mt19937_64 engine_;
  std::normal_distribution<double> normal_{0.0, 1.0};
};

std::uint64_t splitmix64(std::uint64_t x);

}  // namespace csd

#endif  // CSDESIGN_RNG_HPP
