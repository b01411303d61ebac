#pragma once

#include <cstdint>

namespace auxref {

// xoshiro256** seeded through splitmix64. Uniform doubles take the top 53
// bits; Gaussians use Box-Muller without caching the second variate, so the
// stream depends only on the seed and the call sequence. std::*_distribution
// is avoided on purpose: its output is implementation-defined.
class SeededRng {
 public:
  explicit SeededRng(std::uint64_t seed = 0);

  std::uint64_t seed() const { return seed_; }

  std::uint64_t next_u64();
  // [0, 1)
  double uniform();
  double uniform(double lo, double hi);
  double gaussian();

 private:
  std::uint64_t seed_;
  std::uint64_t s_[4];
};

}  // namespace auxref
