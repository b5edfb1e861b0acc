#pragma once
// Seedable splitmix64 generator. Used instead of <random> distributions so
// that identical seeds give byte-identical operand streams on every
// platform/libstdc++ version.

#include <cstdint>

#include "pacq/half.hpp"

namespace pacq {

class SplitMix64 {
 public:
  explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next() {
    std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ULL);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

  // Uniform double in [lo, hi) from the top 53 bits.
  double uniform(double lo, double hi) {
    double u = static_cast<double>(next() >> 11) * 0x1.0p-53;
    return lo + (hi - lo) * u;
  }

  // Uniform integer in [lo, hi].
  int uniform_int(int lo, int hi) {
    std::uint64_t span = static_cast<std::uint64_t>(hi - lo) + 1;
    return lo + static_cast<int>(next() % span);
  }

  // Random activation: uniform in [-2, 2], materialized in FP16.
  // Magnitudes below the normal range are flushed to zero because the
  // parallel FP-INT units accept normalized-or-zero activations only.
  half::bits_t activation() {
    half::bits_t h = half::encode(uniform(-2.0, 2.0));
    if (half::is_subnormal(h)) h = (h & 0x8000) ? half::kNegZero : half::kPosZero;
    return h;
  }

 private:
  std::uint64_t state_;
};

}  // namespace pacq
