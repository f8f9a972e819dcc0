#pragma once

#include <cstdint>

namespace dcap {

// Deterministic 64-bit counter-based generator (splitmix64). The algorithm
// and its constants are part of the fixture contract: identical seeds must
// produce identical streams on every platform, so no std:: distribution
// machinery is used anywhere in the library.
//
//   state_{n+1} = state_n + 0x9E3779B97F4A7C15
//   z = state; z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9;
//   z = (z ^ (z >> 27)) * 0x94D049BB133111EB; out = z ^ (z >> 31)
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next_u64() {
    state_ += 0x9E3779B97F4A7C15ULL;
    std::uint64_t z = state_;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

  // Uniform double in [0, 1) using the top 53 bits.
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Uniform integer in [0, n). n must be > 0; modulo bias is irrelevant at
  // the ranges used here (n << 2^64) and keeps the stream layout simple.
  std::uint64_t uniform_int(std::uint64_t n) { return next_u64() % n; }

  // Derive an independent stream, e.g. one per scene index.
  static Rng derive(std::uint64_t seed, std::uint64_t stream) {
    Rng mixer(seed ^ (0x9E3779B97F4A7C15ULL * (stream + 1)));
    return Rng(mixer.next_u64());
  }

 private:
  std::uint64_t state_;
};

}  // namespace dcap
