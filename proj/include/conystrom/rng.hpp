#pragma once

// Deterministic pseudo-random generation. The splitmix64 recurrence is tiny,
// fully specified, and identical on every platform, which keeps every stream,
// initialization, and subsample reproducible from a single 64-bit seed.
// std::mt19937 + distributions are deliberately avoided: distribution output
// is implementation-defined and would break cross-toolchain byte equality of
// CSV outputs.

#include <cstddef>
#include <cstdint>

#include "conystrom/matrix.hpp"

namespace conystrom {

struct SplitMix64 {
  std::uint64_t state;

  explicit SplitMix64(std::uint64_t seed) : state(seed) {}

  std::uint64_t next() {
    std::uint64_t z = (state += 0x9e3779b97f4a7c15ull);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
  }

  // Uniform in [0, 1): the top 53 bits scaled by 2^-53.
  double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  // Uniform in [-1, 1).
  double symmetric() { return 2.0 * uniform() - 1.0; }

  // Uniform integer in [0, bound) by rejection, bias-free.
  std::uint64_t below(std::uint64_t bound) {
    const std::uint64_t threshold = (0ull - bound) % bound;
    for (;;) {
      const std::uint64_t r = next();
      if (r >= threshold) return r % bound;
    }
  }
};

// rows x cols matrix with entries drawn row-major from symmetric().
inline Matrix random_matrix(std::size_t rows, std::size_t cols, SplitMix64& rng) {
  Matrix out(rows, cols);
  for (std::size_t i = 0; i < out.size(); ++i) out.data()[i] = rng.symmetric();
  return out;
}

}  // namespace conystrom
