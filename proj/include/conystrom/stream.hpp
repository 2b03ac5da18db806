#pragma once

// Deterministic synthetic token stream for the verification and benchmark
// drivers. Queries and keys are drawn around shared per-segment centers that
// jump at segment boundaries; values are independent uniform draws. Every
// entry lies in [-1, 1].
//
// The center structure is deliberate. Segment-mean landmarks taken from a
// fully uniform stream are nearly identical, which makes the landmark kernel
// close to rank-one and defeats the fixed-iteration pseudo-inverse. Shared
// query/key centers keep that kernel diagonally dominant, so the landmark
// variants run at their default iteration budget on the same streams the
// exact variants use. Segment lengths cycle, matching the landmark
// schedule's partition when constructed from the same (n, m).

#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <utility>
#include <vector>

#include "conystrom/continual.hpp"
#include "conystrom/reference.hpp"
#include "conystrom/rng.hpp"

namespace conystrom {

class TokenStream {
 public:
  // Segment lengths repeat cyclically; pass segment_sizes(n, m) to align
  // jumps with a scheduled-landmark window of the same shape.
  TokenStream(std::uint64_t seed, std::size_t d, std::vector<std::size_t> periods)
      : rng_(seed), d_(d), periods_(std::move(periods)), cq_(d, 0.0), ck_(d, 0.0) {
    if (d_ == 0) throw std::invalid_argument("TokenStream: d must be >= 1");
    if (periods_.empty()) throw std::invalid_argument("TokenStream: need at least one period");
    for (std::size_t p : periods_)
      if (p == 0) throw std::invalid_argument("TokenStream: periods must be >= 1");
  }

  TokenStream(std::uint64_t seed, std::size_t d, std::size_t period)
      : TokenStream(seed, d, std::vector<std::size_t>{period}) {}

  // Centers in [-0.9, 0.9], noise in [-0.1, 0.1]: entries stay in [-1, 1].
  TokenTriple draw() {
    if (phase_ == 0) jump();
    std::vector<double> q(d_), k(d_), v(d_);
    for (std::size_t j = 0; j < d_; ++j) q[j] = cq_[j] + 0.1 * rng_.symmetric();
    for (std::size_t j = 0; j < d_; ++j) k[j] = ck_[j] + 0.1 * rng_.symmetric();
    for (std::size_t j = 0; j < d_; ++j) v[j] = rng_.symmetric();
    phase_ += 1;
    if (phase_ == periods_[slot_]) {
      phase_ = 0;
      slot_ = (slot_ + 1) % periods_.size();
    }
    return TokenTriple(std::move(q), std::move(k), std::move(v));
  }

  // Next n tokens gathered into a batch window, oldest first.
  AttentionInput window(std::size_t n) {
    if (n == 0) throw std::invalid_argument("TokenStream::window: n must be >= 1");
    Matrix q(n, d_), k(n, d_), v(n, d_);
    for (std::size_t i = 0; i < n; ++i) {
      TokenTriple t = draw();
      for (std::size_t j = 0; j < d_; ++j) {
        q(i, j) = t.q[j];
        k(i, j) = t.k[j];
        v(i, j) = t.v[j];
      }
    }
    return AttentionInput(std::move(q), std::move(k), std::move(v));
  }

 private:
  // New segment: one fresh query center, mirrored to the key side without
  // consuming generator draws, so replaying draw() reproduces the stream.
  void jump() {
    for (std::size_t j = 0; j < d_; ++j) cq_[j] = 0.9 * rng_.symmetric();
    ck_ = cq_;
  }

  SplitMix64 rng_;
  std::size_t d_ = 0;
  std::vector<std::size_t> periods_;
  std::size_t phase_ = 0, slot_ = 0;
  std::vector<double> cq_, ck_;
};

// Segment lengths for a stream feeding an (n, m) landmark window; m = 0
// (no landmarks) clusters the stream into up-to-four segments per window so
// the exact variants see the same kind of input.
inline std::vector<std::size_t> stream_periods(std::size_t n, std::size_t m) {
  return segment_sizes(n, m == 0 ? (n < 4 ? n : 4) : m);
}

}  // namespace conystrom
