#pragma once

// Thread-local operation counters shared by every kernel. The flop counter
// follows an element-operation convention: a length-d dot product counts d,
// an exp counts 1, a p*q*r matrix product counts p*q*r. It exists so tests
// can compare measured per-step work against the closed-form cost model.
// pinv_calls counts pseudo-inverse invocations; streaming paths that promise
// never to touch the pseudo-inverse are audited through it.

#include <cstdint>

namespace conystrom::ops {

inline thread_local std::uint64_t flop_count = 0;
inline thread_local std::uint64_t pinv_calls = 0;

inline void reset() {
  flop_count = 0;
  pinv_calls = 0;
}

inline void add_flops(std::uint64_t n) { flop_count += n; }

}  // namespace conystrom::ops
