#pragma once

// Landmark selection. Two regimes exist: a streaming schedule that emits the
// mean of each completed token segment (used by the continual-landmark
// state), and k-means clustering over a token sample (used by the
// fixed-landmark variants, where landmarks never move after initialization).

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <numeric>
#include <vector>

#include "conystrom/counters.hpp"
#include "conystrom/matrix.hpp"
#include "conystrom/reference.hpp"
#include "conystrom/rng.hpp"

namespace conystrom {

struct LandmarkPair {
  Matrix q_land, k_land;
};

// Result of one schedule push; the landmark vectors are filled only when
// updated is true.
struct ScheduleUpdate {
  bool updated = false;
  std::vector<double> q_landmark, k_landmark;
};

// Streaming segment-mean schedule. Segment lengths come from the initial
// partition of n tokens into m segments and repeat cyclically, so a stream
// over a window of length n completes exactly m segments per n pushes.
// Accumulation arithmetic matches segment_means row for row, so a completed
// segment's emitted mean equals the batch segment mean bitwise.
struct LandmarkSchedule {
  std::vector<std::size_t> segment_sizes;  // cyclic segment lengths
  std::size_t d = 0;
  std::size_t phase = 0;      // tokens accumulated toward the current segment
  std::size_t next_slot = 0;  // index into segment_sizes for that segment
  std::vector<double> accumulator_q, accumulator_k;

  LandmarkSchedule() = default;

  LandmarkSchedule(std::size_t n, std::size_t m, std::size_t d_in)
      : segment_sizes(conystrom::segment_sizes(n, m)),
        d(d_in),
        accumulator_q(d_in, 0.0),
        accumulator_k(d_in, 0.0) {
    if (d_in == 0) throw std::invalid_argument("LandmarkSchedule: d must be >= 1");
  }
};

inline ScheduleUpdate schedule_push(LandmarkSchedule& sched, const double* q_row,
                                    const double* k_row) {
  const std::size_t d = sched.d;
  for (std::size_t j = 0; j < d; ++j) sched.accumulator_q[j] += q_row[j];
  for (std::size_t j = 0; j < d; ++j) sched.accumulator_k[j] += k_row[j];
  ops::add_flops(2 * d);
  sched.phase += 1;
  ScheduleUpdate up;
  if (sched.phase == sched.segment_sizes[sched.next_slot]) {
    const double inv = 1.0 / static_cast<double>(sched.phase);
    up.updated = true;
    up.q_landmark.resize(d);
    up.k_landmark.resize(d);
    for (std::size_t j = 0; j < d; ++j) up.q_landmark[j] = sched.accumulator_q[j] * inv;
    for (std::size_t j = 0; j < d; ++j) up.k_landmark[j] = sched.accumulator_k[j] * inv;
    ops::add_flops(2 * d + 2);
    std::fill(sched.accumulator_q.begin(), sched.accumulator_q.end(), 0.0);
    std::fill(sched.accumulator_k.begin(), sched.accumulator_k.end(), 0.0);
    sched.phase = 0;
    sched.next_slot = (sched.next_slot + 1) % sched.segment_sizes.size();
  }
  return up;
}

namespace detail {
inline double dist2(const double* a, const double* b, std::size_t d) {
  double acc = 0.0;
  for (std::size_t j = 0; j < d; ++j) {
    const double diff = a[j] - b[j];
    acc += diff * diff;
  }
  ops::add_flops(2 * d);
  return acc;
}
}  // namespace detail

// Lloyd k-means over the token rows, returning the m cluster centers.
// Deterministic given the seed: centers start at m distinct uniformly drawn
// token rows, assignment ties pick the lowest center index, and a cluster
// left empty is re-seeded to the point currently farthest from its assigned
// center. Iteration stops when assignments stabilize or after max_iters
// rounds. When wcss_trace is given it receives the within-cluster sum of
// squares after each round, measured against the updated centers.
inline Matrix kmeans_landmarks(const Matrix& tokens, std::size_t m, std::uint64_t seed,
                               std::size_t max_iters = 100,
                               std::vector<double>* wcss_trace = nullptr) {
  const std::size_t n = tokens.rows(), d = tokens.cols();
  if (m == 0 || m > n)
    throw std::invalid_argument("kmeans_landmarks: need 1 <= m <= token count");
  SplitMix64 rng(seed);
  std::vector<std::size_t> init;
  init.reserve(m);
  while (init.size() < m) {
    const std::size_t cand = static_cast<std::size_t>(rng.below(n));
    if (std::find(init.begin(), init.end(), cand) == init.end()) init.push_back(cand);
  }
  Matrix centers(m, d);
  for (std::size_t c = 0; c < m; ++c)
    std::copy(tokens.row(init[c]), tokens.row(init[c]) + d, centers.row(c));

  std::vector<std::size_t> assign(n, 0), prev_assign(n, m);  // m: not a valid cluster
  if (wcss_trace) wcss_trace->clear();
  for (std::size_t iter = 0; iter < max_iters; ++iter) {
    for (std::size_t i = 0; i < n; ++i) {
      std::size_t best = 0;
      double best_d = detail::dist2(tokens.row(i), centers.row(0), d);
      for (std::size_t c = 1; c < m; ++c) {
        const double dc = detail::dist2(tokens.row(i), centers.row(c), d);
        if (dc < best_d) {
          best_d = dc;
          best = c;
        }
      }
      assign[i] = best;
    }
    std::vector<std::size_t> counts(m, 0);
    for (std::size_t i = 0; i < n; ++i) counts[assign[i]] += 1;
    for (std::size_t c = 0; c < m; ++c) {
      if (counts[c] != 0) continue;
      // Re-seed an empty cluster to the point farthest from its own center.
      std::size_t far = 0;
      double far_d = -1.0;
      for (std::size_t i = 0; i < n; ++i) {
        if (counts[assign[i]] <= 1) continue;  // do not empty another cluster
        const double dc = detail::dist2(tokens.row(i), centers.row(assign[i]), d);
        if (dc > far_d) {
          far_d = dc;
          far = i;
        }
      }
      counts[assign[far]] -= 1;
      assign[far] = c;
      counts[c] = 1;
    }
    for (std::size_t c = 0; c < m; ++c)
      std::fill(centers.row(c), centers.row(c) + d, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
      double* acc = centers.row(assign[i]);
      const double* src = tokens.row(i);
      for (std::size_t j = 0; j < d; ++j) acc[j] += src[j];
    }
    for (std::size_t c = 0; c < m; ++c) {
      const double inv = 1.0 / static_cast<double>(counts[c]);
      double* acc = centers.row(c);
      for (std::size_t j = 0; j < d; ++j) acc[j] *= inv;
    }
    ops::add_flops(n * d + m * (d + 1));
    if (wcss_trace) {
      double wcss = 0.0;
      for (std::size_t i = 0; i < n; ++i)
        wcss += detail::dist2(tokens.row(i), centers.row(assign[i]), d);
      wcss_trace->push_back(wcss);
    }
    if (assign == prev_assign) break;
    prev_assign = assign;
  }
  return centers;
}

// Uniform sample of at most cap token rows without replacement, returned in
// their original stream order. Below the cap the input is returned
// unchanged.
inline Matrix subsample_tokens(const Matrix& tokens, std::size_t cap, std::uint64_t seed) {
  const std::size_t n = tokens.rows(), d = tokens.cols();
  if (cap == 0) throw std::invalid_argument("subsample_tokens: cap must be >= 1");
  if (n <= cap) return tokens;
  SplitMix64 rng(seed);
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  for (std::size_t i = 0; i < cap; ++i) {
    const std::size_t j = i + static_cast<std::size_t>(rng.below(n - i));
    std::swap(idx[i], idx[j]);
  }
  idx.resize(cap);
  std::sort(idx.begin(), idx.end());
  Matrix out(cap, d);
  for (std::size_t i = 0; i < cap; ++i)
    std::copy(tokens.row(idx[i]), tokens.row(idx[i]) + d, out.row(i));
  return out;
}

}  // namespace conystrom
