#pragma once

// Continual (one-token-per-step) attention states. Each state owns ring
// buffers over a fixed-length window of n tokens plus the cached vectors and
// product matrices that make a step cheap; every cache equals its
// from-scratch definition on the current window at all times, up to the
// floating-point drift of subtraction-based updates.
//
// Drift control: kernel matrix entries (b, gamma) are exact values of
// (token, landmark) pairs and never drift; the running sums (phi vectors,
// av, delta_v) do. Every state exposes refresh(), a full recompute of those
// sums from the windows, and runs it automatically every refresh_interval
// steps (default 10 n). refresh() never touches the pseudo-inverse.
//
// States are single-owner mutable: one stream per state, no concurrent
// steps. Fields are public for serialization and inspection; mutate them
// only through the step functions.

#include <cstddef>
#include <cstring>
#include <utility>
#include <vector>

#include "conystrom/counters.hpp"
#include "conystrom/kernels.hpp"
#include "conystrom/landmarks.hpp"
#include "conystrom/matrix.hpp"
#include "conystrom/reference.hpp"

namespace conystrom {

// Fixed-capacity row ring. Logical row 0 is always the oldest; push
// overwrites the oldest row with the newest and shifts the logical origin.
// All arithmetic iterates rows in logical order, so results are independent
// of the physical head position (a reloaded ring with head 0 behaves
// identically).
class RingMat {
 public:
  RingMat() = default;
  RingMat(std::size_t rows, std::size_t cols) : mat_(rows, cols) {}
  explicit RingMat(Matrix init) : mat_(std::move(init)) {}

  std::size_t rows() const { return mat_.rows(); }
  std::size_t cols() const { return mat_.cols(); }
  const double* row(std::size_t i) const { return mat_.row(physical(i)); }
  double* row_mut(std::size_t i) { return mat_.row(physical(i)); }

  // Overwrites the oldest row with src (length cols) and advances.
  void push(const double* src) {
    std::memcpy(mat_.row(head_), src, cols() * sizeof(double));
    head_ = (head_ + 1) % rows();
  }

  void push_zero() {
    std::memset(mat_.row(head_), 0, cols() * sizeof(double));
    head_ = (head_ + 1) % rows();
  }

  Matrix to_matrix() const {
    Matrix out(rows(), cols());
    for (std::size_t i = 0; i < rows(); ++i)
      std::memcpy(out.row(i), row(i), cols() * sizeof(double));
    return out;
  }

 private:
  std::size_t physical(std::size_t i) const { return (head_ + i) % rows(); }

  Matrix mat_;
  std::size_t head_ = 0;  // physical index of the oldest row
};

// Scalar companion of RingMat with the same logical-order semantics.
class RingVec {
 public:
  RingVec() = default;
  explicit RingVec(std::size_t len) : vec_(len, 0.0) {}
  explicit RingVec(std::vector<double> init) : vec_(std::move(init)) {}

  std::size_t size() const { return vec_.size(); }
  double& at(std::size_t i) { return vec_[physical(i)]; }
  double at(std::size_t i) const { return vec_[physical(i)]; }

  void push(double value) {
    vec_[head_] = value;
    head_ = (head_ + 1) % vec_.size();
  }

  std::vector<double> to_vector() const {
    std::vector<double> out(vec_.size());
    for (std::size_t i = 0; i < vec_.size(); ++i) out[i] = at(i);
    return out;
  }

 private:
  std::size_t physical(std::size_t i) const { return (head_ + i) % vec_.size(); }

  std::vector<double> vec_;
  std::size_t head_ = 0;
};

// One streamed token: its query, key, and value rows.
struct TokenTriple {
  std::vector<double> q, k, v;

  TokenTriple() = default;

  TokenTriple(std::vector<double> q_in, std::vector<double> k_in, std::vector<double> v_in)
      : q(std::move(q_in)), k(std::move(k_in)), v(std::move(v_in)) {
    if (q.empty() || q.size() != k.size() || q.size() != v.size())
      throw dimension_error("TokenTriple: q, k, v must share one nonzero length");
  }

  std::size_t d() const { return q.size(); }
};

namespace detail {
inline std::size_t resolve_refresh(std::size_t requested, std::size_t n) {
  return requested == 0 ? 10 * n : requested;
}
}  // namespace detail

// Continual exact attention with retroactive output: caches phi(A) and A V
// over the window and updates both by removing the evicted token's
// contribution and adding the new token's.
struct CoReState {
  RingMat q_win, k_win, v_win;  // n x d token windows
  RingMat av;                   // cached A V, n x d
  RingVec phi_a;                // cached row sums of A, length n
  std::size_t refresh_interval = 0;
  std::size_t steps = 0;

  CoReState() = default;

  explicit CoReState(const AttentionInput& window, std::size_t refresh = 0)
      : q_win(window.q), k_win(window.k), v_win(window.v),
        refresh_interval(detail::resolve_refresh(refresh, window.n())) {
    Matrix a = rho(window.q, window.k, window.d());
    phi_a = RingVec(phi(a));
    av = RingMat(matmul(a, window.v));
  }

  std::size_t n() const { return q_win.rows(); }
  std::size_t d() const { return q_win.cols(); }

  void push(const TokenTriple& t) {
    if (t.d() != d()) throw dimension_error("CoReState::push: token width mismatch");
    const std::size_t nn = n(), dd = d();
    const double isd = inv_sqrt(dd);
    std::vector<double> k_old(k_win.row(0), k_win.row(0) + dd);
    std::vector<double> v_old(v_win.row(0), v_win.row(0) + dd);
    // Surviving rows (logical 1..n-1 before the shift): swap the evicted
    // key/value contribution for the new one.
    for (std::size_t i = 1; i < nn; ++i) {
      const double* qi = q_win.row(i);
      const double e_old = rho_entry(qi, k_old.data(), dd, isd);
      const double e_new = rho_entry(qi, t.k.data(), dd, isd);
      phi_a.at(i) = (phi_a.at(i) - e_old) + e_new;
      axpy(-e_old, v_old.data(), av.row_mut(i), dd);
      axpy(e_new, t.v.data(), av.row_mut(i), dd);
    }
    ops::add_flops(2 * (nn - 1));
    q_win.push(t.q.data());
    k_win.push(t.k.data());
    v_win.push(t.v.data());
    av.push_zero();
    phi_a.push(0.0);
    // Fresh row for the new query over the shifted window.
    phi_a.at(nn - 1) = attend_window(q_win.row(nn - 1), k_win, v_win, av.row_mut(nn - 1));
    steps += 1;
    if (refresh_interval != 0 && steps % refresh_interval == 0) refresh();
  }

  // phi(A)^{-1} applied to the rows of the cached A V.
  Matrix retroactive() const { return row_scale(av.to_matrix(), phi_a.to_vector()); }

  // Last retroactive row without forming the matrix; same arithmetic as
  // row_scale on that row.
  std::vector<double> newest() const {
    const std::size_t nn = n(), dd = d();
    const double s = phi_a.at(nn - 1);
    if (s == 0.0) throw zero_scale_error("CoReState::newest: zero row sum (phi underflow)");
    const double inv = 1.0 / s;
    std::vector<double> out(dd);
    const double* src = av.row(nn - 1);
    for (std::size_t j = 0; j < dd; ++j) out[j] = src[j] * inv;
    ops::add_flops(dd + 1);
    return out;
  }

  // Recomputes phi(A) and A V from the windows, clearing accumulated drift.
  void refresh() {
    const std::size_t nn = n(), dd = d();
    for (std::size_t i = 0; i < nn; ++i) {
      double* row = av.row_mut(i);
      std::memset(row, 0, dd * sizeof(double));
      phi_a.at(i) = attend_window(q_win.row(i), k_win, v_win, row);
    }
  }
};

// Continual exact attention, single-output form: keeps only the key/value
// windows and attends the newest query against them. Nothing is accumulated
// across steps, so no refresh is needed.
struct CoSiState {
  RingMat k_win, v_win;
  std::size_t steps = 0;

  CoSiState() = default;

  CoSiState(const Matrix& k_window, const Matrix& v_window)
      : k_win(k_window), v_win(v_window) {
    if (k_window.rows() == 0 || k_window.cols() == 0 ||
        k_window.rows() != v_window.rows() || k_window.cols() != v_window.cols())
      throw dimension_error("CoSiState: k and v windows must share one n x d shape");
  }

  explicit CoSiState(const AttentionInput& window) : CoSiState(window.k, window.v) {}

  std::size_t n() const { return k_win.rows(); }
  std::size_t d() const { return k_win.cols(); }

  // Advances the window and returns the attended output for the new token;
  // bitwise equal to the last retroactive row of CoReState on the same
  // stream.
  std::vector<double> step(const TokenTriple& t) {
    if (t.d() != d()) throw dimension_error("CoSiState::step: token width mismatch");
    const std::size_t dd = d();
    k_win.push(t.k.data());
    v_win.push(t.v.data());
    std::vector<double> out(dd, 0.0);
    const double s = attend_window(t.q.data(), k_win, v_win, out.data());
    if (s == 0.0) throw zero_scale_error("CoSiState::step: zero row sum (phi underflow)");
    const double inv = 1.0 / s;
    for (std::size_t j = 0; j < dd; ++j) out[j] *= inv;
    ops::add_flops(dd + 1);
    steps += 1;
    return out;
  }
};

// Continual landmark attention with the streaming segment-mean schedule.
// Most steps reuse every landmark-side cache; when the schedule completes a
// segment the oldest landmark pair is replaced by the new segment means, the
// affected caches shift and gain fresh entries, and the pseudo-inverse is
// recomputed. That recomputation is the only pseudo-inverse call after
// initialization.
struct CoNyContState {
  RingMat q_win, k_win, v_win;     // n x d token windows
  LandmarkSchedule schedule;
  Matrix q_land, k_land;           // m x d, oldest landmark first
  RingMat b;                       // rho(Q, K~) rows per window token, n x m
  RingVec phi_b;                   // row sums of b
  Matrix gamma;                    // rho(Q~, K~), m x m
  std::vector<double> phi_gamma;   // row sums of gamma
  Matrix gamma_pinv;               // pinv of row-scaled gamma
  RingMat b_gamma;                 // row-scaled b times gamma_pinv, n x m
  std::vector<double> phi_delta;   // row sums of rho(Q~, K), length m
  Matrix delta_v;                  // rho(Q~, K) V, m x d
  std::size_t pinv_iters = 6;
  std::size_t refresh_interval = 0;
  std::size_t steps = 0;

  CoNyContState() = default;

  CoNyContState(const AttentionInput& window, std::size_t m, std::size_t pinv_iterations = 6,
                std::size_t refresh = 0)
      : q_win(window.q), k_win(window.k), v_win(window.v),
        schedule(window.n(), m, window.d()),
        q_land(segment_means(window.q, m)),
        k_land(segment_means(window.k, m)),
        pinv_iters(pinv_iterations),
        refresh_interval(detail::resolve_refresh(refresh, window.n())) {
    NystromIntermediates c = nystrom_caches(window, q_land, k_land, pinv_iters);
    b = RingMat(std::move(c.b));
    phi_b = RingVec(std::move(c.phi_b));
    gamma = std::move(c.gamma);
    phi_gamma = std::move(c.phi_gamma);
    gamma_pinv = std::move(c.gamma_pinv);
    b_gamma = RingMat(std::move(c.b_gamma));
    phi_delta = std::move(c.phi_delta);
    delta_v = std::move(c.delta_v);
  }

  std::size_t n() const { return q_win.rows(); }
  std::size_t d() const { return q_win.cols(); }
  std::size_t m() const { return q_land.rows(); }

  // Advances the window by one token; returns true when this step replaced a
  // landmark (and hence recomputed the pseudo-inverse).
  bool push(const TokenTriple& t) {
    if (t.d() != d()) throw dimension_error("CoNyContState::push: token width mismatch");
    const std::size_t nn = n(), dd = d(), mm = m();
    const double isd = inv_sqrt(dd);
    std::vector<double> k_old(k_win.row(0), k_win.row(0) + dd);
    std::vector<double> v_old(v_win.row(0), v_win.row(0) + dd);
    const ScheduleUpdate up = schedule_push(schedule, t.q.data(), t.k.data());

    // Landmark-side caches track sums over the sliding key/value window:
    // swap the evicted token's contribution for the new one. On an update
    // step the oldest landmark's row is about to be retired, so only the
    // survivors are updated.
    const std::size_t first_kept = up.updated ? 1 : 0;
    for (std::size_t r = first_kept; r < mm; ++r) {
      const double* lq = q_land.row(r);
      const double e_old = rho_entry(lq, k_old.data(), dd, isd);
      const double e_new = rho_entry(lq, t.k.data(), dd, isd);
      phi_delta[r] = (phi_delta[r] - e_old) + e_new;
      axpy(-e_old, v_old.data(), delta_v.row(r), dd);
      axpy(e_new, t.v.data(), delta_v.row(r), dd);
    }
    ops::add_flops(2 * (mm - first_kept));

    // Rotate the token windows and the per-token rings together so logical
    // indices stay aligned: rows 0..n-2 are survivors, row n-1 is the new
    // token (filled below).
    q_win.push(t.q.data());
    k_win.push(t.k.data());
    v_win.push(t.v.data());
    b.push_zero();
    phi_b.push(0.0);
    b_gamma.push_zero();

    if (up.updated) {
      apply_landmark_update(up, isd);
    } else {
      fill_new_token_row(t.q.data(), isd);
      scale_b_gamma_row(nn - 1);
    }
    steps += 1;
    if (refresh_interval != 0 && steps % refresh_interval == 0) refresh();
    return up.updated;
  }

  // Scales Delta V once, then multiplies each cached product row against it;
  // bitwise equal to nystrom_output_row applied per row, and the last row is
  // bitwise equal to newest().
  Matrix retroactive() const {
    const Matrix scaled = row_scale(delta_v, phi_delta);
    Matrix out(n(), d());
    for (std::size_t i = 0; i < n(); ++i) row_times(b_gamma.row(i), scaled, out.row(i));
    return out;
  }

  std::vector<double> newest() const {
    std::vector<double> out(d());
    nystrom_output_row(b_gamma.row(n() - 1), phi_delta, delta_v, out.data());
    return out;
  }

  // Recomputes every running sum (phi vectors, delta_v) from the windows and
  // rescales b_gamma; kernel entries are exact already and the cached
  // pseudo-inverse is reused, never recomputed here.
  void refresh() {
    const std::size_t nn = n(), mm = m();
    for (std::size_t i = 0; i < nn; ++i) {
      const double* bi = b.row(i);
      double acc = 0.0;
      for (std::size_t c = 0; c < mm; ++c) acc += bi[c];
      phi_b.at(i) = acc;
    }
    ops::add_flops(nn * mm);
    for (std::size_t r = 0; r < mm; ++r) {
      const double* gr = gamma.row(r);
      double acc = 0.0;
      for (std::size_t c = 0; c < mm; ++c) acc += gr[c];
      phi_gamma[r] = acc;
    }
    ops::add_flops(mm * mm);
    for (std::size_t r = 0; r < mm; ++r) {
      double* row = delta_v.row(r);
      std::memset(row, 0, d() * sizeof(double));
      phi_delta[r] = attend_window(q_land.row(r), k_win, v_win, row);
    }
    for (std::size_t i = 0; i < nn; ++i) scale_b_gamma_row(i);
  }

 private:
  // b_gamma row i = (b row i scaled by 1/phi_b) times gamma_pinv; the same
  // arithmetic as the batch matmul(row_scale(b, phi_b), gamma_pinv) row.
  void scale_b_gamma_row(std::size_t i) {
    const std::size_t mm = m();
    const double s = phi_b.at(i);
    if (s == 0.0) throw zero_scale_error("CoNyContState: zero b row sum (phi underflow)");
    const double inv = 1.0 / s;
    std::vector<double> w(mm);
    const double* bi = b.row(i);
    for (std::size_t c = 0; c < mm; ++c) w[c] = bi[c] * inv;
    ops::add_flops(mm + 1);
    row_times(w.data(), gamma_pinv, b_gamma.row_mut(i));
  }

  // Non-update step: the landmark set is unchanged, so only the new token's
  // rows are computed; all cached rows (including b_gamma) are reused as-is.
  void fill_new_token_row(const double* q_new, double isd) {
    const std::size_t nn = n(), mm = m();
    double* bn = b.row_mut(nn - 1);
    double acc = 0.0;
    for (std::size_t c = 0; c < mm; ++c) {
      bn[c] = rho_entry(q_new, k_land.row(c), d(), isd);
      acc += bn[c];
    }
    ops::add_flops(mm);
    phi_b.at(nn - 1) = acc;
  }

  // Update step: the oldest landmark pair is replaced by the new segment
  // means. Cached kernel entries shift (b columns left, gamma up-left,
  // delta rows up); only the entries involving the new landmark pair are
  // computed fresh, and the pseudo-inverse is recomputed once.
  void apply_landmark_update(const ScheduleUpdate& up, double isd) {
    const std::size_t nn = n(), dd = d(), mm = m();
    // Outgoing gamma column and old row sums, cached before any shift.
    std::vector<double> g_col_old(mm), phi_gamma_old = phi_gamma;
    for (std::size_t r = 0; r < mm; ++r) g_col_old[r] = gamma(r, 0);

    // Retire the oldest landmark pair, append the new one.
    for (std::size_t r = 1; r < mm; ++r) {
      std::memcpy(q_land.row(r - 1), q_land.row(r), dd * sizeof(double));
      std::memcpy(k_land.row(r - 1), k_land.row(r), dd * sizeof(double));
    }
    std::memcpy(q_land.row(mm - 1), up.q_landmark.data(), dd * sizeof(double));
    std::memcpy(k_land.row(mm - 1), up.k_landmark.data(), dd * sizeof(double));

    // Delta-side caches: shift the survivors up, then compute the new
    // landmark's row fresh over the already-shifted window.
    for (std::size_t r = 1; r < mm; ++r) {
      phi_delta[r - 1] = phi_delta[r];
      std::memcpy(delta_v.row(r - 1), delta_v.row(r), dd * sizeof(double));
    }
    double* dv_new = delta_v.row(mm - 1);
    std::memset(dv_new, 0, dd * sizeof(double));
    phi_delta[mm - 1] = attend_window(q_land.row(mm - 1), k_win, v_win, dv_new);

    // b: surviving token rows drop the retired landmark's column (cached, no
    // recompute) and gain a fresh column against the new key landmark.
    const double* lk_new = k_land.row(mm - 1);
    for (std::size_t i = 0; i + 1 < nn; ++i) {
      double* bi = b.row_mut(i);
      const double e_new = rho_entry(q_win.row(i), lk_new, dd, isd);
      phi_b.at(i) = (phi_b.at(i) - bi[0]) + e_new;
      for (std::size_t c = 1; c < mm; ++c) bi[c - 1] = bi[c];
      bi[mm - 1] = e_new;
    }
    ops::add_flops(2 * (nn - 1));
    fill_new_token_row(q_win.row(nn - 1), isd);

    // gamma: drop row and column 0, append the new pair's column and row.
    // Survivor row sums swap the cached outgoing entry for the fresh one.
    for (std::size_t r = 0; r + 1 < mm; ++r)
      for (std::size_t c = 0; c + 1 < mm; ++c) gamma(r, c) = gamma(r + 1, c + 1);
    for (std::size_t r = 0; r + 1 < mm; ++r) {
      const double e = rho_entry(q_land.row(r), lk_new, dd, isd);
      gamma(r, mm - 1) = e;
      phi_gamma[r] = (phi_gamma_old[r + 1] - g_col_old[r + 1]) + e;
    }
    ops::add_flops(mm == 0 ? 0 : 2 * (mm - 1));
    const std::vector<double> g_row_new = rho_row(q_land.row(mm - 1), k_land, dd);
    double acc = 0.0;
    for (std::size_t c = 0; c < mm; ++c) {
      gamma(mm - 1, c) = g_row_new[c];
      acc += g_row_new[c];
    }
    ops::add_flops(mm);
    phi_gamma[mm - 1] = acc;

    // The one pseudo-inverse call of the step, then a full rescale of the
    // cached product rows against it.
    gamma_pinv = pinv_iterative(row_scale(gamma, phi_gamma), pinv_iters);
    for (std::size_t i = 0; i < nn; ++i) scale_b_gamma_row(i);
  }
};

// Continual landmark attention with frozen landmarks: the landmark matrices
// and the pseudo-inverse are fixed at initialization, so a step only updates
// the window sums and appends the new token's product row. No query window
// is kept; the query of a token is used once, on arrival.
struct CoNyFixedState {
  Matrix q_land, k_land;          // frozen m x d landmark matrices
  Matrix gamma_pinv;              // frozen pinv of row-scaled gamma
  RingMat k_win, v_win;           // n x d windows driving the delta updates
  RingMat b_gamma;                // row-scaled b times gamma_pinv, n x m
  std::vector<double> phi_delta;  // row sums of rho(Q~, K), length m
  Matrix delta_v;                 // rho(Q~, K) V, m x d
  std::size_t refresh_interval = 0;
  std::size_t steps = 0;

  CoNyFixedState() = default;

  CoNyFixedState(const AttentionInput& window, const LandmarkPair& landmarks,
                 std::size_t pinv_iterations = 6, std::size_t refresh = 0)
      : q_land(landmarks.q_land), k_land(landmarks.k_land),
        k_win(window.k), v_win(window.v),
        refresh_interval(detail::resolve_refresh(refresh, window.n())) {
    NystromIntermediates c = nystrom_caches(window, q_land, k_land, pinv_iterations);
    gamma_pinv = std::move(c.gamma_pinv);
    b_gamma = RingMat(std::move(c.b_gamma));
    phi_delta = std::move(c.phi_delta);
    delta_v = std::move(c.delta_v);
  }

  std::size_t n() const { return k_win.rows(); }
  std::size_t d() const { return k_win.cols(); }
  std::size_t m() const { return q_land.rows(); }

  void push(const TokenTriple& t) {
    if (t.d() != d()) throw dimension_error("CoNyFixedState::push: token width mismatch");
    const std::size_t nn = n(), dd = d(), mm = m();
    const double isd = inv_sqrt(dd);
    std::vector<double> k_old(k_win.row(0), k_win.row(0) + dd);
    std::vector<double> v_old(v_win.row(0), v_win.row(0) + dd);
    for (std::size_t r = 0; r < mm; ++r) {
      const double* lq = q_land.row(r);
      const double e_old = rho_entry(lq, k_old.data(), dd, isd);
      const double e_new = rho_entry(lq, t.k.data(), dd, isd);
      phi_delta[r] = (phi_delta[r] - e_old) + e_new;
      axpy(-e_old, v_old.data(), delta_v.row(r), dd);
      axpy(e_new, t.v.data(), delta_v.row(r), dd);
    }
    ops::add_flops(2 * mm);
    k_win.push(t.k.data());
    v_win.push(t.v.data());
    // The new token's product row, from a transient kernel row against the
    // frozen landmarks; the query is not retained.
    std::vector<double> brow = rho_row(t.q.data(), k_land, dd);
    double s = 0.0;
    for (std::size_t c = 0; c < mm; ++c) s += brow[c];
    ops::add_flops(mm);
    if (s == 0.0) throw zero_scale_error("CoNyFixedState: zero b row sum (phi underflow)");
    const double inv = 1.0 / s;
    for (std::size_t c = 0; c < mm; ++c) brow[c] *= inv;
    ops::add_flops(mm + 1);
    b_gamma.push_zero();
    row_times(brow.data(), gamma_pinv, b_gamma.row_mut(nn - 1));
    steps += 1;
    if (refresh_interval != 0 && steps % refresh_interval == 0) refresh();
  }

  // Same single-scale readout as the scheduled state: bitwise equal to
  // nystrom_output_row per row, last row bitwise equal to newest().
  Matrix retroactive() const {
    const Matrix scaled = row_scale(delta_v, phi_delta);
    Matrix out(n(), d());
    for (std::size_t i = 0; i < n(); ++i) row_times(b_gamma.row(i), scaled, out.row(i));
    return out;
  }

  std::vector<double> newest() const {
    std::vector<double> out(d());
    nystrom_output_row(b_gamma.row(n() - 1), phi_delta, delta_v, out.data());
    return out;
  }

  // Recomputes the delta-side window sums; b_gamma rows are exact (each was
  // computed fresh on its token's arrival) and the pseudo-inverse is frozen.
  void refresh() {
    for (std::size_t r = 0; r < m(); ++r) {
      double* row = delta_v.row(r);
      std::memset(row, 0, d() * sizeof(double));
      phi_delta[r] = attend_window(q_land.row(r), k_win, v_win, row);
    }
  }
};

// Named entry points for the step operations.

inline CoReState core_init(const AttentionInput& window, std::size_t refresh = 0) {
  return CoReState(window, refresh);
}

inline CoNyContState cony_cont_init(const AttentionInput& window, std::size_t m,
                                    std::size_t pinv_iters = 6, std::size_t refresh = 0) {
  return CoNyContState(window, m, pinv_iters, refresh);
}

inline CoNyFixedState cony_fixed_init(const AttentionInput& window, const LandmarkPair& landmarks,
                                      std::size_t pinv_iters = 6, std::size_t refresh = 0) {
  return CoNyFixedState(window, landmarks, pinv_iters, refresh);
}

inline Matrix core_step_retroactive(CoReState& state, const TokenTriple& t) {
  state.push(t);
  return state.retroactive();
}

inline std::vector<double> core_step_single(CoSiState& state, const TokenTriple& t) {
  return state.step(t);
}

enum class StepMode { retroactive, single };

// Output of one landmark-variant step; only the member matching the
// requested mode is filled.
struct ContStepResult {
  bool landmark_updated = false;
  Matrix retroactive;
  std::vector<double> single;
};

inline ContStepResult cony_step(CoNyContState& state, const TokenTriple& t, StepMode mode) {
  ContStepResult r;
  r.landmark_updated = state.push(t);
  if (mode == StepMode::retroactive)
    r.retroactive = state.retroactive();
  else
    r.single = state.newest();
  return r;
}

inline ContStepResult cony_fixed_step(CoNyFixedState& state, const TokenTriple& t, StepMode mode) {
  ContStepResult r;
  state.push(t);
  if (mode == StepMode::retroactive)
    r.retroactive = state.retroactive();
  else
    r.single = state.newest();
  return r;
}

namespace detail {
template <typename State>
inline void block_push(State& state, const AttentionInput& block) {
  if (block.n() > state.n())
    throw std::invalid_argument("block_step: block length must be between 1 and n");
  for (std::size_t i = 0; i < block.n(); ++i) {
    TokenTriple t(std::vector<double>(block.q.row(i), block.q.row(i) + block.d()),
                  std::vector<double>(block.k.row(i), block.k.row(i) + block.d()),
                  std::vector<double>(block.v.row(i), block.v.row(i) + block.d()));
    if constexpr (requires { state.step(t); })
      state.step(t);
    else
      state.push(t);
  }
}
}  // namespace detail

// Feeds a block of tokens as sequential single-token steps and returns the
// final step's output. A one-row block is bitwise identical to a plain step.
inline Matrix block_step(CoReState& state, const AttentionInput& block) {
  detail::block_push(state, block);
  return state.retroactive();
}

inline std::vector<double> block_step(CoSiState& state, const AttentionInput& block) {
  if (block.n() > state.n())
    throw std::invalid_argument("block_step: block length must be between 1 and n");
  std::vector<double> out;
  for (std::size_t i = 0; i < block.n(); ++i) {
    TokenTriple t(std::vector<double>(block.q.row(i), block.q.row(i) + block.d()),
                  std::vector<double>(block.k.row(i), block.k.row(i) + block.d()),
                  std::vector<double>(block.v.row(i), block.v.row(i) + block.d()));
    out = state.step(t);
  }
  return out;
}

inline Matrix block_step(CoNyContState& state, const AttentionInput& block) {
  detail::block_push(state, block);
  return state.retroactive();
}

inline Matrix block_step(CoNyFixedState& state, const AttentionInput& block) {
  detail::block_push(state, block);
  return state.retroactive();
}

}  // namespace conystrom
