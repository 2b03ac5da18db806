#pragma once

// Batch attention references: exact scaled dot-product attention and its
// landmark (Nystrom) approximation, plus the segment-mean partitioning both
// landmark schedules build on. The continual states in continual.hpp
// initialize their caches through nystrom_caches so that a freshly
// initialized state and the batch computation agree bitwise.

#include <cstddef>
#include <vector>

#include "conystrom/counters.hpp"
#include "conystrom/kernels.hpp"
#include "conystrom/matrix.hpp"

namespace conystrom {

// One attention problem instance: query, key, and value rows share the same
// n x d shape.
struct AttentionInput {
  Matrix q, k, v;

  AttentionInput(Matrix q_in, Matrix k_in, Matrix v_in)
      : q(std::move(q_in)), k(std::move(k_in)), v(std::move(v_in)) {
    if (q.rows() == 0 || q.cols() == 0)
      throw dimension_error("AttentionInput: n and d must be >= 1");
    if (k.rows() != q.rows() || v.rows() != q.rows() ||
        k.cols() != q.cols() || v.cols() != q.cols())
      throw dimension_error("AttentionInput: q, k, v must share one n x d shape");
  }

  std::size_t n() const { return q.rows(); }
  std::size_t d() const { return q.cols(); }
};

// Exact attention: phi(A)^{-1} applied to the rows of A V with
// A = rho(Q, K).
inline Matrix sda_exact(const AttentionInput& in) {
  Matrix a = rho(in.q, in.k, in.d());
  std::vector<double> s = phi(a);
  return row_scale(matmul(a, in.v), s);
}

// Partition of n tokens into m contiguous segments; when m does not divide
// n, the leading n mod m segments hold one extra token.
inline std::vector<std::size_t> segment_sizes(std::size_t n, std::size_t m) {
  if (m == 0 || m > n)
    throw std::invalid_argument("segment_sizes: need 1 <= m <= n");
  const std::size_t base = n / m, extra = n % m;
  std::vector<std::size_t> sizes(m, base);
  for (std::size_t i = 0; i < extra; ++i) sizes[i] += 1;
  return sizes;
}

// Segment means of the token rows, in segment order. Accumulation is one row
// at a time followed by a reciprocal multiply, the same arithmetic the
// streaming schedule performs, so batch and streaming landmarks coincide
// bitwise.
inline Matrix segment_means(const Matrix& tokens, std::size_t m) {
  const std::vector<std::size_t> sizes = segment_sizes(tokens.rows(), m);
  const std::size_t d = tokens.cols();
  Matrix means(m, d);
  std::size_t row = 0;
  for (std::size_t s = 0; s < m; ++s) {
    double* acc = means.row(s);
    for (std::size_t t = 0; t < sizes[s]; ++t, ++row) {
      const double* src = tokens.row(row);
      for (std::size_t j = 0; j < d; ++j) acc[j] += src[j];
    }
    const double inv = 1.0 / static_cast<double>(sizes[s]);
    for (std::size_t j = 0; j < d; ++j) acc[j] *= inv;
    ops::add_flops(sizes[s] * d + d + 1);
  }
  return means;
}

// Attention of one query row against a key/value window: accumulates
// sum_i rho(q, k_i) v_i into accum (caller-zeroed, length d) and returns the
// kernel row sum. Works for any window type exposing rows()/cols()/row(i);
// iteration is oldest-first, matching the row order of the batch formulas,
// so incremental rows and batch rows agree bitwise.
template <typename KWin, typename VWin>
inline double attend_window(const double* q_row, const KWin& k_win, const VWin& v_win,
                            double* accum) {
  const std::size_t d = k_win.cols();
  const double isd = inv_sqrt(d);
  double phi_acc = 0.0;
  for (std::size_t i = 0; i < k_win.rows(); ++i) {
    const double e = rho_entry(q_row, k_win.row(i), d, isd);
    phi_acc += e;
    axpy(e, v_win.row(i), accum, d);
  }
  ops::add_flops(k_win.rows());
  return phi_acc;
}

// One output row of the landmark approximation:
//   out = b_gamma_row * (phi_delta^{-1} applied to the rows of delta_v),
// fused so the scaled matrix is never materialized. The per-entry arithmetic
// (scale by the reciprocal, then multiply-accumulate in row order) matches
// matmul(b_gamma, row_scale(delta_v, phi_delta)) bitwise; batch output,
// retroactive cache readout, and single-row readout all share this routine.
inline void nystrom_output_row(const double* bg_row, const std::vector<double>& phi_delta,
                               const Matrix& delta_v, double* out) {
  const std::size_t m = delta_v.rows(), d = delta_v.cols();
  for (std::size_t j = 0; j < d; ++j) out[j] = 0.0;
  for (std::size_t k = 0; k < m; ++k) {
    if (phi_delta[k] == 0.0)
      throw zero_scale_error("nystrom_output_row: zero landmark row sum");
    const double inv = 1.0 / phi_delta[k];
    const double w = bg_row[k];
    const double* dv = delta_v.row(k);
    for (std::size_t j = 0; j < d; ++j) out[j] += w * (dv[j] * inv);
  }
  ops::add_flops(2 * m * d + m);
}

// Everything the landmark approximation computes besides the output rows;
// the continual landmark states adopt these verbatim as their initial
// caches.
struct NystromIntermediates {
  Matrix b;                       // rho(Q, K~), n x m
  std::vector<double> phi_b;      // row sums of b
  Matrix gamma;                   // rho(Q~, K~), m x m
  std::vector<double> phi_gamma;  // row sums of gamma
  Matrix gamma_pinv;              // pseudo-inverse of row-scaled gamma
  Matrix b_gamma;                 // row-scaled b times gamma_pinv, n x m
  std::vector<double> phi_delta;  // row sums of rho(Q~, K), length m
  Matrix delta_v;                 // rho(Q~, K) V, m x d
};

inline NystromIntermediates nystrom_caches(const AttentionInput& in, const Matrix& q_land,
                                           const Matrix& k_land, std::size_t pinv_iters) {
  if (q_land.rows() == 0 || q_land.rows() != k_land.rows() ||
      q_land.cols() != in.d() || k_land.cols() != in.d())
    throw dimension_error("nystrom_caches: landmarks must share one m x d shape, m >= 1");
  NystromIntermediates c;
  c.b = rho(in.q, k_land, in.d());
  c.phi_b = phi(c.b);
  c.gamma = rho(q_land, k_land, in.d());
  c.phi_gamma = phi(c.gamma);
  c.gamma_pinv = pinv_iterative(row_scale(c.gamma, c.phi_gamma), pinv_iters);
  c.b_gamma = matmul(row_scale(c.b, c.phi_b), c.gamma_pinv);
  Matrix delta = rho(q_land, in.k, in.d());
  c.phi_delta = phi(delta);
  c.delta_v = matmul(delta, in.v);
  return c;
}

// Landmark approximation of sda_exact with the pinned evaluation order:
// the row-normalized B and pseudo-inverted row-normalized Gamma are
// multiplied first, then applied to the row-normalized Delta V. The scaled
// Delta V is formed once; its entries match nystrom_output_row's inner
// scaling bitwise, so batch rows and single-row readouts coincide.
inline Matrix sda_nystrom(const AttentionInput& in, const Matrix& q_land, const Matrix& k_land,
                          std::size_t pinv_iters = 6) {
  NystromIntermediates c = nystrom_caches(in, q_land, k_land, pinv_iters);
  return matmul(c.b_gamma, row_scale(c.delta_v, c.phi_delta));
}

// Landmark approximation with a precomputed gamma_pinv: the fixed-landmark
// batch variant, which skips the Gamma kernel and the pseudo-inverse.
inline Matrix sda_nystrom_fixed(const AttentionInput& in, const Matrix& q_land,
                                const Matrix& k_land, const Matrix& gamma_pinv) {
  if (q_land.rows() == 0 || q_land.rows() != k_land.rows() ||
      q_land.cols() != in.d() || k_land.cols() != in.d())
    throw dimension_error("sda_nystrom_fixed: landmarks must share one m x d shape, m >= 1");
  if (gamma_pinv.rows() != q_land.rows() || gamma_pinv.cols() != q_land.rows())
    throw dimension_error("sda_nystrom_fixed: gamma_pinv must be m x m");
  Matrix b = rho(in.q, k_land, in.d());
  std::vector<double> phi_b = phi(b);
  Matrix b_gamma = matmul(row_scale(b, phi_b), gamma_pinv);
  Matrix delta = rho(q_land, in.k, in.d());
  std::vector<double> phi_delta = phi(delta);
  Matrix delta_v = matmul(delta, in.v);
  return matmul(b_gamma, row_scale(delta_v, phi_delta));
}

}  // namespace conystrom
