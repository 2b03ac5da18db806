#pragma once

// Independent reference implementations used only by the test suite. These
// deliberately share no code with the library kernels: extended-precision
// naive loops, stabilized softmax, and an SVD-based pseudo-inverse provide
// outside checks for the library's fused and incrementally updated paths.

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <vector>

#include "conystrom/matrix.hpp"
#include "conystrom/rng.hpp"

namespace oracles {

using conystrom::Matrix;

// Exact attention by a naive triple loop in long double with a stabilized
// softmax (row-max subtraction). Mathematically identical to the raw
// exponential form; numerically good to ~1e-18 relative.
inline Matrix naive_attention(const Matrix& q, const Matrix& k, const Matrix& v) {
  const std::size_t n = q.rows(), d = q.cols();
  const long double inv_sqrt_d = 1.0L / std::sqrt(static_cast<long double>(d));
  Matrix out(n, d);
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<long double> logits(n);
    long double row_max = -1e30L;
    for (std::size_t j = 0; j < n; ++j) {
      long double acc = 0.0L;
      for (std::size_t c = 0; c < d; ++c)
        acc += static_cast<long double>(q(i, c)) * static_cast<long double>(k(j, c));
      logits[j] = acc * inv_sqrt_d;
      if (logits[j] > row_max) row_max = logits[j];
    }
    long double denom = 0.0L;
    for (std::size_t j = 0; j < n; ++j) {
      logits[j] = std::exp(logits[j] - row_max);
      denom += logits[j];
    }
    for (std::size_t c = 0; c < d; ++c) {
      long double acc = 0.0L;
      for (std::size_t j = 0; j < n; ++j)
        acc += logits[j] * static_cast<long double>(v(j, c));
      out(i, c) = static_cast<double>(acc / denom);
    }
  }
  return out;
}

// Row-stochastic kernel s(a bT / sqrt(d)) in long double with stabilization.
inline std::vector<std::vector<long double>> softmax_rows(const Matrix& a, const Matrix& b) {
  const std::size_t p = a.rows(), q = b.rows(), d = a.cols();
  const long double inv_sqrt_d = 1.0L / std::sqrt(static_cast<long double>(d));
  std::vector<std::vector<long double>> out(p, std::vector<long double>(q));
  for (std::size_t i = 0; i < p; ++i) {
    long double row_max = -1e30L;
    for (std::size_t j = 0; j < q; ++j) {
      long double acc = 0.0L;
      for (std::size_t c = 0; c < d; ++c)
        acc += static_cast<long double>(a(i, c)) * static_cast<long double>(b(j, c));
      out[i][j] = acc * inv_sqrt_d;
      if (out[i][j] > row_max) row_max = out[i][j];
    }
    long double denom = 0.0L;
    for (std::size_t j = 0; j < q; ++j) {
      out[i][j] = std::exp(out[i][j] - row_max);
      denom += out[i][j];
    }
    for (std::size_t j = 0; j < q; ++j) out[i][j] /= denom;
  }
  return out;
}

// Moore-Penrose pseudo-inverse of a square matrix by one-sided Jacobi SVD in
// long double. Singular values below rcond times the largest are treated as
// zero.
inline Matrix svd_pinv(const Matrix& g, double rcond = 1e-13) {
  const std::size_t m = g.rows();
  std::vector<std::vector<long double>> a(m, std::vector<long double>(m));
  std::vector<std::vector<long double>> vmat(m, std::vector<long double>(m, 0.0L));
  for (std::size_t i = 0; i < m; ++i) {
    vmat[i][i] = 1.0L;
    for (std::size_t j = 0; j < m; ++j) a[i][j] = static_cast<long double>(g(i, j));
  }
  // One-sided Jacobi: orthogonalize column pairs of a, accumulating the
  // rotations into vmat. a ends as U * diag(sigma), vmat as V.
  for (std::size_t sweep = 0; sweep < 100; ++sweep) {
    long double off = 0.0L;
    for (std::size_t p = 0; p + 1 < m; ++p) {
      for (std::size_t q = p + 1; q < m; ++q) {
        long double app = 0.0L, aqq = 0.0L, apq = 0.0L;
        for (std::size_t r = 0; r < m; ++r) {
          app += a[r][p] * a[r][p];
          aqq += a[r][q] * a[r][q];
          apq += a[r][p] * a[r][q];
        }
        if (std::abs(apq) <= 1e-30L * std::sqrt(app * aqq)) continue;
        off += std::abs(apq);
        const long double tau = (aqq - app) / (2.0L * apq);
        const long double t = (tau >= 0.0L ? 1.0L : -1.0L) /
                              (std::abs(tau) + std::sqrt(1.0L + tau * tau));
        const long double c = 1.0L / std::sqrt(1.0L + t * t);
        const long double s = c * t;
        for (std::size_t r = 0; r < m; ++r) {
          const long double ap = a[r][p], aq = a[r][q];
          a[r][p] = c * ap - s * aq;
          a[r][q] = s * ap + c * aq;
          const long double vp = vmat[r][p], vq = vmat[r][q];
          vmat[r][p] = c * vp - s * vq;
          vmat[r][q] = s * vp + c * vq;
        }
      }
    }
    if (off == 0.0L) break;
  }
  std::vector<long double> sigma(m);
  long double sigma_max = 0.0L;
  for (std::size_t j = 0; j < m; ++j) {
    long double acc = 0.0L;
    for (std::size_t r = 0; r < m; ++r) acc += a[r][j] * a[r][j];
    sigma[j] = std::sqrt(acc);
    if (sigma[j] > sigma_max) sigma_max = sigma[j];
  }
  // pinv = V diag(1/sigma) UT with u_j = a_j / sigma_j.
  Matrix out(m, m);
  for (std::size_t j = 0; j < m; ++j) {
    if (sigma[j] <= static_cast<long double>(rcond) * sigma_max || sigma[j] == 0.0L) continue;
    const long double inv = 1.0L / sigma[j];
    for (std::size_t r = 0; r < m; ++r) {
      const long double vrj = vmat[r][j];
      for (std::size_t cidx = 0; cidx < m; ++cidx) {
        // u[cidx][j] = a[cidx][j] / sigma[j]
        out(r, cidx) = static_cast<double>(static_cast<long double>(out(r, cidx)) +
                                           vrj * inv * (a[cidx][j] * inv));
      }
    }
  }
  return out;
}

// Direct three-factor landmark approximation: row-stochastic kernels built
// with stabilized softmax and combined through the SVD pseudo-inverse, all
// in long double. Independent of the library's phi/row_scale composition.
inline Matrix nystrom_direct(const Matrix& q, const Matrix& k, const Matrix& v,
                             const Matrix& q_land, const Matrix& k_land) {
  const std::size_t n = q.rows(), d = q.cols(), m = q_land.rows();
  const auto s1 = softmax_rows(q, k_land);       // n x m
  const auto s2 = softmax_rows(q_land, k_land);  // m x m
  const auto s3 = softmax_rows(q_land, k);       // m x n
  Matrix s2m(m, m);
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < m; ++j) s2m(i, j) = static_cast<double>(s2[i][j]);
  const Matrix s2p = svd_pinv(s2m);
  // s3v = s3 * v, m x d
  std::vector<std::vector<long double>> s3v(m, std::vector<long double>(d, 0.0L));
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j)
      for (std::size_t c = 0; c < d; ++c)
        s3v[i][c] += s3[i][j] * static_cast<long double>(v(j, c));
  // mid = s1 * s2p, n x m
  std::vector<std::vector<long double>> mid(n, std::vector<long double>(m, 0.0L));
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < m; ++j)
      for (std::size_t c = 0; c < m; ++c)
        mid[i][j] += s1[i][c] * static_cast<long double>(s2p(c, j));
  Matrix out(n, d);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t c = 0; c < d; ++c) {
      long double acc = 0.0L;
      for (std::size_t j = 0; j < m; ++j) acc += mid[i][j] * s3v[j][c];
      out(i, c) = static_cast<double>(acc);
    }
  return out;
}

// Plain Lloyd iteration with the same seeded initialization contract as the
// library (distinct uniform rows by rejection), written independently. No
// empty-cluster handling: callers supply well-separated data.
inline Matrix lloyd_reference(const Matrix& tokens, std::size_t m, std::uint64_t seed,
                              std::size_t iters = 100) {
  const std::size_t n = tokens.rows(), d = tokens.cols();
  conystrom::SplitMix64 rng(seed);
  std::vector<std::size_t> chosen;
  while (chosen.size() < m) {
    const std::size_t cand = static_cast<std::size_t>(rng.below(n));
    bool seen = false;
    for (std::size_t c : chosen) seen = seen || c == cand;
    if (!seen) chosen.push_back(cand);
  }
  std::vector<std::vector<long double>> centers(m, std::vector<long double>(d));
  for (std::size_t c = 0; c < m; ++c)
    for (std::size_t j = 0; j < d; ++j)
      centers[c][j] = static_cast<long double>(tokens(chosen[c], j));
  std::vector<std::size_t> assign(n, 0), prev(n, m);
  for (std::size_t it = 0; it < iters; ++it) {
    for (std::size_t i = 0; i < n; ++i) {
      long double best = 1e300L;
      std::size_t best_c = 0;
      for (std::size_t c = 0; c < m; ++c) {
        long double acc = 0.0L;
        for (std::size_t j = 0; j < d; ++j) {
          const long double diff = static_cast<long double>(tokens(i, j)) - centers[c][j];
          acc += diff * diff;
        }
        if (acc < best) {
          best = acc;
          best_c = c;
        }
      }
      assign[i] = best_c;
    }
    if (assign == prev) break;
    prev = assign;
    std::vector<std::size_t> counts(m, 0);
    for (std::size_t c = 0; c < m; ++c)
      for (std::size_t j = 0; j < d; ++j) centers[c][j] = 0.0L;
    for (std::size_t i = 0; i < n; ++i) {
      counts[assign[i]] += 1;
      for (std::size_t j = 0; j < d; ++j)
        centers[assign[i]][j] += static_cast<long double>(tokens(i, j));
    }
    for (std::size_t c = 0; c < m; ++c)
      if (counts[c] > 0)
        for (std::size_t j = 0; j < d; ++j)
          centers[c][j] /= static_cast<long double>(counts[c]);
  }
  Matrix out(m, d);
  for (std::size_t c = 0; c < m; ++c)
    for (std::size_t j = 0; j < d; ++j) out(c, j) = static_cast<double>(centers[c][j]);
  return out;
}

inline double rel_frob(const Matrix& got, const Matrix& want) {
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < got.size(); ++i) {
    const double diff = got.data()[i] - want.data()[i];
    num += diff * diff;
    den += want.data()[i] * want.data()[i];
  }
  if (den == 0.0) return num == 0.0 ? 0.0 : 1e300;
  return std::sqrt(num / den);
}

inline double rel_norm(const std::vector<double>& got, const std::vector<double>& want) {
  double num = 0.0, den = 0.0;
  for (std::size_t j = 0; j < got.size(); ++j) {
    const double diff = got[j] - want[j];
    num += diff * diff;
    den += want[j] * want[j];
  }
  if (den == 0.0) return num == 0.0 ? 0.0 : 1e300;
  return std::sqrt(num / den);
}

// Frobenius distance without normalization, for near-zero references.
inline double abs_frob(const Matrix& got, const Matrix& want) {
  double num = 0.0;
  for (std::size_t i = 0; i < got.size(); ++i) {
    const double diff = got.data()[i] - want.data()[i];
    num += diff * diff;
  }
  return std::sqrt(num);
}

// Clustered token stream: n tokens in m contiguous segments, each segment
// drawn around its own center with small noise. Produces landmark kernel
// matrices with benign conditioning, mimicking feature streams with local
// structure.
inline Matrix clustered_tokens(std::size_t n, std::size_t m, std::size_t d, double spread,
                               double noise, std::uint64_t seed) {
  conystrom::SplitMix64 rng(seed);
  Matrix centers(m, d);
  for (std::size_t i = 0; i < centers.size(); ++i)
    centers.data()[i] = spread * rng.symmetric();
  Matrix out(n, d);
  const std::size_t base = n / m, extra = n % m;
  std::size_t row = 0;
  for (std::size_t s = 0; s < m; ++s) {
    const std::size_t len = base + (s < extra ? 1 : 0);
    for (std::size_t t = 0; t < len; ++t, ++row)
      for (std::size_t j = 0; j < d; ++j)
        out(row, j) = centers(s, j) + noise * rng.symmetric();
  }
  return out;
}

}  // namespace oracles
