// Batch-path tests: exact attention against an extended-precision oracle,
// segment partitioning, the windowed attention row primitive, and the
// landmark approximation against a direct SVD-based evaluation.

#include <catch2/catch_amalgamated.hpp>

#include <cstddef>
#include <vector>

#include "conystrom/conystrom.hpp"
#include "support/oracles.hpp"

using conystrom::AttentionInput;
using conystrom::Matrix;
using Catch::Matchers::WithinAbs;

namespace {

AttentionInput random_input(std::size_t n, std::size_t d, std::uint64_t seed) {
  conystrom::SplitMix64 rng(seed);
  Matrix q = conystrom::random_matrix(n, d, rng);
  Matrix k = conystrom::random_matrix(n, d, rng);
  Matrix v = conystrom::random_matrix(n, d, rng);
  return AttentionInput(std::move(q), std::move(k), std::move(v));
}

}  // namespace

TEST_CASE("exact attention matches the extended-precision oracle") {
  SECTION("frozen 3 x 2 instance") {
    const AttentionInput in(Matrix(3, 2, {1.0, 0.0, 0.0, 1.0, 1.0, 1.0}),
                            Matrix(3, 2, {1.0, 1.0, 0.0, 1.0, 1.0, 0.0}),
                            Matrix(3, 2, {1.0, 2.0, 3.0, 4.0, 5.0, 6.0}));
    const Matrix got = conystrom::sda_exact(in);
    const Matrix want = oracles::naive_attention(in.q, in.k, in.v);
    REQUIRE(oracles::rel_frob(got, want) <= 1e-12);
  }
  SECTION("random 16 x 8 instance") {
    const AttentionInput in = random_input(16, 8, 3);
    REQUIRE(oracles::rel_frob(conystrom::sda_exact(in),
                              oracles::naive_attention(in.q, in.k, in.v)) <= 1e-12);
  }
  SECTION("identical keys give uniform weights, so rows are value means") {
    conystrom::SplitMix64 rng(5);
    Matrix q = conystrom::random_matrix(4, 3, rng);
    Matrix v = conystrom::random_matrix(4, 3, rng);
    Matrix k(4, 3);
    for (std::size_t i = 0; i < 4; ++i)
      for (std::size_t j = 0; j < 3; ++j) k(i, j) = 0.25 * (j + 1.0);
    std::vector<double> mean(3, 0.0);
    for (std::size_t i = 0; i < 4; ++i)
      for (std::size_t j = 0; j < 3; ++j) mean[j] += v(i, j) / 4.0;
    const Matrix out = conystrom::sda_exact(AttentionInput(q, k, v));
    for (std::size_t i = 0; i < 4; ++i)
      for (std::size_t j = 0; j < 3; ++j)
        REQUIRE_THAT(out(i, j), WithinAbs(mean[j], 1e-12));
  }
}

TEST_CASE("attention input validates shapes") {
  REQUIRE_THROWS_AS(AttentionInput(Matrix(2, 2), Matrix(3, 2), Matrix(2, 2)),
                    conystrom::dimension_error);
  REQUIRE_THROWS_AS(AttentionInput(Matrix(), Matrix(), Matrix()), conystrom::dimension_error);
}

TEST_CASE("segment partitioning puts the remainder in the leading segments") {
  REQUIRE(conystrom::segment_sizes(7, 3) == std::vector<std::size_t>{3, 2, 2});
  REQUIRE(conystrom::segment_sizes(20, 4) == std::vector<std::size_t>{5, 5, 5, 5});
  REQUIRE(conystrom::segment_sizes(5, 5) == std::vector<std::size_t>{1, 1, 1, 1, 1});
  REQUIRE_THROWS_AS(conystrom::segment_sizes(4, 5), std::invalid_argument);
  REQUIRE_THROWS_AS(conystrom::segment_sizes(4, 0), std::invalid_argument);
}

TEST_CASE("segment means average contiguous token runs") {
  const Matrix tokens(7, 2, {0.0, 3.0, 6.0, 9.0, 12.0, 15.0, 1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0, 8.0});
  const Matrix means = conystrom::segment_means(tokens, 3);
  REQUIRE(means == Matrix(3, 2, {6.0, 9.0, 2.0, 3.0, 6.0, 7.0}));
}

TEST_CASE("windowed attention row agrees bitwise with the batch row") {
  const AttentionInput in = random_input(6, 4, 9);
  const Matrix a = conystrom::rho(in.q, in.k, in.d());
  const std::vector<double> s = conystrom::phi(a);
  const Matrix av = conystrom::matmul(a, in.v);
  std::vector<double> accum(in.d());
  for (std::size_t i = 0; i < in.n(); ++i) {
    for (double& x : accum) x = 0.0;
    const double got_phi = conystrom::attend_window(in.q.row(i), in.k, in.v, accum.data());
    REQUIRE(got_phi == s[i]);
    for (std::size_t j = 0; j < in.d(); ++j) REQUIRE(accum[j] == av(i, j));
  }
}

TEST_CASE("landmark output row agrees bitwise with the two-step product") {
  conystrom::SplitMix64 rng(13);
  const Matrix bg = conystrom::random_matrix(5, 3, rng);
  const Matrix delta_v = conystrom::random_matrix(3, 4, rng);
  const std::vector<double> phi_delta = {1.5, 0.25, 3.0};
  const Matrix want = conystrom::matmul(bg, conystrom::row_scale(delta_v, phi_delta));
  std::vector<double> out(4);
  for (std::size_t i = 0; i < 5; ++i) {
    conystrom::nystrom_output_row(bg.row(i), phi_delta, delta_v, out.data());
    for (std::size_t j = 0; j < 4; ++j) REQUIRE(out[j] == want(i, j));
  }
  SECTION("a zero landmark row sum is an underflow error") {
    REQUIRE_THROWS_AS(
        conystrom::nystrom_output_row(bg.row(0), {1.0, 0.0, 1.0}, delta_v, out.data()),
        conystrom::zero_scale_error);
  }
}

TEST_CASE("landmark approximation matches the direct SVD evaluation") {
  const AttentionInput in(Matrix(4, 2, {1.0, 0.0, 0.0, 1.0, 1.0, 1.0, 1.0, -1.0}),
                          Matrix(4, 2, {1.0, 1.0, 1.0, 0.0, 0.0, 1.0, -1.0, 1.0}),
                          Matrix(4, 2, {1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0, 8.0}));
  const Matrix q_land = conystrom::segment_means(in.q, 2);
  const Matrix k_land = conystrom::segment_means(in.k, 2);
  const Matrix got = conystrom::sda_nystrom(in, q_land, k_land);
  const Matrix want = oracles::nystrom_direct(in.q, in.k, in.v, q_land, k_land);
  REQUIRE(oracles::rel_frob(got, want) <= 1e-6);
}

TEST_CASE("landmark approximation is exact when landmarks span the tokens") {
  // With one landmark per distinct token the kernel matrix has full landmark
  // rank and the approximation reproduces exact attention.
  const std::size_t n = 4, d = 8;
  Matrix q(n, d), k(n, d);
  for (std::size_t i = 0; i < n; ++i) {
    q(i, i) = 3.0;
    k(i, (i + 1) % n) = 3.0;
  }
  conystrom::SplitMix64 rng(17);
  const Matrix v = conystrom::random_matrix(n, d, rng);
  const AttentionInput in(q, k, v);
  const Matrix got = conystrom::sda_nystrom(in, q, k);
  REQUIRE(oracles::rel_frob(got, conystrom::sda_exact(in)) <= 1e-8);
}

TEST_CASE("identical keys and landmark keys reduce the approximation to value means") {
  conystrom::SplitMix64 rng(23);
  const Matrix q = conystrom::random_matrix(5, 3, rng);
  const Matrix v = conystrom::random_matrix(5, 3, rng);
  Matrix k(5, 3), k_land(2, 3);
  for (std::size_t i = 0; i < 5; ++i)
    for (std::size_t j = 0; j < 3; ++j) k(i, j) = 0.1 * (j + 1.0);
  for (std::size_t i = 0; i < 2; ++i)
    for (std::size_t j = 0; j < 3; ++j) k_land(i, j) = 0.1 * (j + 1.0);
  const Matrix q_land = conystrom::segment_means(q, 2);
  const Matrix out = conystrom::sda_nystrom(AttentionInput(q, k, v), q_land, k_land);
  for (std::size_t j = 0; j < 3; ++j) {
    double mean = 0.0;
    for (std::size_t i = 0; i < 5; ++i) mean += v(i, j) / 5.0;
    for (std::size_t i = 0; i < 5; ++i) REQUIRE_THAT(out(i, j), WithinAbs(mean, 1e-12));
  }
}

TEST_CASE("fixed-landmark batch path reuses a precomputed pseudo-inverse") {
  // Uniform tokens give a nearly rank-one landmark kernel, so this case runs
  // the pseudo-inverse at 24 iterations; both paths share that budget and the
  // comparison stays bitwise.
  const AttentionInput in = random_input(8, 4, 31);
  const Matrix q_land = conystrom::segment_means(in.q, 2);
  const Matrix k_land = conystrom::segment_means(in.k, 2);
  const conystrom::NystromIntermediates caches =
      conystrom::nystrom_caches(in, q_land, k_land, 24);
  const Matrix fixed = conystrom::sda_nystrom_fixed(in, q_land, k_land, caches.gamma_pinv);
  const Matrix scheduled = conystrom::sda_nystrom(in, q_land, k_land, 24);
  REQUIRE(fixed == scheduled);
  SECTION("no pseudo-inverse call happens on the fixed path") {
    conystrom::ops::reset();
    (void)conystrom::sda_nystrom_fixed(in, q_land, k_land, caches.gamma_pinv);
    REQUIRE(conystrom::ops::pinv_calls == 0);
  }
  SECTION("landmark and pseudo-inverse shapes are validated") {
    REQUIRE_THROWS_AS(conystrom::nystrom_caches(in, q_land, Matrix(3, 4), 6),
                      conystrom::dimension_error);
    REQUIRE_THROWS_AS(conystrom::sda_nystrom_fixed(in, q_land, k_land, Matrix(3, 3)),
                      conystrom::dimension_error);
  }
}
