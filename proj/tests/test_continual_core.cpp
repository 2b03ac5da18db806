// Continual exact-attention tests: cached-state steps against from-scratch
// batch evaluation on the same window, bitwise agreement between the
// retroactive and single-output forms, refresh behavior, and the block step.

#include <catch2/catch_amalgamated.hpp>

#include <cstddef>
#include <vector>

#include "conystrom/conystrom.hpp"
#include "support/oracles.hpp"

using conystrom::AttentionInput;
using conystrom::Matrix;
using conystrom::TokenTriple;

namespace {

AttentionInput random_window(std::size_t n, std::size_t d, conystrom::SplitMix64& rng) {
  Matrix q = conystrom::random_matrix(n, d, rng);
  Matrix k = conystrom::random_matrix(n, d, rng);
  Matrix v = conystrom::random_matrix(n, d, rng);
  return AttentionInput(std::move(q), std::move(k), std::move(v));
}

TokenTriple random_token(std::size_t d, conystrom::SplitMix64& rng) {
  std::vector<double> q(d), k(d), v(d);
  for (std::size_t j = 0; j < d; ++j) q[j] = rng.symmetric();
  for (std::size_t j = 0; j < d; ++j) k[j] = rng.symmetric();
  for (std::size_t j = 0; j < d; ++j) v[j] = rng.symmetric();
  return TokenTriple(std::move(q), std::move(k), std::move(v));
}

AttentionInput window_of(const conystrom::CoReState& state) {
  return AttentionInput(state.q_win.to_matrix(), state.k_win.to_matrix(),
                        state.v_win.to_matrix());
}

}  // namespace

TEST_CASE("a fresh retroactive state reproduces batch attention bitwise") {
  conystrom::SplitMix64 rng(101);
  const AttentionInput window = random_window(6, 3, rng);
  const conystrom::CoReState state(window);
  REQUIRE(state.retroactive() == conystrom::sda_exact(window));
}

TEST_CASE("streamed retroactive attention tracks from-scratch evaluation") {
  conystrom::SplitMix64 rng(102);
  conystrom::CoReState state = conystrom::core_init(random_window(8, 3, rng));
  for (std::size_t step = 0; step < 30; ++step) {
    const Matrix got = conystrom::core_step_retroactive(state, random_token(3, rng));
    const Matrix want = conystrom::sda_exact(window_of(state));
    REQUIRE(oracles::rel_frob(got, want) <= 1e-10);
  }
  SECTION("the window really is the last n tokens") {
    conystrom::SplitMix64 replay(103);
    conystrom::CoReState s2 = conystrom::core_init(random_window(4, 2, replay));
    Matrix pushed(4, 2);
    for (std::size_t step = 0; step < 4; ++step) {
      const TokenTriple t = random_token(2, replay);
      for (std::size_t j = 0; j < 2; ++j) pushed(step, j) = t.q[j];
      s2.push(t);
    }
    REQUIRE(s2.q_win.to_matrix() == pushed);
  }
}

TEST_CASE("single output equals the last retroactive row bitwise") {
  conystrom::SplitMix64 rng(104);
  conystrom::CoReState state = conystrom::core_init(random_window(7, 4, rng));
  for (std::size_t step = 0; step < 15; ++step) {
    state.push(random_token(4, rng));
    const Matrix retro = state.retroactive();
    const std::vector<double> single = state.newest();
    for (std::size_t j = 0; j < 4; ++j) REQUIRE(single[j] == retro(6, j));
  }
}

TEST_CASE("single-output state matches the retroactive state's newest row bitwise") {
  conystrom::SplitMix64 rng(105);
  const AttentionInput window = random_window(6, 3, rng);
  conystrom::CoReState retro_state = conystrom::core_init(window);
  conystrom::CoSiState single_state(window);
  for (std::size_t step = 0; step < 20; ++step) {
    const TokenTriple t = random_token(3, rng);
    retro_state.push(t);
    const std::vector<double> got = conystrom::core_step_single(single_state, t);
    const std::vector<double> want = retro_state.newest();
    REQUIRE(got == want);
  }
  REQUIRE(single_state.steps == 20);
}

TEST_CASE("refresh recomputes the caches to batch values exactly") {
  conystrom::SplitMix64 rng(106);
  conystrom::CoReState state = conystrom::core_init(random_window(5, 3, rng));
  for (std::size_t step = 0; step < 17; ++step) state.push(random_token(3, rng));
  state.refresh();
  REQUIRE(state.retroactive() == conystrom::sda_exact(window_of(state)));
}

TEST_CASE("periodic refresh keeps a long stream on the batch trajectory") {
  conystrom::SplitMix64 rng(107);
  const AttentionInput window = random_window(6, 2, rng);
  conystrom::CoReState state = conystrom::core_init(window, 5);  // refresh every 5 steps
  REQUIRE(state.refresh_interval == 5);
  for (std::size_t step = 0; step < 60; ++step) {
    state.push(random_token(2, rng));
    REQUIRE(oracles::rel_frob(state.retroactive(), conystrom::sda_exact(window_of(state))) <=
            1e-11);
  }
  SECTION("the default interval is ten windows") {
    const conystrom::CoReState fresh(window);
    REQUIRE(fresh.refresh_interval == 60);
  }
}

TEST_CASE("a block of tokens equals the same tokens stepped one at a time") {
  conystrom::SplitMix64 rng(108);
  const AttentionInput window = random_window(6, 3, rng);
  conystrom::CoReState by_block = conystrom::core_init(window);
  conystrom::CoReState by_steps = conystrom::core_init(window);
  const AttentionInput block = random_window(3, 3, rng);  // any 3 x d triple works
  const Matrix got = conystrom::block_step(by_block, block);
  Matrix want;
  for (std::size_t i = 0; i < 3; ++i) {
    TokenTriple t(std::vector<double>(block.q.row(i), block.q.row(i) + 3),
                  std::vector<double>(block.k.row(i), block.k.row(i) + 3),
                  std::vector<double>(block.v.row(i), block.v.row(i) + 3));
    want = conystrom::core_step_retroactive(by_steps, t);
  }
  REQUIRE(got == want);
  SECTION("single-output block step returns the last token's output") {
    conystrom::CoSiState s1(window);
    conystrom::CoSiState s2(window);
    const std::vector<double> block_out = conystrom::block_step(s1, block);
    std::vector<double> step_out;
    for (std::size_t i = 0; i < 3; ++i) {
      TokenTriple t(std::vector<double>(block.q.row(i), block.q.row(i) + 3),
                    std::vector<double>(block.k.row(i), block.k.row(i) + 3),
                    std::vector<double>(block.v.row(i), block.v.row(i) + 3));
      step_out = s2.step(t);
    }
    REQUIRE(block_out == step_out);
  }
  SECTION("a block longer than the window is rejected") {
    conystrom::CoReState s = conystrom::core_init(window);
    REQUIRE_THROWS_AS(conystrom::block_step(s, random_window(7, 3, rng)), std::invalid_argument);
  }
}

TEST_CASE("token and state shapes are validated") {
  conystrom::SplitMix64 rng(109);
  conystrom::CoReState state = conystrom::core_init(random_window(4, 3, rng));
  REQUIRE_THROWS_AS(state.push(random_token(2, rng)), conystrom::dimension_error);
  REQUIRE_THROWS_AS(TokenTriple({1.0}, {1.0, 2.0}, {1.0}), conystrom::dimension_error);
  REQUIRE_THROWS_AS(conystrom::CoSiState(Matrix(3, 2), Matrix(2, 2)),
                    conystrom::dimension_error);
}

TEST_CASE("instrumented step cost tracks the analytic per-step count") {
  conystrom::SplitMix64 rng(110);
  const std::size_t n = 64, d = 16;
  conystrom::CoReState retro_state = conystrom::core_init(random_window(n, d, rng));
  conystrom::CoSiState single_state(retro_state.k_win.to_matrix(), retro_state.v_win.to_matrix());
  const TokenTriple t = random_token(d, rng);

  conystrom::ops::reset();
  (void)conystrom::core_step_retroactive(retro_state, t);
  const double retro_measured = static_cast<double>(conystrom::ops::flop_count);
  const double retro_analytic =
      static_cast<double>(conystrom::VariantCost(conystrom::Variant::CoRe, n, d).flops());
  REQUIRE(retro_measured / retro_analytic >= 0.5);
  REQUIRE(retro_measured / retro_analytic <= 2.0);

  conystrom::ops::reset();
  (void)conystrom::core_step_single(single_state, t);
  const double single_measured = static_cast<double>(conystrom::ops::flop_count);
  const double single_analytic =
      static_cast<double>(conystrom::VariantCost(conystrom::Variant::CoSi, n, d).flops());
  REQUIRE(single_measured / single_analytic >= 0.5);
  REQUIRE(single_measured / single_analytic <= 2.0);
}
