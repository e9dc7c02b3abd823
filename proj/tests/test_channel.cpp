#include <catch2/catch_amalgamated.hpp>

#include "test_util.hpp"

using namespace pfsa;
using namespace testutil;
using Catch::Matchers::WithinAbs;

namespace {
// chi-square critical value, 10 degrees of freedom, significance 0.01
constexpr double kChi2Crit10 = 23.209251158954360;
constexpr double kMuDelta = 0.34883720930232559;  // (.3,.6) transformed at delta .25
constexpr double kNuDelta = 0.55813953488372093;
}  // namespace

TEST_CASE("channel config rejects delta outside [0,1)") {
  CHECK_THROWS_AS(ChannelConfig(1.0), std::invalid_argument);
  CHECK_THROWS_AS(ChannelConfig(-0.1), std::invalid_argument);
  CHECK_NOTHROW(ChannelConfig(0.0));
  CHECK_NOTHROW(ChannelConfig(0.99));
}

TEST_CASE("transmit") {
  SECTION("delta 0 is the identity") {
    Rng rng(1);
    SymbolSequence x{0, 1, 1, 0, 1};
    CHECK(transmit(x, ChannelConfig(0.0), rng) == x);
  }
  SECTION("output is an ordered subsequence") {
    Rng rng(2);
    Machine g = m2_machine({0.3, 0.6});
    for (int trial = 0; trial < 50; ++trial) {
      SymbolSequence x = generate(g, 64, rng);
      SymbolSequence y = transmit(x, ChannelConfig(0.6), rng);
      std::size_t pos = 0;
      for (int sym : y) {
        while (pos < x.size() && x[pos] != sym) ++pos;
        REQUIRE(pos < x.size());
        ++pos;
      }
    }
  }
  SECTION("output length is Binomial(n, 1 - delta)") {
    Rng rng(3);
    SymbolSequence x(10, 0);
    const int trials = 100000;
    std::vector<double> counts(11, 0.0);
    double total_len = 0.0;
    for (int t = 0; t < trials; ++t) {
      std::size_t len = transmit(x, ChannelConfig(0.5), rng).size();
      counts[len] += 1.0;
      total_len += static_cast<double>(len);
    }
    CHECK_THAT(total_len / trials, WithinAbs(5.0, 0.05));
    double chi2 = 0.0;
    double binom = 1.0;  // C(10, k) built incrementally
    for (int k = 0; k <= 10; ++k) {
      double expected = trials * binom / 1024.0;
      chi2 += (counts[k] - expected) * (counts[k] - expected) / expected;
      binom = binom * (10 - k) / (k + 1);
    }
    CHECK(chi2 < kChi2Crit10);
  }
}

TEST_CASE("transmit_until reaches the requested observed length") {
  Machine g = m2_machine({0.3, 0.6});
  Rng rng(4);
  ChannelRealization r = transmit_until(g, ChannelConfig(0.4), 500, rng);
  CHECK(r.output.size() == 500);
  CHECK(r.input.size() >= 500);
  // the output must be the channel's subsequence of the generated input
  std::size_t pos = 0;
  for (int sym : r.output) {
    while (pos < r.input.size() && r.input[pos] != sym) ++pos;
    REQUIRE(pos < r.input.size());
    ++pos;
  }
}

TEST_CASE("q_matrix") {
  SECTION("delta 0 gives the identity") {
    Matrix q = q_matrix(state_to_state(four_state_machine()), 0.0);
    for (std::size_t i = 0; i < 4; ++i)
      for (std::size_t j = 0; j < 4; ++j) CHECK_THAT(q(i, j), WithinAbs(i == j ? 1.0 : 0.0, 1e-14));
  }
  SECTION("frozen 2x2 example") {
    Matrix q = q_matrix(state_to_state(m2_machine({0.3, 0.6})), 0.25);
    CHECK_THAT(q(0, 0), WithinAbs(0.83720930232558140, 1e-13));
    CHECK_THAT(q(0, 1), WithinAbs(0.16279069767441862, 1e-13));
    CHECK_THAT(q(1, 0), WithinAbs(0.13953488372093023, 1e-13));
    CHECK_THAT(q(1, 1), WithinAbs(0.86046511627906974, 1e-13));
  }
  SECTION("row stochastic with the same stationary vector, even at delta .9") {
    Rng rng(5);
    for (int trial = 0; trial < 10; ++trial) {
      Machine g = random_deterministic_machine(rng, 2 + rng.uniform_index(6));
      Matrix q = q_matrix(state_to_state(g), 0.9);
      for (std::size_t i = 0; i < q.rows(); ++i) CHECK_THAT(q.row_sum(i), WithinAbs(1.0, 1e-10));
      auto p = stationary_distribution(g);
      CHECK(l1_distance(left_multiply(p, q), p) <= 1e-10);
    }
  }
  SECTION("sixteen states at delta .99 keep their conditioning") {
    Rng rng(51);
    Machine g = random_deterministic_machine(rng, 16);
    Matrix q = q_matrix(state_to_state(g), 0.99);
    for (std::size_t i = 0; i < 16; ++i) CHECK_THAT(q.row_sum(i), WithinAbs(1.0, 1e-10));
    Machine t = deletion_transform(g, 0.99);
    CHECK_FALSE(validate(t));
    CHECK(l1_distance(stationary_distribution(g), stationary_distribution(t)) <= 1e-9);
  }
}

TEST_CASE("deletion transform") {
  SECTION("delta 0 leaves the machine unchanged") {
    Machine g = four_state_machine();
    Machine t = deletion_transform(g, 0.0);
    for (std::size_t x = 0; x < 2; ++x)
      for (std::size_t i = 0; i < 4; ++i)
        for (std::size_t j = 0; j < 4; ++j)
          CHECK_THAT(t.gamma[x](i, j), WithinAbs(g.gamma[x](i, j), 1e-14));
  }
  SECTION("matrix route agrees with the M2 closed form") {
    Machine t = deletion_transform(m2_machine({0.3, 0.6}), 0.25);
    CHECK_THAT(t.gamma[0](0, 0), WithinAbs(kMuDelta, 1e-13));
    CHECK_THAT(t.gamma[0](1, 0), WithinAbs(kNuDelta, 1e-13));
    M2Params closed = m2_deletion_transform({0.3, 0.6}, 0.25);
    CHECK_THAT(closed.mu, WithinAbs(kMuDelta, 1e-13));
    CHECK_THAT(closed.nu, WithinAbs(kNuDelta, 1e-13));
    CHECK_THAT(t.gamma[0](0, 0), WithinAbs(closed.mu, 1e-12));
    CHECK_THAT(t.gamma[0](1, 0), WithinAbs(closed.nu, 1e-12));
  }
  SECTION("transform of the four-state machine is a valid generalized PFSA") {
    Machine t = deletion_transform(four_state_machine(), 0.4);
    CHECK(t.kind == MachineKind::generalized);
    CHECK_FALSE(validate(t));
    // per-symbol row masses match the transformed state-to-symbol matrix
    Matrix pt = state_to_symbol(t);
    for (std::size_t x = 0; x < 2; ++x)
      for (std::size_t i = 0; i < 4; ++i)
        CHECK_THAT(t.gamma[x].row_sum(i), WithinAbs(pt(i, x), 1e-14));
    // and it genuinely leaves the deterministic class
    Machine claim = t;
    claim.kind = MachineKind::deterministic;
    CHECK(validate(claim));
  }
  SECTION("M2 closure: single nonzero column per symbol") {
    Rng rng(6);
    for (int trial = 0; trial < 20; ++trial) {
      Machine t = deletion_transform(m2_machine(random_m2(rng)), rng.uniform(0.0, 0.95));
      for (std::size_t x = 0; x < 2; ++x) {
        std::size_t nonzero_cols = 0;
        for (std::size_t j = 0; j < 2; ++j)
          if (t.gamma[x](0, j) > 0.0 || t.gamma[x](1, j) > 0.0) ++nonzero_cols;
        CHECK(nonzero_cols == 1);
      }
    }
  }
  SECTION("stationary and symbol marginals survive the transform") {
    Rng rng(7);
    const double deltas[] = {0.1, 0.25, 0.5, 0.75};
    for (int trial = 0; trial < 10; ++trial) {
      Machine g = random_deterministic_machine(rng, 2 + rng.uniform_index(5));
      auto p = stationary_distribution(g);
      auto marginal = symbolic_derivative(g, p);
      for (double d : deltas) {
        Machine t = deletion_transform(g, d);
        auto pt = stationary_distribution(t);
        CHECK(l1_distance(p, pt) <= 1e-10);
        CHECK(l1_distance(marginal, symbolic_derivative(t, pt)) <= 1e-10);
      }
    }
  }
  SECTION("second eigenvalue maps as lambda (1-d) / (1 - d lambda)") {
    Rng rng(8);
    for (int trial = 0; trial < 20; ++trial) {
      M2Params p = random_m2(rng);
      double d = rng.uniform(0.0, 0.95);
      double lambda = p.mu - p.nu;
      Matrix pd = state_to_state(deletion_transform(m2_machine(p), d));
      double lambda_d = pd(0, 0) + pd(1, 1) - 1.0;  // trace minus the unit eigenvalue
      CHECK_THAT(lambda_d, WithinAbs(lambda * (1.0 - d) / (1.0 - d * lambda), 1e-10));
    }
  }
}

TEST_CASE("m2 deletion transform") {
  SECTION("fixed point on the diagonal") {
    for (double d : {0.0, 0.3, 0.7, 0.95}) {
      M2Params t = m2_deletion_transform({0.45, 0.45}, d);
      CHECK_THAT(t.mu, WithinAbs(0.45, 1e-15));
      CHECK_THAT(t.nu, WithinAbs(0.45, 1e-15));
    }
  }
  SECTION("parameter gap shrinks monotonically in delta") {
    Rng rng(9);
    for (int trial = 0; trial < 20; ++trial) {
      M2Params p = random_m2(rng);
      double prev = std::abs(p.mu - p.nu);
      for (double d = 0.05; d < 1.0; d += 0.05) {
        M2Params t = m2_deletion_transform(p, d);
        double gap = std::abs(t.mu - t.nu);
        CHECK(gap <= prev + 1e-15);
        prev = gap;
      }
    }
  }
}

TEST_CASE("deletion limit") {
  SECTION("M2 (.3,.6) tends to its symbol marginal") {
    auto limit = deletion_limit(m2_machine({0.3, 0.6}));
    CHECK_THAT(limit[0], WithinAbs(6.0 / 13.0, 1e-13));
    CHECK_THAT(limit[1], WithinAbs(7.0 / 13.0, 1e-13));
  }
  SECTION("single-state machine is its own limit") {
    auto limit = deletion_limit(single_state_bernoulli(0.2));
    CHECK_THAT(limit[0], WithinAbs(0.2, 1e-15));
    CHECK_THAT(limit[1], WithinAbs(0.8, 1e-15));
  }
  SECTION("closed-form transform approaches the limit as delta -> 1") {
    M2Params t = m2_deletion_transform({0.3, 0.6}, 0.999);
    CHECK_THAT(t.mu, WithinAbs(6.0 / 13.0, 1e-2));
    CHECK_THAT(t.nu, WithinAbs(6.0 / 13.0, 1e-2));
  }
}

TEST_CASE("channel output statistics match the transformed machine") {
  // Bigram conditionals of generate . transmit against the likelihood of
  // g(delta); for M2 the conditional given the previous symbol is exactly
  // the transformed parameter.
  Machine g = m2_machine({0.3, 0.6});
  Rng rng(10);
  ChannelRealization r = transmit_until(g, ChannelConfig(0.25), 200000, rng);
  double n00 = 0, n0 = 0, n10 = 0, n1 = 0;
  for (std::size_t i = 1; i < r.output.size(); ++i) {
    if (r.output[i - 1] == 0) {
      n0 += 1;
      n00 += (r.output[i] == 0);
    } else {
      n1 += 1;
      n10 += (r.output[i] == 0);
    }
  }
  CHECK_THAT(n00 / n0, WithinAbs(kMuDelta, 0.01));
  CHECK_THAT(n10 / n1, WithinAbs(kNuDelta, 0.01));
}

TEST_CASE("generalized generation matches exact block probabilities") {
  Machine t = deletion_transform(four_state_machine(), 0.4);
  Rng rng(11);
  SymbolSequence x = generate(t, 200000, rng);
  // empirical length-3 block frequencies vs chained likelihood steps
  double counts[8] = {0};
  for (std::size_t i = 2; i < x.size(); ++i)
    counts[(x[i - 2] << 2) | (x[i - 1] << 1) | x[i]] += 1.0;
  double total = static_cast<double>(x.size() - 2);
  for (int block = 0; block < 8; ++block) {
    SymbolSequence w{(block >> 2) & 1, (block >> 1) & 1, block & 1};
    CHECK_THAT(counts[block] / total, WithinAbs(sequence_probability(t, w), 0.005));
  }
}
