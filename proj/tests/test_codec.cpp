#include <catch2/catch_amalgamated.hpp>

#include "test_util.hpp"

using namespace pfsa;
using namespace testutil;
using Catch::Matchers::WithinAbs;

TEST_CASE("codebook validation") {
  CHECK_THROWS_AS(require_valid(Codebook{}), std::invalid_argument);
  CHECK_THROWS_AS(require_valid(Codebook{{{0.3, 0.6}, {0.3, 0.6}}, 0.2}), std::invalid_argument);
  CHECK_THROWS_AS(require_valid(Codebook{{{0.3, 0.6}}, 1.0}), std::invalid_argument);
  CHECK_NOTHROW(require_valid(Codebook{{{0.3, 0.6}, {0.6, 0.3}}, 0.2}));
}

TEST_CASE("encode") {
  Codebook book{{{0.3, 0.6}}, 0.2};
  SECTION("message index out of range") {
    Rng rng(1);
    CHECK_THROWS_AS(encode(book, 1, 10, rng), std::invalid_argument);
  }
  SECTION("realization of the message machine, deterministic per seed") {
    Rng a(7), b(7), c(7);
    SymbolSequence x = encode(book, 0, 300, a);
    CHECK(x.size() == 300);
    CHECK(x == encode(book, 0, 300, b));
    CHECK(x == generate(m2_machine(book.machines[0]), 300, c));
  }
  SECTION("near-deterministic machine emits long runs") {
    Codebook runs{{{0.99, 0.01}}, 0.0};
    Rng rng(2);
    SymbolSequence x = encode(runs, 0, 2000, rng);
    std::size_t switches = 0;
    for (std::size_t i = 1; i < x.size(); ++i) switches += (x[i] != x[i - 1]);
    CHECK(switches < 100);  // expected switch rate is about 1 percent
  }
  SECTION("empirical zero-frequency tracks the stationary marginal") {
    Rng rng(3);
    SymbolSequence x = encode(book, 0, 10000, rng);
    double zeros = 0;
    for (int sym : x) zeros += (sym == 0);
    CHECK_THAT(zeros / 1e4, WithinAbs(6.0 / 13.0, 0.015));  // 3 sigma with margin
  }
}

TEST_CASE("decode") {
  SECTION("single-machine book always answers message 0") {
    Codebook book{{{0.3, 0.6}}, 0.2};
    Rng rng(4);
    for (int t = 0; t < 5; ++t) {
      DecodeResult r = decode(book, encode(book, 0, 50, rng));
      CHECK(r.message == 0);
      CHECK(r.scores.size() == 1);
    }
  }
  SECTION("empty sequence is an error") {
    Codebook book{{{0.3, 0.6}}, 0.2};
    CHECK_THROWS_AS(decode(book, {}), std::invalid_argument);
  }
  SECTION("duplicating a machine cannot change the winning score, ties go low") {
    Codebook book{{{0.3, 0.6}, {0.7, 0.2}}, 0.2};
    Rng rng(5);
    SymbolSequence x = encode(book, 0, 200, rng);
    DecodeResult r = decode(book, x);
    Codebook doubled{{{0.3, 0.6}, {0.7, 0.2}, book.machines[r.message]}, 0.2};
    DecodeResult rd = decode(doubled, x);
    CHECK(rd.scores[rd.message] == r.scores[r.message]);
    CHECK(rd.message == r.message);  // duplicate sits at index 2, tie resolves low
    CHECK(rd.scores[2] == r.scores[r.message]);
  }
  SECTION("deterministic: equal inputs give bitwise equal results") {
    Codebook book{{{0.3, 0.6}, {0.7, 0.2}}, 0.2};
    Rng rng(6);
    SymbolSequence x = encode(book, 1, 150, rng);
    SymbolSequence y = x;
    DecodeResult a = decode(book, x), b = decode(book, y);
    CHECK(a.message == b.message);
    CHECK(a.scores == b.scores);
  }
  SECTION("scores converge to entropy rate plus KL of the transformed machines") {
    const double delta = 0.2;
    Codebook book{{{0.25, 0.7}, {0.8, 0.35}}, delta};
    M2Params t0 = m2_deletion_transform(book.machines[0], delta);
    M2Params t1 = m2_deletion_transform(book.machines[1], delta);
    Rng rng(7);
    SymbolSequence x = generate(m2_machine(t0), 100000, rng);
    DecodeResult r = decode(book, x);
    CHECK(r.message == 0);
    CHECK_THAT(r.scores[0], WithinAbs(entropy_rate_m2(t0), 0.02));
    CHECK_THAT(r.scores[1], WithinAbs(entropy_rate_m2(t0) + kl_rate_m2(t0, t1), 0.02));
  }
  SECTION("error rate falls with observed length") {
    DesignConfig cfg;
    cfg.num_messages = 10;
    cfg.seed = 11;
    Codebook book = design_codebook(cfg);
    ChannelConfig channel(0.2);
    const std::size_t lengths[] = {50, 100, 200};
    double rates[3];
    for (int li = 0; li < 3; ++li) {
      std::size_t errors = 0, trials = 1000;
      for (std::size_t t = 0; t < trials; ++t) {
        std::size_t message = t % book.size();
        Rng rng(derive_seed(50 + static_cast<std::uint64_t>(li), {t}));
        SymbolSequence x =
            transmit_until(m2_machine(book.machines[message]), channel, lengths[li], rng).output;
        if (decode(book, x).message != message) ++errors;
      }
      rates[li] = static_cast<double>(errors) / static_cast<double>(trials);
    }
    CHECK(rates[0] > rates[1]);
    CHECK(rates[1] > rates[2]);
  }
}

TEST_CASE("tamper detection") {
  Codebook book{{{0.3, 0.6}, {0.75, 0.25}, {0.15, 0.8}}, 0.2};
  auto make_sequences = [&](double channel_delta, std::size_t k, std::size_t length,
                            std::uint64_t seed) {
    std::vector<SymbolSequence> seqs;
    ChannelConfig channel(channel_delta);
    for (std::size_t j = 0; j < k; ++j) {
      std::size_t message = j % book.size();
      Rng rng(derive_seed(seed, {j}));
      seqs.push_back(transmit_until(m2_machine(book.machines[message]), channel, length, rng).output);
    }
    return seqs;
  };

  SECTION("unreachable cutoff never trips") {
    auto seqs = make_sequences(0.35, 60, 100, 1);
    TamperVerdict v = detect(book, seqs, {0.2, 0.1, 1e6, VoteMode::normalized});
    CHECK_FALSE(v.tampered);
    CHECK(v.vote_fraction == 0.0);
    for (const SequenceVote& s : v.per_sequence) CHECK_FALSE(s.voted);
  }
  SECTION("single-machine book flags a tampered channel") {
    Codebook solo{{{0.3, 0.6}}, 0.2};
    int hits = 0;
    for (std::uint64_t rerun = 0; rerun < 10; ++rerun) {
      std::vector<SymbolSequence> seqs;
      ChannelConfig channel(0.3);
      for (std::size_t j = 0; j < 200; ++j) {
        Rng rng(derive_seed(rerun, {j, 77}));
        seqs.push_back(transmit_until(m2_machine(solo.machines[0]), channel, 200, rng).output);
      }
      hits += detect(solo, seqs, {0.2, 0.1, 0.15, VoteMode::normalized}).tampered ? 1 : 0;
    }
    CHECK(hits >= 9);
  }
  SECTION("vote fraction is non-increasing in epsilon") {
    auto seqs = make_sequences(0.3, 100, 120, 2);
    double prev = 2.0;
    for (double eps : {0.0, 0.05, 0.1, 0.15, 0.2, 0.25, 0.5, 1.0}) {
      TamperVerdict v = detect(book, seqs, {0.2, 0.1, eps, VoteMode::normalized});
      CHECK(v.vote_fraction <= prev);
      prev = v.vote_fraction;
    }
  }
  SECTION("identical inputs, identical verdicts") {
    auto seqs = make_sequences(0.3, 50, 80, 3);
    TamperVerdict a = detect(book, seqs, {0.2, 0.1, 0.15, VoteMode::normalized});
    TamperVerdict b = detect(book, seqs, {0.2, 0.1, 0.15, VoteMode::normalized});
    CHECK(a.tampered == b.tampered);
    CHECK(a.vote_fraction == b.vote_fraction);
    REQUIRE(a.per_sequence.size() == b.per_sequence.size());
    for (std::size_t i = 0; i < a.per_sequence.size(); ++i) {
      CHECK(a.per_sequence[i].decoded == b.per_sequence[i].decoded);
      CHECK(a.per_sequence[i].excess == b.per_sequence[i].excess);
      CHECK(a.per_sequence[i].voted == b.per_sequence[i].voted);
    }
  }
  SECTION("machine on the mu = nu line has no entropy gain") {
    Codebook flat{{{0.4, 0.4}, {0.3, 0.6}}, 0.2};
    auto seqs = make_sequences(0.3, 10, 50, 4);
    CHECK_THROWS_AS(detect(flat, seqs, {0.2, 0.1, 0.15, VoteMode::normalized}),
                    std::invalid_argument);
  }
  SECTION("parameter validation") {
    auto seqs = make_sequences(0.3, 5, 50, 5);
    CHECK_THROWS_AS(detect(book, {}, {0.2, 0.1, 0.15, VoteMode::normalized}),
                    std::invalid_argument);
    CHECK_THROWS_AS(detect(book, seqs, {0.2, 0.0, 0.15, VoteMode::normalized}),
                    std::invalid_argument);
    CHECK_THROWS_AS(detect(book, seqs, {0.95, 0.1, 0.15, VoteMode::normalized}),
                    std::invalid_argument);
    seqs.push_back({});
    CHECK_THROWS_AS(detect(book, seqs, {0.2, 0.1, 0.15, VoteMode::normalized}),
                    std::invalid_argument);
  }
  SECTION("strict-paper normalization is capped by the largest weight share") {
    auto seqs = make_sequences(0.3, 90, 150, 6);
    TamperVerdict strict = detect(book, seqs, {0.2, 0.1, 0.0, VoteMode::strict_paper});
    TamperVerdict norm = detect(book, seqs, {0.2, 0.1, 0.0, VoteMode::normalized});
    CHECK(strict.vote_fraction <= norm.vote_fraction);
    CHECK(strict.vote_fraction < 0.5);  // three comparable machines: unreachable threshold
  }
}
