#include <catch2/catch_amalgamated.hpp>

#include <filesystem>

#include "test_util.hpp"

using namespace pfsa;
using namespace testutil;

namespace {
std::filesystem::path temp_file(const std::string& name) {
  return std::filesystem::temp_directory_path() / ("pfsa_test_" + name);
}
}  // namespace

TEST_CASE("machine JSON round trip is value exact") {
  Rng rng(41);
  for (int trial = 0; trial < 10; ++trial) {
    Machine g = random_deterministic_machine(rng, 2 + rng.uniform_index(5));
    json j = machine_to_json(g);
    Machine back = machine_from_json(json::parse(j.dump()));
    REQUIRE(back.num_states == g.num_states);
    REQUIRE(back.kind == g.kind);
    for (std::size_t x = 0; x < g.num_symbols(); ++x) CHECK(back.gamma[x] == g.gamma[x]);
  }
}

TEST_CASE("machine JSON accepts 15-significant-digit decimals verbatim") {
  const char* text = R"({
    "alphabet": ["0", "1"],
    "states": 1,
    "gamma": {"0": [0.123456789012345], "1": [0.876543210987655]},
    "kind": "deterministic"
  })";
  Machine g = machine_from_json(json::parse(text));
  json j = machine_to_json(g);
  Machine back = machine_from_json(json::parse(j.dump()));
  CHECK(back.gamma[0](0, 0) == 0.123456789012345);
  CHECK(back.gamma[1](0, 0) == 0.876543210987655);
}

TEST_CASE("machine JSON schema errors name the field") {
  json j = machine_to_json(m2_machine({0.3, 0.6}));
  SECTION("missing gamma") {
    j.erase("gamma");
    CHECK_THROWS_WITH(machine_from_json(j), Catch::Matchers::ContainsSubstring("gamma"));
  }
  SECTION("wrong matrix size") {
    j["gamma"]["0"] = {0.3, 0.0};
    CHECK_THROWS_WITH(machine_from_json(j), Catch::Matchers::ContainsSubstring("row-major"));
  }
  SECTION("invalid kind") {
    j["kind"] = "sometimes";
    CHECK_THROWS_WITH(machine_from_json(j), Catch::Matchers::ContainsSubstring("kind"));
  }
  SECTION("invariant violations are rejected on load") {
    j["gamma"]["0"] = {0.4, 0.0, 0.9, 0.0};  // breaks the row sums
    CHECK_THROWS_AS(machine_from_json(j), IoError);
  }
}

TEST_CASE("codebook JSON round trip and validation") {
  Codebook book{{{0.3, 0.6}, {0.7, 0.2}}, 0.2};
  Codebook back = codebook_from_json(json::parse(codebook_to_json(book).dump()));
  CHECK(back.design_delta == book.design_delta);
  REQUIRE(back.size() == book.size());
  for (std::size_t i = 0; i < book.size(); ++i) CHECK(back.machines[i] == book.machines[i]);

  json j = codebook_to_json(book);
  j["machines"][1] = j["machines"][0];
  CHECK_THROWS_AS(codebook_from_json(j), IoError);
}

TEST_CASE("sequence files round trip") {
  Alphabet alphabet = Alphabet::binary();
  Rng rng(42);
  Machine g = m2_machine({0.3, 0.6});
  std::vector<SymbolSequence> seqs;
  for (int i = 0; i < 8; ++i) seqs.push_back(generate(g, 1 + rng.uniform_index(400), rng));

  SECTION("text format") {
    auto path = temp_file("seqs.txt");
    save_sequences(path.string(), seqs, alphabet, SequenceFormat::text);
    auto back = load_sequences(path.string(), alphabet, SequenceFormat::text);
    CHECK(back == seqs);
    std::filesystem::remove(path);
  }
  SECTION("binary format") {
    auto path = temp_file("seqs.bin");
    save_sequences(path.string(), seqs, alphabet, SequenceFormat::binary);
    auto back = load_sequences(path.string(), alphabet, SequenceFormat::binary);
    CHECK(back == seqs);
    std::filesystem::remove(path);
  }
}

TEST_CASE("sequence parsing rejects unknown symbols") {
  CHECK_THROWS_AS(sequence_from_string("01021", Alphabet::binary()), IoError);
  Alphabet wide{{"aa", "b"}};
  CHECK_THROWS_AS(sequence_from_string("ab", wide), IoError);
}

TEST_CASE("missing files raise IoError") {
  CHECK_THROWS_AS(load_machine("/nonexistent/machine.json"), IoError);
  CHECK_THROWS_AS(load_sequences("/nonexistent/seqs.txt", Alphabet::binary(),
                                 SequenceFormat::text),
                  IoError);
}

TEST_CASE("file pipeline equals the in-memory pipeline") {
  Codebook book{{{0.3, 0.6}, {0.7, 0.2}}, 0.2};
  Rng rng(43);
  SymbolSequence sent = encode(book, 1, 400, rng);
  SymbolSequence observed = transmit(sent, ChannelConfig(0.2), rng);
  DecodeResult direct = decode(book, observed);

  auto book_path = temp_file("book.json");
  auto seq_path = temp_file("observed.txt");
  save_json_file(book_path.string(), codebook_to_json(book));
  save_sequences(seq_path.string(), {observed}, Alphabet::binary(), SequenceFormat::text);

  Codebook loaded = load_codebook(book_path.string());
  auto seqs = load_sequences(seq_path.string(), Alphabet::binary(), SequenceFormat::text);
  REQUIRE(seqs.size() == 1);
  DecodeResult via_files = decode(loaded, seqs[0]);
  CHECK(via_files.message == direct.message);
  CHECK(via_files.scores == direct.scores);

  std::filesystem::remove(book_path);
  std::filesystem::remove(seq_path);
}
