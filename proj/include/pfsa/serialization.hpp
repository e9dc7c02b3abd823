#pragma once

#include <cstdint>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "pfsa/codec.hpp"
#include "pfsa/machine.hpp"

namespace pfsa {

// File and parse failures; the CLI maps these to exit code 3.
struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

using json = nlohmann::json;

// Machine schema:
//   {"alphabet": ["0", "1"], "states": m,
//    "gamma": {"0": [m*m row-major numbers], ...},
//    "kind": "deterministic" | "generalized"}
inline json machine_to_json(const Machine& g) {
  json j;
  j["alphabet"] = g.alphabet.symbols;
  j["states"] = g.num_states;
  json gamma = json::object();
  for (std::size_t x = 0; x < g.num_symbols(); ++x)
    gamma[g.alphabet.symbols[x]] = g.gamma[x].data();
  j["gamma"] = std::move(gamma);
  j["kind"] = g.kind == MachineKind::deterministic ? "deterministic" : "generalized";
  return j;
}

inline Machine machine_from_json(const json& j) {
  if (!j.is_object()) throw IoError("machine: expected a JSON object");
  for (const char* field : {"alphabet", "states", "gamma", "kind"})
    if (!j.contains(field)) throw IoError(std::string("machine: missing field '") + field + "'");
  Machine g;
  if (!j["alphabet"].is_array() || j["alphabet"].empty())
    throw IoError("machine: field 'alphabet' must be a non-empty array of labels");
  g.alphabet.symbols = j["alphabet"].get<std::vector<std::string>>();
  if (!j["states"].is_number_unsigned() || j["states"].get<std::size_t>() == 0)
    throw IoError("machine: field 'states' must be a positive integer");
  g.num_states = j["states"].get<std::size_t>();
  std::string kind = j["kind"].get<std::string>();
  if (kind == "deterministic")
    g.kind = MachineKind::deterministic;
  else if (kind == "generalized")
    g.kind = MachineKind::generalized;
  else
    throw IoError("machine: field 'kind' must be 'deterministic' or 'generalized'");
  const std::size_t m = g.num_states;
  for (const std::string& label : g.alphabet.symbols) {
    if (!j["gamma"].contains(label))
      throw IoError("machine: field 'gamma' is missing matrix for symbol '" + label + "'");
    const json& arr = j["gamma"][label];
    if (!arr.is_array() || arr.size() != m * m)
      throw IoError("machine: gamma['" + label + "'] must be a flat row-major array of " +
                    std::to_string(m * m) + " numbers");
    Matrix gx(m, m);
    for (std::size_t i = 0; i < m * m; ++i) gx.data()[i] = arr[i].get<double>();
    g.gamma.push_back(std::move(gx));
  }
  if (auto err = validate(g)) throw IoError("machine: " + *err);
  return normalized(std::move(g));
}

// Codebook schema: {"design_delta": d, "machines": [{"mu": ..., "nu": ...}, ...]}
inline json codebook_to_json(const Codebook& book) {
  json j;
  j["design_delta"] = book.design_delta;
  j["machines"] = json::array();
  for (const M2Params& p : book.machines) j["machines"].push_back({{"mu", p.mu}, {"nu", p.nu}});
  return j;
}

inline Codebook codebook_from_json(const json& j) {
  if (!j.is_object() || !j.contains("design_delta") || !j.contains("machines"))
    throw IoError("codebook: expected object with 'design_delta' and 'machines'");
  Codebook book;
  book.design_delta = j["design_delta"].get<double>();
  if (!j["machines"].is_array() || j["machines"].empty())
    throw IoError("codebook: field 'machines' must be a non-empty array");
  for (const json& mj : j["machines"]) {
    if (!mj.contains("mu") || !mj.contains("nu"))
      throw IoError("codebook: every machine needs fields 'mu' and 'nu'");
    book.machines.push_back({mj["mu"].get<double>(), mj["nu"].get<double>()});
  }
  try {
    require_valid(book);
  } catch (const std::invalid_argument& e) {
    throw IoError(std::string("codebook: ") + e.what());
  }
  return book;
}

inline json load_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open '" + path + "'");
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw IoError("parse error in '" + path + "': " + e.what());
  }
}

inline void save_json_file(const std::string& path, const json& j) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write '" + path + "'");
  out << j.dump(2) << '\n';
}

inline Machine load_machine(const std::string& path) {
  return machine_from_json(load_json_file(path));
}

inline Codebook load_codebook(const std::string& path) {
  return codebook_from_json(load_json_file(path));
}

enum class SequenceFormat { text, binary };

// Text form of one sequence: the concatenated alphabet labels. Only
// single-character labels can be parsed back unambiguously.
inline std::string sequence_to_string(const SymbolSequence& x, const Alphabet& alphabet) {
  std::string s;
  s.reserve(x.size());
  for (int sym : x) s += alphabet.symbols[static_cast<std::size_t>(sym)];
  return s;
}

inline SymbolSequence sequence_from_string(const std::string& s, const Alphabet& alphabet) {
  for (const std::string& label : alphabet.symbols)
    if (label.size() != 1)
      throw IoError("text sequences need single-character alphabet labels; got '" + label + "'");
  SymbolSequence x;
  x.reserve(s.size());
  for (char c : s) {
    auto idx = alphabet.index_of(std::string(1, c));
    if (!idx) throw IoError(std::string("sequence contains unknown symbol '") + c + "'");
    x.push_back(static_cast<int>(*idx));
  }
  return x;
}

// Text mode is newline-delimited label strings. Binary mode stores records
// of a 4-byte little-endian length followed by one byte per symbol index,
// so it requires K <= 256.
inline void save_sequences(const std::string& path, const std::vector<SymbolSequence>& seqs,
                           const Alphabet& alphabet, SequenceFormat format) {
  std::ofstream out(path, format == SequenceFormat::binary ? std::ios::binary : std::ios::out);
  if (!out) throw IoError("cannot write '" + path + "'");
  for (const SymbolSequence& x : seqs) {
    if (format == SequenceFormat::text) {
      out << sequence_to_string(x, alphabet) << '\n';
    } else {
      if (alphabet.size() > 256) throw IoError("binary sequences support at most 256 symbols");
      std::uint32_t len = static_cast<std::uint32_t>(x.size());
      char header[4] = {static_cast<char>(len & 0xff), static_cast<char>((len >> 8) & 0xff),
                        static_cast<char>((len >> 16) & 0xff),
                        static_cast<char>((len >> 24) & 0xff)};
      out.write(header, 4);
      for (int sym : x) out.put(static_cast<char>(static_cast<unsigned char>(sym)));
    }
  }
}

inline std::vector<SymbolSequence> load_sequences(const std::string& path,
                                                  const Alphabet& alphabet,
                                                  SequenceFormat format) {
  std::ifstream in(path, format == SequenceFormat::binary ? std::ios::binary : std::ios::in);
  if (!in) throw IoError("cannot open '" + path + "'");
  std::vector<SymbolSequence> seqs;
  if (format == SequenceFormat::text) {
    std::string line;
    while (std::getline(in, line)) {
      if (line.empty()) continue;
      seqs.push_back(sequence_from_string(line, alphabet));
    }
    return seqs;
  }
  char header[4];
  while (in.read(header, 4)) {
    std::uint32_t len = 0;
    for (int i = 3; i >= 0; --i) len = (len << 8) | static_cast<unsigned char>(header[i]);
    SymbolSequence x(len);
    for (std::uint32_t i = 0; i < len; ++i) {
      int c = in.get();
      if (c == std::char_traits<char>::eof())
        throw IoError("truncated binary sequence record in '" + path + "'");
      if (static_cast<std::size_t>(c) >= alphabet.size())
        throw IoError("binary sequence byte out of range in '" + path + "'");
      x[i] = c;
    }
    seqs.push_back(std::move(x));
  }
  return seqs;
}

}  // namespace pfsa
