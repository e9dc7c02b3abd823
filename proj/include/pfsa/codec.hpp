#pragma once

#include <cstddef>
#include <stdexcept>
#include <vector>

#include "pfsa/m2.hpp"
#include "pfsa/machine.hpp"
#include "pfsa/metrics.hpp"

namespace pfsa {

// Message m is carried by a realization of the m-th machine; the decoder
// only needs the machine set, not the realized channel inputs. design_delta
// is the deletion probability the decoder assumes when scoring.
struct Codebook {
  std::vector<M2Params> machines;
  double design_delta = 0.0;

  std::size_t size() const { return machines.size(); }
};

inline void require_valid(const Codebook& book) {
  if (book.machines.empty()) throw std::invalid_argument("codebook is empty");
  if (!(book.design_delta >= 0.0 && book.design_delta < 1.0))
    throw std::invalid_argument("codebook design_delta must lie in [0, 1)");
  for (const M2Params& p : book.machines) require_valid(p);
  for (std::size_t i = 0; i < book.machines.size(); ++i)
    for (std::size_t j = i + 1; j < book.machines.size(); ++j)
      if (book.machines[i] == book.machines[j])
        throw std::invalid_argument("codebook machines " + std::to_string(i) + " and " +
                                    std::to_string(j) + " are identical");
}

inline SymbolSequence encode(const Codebook& book, std::size_t message, std::size_t n, Rng& rng) {
  if (message >= book.size()) throw std::invalid_argument("message index out of range");
  return generate(m2_machine(book.machines[message]), n, rng);
}

struct DecodeResult {
  std::size_t message = 0;
  std::vector<double> scores;  // L(g_m(design_delta), x) in bits/symbol
};

// Maximum likelihood decoding: score every deletion-transformed codebook
// machine with the average negative log likelihood and take the argmin,
// breaking ties toward the lowest message index.
inline DecodeResult decode(const Codebook& book, const SymbolSequence& x) {
  if (x.empty()) throw std::invalid_argument("decode: empty sequence");
  DecodeResult r;
  r.scores.reserve(book.size());
  for (const M2Params& p : book.machines) {
    Machine g = m2_machine(m2_deletion_transform(p, book.design_delta));
    r.scores.push_back(negative_log_likelihood_rate(g, x));
  }
  r.message = 0;
  for (std::size_t m = 1; m < r.scores.size(); ++m)
    if (r.scores[m] < r.scores[r.message]) r.message = m;
  if (r.scores[r.message] == kInfinity)
    throw std::runtime_error("decode: no codebook machine can produce the sequence");
  return r;
}

}  // namespace pfsa
