#pragma once

#include <cstddef>
#include <stdexcept>
#include <vector>

#include "pfsa/codec.hpp"
#include "pfsa/metrics.hpp"

namespace pfsa {

// Weighted-vote detection of an increased deletion probability. A sequence
// votes "tampered" when its decoding score exceeds the entropy rate of the
// decoded machine by more than epsilon times that machine's entropy gain
// D[m] = H(g_m(delta + eta)) - H(g_m(delta)).
//
// Vote normalization:
//   normalized   -- voting weight over the total weight of scored sequences.
//   strict_paper -- v / (S k) with S = sum_m D[m]. With three or more
//                   comparably weighted machines this fraction cannot reach
//                   1/2, so it is kept only for fidelity experiments.
enum class VoteMode { normalized, strict_paper };

struct DetectionParams {
  double delta = 0.0;
  double eta = 0.0;      // minimum tamper increment, must be > 0
  double epsilon = 0.0;  // cutoff multiplier, >= 0
  VoteMode mode = VoteMode::normalized;
};

struct SequenceVote {
  std::size_t decoded = 0;
  double excess = 0.0;  // score minus H(g_decoded(delta))
  bool voted = false;
  bool scored = true;  // false when every machine scored +inf
};

struct TamperVerdict {
  bool tampered = false;
  double vote_fraction = 0.0;
  std::vector<SequenceVote> per_sequence;
};

inline TamperVerdict detect(const Codebook& book, const std::vector<SymbolSequence>& sequences,
                            const DetectionParams& params) {
  require_valid(book);
  if (sequences.empty()) throw std::invalid_argument("detect: need at least one sequence");
  if (!(params.eta > 0.0) || params.delta + params.eta >= 1.0)
    throw std::invalid_argument("detect: need eta > 0 and delta + eta < 1");
  if (params.epsilon < 0.0) throw std::invalid_argument("detect: epsilon must be >= 0");

  // Algorithm input delta wins over whatever the codebook was designed for.
  Codebook scoring = book;
  scoring.design_delta = params.delta;

  const std::size_t num_messages = book.size();
  std::vector<double> h0(num_messages), gain(num_messages);
  for (std::size_t m = 0; m < num_messages; ++m) {
    h0[m] = entropy_rate_m2(m2_deletion_transform(book.machines[m], params.delta));
    double h1 = entropy_rate_m2(m2_deletion_transform(book.machines[m], params.delta + params.eta));
    gain[m] = h1 - h0[m];
    if (!(gain[m] > 0.0))
      throw std::invalid_argument("detect: machine " + std::to_string(m) +
                                  " has no entropy gain under extra deletion (mu == nu?)");
  }

  TamperVerdict verdict;
  verdict.per_sequence.reserve(sequences.size());
  double voting_weight = 0.0, scored_weight = 0.0;
  for (const SymbolSequence& x : sequences) {
    if (x.empty()) throw std::invalid_argument("detect: empty sequence");
    SequenceVote vote;
    DecodeResult r;
    try {
      r = decode(scoring, x);
    } catch (const std::runtime_error&) {
      vote.scored = false;
      verdict.per_sequence.push_back(vote);
      continue;
    }
    vote.decoded = r.message;
    vote.excess = r.scores[r.message] - h0[r.message];
    vote.voted = vote.excess > params.epsilon * gain[r.message];
    scored_weight += gain[r.message];
    if (vote.voted) voting_weight += gain[r.message];
    verdict.per_sequence.push_back(vote);
  }

  if (params.mode == VoteMode::normalized) {
    verdict.vote_fraction = scored_weight > 0.0 ? voting_weight / scored_weight : 0.0;
  } else {
    double s = 0.0;
    for (double d : gain) s += d;
    verdict.vote_fraction = voting_weight / (s * static_cast<double>(sequences.size()));
  }
  verdict.tampered = verdict.vote_fraction > 0.5;
  return verdict;
}

}  // namespace pfsa
