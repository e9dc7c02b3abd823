#pragma once

#include <stdexcept>

#include "pfsa/machine.hpp"

namespace pfsa {

// Memoryless deletion channel: each input symbol is dropped independently
// with probability delta. delta = 1 exactly is rejected; the all-deleted
// limit machine is available through deletion_limit().
struct ChannelConfig {
  double delta = 0.0;

  explicit ChannelConfig(double d) : delta(d) {
    if (!(d >= 0.0 && d < 1.0))
      throw std::invalid_argument("deletion probability must lie in [0, 1)");
  }
};

inline SymbolSequence transmit(const SymbolSequence& input, const ChannelConfig& cfg, Rng& rng) {
  SymbolSequence out;
  out.reserve(input.size());
  for (int sym : input)
    if (!rng.bernoulli(cfg.delta)) out.push_back(sym);
  return out;
}

struct ChannelRealization {
  SymbolSequence input;
  SymbolSequence output;
};

// Streams symbols from the machine through the channel until the output
// reaches the target length. The experiments are indexed by the length the
// decoder observes, which a fixed input length cannot pin down.
inline ChannelRealization transmit_until(const Machine& g, const ChannelConfig& cfg,
                                         std::size_t target_output_length, Rng& rng,
                                         const StateDistribution& initial) {
  ChannelRealization r;
  r.output.reserve(target_output_length);
  if (target_output_length == 0) return r;
  std::size_t state =
      detail::sample_index(g.num_states, rng.uniform(), [&](std::size_t s) { return initial[s]; });
  const std::size_t k = g.num_symbols();
  while (r.output.size() < target_output_length) {
    std::size_t sym = detail::sample_index(
        k, rng.uniform(), [&](std::size_t x) { return g.gamma[x].row_sum(state); });
    r.input.push_back(static_cast<int>(sym));
    const Matrix& gx = g.gamma[sym];
    if (g.kind == MachineKind::deterministic) {
      for (std::size_t j = 0; j < g.num_states; ++j)
        if (gx(state, j) > 0.0) {
          state = j;
          break;
        }
    } else {
      double u = rng.uniform() * gx.row_sum(state);
      state = detail::sample_index(g.num_states, u, [&](std::size_t j) { return gx(state, j); });
    }
    if (!rng.bernoulli(cfg.delta)) r.output.push_back(static_cast<int>(sym));
  }
  return r;
}

inline ChannelRealization transmit_until(const Machine& g, const ChannelConfig& cfg,
                                         std::size_t target_output_length, Rng& rng) {
  return transmit_until(g, cfg, target_output_length, rng, stationary_distribution(g));
}

// Q(P, delta) = (1 - delta) (I - delta P)^(-1). Row stochastic for any row
// stochastic P and delta in [0, 1), and shares P's stationary distribution.
inline Matrix q_matrix(const Matrix& p, double delta) {
  if (delta < 0.0 || delta >= 1.0)
    throw std::invalid_argument("deletion probability must lie in [0, 1)");
  const std::size_t m = p.rows();
  Matrix a(m, m);
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < m; ++j) a(i, j) = (i == j ? 1.0 : 0.0) - delta * p(i, j);
  Matrix rhs(m, m);
  for (std::size_t i = 0; i < m; ++i) rhs(i, i) = 1.0 - delta;
  return solve_linear(a, rhs);
}

// The machine whose realizations are distributed as the deletion channel's
// output when the input is a realization of g: gamma'[x] = Q(P, delta) gamma[x].
// The result is generalized in general; within M2 it keeps the M2 shape.
inline Machine deletion_transform(const Machine& g, double delta) {
  Machine out = g;
  out.kind = MachineKind::generalized;
  Matrix q = q_matrix(state_to_state(g), delta);
  for (std::size_t x = 0; x < g.num_symbols(); ++x) out.gamma[x] = q * g.gamma[x];
  return normalized(std::move(out));
}

// delta -> 1 limit: a single-state machine emitting x with probability
// p^T gamma[x] 1, i.e. the stationary symbol marginal of g.
inline std::vector<double> deletion_limit(const Machine& g) {
  return symbolic_derivative(g, stationary_distribution(g));
}

}  // namespace pfsa
