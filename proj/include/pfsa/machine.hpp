#pragma once

#include <algorithm>
#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "pfsa/graph.hpp"
#include "pfsa/matrix.hpp"
#include "pfsa/numeric.hpp"
#include "pfsa/rng.hpp"

namespace pfsa {

// A probabilistic finite-state automaton in Gamma form: one m-by-m matrix per
// alphabet symbol, where gamma[x](i,j) is the probability of emitting x and
// moving from state i to state j. The machine is deterministic when every
// such row has at most one nonzero entry (the successor of (state, symbol) is
// unique); otherwise it is generalized and successors are stochastic.
//
// Derived objects:
//   state-to-state matrix  P       = sum_x gamma[x]          (row stochastic)
//   state-to-symbol matrix P-tilde = columns gamma[x] * 1    (emission rows)

struct Alphabet {
  std::vector<std::string> symbols;

  std::size_t size() const { return symbols.size(); }

  std::optional<std::size_t> index_of(const std::string& label) const {
    for (std::size_t i = 0; i < symbols.size(); ++i)
      if (symbols[i] == label) return i;
    return std::nullopt;
  }

  static Alphabet binary() { return Alphabet{{"0", "1"}}; }

  bool operator==(const Alphabet&) const = default;
};

enum class MachineKind { deterministic, generalized };

using StateDistribution = std::vector<double>;  // nonnegative, sums to 1
using SymbolSequence = std::vector<int>;        // entries in [0, K)

struct Machine {
  Alphabet alphabet;
  std::size_t num_states = 0;
  std::vector<Matrix> gamma;  // one per symbol, each num_states x num_states
  MachineKind kind = MachineKind::deterministic;

  std::size_t num_symbols() const { return alphabet.size(); }
};

// Returns nullopt when all invariants hold, otherwise a message naming the
// first violated invariant with the offending symbol/row.
inline std::optional<std::string> validate(const Machine& g) {
  const std::size_t k = g.num_symbols();
  const std::size_t m = g.num_states;
  if (k == 0) return "alphabet is empty";
  for (std::size_t i = 0; i < k; ++i)
    for (std::size_t j = i + 1; j < k; ++j)
      if (g.alphabet.symbols[i] == g.alphabet.symbols[j])
        return "duplicate alphabet label '" + g.alphabet.symbols[i] + "'";
  if (m == 0) return "machine has no states";
  if (g.gamma.size() != k)
    return "expected " + std::to_string(k) + " gamma matrices, got " +
           std::to_string(g.gamma.size());
  for (std::size_t x = 0; x < k; ++x)
    if (g.gamma[x].rows() != m || g.gamma[x].cols() != m)
      return "gamma[" + g.alphabet.symbols[x] + "] is not " + std::to_string(m) + "x" +
             std::to_string(m);
  for (std::size_t x = 0; x < k; ++x)
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t j = 0; j < m; ++j)
        if (g.gamma[x](i, j) < 0.0)
          return "negative entry in gamma[" + g.alphabet.symbols[x] + "] at row " +
                 std::to_string(i) + ", col " + std::to_string(j);
  for (std::size_t i = 0; i < m; ++i) {
    double sum = 0.0;
    for (std::size_t x = 0; x < k; ++x) sum += g.gamma[x].row_sum(i);
    if (std::abs(sum - 1.0) > kStochasticTol)
      return "row " + std::to_string(i) + " of the state-to-state matrix sums to " +
             std::to_string(sum) + ", not 1";
  }
  if (g.kind == MachineKind::deterministic) {
    for (std::size_t x = 0; x < k; ++x)
      for (std::size_t i = 0; i < m; ++i) {
        int nonzero = 0;
        for (std::size_t j = 0; j < m; ++j)
          if (g.gamma[x](i, j) != 0.0) ++nonzero;
        if (nonzero > 1)
          return "deterministic machine has " + std::to_string(nonzero) +
                 " successors in gamma[" + g.alphabet.symbols[x] + "] row " + std::to_string(i);
      }
  }
  return std::nullopt;
}

inline void require_valid(const Machine& g) {
  if (auto err = validate(g)) throw std::invalid_argument("invalid machine: " + *err);
}

// Scales each state's outgoing mass to sum exactly to 1. Only rows already
// within the stochasticity tolerance are touched; anything worse is a real
// invariant violation and is left for validate() to report.
inline Machine normalized(Machine g) {
  const std::size_t k = g.num_symbols();
  for (std::size_t i = 0; i < g.num_states; ++i) {
    double sum = 0.0;
    for (std::size_t x = 0; x < k; ++x)
      for (std::size_t j = 0; j < g.num_states; ++j) {
        double& v = g.gamma[x](i, j);
        if (v < 0.0 && v > -kStochasticTol) v = 0.0;
        sum += v;
      }
    if (sum > 0.0 && std::abs(sum - 1.0) <= kStochasticTol && sum != 1.0) {
      for (std::size_t x = 0; x < k; ++x)
        for (std::size_t j = 0; j < g.num_states; ++j) g.gamma[x](i, j) /= sum;
    }
  }
  return g;
}

inline Matrix state_to_state(const Machine& g) {
  Matrix p(g.num_states, g.num_states);
  for (const Matrix& gx : g.gamma)
    for (std::size_t i = 0; i < p.data().size(); ++i) p.data()[i] += gx.data()[i];
  return p;
}

inline Matrix state_to_symbol(const Machine& g) {
  Matrix pt(g.num_states, g.num_symbols());
  for (std::size_t x = 0; x < g.num_symbols(); ++x)
    for (std::size_t i = 0; i < g.num_states; ++i) pt(i, x) = g.gamma[x].row_sum(i);
  return pt;
}

inline std::vector<std::vector<int>> support_graph(const Matrix& p) {
  std::vector<std::vector<int>> adj(p.rows());
  for (std::size_t i = 0; i < p.rows(); ++i)
    for (std::size_t j = 0; j < p.cols(); ++j)
      if (p(i, j) > 0.0) adj[i].push_back(static_cast<int>(j));
  return adj;
}

inline bool is_strongly_connected(const Machine& g) {
  return is_single_scc(support_graph(state_to_state(g)));
}

// Unique stationary distribution of the state chain: p^T P = p^T, sum p = 1.
// Direct solve with the normalization replacing one (redundant) balance row;
// one round of iterative refinement keeps the residual at machine precision.
inline StateDistribution stationary_distribution(const Machine& g) {
  if (!is_strongly_connected(g))
    throw std::invalid_argument("stationary_distribution: machine is not strongly connected");
  const std::size_t m = g.num_states;
  Matrix p = state_to_state(g);
  Matrix a(m, m);
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < m; ++j) a(i, j) = (i + 1 < m) ? p(j, i) - (i == j ? 1.0 : 0.0) : 1.0;
  std::vector<double> b(m, 0.0);
  b[m - 1] = 1.0;
  StateDistribution pi = solve_linear(a, b);
  std::vector<double> residual(m);
  for (std::size_t i = 0; i < m; ++i) {
    double r = b[i];
    for (std::size_t j = 0; j < m; ++j) r -= a(i, j) * pi[j];
    residual[i] = r;
  }
  std::vector<double> correction = solve_linear(a, residual);
  for (std::size_t i = 0; i < m; ++i) pi[i] += correction[i];
  for (double& v : pi)
    if (v < 0.0) v = 0.0;  // clip solver noise on transiently tiny entries
  double total = 0.0;
  for (double v : pi) total += v;
  for (double& v : pi) v /= total;
  return pi;
}

struct LikelihoodStep {
  double prob = 0.0;       // p(x | current distribution)
  StateDistribution next;  // empty when prob == 0
};

// One step of the likelihood recursion: prob = (p^T P-tilde)_x and
// p' = p^T gamma[x] / prob.
inline LikelihoodStep likelihood_step(const Machine& g, const StateDistribution& p, int symbol) {
  LikelihoodStep step;
  std::vector<double> u = left_multiply(p, g.gamma[static_cast<std::size_t>(symbol)]);
  double norm = 0.0;
  for (double v : u) norm += v;
  step.prob = norm;
  if (norm > 0.0) {
    for (double& v : u) v /= norm;
    step.next = std::move(u);
  }
  return step;
}

// Next-symbol conditional distribution p^T P-tilde induced by the current
// state distribution (the symbolic derivative).
inline std::vector<double> symbolic_derivative(const Machine& g, const StateDistribution& p) {
  std::vector<double> d(g.num_symbols());
  for (std::size_t x = 0; x < g.num_symbols(); ++x) {
    double v = 0.0;
    for (std::size_t i = 0; i < g.num_states; ++i) v += p[i] * g.gamma[x].row_sum(i);
    d[x] = v;
  }
  return d;
}

// Average negative log likelihood in bits per symbol, started from `initial`
// (the stationary distribution when not supplied). A symbol the machine
// cannot produce yields +inf so callers can still rank machines.
inline double negative_log_likelihood_rate(const Machine& g, const SymbolSequence& x,
                                           const StateDistribution& initial) {
  if (x.empty()) throw std::invalid_argument("negative_log_likelihood_rate: empty sequence");
  StateDistribution p = initial;
  double total = 0.0;
  for (int sym : x) {
    LikelihoodStep step = likelihood_step(g, p, sym);
    if (step.prob <= 0.0) return kInfinity;
    total -= std::log2(step.prob);
    p = std::move(step.next);
  }
  return total / static_cast<double>(x.size());
}

inline double negative_log_likelihood_rate(const Machine& g, const SymbolSequence& x) {
  return negative_log_likelihood_rate(g, x, stationary_distribution(g));
}

// Probability that the machine generates exactly x (from `initial`).
inline double sequence_probability(const Machine& g, const SymbolSequence& x,
                                   const StateDistribution& initial) {
  StateDistribution p = initial;
  double prob = 1.0;
  for (int sym : x) {
    LikelihoodStep step = likelihood_step(g, p, sym);
    if (step.prob <= 0.0) return 0.0;
    prob *= step.prob;
    p = std::move(step.next);
  }
  return prob;
}

inline double sequence_probability(const Machine& g, const SymbolSequence& x) {
  return sequence_probability(g, x, stationary_distribution(g));
}

namespace detail {

// Samples an index from unnormalized weights w(i) = weight_of(i); u must be
// uniform in [0, total). Falls back to the last positive weight so rounding
// at the top of the cumulative walk can never pick a zero-weight index.
template <typename WeightFn>
std::size_t sample_index(std::size_t count, double u, WeightFn weight_of) {
  double acc = 0.0;
  std::size_t last_positive = 0;
  for (std::size_t i = 0; i < count; ++i) {
    double w = weight_of(i);
    if (w <= 0.0) continue;
    last_positive = i;
    acc += w;
    if (u < acc) return i;
  }
  return last_positive;
}

}  // namespace detail

// Draws a realization of length n. The initial state is sampled from
// `initial`; each step samples a symbol from the current state's emission row
// and then the successor from the matching gamma row.
inline SymbolSequence generate(const Machine& g, std::size_t n, Rng& rng,
                               const StateDistribution& initial) {
  SymbolSequence out;
  out.reserve(n);
  if (n == 0) return out;
  std::size_t state =
      detail::sample_index(g.num_states, rng.uniform(), [&](std::size_t s) { return initial[s]; });
  const std::size_t k = g.num_symbols();
  for (std::size_t step = 0; step < n; ++step) {
    std::size_t sym = detail::sample_index(
        k, rng.uniform(), [&](std::size_t x) { return g.gamma[x].row_sum(state); });
    out.push_back(static_cast<int>(sym));
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
  }
  return out;
}

inline SymbolSequence generate(const Machine& g, std::size_t n, Rng& rng) {
  return generate(g, n, rng, stationary_distribution(g));
}

}  // namespace pfsa
