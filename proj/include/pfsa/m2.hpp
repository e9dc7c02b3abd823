#pragma once

#include <stdexcept>

#include "pfsa/machine.hpp"

namespace pfsa {

// The M2 family: two-state binary machines where state s0 is entered by
// emitting 0 and s1 by emitting 1, so the state always equals the previous
// symbol. mu and nu are the probabilities of emitting 0 from s0 and s1.
// The family is closed under the deletion transform.
struct M2Params {
  double mu = 0.0;
  double nu = 0.0;

  bool operator==(const M2Params&) const = default;
};

inline void require_valid(const M2Params& p) {
  if (!(p.mu > 0.0 && p.mu < 1.0 && p.nu > 0.0 && p.nu < 1.0))
    throw std::invalid_argument("M2 parameters must lie strictly inside (0, 1)");
}

inline Machine m2_machine(const M2Params& p) {
  require_valid(p);
  Machine g;
  g.alphabet = Alphabet::binary();
  g.num_states = 2;
  Matrix g0(2, 2), g1(2, 2);
  g0(0, 0) = p.mu;
  g0(1, 0) = p.nu;
  g1(0, 1) = 1.0 - p.mu;
  g1(1, 1) = 1.0 - p.nu;
  g.gamma = {g0, g1};
  g.kind = MachineKind::deterministic;
  return g;
}

// Closed form of the deletion transform inside M2:
//   mu(d) = (mu - d(mu - nu)) / (1 - d(mu - nu)),  nu(d) = nu / (1 - d(mu - nu)).
inline M2Params m2_deletion_transform(const M2Params& p, double delta) {
  if (delta < 0.0 || delta >= 1.0)
    throw std::invalid_argument("deletion probability must lie in [0, 1)");
  double alpha = p.mu - p.nu;
  double denom = 1.0 - delta * alpha;
  return {(p.mu - delta * alpha) / denom, p.nu / denom};
}

inline StateDistribution m2_stationary(const M2Params& p) {
  double z = (1.0 - p.mu) + p.nu;
  return {p.nu / z, (1.0 - p.mu) / z};
}

}  // namespace pfsa
