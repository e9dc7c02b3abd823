#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "pfsa/codec.hpp"
#include "pfsa/metrics.hpp"

namespace pfsa {

// Codebook search configuration. Bounds keep parameters away from 0/1 where
// the KL rate diverges, and away from situations where the entropy gain used
// by tamper detection vanishes.
struct DesignConfig {
  std::size_t num_messages = 10;
  double step_sigma = 0.01;    // hill-climb step
  double margin = 0.2;         // initialization gap between mu and nu
  double lo = 0.05, hi = 0.95; // parameter box clamping mu and nu
  std::size_t max_iters = 1000;
  std::uint64_t seed = 0;
  double design_delta = 0.2;
};

inline void require_valid(const DesignConfig& cfg) {
  if (!(cfg.lo > 0.0 && cfg.lo < cfg.hi && cfg.hi < 1.0))
    throw std::invalid_argument("design bounds must satisfy 0 < lo < hi < 1");
  if (!(cfg.step_sigma > 0.0 && cfg.step_sigma < cfg.hi - cfg.lo))
    throw std::invalid_argument("design step must satisfy 0 < sigma < hi - lo");
  if (cfg.num_messages < 2) throw std::invalid_argument("design needs at least 2 messages");
}

namespace detail {

inline double clamp_param(double v, const DesignConfig& cfg) {
  return v < cfg.lo ? cfg.lo : (v > cfg.hi ? cfg.hi : v);
}

}  // namespace detail

// Initialization heuristic: mu uniform in (0, 1); nu uniform below mu - margin
// when mu > 1/2, above mu + margin otherwise; both clamped to the box. A mu
// whose nu range dies after intersecting the box is redrawn.
inline Codebook init_codebook(const DesignConfig& cfg) {
  require_valid(cfg);
  Rng rng(cfg.seed);
  Codebook book;
  book.design_delta = cfg.design_delta;
  while (book.machines.size() < cfg.num_messages) {
    double mu = detail::clamp_param(rng.uniform(), cfg);
    double nu_lo, nu_hi;
    if (mu > 0.5) {
      nu_lo = 0.0;
      nu_hi = mu - cfg.margin;
    } else {
      nu_lo = mu + cfg.margin;
      nu_hi = 1.0;
    }
    if (std::min(nu_hi, cfg.hi) <= std::max(nu_lo, cfg.lo)) continue;  // redraw mu
    double nu = detail::clamp_param(rng.uniform(nu_lo, nu_hi), cfg);
    M2Params cand{mu, nu};
    bool duplicate = false;
    for (const M2Params& p : book.machines)
      if (p == cand) duplicate = true;
    if (!duplicate) book.machines.push_back(cand);
  }
  return book;
}

// Minimum pairwise symmetrized KL rate, 0.5 (D(gi||gj) + D(gj||gi)), over all
// machine pairs; the quantity the hill climb maximizes.
inline double objective(const Codebook& book) {
  if (book.size() < 2) throw std::invalid_argument("objective needs at least 2 machines");
  double best = kInfinity;
  for (std::size_t i = 0; i < book.size(); ++i)
    for (std::size_t j = i + 1; j < book.size(); ++j) {
      double d = 0.5 * (kl_rate_m2(book.machines[i], book.machines[j]) +
                        kl_rate_m2(book.machines[j], book.machines[i]));
      if (d < best) best = d;
    }
  return best;
}

// Steepest-ascent coordinate search: find the pair with the minimum
// symmetrized KL, evaluate the eight single-coordinate moves of its two
// machines, take the best strictly improving one, repeat. Ties go to the
// first move in enumeration order (mu_i +/-, nu_i +/-, then machine j).
inline Codebook hill_climb(Codebook book, const DesignConfig& cfg) {
  require_valid(cfg);
  if (book.size() < 2) throw std::invalid_argument("hill_climb needs at least 2 machines");
  double current = objective(book);
  for (std::size_t iter = 0; iter < cfg.max_iters; ++iter) {
    std::size_t worst_i = 0, worst_j = 1;
    double worst = kInfinity;
    for (std::size_t i = 0; i < book.size(); ++i)
      for (std::size_t j = i + 1; j < book.size(); ++j) {
        double d = 0.5 * (kl_rate_m2(book.machines[i], book.machines[j]) +
                          kl_rate_m2(book.machines[j], book.machines[i]));
        if (d < worst) {
          worst = d;
          worst_i = i;
          worst_j = j;
        }
      }

    double best_value = current;
    std::size_t best_machine = 0;
    M2Params best_params{};
    bool improved = false;
    for (std::size_t machine : {worst_i, worst_j}) {
      const M2Params base = book.machines[machine];
      const M2Params moves[4] = {
          {detail::clamp_param(base.mu + cfg.step_sigma, cfg), base.nu},
          {detail::clamp_param(base.mu - cfg.step_sigma, cfg), base.nu},
          {base.mu, detail::clamp_param(base.nu + cfg.step_sigma, cfg)},
          {base.mu, detail::clamp_param(base.nu - cfg.step_sigma, cfg)},
      };
      for (const M2Params& moved : moves) {
        book.machines[machine] = moved;
        double value = objective(book);
        if (value > best_value) {
          best_value = value;
          best_machine = machine;
          best_params = moved;
          improved = true;
        }
      }
      book.machines[machine] = base;
    }
    if (!improved) break;
    book.machines[best_machine] = best_params;
    current = best_value;
  }
  return book;
}

inline Codebook design_codebook(const DesignConfig& cfg) {
  return hill_climb(init_codebook(cfg), cfg);
}

}  // namespace pfsa
