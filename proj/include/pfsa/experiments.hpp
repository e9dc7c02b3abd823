#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include "pfsa/channel.hpp"
#include "pfsa/codec.hpp"
#include "pfsa/design.hpp"
#include "pfsa/metrics.hpp"
#include "pfsa/tamper.hpp"

namespace pfsa {

// Substream tags for derive_seed. Every trial's generator is seeded from
// (master, tag, coordinates...), so experiment output is a pure function of
// the master seed no matter how trials are scheduled across threads.
namespace seed_tag {
inline constexpr std::uint64_t decode_trial = 1;
inline constexpr std::uint64_t tamper_sequence = 2;
inline constexpr std::uint64_t tamper_assignment = 3;
inline constexpr std::uint64_t codebook_resample = 4;
}  // namespace seed_tag

// Worker cap from PFSA_DELCHAN_THREADS; 0, unset, or garbage means auto.
inline std::size_t worker_count() {
  if (const char* env = std::getenv("PFSA_DELCHAN_THREADS")) {
    char* end = nullptr;
    long v = std::strtol(env, &end, 10);
    if (end != env && *end == '\0' && v > 0) return static_cast<std::size_t>(v);
  }
  unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : hw;
}

// Runs fn(0..count-1) on a small pool. Tasks must be independent; anything
// order-dependent belongs in the caller's reduction over task index.
template <typename Fn>
void parallel_for(std::size_t count, Fn&& fn) {
  std::size_t workers = std::min(worker_count(), count);
  if (workers <= 1) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::atomic<bool> failed{false};
  std::exception_ptr error;
  std::mutex error_mutex;
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      std::size_t i;
      while (!failed.load(std::memory_order_relaxed) && (i = next.fetch_add(1)) < count) {
        try {
          fn(i);
        } catch (...) {
          std::scoped_lock lock(error_mutex);
          if (!error) error = std::current_exception();
          failed.store(true, std::memory_order_relaxed);
        }
      }
    });
  }
  for (std::thread& t : pool) t.join();
  if (error) std::rethrow_exception(error);
}

inline std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

// ---------------------------------------------------------------------------
// Decoding error experiment

struct DecodingExperimentConfig {
  Codebook codebook;
  double delta = 0.2;                 // actual channel deletion probability
  std::vector<std::size_t> lengths;   // decoder-observed lengths by default
  std::size_t trials = 100;           // per (message, length) per rerun
  std::size_t reruns = 1;
  std::uint64_t seed = 0;
  bool fixed_input_length = false;    // interpret lengths as channel-input lengths
  bool resample_codebooks = false;    // redesign the codebook per rerun
};

struct DecodingRow {
  std::size_t length = 0;
  std::size_t message = 0;
  double error_rate = 0.0;
  std::size_t reruns = 0;
};

inline std::vector<DecodingRow> run_decoding_experiment(const DecodingExperimentConfig& cfg) {
  require_valid(cfg.codebook);
  if (cfg.lengths.empty() || cfg.trials == 0 || cfg.reruns == 0)
    throw std::invalid_argument("decoding experiment: need lengths, trials, and reruns >= 1");
  for (std::size_t n : cfg.lengths)
    if (n == 0) throw std::invalid_argument("decoding experiment: lengths must be >= 1");
  ChannelConfig channel(cfg.delta);

  std::vector<Codebook> books(cfg.reruns, cfg.codebook);
  if (cfg.resample_codebooks) {
    for (std::size_t r = 0; r < cfg.reruns; ++r) {
      DesignConfig design;
      design.num_messages = cfg.codebook.size();
      design.design_delta = cfg.codebook.design_delta;
      design.seed = derive_seed(cfg.seed, {seed_tag::codebook_resample, r});
      books[r] = design_codebook(design);
    }
  }

  const std::size_t num_messages = cfg.codebook.size();
  const std::size_t cells = cfg.reruns * cfg.lengths.size() * num_messages;
  std::vector<std::size_t> errors(cells, 0);

  parallel_for(cells, [&](std::size_t cell) {
    std::size_t r = cell / (cfg.lengths.size() * num_messages);
    std::size_t rest = cell % (cfg.lengths.size() * num_messages);
    std::size_t li = rest / num_messages;
    std::size_t message = rest % num_messages;
    std::size_t length = cfg.lengths[li];
    const Codebook& book = books[r];
    Machine source = m2_machine(book.machines[message]);
    StateDistribution initial = stationary_distribution(source);
    std::size_t cell_errors = 0;
    for (std::size_t t = 0; t < cfg.trials; ++t) {
      Rng rng(derive_seed(cfg.seed, {seed_tag::decode_trial, r, message, length, t}));
      SymbolSequence observed;
      if (cfg.fixed_input_length) {
        observed = transmit(generate(source, length, rng, initial), channel, rng);
      } else {
        observed = transmit_until(source, channel, length, rng, initial).output;
      }
      if (observed.empty()) {
        ++cell_errors;  // all symbols deleted: counted as a decoding failure
        continue;
      }
      if (decode(book, observed).message != message) ++cell_errors;
    }
    errors[cell] = cell_errors;
  });

  std::vector<DecodingRow> rows;
  rows.reserve(cfg.lengths.size() * num_messages);
  for (std::size_t li = 0; li < cfg.lengths.size(); ++li)
    for (std::size_t message = 0; message < num_messages; ++message) {
      std::size_t total = 0;
      for (std::size_t r = 0; r < cfg.reruns; ++r)
        total += errors[(r * cfg.lengths.size() + li) * num_messages + message];
      rows.push_back({cfg.lengths[li], message,
                      static_cast<double>(total) /
                          static_cast<double>(cfg.trials * cfg.reruns),
                      cfg.reruns});
    }
  return rows;
}

inline std::string decoding_csv(const std::vector<DecodingRow>& rows) {
  std::string out = "length,message,error_rate,reruns\n";
  for (const DecodingRow& r : rows) {
    out += std::to_string(r.length) + ',' + std::to_string(r.message) + ',' +
           format_double(r.error_rate) + ',' + std::to_string(r.reruns) + '\n';
  }
  return out;
}

// ---------------------------------------------------------------------------
// Tamper detection experiment

struct TamperExperimentConfig {
  Codebook codebook;
  double delta = 0.2;
  double delta_tampered = 0.3;  // fixed tampered deletion probability
  double eta = 0.1;
  std::vector<double> epsilons{0.0, 0.05, 0.10, 0.15, 0.20, 0.25};
  std::size_t k = 200;  // sequences per test set
  std::size_t test_sets = 50;
  std::vector<std::size_t> lengths{50, 100, 150, 200};
  double tamper_probability = 0.5;  // per-set assignment probability
  std::uint64_t seed = 0;
  std::uint64_t assignment_seed = 1;
  VoteMode mode = VoteMode::normalized;
  bool fixed_input_length = false;  // interpret lengths as channel-input lengths
};

struct TamperRow {
  std::size_t length = 0;
  double epsilon = 0.0;
  double miss_rate = 0.0;
  double false_alarm_rate = 0.0;
  double combined_rate = 0.0;
};

inline std::vector<TamperRow> run_tamper_experiment(const TamperExperimentConfig& cfg) {
  require_valid(cfg.codebook);
  if (cfg.k == 0 || cfg.test_sets == 0 || cfg.lengths.empty() || cfg.epsilons.empty())
    throw std::invalid_argument("tamper experiment: need k, test sets, lengths, epsilons");
  if (!(cfg.delta_tampered > cfg.delta))
    throw std::invalid_argument("tamper experiment: delta_tampered must exceed delta");

  std::vector<char> tampered(cfg.test_sets, 0);
  for (std::size_t s = 0; s < cfg.test_sets; ++s) {
    Rng rng(derive_seed(cfg.assignment_seed, {seed_tag::tamper_assignment, s}));
    tampered[s] = rng.bernoulli(cfg.tamper_probability) ? 1 : 0;
  }

  const std::size_t num_messages = cfg.codebook.size();
  std::vector<Machine> sources;
  std::vector<StateDistribution> initials;
  for (const M2Params& p : cfg.codebook.machines) {
    sources.push_back(m2_machine(p));
    initials.push_back(stationary_distribution(sources.back()));
  }

  // verdicts[(length, set, epsilon)] -> detector said tampered
  const std::size_t cells = cfg.lengths.size() * cfg.test_sets;
  std::vector<char> said_tampered(cells * cfg.epsilons.size(), 0);
  parallel_for(cells, [&](std::size_t cell) {
    std::size_t li = cell / cfg.test_sets;
    std::size_t set = cell % cfg.test_sets;
    std::size_t length = cfg.lengths[li];
    ChannelConfig channel(tampered[set] ? cfg.delta_tampered : cfg.delta);
    std::vector<SymbolSequence> seqs;
    seqs.reserve(cfg.k);
    for (std::size_t j = 0; j < cfg.k; ++j) {
      std::size_t message = j % num_messages;
      Rng rng(derive_seed(cfg.seed, {seed_tag::tamper_sequence, set, length, j}));
      SymbolSequence observed;
      if (cfg.fixed_input_length) {
        observed = transmit(generate(sources[message], length, rng, initials[message]), channel,
                            rng);
        if (observed.empty()) continue;  // fully deleted: nothing to score
      } else {
        observed = transmit_until(sources[message], channel, length, rng, initials[message]).output;
      }
      seqs.push_back(std::move(observed));
    }
    for (std::size_t ei = 0; ei < cfg.epsilons.size(); ++ei) {
      DetectionParams params{cfg.delta, cfg.eta, cfg.epsilons[ei], cfg.mode};
      TamperVerdict verdict = detect(cfg.codebook, seqs, params);
      said_tampered[cell * cfg.epsilons.size() + ei] = verdict.tampered ? 1 : 0;
    }
  });

  std::size_t tampered_sets = 0;
  for (char t : tampered) tampered_sets += static_cast<std::size_t>(t);
  std::size_t clean_sets = cfg.test_sets - tampered_sets;

  std::vector<TamperRow> rows;
  rows.reserve(cfg.lengths.size() * cfg.epsilons.size());
  for (std::size_t li = 0; li < cfg.lengths.size(); ++li)
    for (std::size_t ei = 0; ei < cfg.epsilons.size(); ++ei) {
      std::size_t misses = 0, false_alarms = 0;
      for (std::size_t set = 0; set < cfg.test_sets; ++set) {
        char said = said_tampered[(li * cfg.test_sets + set) * cfg.epsilons.size() + ei];
        if (tampered[set] && !said) ++misses;
        if (!tampered[set] && said) ++false_alarms;
      }
      TamperRow row;
      row.length = cfg.lengths[li];
      row.epsilon = cfg.epsilons[ei];
      row.miss_rate =
          tampered_sets ? static_cast<double>(misses) / static_cast<double>(tampered_sets) : 0.0;
      row.false_alarm_rate =
          clean_sets ? static_cast<double>(false_alarms) / static_cast<double>(clean_sets) : 0.0;
      row.combined_rate = row.miss_rate + row.false_alarm_rate;
      rows.push_back(row);
    }
  return rows;
}

inline std::string tamper_csv(const std::vector<TamperRow>& rows) {
  std::string out = "length,epsilon,miss_rate,false_alarm_rate,combined_rate\n";
  for (const TamperRow& r : rows) {
    out += std::to_string(r.length) + ',' + format_double(r.epsilon) + ',' +
           format_double(r.miss_rate) + ',' + format_double(r.false_alarm_rate) + ',' +
           format_double(r.combined_rate) + '\n';
  }
  return out;
}

// ---------------------------------------------------------------------------
// Parameter-space scan: the drift of M2 machines under deletion together with
// the KL rate from the symmetric machine, on a (mu, nu) grid per delta.

struct ScanRow {
  double delta = 0.0;
  double mu = 0.0, nu = 0.0;
  double mu_delta = 0.0, nu_delta = 0.0;
  double kl = 0.0;  // D(g(.5,.5) || g(mu,nu)(delta))
};

inline std::vector<ScanRow> run_param_scan(const std::vector<double>& deltas, double step) {
  if (deltas.empty()) throw std::invalid_argument("scan: need at least one delta");
  for (double d : deltas)
    if (!(d >= 0.0 && d < 1.0)) throw std::invalid_argument("scan: delta must lie in [0, 1)");
  const double span = 0.98;  // grid covers [0.01, 0.99]
  double cells = span / step;
  if (!(step > 0.0) || std::abs(cells - std::round(cells)) > 1e-9)
    throw std::invalid_argument("scan: grid step must divide 0.98");
  const std::size_t n = static_cast<std::size_t>(std::round(cells)) + 1;
  const M2Params reference{0.5, 0.5};

  std::vector<ScanRow> rows;
  rows.reserve(deltas.size() * n * n);
  for (double delta : deltas)
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) {
        M2Params p{0.01 + static_cast<double>(i) * step, 0.01 + static_cast<double>(j) * step};
        M2Params moved = m2_deletion_transform(p, delta);
        rows.push_back({delta, p.mu, p.nu, moved.mu, moved.nu, kl_rate_m2(reference, moved)});
      }
  return rows;
}

inline std::string scan_csv(const std::vector<ScanRow>& rows) {
  std::string out = "delta,mu,nu,mu_delta,nu_delta,kl\n";
  for (const ScanRow& r : rows) {
    out += format_double(r.delta) + ',' + format_double(r.mu) + ',' + format_double(r.nu) + ',' +
           format_double(r.mu_delta) + ',' + format_double(r.nu_delta) + ',' +
           format_double(r.kl) + '\n';
  }
  return out;
}

// ---------------------------------------------------------------------------
// Info reports for the CLI

struct MachineInfo {
  double entropy = 0.0;        // state-formula entropy rate of g
  double entropy_delta = 0.0;  // same for g(delta)
  StateDistribution stationary;
  bool generalized = false;
  // Block-entropy cross-check H_10 - H_9, present when enumeration is cheap;
  // for generalized machines the state formula is not exact and this is the
  // honest number to compare against.
  bool has_block_check = false;
  double block_entropy_gap = 0.0;
};

inline MachineInfo machine_info(const Machine& g, double delta) {
  MachineInfo info;
  info.entropy = entropy_rate(g);
  info.entropy_delta = entropy_rate(deletion_transform(g, delta));
  info.stationary = stationary_distribution(g);
  info.generalized = g.kind == MachineKind::generalized;
  double paths = 1.0;
  for (int i = 0; i < 10; ++i) paths *= static_cast<double>(g.num_symbols());
  if (paths <= static_cast<double>(1u << 20)) {
    info.has_block_check = true;
    info.block_entropy_gap = block_entropy(g, 10) - block_entropy(g, 9);
  }
  return info;
}

struct CodebookInfo {
  std::vector<M2Params> machines;
  std::vector<M2Params> transformed;       // g_m(delta) parameters
  std::vector<double> entropies;           // H(g_m)
  std::vector<double> entropies_delta;     // H(g_m(delta))
  std::vector<std::vector<double>> kl;     // pairwise KL rate matrix (at delta 0)
};

inline CodebookInfo codebook_info(const Codebook& book, double delta) {
  require_valid(book);
  CodebookInfo info;
  info.machines = book.machines;
  for (const M2Params& p : book.machines) {
    info.transformed.push_back(m2_deletion_transform(p, delta));
    info.entropies.push_back(entropy_rate_m2(p));
    info.entropies_delta.push_back(entropy_rate_m2(info.transformed.back()));
  }
  info.kl.assign(book.size(), std::vector<double>(book.size(), 0.0));
  for (std::size_t i = 0; i < book.size(); ++i)
    for (std::size_t j = 0; j < book.size(); ++j)
      if (i != j) info.kl[i][j] = kl_rate_m2(book.machines[i], book.machines[j]);
  return info;
}

}  // namespace pfsa
