// pfsadel: PFSA-based communication over deletion channels.
//
// Subcommands: design, encode, channel, decode, detect, info, exp-decode,
// exp-tamper, scan. Exit codes: 0 success, 2 configuration error, 3 I/O error.

#include <filesystem>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "pfsa/pfsa.hpp"

using namespace pfsa;

namespace {

constexpr std::uint64_t kEncodeStream = 1001;
constexpr std::uint64_t kChannelStream = 1002;

std::vector<std::size_t> parse_lengths(const std::string& text) {
  std::vector<std::size_t> out;
  if (text.find(':') != std::string::npos) {
    std::size_t first = 0, last = 0, step = 0;
    char c1 = 0, c2 = 0;
    std::istringstream in(text);
    if (!(in >> first >> c1 >> last >> c2 >> step) || c1 != ':' || c2 != ':' || step == 0)
      throw std::invalid_argument("bad length range '" + text + "', expected first:last:step");
    for (std::size_t v = first; v <= last; v += step) out.push_back(v);
  } else {
    std::istringstream in(text);
    std::string item;
    while (std::getline(in, item, ','))
      if (!item.empty()) out.push_back(static_cast<std::size_t>(std::stoull(item)));
  }
  if (out.empty()) throw std::invalid_argument("no lengths in '" + text + "'");
  return out;
}

std::vector<double> parse_doubles(const std::string& text) {
  std::vector<double> out;
  std::istringstream in(text);
  std::string item;
  while (std::getline(in, item, ','))
    if (!item.empty()) out.push_back(std::stod(item));
  if (out.empty()) throw std::invalid_argument("no values in '" + text + "'");
  return out;
}

SequenceFormat parse_format(const std::string& name) {
  if (name == "text") return SequenceFormat::text;
  if (name == "binary") return SequenceFormat::binary;
  throw std::invalid_argument("format must be 'text' or 'binary'");
}

VoteMode parse_mode(const std::string& name) {
  if (name == "normalized") return VoteMode::normalized;
  if (name == "strict-paper") return VoteMode::strict_paper;
  throw std::invalid_argument("mode must be 'normalized' or 'strict-paper'");
}

void write_output(const std::string& path, const std::string& content) {
  if (path.empty() || path == "-") {
    std::cout << content;
    return;
  }
  std::ofstream out(path);
  if (!out) throw IoError("cannot write '" + path + "'");
  out << content;
}

// Sequences from a file or from every regular file in a directory, in path
// order.
std::vector<SymbolSequence> load_sequence_input(const std::string& path, const Alphabet& alphabet,
                                                SequenceFormat format) {
  namespace fs = std::filesystem;
  if (fs::is_directory(path)) {
    std::vector<fs::path> files;
    for (const auto& entry : fs::directory_iterator(path))
      if (entry.is_regular_file()) files.push_back(entry.path());
    std::sort(files.begin(), files.end());
    std::vector<SymbolSequence> seqs;
    for (const fs::path& f : files) {
      auto part = load_sequences(f.string(), alphabet, format);
      seqs.insert(seqs.end(), part.begin(), part.end());
    }
    return seqs;
  }
  return load_sequences(path, alphabet, format);
}

int run(int argc, char** argv) {
  CLI::App app{"PFSA toolkit for tamper-evident communication over deletion channels"};
  app.require_subcommand(1);

  // design ------------------------------------------------------------------
  auto* design = app.add_subcommand("design", "generate a codebook by hill climbing");
  DesignConfig design_cfg;
  std::string design_bounds = "0.05,0.95";
  std::string design_out;
  design->add_option("--messages", design_cfg.num_messages, "number of messages")->required();
  design->add_option("--sigma", design_cfg.step_sigma, "hill-climb step size");
  design->add_option("--margin", design_cfg.margin, "initialization gap between mu and nu");
  design->add_option("--bounds", design_bounds, "parameter box as lo,hi");
  design->add_option("--max-iters", design_cfg.max_iters, "hill-climb iteration cap");
  design->add_option("--seed", design_cfg.seed, "random seed");
  design->add_option("--delta", design_cfg.design_delta, "design deletion probability");
  design->add_option("-o,--output", design_out, "output codebook JSON ('-' for stdout)");

  // encode ------------------------------------------------------------------
  auto* encode_cmd = app.add_subcommand("encode", "draw channel-input realizations of a message");
  std::string enc_book, enc_out, enc_format = "text";
  std::size_t enc_message = 0, enc_length = 0, enc_count = 1;
  std::uint64_t enc_seed = 0;
  encode_cmd->add_option("--codebook", enc_book, "codebook JSON")->required();
  encode_cmd->add_option("--message", enc_message, "message index")->required();
  encode_cmd->add_option("--length", enc_length, "sequence length")->required();
  encode_cmd->add_option("--count", enc_count, "number of sequences");
  encode_cmd->add_option("--seed", enc_seed, "random seed");
  encode_cmd->add_option("--format", enc_format, "text or binary");
  encode_cmd->add_option("-o,--output", enc_out, "output file ('-' for stdout)");

  // channel -----------------------------------------------------------------
  auto* channel_cmd = app.add_subcommand("channel", "pass sequences through the deletion channel");
  std::string chan_in, chan_out, chan_format = "text";
  double chan_delta = 0.0;
  std::uint64_t chan_seed = 0;
  channel_cmd->add_option("--delta", chan_delta, "deletion probability")->required();
  channel_cmd->add_option("--input", chan_in, "sequence file")->required();
  channel_cmd->add_option("--seed", chan_seed, "random seed");
  channel_cmd->add_option("--format", chan_format, "text or binary");
  channel_cmd->add_option("-o,--output", chan_out, "output file ('-' for stdout)");

  // decode ------------------------------------------------------------------
  auto* decode_cmd = app.add_subcommand("decode", "maximum-likelihood decode sequences");
  std::string dec_book, dec_in, dec_out, dec_format = "text";
  decode_cmd->add_option("--codebook", dec_book, "codebook JSON")->required();
  decode_cmd->add_option("--input", dec_in, "sequence file")->required();
  decode_cmd->add_option("--format", dec_format, "text or binary");
  decode_cmd->add_option("-o,--output", dec_out, "output CSV ('-' for stdout)");

  // detect ------------------------------------------------------------------
  auto* detect_cmd = app.add_subcommand("detect", "weighted-vote tamper detection");
  std::string det_book, det_in, det_out, det_format = "text", det_mode = "normalized";
  double det_delta = 0.0, det_eta = 0.0, det_epsilon = 0.0;
  detect_cmd->add_option("--codebook", det_book, "codebook JSON")->required();
  detect_cmd->add_option("--input", det_in, "sequence file or directory")->required();
  detect_cmd->add_option("--delta", det_delta, "assumed deletion probability")->required();
  detect_cmd->add_option("--eta", det_eta, "minimum tamper increment")->required();
  detect_cmd->add_option("--epsilon", det_epsilon, "cutoff multiplier")->required();
  detect_cmd->add_option("--mode", det_mode, "normalized or strict-paper");
  detect_cmd->add_option("--format", det_format, "text or binary");
  detect_cmd->add_option("-o,--output", det_out, "output CSV ('-' for stdout)");

  // info --------------------------------------------------------------------
  auto* info_cmd = app.add_subcommand("info", "entropy, stationary, and KL summary");
  std::string info_in;
  double info_delta = 0.25;
  info_cmd->add_option("--input", info_in, "machine or codebook JSON")->required();
  info_cmd->add_option("--delta", info_delta, "deletion probability for g(delta)");

  // exp-decode --------------------------------------------------------------
  auto* expdec = app.add_subcommand("exp-decode", "decoding error experiment (CSV)");
  std::string xd_config, xd_book, xd_lengths, xd_out;
  DecodingExperimentConfig xd_cfg;
  auto* xd_book_opt = expdec->add_option("--codebook", xd_book, "codebook JSON");
  expdec->add_option("--config", xd_config, "experiment config JSON");
  auto* xd_delta_opt = expdec->add_option("--delta", xd_cfg.delta, "channel deletion probability");
  auto* xd_len_opt = expdec->add_option("--lengths", xd_lengths, "e.g. 10:200:10 or 50,100");
  auto* xd_trials_opt = expdec->add_option("--trials", xd_cfg.trials, "trials per message/length");
  auto* xd_reruns_opt = expdec->add_option("--reruns", xd_cfg.reruns, "rerun count");
  auto* xd_seed_opt = expdec->add_option("--seed", xd_cfg.seed, "master seed");
  auto* xd_fixed_opt = expdec->add_flag("--fixed-input", "lengths count channel-input symbols");
  auto* xd_resample_opt = expdec->add_flag("--resample-codebooks", "redesign codebook per rerun");
  expdec->add_option("-o,--output", xd_out, "output CSV ('-' for stdout)");

  // exp-tamper --------------------------------------------------------------
  auto* exptam = app.add_subcommand("exp-tamper", "tamper detection experiment (CSV)");
  std::string xt_config, xt_book, xt_lengths, xt_epsilons, xt_mode, xt_out;
  TamperExperimentConfig xt_cfg;
  auto* xt_book_opt = exptam->add_option("--codebook", xt_book, "codebook JSON");
  exptam->add_option("--config", xt_config, "experiment config JSON");
  auto* xt_delta_opt = exptam->add_option("--delta", xt_cfg.delta, "assumed deletion probability");
  auto* xt_dt_opt =
      exptam->add_option("--delta-tampered", xt_cfg.delta_tampered, "tampered probability");
  auto* xt_eta_opt = exptam->add_option("--eta", xt_cfg.eta, "minimum tamper increment");
  auto* xt_eps_opt = exptam->add_option("--epsilons", xt_epsilons, "cutoffs, e.g. 0,0.05,0.1");
  auto* xt_k_opt = exptam->add_option("--k", xt_cfg.k, "sequences per test set");
  auto* xt_sets_opt = exptam->add_option("--test-sets", xt_cfg.test_sets, "number of test sets");
  auto* xt_len_opt = exptam->add_option("--lengths", xt_lengths, "observed lengths");
  auto* xt_prob_opt =
      exptam->add_option("--tamper-probability", xt_cfg.tamper_probability, "per-set probability");
  auto* xt_seed_opt = exptam->add_option("--seed", xt_cfg.seed, "master seed");
  auto* xt_aseed_opt =
      exptam->add_option("--assign-seed", xt_cfg.assignment_seed, "tamper assignment seed");
  auto* xt_mode_opt = exptam->add_option("--mode", xt_mode, "normalized or strict-paper");
  auto* xt_fixed_opt = exptam->add_flag("--fixed-input", "lengths count channel-input symbols");
  exptam->add_option("-o,--output", xt_out, "output CSV ('-' for stdout)");

  // scan --------------------------------------------------------------------
  auto* scan_cmd = app.add_subcommand("scan", "parameter-space scan of the deletion transform");
  std::string scan_deltas = "0,0.25,0.5,0.75", scan_out;
  double scan_step = 0.01;
  scan_cmd->add_option("--deltas", scan_deltas, "comma-separated deletion probabilities");
  scan_cmd->add_option("--step", scan_step, "grid step (must divide 0.98)");
  scan_cmd->add_option("-o,--output", scan_out, "output CSV ('-' for stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 2;  // help exits cleanly, anything else is a config error
  }

  if (app.got_subcommand(design)) {
    auto bounds = parse_doubles(design_bounds);
    if (bounds.size() != 2) throw std::invalid_argument("--bounds needs exactly lo,hi");
    design_cfg.lo = bounds[0];
    design_cfg.hi = bounds[1];
    Codebook book = design_codebook(design_cfg);
    write_output(design_out, codebook_to_json(book).dump(2) + "\n");
    return 0;
  }

  if (app.got_subcommand(encode_cmd)) {
    Codebook book = load_codebook(enc_book);
    SequenceFormat format = parse_format(enc_format);
    std::vector<SymbolSequence> seqs;
    for (std::size_t i = 0; i < enc_count; ++i) {
      Rng rng(derive_seed(enc_seed, {kEncodeStream, i}));
      seqs.push_back(encode(book, enc_message, enc_length, rng));
    }
    Alphabet alphabet = Alphabet::binary();
    if (enc_out.empty() || enc_out == "-") {
      if (format == SequenceFormat::binary)
        throw std::invalid_argument("binary output needs --output FILE");
      for (const auto& s : seqs) std::cout << sequence_to_string(s, alphabet) << '\n';
    } else {
      save_sequences(enc_out, seqs, alphabet, format);
    }
    return 0;
  }

  if (app.got_subcommand(channel_cmd)) {
    SequenceFormat format = parse_format(chan_format);
    Alphabet alphabet = Alphabet::binary();
    auto seqs = load_sequences(chan_in, alphabet, format);
    ChannelConfig cfg(chan_delta);
    std::vector<SymbolSequence> out;
    for (std::size_t i = 0; i < seqs.size(); ++i) {
      Rng rng(derive_seed(chan_seed, {kChannelStream, i}));
      out.push_back(transmit(seqs[i], cfg, rng));
    }
    if (chan_out.empty() || chan_out == "-") {
      if (format == SequenceFormat::binary)
        throw std::invalid_argument("binary output needs --output FILE");
      for (const auto& s : out) std::cout << sequence_to_string(s, alphabet) << '\n';
    } else {
      save_sequences(chan_out, out, alphabet, format);
    }
    return 0;
  }

  if (app.got_subcommand(decode_cmd)) {
    Codebook book = load_codebook(dec_book);
    auto seqs = load_sequences(dec_in, Alphabet::binary(), parse_format(dec_format));
    std::string csv = "sequence,decoded";
    for (std::size_t m = 0; m < book.size(); ++m) csv += ",score_" + std::to_string(m);
    csv += '\n';
    for (std::size_t i = 0; i < seqs.size(); ++i) {
      DecodeResult r = decode(book, seqs[i]);
      csv += std::to_string(i) + ',' + std::to_string(r.message);
      for (double s : r.scores) csv += ',' + format_double(s);
      csv += '\n';
    }
    write_output(dec_out, csv);
    return 0;
  }

  if (app.got_subcommand(detect_cmd)) {
    Codebook book = load_codebook(det_book);
    auto seqs = load_sequence_input(det_in, Alphabet::binary(), parse_format(det_format));
    DetectionParams params{det_delta, det_eta, det_epsilon, parse_mode(det_mode)};
    TamperVerdict verdict = detect(book, seqs, params);
    std::string csv = "tampered,vote_fraction\n";
    csv += std::string(verdict.tampered ? "1" : "0") + ',' +
           format_double(verdict.vote_fraction) + "\n\n";
    csv += "sequence,decoded,excess,voted\n";
    for (std::size_t i = 0; i < verdict.per_sequence.size(); ++i) {
      const SequenceVote& v = verdict.per_sequence[i];
      csv += std::to_string(i) + ',';
      csv += v.scored ? std::to_string(v.decoded) : std::string("unscored");
      csv += ',' + format_double(v.excess) + ',' + (v.voted ? "1" : "0");
      csv += '\n';
    }
    write_output(det_out, csv);
    return 0;
  }

  if (app.got_subcommand(info_cmd)) {
    json j = load_json_file(info_in);
    std::ostringstream out;
    if (j.contains("machines")) {
      Codebook book = codebook_from_json(j);
      CodebookInfo info = codebook_info(book, info_delta);
      out << "codebook: " << book.size() << " machines, design_delta "
          << format_double(book.design_delta) << "\n";
      out << "message,mu,nu,mu_delta,nu_delta,entropy,entropy_delta\n";
      for (std::size_t m = 0; m < book.size(); ++m)
        out << m << ',' << format_double(info.machines[m].mu) << ','
            << format_double(info.machines[m].nu) << ',' << format_double(info.transformed[m].mu)
            << ',' << format_double(info.transformed[m].nu) << ','
            << format_double(info.entropies[m]) << ',' << format_double(info.entropies_delta[m])
            << '\n';
      out << "\nkl_rate matrix (bits/symbol):\n";
      for (std::size_t i = 0; i < book.size(); ++i) {
        for (std::size_t k = 0; k < book.size(); ++k)
          out << (k ? "," : "") << format_double(info.kl[i][k]);
        out << '\n';
      }
    } else {
      Machine g = machine_from_json(j);
      MachineInfo info = machine_info(g, info_delta);
      out << "states: " << g.num_states << ", kind: "
          << (info.generalized ? "generalized" : "deterministic") << "\n";
      out << "entropy_rate: " << format_double(info.entropy) << " bits/symbol\n";
      out << "entropy_rate of g(" << format_double(info_delta)
          << "): " << format_double(info.entropy_delta) << " bits/symbol\n";
      if (info.has_block_check) {
        out << "block-entropy check H_10 - H_9: " << format_double(info.block_entropy_gap);
        if (info.generalized)
          out << "  (generalized machine: the state formula may deviate from this)";
        out << "\n";
      }
      out << "stationary:";
      for (double v : info.stationary) out << ' ' << format_double(v);
      out << "\n";
    }
    std::cout << out.str();
    return 0;
  }

  if (app.got_subcommand(expdec)) {
    if (!xd_config.empty()) {
      json j = load_json_file(xd_config);
      if (j.contains("codebook") && xd_book_opt->count() == 0)
        xd_book = j["codebook"].get<std::string>();
      if (j.contains("delta") && xd_delta_opt->count() == 0) xd_cfg.delta = j["delta"].get<double>();
      if (j.contains("lengths") && xd_len_opt->count() == 0)
        xd_cfg.lengths = j["lengths"].get<std::vector<std::size_t>>();
      if (j.contains("trials") && xd_trials_opt->count() == 0)
        xd_cfg.trials = j["trials"].get<std::size_t>();
      if (j.contains("reruns") && xd_reruns_opt->count() == 0)
        xd_cfg.reruns = j["reruns"].get<std::size_t>();
      if (j.contains("seed") && xd_seed_opt->count() == 0)
        xd_cfg.seed = j["seed"].get<std::uint64_t>();
      if (j.contains("fixed_input") && xd_fixed_opt->count() == 0 && j["fixed_input"].get<bool>())
        xd_cfg.fixed_input_length = true;
      if (j.contains("resample_codebooks") && xd_resample_opt->count() == 0 &&
          j["resample_codebooks"].get<bool>())
        xd_cfg.resample_codebooks = true;
    }
    if (xd_book.empty()) throw std::invalid_argument("exp-decode needs --codebook or a config");
    if (xd_len_opt->count() > 0) xd_cfg.lengths = parse_lengths(xd_lengths);
    if (xd_cfg.lengths.empty()) xd_cfg.lengths = parse_lengths("10:200:10");
    if (xd_fixed_opt->count() > 0) xd_cfg.fixed_input_length = true;
    if (xd_resample_opt->count() > 0) xd_cfg.resample_codebooks = true;
    xd_cfg.codebook = load_codebook(xd_book);
    write_output(xd_out, decoding_csv(run_decoding_experiment(xd_cfg)));
    return 0;
  }

  if (app.got_subcommand(exptam)) {
    if (!xt_config.empty()) {
      json j = load_json_file(xt_config);
      if (j.contains("codebook") && xt_book_opt->count() == 0)
        xt_book = j["codebook"].get<std::string>();
      if (j.contains("delta") && xt_delta_opt->count() == 0) xt_cfg.delta = j["delta"].get<double>();
      if (j.contains("delta_tampered") && xt_dt_opt->count() == 0)
        xt_cfg.delta_tampered = j["delta_tampered"].get<double>();
      if (j.contains("eta") && xt_eta_opt->count() == 0) xt_cfg.eta = j["eta"].get<double>();
      if (j.contains("epsilons") && xt_eps_opt->count() == 0)
        xt_cfg.epsilons = j["epsilons"].get<std::vector<double>>();
      if (j.contains("k") && xt_k_opt->count() == 0) xt_cfg.k = j["k"].get<std::size_t>();
      if (j.contains("test_sets") && xt_sets_opt->count() == 0)
        xt_cfg.test_sets = j["test_sets"].get<std::size_t>();
      if (j.contains("lengths") && xt_len_opt->count() == 0)
        xt_cfg.lengths = j["lengths"].get<std::vector<std::size_t>>();
      if (j.contains("tamper_probability") && xt_prob_opt->count() == 0)
        xt_cfg.tamper_probability = j["tamper_probability"].get<double>();
      if (j.contains("seed") && xt_seed_opt->count() == 0)
        xt_cfg.seed = j["seed"].get<std::uint64_t>();
      if (j.contains("assign_seed") && xt_aseed_opt->count() == 0)
        xt_cfg.assignment_seed = j["assign_seed"].get<std::uint64_t>();
      if (j.contains("mode") && xt_mode_opt->count() == 0)
        xt_cfg.mode = parse_mode(j["mode"].get<std::string>());
      if (j.contains("fixed_input") && xt_fixed_opt->count() == 0 && j["fixed_input"].get<bool>())
        xt_cfg.fixed_input_length = true;
    }
    if (xt_book.empty()) throw std::invalid_argument("exp-tamper needs --codebook or a config");
    if (xt_len_opt->count() > 0) xt_cfg.lengths = parse_lengths(xt_lengths);
    if (xt_eps_opt->count() > 0) xt_cfg.epsilons = parse_doubles(xt_epsilons);
    if (xt_mode_opt->count() > 0) xt_cfg.mode = parse_mode(xt_mode);
    if (xt_fixed_opt->count() > 0) xt_cfg.fixed_input_length = true;
    xt_cfg.codebook = load_codebook(xt_book);
    write_output(xt_out, tamper_csv(run_tamper_experiment(xt_cfg)));
    return 0;
  }

  if (app.got_subcommand(scan_cmd)) {
    write_output(scan_out, scan_csv(run_param_scan(parse_doubles(scan_deltas), scan_step)));
    return 0;
  }

  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run(argc, argv);
  } catch (const IoError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
}
