// umm - calibration-free ERP decoding toolkit, command line entry point.

#include <CLI11.hpp>

#include <cstdint>
#include <cstring>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "umm/core.hpp"
#include "umm/decoder.hpp"
#include "umm/session_io.hpp"
#include "umm/synth.hpp"

namespace fs = std::filesystem;
using namespace umm;

namespace {

struct DecoderFlags {
  std::string cov = "toeplitz";
  std::string cov_scope = "all";
  std::string mean = "confidence";
  int taper_band = 0;
  int degeneracy_warmup = 10;
  double degeneracy_ratio = 1.1;
  bool reset_on_degenerate = false;

  void attach(CLI::App* cmd) {
    cmd->add_option("--cov", cov, "covariance estimator")
        ->check(CLI::IsMember({"shrinkage", "toeplitz"}));
    cmd->add_option("--cov-scope", cov_scope, "covariance estimation scope")
        ->check(CLI::IsMember({"trial", "all"}));
    cmd->add_option("--mean", mean, "class-mean strategy")
        ->check(CLI::IsMember({"instant", "optimistic", "confidence"}));
    cmd->add_option("--taper-band", taper_band, "lag taper bandwidth (0 = off)");
    cmd->add_option("--degeneracy-warmup", degeneracy_warmup,
                    "trials before the degeneracy rule is evaluated");
    cmd->add_option("--degeneracy-ratio", degeneracy_ratio,
                    "cumulative-confidence ratio threshold");
    cmd->add_flag("--reset-on-degenerate", reset_on_degenerate,
                  "zero the mean accumulators when the rule fires");
  }

  DecoderConfig to_config() const {
    DecoderConfig c;
    c.mean_strategy = mean == "instant"      ? MeanStrategy::instant
                      : mean == "optimistic" ? MeanStrategy::optimistic
                                             : MeanStrategy::confidence_weighted;
    c.covariance_kind = cov == "shrinkage" ? CovKind::shrinkage : CovKind::block_toeplitz;
    c.covariance_scope = cov_scope == "trial" ? CovScope::current_trial : CovScope::pooled_all;
    if (taper_band > 0) c.taper_bandwidth = taper_band;
    c.degeneracy_warmup = degeneracy_warmup;
    c.degeneracy_ratio = degeneracy_ratio;
    c.reset_on_degenerate = reset_on_degenerate;
    c.validate();
    return c;
  }
};

DecisionLog replay_session(const fs::path& dir, const DecoderConfig& config,
                           bool* any_labels) {
  const Session session = read_session(dir);
  const SymbolSet symbols = session.symbol_set();
  const auto trials = session.to_trials();
  if (trials.empty()) throw InvalidConfig("session has no trials: " + dir.string());

  const int channels = session.manifest.channels();
  const int samples = session.manifest.samples_per_epoch;
  Decoder decoder(symbols.size(), channels, samples, config);

  DecisionLog log;
  const std::string id = dir.filename().string().empty() ? dir.string()
                                                         : dir.filename().string();
  for (std::size_t i = 0; i < trials.size(); ++i) {
    const Decision d = decoder.classify_trial(trials[i]);
    log.append(id, static_cast<int>(i), d, decoder.state(), config,
               trials[i].true_symbol, symbols);
    if (trials[i].true_symbol) *any_labels = true;
  }
  return log;
}

int cmd_replay(const std::vector<std::string>& data_dirs, const DecoderFlags& flags,
               const std::string& out, const std::string& metrics_out) {
  const DecoderConfig config = flags.to_config();
  std::vector<DecisionLog> logs;
  bool any_labels = false;

  std::optional<SymbolSet> symbols;
  std::string error;
  for (const auto& dir : data_dirs) {
    if (!fs::exists(dir)) {
      error = "data directory does not exist: " + dir;
      break;
    }
    try {
      if (!symbols) symbols = read_session(dir).symbol_set();
      logs.push_back(replay_session(dir, config, &any_labels));
    } catch (const std::exception& e) {
      error = std::string(e.what()) + " (session: " + dir + ")";
      break;
    }
  }

  // flush whatever was decoded, even on error
  if (!out.empty() && symbols) {
    DecisionLog merged;
    for (const auto& log : logs)
      merged.rows.insert(merged.rows.end(), log.rows.begin(), log.rows.end());
    atomic_write_file(out, decision_log_csv(merged, *symbols));
  }

  if (!error.empty()) {
    std::cerr << "error: " << error << "\n";
    return 1;
  }

  if (any_labels) {
    const MetricsReport report = compute_metrics(logs);
    std::cout << report.text();
    if (!metrics_out.empty()) {
      atomic_write_file(metrics_out, report.learning_curve_csv());
      const fs::path hist =
          fs::path(metrics_out).parent_path() /
          (fs::path(metrics_out).stem().string() + "_confidence_hist.csv");
      atomic_write_file(hist, report.confidence_histogram_csv());
    }
  } else {
    std::cout << "sessions: " << logs.size() << " (unlabeled, metrics skipped)\n";
  }
  return 0;
}

SynthConfig preset_config(const std::string& preset) {
  if (preset == "visual-random") return SynthConfig::visual_random_preset();
  if (preset == "row-column") return SynthConfig::row_column_preset();
  if (preset == "sequential") return SynthConfig::sequential_preset();
  throw InvalidConfig("unknown preset: " + preset);
}

int cmd_synth(const std::string& preset, const std::string& out, int n_trials,
              double snr, int channels, int samples, double ar, double noise_amplitude,
              double jitter, std::uint64_t seed) {
  SynthConfig cfg = preset_config(preset);
  if (n_trials > 0) cfg.n_trials = n_trials;
  if (snr >= 0.0) cfg.snr = snr;
  if (channels > 0) cfg.channels = channels;
  if (samples > 0) cfg.samples = samples;
  if (ar >= 0.0) cfg.ar_coeff = ar;
  if (noise_amplitude >= 0.0) cfg.noise_amplitude = noise_amplitude;
  if (jitter >= 0.0) cfg.latency_jitter_std = jitter;
  cfg.seed = seed;
  cfg.validate();

  const auto trials = generate_session(cfg);
  const Session session =
      build_session(cfg, trials, "umm synth --preset " + preset + " --seed " +
                                     std::to_string(seed));
  write_session(out, session.manifest, session.epochs);
  std::cout << "wrote " << trials.size() << " trials (" << session.manifest.epoch_count
            << " epochs, " << cfg.channels << "x" << cfg.samples << ") to " << out
            << "\n";
  return 0;
}

int cmd_toy(const std::string& out, int draws, double separation, double noise,
            std::uint64_t seed) {
  ToyConfig cfg;
  cfg.draws_per_letter = draws;
  cfg.separation = separation;
  cfg.noise_scale = noise;
  cfg.seed = seed;
  atomic_write_file(out, generate_toy_2d(cfg).csv());
  std::cout << "wrote toy data to " << out << "\n";
  return 0;
}

int cmd_lda_export(const std::string& data_dir, const DecoderFlags& flags,
                   const std::string& out) {
  if (!fs::exists(data_dir)) {
    std::cerr << "error: data directory does not exist: " << data_dir << "\n";
    return 1;
  }
  const DecoderConfig config = flags.to_config();
  const Session session = read_session(data_dir);
  Decoder decoder(static_cast<int>(session.manifest.symbols.size()),
                  session.manifest.channels(), session.manifest.samples_per_epoch,
                  config);
  for (const auto& trial : session.to_trials()) decoder.classify_trial(trial);
  const Vector w = decoder.lda_weights();

  // LDAW format: 8-byte magic, u32 dimension, u32 reserved, f64le weights
  std::string bytes;
  bytes.append("UMMLDA01", 8);
  const auto dim = static_cast<std::uint32_t>(w.size());
  const std::uint32_t reserved = 0;
  bytes.append(reinterpret_cast<const char*>(&dim), 4);
  bytes.append(reinterpret_cast<const char*>(&reserved), 4);
  bytes.append(reinterpret_cast<const char*>(w.data()),
               static_cast<std::size_t>(w.size()) * sizeof(double));
  atomic_write_file(out, bytes);
  std::cout << "wrote " << w.size() << " weights to " << out << "\n";
  return 0;
}

int cmd_info(const std::string& data_dir) {
  if (!fs::exists(data_dir)) {
    std::cerr << "error: data directory does not exist: " << data_dir << "\n";
    return 1;
  }
  const Session session = read_session(data_dir);
  const auto& m = session.manifest;
  std::cout << "session: " << data_dir << "\n"
            << "  symbols: " << m.symbols.size() << "\n"
            << "  channels: " << m.channels() << ", samples/epoch: " << m.samples_per_epoch
            << " (feature dimension " << m.channels() * m.samples_per_epoch << ")\n"
            << "  epochs: " << m.epoch_count << ", trials: " << m.trials.size() << "\n";

  int labeled = 0;
  for (const auto& t : m.trials) labeled += t.true_symbol ? 1 : 0;
  std::cout << "  labeled trials: " << labeled << "\n";

  if (!m.trials.empty()) {
    const auto trials = session.to_trials();
    const auto& first = trials.front();
    const auto counts = first.target_counts();
    const bool balanced = first.balanced_code();
    std::cout << "  events in first trial: " << first.n_epochs() << "\n";
    if (balanced) {
      const int n_e = first.n_epochs();
      const int n_plus = counts.front();
      std::cout << "  balanced code: " << n_plus << " target events per symbol\n";
      // hypothesis search space: all assignments vs one per symbol
      try {
        std::cout << "  unconstrained assignments C(" << n_e << "," << n_plus
                  << ") = " << count_to_string(count_unconstrained_assignments(n_e, n_plus))
                  << " vs " << m.symbols.size() << " symbol hypotheses\n";
      } catch (const ArgumentOutOfRange&) {
        std::cout << "  unconstrained assignments C(" << n_e << "," << n_plus
                  << ") exceeds 128 bits vs " << m.symbols.size()
                  << " symbol hypotheses\n";
      }
    } else {
      std::cout << "  warning: unbalanced code (per-symbol target counts differ)\n";
    }
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"calibration-free ERP decoder (unsupervised mean-difference maximization)"};
  app.require_subcommand(1);

  // replay
  auto* replay = app.add_subcommand("replay", "decode recorded sessions offline");
  std::vector<std::string> data_dirs;
  replay->add_option("--data", data_dirs, "session directory (repeatable)")->required();
  DecoderFlags replay_flags;
  replay_flags.attach(replay);
  std::string replay_out, metrics_out;
  replay->add_option("--out", replay_out, "decision log CSV path");
  replay->add_option("--metrics-out", metrics_out, "learning-curve CSV path");
  std::uint64_t replay_seed = 0;
  replay->add_option("--seed", replay_seed, "accepted for reproducible run logs");

  // synth
  auto* synth = app.add_subcommand("synth", "generate a synthetic session");
  std::string preset = "visual-random";
  synth->add_option("--preset", preset, "paradigm preset")
      ->check(CLI::IsMember({"visual-random", "row-column", "sequential"}));
  std::string synth_out;
  synth->add_option("--out", synth_out, "output session directory")->required();
  int n_trials = -1, channels = -1, samples = -1;
  double snr = -1.0, ar = -1.0, noise_amplitude = -1.0, jitter = -1.0;
  std::uint64_t synth_seed = 0;
  synth->add_option("--n-trials", n_trials, "number of trials");
  synth->add_option("--snr", snr, "template scale");
  synth->add_option("--channels", channels, "channel count");
  synth->add_option("--samples", samples, "samples per epoch");
  synth->add_option("--ar", ar, "AR(1) noise coefficient");
  synth->add_option("--noise-amplitude", noise_amplitude, "noise scale");
  synth->add_option("--jitter", jitter, "latency jitter std (samples)");
  synth->add_option("--seed", synth_seed, "generator seed");

  // toy
  auto* toy = app.add_subcommand("toy", "emit the 2-D four-letter toy example as CSV");
  std::string toy_out;
  toy->add_option("--out", toy_out, "output CSV path")->required();
  int draws = 30;
  double separation = 3.0, toy_noise = 1.0;
  std::uint64_t toy_seed = 0;
  toy->add_option("--draws", draws, "points per letter");
  toy->add_option("--separation", separation, "target mean shift");
  toy->add_option("--noise", toy_noise, "noise scale");
  toy->add_option("--seed", toy_seed, "generator seed");

  // lda-export
  auto* lda = app.add_subcommand("lda-export", "replay a session and export LDA weights");
  std::string lda_data, lda_out;
  lda->add_option("--data", lda_data, "session directory")->required();
  DecoderFlags lda_flags;
  lda_flags.attach(lda);
  lda->add_option("--out", lda_out, "output weight file")->required();
  std::uint64_t lda_seed = 0;
  lda->add_option("--seed", lda_seed, "accepted for reproducible run logs");

  // info
  auto* info = app.add_subcommand("info", "print session statistics");
  std::string info_data;
  info->add_option("--data", info_data, "session directory")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (replay->parsed()) return cmd_replay(data_dirs, replay_flags, replay_out, metrics_out);
    if (synth->parsed())
      return cmd_synth(preset, synth_out, n_trials, snr, channels, samples, ar,
                       noise_amplitude, jitter, synth_seed);
    if (toy->parsed()) return cmd_toy(toy_out, draws, separation, toy_noise, toy_seed);
    if (lda->parsed()) return cmd_lda_export(lda_data, lda_flags, lda_out);
    if (info->parsed()) return cmd_info(info_data);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
