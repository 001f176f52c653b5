#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "umm/core.hpp"
#include "umm/rng.hpp"

namespace umm {

/// Stimulation code families.
///   pseudo_random - every symbol independently assigned to exactly
///                   targets_per_symbol of the trial's events
///   row_column    - grid layout, repetitions shuffled passes over all rows
///                   and columns
///   sequential    - one symbol per event, repetitions shuffled passes
enum class CodeKind { pseudo_random, row_column, sequential };

std::string to_string(CodeKind k);

struct SynthConfig {
  int n_symbols = 36;
  CodeKind code = CodeKind::pseudo_random;

  // pseudo_random parameters
  int epochs_per_trial = 68;
  int targets_per_symbol = 16;

  // row_column parameters (n_symbols must equal rows * cols)
  int rows = 6;
  int cols = 6;

  // shared pass count for row_column and sequential
  int repetitions = 10;

  int channels = 8;
  int samples = 12;

  /// Optional explicit templates (C x T); empty means defaults: a raised
  /// cosine bump peaking near 60 % of the window on a seeded random subset
  /// of channels for targets, zero for non-targets.
  Matrix target_template;
  Matrix nontarget_template;

  /// Noise: per-channel AR(1) in time (stationary, unit marginal variance)
  /// followed by static spatial mixing.
  double ar_coeff = 0.3;  // in [0, 1)
  double noise_amplitude = 1.0;
  bool identity_spatial_mixing = false;

  /// Scale applied to the templates.
  double snr = 1.0;

  /// Std of the rounded Gaussian per-epoch template shift, in samples.
  double latency_jitter_std = 0.0;

  int n_trials = 50;
  std::uint64_t seed = 0;

  int events_per_trial() const;
  int expected_targets_per_symbol() const;

  /// Throws InvalidConfig on inconsistent parameters.
  void validate() const;

  // Presets with the event counts of common paradigms. Feature dimensions
  // and noise are calibration choices recorded in the repo docs.
  static SynthConfig visual_random_preset();  // 36 symbols, 68 events, 16 targets
  static SynthConfig row_column_preset();     // 6x6 grid, 120 events, 20 targets
  static SynthConfig sequential_preset();     // 6 symbols, 90 events, 15 targets
};

/// One trial's worth of stimulus events for the configured code family.
/// Per-symbol target counts match the family invariant exactly.
std::vector<StimulusEvent> generate_stimulation_code(const SynthConfig& config, Rng& rng);
std::vector<StimulusEvent> generate_stimulation_code(const SynthConfig& config);

/// Deterministic spatial mixing matrix for the config (SPD square root of a
/// seeded random SPD matrix, or identity). The noise spatial covariance is
/// its square.
Matrix noise_spatial_mixing(const SynthConfig& config);

/// Templates actually used by generate_session (explicit or defaults).
std::pair<Matrix, Matrix> session_templates(const SynthConfig& config);

/// True D x D covariance of the generated noise in flattened (time-major)
/// coordinates: block (i, j) = amplitude^2 * ar_coeff^|i-j| * M M'. Oracle
/// for estimator tests.
Matrix generator_noise_covariance(const SynthConfig& config);

/// Full session with true symbols drawn uniformly; bit-reproducible per seed.
std::vector<TrialRecord> generate_session(const SynthConfig& config);

// ---------------------------------------------------------------------------
// Two-dimensional toy generator: a four letter paradigm where each epoch is a
// single 2-D point, letter 'B' is the attended one, and every letter shares
// the same Gaussian noise.

struct ToyConfig {
  int draws_per_letter = 30;
  double separation = 3.0;   // length of the target mean shift
  double noise_scale = 1.0;  // scale of the shared Gaussian noise
  std::uint64_t seed = 0;
};

struct ToyHypothesis {
  Eigen::Vector2d target_mean;
  Eigen::Vector2d nontarget_mean;
  Eigen::Vector2d delta() const { return target_mean - nontarget_mean; }
};

struct ToyData {
  std::vector<Eigen::Vector2d> points;
  std::vector<int> letters;  // 0..3 per point; 1 ('B') is the true target
  std::array<ToyHypothesis, 4> hypotheses;

  static const std::array<std::string, 4>& letter_names();

  /// View the point set as one trial (C=2, T=1, one single-letter event per
  /// point) so it can be decoded directly.
  TrialRecord as_trial() const;

  /// Plot-ready CSV: panel,letter,x,y,kind with kind in
  /// {point, hyp_target_mean, hyp_nontarget_mean}. Points appear once under
  /// panel "input"; each hypothesis panel carries its two means.
  std::string csv() const;
};

ToyData generate_toy_2d(const ToyConfig& config = {});

}  // namespace umm
