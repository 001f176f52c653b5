#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "umm/core.hpp"
#include "umm/decoder.hpp"
#include "umm/synth.hpp"

namespace umm {

// On-disk session format (format_version 1), see docs/FORMAT.md:
//   <dir>/manifest.json  - metadata, trials, events, optional true symbols
//   <dir>/epochs.f32le   - raw little-endian float32, epoch-major, each epoch
//                          stored channel-row-major with time fastest

/// Epoch membership and events of one trial inside a session file.
struct TrialSpec {
  // Either a half-open range [epoch_begin, epoch_end) or explicit indices.
  int epoch_begin = 0;
  int epoch_end = 0;
  std::vector<int> explicit_indices;  // used when non-empty
  std::vector<std::vector<int>> events;
  std::optional<int> true_symbol;

  std::vector<int> epoch_indices() const;
  int n_epochs() const;
};

struct SessionManifest {
  int format_version = 1;
  std::vector<std::string> channel_names;
  double sampling_rate = 0.0;  // Hz, informational
  int samples_per_epoch = 0;
  std::vector<std::string> symbols;
  int epoch_count = 0;
  std::string provenance;
  std::vector<TrialSpec> trials;

  int channels() const { return static_cast<int>(channel_names.size()); }

  /// Structural validation (index ranges, event alignment).
  /// Throws ShapeMismatch / InvalidConfig.
  void validate() const;
};

/// A manifest plus its epoch payload (epochs as C x T matrices).
struct Session {
  SessionManifest manifest;
  std::vector<Matrix> epochs;

  SymbolSet symbol_set() const;
  std::vector<TrialRecord> to_trials() const;
};

/// Write manifest + payload into dir (created if needed). Files are written
/// atomically (temp + rename). Throws ShapeMismatch on inconsistencies.
void write_session(const std::filesystem::path& dir, const SessionManifest& manifest,
                   const std::vector<Matrix>& epochs);

/// Read a session directory. Throws FormatVersionUnsupported, CorruptPayload
/// (bad JSON or payload size != epoch_count*C*T*4) or ShapeMismatch.
Session read_session(const std::filesystem::path& dir);

/// Assemble a Session from generated trials (channel names ch00...,
/// default symbol names).
Session build_session(const SynthConfig& config, const std::vector<TrialRecord>& trials,
                      const std::string& provenance);

// ---------------------------------------------------------------------------
// Decision logs and replay metrics

struct DecisionRow {
  std::string session_id;
  int trial = 0;
  int predicted = -1;
  std::optional<int> true_symbol;
  std::optional<bool> correct;
  double d_star = 0.0;
  double d_runner_up = 0.0;
  double confidence = 0.0;
  double confidence_instant = 0.0;
  double cum_confidence = 0.0;
  double cum_confidence_instant = 0.0;
  bool degenerate = false;
  MeanStrategy mean_strategy = MeanStrategy::instant;
  CovKind covariance_kind = CovKind::shrinkage;
  CovScope covariance_scope = CovScope::current_trial;
};

struct DecisionLog {
  std::vector<DecisionRow> rows;

  void append(const std::string& session_id, int trial, const Decision& decision,
              const DecoderState& state, const DecoderConfig& config,
              std::optional<int> true_symbol, const SymbolSet& symbols);
};

/// Fixed CSV header shared by writer and docs.
extern const char* const kDecisionLogHeader;

std::string decision_log_csv(const DecisionLog& log, const SymbolSet& symbols);

struct MetricsReport {
  std::vector<std::pair<std::string, double>> per_session_accuracy;
  double pooled_accuracy = 0.0;
  int pooled_trials = 0;
  /// learning_curve[t] = fraction of sessions whose trial t was correct
  /// (among sessions that have a trial t).
  std::vector<double> learning_curve;
  struct HistRow {
    double lo = 0.0, hi = 0.0;
    int correct = 0;
    int incorrect = 0;
  };
  std::vector<HistRow> confidence_histogram;

  std::string text() const;
  std::string learning_curve_csv() const;
  std::string confidence_histogram_csv() const;
};

/// Accuracy, learning curve and confidence histogram over one or more
/// labeled logs. Session order does not affect pooled results. Throws
/// MissingLabels when any row lacks a true symbol.
MetricsReport compute_metrics(const std::vector<DecisionLog>& logs,
                              int histogram_bins = 20);

/// Atomic file write (temp in the same directory + rename).
void atomic_write_file(const std::filesystem::path& path, const std::string& bytes);

}  // namespace umm
