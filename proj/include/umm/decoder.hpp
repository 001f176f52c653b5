#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "umm/core.hpp"
#include "umm/covariance.hpp"

namespace umm {

/// How the hypothesis class means are built from past trials.
///   instant             - current trial only
///   optimistic          - average over all past trials, own decisions taken
///                         as labels with full weight
///   confidence_weighted - past trials weighted by their (clamped) decoding
///                         confidence
enum class MeanStrategy { instant, optimistic, confidence_weighted };

std::string to_string(MeanStrategy m);

struct DecoderConfig {
  MeanStrategy mean_strategy = MeanStrategy::confidence_weighted;
  CovKind covariance_kind = CovKind::block_toeplitz;
  CovScope covariance_scope = CovScope::pooled_all;

  /// Trials to process before the degeneracy rule is evaluated.
  int degeneracy_warmup = 10;
  /// Flag when cumulative strategy confidence < ratio * cumulative
  /// instantaneous confidence. Must be > 1.
  double degeneracy_ratio = 1.1;
  /// Zero the mean accumulators (keeping the covariance pool) when the
  /// degeneracy rule fires.
  bool reset_on_degenerate = false;

  /// Floor for the non-winner distance spread in the confidence denominator.
  double sigma_floor = 1e-12;

  std::optional<int> taper_bandwidth;
  bool center_per_trial = false;

  /// Throws InvalidConfig on out-of-range values.
  void validate() const;
};

/// Outcome of decoding one trial.
struct Decision {
  int chosen = -1;
  int runner_up = -1;
  std::vector<double> distances;   // strategy distance per symbol
  double confidence = 0.0;         // from the strategy distances
  double instant_confidence = 0.0; // from current-trial-only distances
  bool degenerate = false;
};

/// Accumulated decoding state across trials of one session.
struct DecoderState {
  int trial_count = 0;  // N_t, trials whose means entered the accumulators

  // Naive-labeling accumulators: per-trial hypothesis means of the chosen
  // symbol. Sums rather than running means, so the optimistic blend
  // (prev_sum + current) / (N_t + 1) is exact.
  Vector mean_pos_sum;
  Vector mean_neg_sum;

  // Confidence-weighted accumulators: sum of min(c_inst, 1)-weighted trial
  // means and the corresponding weight totals per class.
  Vector weighted_pos_sum;
  Vector weighted_neg_sum;
  double weight_pos = 0.0;
  double weight_neg = 0.0;

  // Cumulative confidences for degeneracy monitoring; never reset.
  double cum_confidence = 0.0;
  double cum_instant_confidence = 0.0;
  std::vector<std::pair<double, double>> confidence_log;  // (c, c_inst)

  std::vector<Decision> history;

  Vector mean_pos_prev() const;  // mean_pos_sum / trial_count
  Vector mean_neg_prev() const;

  /// Accumulated target-minus-non-target mean per strategy. Falls back to
  /// the unweighted accumulators when all confidence weights are zero.
  /// Throws NoAccumulatedMeans when trial_count == 0.
  Vector accumulated_mean_difference(MeanStrategy strategy) const;
};

/// Squared Mahalanobis distance delta' Sigma^-1 delta, clipped at zero.
double mahalanobis_sq(const Vector& delta_mu, const CovarianceModel& cov);

/// Optimistic blend (prev_sum + current) / (N_t + 1); prev_sum is the sum of
/// the past per-trial means, i.e. mu_prev * N_t held exactly.
Vector blend_optimistic(const Vector& prev_sum, int n_t, const Vector& current);

/// Confidence-weighted blend (weighted_sum + c * current) / (weight_total + c).
/// The current trial enters with its unclamped confidence c.
Vector blend_confidence_weighted(const Vector& weighted_sum, double weight_total,
                                 double confidence, const Vector& current);

struct ConfidencePick {
  double confidence = 0.0;
  int winner = -1;
  int runner_up = -1;
};

/// Winner, runner-up and confidence from a full per-symbol distance map:
///   c = (d(winner) - d(runner_up)) / max(popstd(non-winner distances), floor)
/// Ties are broken toward the lowest symbol index. Throws TooFewSymbols.
ConfidencePick compute_confidence(const std::vector<double>& distances,
                                  double sigma_floor = 1e-12);

/// Per-symbol strategy distances for one trial against the given covariance
/// and accumulated state. For confidence_weighted the current trial's weight
/// is its instantaneous confidence, computed internally from the same
/// covariance.
std::vector<double> score_hypotheses(const TrialRecord& trial,
                                     const CovarianceModel& cov,
                                     const DecoderState& state,
                                     MeanStrategy strategy,
                                     double sigma_floor = 1e-12);

/// Binary epoch classifier weights w = Sigma^-1 (mu+ - mu-) from the
/// accumulated class means.
Vector extract_lda_weights(const DecoderState& state, const CovarianceModel& cov,
                           MeanStrategy strategy);

/// Sequential session decoder: owns the epoch pool, covariance model and
/// DecoderState, and advances them one trial at a time. true_symbol on the
/// input trials is never read.
class Decoder {
 public:
  Decoder(int n_symbols, int channels, int samples, DecoderConfig config);

  /// Decode one trial and update the state (covariance pool, naive-labeling
  /// mean accumulators, confidence log, degeneracy flag).
  Decision classify_trial(const TrialRecord& trial);

  const DecoderConfig& config() const { return config_; }
  const DecoderState& state() const { return state_; }
  const EpochPool& pool() const { return pool_; }
  int n_symbols() const { return n_symbols_; }

  /// Covariance estimated for the most recent trial. Throws
  /// NoAccumulatedMeans before the first trial.
  const CovarianceModel& covariance() const;

  /// LDA weights from the current state and covariance.
  Vector lda_weights() const;

  /// Replace the accumulated state wholesale (failure-injection and
  /// calibration studies). The covariance pool is untouched.
  void seed_state(DecoderState state) { state_ = std::move(state); }

  /// Append epochs to the covariance pool without decoding them: warm-starts
  /// the label-free covariance from unlabeled recordings. Only meaningful
  /// with the pooled_all scope (current_trial replaces the pool per trial).
  void preload_pool(const std::vector<EpochFeatures>& epochs) { pool_.add_trial(epochs); }

 private:
  CovarianceModel estimate_covariance() const;

  int n_symbols_;
  DecoderConfig config_;
  EpochPool pool_;
  DecoderState state_;
  std::optional<CovarianceModel> covariance_;
};

}  // namespace umm
