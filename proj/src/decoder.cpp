#include "umm/decoder.hpp"

#include <algorithm>
#include <cmath>

namespace umm {

std::string to_string(MeanStrategy m) {
  switch (m) {
    case MeanStrategy::instant: return "instant";
    case MeanStrategy::optimistic: return "optimistic";
    case MeanStrategy::confidence_weighted: return "confidence";
  }
  return "?";
}

void DecoderConfig::validate() const {
  if (degeneracy_warmup < 1) throw InvalidConfig("degeneracy_warmup must be >= 1");
  if (!(degeneracy_ratio > 1.0)) throw InvalidConfig("degeneracy_ratio must be > 1");
  if (!(sigma_floor > 0.0)) throw InvalidConfig("sigma_floor must be > 0");
  if (taper_bandwidth && *taper_bandwidth < 1)
    throw InvalidConfig("taper_bandwidth must be >= 1");
}

Vector DecoderState::mean_pos_prev() const {
  if (trial_count == 0) throw NoAccumulatedMeans("no trials accumulated");
  return mean_pos_sum / static_cast<double>(trial_count);
}

Vector DecoderState::mean_neg_prev() const {
  if (trial_count == 0) throw NoAccumulatedMeans("no trials accumulated");
  return mean_neg_sum / static_cast<double>(trial_count);
}

Vector DecoderState::accumulated_mean_difference(MeanStrategy strategy) const {
  if (trial_count == 0) throw NoAccumulatedMeans("no trials accumulated");
  if (strategy == MeanStrategy::confidence_weighted && weight_pos > 0.0 &&
      weight_neg > 0.0) {
    return weighted_pos_sum / weight_pos - weighted_neg_sum / weight_neg;
  }
  return mean_pos_prev() - mean_neg_prev();
}

double mahalanobis_sq(const Vector& delta_mu, const CovarianceModel& cov) {
  if (delta_mu.size() != cov.dim())
    throw ShapeMismatch("mean difference length does not match covariance dimension");
  const double d = delta_mu.dot(cov.solve(delta_mu));
  return d < 0.0 ? 0.0 : d;
}

ConfidencePick compute_confidence(const std::vector<double>& distances,
                                  double sigma_floor) {
  const int n = static_cast<int>(distances.size());
  if (n < 2) throw TooFewSymbols("confidence needs at least two hypothesis distances");

  int winner = 0;
  for (int s = 1; s < n; ++s)
    if (distances[static_cast<std::size_t>(s)] > distances[static_cast<std::size_t>(winner)])
      winner = s;

  int runner = winner == 0 ? 1 : 0;
  double sum = 0.0;
  for (int s = 0; s < n; ++s) {
    if (s == winner) continue;
    sum += distances[static_cast<std::size_t>(s)];
    if (distances[static_cast<std::size_t>(s)] > distances[static_cast<std::size_t>(runner)] &&
        s != runner) {
      runner = s;
    }
  }

  // population standard deviation of the non-winner distances
  const double mean = sum / (n - 1);
  double var = 0.0;
  for (int s = 0; s < n; ++s) {
    if (s == winner) continue;
    const double dev = distances[static_cast<std::size_t>(s)] - mean;
    var += dev * dev;
  }
  var /= (n - 1);
  const double sigma = std::sqrt(var);

  ConfidencePick pick;
  pick.winner = winner;
  pick.runner_up = runner;
  pick.confidence = (distances[static_cast<std::size_t>(winner)] -
                     distances[static_cast<std::size_t>(runner)]) /
                    std::max(sigma, sigma_floor);
  return pick;
}

Vector blend_optimistic(const Vector& prev_sum, int n_t, const Vector& current) {
  if (n_t == 0) return current;
  return (prev_sum + current) / (static_cast<double>(n_t) + 1.0);
}

Vector blend_confidence_weighted(const Vector& weighted_sum, double weight_total,
                                 double confidence, const Vector& current) {
  const double denom = weight_total + confidence;
  if (denom <= 0.0) return current;  // all weights zero: current trial only
  if (weighted_sum.size() == 0) return (confidence * current) / denom;
  return (weighted_sum + confidence * current) / denom;
}

namespace {

struct HypothesisMeans {
  std::vector<Vector> pos;  // per symbol: current-trial target mean
  std::vector<Vector> neg;  // per symbol: current-trial non-target mean
};

HypothesisMeans current_trial_means(const TrialRecord& trial) {
  HypothesisMeans m;
  m.pos.reserve(static_cast<std::size_t>(trial.n_symbols));
  m.neg.reserve(static_cast<std::size_t>(trial.n_symbols));
  for (int s = 0; s < trial.n_symbols; ++s) {
    auto [pos, neg] = hypothesis_class_means(trial, partition_epochs(trial, s));
    m.pos.push_back(std::move(pos));
    m.neg.push_back(std::move(neg));
  }
  return m;
}

std::vector<double> instant_distances(const HypothesisMeans& means,
                                      const CovarianceModel& cov) {
  std::vector<double> d(means.pos.size());
  for (std::size_t s = 0; s < means.pos.size(); ++s)
    d[s] = mahalanobis_sq(means.pos[s] - means.neg[s], cov);
  return d;
}

std::vector<double> strategy_distances(const HypothesisMeans& means,
                                       const CovarianceModel& cov,
                                       const DecoderState& state, MeanStrategy strategy,
                                       const std::vector<double>& instant,
                                       double instant_confidence) {
  const std::size_t n = means.pos.size();
  std::vector<double> d(n);
  switch (strategy) {
    case MeanStrategy::instant:
      return instant;
    case MeanStrategy::optimistic: {
      for (std::size_t s = 0; s < n; ++s) {
        const Vector pos = blend_optimistic(state.mean_pos_sum, state.trial_count, means.pos[s]);
        const Vector neg = blend_optimistic(state.mean_neg_sum, state.trial_count, means.neg[s]);
        d[s] = mahalanobis_sq(pos - neg, cov);
      }
      return d;
    }
    case MeanStrategy::confidence_weighted: {
      const double ci = instant_confidence;  // unclamped in the blend
      if (state.weight_pos + ci <= 0.0) return instant;  // 0/0 fallback
      for (std::size_t s = 0; s < n; ++s) {
        const Vector pos = blend_confidence_weighted(state.weighted_pos_sum,
                                                     state.weight_pos, ci, means.pos[s]);
        const Vector neg = blend_confidence_weighted(state.weighted_neg_sum,
                                                     state.weight_neg, ci, means.neg[s]);
        d[s] = mahalanobis_sq(pos - neg, cov);
      }
      return d;
    }
  }
  return d;
}

}  // namespace

std::vector<double> score_hypotheses(const TrialRecord& trial, const CovarianceModel& cov,
                                     const DecoderState& state, MeanStrategy strategy,
                                     double sigma_floor) {
  const HypothesisMeans means = current_trial_means(trial);
  const std::vector<double> instant = instant_distances(means, cov);
  double c_inst = 0.0;
  if (strategy == MeanStrategy::confidence_weighted)
    c_inst = compute_confidence(instant, sigma_floor).confidence;
  return strategy_distances(means, cov, state, strategy, instant, c_inst);
}

Vector extract_lda_weights(const DecoderState& state, const CovarianceModel& cov,
                           MeanStrategy strategy) {
  return cov.solve(state.accumulated_mean_difference(strategy));
}

Decoder::Decoder(int n_symbols, int channels, int samples, DecoderConfig config)
    : n_symbols_(n_symbols), config_(config), pool_(channels, samples) {
  if (n_symbols < 2) throw InvalidConfig("decoder needs at least two symbols");
  config_.validate();
}

const CovarianceModel& Decoder::covariance() const {
  if (!covariance_) throw NoAccumulatedMeans("no trial has been decoded yet");
  return *covariance_;
}

Vector Decoder::lda_weights() const {
  return extract_lda_weights(state_, covariance(), config_.mean_strategy);
}

CovarianceModel Decoder::estimate_covariance() const {
  EstimatorOptions opts;
  opts.taper_bandwidth = config_.taper_bandwidth;
  opts.center_per_trial = config_.center_per_trial;
  return config_.covariance_kind == CovKind::shrinkage
             ? shrinkage_covariance(pool_, config_.covariance_scope, opts)
             : block_toeplitz_covariance(pool_, config_.covariance_scope, opts);
}

Decision Decoder::classify_trial(const TrialRecord& trial) {
  trial.validate();
  if (trial.n_symbols != n_symbols_)
    throw InconsistentDimensions("trial symbol count differs from decoder");
  if (trial.epochs.front().channels() != pool_.channels() ||
      trial.epochs.front().samples() != pool_.samples())
    throw InconsistentDimensions("trial epoch shape differs from decoder");

  update_scope(config_.covariance_scope, pool_, trial.epochs);
  covariance_ = estimate_covariance();
  const CovarianceModel& cov = *covariance_;

  const HypothesisMeans means = current_trial_means(trial);
  const std::vector<double> instant = instant_distances(means, cov);
  const ConfidencePick inst_pick = compute_confidence(instant, config_.sigma_floor);

  std::vector<double> dists = strategy_distances(means, cov, state_,
                                                 config_.mean_strategy, instant,
                                                 inst_pick.confidence);
  const ConfidencePick pick = compute_confidence(dists, config_.sigma_floor);

  // Naive labeling: accumulate the chosen hypothesis' class means as if the
  // decision were the true label.
  const auto chosen = static_cast<std::size_t>(pick.winner);
  if (state_.trial_count == 0 && state_.mean_pos_sum.size() == 0) {
    const auto d = means.pos[chosen].size();
    state_.mean_pos_sum = Vector::Zero(d);
    state_.mean_neg_sum = Vector::Zero(d);
    state_.weighted_pos_sum = Vector::Zero(d);
    state_.weighted_neg_sum = Vector::Zero(d);
  }
  state_.mean_pos_sum += means.pos[chosen];
  state_.mean_neg_sum += means.neg[chosen];
  const double chat = std::min(inst_pick.confidence, 1.0);
  state_.weighted_pos_sum += chat * means.pos[chosen];
  state_.weighted_neg_sum += chat * means.neg[chosen];
  state_.weight_pos += chat;
  state_.weight_neg += chat;
  state_.trial_count += 1;

  state_.cum_confidence += pick.confidence;
  state_.cum_instant_confidence += inst_pick.confidence;
  state_.confidence_log.emplace_back(pick.confidence, inst_pick.confidence);

  // Degeneracy rule: with past-information strategies, an inverted mean
  // estimate keeps the strategy confidence from pulling ahead of the
  // instantaneous one. Meaningless for the instant strategy, where both
  // confidences coincide.
  bool degenerate = false;
  if (config_.mean_strategy != MeanStrategy::instant &&
      state_.trial_count > config_.degeneracy_warmup) {
    degenerate =
        state_.cum_confidence < config_.degeneracy_ratio * state_.cum_instant_confidence;
  }
  if (degenerate && config_.reset_on_degenerate) {
    state_.mean_pos_sum.setZero();
    state_.mean_neg_sum.setZero();
    state_.weighted_pos_sum.setZero();
    state_.weighted_neg_sum.setZero();
    state_.weight_pos = 0.0;
    state_.weight_neg = 0.0;
    state_.trial_count = 0;
  }

  Decision decision;
  decision.chosen = pick.winner;
  decision.runner_up = pick.runner_up;
  decision.distances = std::move(dists);
  decision.confidence = pick.confidence;
  decision.instant_confidence = inst_pick.confidence;
  decision.degenerate = degenerate;
  state_.history.push_back(decision);
  return decision;
}

}  // namespace umm
