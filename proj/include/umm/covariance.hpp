#pragma once

#include <Eigen/Cholesky>
#include <Eigen/Dense>
#include <optional>
#include <string>
#include <vector>

#include "umm/core.hpp"

namespace umm {

enum class CovKind { shrinkage, block_toeplitz };
enum class CovScope { current_trial, pooled_all };

std::string to_string(CovKind k);
std::string to_string(CovScope s);

struct EstimatorOptions {
  /// Force the shrinkage intensity instead of the analytic Ledoit-Wolf value.
  std::optional<double> gamma_override;
  /// Linear lag taper for the block-Toeplitz estimator: lag l is weighted by
  /// max(0, 1 - l/bandwidth). Off by default.
  std::optional<int> taper_bandwidth;
  /// Center each trial's epochs by its own mean instead of the pooled grand
  /// mean (sensitivity-analysis alternative; default is grand-mean).
  bool center_per_trial = false;
};

/// Growable store of flattened epochs across trials, with trial boundaries
/// retained so per-trial centering stays possible.
class EpochPool {
 public:
  EpochPool(int channels, int samples);

  /// Append one trial's epochs. Throws ShapeMismatch on dimension mismatch.
  void add_trial(const std::vector<EpochFeatures>& epochs);
  /// Drop everything, then append (current-trial scope semantics).
  void replace_trial(const std::vector<EpochFeatures>& epochs);
  void clear();

  int size() const { return static_cast<int>(epochs_.size()); }
  int dim() const { return channels_ * samples_; }
  int channels() const { return channels_; }
  int samples() const { return samples_; }
  int trial_count() const { return static_cast<int>(trial_offsets_.size()); }

  const std::vector<Vector>& epochs() const { return epochs_; }
  /// Start index of each stored trial in epochs().
  const std::vector<int>& trial_offsets() const { return trial_offsets_; }

 private:
  int channels_;
  int samples_;
  std::vector<Vector> epochs_;
  std::vector<int> trial_offsets_;
};

/// Apply scope semantics: current_trial replaces the pool with the new
/// trial's epochs, pooled_all appends them.
void update_scope(CovScope scope, EpochPool& pool,
                  const std::vector<EpochFeatures>& trial_epochs);

/// A regularized SPD covariance with its Cholesky factor. Immutable after
/// construction; safe to share across threads.
class CovarianceModel {
 public:
  /// Factorizes immediately; throws NotPositiveDefinite if the Cholesky
  /// factorization fails. No repair is applied here: estimators repair
  /// before constructing, explicit matrices are taken as-is.
  static CovarianceModel from_matrix(Matrix sigma, CovKind kind, CovScope scope,
                                     double shrinkage_intensity = 0.0,
                                     std::optional<int> taper_bandwidth = {});

  int dim() const { return static_cast<int>(sigma_.rows()); }
  const Matrix& sigma() const { return sigma_; }
  CovKind kind() const { return kind_; }
  CovScope scope() const { return scope_; }
  double shrinkage_intensity() const { return gamma_; }
  std::optional<int> taper_bandwidth() const { return taper_bandwidth_; }

  /// x = Sigma^-1 v via the stored factorization.
  Vector solve(const Vector& v) const;
  /// Same, applied to each row of the input.
  Matrix solve_rows(const Matrix& rows) const;

  /// Model with alpha * Sigma (refactorizes). alpha must be > 0.
  CovarianceModel scaled(double alpha) const;

 private:
  CovarianceModel(Matrix sigma, CovKind kind, CovScope scope, double gamma,
                  std::optional<int> taper);

  Matrix sigma_;
  Eigen::LLT<Matrix> llt_;
  CovKind kind_;
  CovScope scope_;
  double gamma_;
  std::optional<int> taper_bandwidth_;
};

inline Vector spd_solve(const CovarianceModel& model, const Vector& v) {
  return model.solve(v);
}
inline Matrix spd_solve_rows(const CovarianceModel& model, const Matrix& rows) {
  return model.solve_rows(rows);
}

/// Biased (divide-by-n) sample covariance of the pooled epochs around the
/// pooled grand mean (or per-trial means when center_per_trial is set).
/// Throws EmptyPool.
Matrix sample_covariance(const EpochPool& pool, bool center_per_trial = false);

/// Ledoit-Wolf shrinkage toward the scaled identity nu*I, nu = trace(S)/D:
///   Sigma_s = (1-gamma) S + gamma nu I
/// with the analytic optimal gamma clipped to [0,1] (or the override).
/// Throws InsufficientData for pools with fewer than two epochs.
CovarianceModel shrinkage_covariance(const EpochPool& pool, CovScope scope,
                                     const EstimatorOptions& options = {});

/// Stationary (block-Toeplitz) covariance: shrinkage first, then the C x C
/// blocks are averaged along each time-lag diagonal and the matrix is
/// reassembled so that equal-lag blocks are bitwise identical.
CovarianceModel block_toeplitz_covariance(const EpochPool& pool, CovScope scope,
                                          const EstimatorOptions& options = {});

namespace detail {
/// Lag-average a D x D matrix given the C x T block structure; used by the
/// estimator and by its structure-restoring repair path.
Matrix lag_average_blocks(const Matrix& sigma, int channels, int samples,
                          std::optional<int> taper_bandwidth);
}  // namespace detail

}  // namespace umm
