#include "umm/covariance.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <utility>

namespace umm {

std::string to_string(CovKind k) {
  return k == CovKind::shrinkage ? "shrinkage" : "toeplitz";
}

std::string to_string(CovScope s) {
  return s == CovScope::current_trial ? "trial" : "all";
}

EpochPool::EpochPool(int channels, int samples) : channels_(channels), samples_(samples) {
  if (channels < 1 || samples < 1)
    throw InvalidConfig("epoch pool needs channels >= 1 and samples >= 1");
}

void EpochPool::add_trial(const std::vector<EpochFeatures>& epochs) {
  if (epochs.empty()) throw ShapeMismatch("cannot add an empty trial to the pool");
  trial_offsets_.push_back(size());
  epochs_.reserve(epochs_.size() + epochs.size());
  for (const auto& e : epochs) {
    if (e.channels() != channels_ || e.samples() != samples_)
      throw ShapeMismatch("epoch shape " + std::to_string(e.channels()) + "x" +
                          std::to_string(e.samples()) + " does not match pool " +
                          std::to_string(channels_) + "x" + std::to_string(samples_));
    epochs_.push_back(e.flattened());
  }
}

void EpochPool::replace_trial(const std::vector<EpochFeatures>& epochs) {
  clear();
  add_trial(epochs);
}

void EpochPool::clear() {
  epochs_.clear();
  trial_offsets_.clear();
}

void update_scope(CovScope scope, EpochPool& pool,
                  const std::vector<EpochFeatures>& trial_epochs) {
  if (scope == CovScope::current_trial)
    pool.replace_trial(trial_epochs);
  else
    pool.add_trial(trial_epochs);
}

namespace {

// Centered data matrix, one epoch per column.
Matrix centered_data(const EpochPool& pool, bool center_per_trial) {
  const int n = pool.size();
  const int d = pool.dim();
  Matrix x(d, n);
  for (int k = 0; k < n; ++k) x.col(k) = pool.epochs()[static_cast<std::size_t>(k)];
  if (center_per_trial && pool.trial_count() > 0) {
    const auto& offsets = pool.trial_offsets();
    for (std::size_t t = 0; t < offsets.size(); ++t) {
      const int begin = offsets[t];
      const int end = (t + 1 < offsets.size()) ? offsets[t + 1] : n;
      auto block = x.middleCols(begin, end - begin);
      block.colwise() -= block.rowwise().mean().eval();
    }
  } else {
    x.colwise() -= x.rowwise().mean().eval();
  }
  return x;
}

Matrix covariance_of_centered(const Matrix& xc) {
  const int d = static_cast<int>(xc.rows());
  const auto n = static_cast<double>(xc.cols());
  Matrix s = Matrix::Zero(d, d);
  s.selfadjointView<Eigen::Lower>().rankUpdate(xc, 1.0 / n);
  s.triangularView<Eigen::StrictlyUpper>() = s.transpose();
  return s;
}

struct ShrinkageResult {
  Matrix sigma;
  double gamma = 0.0;
};

// Ledoit-Wolf analytic intensity toward nu*I with nu = trace(S)/D.
ShrinkageResult shrinkage_matrix(const EpochPool& pool, const EstimatorOptions& options) {
  if (pool.size() == 0) throw EmptyPool("covariance estimation on an empty pool");
  if (pool.size() < 2)
    throw InsufficientData("shrinkage estimation needs at least two epochs");

  const Matrix xc = centered_data(pool, options.center_per_trial);
  const Matrix s = covariance_of_centered(xc);
  const int d = static_cast<int>(s.rows());
  const auto n = static_cast<double>(xc.cols());
  const double nu = s.trace() / d;

  double gamma;
  if (options.gamma_override) {
    gamma = std::clamp(*options.gamma_override, 0.0, 1.0);
  } else {
    // dispersion of S around the scaled identity target
    Matrix dev = s;
    dev.diagonal().array() -= nu;
    const double d2 = dev.squaredNorm() / d;
    // dispersion of the per-epoch outer products around S:
    //   sum_k ||x_k x_k' - S||_F^2 = sum_k ||x_k||^4 - n ||S||_F^2
    const double sum4 = xc.colwise().squaredNorm().array().square().sum();
    const double b2bar = (sum4 - n * s.squaredNorm()) / (n * n * d);
    const double b2 = std::min(std::max(b2bar, 0.0), d2);
    gamma = d2 > 0.0 ? b2 / d2 : 1.0;
    gamma = std::clamp(gamma, 0.0, 1.0);
  }

  Matrix sigma = (1.0 - gamma) * s;
  sigma.diagonal().array() += gamma * nu;
  return {std::move(sigma), gamma};
}

double repair_epsilon(const Matrix& a) {
  return 1e-10 * a.trace() / static_cast<double>(a.rows());
}

bool llt_ok(const Matrix& a, Eigen::LLT<Matrix>& llt) {
  llt.compute(a);
  return llt.info() == Eigen::Success;
}

// Eigenvalue clip at eps; only called when the Cholesky attempt failed.
Matrix eigenvalue_clip(const Matrix& a, double eps) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(a);
  Vector vals = es.eigenvalues().cwiseMax(eps);
  return es.eigenvectors() * vals.asDiagonal() * es.eigenvectors().transpose();
}

}  // namespace

Matrix sample_covariance(const EpochPool& pool, bool center_per_trial) {
  if (pool.size() == 0) throw EmptyPool("sample covariance on an empty pool");
  return covariance_of_centered(centered_data(pool, center_per_trial));
}

CovarianceModel CovarianceModel::from_matrix(Matrix sigma, CovKind kind, CovScope scope,
                                             double shrinkage_intensity,
                                             std::optional<int> taper_bandwidth) {
  return CovarianceModel(std::move(sigma), kind, scope, shrinkage_intensity,
                         taper_bandwidth);
}

CovarianceModel::CovarianceModel(Matrix sigma, CovKind kind, CovScope scope, double gamma,
                                 std::optional<int> taper)
    : sigma_(std::move(sigma)), kind_(kind), scope_(scope), gamma_(gamma),
      taper_bandwidth_(taper) {
  if (sigma_.rows() != sigma_.cols())
    throw ShapeMismatch("covariance matrix must be square");
  if (!sigma_.isApprox(sigma_.transpose(), 1e-10))
    throw ShapeMismatch("covariance matrix is not symmetric");
  llt_.compute(sigma_);
  if (llt_.info() != Eigen::Success)
    throw NotPositiveDefinite("Cholesky factorization failed");
}

Vector CovarianceModel::solve(const Vector& v) const {
  if (v.size() != sigma_.rows())
    throw ShapeMismatch("vector length " + std::to_string(v.size()) +
                        " does not match covariance dimension " +
                        std::to_string(sigma_.rows()));
  return llt_.solve(v);
}

Matrix CovarianceModel::solve_rows(const Matrix& rows) const {
  if (rows.cols() != sigma_.rows())
    throw ShapeMismatch("row length does not match covariance dimension");
  return llt_.solve(rows.transpose()).transpose();
}

CovarianceModel CovarianceModel::scaled(double alpha) const {
  if (!(alpha > 0.0)) throw ArgumentOutOfRange("scale must be positive");
  return CovarianceModel(alpha * sigma_, kind_, scope_, gamma_, taper_bandwidth_);
}

CovarianceModel shrinkage_covariance(const EpochPool& pool, CovScope scope,
                                     const EstimatorOptions& options) {
  auto [sigma, gamma] = shrinkage_matrix(pool, options);
  Eigen::LLT<Matrix> llt;
  if (!llt_ok(sigma, llt)) sigma = eigenvalue_clip(sigma, repair_epsilon(sigma));
  return CovarianceModel::from_matrix(std::move(sigma), CovKind::shrinkage, scope, gamma,
                                      {});
}

namespace detail {

Matrix lag_average_blocks(const Matrix& sigma, int channels, int samples,
                          std::optional<int> taper_bandwidth) {
  const int c = channels;
  const int t = samples;
  if (sigma.rows() != static_cast<Eigen::Index>(c) * t)
    throw ShapeMismatch("matrix dimension is not channels * samples");

  // W[l]: symmetrized average of all blocks at time lag l
  std::vector<Matrix> w(static_cast<std::size_t>(t));
  for (int lag = 0; lag < t; ++lag) {
    Matrix acc = Matrix::Zero(c, c);
    for (int i = lag; i < t; ++i) {
      const int j = i - lag;
      acc += sigma.block(i * c, j * c, c, c) + sigma.block(j * c, i * c, c, c).transpose();
    }
    acc /= 2.0 * (t - lag);
    if (taper_bandwidth && lag > 0) {
      const double weight =
          std::max(0.0, 1.0 - static_cast<double>(lag) / *taper_bandwidth);
      acc *= weight;
    }
    w[static_cast<std::size_t>(lag)] = std::move(acc);
  }

  Matrix out(sigma.rows(), sigma.cols());
  for (int i = 0; i < t; ++i) {
    for (int j = 0; j <= i; ++j) {
      out.block(i * c, j * c, c, c) = w[static_cast<std::size_t>(i - j)];
      if (i != j)
        out.block(j * c, i * c, c, c) = w[static_cast<std::size_t>(i - j)].transpose();
    }
  }
  return out;
}

}  // namespace detail

CovarianceModel block_toeplitz_covariance(const EpochPool& pool, CovScope scope,
                                          const EstimatorOptions& options) {
  auto [sigma_s, gamma] = shrinkage_matrix(pool, options);
  Matrix sigma =
      detail::lag_average_blocks(sigma_s, pool.channels(), pool.samples(),
                                 options.taper_bandwidth);

  Eigen::LLT<Matrix> llt;
  if (!llt_ok(sigma, llt)) {
    // Rare: lag averaging or tapering pushed an eigenvalue below zero. Clip,
    // re-impose the block structure (taper is already baked in), and as a
    // last resort shift the diagonal, which preserves the structure exactly.
    const double eps = repair_epsilon(sigma);
    sigma = detail::lag_average_blocks(eigenvalue_clip(sigma, eps), pool.channels(),
                                       pool.samples(), {});
    if (!llt_ok(sigma, llt)) {
      Eigen::SelfAdjointEigenSolver<Matrix> es(sigma, Eigen::EigenvaluesOnly);
      const double min_eig = es.eigenvalues().minCoeff();
      sigma.diagonal().array() += eps - std::min(min_eig, 0.0);
    }
  }
  return CovarianceModel::from_matrix(std::move(sigma), CovKind::block_toeplitz, scope,
                                      gamma, options.taper_bandwidth);
}

}  // namespace umm
