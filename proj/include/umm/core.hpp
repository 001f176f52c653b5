#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "umm/errors.hpp"

namespace umm {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Ordered set of selectable symbols (e.g. the letters of a speller matrix).
class SymbolSet {
 public:
  /// Throws InvalidConfig on duplicates or fewer than two symbols.
  explicit SymbolSet(std::vector<std::string> symbols);

  /// Default naming: A..Z0..9 for n <= 36, otherwise S000, S001, ...
  static SymbolSet with_default_names(int n);

  int size() const { return static_cast<int>(symbols_.size()); }
  const std::string& name(int i) const { return symbols_.at(static_cast<std::size_t>(i)); }
  const std::vector<std::string>& names() const { return symbols_; }

  /// Index of a symbol name; throws SymbolUnknown.
  int index_of(const std::string& name) const;

 private:
  std::vector<std::string> symbols_;
};

/// One stimulus epoch: a channels x samples feature matrix.
///
/// The flattened view is time-major: element t*C + c holds channel c at time
/// t, so a D x D covariance over flattened epochs decomposes into C x C
/// spatial blocks indexed by time pairs.
struct EpochFeatures {
  Matrix data;  // C x T

  EpochFeatures() = default;
  explicit EpochFeatures(Matrix d) : data(std::move(d)) {}

  int channels() const { return static_cast<int>(data.rows()); }
  int samples() const { return static_cast<int>(data.cols()); }
  int dim() const { return static_cast<int>(data.size()); }

  /// Time-major flattening. With column-major storage this is a plain copy
  /// of the underlying buffer, column t first, channels fastest.
  Vector flattened() const {
    return Eigen::Map<const Vector>(data.data(), data.size());
  }

  /// All entries finite and C, T >= 1.
  bool valid() const;
};

/// One highlighting event: the subset of symbols flashed at an epoch.
struct StimulusEvent {
  std::vector<int> highlighted;  // symbol indices, non-empty

  bool contains(int symbol) const {
    for (int s : highlighted)
      if (s == symbol) return true;
    return false;
  }
};

/// The epochs and events used to select one symbol. true_symbol is carried
/// for evaluation only; decoding never reads it.
struct TrialRecord {
  std::vector<EpochFeatures> epochs;
  std::vector<StimulusEvent> events;  // aligned 1:1 with epochs
  std::optional<int> true_symbol;
  int n_symbols = 0;

  int n_epochs() const { return static_cast<int>(epochs.size()); }

  /// Number of events each symbol appears in.
  std::vector<int> target_counts() const;

  /// True when every symbol appears in the same number of events.
  bool balanced_code() const;

  /// Structural checks (alignment, symbol ranges, finite features).
  /// Throws ShapeMismatch / InvalidConfig on violation.
  void validate() const;
};

/// Split of a trial's epoch indices under the hypothesis that `symbol` is
/// the attended one: epochs whose event contains it vs. the rest.
struct HypothesisPartition {
  int symbol = -1;
  std::vector<int> target_indices;
  std::vector<int> nontarget_indices;
};

/// Partition the trial's epochs by membership of `symbol` in each event.
/// Throws SymbolUnknown for an out-of-range symbol and DegeneratePartition
/// when either side would be empty.
HypothesisPartition partition_epochs(const TrialRecord& trial, int symbol);

/// Per-class means of the flattened epochs: (target mean, non-target mean).
std::pair<Vector, Vector> hypothesis_class_means(const TrialRecord& trial,
                                                 const HypothesisPartition& partition);

/// Difference between the hypothetical class means.
Vector hypothesis_mean_difference(const TrialRecord& trial,
                                  const HypothesisPartition& partition);

/// Number of unconstrained target/non-target assignments, binomial(N_e, N_e+).
/// Exact integer arithmetic; throws ArgumentOutOfRange on invalid input or
/// when the value exceeds 128 bits. Informational only: decoding enumerates
/// |S| hypotheses, never this count.
unsigned __int128 count_unconstrained_assignments(int n_e, int n_e_plus);

/// Decimal rendering of a 128-bit count.
std::string count_to_string(unsigned __int128 value);

}  // namespace umm
