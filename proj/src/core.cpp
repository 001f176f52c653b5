#include "umm/core.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <unordered_set>

namespace umm {

SymbolSet::SymbolSet(std::vector<std::string> symbols) : symbols_(std::move(symbols)) {
  if (symbols_.size() < 2) throw InvalidConfig("symbol set needs at least two symbols");
  std::unordered_set<std::string> seen;
  for (const auto& s : symbols_) {
    if (!seen.insert(s).second) throw InvalidConfig("duplicate symbol: " + s);
  }
}

SymbolSet SymbolSet::with_default_names(int n) {
  static const char* kAlphabet = "ABCDEFGHIJKLMNOPQRSTUVWXYZ0123456789";
  std::vector<std::string> names;
  names.reserve(static_cast<std::size_t>(n));
  if (n >= 2 && n <= 36) {
    for (int i = 0; i < n; ++i) names.emplace_back(1, kAlphabet[i]);
  } else {
    for (int i = 0; i < n; ++i) {
      char buf[16];
      std::snprintf(buf, sizeof(buf), "S%03d", i);
      names.emplace_back(buf);
    }
  }
  return SymbolSet(std::move(names));
}

int SymbolSet::index_of(const std::string& name) const {
  for (int i = 0; i < size(); ++i)
    if (symbols_[static_cast<std::size_t>(i)] == name) return i;
  throw SymbolUnknown("symbol not in set: " + name);
}

bool EpochFeatures::valid() const {
  return data.rows() >= 1 && data.cols() >= 1 && data.allFinite();
}

std::vector<int> TrialRecord::target_counts() const {
  std::vector<int> counts(static_cast<std::size_t>(n_symbols), 0);
  for (const auto& ev : events)
    for (int s : ev.highlighted)
      if (s >= 0 && s < n_symbols) ++counts[static_cast<std::size_t>(s)];
  return counts;
}

bool TrialRecord::balanced_code() const {
  const auto counts = target_counts();
  if (counts.empty()) return false;
  return std::all_of(counts.begin(), counts.end(),
                     [&](int c) { return c == counts.front(); });
}

void TrialRecord::validate() const {
  if (n_symbols < 2) throw InvalidConfig("trial needs at least two symbols");
  if (epochs.empty()) throw ShapeMismatch("trial has no epochs");
  if (epochs.size() != events.size())
    throw ShapeMismatch("trial has " + std::to_string(epochs.size()) + " epochs but " +
                        std::to_string(events.size()) + " events");
  const int c = epochs.front().channels();
  const int t = epochs.front().samples();
  for (const auto& e : epochs) {
    if (e.channels() != c || e.samples() != t)
      throw ShapeMismatch("epoch dimensions differ within trial");
    if (!e.valid()) throw ShapeMismatch("epoch contains non-finite values");
  }
  for (const auto& ev : events) {
    if (ev.highlighted.empty()) throw ShapeMismatch("event with empty highlight set");
    for (int s : ev.highlighted)
      if (s < 0 || s >= n_symbols)
        throw ShapeMismatch("event references symbol " + std::to_string(s) +
                            " outside [0," + std::to_string(n_symbols) + ")");
  }
  if (true_symbol && (*true_symbol < 0 || *true_symbol >= n_symbols))
    throw ShapeMismatch("true_symbol outside symbol range");
}

HypothesisPartition partition_epochs(const TrialRecord& trial, int symbol) {
  if (symbol < 0 || symbol >= trial.n_symbols)
    throw SymbolUnknown("symbol index " + std::to_string(symbol) + " outside [0," +
                        std::to_string(trial.n_symbols) + ")");
  HypothesisPartition p;
  p.symbol = symbol;
  const int n = trial.n_epochs();
  p.target_indices.reserve(static_cast<std::size_t>(n));
  p.nontarget_indices.reserve(static_cast<std::size_t>(n));
  for (int k = 0; k < n; ++k) {
    if (trial.events[static_cast<std::size_t>(k)].contains(symbol))
      p.target_indices.push_back(k);
    else
      p.nontarget_indices.push_back(k);
  }
  if (p.target_indices.empty() || p.nontarget_indices.empty())
    throw DegeneratePartition("symbol " + std::to_string(symbol) +
                              " is highlighted in every event or in none");
  return p;
}

namespace {

Vector mean_of(const TrialRecord& trial, const std::vector<int>& indices) {
  Vector m = Vector::Zero(trial.epochs.front().dim());
  for (int k : indices) m += trial.epochs[static_cast<std::size_t>(k)].flattened();
  m /= static_cast<double>(indices.size());
  return m;
}

}  // namespace

std::pair<Vector, Vector> hypothesis_class_means(const TrialRecord& trial,
                                                 const HypothesisPartition& partition) {
  if (partition.target_indices.empty() || partition.nontarget_indices.empty())
    throw DegeneratePartition("partition has an empty side");
  return {mean_of(trial, partition.target_indices),
          mean_of(trial, partition.nontarget_indices)};
}

Vector hypothesis_mean_difference(const TrialRecord& trial,
                                  const HypothesisPartition& partition) {
  auto [pos, neg] = hypothesis_class_means(trial, partition);
  return pos - neg;
}

unsigned __int128 count_unconstrained_assignments(int n_e, int n_e_plus) {
  if (n_e_plus <= 0 || n_e_plus >= n_e)
    throw ArgumentOutOfRange("need 0 < N_e+ < N_e, got N_e=" + std::to_string(n_e) +
                             " N_e+=" + std::to_string(n_e_plus));
  const int k = std::min(n_e_plus, n_e - n_e_plus);
  constexpr unsigned __int128 kMax = ~static_cast<unsigned __int128>(0);
  unsigned __int128 result = 1;
  // result stays exact at every step: after i iterations it equals C(n_e-k+i, i)
  for (int i = 1; i <= k; ++i) {
    const auto factor = static_cast<unsigned __int128>(n_e - k + i);
    if (result > kMax / factor)
      throw ArgumentOutOfRange("binomial coefficient exceeds 128 bits");
    result = result * factor / static_cast<unsigned __int128>(i);
  }
  return result;
}

std::string count_to_string(unsigned __int128 value) {
  if (value == 0) return "0";
  std::string digits;
  while (value > 0) {
    digits.push_back(static_cast<char>('0' + static_cast<int>(value % 10)));
    value /= 10;
  }
  std::reverse(digits.begin(), digits.end());
  return digits;
}

}  // namespace umm
