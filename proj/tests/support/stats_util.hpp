#pragma once

// Small statistics helpers for the test and acceptance suites. Independent of
// the library under test.

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

namespace teststats {

inline double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

namespace detail {

// continued fraction for the regularized incomplete beta (Lentz)
inline double betacf(double a, double b, double x) {
  constexpr int kMaxIter = 300;
  constexpr double kEps = 3e-14;
  constexpr double kFpMin = 1e-300;
  const double qab = a + b;
  const double qap = a + 1.0;
  const double qam = a - 1.0;
  double c = 1.0;
  double d = 1.0 - qab * x / qap;
  if (std::fabs(d) < kFpMin) d = kFpMin;
  d = 1.0 / d;
  double h = d;
  for (int m = 1; m <= kMaxIter; ++m) {
    const int m2 = 2 * m;
    double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
    d = 1.0 + aa * d;
    if (std::fabs(d) < kFpMin) d = kFpMin;
    c = 1.0 + aa / c;
    if (std::fabs(c) < kFpMin) c = kFpMin;
    d = 1.0 / d;
    h *= d * c;
    aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
    d = 1.0 + aa * d;
    if (std::fabs(d) < kFpMin) d = kFpMin;
    c = 1.0 + aa / c;
    if (std::fabs(c) < kFpMin) c = kFpMin;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::fabs(del - 1.0) < kEps) break;
  }
  return h;
}

}  // namespace detail

inline double incomplete_beta(double a, double b, double x) {
  if (x <= 0.0) return 0.0;
  if (x >= 1.0) return 1.0;
  const double bt = std::exp(std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) +
                             a * std::log(x) + b * std::log(1.0 - x));
  if (x < (a + 1.0) / (a + b + 2.0)) return bt * detail::betacf(a, b, x) / a;
  return 1.0 - bt * detail::betacf(b, a, 1.0 - x) / b;
}

/// Student-t CDF via the incomplete beta.
inline double t_cdf(double t, int df) {
  const double x = df / (df + t * t);
  const double half_tail = 0.5 * incomplete_beta(0.5 * df, 0.5, x);
  return t >= 0.0 ? 1.0 - half_tail : half_tail;
}

/// One-sided paired t-test p-value for mean(diffs) > 0.
inline double paired_t_p_greater(const std::vector<double>& diffs) {
  const int n = static_cast<int>(diffs.size());
  if (n < 2) throw std::invalid_argument("need at least two differences");
  double mean = 0.0;
  for (double d : diffs) mean += d;
  mean /= n;
  double var = 0.0;
  for (double d : diffs) var += (d - mean) * (d - mean);
  var /= (n - 1);
  if (var == 0.0) return mean > 0.0 ? 0.0 : 1.0;
  const double t = mean / std::sqrt(var / n);
  return 1.0 - t_cdf(t, n - 1);
}

/// One-sided Mann-Whitney p-value for "xs tend to be smaller than ys"
/// (normal approximation with midranks and tie correction).
inline double mann_whitney_p_less(const std::vector<double>& xs,
                                  const std::vector<double>& ys) {
  const std::size_t n1 = xs.size();
  const std::size_t n2 = ys.size();
  if (n1 == 0 || n2 == 0) throw std::invalid_argument("empty sample");
  struct Obs {
    double v;
    bool is_x;
  };
  std::vector<Obs> all;
  all.reserve(n1 + n2);
  for (double v : xs) all.push_back({v, true});
  for (double v : ys) all.push_back({v, false});
  std::sort(all.begin(), all.end(), [](const Obs& a, const Obs& b) { return a.v < b.v; });

  const double n = static_cast<double>(n1 + n2);
  double rank_sum_x = 0.0;
  double tie_term = 0.0;
  std::size_t i = 0;
  while (i < all.size()) {
    std::size_t j = i;
    while (j < all.size() && all[j].v == all[i].v) ++j;
    const double mid_rank = 0.5 * (static_cast<double>(i + 1) + static_cast<double>(j));
    const double t = static_cast<double>(j - i);
    tie_term += t * t * t - t;
    for (std::size_t k = i; k < j; ++k)
      if (all[k].is_x) rank_sum_x += mid_rank;
    i = j;
  }

  const double u = rank_sum_x - static_cast<double>(n1) * (n1 + 1) / 2.0;
  const double mean_u = static_cast<double>(n1) * static_cast<double>(n2) / 2.0;
  const double var_u = static_cast<double>(n1) * static_cast<double>(n2) / 12.0 *
                       ((n + 1.0) - tie_term / (n * (n - 1.0)));
  if (var_u <= 0.0) return u < mean_u ? 0.0 : 1.0;
  const double z = (u + 0.5 - mean_u) / std::sqrt(var_u);
  return normal_cdf(z);
}

/// Exact binomial CDF P(X <= k) for X ~ Bin(n, p).
inline double binom_cdf(int k, int n, double p) {
  if (k < 0) return 0.0;
  if (k >= n) return 1.0;
  double term = std::pow(1.0 - p, n);
  double sum = term;
  for (int i = 0; i < k; ++i) {
    term *= static_cast<double>(n - i) / (i + 1) * (p / (1.0 - p));
    sum += term;
  }
  return std::min(sum, 1.0);
}

struct Interval {
  double lo = 0.0;
  double hi = 0.0;
  bool contains(double x) const { return x >= lo && x <= hi; }
};

/// Normal-approximation CI for a proportion around p0.
inline Interval binomial_ci(double p0, int n, double z) {
  const double half = z * std::sqrt(p0 * (1.0 - p0) / n);
  return {p0 - half, p0 + half};
}

}  // namespace teststats
