#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <utility>
#include <span>
#include <vector>

#include "lastexit/error.hpp"

namespace lastexit {

struct MeanEstimate {
  double mean = 0.0;
  double se = 0.0;
  std::size_t replications = 0;
};

inline MeanEstimate mean_with_se(std::span<const double> xs) {
  detail::require(!xs.empty(), "mean_with_se: empty sample");
  const double n = static_cast<double>(xs.size());
  const double mean = std::accumulate(xs.begin(), xs.end(), 0.0) / n;
  double ss = 0.0;
  for (double x : xs) ss += (x - mean) * (x - mean);
  const double var = xs.size() > 1 ? ss / (n - 1.0) : 0.0;
  return {mean, std::sqrt(var / n), xs.size()};
}

inline double sample_variance(std::span<const double> xs) {
  detail::require(xs.size() >= 2, "sample_variance: need two values");
  const auto est = mean_with_se(xs);
  return est.se * est.se * static_cast<double>(xs.size());
}

// A sorted Monte Carlo sample with quantile and tail queries.
class EmpiricalDistribution {
 public:
  explicit EmpiricalDistribution(std::vector<double> sample) : sorted_(std::move(sample)) {
    detail::require(!sorted_.empty(), "EmpiricalDistribution: empty sample");
    std::sort(sorted_.begin(), sorted_.end());
  }

  std::size_t size() const noexcept { return sorted_.size(); }
  std::span<const double> sorted() const noexcept { return sorted_; }

  // Lower p-quantile with linear interpolation between order statistics.
  double quantile(double p) const {
    detail::require(p >= 0.0 && p <= 1.0, "quantile: level outside [0,1]");
    const double h = p * static_cast<double>(sorted_.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(h));
    const auto hi = std::min(lo + 1, sorted_.size() - 1);
    return sorted_[lo] + (h - static_cast<double>(lo)) * (sorted_[hi] - sorted_[lo]);
  }

  // Standard error of quantile(p) from the binomial spread of the order
  // statistic index: half the width of the +-1 sd index band.
  double quantile_se(double p) const {
    const double n = static_cast<double>(sorted_.size());
    const double d = std::sqrt(n * p * (1.0 - p));
    const double lo = std::clamp(p - d / n, 0.0, 1.0);
    const double hi = std::clamp(p + d / n, 0.0, 1.0);
    return 0.5 * (quantile(hi) - quantile(lo));
  }

  // Fraction of the sample strictly above x.
  double survival(double x) const {
    const auto it = std::upper_bound(sorted_.begin(), sorted_.end(), x);
    return static_cast<double>(sorted_.end() - it) / static_cast<double>(sorted_.size());
  }

  double survival_se(double x) const {
    const double p = survival(x);
    return std::sqrt(p * (1.0 - p) / static_cast<double>(sorted_.size()));
  }

 private:
  std::vector<double> sorted_;
};

// Two-sample Kolmogorov-Smirnov distance sup |F_a - F_b|.
inline double ks_distance(std::vector<double> a, std::vector<double> b) {
  detail::require(!a.empty() && !b.empty(), "ks_distance: empty sample");
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  const double na = static_cast<double>(a.size());
  const double nb = static_cast<double>(b.size());
  std::size_t i = 0, j = 0;
  double d = 0.0;
  while (i < a.size() && j < b.size()) {
    const double x = std::min(a[i], b[j]);
    while (i < a.size() && a[i] <= x) ++i;
    while (j < b.size() && b[j] <= x) ++j;
    d = std::max(d, std::abs(static_cast<double>(i) / na - static_cast<double>(j) / nb));
  }
  return d;
}

// Asymptotic p-value of the two-sample KS statistic (Kolmogorov limit law
// with the usual small-sample correction).
inline double ks_two_sample_pvalue(double d, std::size_t na, std::size_t nb) {
  const double ne = static_cast<double>(na) * static_cast<double>(nb) / static_cast<double>(na + nb);
  const double t = (std::sqrt(ne) + 0.12 + 0.11 / std::sqrt(ne)) * d;
  if (t < 0.2) return 1.0;
  double sum = 0.0;
  for (int k = 1; k <= 100; ++k) {
    const double term = std::exp(-2.0 * k * k * t * t);
    sum += (k % 2 == 1 ? 2.0 : -2.0) * term;
    if (term < 1e-16) break;
  }
  return std::clamp(sum, 0.0, 1.0);
}

// For each replicate the last n in [n_start, horizon] at which a sequential
// estimate misses its target (0 if none). coverage_at(m) uses the
// same replicates for every m, so it is nondecreasing in m.
struct SequentialCoverage {
  std::vector<std::size_t> last_violation;
  std::size_t n_start = 0;
  std::size_t horizon = 0;

  double coverage_at(std::size_t m) const {
    detail::require(m >= n_start, "coverage_at: m below the simulated start");
    const auto ok = std::count_if(last_violation.begin(), last_violation.end(), [m](std::size_t v) { return v < m; });
    return static_cast<double>(ok) / static_cast<double>(last_violation.size());
  }

  double se_at(std::size_t m) const {
    const double p = coverage_at(m);
    return std::sqrt(p * (1.0 - p) / static_cast<double>(last_violation.size()));
  }
};

}  // namespace lastexit
