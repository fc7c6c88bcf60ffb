#pragma once

// Distribution of sup_{[0,1]} |B| for Brownian motion B, tail bounds for
// suprema of the Gaussian limit processes, and Monte Carlo quantiles of the
// Brownian-sheet supremum.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numbers>
#include <string>
#include <string_view>
#include <vector>

#include "lastexit/error.hpp"
#include "lastexit/gp_sim.hpp"
#include "lastexit/rng.hpp"
#include "lastexit/stats.hpp"

namespace lastexit {

namespace detail {

inline double normal_upper_tail(double x) { return 0.5 * std::erfc(x / std::numbers::sqrt2); }

// Sum over k >= 1 of the paired terms k and -k of the alternating series,
// (-1)^k 2 [Q((2k-1)l) - Q((2k+1)l)] with Q the standard normal upper tail.
// The k = 0 term is handled by the caller with erf/erfc.
inline double ks_series_tail(double lambda) {
  double sum = 0.0;
  for (int k = 1; k < 100000; ++k) {
    const double term = 2.0 * (normal_upper_tail((2 * k - 1) * lambda) - normal_upper_tail((2 * k + 1) * lambda));
    sum += (k % 2 == 1) ? -term : term;
    if (k >= 2 && std::abs(term) < 1e-13) break;
  }
  return sum;
}

// Below this the CDF is under 1e-200 and the alternating sum is pure
// cancellation noise.
inline constexpr double kKsNegligibleLambda = 0.05;

}  // namespace detail

// C(l) = P(sup_{[0,1]} |B| <= l) = sum_k (-1)^k [Phi((2k+1)l) - Phi((2k-1)l)].
inline double ks_abs_sup_cdf(double lambda) {
  detail::require(lambda >= 0.0, "ks_abs_sup_cdf: lambda must be non-negative");
  if (lambda < detail::kKsNegligibleLambda) return 0.0;
  if (std::isinf(lambda)) return 1.0;
  return std::clamp(std::erf(lambda / std::numbers::sqrt2) + detail::ks_series_tail(lambda), 0.0, 1.0);
}

// S(l) = 1 - C(l), summed directly so the far tail keeps its relative precision.
inline double ks_abs_sup_survival(double lambda) {
  detail::require(lambda >= 0.0, "ks_abs_sup_survival: lambda must be non-negative");
  if (lambda < detail::kKsNegligibleLambda) return 1.0;
  if (std::isinf(lambda)) return 0.0;
  return std::clamp(std::erfc(lambda / std::numbers::sqrt2) - detail::ks_series_tail(lambda), 0.0, 1.0);
}

// The l with S(l) = p, by bisection on [1e-6, 10].
inline double ks_abs_sup_survival_inverse(double p) {
  if (!(p > 0.0 && p < 1.0)) throw InvalidArgument("ks_abs_sup_survival_inverse: p must lie in (0,1)");
  double lo = 1e-6, hi = 10.0;
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    const double s = ks_abs_sup_survival(mid);
    if (std::abs(s - p) < 1e-12 || hi - lo < 1e-15) return mid;
    (s > p ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

// How a level alpha is turned into the pair of sup|B| quantiles that bracket
// the sheet-supremum quantile.
//   alpha_sandwich:   [S^-1(alpha), S^-1(alpha/2)]
//   literal_sqrt:     [S^-1(sqrt(alpha)), S^-1(sqrt(alpha)/2)]
enum class SizingConvention { alpha_sandwich, literal_sqrt };

struct SandwichQuantiles {
  double lower = 0.0;
  double upper = 0.0;
};

inline SandwichQuantiles sandwich_quantiles(double alpha, SizingConvention convention = SizingConvention::alpha_sandwich) {
  detail::require(alpha > 0.0 && alpha < 1.0, "sandwich_quantiles: alpha must lie in (0,1)");
  const double a = convention == SizingConvention::literal_sqrt ? std::sqrt(alpha) : alpha;
  return {ks_abs_sup_survival_inverse(a), ks_abs_sup_survival_inverse(a / 2.0)};
}

// sigma^2 b^2 / eps^2, the real-valued sample size behind every sizing rule.
inline double sizing_quantity(double sigma2, double eps, double b) {
  detail::require(sigma2 >= 0.0 && eps > 0.0 && b > 0.0, "sizing_quantity: invalid inputs");
  return sigma2 * b * b / (eps * eps);
}

// ---- Tail bounds -----------------------------------------------------------

enum class BoundMethod { reflection_sandwich, borell, adler2d };

inline std::string_view to_string(BoundMethod m) {
  switch (m) {
    case BoundMethod::reflection_sandwich: return "reflection_sandwich";
    case BoundMethod::borell: return "borell";
    case BoundMethod::adler2d: return "adler2d";
  }
  return "unknown";
}

struct TailBound {
  double lambda = 0.0;
  double lower = 0.0;
  double upper = 1.0;
  BoundMethod method = BoundMethod::reflection_sandwich;
};

// P(sup|Z| >= sqrt(lambda)) < 2 exp(-lambda / (8 E sup|Z|^2)).
inline double borell_tail_bound(double lambda, double second_moment) {
  detail::require(lambda > 0.0 && second_moment > 0.0, "borell_tail_bound: inputs must be positive");
  return std::min(1.0, 2.0 * std::exp(-lambda / (8.0 * second_moment)));
}

// 4 sum_{k>=1} (8 k^2 l - 2) exp(-2 k^2 l): bound on the tail of the squared
// supremum of a Kiefer process over (0,1] x R^2.
inline double adler_2d_bound(double lambda) {
  detail::require(lambda > 0.0, "adler_2d_bound: lambda must be positive");
  double sum = 0.0;
  for (int k = 1; k < 1000000; ++k) {
    const double k2l = static_cast<double>(k) * k * lambda;
    const double term = (8.0 * k2l - 2.0) * std::exp(-2.0 * k2l);
    sum += term;
    // Terms decrease in magnitude once 2 k^2 l > 2.
    if (k2l > 1.0 && std::abs(term) < 1e-14) break;
  }
  return std::clamp(4.0 * sum, 0.0, 1.0);
}

// P(sup|B| > l) <= P(sup|S| > l) <= 2 P(sup|B| > l) for the sheet S.
inline TailBound reflection_sandwich(double lambda) {
  const double s = ks_abs_sup_survival(lambda);
  return {lambda, s, std::min(1.0, 2.0 * s), BoundMethod::reflection_sandwich};
}

// ---- Monte Carlo -----------------------------------------------------------

struct QuantileEstimate {
  double level = 0.0;  // upper-tail probability alpha
  double point = 0.0;
  double mc_se = 0.0;
  std::size_t replications = 0;
  std::size_t grid_resolution = 0;
};

// One draw of `sampler(engine)` per replicate, replicate r using the
// engine derived from (seed, r).
template <typename Sampler>
std::vector<double> simulate_replicates(const Sampler& sampler, std::size_t replications, SeedSpec seed,
                                        unsigned threads = 0) {
  std::vector<double> out(replications);
  parallel_for(replications, threads, [&](std::size_t r) {
    Engine engine = make_engine(seed, r);
    out[r] = sampler(engine);
  });
  return out;
}

template <typename Sampler>
MeanEstimate estimate_sup_second_moment(const Sampler& sampler, std::size_t replications, SeedSpec seed,
                                        unsigned threads = 0) {
  detail::require(replications >= 1000, "estimate_sup_second_moment: need at least 1000 replications");
  auto sups = simulate_replicates(sampler, replications, seed, threads);
  for (double& x : sups) x *= x;
  return mean_with_se(sups);
}

inline QuantileEstimate upper_quantile(const EmpiricalDistribution& dist, double alpha, std::size_t grid_resolution) {
  detail::require(alpha > 0.0 && alpha < 1.0, "upper_quantile: alpha must lie in (0,1)");
  return {alpha, dist.quantile(1.0 - alpha), dist.quantile_se(1.0 - alpha), dist.size(), grid_resolution};
}

inline EmpiricalDistribution simulate_sheet_sups(const Grid1D& s_grid, const Grid1D& t_grid, std::size_t replications,
                                                 SeedSpec seed, unsigned threads = 0) {
  detail::require(replications >= 1000, "sheet supremum simulation: need at least 1000 replications");
  return EmpiricalDistribution(simulate_replicates(sheet_sup_sampler(s_grid, t_grid), replications, seed, threads));
}

// Upper-alpha quantile of sup|S| over the grid.
inline QuantileEstimate sheet_sup_quantile(double alpha, const Grid1D& s_grid, const Grid1D& t_grid,
                                           std::size_t replications, SeedSpec seed, unsigned threads = 0) {
  detail::require(alpha > 0.0 && alpha < 1.0, "sheet_sup_quantile: alpha must lie in (0,1)");
  const auto dist = simulate_sheet_sups(s_grid, t_grid, replications, seed, threads);
  return upper_quantile(dist, alpha, std::min(s_grid.size(), t_grid.size()));
}

// Expected shortfall of the grid maximum of Brownian motion on n equal cells
// against the continuous maximum, -zeta(1/2)/sqrt(2 pi) * sqrt(1/n).
inline double grid_bias_allowance(std::size_t cells) {
  detail::require(cells > 0, "grid_bias_allowance: no cells");
  return 0.5825971579390106 / std::sqrt(static_cast<double>(cells));
}

struct SandwichCheck {
  double lower = 0.0;
  double upper = 0.0;
  double tolerance = 0.0;
  bool holds = false;
};

// Is S^-1(alpha) <= b + tol and b <= S^-1(alpha/2) + tol, with
// tol = 3 mc_se + grid_bias_allowance?
inline SandwichCheck check_quantile_sandwich(const QuantileEstimate& q,
                                             SizingConvention convention = SizingConvention::alpha_sandwich) {
  const auto bounds = sandwich_quantiles(q.level, convention);
  const double tol = 3.0 * q.mc_se + grid_bias_allowance(q.grid_resolution);
  return {bounds.lower, bounds.upper, tol, bounds.lower <= q.point + tol && q.point <= bounds.upper + tol};
}

// Median sup|phi Z|^2 / median sup|Z|^2. Both samplers see the same stream
// for a given replicate.
template <typename PhiSampler, typename BaseSampler>
double variance_measure_sigma2(const PhiSampler& sampler_phi, const BaseSampler& sampler_base,
                               std::size_t replications, SeedSpec seed, unsigned threads = 0) {
  detail::require(replications >= 100, "variance_measure_sigma2: need at least 100 replications");
  std::vector<double> phi(replications), base(replications);
  parallel_for(replications, threads, [&](std::size_t r) {
    Engine e1 = make_engine(seed, r);
    Engine e2 = make_engine(seed, r);
    const double a = sampler_phi(e1);
    const double b = sampler_base(e2);
    phi[r] = a * a;
    base[r] = b * b;
  });
  const double denominator = EmpiricalDistribution(std::move(base)).quantile(0.5);
  if (!(denominator > 0.0)) throw NumericError("variance_measure_sigma2: base median is zero");
  return EmpiricalDistribution(std::move(phi)).quantile(0.5) / denominator;
}

}  // namespace lastexit
