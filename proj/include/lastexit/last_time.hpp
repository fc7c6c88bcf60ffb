#pragma once

// Tail statistics of an error trajectory (last exceedance N, number of
// exceedances Q, band ratio R(a,b), mean exceedance M), their limit
// variables simulated from Gaussian paths, and the relative efficiency
// measure built from them.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "lastexit/error.hpp"
#include "lastexit/gp_sim.hpp"
#include "lastexit/grid.hpp"
#include "lastexit/rng.hpp"
#include "lastexit/stats.hpp"

namespace lastexit {

// errors[n - 1] is the error norm after n observations.
class ErrorTrajectory {
 public:
  explicit ErrorTrajectory(std::vector<double> errors, std::string norm_label = "abs")
      : errors_(std::move(errors)), norm_label_(std::move(norm_label)) {
    detail::require(!errors_.empty(), "ErrorTrajectory: horizon must be at least 1");
    for (std::size_t i = 0; i < errors_.size(); ++i)
      if (!std::isfinite(errors_[i]) || errors_[i] < 0.0)
        throw InvalidArgument("ErrorTrajectory: error at n=" + std::to_string(i + 1) + " is negative or not finite");
  }

  std::size_t horizon() const noexcept { return errors_.size(); }
  double at(std::size_t n) const { return errors_.at(n - 1); }
  std::span<const double> errors() const noexcept { return errors_; }
  const std::string& norm_label() const noexcept { return norm_label_; }

  friend bool operator==(const ErrorTrajectory&, const ErrorTrajectory&) = default;

 private:
  std::vector<double> errors_;
  std::string norm_label_;
};

// N uses "error > eps"; Q, R and M use "error >= eps".
enum class Crossing { strict, inclusive };

namespace detail {
inline bool crosses(double error, double eps, Crossing c) { return c == Crossing::strict ? error > eps : error >= eps; }
inline void require_eps(double eps) { require(eps > 0.0, "epsilon must be positive"); }
}  // namespace detail

struct LastExceedance {
  std::size_t n_eps = 0;
  bool censored = false;  // the exceedance touches the horizon
};

inline LastExceedance last_exceed(const ErrorTrajectory& traj, double eps, Crossing crossing = Crossing::strict) {
  detail::require_eps(eps);
  const auto errors = traj.errors();
  for (std::size_t n = errors.size(); n > 0; --n)
    if (detail::crosses(errors[n - 1], eps, crossing)) return {n, n == errors.size()};
  return {0, false};
}

inline std::size_t count_exceed(const ErrorTrajectory& traj, double eps) {
  detail::require_eps(eps);
  const auto errors = traj.errors();
  return static_cast<std::size_t>(std::count_if(errors.begin(), errors.end(), [eps](double e) { return e >= eps; }));
}

// #{a eps <= e <= b eps} / #{e >= eps}; nullopt when nothing reaches eps.
inline std::optional<double> band_ratio(const ErrorTrajectory& traj, double eps, double a, double b) {
  detail::require_eps(eps);
  detail::require(a >= 1.0 && b > a, "band_ratio: need 1 <= a < b");
  const std::size_t denominator = count_exceed(traj, eps);
  if (denominator == 0) return std::nullopt;
  std::size_t numerator = 0;
  for (double e : traj.errors())
    if (e >= a * eps && e <= b * eps) ++numerator;
  return static_cast<double>(numerator) / static_cast<double>(denominator);
}

inline std::optional<double> mean_exceed(const ErrorTrajectory& traj, double eps) {
  detail::require_eps(eps);
  double sum = 0.0;
  std::size_t count = 0;
  for (double e : traj.errors())
    if (e >= eps) {
      sum += e;
      ++count;
    }
  if (count == 0) return std::nullopt;
  return sum / static_cast<double>(count);
}

struct TailStats {
  double epsilon = 0.0;
  std::size_t n_eps = 0;
  std::size_t q_eps = 0;
  std::optional<double> r_eps;
  std::optional<double> m_eps;
  bool censored = false;
};

inline TailStats tail_stats(const ErrorTrajectory& traj, double eps, double a = 1.0,
                            double b = std::numeric_limits<double>::infinity()) {
  const auto last = last_exceed(traj, eps);
  return {eps, last.n_eps, count_exceed(traj, eps), band_ratio(traj, eps, a, b), mean_exceed(traj, eps),
          last.censored};
}

struct ScaledStats {
  double n_scaled = 0.0;                // eps^2 N
  double q_scaled = 0.0;                // eps^2 Q
  std::optional<double> m_scaled;       // M / eps
  bool censored = false;
};

inline ScaledStats scaled_stats(const TailStats& t) {
  detail::require_eps(t.epsilon);
  const double e2 = t.epsilon * t.epsilon;
  std::optional<double> m;
  if (t.m_eps) m = *t.m_eps / t.epsilon;
  return {e2 * static_cast<double>(t.n_eps), e2 * static_cast<double>(t.q_eps), m, t.censored};
}

inline ScaledStats scaled_stats(const ErrorTrajectory& traj, double eps) { return scaled_stats(tail_stats(traj, eps)); }

// Pointwise maximum of two error sequences of equal horizon.
inline ErrorTrajectory combine_max(const ErrorTrajectory& first, const ErrorTrajectory& second) {
  detail::require(first.horizon() == second.horizon(), "combine_max: horizons differ");
  std::vector<double> out(first.horizon());
  std::transform(first.errors().begin(), first.errors().end(), second.errors().begin(), out.begin(),
                 [](double x, double y) { return std::max(x, y); });
  return ErrorTrajectory(std::move(out), "max(" + first.norm_label() + "," + second.norm_label() + ")");
}

// (median1 / norm_med1) / (median2 / norm_med2). With equal normalisers this
// is the plain ratio of medians of the eps^2 N limits.
inline double asymptotic_relative_efficiency(double median1, double median2, double norm_med1 = 1.0,
                                             double norm_med2 = 1.0) {
  detail::require(median1 > 0.0 && median2 > 0.0 && norm_med1 > 0.0 && norm_med2 > 0.0,
                  "asymptotic_relative_efficiency: inputs must be positive");
  return (median1 / norm_med1) / (median2 / norm_med2);
}

// ---- Limit variables -------------------------------------------------------

struct Band {
  double a = 1.0;
  double b = std::numeric_limits<double>::infinity();
};

struct LimitVariables {
  double n = 0.0;                        // last s with norm > 1
  double q = 0.0;                        // integral of 1{norm >= 1}
  std::vector<std::optional<double>> r;  // one per band
  std::optional<double> m;
  bool censored = false;                 // norm > 1 at s_max
};

// Riemann sums over [lower_limit, s_max] of a path x(s) = ||phi Z_s / s||
// sampled at s_points; cell k is (s_{k-1}, s_k] with s_0 = 0 and carries the
// value at its right end.
inline LimitVariables compute_limit_variables(std::span<const double> s_points, std::span<const double> norms,
                                              std::span<const Band> bands, double lower_limit = 1e-4) {
  detail::require(s_points.size() == norms.size() && !s_points.empty(), "compute_limit_variables: size mismatch");
  LimitVariables out;
  std::vector<double> band_mass(bands.size(), 0.0);
  double weighted = 0.0;
  double previous = 0.0;
  for (std::size_t k = 0; k < s_points.size(); ++k) {
    const double s = s_points[k];
    const double x = norms[k];
    if (x > 1.0) out.n = s;
    const double width = s > lower_limit ? s - std::max(previous, lower_limit) : 0.0;
    previous = s;
    if (x >= 1.0) {
      out.q += width;
      weighted += width * x;
    }
    for (std::size_t j = 0; j < bands.size(); ++j)
      if (x >= bands[j].a && x <= bands[j].b) band_mass[j] += width;
  }
  out.censored = norms.back() > 1.0;
  out.r.resize(bands.size());
  if (out.q > 0.0) {
    out.m = weighted / out.q;
    for (std::size_t j = 0; j < bands.size(); ++j) out.r[j] = band_mass[j] / out.q;
  }
  return out;
}

// s-grid {s_max k / n : k = 1..n} built from a unit grid.
inline std::vector<double> scaled_points(const Grid1D& unit, double s_max) {
  detail::require(s_max > 0.0, "s_max must be positive");
  std::vector<double> s(unit.size());
  for (std::size_t k = 0; k < unit.size(); ++k) s[k] = s_max * unit[k];
  return s;
}

// |sigma B(s) / s| on the grid: the limit path for a scalar estimator with
// asymptotic variance sigma^2.
class ScaledBrownianNormSampler {
 public:
  ScaledBrownianNormSampler(double sigma, const Grid1D& unit_grid, double s_max)
      : sigma_(sigma), s_(scaled_points(unit_grid, s_max)) {
    detail::require(sigma > 0.0, "ScaledBrownianNormSampler: sigma must be positive");
  }

  std::span<const double> s_points() const noexcept { return s_; }

  void sample(Engine& engine, std::span<double> norms) const {
    double b = 0.0, previous = 0.0;
    for (std::size_t k = 0; k < s_.size(); ++k) {
      b += std::sqrt(s_[k] - previous) * standard_normal(engine);
      previous = s_[k];
      norms[k] = sigma_ * std::abs(b) / s_[k];
    }
  }

 private:
  double sigma_;
  std::vector<double> s_;
};

// max_i |Z(s, f_i)| / s for a Kiefer-Mueller process with covariance cov.
class KieferNormSampler {
 public:
  KieferNormSampler(CovMatrix cov, const Grid1D& unit_grid, double s_max)
      : cov_(std::move(cov)), unit_(unit_grid), s_max_(s_max), s_(scaled_points(unit_grid, s_max)) {}

  std::span<const double> s_points() const noexcept { return s_; }

  void sample(Engine& engine, std::span<double> norms) const {
    // Z(s_max u) has the law of sqrt(s_max) Z(u).
    const auto field = simulate_kiefer_muller(unit_, cov_, engine);
    const double scale = std::sqrt(s_max_);
    for (std::size_t k = 0; k < s_.size(); ++k)
      norms[k] = scale * field.values.row(static_cast<Eigen::Index>(k)).cwiseAbs().maxCoeff() / s_[k];
  }

 private:
  CovMatrix cov_;
  Grid1D unit_;
  double s_max_;
  std::vector<double> s_;
};

struct DistributionRow {
  std::string statistic;
  double band_a = std::numeric_limits<double>::quiet_NaN();
  double band_b = std::numeric_limits<double>::quiet_NaN();
  double q05 = 0.0;
  double q50 = 0.0;
  double q95 = 0.0;
  double mc_se = 0.0;  // of the median
  std::size_t reps = 0;
  double censored_fraction = 0.0;
};

inline DistributionRow summarize(std::string statistic, std::vector<double> values, double censored_fraction,
                                 std::optional<Band> band = std::nullopt) {
  DistributionRow row;
  row.statistic = std::move(statistic);
  if (band) {
    row.band_a = band->a;
    row.band_b = band->b;
  }
  row.censored_fraction = censored_fraction;
  row.reps = values.size();
  if (values.empty()) {
    row.q05 = row.q50 = row.q95 = std::numeric_limits<double>::quiet_NaN();
    return row;
  }
  const EmpiricalDistribution dist(std::move(values));
  row.q05 = dist.quantile(0.05);
  row.q50 = dist.quantile(0.5);
  row.q95 = dist.quantile(0.95);
  row.mc_se = dist.quantile_se(0.5);
  return row;
}

struct LimitStatsOptions {
  double lower_limit = 1e-4;
  unsigned threads = 0;
};

// Rows N, Q, M and one R row per band. Replicates whose Q is zero leave R
// and M undefined and are left out of those rows.
template <typename PathSampler>
std::vector<DistributionRow> simulate_limit_stats(const PathSampler& sampler, std::size_t replications,
                                                  SeedSpec seed, std::span<const Band> bands,
                                                  LimitStatsOptions options = {}) {
  detail::require(replications >= 1000, "simulate_limit_stats: need at least 1000 replications");
  for (const auto& band : bands) detail::require(band.a >= 1.0 && band.b > band.a, "simulate_limit_stats: bad band");
  const auto s = sampler.s_points();
  std::vector<LimitVariables> draws(replications);
  parallel_for(replications, options.threads, [&](std::size_t r) {
    Engine engine = make_engine(seed, r);
    std::vector<double> norms(s.size());
    sampler.sample(engine, norms);
    draws[r] = compute_limit_variables(s, norms, bands, options.lower_limit);
  });

  std::size_t censored = 0;
  std::vector<double> n, q, m;
  for (const auto& d : draws) {
    censored += d.censored ? 1 : 0;
    n.push_back(d.n);
    q.push_back(d.q);
    if (d.m) m.push_back(*d.m);
  }
  const double frac = static_cast<double>(censored) / static_cast<double>(replications);
  std::vector<DistributionRow> rows;
  rows.push_back(summarize("N", std::move(n), frac));
  rows.push_back(summarize("Q", std::move(q), frac));
  rows.push_back(summarize("M", std::move(m), frac));
  for (std::size_t j = 0; j < bands.size(); ++j) {
    std::vector<double> r;
    for (const auto& d : draws)
      if (d.r[j]) r.push_back(*d.r[j]);
    rows.push_back(summarize("R", std::move(r), frac, bands[j]));
  }
  return rows;
}

}  // namespace lastexit
