#pragma once

// Error trajectories of concrete estimators on simulated data streams, and
// the Gaussian limit paths matching each of them.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <numbers>
#include <queue>
#include <span>
#include <string>
#include <vector>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "lastexit/error.hpp"
#include "lastexit/gp_sim.hpp"
#include "lastexit/last_time.hpp"
#include "lastexit/rng.hpp"
#include "lastexit/survival.hpp"

namespace lastexit {

enum class Estimator { mean, median, ecdf_sup, nelson_aalen };

inline Estimator parse_estimator(const std::string& name) {
  if (name == "mean") return Estimator::mean;
  if (name == "median") return Estimator::median;
  if (name == "ecdf-sup") return Estimator::ecdf_sup;
  if (name == "nelson-aalen") return Estimator::nelson_aalen;
  throw InvalidArgument("unknown estimator '" + name + "'");
}

// |mean_n| for Uniform(-1/2, 1/2) data (variance 1/12).
inline ErrorTrajectory mean_trajectory_uniform(Engine& engine, std::size_t horizon) {
  std::vector<double> err(horizon);
  double sum = 0.0;
  for (std::size_t n = 1; n <= horizon; ++n) {
    sum += uniform01(engine) - 0.5;
    err[n - 1] = std::abs(sum / static_cast<double>(n));
  }
  return ErrorTrajectory(std::move(err), "abs");
}

// |mean_n| for standard normal data.
inline ErrorTrajectory mean_trajectory_normal(Engine& engine, std::size_t horizon) {
  std::vector<double> err(horizon);
  double sum = 0.0;
  for (std::size_t n = 1; n <= horizon; ++n) {
    sum += standard_normal(engine);
    err[n - 1] = std::abs(sum / static_cast<double>(n));
  }
  return ErrorTrajectory(std::move(err), "abs");
}

// |sample median_n| for standard normal data, kept with two heaps.
inline ErrorTrajectory median_trajectory_normal(Engine& engine, std::size_t horizon) {
  std::priority_queue<double> lower;
  std::priority_queue<double, std::vector<double>, std::greater<>> upper;
  std::vector<double> err(horizon);
  for (std::size_t n = 1; n <= horizon; ++n) {
    const double x = standard_normal(engine);
    if (lower.empty() || x <= lower.top()) lower.push(x);
    else upper.push(x);
    if (lower.size() > upper.size() + 1) {
      upper.push(lower.top());
      lower.pop();
    } else if (upper.size() > lower.size()) {
      lower.push(upper.top());
      upper.pop();
    }
    const double median = lower.size() > upper.size() ? lower.top() : 0.5 * (lower.top() + upper.top());
    err[n - 1] = std::abs(median);
  }
  return ErrorTrajectory(std::move(err), "abs");
}

// sup_t |F_n(t) - t| for Uniform(0,1) data. O(n) per step.
inline ErrorTrajectory ecdf_sup_trajectory(Engine& engine, std::size_t horizon) {
  std::vector<double> sorted;
  sorted.reserve(horizon);
  std::vector<double> err(horizon);
  for (std::size_t n = 1; n <= horizon; ++n) {
    const double u = uniform01(engine);
    sorted.insert(std::upper_bound(sorted.begin(), sorted.end(), u), u);
    const double nn = static_cast<double>(n);
    double d = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      d = std::max(d, static_cast<double>(i + 1) / nn - sorted[i]);
      d = std::max(d, sorted[i] - static_cast<double>(i) / nn);
    }
    err[n - 1] = d;
  }
  return ErrorTrajectory(std::move(err), "sup");
}

// sup_{t <= tau} |Lambda_n(t) - Lambda(t)| under the exponential/uniform model.
inline ErrorTrajectory nelson_aalen_trajectory(const ExponentialUniformModel& model, double tau, Engine& engine,
                                               std::size_t horizon) {
  NelsonAalenStream stream(tau);
  const auto hazard = [&](double t) { return model.cumulative_hazard(t); };
  std::vector<double> err(horizon);
  for (std::size_t n = 1; n <= horizon; ++n) {
    stream.add(model.draw(engine));
    err[n - 1] = stream.sup_deviation(hazard);
  }
  return ErrorTrajectory(std::move(err), "sup[0,tau]");
}

// sigma^2(t) = int_0^t dLambda / P{Z >= z} for the exponential/uniform model
// (continuous hazard, so the (1 - dLambda) factor is 1).
inline double true_sigma2(const ExponentialUniformModel& model, double t) {
  detail::require(t > 0.0 && t < model.censor_max, "true_sigma2: need 0 < t < censor_max");
  const auto integrand = [&](double z) {
    return model.rate / (std::exp(-model.rate * z) * (1.0 - z / model.censor_max));
  };
  return boost::math::quadrature::gauss_kronrod<double, 61>::integrate(integrand, 0.0, t, 15, 1e-13);
}

// Trajectory generator and limit-path sampler for one estimator.
struct EstimatorSetup {
  std::function<ErrorTrajectory(Engine&, std::size_t)> trajectory;
  double sigma2 = 1.0;  // scale of the limit (1 for the sup-norm estimators)
};

struct EstimatorOptions {
  double tau = 1.0;  // nelson-aalen analysis horizon
  ExponentialUniformModel model{};
  std::size_t class_points = 64;  // function-class grid for ecdf-sup and nelson-aalen limits
};

inline EstimatorSetup estimator_setup(Estimator e, const EstimatorOptions& opt = {}) {
  switch (e) {
    case Estimator::mean:
      return {mean_trajectory_uniform, 1.0 / 12.0};
    case Estimator::median:
      return {median_trajectory_normal, std::numbers::pi / 2.0};
    case Estimator::ecdf_sup:
      return {ecdf_sup_trajectory, 1.0};
    case Estimator::nelson_aalen: {
      const auto model = opt.model;
      const double tau = opt.tau;
      return {[model, tau](Engine& engine, std::size_t horizon) {
                return nelson_aalen_trajectory(model, tau, engine, horizon);
              },
              true_sigma2(opt.model, opt.tau)};
    }
  }
  throw InvalidArgument("estimator_setup: unknown estimator");
}

// Covariance of the limit over a finite class of evaluation points.
inline CovMatrix estimator_limit_covariance(Estimator e, const EstimatorOptions& opt = {}) {
  const std::size_t k = opt.class_points;
  std::vector<double> t(k);
  switch (e) {
    case Estimator::mean:
      return CovMatrix(Eigen::MatrixXd::Constant(1, 1, 1.0 / 12.0));
    case Estimator::median:
      return CovMatrix(Eigen::MatrixXd::Constant(1, 1, std::numbers::pi / 2.0));
    case Estimator::ecdf_sup:
      for (std::size_t i = 0; i < k; ++i) t[i] = static_cast<double>(i + 1) / static_cast<double>(k + 1);
      return CovMatrix::uniform_ecdf(t);
    case Estimator::nelson_aalen: {
      // Gaussian martingale in t: Cov = sigma^2(t_i ^ t_j).
      std::vector<double> s2(k);
      for (std::size_t i = 0; i < k; ++i) s2[i] = true_sigma2(opt.model, opt.tau * static_cast<double>(i + 1) / static_cast<double>(k));
      Eigen::MatrixXd c(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(k));
      for (std::size_t i = 0; i < k; ++i)
        for (std::size_t j = 0; j < k; ++j) c(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = s2[std::min(i, j)];
      return CovMatrix(std::move(c));
    }
  }
  throw InvalidArgument("estimator_limit_covariance: unknown estimator");
}

// Tail statistics of `reps` simulated trajectories, replicate r drawn from
// the engine for (seed, r).
template <typename TrajectoryFn>
std::vector<TailStats> simulate_tail_stats(const TrajectoryFn& trajectory, double eps, std::size_t horizon,
                                           std::size_t replications, SeedSpec seed, Band band = {},
                                           unsigned threads = 0) {
  detail::require(eps > 0.0 && horizon >= 1, "simulate_tail_stats: need eps > 0 and horizon >= 1");
  std::vector<TailStats> out(replications);
  parallel_for(replications, threads, [&](std::size_t r) {
    Engine engine = make_engine(seed, r);
    out[r] = tail_stats(trajectory(engine, horizon), eps, band.a, band.b);
  });
  return out;
}

// Default horizon ceil(c / eps^2).
inline std::size_t default_horizon(double eps, double c = 50.0) {
  detail::require(eps > 0.0 && c > 0.0, "default_horizon: inputs must be positive");
  return static_cast<std::size_t>(std::ceil(c / (eps * eps)));
}

// Rows eps2_N, eps2_Q, M_over_eps and one R row per band from finite-eps
// trajectories.
template <typename TrajectoryFn>
std::vector<DistributionRow> simulate_trajectory_rows(const TrajectoryFn& trajectory, double eps, std::size_t horizon,
                                                      std::size_t replications, SeedSpec seed,
                                                      std::span<const Band> bands, unsigned threads = 0) {
  detail::require(replications >= 1, "simulate_trajectory_rows: need replications");
  std::vector<double> n, q, m;
  std::vector<std::vector<double>> r(bands.size());
  std::size_t censored = 0;
  std::vector<std::vector<std::optional<double>>> ratios(replications, std::vector<std::optional<double>>(bands.size()));
  std::vector<ScaledStats> scaled(replications);
  parallel_for(replications, threads, [&](std::size_t rep) {
    Engine engine = make_engine(seed, rep);
    const auto traj = trajectory(engine, horizon);
    scaled[rep] = scaled_stats(traj, eps);
    for (std::size_t j = 0; j < bands.size(); ++j) ratios[rep][j] = band_ratio(traj, eps, bands[j].a, bands[j].b);
  });
  for (std::size_t rep = 0; rep < replications; ++rep) {
    censored += scaled[rep].censored ? 1 : 0;
    n.push_back(scaled[rep].n_scaled);
    q.push_back(scaled[rep].q_scaled);
    if (scaled[rep].m_scaled) m.push_back(*scaled[rep].m_scaled);
    for (std::size_t j = 0; j < bands.size(); ++j)
      if (ratios[rep][j]) r[j].push_back(*ratios[rep][j]);
  }
  const double frac = static_cast<double>(censored) / static_cast<double>(replications);
  std::vector<DistributionRow> rows;
  rows.push_back(summarize("eps2_N", std::move(n), frac));
  rows.push_back(summarize("eps2_Q", std::move(q), frac));
  rows.push_back(summarize("M_over_eps", std::move(m), frac));
  for (std::size_t j = 0; j < bands.size(); ++j) rows.push_back(summarize("R", std::move(r[j]), frac, bands[j]));
  return rows;
}

}  // namespace lastexit
