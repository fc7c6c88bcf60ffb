#pragma once

// Risk-averse sample average approximation on a finite decision grid:
// absolute semideviation risk, the SAA minimiser, the asymptotic variance of
// the optimal value, and sample-size rules.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "lastexit/error.hpp"
#include "lastexit/limit_laws.hpp"
#include "lastexit/rng.hpp"
#include "lastexit/stats.hpp"

namespace lastexit {

// rho_lambda(Z) = E Z + lambda E[Z - E Z]_+ for the empirical law of samples.
inline double semideviation_risk(std::span<const double> samples, double lambda) {
  if (samples.empty()) throw InvalidArgument("semideviation_risk: empty sample");
  detail::require(lambda >= 0.0 && lambda <= 1.0, "semideviation_risk: lambda must lie in [0,1]");
  const double n = static_cast<double>(samples.size());
  const double mean = std::accumulate(samples.begin(), samples.end(), 0.0) / n;
  double upper = 0.0;
  for (double z : samples) upper += std::max(z - mean, 0.0);
  return mean + lambda * upper / n;
}

// Same risk for a discrete law given by values and nonnegative weights
// (probabilities or counts; normalised internally).
inline double semideviation_risk(std::span<const double> values, std::span<const double> weights, double lambda) {
  detail::require(values.size() == weights.size() && !values.empty(), "semideviation_risk: size mismatch");
  detail::require(lambda >= 0.0 && lambda <= 1.0, "semideviation_risk: lambda must lie in [0,1]");
  const double total = std::accumulate(weights.begin(), weights.end(), 0.0);
  detail::require(total > 0.0, "semideviation_risk: zero total weight");
  double mean = 0.0;
  for (std::size_t k = 0; k < values.size(); ++k) mean += weights[k] * values[k];
  mean /= total;
  double upper = 0.0;
  for (std::size_t k = 0; k < values.size(); ++k) upper += weights[k] * std::max(values[k] - mean, 0.0);
  return mean + lambda * upper / total;
}

// Scenario law with finite support.
struct FiniteScenarioLaw {
  std::vector<double> values;
  std::vector<double> probabilities;

  std::size_t draw_index(Engine& engine) const {
    const double u = uniform01(engine);
    double cumulative = 0.0;
    for (std::size_t k = 0; k + 1 < probabilities.size(); ++k) {
      cumulative += probabilities[k];
      if (u < cumulative) return k;
    }
    return probabilities.size() - 1;
  }
};

struct RiskProblem {
  std::string name;
  std::vector<double> decision_grid;
  std::function<double(double x, double xi)> loss;
  std::function<double(Engine&)> scenario_sampler;
  double lambda = 0.0;
  // Present when the scenario law has finite support, which makes the true
  // optimum computable by enumeration.
  std::optional<FiniteScenarioLaw> law;

  void validate() const {
    detail::require(!decision_grid.empty(), "RiskProblem: empty decision grid");
    detail::require(lambda >= 0.0 && lambda <= 1.0, "RiskProblem: lambda must lie in [0,1]");
    detail::require(static_cast<bool>(loss) && static_cast<bool>(scenario_sampler), "RiskProblem: missing loss or sampler");
    if (law) {
      detail::require(law->values.size() == law->probabilities.size() && !law->values.empty(),
                      "RiskProblem: malformed scenario law");
      const double total = std::accumulate(law->probabilities.begin(), law->probabilities.end(), 0.0);
      detail::require(std::abs(total - 1.0) < 1e-12, "RiskProblem: probabilities must sum to 1");
    }
  }
};

// Attaches a sampler drawing from `law`.
inline RiskProblem make_finite_problem(std::string name, std::vector<double> grid,
                                       std::function<double(double, double)> loss, FiniteScenarioLaw law,
                                       double lambda) {
  RiskProblem p;
  p.name = std::move(name);
  p.decision_grid = std::move(grid);
  p.loss = std::move(loss);
  p.scenario_sampler = [law](Engine& e) { return law.values[law.draw_index(e)]; };
  p.lambda = lambda;
  p.law = std::move(law);
  p.validate();
  return p;
}

struct SAAResult {
  std::size_t n = 0;
  std::size_t x_index = 0;
  double x_hat = 0.0;
  double v_hat = 0.0;
  SeedSpec seed;
};

namespace detail {

inline double checked_loss(const RiskProblem& problem, double x, double xi, std::size_t replicate) {
  const double g = problem.loss(x, xi);
  if (!std::isfinite(g))
    throw NumericError("non-finite loss at x=" + std::to_string(x) + ", scenario " + std::to_string(replicate));
  return g;
}

// Index of the smallest value; ties go to the lowest index.
inline std::size_t argmin_first(std::span<const double> v) {
  return static_cast<std::size_t>(std::min_element(v.begin(), v.end()) - v.begin());
}

}  // namespace detail

// One scenario set of size n, shared by every grid point.
inline SAAResult saa_solve(const RiskProblem& problem, std::size_t n, SeedSpec seed) {
  problem.validate();
  detail::require(n >= 2, "saa_solve: need n >= 2");
  Engine engine = make_engine(seed);
  std::vector<double> scenarios(n);
  for (auto& xi : scenarios) xi = problem.scenario_sampler(engine);
  std::vector<double> risks(problem.decision_grid.size());
  std::vector<double> losses(n);
  for (std::size_t j = 0; j < risks.size(); ++j) {
    const double x = problem.decision_grid[j];
    for (std::size_t i = 0; i < n; ++i) losses[i] = detail::checked_loss(problem, x, scenarios[i], i);
    risks[j] = semideviation_risk(losses, problem.lambda);
  }
  const std::size_t best = detail::argmin_first(risks);
  return {n, best, problem.decision_grid[best], risks[best], seed};
}

struct ExactOptimum {
  std::size_t x_index = 0;
  double x = 0.0;
  double v = 0.0;
};

inline double exact_risk(const RiskProblem& problem, double x) {
  detail::require(problem.law.has_value(), "exact_risk: problem has no finite scenario law");
  const auto& law = *problem.law;
  std::vector<double> g(law.values.size());
  for (std::size_t k = 0; k < g.size(); ++k) g[k] = problem.loss(x, law.values[k]);
  return semideviation_risk(g, law.probabilities, problem.lambda);
}

inline ExactOptimum exact_optimum(const RiskProblem& problem) {
  problem.validate();
  std::vector<double> risks(problem.decision_grid.size());
  for (std::size_t j = 0; j < risks.size(); ++j) risks[j] = exact_risk(problem, problem.decision_grid[j]);
  const std::size_t best = detail::argmin_first(risks);
  return {best, problem.decision_grid[best], risks[best]};
}

// Which transform of G(x*, xi) carries the asymptotic variance of the SAA value.
//   symmetric_deviation: G + l a* [G - EG]_+ + l (1 - a*) [EG - G]_+
//   literal:             G + l a* [G - EG]_+ + l (1 - a*) [-G - EG]_+
// with a* = P(G <= EG). The symmetric form is the influence function of
// the semideviation risk; the literal form is kept for reproduction.
enum class VarianceForm { symmetric_deviation, literal };

namespace detail {

inline double variance_transform(double g, double mean, double alpha_star, double lambda, VarianceForm form) {
  const double below = form == VarianceForm::symmetric_deviation ? std::max(mean - g, 0.0) : std::max(-g - mean, 0.0);
  return g + lambda * alpha_star * std::max(g - mean, 0.0) + lambda * (1.0 - alpha_star) * below;
}

}  // namespace detail

struct Sigma2Estimate {
  double sigma2 = 0.0;
  double mean_loss = 0.0;   // E G(x*, xi)
  double alpha_star = 0.0;  // P(G(x*, xi) <= E G)
  bool degenerate = false;  // the loss has zero variance at x*
};

// Pilot plug-in: estimate EG and a* from the pilot, then take the sample
// variance of the transform over the same pilot.
inline Sigma2Estimate sigma2_saa(const RiskProblem& problem, double x_star, std::size_t n_pilot, SeedSpec seed,
                                 VarianceForm form = VarianceForm::symmetric_deviation) {
  problem.validate();
  detail::require(n_pilot >= 2, "sigma2_saa: pilot needs at least two scenarios");
  Engine engine = make_engine(seed);
  std::vector<double> g(n_pilot);
  for (std::size_t i = 0; i < n_pilot; ++i) g[i] = detail::checked_loss(problem, x_star, problem.scenario_sampler(engine), i);
  const double mean = std::accumulate(g.begin(), g.end(), 0.0) / static_cast<double>(n_pilot);
  const double alpha_star =
      static_cast<double>(std::count_if(g.begin(), g.end(), [mean](double v) { return v <= mean; })) /
      static_cast<double>(n_pilot);
  const bool degenerate = std::all_of(g.begin(), g.end(), [&](double v) { return v == g.front(); });
  if (degenerate) return {0.0, mean, alpha_star, true};
  std::vector<double> t(n_pilot);
  for (std::size_t i = 0; i < n_pilot; ++i)
    t[i] = detail::variance_transform(g[i], mean, alpha_star, problem.lambda, form);
  return {sample_variance(t), mean, alpha_star, false};
}

// The same quantity under the exact finite scenario law.
inline Sigma2Estimate exact_sigma2(const RiskProblem& problem, double x_star,
                                   VarianceForm form = VarianceForm::symmetric_deviation) {
  detail::require(problem.law.has_value(), "exact_sigma2: problem has no finite scenario law");
  const auto& law = *problem.law;
  const std::size_t k = law.values.size();
  std::vector<double> g(k);
  double mean = 0.0;
  for (std::size_t i = 0; i < k; ++i) {
    g[i] = problem.loss(x_star, law.values[i]);
    mean += law.probabilities[i] * g[i];
  }
  double alpha_star = 0.0;
  for (std::size_t i = 0; i < k; ++i)
    if (g[i] <= mean) alpha_star += law.probabilities[i];
  double m1 = 0.0, m2 = 0.0;
  for (std::size_t i = 0; i < k; ++i) {
    const double t = detail::variance_transform(g[i], mean, alpha_star, problem.lambda, form);
    m1 += law.probabilities[i] * t;
    m2 += law.probabilities[i] * t * t;
  }
  const double var = std::max(m2 - m1 * m1, 0.0);
  return {var, mean, alpha_star, var == 0.0};
}

// N(alpha, eps) = ceil(sigma2 b^2 / eps^2) with b the upper sandwich quantile.
inline std::size_t sample_size_n(double alpha, double eps, double sigma2,
                                 SizingConvention convention = SizingConvention::alpha_sandwich) {
  detail::require(alpha > 0.0 && eps > 0.0 && sigma2 > 0.0, "sample_size_n: inputs must be positive");
  const auto b = sandwich_quantiles(alpha, convention);
  return static_cast<std::size_t>(std::ceil(sizing_quantity(sigma2, eps, b.upper)));
}

// n(alpha, eps) = ceil((c1 / eps^2) (log(c2 / eps) + log(1 / alpha))).
inline std::size_t shapiro_size(double c1, double c2, double alpha, double eps) {
  detail::require(c1 > 0.0 && c2 > 0.0 && alpha > 0.0 && alpha < 1.0 && eps > 0.0,
                  "shapiro_size: inputs must be positive, alpha in (0,1)");
  if (!(c2 / eps > 1.0)) throw InvalidArgument("shapiro_size: need c2 / eps > 1 for the logarithm");
  return static_cast<std::size_t>(std::ceil(c1 / (eps * eps) * (std::log(c2 / eps) + std::log(1.0 / alpha))));
}

struct SaaCoverage {
  double coverage = 0.0;  // at n = N(alpha, eps)
  double mc_se = 0.0;
  std::size_t n_required = 0;
  std::size_t horizon = 0;
  std::size_t replications = 0;
  double sigma2 = 0.0;
  double v = 0.0;
  SequentialCoverage detail;
};

// Fraction of replicates with |v_m - v| < eps for every m in
// [N(alpha,eps), horizon_multiple N(alpha,eps)], v_m computed on nested
// prefixes of one scenario stream. sigma^2 and v come from exact enumeration.
inline SaaCoverage verify_sequential_coverage(const RiskProblem& problem, double alpha, double eps,
                                              double horizon_multiple, std::size_t replications, SeedSpec seed,
                                              SizingConvention convention = SizingConvention::alpha_sandwich,
                                              unsigned threads = 0,
                                              VarianceForm form = VarianceForm::symmetric_deviation) {
  problem.validate();
  detail::require(problem.law.has_value(), "verify_sequential_coverage: needs a finite scenario law");
  detail::require(replications >= 500, "verify_sequential_coverage: need at least 500 replications");
  detail::require(horizon_multiple >= 1.0, "verify_sequential_coverage: horizon_multiple must be >= 1");
  const auto opt = exact_optimum(problem);
  const auto s2 = exact_sigma2(problem, opt.x, form);
  if (s2.degenerate) throw NumericError("verify_sequential_coverage: zero asymptotic variance at the optimum");
  const std::size_t n_req = std::max<std::size_t>(sample_size_n(alpha, eps, s2.sigma2, convention), 2);
  const auto horizon = static_cast<std::size_t>(std::ceil(horizon_multiple * static_cast<double>(n_req)));

  const auto& law = *problem.law;
  const std::size_t k = law.values.size();
  const std::size_t nx = problem.decision_grid.size();
  std::vector<double> g(nx * k);  // g[j * k + i] = G(x_j, xi_i)
  for (std::size_t j = 0; j < nx; ++j)
    for (std::size_t i = 0; i < k; ++i) g[j * k + i] = problem.loss(problem.decision_grid[j], law.values[i]);

  SequentialCoverage seq{std::vector<std::size_t>(replications, 0), n_req, horizon};
  parallel_for(replications, threads, [&](std::size_t r) {
    Engine engine = make_engine(seed, r);
    std::vector<double> counts(k, 0.0);
    std::size_t last = 0;
    for (std::size_t m = 1; m <= horizon; ++m) {
      counts[law.draw_index(engine)] += 1.0;
      if (m < n_req) continue;
      double v_hat = std::numeric_limits<double>::infinity();
      for (std::size_t j = 0; j < nx; ++j)
        v_hat = std::min(v_hat, semideviation_risk(std::span<const double>(g.data() + j * k, k), counts, problem.lambda));
      if (!(std::abs(v_hat - opt.v) < eps)) last = m;
    }
    seq.last_violation[r] = last;
  });
  return {seq.coverage_at(n_req), seq.se_at(n_req), n_req, horizon, replications, s2.sigma2, opt.v, std::move(seq)};
}

// Built-in problems with finite scenario support.
//   newsvendor: G(x, xi) = cost x - price min(x, xi), xi in {0..4}
//   absdev:     G(x, xi) = |x - xi|, xi in {0, 1} equiprobable
inline RiskProblem toy_problem(const std::string& name, double lambda = 0.5) {
  if (name == "newsvendor") {
    return make_finite_problem(
        name, {0, 1, 2, 3, 4}, [](double x, double xi) { return 1.0 * x - 2.0 * std::min(x, xi); },
        FiniteScenarioLaw{{0, 1, 2, 3, 4}, {0.1, 0.2, 0.3, 0.25, 0.15}}, lambda);
  }
  if (name == "absdev") {
    return make_finite_problem(
        name, {0.0, 0.5, 1.0}, [](double x, double xi) { return std::abs(x - xi); },
        FiniteScenarioLaw{{0.0, 1.0}, {0.5, 0.5}}, lambda);
  }
  throw InvalidArgument("unknown toy problem '" + name + "'");
}

}  // namespace lastexit
