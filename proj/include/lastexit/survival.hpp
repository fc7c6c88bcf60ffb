#pragma once

// Nelson-Aalen estimation from right-censored data and sizing of
// sequential simultaneous confidence bands for the cumulative hazard.

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstddef>
#include <istream>
#include <limits>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "lastexit/error.hpp"
#include "lastexit/limit_laws.hpp"
#include "lastexit/rng.hpp"

namespace lastexit {

struct CensoredRecord {
  double time = 0.0;  // Z = min(Y, C)
  int event = 0;      // 1{Y <= C}
};

class CensoredSample {
 public:
  CensoredSample(std::vector<CensoredRecord> records, double tau) : records_(std::move(records)), tau_(tau) {
    detail::require(tau > 0.0 && std::isfinite(tau), "CensoredSample: tau must be positive and finite");
    bool any_before_tau = false;
    for (std::size_t i = 0; i < records_.size(); ++i) {
      const auto& r = records_[i];
      if (!std::isfinite(r.time) || r.time < 0.0)
        throw InvalidArgument("CensoredSample: record " + std::to_string(i) + " has an invalid time");
      if (r.event != 0 && r.event != 1)
        throw InvalidArgument("CensoredSample: record " + std::to_string(i) + " has event outside {0,1}");
      any_before_tau = any_before_tau || r.time <= tau;
    }
    detail::require(any_before_tau, "CensoredSample: no record at or before tau");
  }

  std::span<const CensoredRecord> records() const noexcept { return records_; }
  double tau() const noexcept { return tau_; }
  std::size_t size() const noexcept { return records_.size(); }

 private:
  std::vector<CensoredRecord> records_;
  double tau_;
};

// Right-continuous step function: value cumulative[i] on [jump_times[i], next).
struct HazardCurve {
  std::vector<double> jump_times;
  std::vector<double> cumulative;

  double operator()(double t) const {
    const auto it = std::upper_bound(jump_times.begin(), jump_times.end(), t);
    if (it == jump_times.begin()) return 0.0;
    return cumulative[static_cast<std::size_t>(it - jump_times.begin()) - 1];
  }
};

namespace detail {

// One distinct event time: d events among at_risk = #{Z_j >= time}.
struct EventGroup {
  double time;
  std::size_t events;
  std::size_t at_risk;
};

inline std::vector<EventGroup> event_groups(std::span<const CensoredRecord> records) {
  std::vector<CensoredRecord> sorted(records.begin(), records.end());
  std::sort(sorted.begin(), sorted.end(), [](const auto& x, const auto& y) { return x.time < y.time; });
  std::vector<EventGroup> groups;
  const std::size_t n = sorted.size();
  for (std::size_t i = 0; i < n;) {
    std::size_t j = i, events = 0;
    while (j < n && sorted[j].time == sorted[i].time) events += static_cast<std::size_t>(sorted[j++].event);
    // The event records themselves are at risk, so at_risk >= events > 0.
    if (events > 0) groups.push_back({sorted[i].time, events, n - i});
    i = j;
  }
  return groups;
}

}  // namespace detail

inline HazardCurve nelson_aalen(const CensoredSample& sample) {
  HazardCurve curve;
  double cumulative = 0.0;
  for (const auto& g : detail::event_groups(sample.records())) {
    cumulative += static_cast<double>(g.events) / static_cast<double>(g.at_risk);
    curve.jump_times.push_back(g.time);
    curve.cumulative.push_back(cumulative);
  }
  return curve;
}

// Plug-in for sigma^2(tau) = int_[0,tau] (1 - dLambda) / P{Z >= z} dLambda with
// P{Z >= z} estimated by Y(z)/n:  n * sum_{z <= tau} (1 - d/Y) d / Y^2.
inline double sigma2_hat(const CensoredSample& sample, double tau) {
  detail::require(tau > 0.0, "sigma2_hat: tau must be positive");
  const double n = static_cast<double>(sample.size());
  double sum = 0.0;
  for (const auto& g : detail::event_groups(sample.records())) {
    if (g.time > tau) break;
    const double d = static_cast<double>(g.events);
    const double y = static_cast<double>(g.at_risk);
    sum += (1.0 - d / y) * d / (y * y);
  }
  return n * sum;
}

inline double sigma2_hat(const CensoredSample& sample) { return sigma2_hat(sample, sample.tau()); }

struct BandSpec {
  double eps0 = 0.0;
  double alpha = 0.0;
  std::size_t m_low = 0;
  std::size_t m_high = 0;
  double sigma2 = 0.0;
  std::size_t recommended_m() const noexcept { return m_high; }
};

// m_low = ceil(sigma2 b_lo^2 / eps0^2), m_high = floor(sigma2 b_hi^2 / eps0^2) + 1.
inline BandSpec band_size(double sigma2, double eps0, double alpha,
                          SizingConvention convention = SizingConvention::alpha_sandwich) {
  detail::require(sigma2 > 0.0 && eps0 > 0.0, "band_size: sigma2 and eps0 must be positive");
  const auto b = sandwich_quantiles(alpha, convention);
  const auto m_low = static_cast<std::size_t>(std::ceil(sizing_quantity(sigma2, eps0, b.lower)));
  const auto m_high = static_cast<std::size_t>(std::floor(sizing_quantity(sigma2, eps0, b.upper))) + 1;
  return {eps0, alpha, std::max<std::size_t>(m_low, 1), m_high, sigma2};
}

// ---- Sequential evaluation -------------------------------------------------

// Nelson-Aalen estimator maintained as records arrive one at a time,
// evaluating sup_{t <= tau} |Lambda_n(t) - Lambda(t)| for a continuous,
// nondecreasing Lambda.
class NelsonAalenStream {
 public:
  explicit NelsonAalenStream(double tau) : tau_(tau) {}

  void add(CensoredRecord r) {
    ++n_;
    if (r.time > tau_) return;
    const auto pos = std::upper_bound(early_.begin(), early_.end(), r.time,
                                      [](double t, const CensoredRecord& x) { return t < x.time; });
    early_.insert(pos, r);
  }

  std::size_t size() const noexcept { return n_; }

  template <typename Hazard>
  double sup_deviation(const Hazard& true_hazard) const {
    double estimate = 0.0, worst = 0.0;
    std::size_t before = 0;
    for (std::size_t i = 0; i < early_.size();) {
      const double z = early_[i].time;
      std::size_t j = i, d = 0;
      while (j < early_.size() && early_[j].time == z) d += static_cast<std::size_t>(early_[j++].event);
      if (d > 0) {
        const double truth = true_hazard(z);
        worst = std::max(worst, std::abs(estimate - truth));
        estimate += static_cast<double>(d) / static_cast<double>(n_ - before);
        worst = std::max(worst, std::abs(estimate - truth));
      }
      before += j - i;
      i = j;
    }
    return std::max(worst, std::abs(estimate - true_hazard(tau_)));
  }

 private:
  double tau_;
  std::size_t n_ = 0;
  std::vector<CensoredRecord> early_;  // records with time <= tau, sorted
};

// Exponential(rate) lifetimes censored by independent Uniform(0, censor_max).
struct ExponentialUniformModel {
  double rate = 1.0;
  double censor_max = 3.0;

  CensoredRecord draw(Engine& engine) const {
    const double y = -std::log1p(-uniform01(engine)) / rate;
    const double c = censor_max * uniform01(engine);
    return y <= c ? CensoredRecord{y, 1} : CensoredRecord{c, 0};
  }

  double cumulative_hazard(double t) const { return rate * t; }
};

template <typename Model>
SequentialCoverage simulate_sequential_violations(const Model& model, double eps0, double tau, std::size_t n_start,
                                                  std::size_t horizon, std::size_t replications, SeedSpec seed,
                                                  unsigned threads = 0) {
  detail::require(n_start >= 1 && horizon >= n_start, "sequential coverage: need 1 <= n_start <= horizon");
  SequentialCoverage out{std::vector<std::size_t>(replications, 0), n_start, horizon};
  parallel_for(replications, threads, [&](std::size_t r) {
    Engine engine = make_engine(seed, r);
    NelsonAalenStream stream(tau);
    const auto hazard = [&](double t) { return model.cumulative_hazard(t); };
    std::size_t last = 0;
    for (std::size_t n = 1; n <= horizon; ++n) {
      stream.add(model.draw(engine));
      if (n >= n_start && stream.sup_deviation(hazard) > eps0) last = n;
    }
    out.last_violation[r] = last;
  });
  return out;
}

struct BandCoverage {
  double coverage = 0.0;  // at band.recommended_m()
  double mc_se = 0.0;
  std::size_t m = 0;
  std::size_t horizon = 0;  // simultaneous coverage is only checked up to here
  std::size_t replications = 0;
  SequentialCoverage detail;
};

// Fraction of replicates with sup_{t<=tau} |Lambda_n - Lambda| <= eps0 for
// every n in [m, horizon_multiple * m_high].
template <typename Model>
BandCoverage simulate_band_coverage(const Model& model, const BandSpec& band, double tau, double horizon_multiple,
                                    std::size_t replications, SeedSpec seed, unsigned threads = 0) {
  detail::require(replications >= 500, "simulate_band_coverage: need at least 500 replications");
  detail::require(horizon_multiple >= 1.0, "simulate_band_coverage: horizon_multiple must be >= 1");
  const auto horizon = static_cast<std::size_t>(std::ceil(horizon_multiple * static_cast<double>(band.m_high)));
  auto seq = simulate_sequential_violations(model, band.eps0, tau, std::min(band.m_low, band.m_high), horizon,
                                            replications, seed, threads);
  const std::size_t m = band.recommended_m();
  return {seq.coverage_at(m), seq.se_at(m), m, horizon, replications, std::move(seq)};
}

// ---- CSV ingestion ---------------------------------------------------------

namespace detail {

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

inline double parse_double(std::string_view s, std::size_t line) {
  s = trim(s);
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size() || s.empty())
    throw InputError("cannot parse time '" + std::string(s) + "'", line);
  return v;
}

}  // namespace detail

// Header `time,event`; every following non-empty line is `decimal,0|1`.
inline std::vector<CensoredRecord> read_censored_csv(std::istream& in) {
  std::string line;
  std::size_t number = 0;
  if (!std::getline(in, line)) throw InputError("missing header", 1);
  ++number;
  if (detail::trim(line) != "time,event") throw InputError("header must be 'time,event'", number);
  std::vector<CensoredRecord> out;
  while (std::getline(in, line)) {
    ++number;
    const auto row = detail::trim(line);
    if (row.empty()) continue;
    const auto comma = row.find(',');
    if (comma == std::string_view::npos || row.find(',', comma + 1) != std::string_view::npos)
      throw InputError("expected two fields", number);
    const double time = detail::parse_double(row.substr(0, comma), number);
    if (!std::isfinite(time) || time < 0.0) throw InputError("time must be finite and non-negative", number);
    const auto ev = detail::trim(row.substr(comma + 1));
    if (ev != "0" && ev != "1") throw InputError("event must be 0 or 1", number);
    out.push_back({time, ev == "1" ? 1 : 0});
  }
  if (out.empty()) throw InputError("no records", number);
  return out;
}

}  // namespace lastexit
