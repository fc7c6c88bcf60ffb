// Command-line front end: limit-law tables, last-exit simulations, the R(1,b)
// curve, Nelson-Aalen band sizing, SAA sizing and the acceptance checks.
//
// Exit codes
//   0  success
//   1  verify: at least one criterion failed
//   2  usage error or unknown subcommand
//   3  input file unreadable or malformed
//   4  requested work exceeds the replication/grid budget
//   5  invalid argument or numeric failure
//   6  output path not writable

#include <charconv>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "acceptance/acceptance_suite.hpp"
#include "lastexit/lastexit.hpp"

namespace {

using namespace lastexit;

enum Exit { kOk = 0, kVerifyFailed = 1, kUsage = 2, kInput = 3, kBudget = 4, kInvalid = 5, kOutput = 6 };

constexpr std::size_t kMaxReps = 10'000'000;
constexpr double kMaxDraws = 1e11;  // normals or uniforms per invocation

struct OutputError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct UnreadableInput : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct Config {
  std::uint64_t seed = 1;
  std::size_t reps = 0;  // 0 picks the subcommand default
  int grid = 12;         // log2 of the grid size
  double eps = 0.02;
  double alpha = 0.1;
  double eps0 = 0.15;
  double tau = 1.0;
  std::string out;
  bool paper_literal = false;
  unsigned threads = 0;
};

void check_budget(std::size_t reps, double draws_per_rep) {
  if (reps > kMaxReps) throw BudgetExceeded("replications " + std::to_string(reps) + " exceed " + std::to_string(kMaxReps));
  const double draws = static_cast<double>(reps) * draws_per_rep;
  if (draws > kMaxDraws) {
    char buf[96];
    std::snprintf(buf, sizeof buf, "about %.3g random draws requested, budget is %.0e", draws, kMaxDraws);
    throw BudgetExceeded(buf);
  }
}

SizingConvention convention(const Config& c) {
  return c.paper_literal ? SizingConvention::literal_sqrt : SizingConvention::alpha_sandwich;
}

// ---- output ---------------------------------------------------------------

std::string num(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\r\n") == std::string::npos) return s;
  std::string q = "\"";
  for (char ch : s) {
    if (ch == '"') q += '"';
    q += ch;
  }
  return q + '"';
}

class CsvWriter {
 public:
  explicit CsvWriter(std::ostream& os) : os_(os) {}
  void row(const std::vector<std::string>& fields) {
    for (std::size_t i = 0; i < fields.size(); ++i) os_ << (i ? "," : "") << csv_field(fields[i]);
    os_ << "\r\n";
  }

 private:
  std::ostream& os_;
};

// Opens --out up front so an unwritable path fails before any simulation.
class Sink {
 public:
  explicit Sink(const std::string& path) {
    if (path.empty() || path == "-") return;
    file_ = std::make_unique<std::ofstream>(path, std::ios::binary | std::ios::trunc);
    if (!*file_) throw OutputError("cannot write '" + path + "'");
  }
  std::ostream& stream() { return file_ ? *file_ : std::cout; }
  void finish() {
    stream().flush();
    if (!stream()) throw OutputError("write failed");
  }

 private:
  std::unique_ptr<std::ofstream> file_;
};

std::vector<std::string> meta_header() { return {"seed", "grid", "reps", "version"}; }
std::vector<std::string> meta(const Config& c, std::size_t grid_points, std::size_t reps) {
  return {std::to_string(c.seed), std::to_string(grid_points), std::to_string(reps), kVersion};
}

template <typename... V>
std::vector<std::string> join(std::vector<std::string> a, const V&... rest) {
  (a.insert(a.end(), rest.begin(), rest.end()), ...);
  return a;
}

// ---- subcommands ----------------------------------------------------------

int run_limits(const Config& c) {
  Sink sink(c.out);
  CsvWriter csv(sink.stream());
  csv.row(join({"lambda", "cdf", "survival", "sheet_tail_lower", "sheet_tail_upper", "adler2d_sq_tail"}, meta_header()));
  for (int k = 1; k <= 80; ++k) {
    const double l = k * 0.05;
    const auto s = reflection_sandwich(l);
    csv.row(join({num(l), num(ks_abs_sup_cdf(l)), num(s.lower), num(s.lower), num(s.upper), num(adler_2d_bound(l * l))},
                 meta(c, 0, 0)));
  }
  sink.finish();
  const auto q = sandwich_quantiles(c.alpha, convention(c));
  std::cerr << "alpha " << num(c.alpha) << ": sheet quantile in [" << num(q.lower) << ", " << num(q.upper) << "]\n";
  return kOk;
}

struct SimArgs {
  std::string estimator = "mean";
  std::vector<double> b{1.53, 2.0};
  double horizon_c = 50.0;
  double s_max = 50.0;
  std::size_t class_points = 32;
};

int run_lasttime(const Config& c, const SimArgs& a) {
  const auto est = parse_estimator(a.estimator);
  const std::size_t reps = c.reps ? c.reps : 1000;
  detail::require(c.grid >= 2 && c.grid <= 20, "--grid must lie in [2, 20]");
  EstimatorOptions opt;
  opt.tau = c.tau;
  opt.class_points = a.class_points;
  const std::size_t horizon = default_horizon(c.eps, a.horizon_c);
  const double h = static_cast<double>(horizon);
  const std::size_t points = std::size_t{1} << c.grid;
  const double k = (est == Estimator::ecdf_sup || est == Estimator::nelson_aalen) ? static_cast<double>(a.class_points) : 1.0;
  check_budget(reps, est == Estimator::ecdf_sup || est == Estimator::nelson_aalen ? h * h : h);
  check_budget(reps, static_cast<double>(points) * k * k);

  std::vector<Band> bands;
  for (double b : a.b) bands.push_back({1.0, b});
  Sink sink(c.out);
  const auto setup = estimator_setup(est, opt);
  const SeedSpec root{c.seed, 0};
  const auto finite = simulate_trajectory_rows(setup.trajectory, c.eps, horizon, reps, substream(root, 1), bands, c.threads);
  const auto unit = Grid1D::dyadic(static_cast<unsigned>(c.grid));
  const LimitStatsOptions lopt{1e-4, c.threads};
  std::vector<DistributionRow> limit;
  if (est == Estimator::mean || est == Estimator::median) {
    limit = simulate_limit_stats(ScaledBrownianNormSampler(std::sqrt(setup.sigma2), unit, a.s_max), reps,
                                 substream(root, 2), bands, lopt);
  } else {
    limit = simulate_limit_stats(KieferNormSampler(estimator_limit_covariance(est, opt), unit, a.s_max), reps,
                                 substream(root, 2), bands, lopt);
  }

  CsvWriter csv(sink.stream());
  csv.row(join({"scope", "estimator", "eps", "statistic", "band_a", "band_b", "q05", "q50", "q95", "mc_se",
                "n_defined", "censored_fraction"},
               meta_header()));
  const auto emit = [&](const std::string& scope, const std::vector<DistributionRow>& rows, std::size_t grid_points) {
    for (const auto& r : rows)
      csv.row(join({scope, a.estimator, scope == "finite" ? num(c.eps) : "0", r.statistic,
                    std::isnan(r.band_a) ? "" : num(r.band_a), std::isnan(r.band_b) ? "" : num(r.band_b), num(r.q05),
                    num(r.q50), num(r.q95), num(r.mc_se), std::to_string(r.reps), num(r.censored_fraction)},
                   meta(c, grid_points, reps)));
  };
  emit("finite", finite, horizon);
  emit("limit", limit, points);
  sink.finish();
  return kOk;
}

int run_figure_r(const Config& c, double s_max) {
  const std::size_t reps = c.reps ? c.reps : 10000;
  detail::require(c.grid >= 2 && c.grid <= 20, "--grid must lie in [2, 20]");
  const std::size_t points = std::size_t{1} << c.grid;
  check_budget(reps, static_cast<double>(points) * 200.0);
  Sink sink(c.out);
  std::vector<Band> bands;
  for (int k = 101; k <= 300; ++k) bands.push_back({1.0, k / 100.0});
  const ScaledBrownianNormSampler sampler(1.0, Grid1D::dyadic(static_cast<unsigned>(c.grid)), s_max);
  const auto rows = simulate_limit_stats(sampler, reps, substream({c.seed, 0}, 3), bands, {1e-4, c.threads});
  CsvWriter csv(sink.stream());
  csv.row(join({"b", "q05", "q50", "q95", "mc_se", "n_defined"}, meta_header()));
  for (const auto& r : rows) {
    if (r.statistic != "R") continue;
    char b[16];
    std::snprintf(b, sizeof b, "%.2f", r.band_b);
    csv.row(join({b, num(r.q05), num(r.q50), num(r.q95), num(r.mc_se), std::to_string(r.reps)}, meta(c, points, reps)));
  }
  sink.finish();
  return kOk;
}

int run_confset(const Config& c, const std::string& input, const std::string& hazard_out) {
  std::ifstream in(input, std::ios::binary);
  if (!in) throw UnreadableInput("cannot open '" + input + "'");
  auto records = read_censored_csv(in);
  Sink sink(c.out);
  std::optional<Sink> hazard_sink;
  if (!hazard_out.empty()) hazard_sink.emplace(hazard_out);
  const CensoredSample sample(std::move(records), c.tau);
  const double s2 = sigma2_hat(sample);
  if (!(s2 > 0.0)) throw NumericError("estimated sigma^2 is zero: no usable events before tau");
  const auto band = band_size(s2, c.eps0, c.alpha, convention(c));
  nlohmann::ordered_json j;
  j["sigma2"] = s2;
  j["m_low"] = band.m_low;
  j["m_high"] = band.m_high;
  j["recommended_m"] = band.recommended_m();
  j["eps0"] = c.eps0;
  j["alpha"] = c.alpha;
  j["tau"] = c.tau;
  j["n"] = sample.size();
  j["metadata"] = {{"input", input},
                   {"convention", c.paper_literal ? "literal_sqrt" : "alpha_sandwich"},
                   {"version", kVersion}};
  sink.stream() << j.dump(2) << "\n";
  sink.finish();
  if (hazard_sink) {
    const auto curve = nelson_aalen(sample);
    CsvWriter csv(hazard_sink->stream());
    csv.row({"time", "cumulative_hazard"});
    for (std::size_t i = 0; i < curve.jump_times.size() && curve.jump_times[i] <= c.tau; ++i)
      csv.row({num(curve.jump_times[i]), num(curve.cumulative[i])});
    hazard_sink->finish();
  }
  return kOk;
}

struct SaaArgs {
  std::string problem = "newsvendor";
  double eps = 0.1;
  double lambda = 0.5;
  double horizon_multiple = 5.0;
  std::optional<double> c1;
  double c2 = 1.0;
};

int run_saa(Config c, const SaaArgs& a) {
  c.eps = a.eps;
  const std::size_t reps = c.reps ? c.reps : 2000;
  const auto problem = toy_problem(a.problem, a.lambda);
  const auto form = c.paper_literal ? VarianceForm::literal : VarianceForm::symmetric_deviation;
  const auto opt = exact_optimum(problem);
  const auto s2 = exact_sigma2(problem, opt.x, form);
  if (s2.degenerate) throw NumericError("zero asymptotic variance at the optimum");
  const double n_req = static_cast<double>(sample_size_n(c.alpha, c.eps, s2.sigma2, convention(c)));
  check_budget(reps, n_req * a.horizon_multiple);
  Sink sink(c.out);
  const auto cov = verify_sequential_coverage(problem, c.alpha, c.eps, a.horizon_multiple, reps,
                                              substream({c.seed, 0}, 4), convention(c), c.threads, form);
  nlohmann::ordered_json j;
  j["problem"] = a.problem;
  j["lambda"] = a.lambda;
  j["x_star"] = opt.x;
  j["v"] = opt.v;
  j["sigma2"] = cov.sigma2;
  j["N"] = cov.n_required;
  j["shapiro_n"] = shapiro_size(a.c1.value_or(cov.sigma2), a.c2, c.alpha, c.eps);
  j["coverage"] = cov.coverage;
  j["mc_se"] = cov.mc_se;
  j["horizon"] = cov.horizon;
  j["reps"] = reps;
  j["alpha"] = c.alpha;
  j["eps"] = c.eps;
  j["metadata"] = {{"seed", c.seed},
                   {"convention", c.paper_literal ? "literal_sqrt" : "alpha_sandwich"},
                   {"variance_form", c.paper_literal ? "literal" : "symmetric_deviation"},
                   {"c1", a.c1.value_or(cov.sigma2)},
                   {"c2", a.c2},
                   {"version", kVersion}};
  sink.stream() << j.dump(2) << "\n";
  sink.finish();
  return kOk;
}

int run_verify(const Config& c, const std::vector<int>& only) {
  Sink sink(c.out);
  acceptance::Options o;
  o.seed = c.seed;
  o.threads = c.threads;
  const auto results = acceptance::run(o, std::set<int>(only.begin(), only.end()), sink.stream());
  bool all = true;
  for (const auto& r : results) all = all && r.pass;
  sink.stream() << (all ? "ALL PASS" : "SOME FAILED") << "\n";
  sink.finish();
  return all ? kOk : kVerifyFailed;
}

void common_flags(CLI::App* sub, Config& c, bool sim) {
  sub->add_option("--seed", c.seed, "Master seed");
  sub->add_option("--out", c.out, "Output file (default stdout)");
  sub->add_option("--threads", c.threads, "Worker threads (0 = all cores)");
  if (sim) {
    sub->add_option("--reps", c.reps, "Replications");
    sub->add_option("--grid", c.grid, "log2 of the grid size");
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Last-exit times, limit laws and sequential sizing"};
  app.require_subcommand(1);
  Config c;
  SimArgs sim;
  SaaArgs saa;
  std::string input, hazard_out;
  std::vector<int> only;
  double figure_smax = 50.0;

  auto* limits = app.add_subcommand("limits", "sup|B| distribution table and sheet tail bounds");
  common_flags(limits, c, false);
  limits->add_option("--alpha", c.alpha, "Level for the sandwich quantiles");
  limits->add_flag("--paper-literal", c.paper_literal, "Use sqrt(alpha) sizing");

  auto* lasttime = app.add_subcommand("lasttime-sim", "Tail statistics of an estimator and of its limit");
  common_flags(lasttime, c, true);
  lasttime->add_option("--estimator", sim.estimator, "mean | median | ecdf-sup | nelson-aalen");
  lasttime->add_option("--eps", c.eps, "Error level");
  lasttime->add_option("--tau", c.tau, "Nelson-Aalen horizon");
  lasttime->add_option("--b", sim.b, "Upper band ends b for R(1,b)");
  lasttime->add_option("--horizon-c", sim.horizon_c, "Horizon c / eps^2");
  lasttime->add_option("--smax", sim.s_max, "Upper end of the limit s-range");
  lasttime->add_option("--class-points", sim.class_points, "Function-class size for sup-norm limits");

  auto* figure = app.add_subcommand("figure-r", "Quantiles of R(1,b) for b in 1.01..3.00");
  common_flags(figure, c, true);
  figure->add_option("--smax", figure_smax, "Upper end of the limit s-range");

  auto* confset = app.add_subcommand("confset", "Size a sequential band for the cumulative hazard");
  common_flags(confset, c, false);
  confset->add_option("--in", input, "CSV with header time,event")->required();
  confset->add_option("--hazard-out", hazard_out, "Also write the Nelson-Aalen curve");
  confset->add_option("--eps0", c.eps0, "Band half-width");
  confset->add_option("--alpha", c.alpha, "Level");
  confset->add_option("--tau", c.tau, "Horizon");
  confset->add_flag("--paper-literal", c.paper_literal, "Use sqrt(alpha) sizing");

  auto* saa_cmd = app.add_subcommand("saa", "SAA sample size and sequential coverage on a toy problem");
  common_flags(saa_cmd, c, true);
  saa_cmd->add_option("--problem", saa.problem, "newsvendor | absdev");
  saa_cmd->add_option("--lambda", saa.lambda, "Semideviation weight in [0,1]");
  saa_cmd->add_option("--eps", saa.eps, "Accuracy");
  saa_cmd->add_option("--alpha", c.alpha, "Level");
  saa_cmd->add_option("--horizon-multiple", saa.horizon_multiple, "Coverage checked up to this multiple of N");
  saa_cmd->add_option("--c1", saa.c1, "Constant C1 (default sigma^2)");
  saa_cmd->add_option("--c2", saa.c2, "Constant C2");
  saa_cmd->add_flag("--paper-literal", c.paper_literal, "sqrt(alpha) sizing and the literal variance form");

  auto* verify = app.add_subcommand("verify", "Run the acceptance criteria");
  common_flags(verify, c, false);
  verify->add_option("--only", only, "Criterion ids to run")->delimiter(',');

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kUsage;
  }

  try {
    if (*limits) return run_limits(c);
    if (*lasttime) return run_lasttime(c, sim);
    if (*figure) return run_figure_r(c, figure_smax);
    if (*confset) return run_confset(c, input, hazard_out);
    if (*saa_cmd) return run_saa(c, saa);
    if (*verify) return run_verify(c, only);
  } catch (const InputError& e) {
    std::cerr << "input error: " << e.what() << "\n";
    return kInput;
  } catch (const UnreadableInput& e) {
    std::cerr << "input error: " << e.what() << "\n";
    return kInput;
  } catch (const BudgetExceeded& e) {
    std::cerr << "budget exceeded: " << e.what() << "\n";
    return kBudget;
  } catch (const OutputError& e) {
    std::cerr << "output error: " << e.what() << "\n";
    return kOutput;
  } catch (const std::invalid_argument& e) {
    std::cerr << "invalid argument: " << e.what() << "\n";
    return kInvalid;
  } catch (const NumericError& e) {
    std::cerr << "numeric error: " << e.what() << "\n";
    return kInvalid;
  }
  return kUsage;
}
