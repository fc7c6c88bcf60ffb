#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "lastexit/gp_sim.hpp"
#include "lastexit/limit_laws.hpp"
#include "lastexit/stats.hpp"

using namespace lastexit;

namespace {

double covariance(const std::vector<double>& x, const std::vector<double>& y) {
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= x.size();
  my /= y.size();
  double c = 0;
  for (std::size_t i = 0; i < x.size(); ++i) c += (x[i] - mx) * (y[i] - my);
  return c / (x.size() - 1.0);
}

constexpr std::size_t kReps = 100000;

}  // namespace

TEST(BrownianMotion, SinglePointIsStandardNormal) {
  const Grid1D g({1.0});
  std::vector<double> v(kReps);
  for (std::size_t r = 0; r < kReps; ++r) v[r] = simulate_brownian_motion(g, SeedSpec{r, 1}).values[0];
  EXPECT_NEAR(sample_variance(v), 1.0, 0.02);
}

TEST(BrownianMotion, Deterministic) {
  const auto g = Grid1D::dyadic(6);
  EXPECT_EQ(simulate_brownian_motion(g, SeedSpec{5, 9}).values, simulate_brownian_motion(g, SeedSpec{5, 9}).values);
}

TEST(BrownianMotion, CovarianceIsMinimum) {
  const Grid1D g({0.5, 1.0});
  std::vector<double> a(kReps), b(kReps);
  for (std::size_t r = 0; r < kReps; ++r) {
    Engine e = make_engine({2, 0}, r);
    const auto p = simulate_brownian_motion(g, e);
    a[r] = p.values[0];
    b[r] = p.values[1];
  }
  EXPECT_NEAR(covariance(a, b), 0.5, 0.02);
}

TEST(BrownianBridge, PinnedAndVariance) {
  const Grid1D g({0.25, 0.5, 1.0});
  std::vector<double> mid(kReps);
  for (std::size_t r = 0; r < kReps; ++r) {
    Engine e = make_engine({3, 0}, r);
    const auto p = simulate_brownian_bridge(g, e);
    EXPECT_EQ(p.values.back(), 0.0);
    mid[r] = p.values[1];
  }
  EXPECT_NEAR(sample_variance(mid), 0.25, 0.01);
  EXPECT_EQ(simulate_brownian_bridge(g, SeedSpec{4, 4}).values, simulate_brownian_bridge(g, SeedSpec{4, 4}).values);
}

TEST(BrownianSheet, ProductCovariance) {
  const Grid1D s({0.5, 1.0});
  const Grid1D t({0.5, 1.0});
  std::vector<double> corner(kReps), half(kReps);
  for (std::size_t r = 0; r < kReps; ++r) {
    Engine e = make_engine({4, 0}, r);
    const auto sheet = simulate_brownian_sheet(s, t, e);
    corner[r] = sheet.at(1, 1);
    half[r] = sheet.at(0, 1);
  }
  EXPECT_NEAR(sample_variance(corner), 1.0, 0.02);
  EXPECT_NEAR(covariance(half, corner), 0.5, 0.02);
}

TEST(BrownianSheet, RowAtUnitTimeIsBrownianInS) {
  const auto s = Grid1D::uniform(4);
  const Grid1D t({0.5, 1.0});
  std::vector<double> inc(20000);
  for (std::size_t r = 0; r < inc.size(); ++r) {
    Engine e = make_engine({5, 0}, r);
    const auto sheet = simulate_brownian_sheet(s, t, e);
    inc[r] = sheet.at(2, 1) - sheet.at(1, 1);
  }
  EXPECT_NEAR(sample_variance(inc), 0.25, 0.01);
}

TEST(BrownianSheet, BudgetAndShape) {
  const auto big = Grid1D::dyadic(13);
  Engine e = make_engine({1, 1});
  EXPECT_THROW(simulate_brownian_sheet(big, big, e), BudgetExceeded);
  EXPECT_THROW(simulate_brownian_sheet(Grid1D({1.0}), Grid1D::uniform(4), e), InvalidArgument);
}

TEST(BrownianSheet, StreamingSupMatchesMaterialised) {
  const auto s = Grid1D::uniform(16);
  const auto t = Grid1D::uniform(8);
  Engine e1 = make_engine({6, 1});
  Engine e2 = make_engine({6, 1});
  EXPECT_EQ(sup_abs(simulate_brownian_sheet(s, t, e1)), sheet_sup_abs(s, t, e2));
}

TEST(CovMatrix, RejectsNonPsdWithEigenvalue) {
  Eigen::MatrixXd m(2, 2);
  m << 1, 2, 2, 1;
  try {
    CovMatrix c(m);
    FAIL() << "expected NotPositiveSemidefinite";
  } catch (const NotPositiveSemidefinite& err) {
    EXPECT_NEAR(err.eigenvalue(), -1.0, 1e-12);
  }
}

TEST(CovMatrix, FactorReproducesEntries) {
  const std::vector<double> t{0.2, 0.5, 0.9};
  const auto c = CovMatrix::uniform_ecdf(t);
  EXPECT_LT((c.factor() * c.factor().transpose() - c.entries()).cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_NEAR(c.entries()(0, 2), 0.2 - 0.18, 1e-15);
}

TEST(CovMatrix, FromFunctionClassMatchesEcdf) {
  // Indicators 1{x <= t_i} on a 4-point uniform support.
  Eigen::MatrixXd f(2, 4);
  f << 1, 0, 0, 0, 1, 1, 1, 0;
  const std::vector<double> w(4, 0.25);
  const auto c = CovMatrix::from_function_class(f, w);
  EXPECT_NEAR(c.entries()(0, 0), 0.25 * 0.75, 1e-15);
  EXPECT_NEAR(c.entries()(0, 1), 0.25 - 0.25 * 0.75, 1e-15);
}

TEST(KieferMuller, ZeroCovarianceGivesZeroField) {
  const CovMatrix zero(Eigen::MatrixXd::Zero(3, 3));
  const auto field = simulate_kiefer_muller(Grid1D::uniform(10), zero, SeedSpec{1, 2});
  EXPECT_EQ(sup_abs(field), 0.0);
}

TEST(KieferMuller, ScalarUnitCovarianceIsBrownianInLaw) {
  const auto g = Grid1D::dyadic(8);
  const CovMatrix unit(Eigen::MatrixXd::Identity(1, 1));
  const auto kiefer = simulate_replicates(kiefer_sup_sampler(g, unit), 10000, {10, 1}, 1);
  const auto brown = simulate_replicates(brownian_sup_sampler(g), 10000, {10, 2}, 1);
  EXPECT_LT(ks_distance(kiefer, brown), 0.02);
}

TEST(KieferMuller, CovarianceAcrossTimeAndClass) {
  Eigen::MatrixXd m(2, 2);
  m << 1.0, 0.6, 0.6, 2.0;
  const CovMatrix cov(m);
  const Grid1D g({0.5, 1.0});
  std::vector<double> a(kReps), b(kReps);
  for (std::size_t r = 0; r < kReps; ++r) {
    Engine e = make_engine({11, 0}, r);
    const auto field = simulate_kiefer_muller(g, cov, e);
    a[r] = field.values(0, 0);
    b[r] = field.values(1, 1);
  }
  EXPECT_NEAR(covariance(a, b), 0.5 * 0.6, 0.02);
}

TEST(SupAbs, RefinementNeverDecreases) {
  // The dyadic(6) grid restricted to even indices is dyadic(5) with the
  // same Brownian values.
  const auto fine = Grid1D::dyadic(6);
  for (std::uint64_t r = 0; r < 50; ++r) {
    const auto p = simulate_brownian_motion(fine, SeedSpec{r, 3});
    std::vector<double> coarse;
    for (std::size_t i = 1; i < p.values.size(); i += 2) coarse.push_back(p.values[i]);
    EXPECT_GE(sup_abs(p), sup_abs(coarse));
  }
}
