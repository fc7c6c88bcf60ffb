#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "lastexit/limit_laws.hpp"
#include "support/random_walk.hpp"

using namespace lastexit;

TEST(KsSeries, EndpointValues) {
  EXPECT_EQ(ks_abs_sup_cdf(0.0), 0.0);
  EXPECT_NEAR(ks_abs_sup_cdf(8.0), 1.0, 1e-12);
  EXPECT_EQ(ks_abs_sup_survival(0.0), 1.0);
}

TEST(KsSeries, AgreesWithThetaSeries) {
  for (double l = 0.1; l <= 6.0; l += 0.05) {
    EXPECT_NEAR(ks_abs_sup_cdf(l), oracle::theta_cdf(l), 1e-12) << "l=" << l;
    EXPECT_NEAR(ks_abs_sup_cdf(l) + ks_abs_sup_survival(l), 1.0, 1e-13);
  }
}

TEST(KsSeries, FarTailKeepsRelativePrecision) {
  // For large l the tail is 4 Q(l) (1 - O(e^{-4 l^2})).
  const double l = 7.0;
  const double q = 0.5 * std::erfc(l / std::sqrt(2.0));
  EXPECT_NEAR(ks_abs_sup_survival(l) / (4.0 * q), 1.0, 1e-10);
}

TEST(KsSeries, MatchesRandomWalkOracle) {
  const auto maxima = oracle::walk_abs_maxima(1 << 20, 100000, {20240101, 7});
  double below = 0;
  for (double m : maxima) below += m <= 1.0 ? 1.0 : 0.0;
  EXPECT_NEAR(ks_abs_sup_cdf(1.0), below / maxima.size(), 0.005);
  const EmpiricalDistribution dist(maxima);
  EXPECT_NEAR(ks_abs_sup_survival_inverse(0.5), dist.quantile(0.5), 0.01);
}

TEST(KsInverse, RoundTripAndOrder) {
  EXPECT_NEAR(ks_abs_sup_survival(ks_abs_sup_survival_inverse(0.05)), 0.05, 1e-10);
  for (double p : {0.001, 0.01, 0.2, 0.5, 0.9, 0.999})
    EXPECT_NEAR(ks_abs_sup_survival(ks_abs_sup_survival_inverse(p)), p, 1e-10);
  EXPECT_GT(ks_abs_sup_survival_inverse(0.01), ks_abs_sup_survival_inverse(0.10));
  EXPECT_THROW(ks_abs_sup_survival_inverse(0.0), InvalidArgument);
  EXPECT_THROW(ks_abs_sup_survival_inverse(1.0), InvalidArgument);
}

TEST(SandwichQuantiles, Conventions) {
  const auto a = sandwich_quantiles(0.1);
  EXPECT_DOUBLE_EQ(a.lower, ks_abs_sup_survival_inverse(0.1));
  EXPECT_DOUBLE_EQ(a.upper, ks_abs_sup_survival_inverse(0.05));
  const auto lit = sandwich_quantiles(0.1, SizingConvention::literal_sqrt);
  EXPECT_DOUBLE_EQ(lit.lower, ks_abs_sup_survival_inverse(std::sqrt(0.1)));
  EXPECT_LT(a.lower, a.upper);
}

TEST(Borell, DirectValues) {
  EXPECT_NEAR(borell_tail_bound(8.0, 1.0), 2.0 * std::exp(-1.0), 1e-15);
  EXPECT_NEAR(borell_tail_bound(8.0 * 3.0, 3.0), 0.7357588823428847, 1e-15);
  EXPECT_LT(borell_tail_bound(1e4, 1.0), 1e-300);
  EXPECT_THROW(borell_tail_bound(0.0, 1.0), InvalidArgument);
  EXPECT_THROW(borell_tail_bound(1.0, -1.0), InvalidArgument);
}

TEST(Borell, DominatesBrownianTail) {
  const auto g = Grid1D::dyadic(8);
  const auto sups = simulate_replicates(brownian_sup_sampler(g), 100000, {30, 1}, 0);
  std::vector<double> sq(sups);
  for (double& x : sq) x *= x;
  const double m2 = mean_with_se(sq).mean;
  for (double lambda : {2.0, 4.0, 8.0}) {
    double tail = 0;
    for (double x : sq) tail += x >= lambda ? 1.0 : 0.0;
    EXPECT_GE(borell_tail_bound(lambda, m2), tail / sq.size());
  }
}

TEST(SecondMoment, ZeroProcessAndSeedStability) {
  const auto zero = [](Engine&) { return 0.0; };
  EXPECT_EQ(estimate_sup_second_moment(zero, 1000, {1, 1}).mean, 0.0);
  const auto g = Grid1D::dyadic(8);
  const auto a = estimate_sup_second_moment(brownian_sup_sampler(g), 20000, {31, 1});
  const auto b = estimate_sup_second_moment(brownian_sup_sampler(g), 20000, {31, 2});
  EXPECT_LT(std::abs(a.mean - b.mean), 4.0 * std::hypot(a.se, b.se));
  EXPECT_THROW(estimate_sup_second_moment(zero, 999, {1, 1}), InvalidArgument);
}

TEST(SecondMoment, VarianceFallsLikeOneOverReplications) {
  // Slope of log Var(estimate) against log n over 20 batches per n.
  const auto g = Grid1D::dyadic(7);
  std::vector<double> x, y;
  for (std::size_t n : {1000, 2000, 4000, 8000}) {
    std::vector<double> means;
    for (std::uint64_t batch = 0; batch < 20; ++batch)
      means.push_back(estimate_sup_second_moment(brownian_sup_sampler(g), n, {32 + n, batch}).mean);
    x.push_back(std::log(static_cast<double>(n)));
    y.push_back(std::log(sample_variance(means)));
  }
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i] / x.size();
    my += y[i] / y.size();
  }
  double sxy = 0, sxx = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
  }
  EXPECT_NEAR(sxy / sxx, -1.0, 0.5);
}

TEST(Adler2d, DecayAndMonotonicity) {
  EXPECT_LT(adler_2d_bound(10.0), 1e-6);
  double previous = 1.0;
  for (double l = 0.5; l <= 5.0 + 1e-9; l += 0.01) {
    const double v = adler_2d_bound(l);
    EXPECT_LE(v, previous + 1e-15) << "l=" << l;
    previous = v;
  }
}

TEST(Adler2d, DominatesQuadrantKieferTail) {
  // Quadrant indicators 1{u <= a, v <= b} under Uniform[0,1]^2 on an 8x8
  // lattice of corners: cov = (a ^ a')(b ^ b') - a b a' b'.
  const int side = 8;
  const int k = side * side;
  Eigen::MatrixXd c(k, k);
  for (int i = 0; i < k; ++i)
    for (int j = 0; j < k; ++j) {
      const double a1 = (i / side + 1.0) / side, b1 = (i % side + 1.0) / side;
      const double a2 = (j / side + 1.0) / side, b2 = (j % side + 1.0) / side;
      c(i, j) = std::min(a1, a2) * std::min(b1, b2) - a1 * b1 * a2 * b2;
    }
  const auto sups = simulate_replicates(kiefer_sup_sampler(Grid1D::dyadic(8), CovMatrix(c)), 4000, {33, 1}, 0);
  for (double lambda : {1.5, 2.0, 3.0}) {
    double tail = 0;
    for (double s : sups) tail += s * s >= lambda ? 1.0 : 0.0;
    const double p = tail / sups.size();
    EXPECT_GE(adler_2d_bound(lambda) + 3.0 * std::sqrt(p * (1 - p) / sups.size()), p) << lambda;
  }
}

TEST(SheetQuantile, InsideSandwichAndMonotone) {
  const auto g = Grid1D::dyadic(7);
  const auto dist = simulate_sheet_sups(g, g, 4000, {34, 1});
  for (double alpha : {0.05, 0.5}) {
    const auto q = upper_quantile(dist, alpha, g.size());
    const auto check = check_quantile_sandwich(q);
    EXPECT_TRUE(check.holds) << alpha << " " << q.point << " [" << check.lower << "," << check.upper << "]";
  }
  EXPECT_GT(upper_quantile(dist, 0.01, g.size()).point, upper_quantile(dist, 0.10, g.size()).point);
  EXPECT_THROW(sheet_sup_quantile(0.1, g, g, 999, {1, 1}), InvalidArgument);
}

TEST(SheetQuantile, DirectCallMatchesPool) {
  const auto g = Grid1D::dyadic(5);
  const auto dist = simulate_sheet_sups(g, g, 1000, {35, 1}, 1);
  const auto q = sheet_sup_quantile(0.2, g, g, 1000, {35, 1}, 3);
  EXPECT_EQ(q.point, upper_quantile(dist, 0.2, g.size()).point);
}

TEST(VarianceMeasure, ScalingAndIdentity) {
  const auto g = Grid1D::dyadic(6);
  const auto base = brownian_sup_sampler(g);
  const auto scaled = [&](Engine& e) { return 3.0 * base(e); };
  EXPECT_NEAR(variance_measure_sigma2(scaled, base, 1000, {36, 1}), 9.0, 1e-12);
  EXPECT_DOUBLE_EQ(variance_measure_sigma2(base, base, 1000, {36, 2}), 1.0);
}

TEST(VarianceMeasure, MeanFunctionalRecoversVariance) {
  const auto g = Grid1D::dyadic(8);
  const double sigma2 = 2.5;
  const CovMatrix cov(Eigen::MatrixXd::Constant(1, 1, sigma2));
  const double v = variance_measure_sigma2(kiefer_sup_sampler(g, cov), brownian_sup_sampler(g), 2000, {37, 1});
  EXPECT_NEAR(v, sigma2, 1e-9 * sigma2);
}

TEST(GridBias, Allowance) {
  EXPECT_NEAR(grid_bias_allowance(1), 0.5826, 1e-4);
  EXPECT_NEAR(grid_bias_allowance(512) * std::sqrt(512.0), grid_bias_allowance(1), 1e-15);
}
