#include <gtest/gtest.h>

#include <atomic>
#include <set>
#include <stdexcept>

#include "lastexit/grid.hpp"
#include "lastexit/rng.hpp"

using namespace lastexit;

TEST(Rng, SameTripleGivesSameStream) {
  Engine a = make_engine({7, 3}, 11);
  Engine b = make_engine({7, 3}, 11);
  for (int i = 0; i < 100; ++i) EXPECT_EQ(a(), b());
}

TEST(Rng, DistinctTriplesGiveDistinctSeeds) {
  std::set<std::uint64_t> seen;
  for (std::uint64_t m = 0; m < 8; ++m)
    for (std::uint64_t s = 0; s < 8; ++s)
      for (std::uint64_t r = 0; r < 8; ++r) seen.insert(derive_seed({m, s}, r));
  EXPECT_EQ(seen.size(), 512u);
}

TEST(Rng, SubstreamDiffersFromParentAndSiblings) {
  const SeedSpec parent{42, 0};
  EXPECT_NE(substream(parent, 1), parent);
  EXPECT_NE(substream(parent, 1), substream(parent, 2));
  EXPECT_EQ(substream(parent, 1), substream(parent, 1));
}

TEST(Rng, Uniform01StaysInUnitInterval) {
  Engine e = make_engine({1, 1});
  for (int i = 0; i < 10000; ++i) {
    const double u = uniform01(e);
    EXPECT_GE(u, 0.0);
    EXPECT_LT(u, 1.0);
  }
}

TEST(ParallelFor, VisitsEveryIndexOnce) {
  std::vector<std::atomic<int>> hits(1000);
  parallel_for(hits.size(), 4, [&](std::size_t i) { hits[i]++; });
  for (const auto& h : hits) EXPECT_EQ(h.load(), 1);
}

TEST(ParallelFor, RethrowsWorkerException) {
  EXPECT_THROW(parallel_for(100, 3, [](std::size_t i) {
                 if (i == 57) throw std::runtime_error("boom");
               }),
               std::runtime_error);
}

TEST(Grid1D, RejectsDuplicatesAndBadEnds) {
  EXPECT_THROW(Grid1D({0.5, 0.5, 1.0}), InvalidArgument);
  EXPECT_THROW(Grid1D({0.0, 1.0}), InvalidArgument);
  EXPECT_THROW(Grid1D({0.5, 0.9}), InvalidArgument);
  EXPECT_THROW(Grid1D(std::vector<double>{}), InvalidArgument);
  EXPECT_NO_THROW(Grid1D({1.0}));
}

TEST(Grid1D, UniformAndDyadic) {
  const auto g = Grid1D::dyadic(3);
  ASSERT_EQ(g.size(), 8u);
  EXPECT_DOUBLE_EQ(g[0], 0.125);
  EXPECT_EQ(g[7], 1.0);
  EXPECT_DOUBLE_EQ(g.spacing(0), 0.125);
  EXPECT_DOUBLE_EQ(g.spacing(5), 0.125);
}

TEST(SupAbs, Definition) {
  const std::vector<double> v{0.2, -0.7, 0.5};
  EXPECT_DOUBLE_EQ(sup_abs(v), 0.7);
  const SheetGrid zero{Grid1D::uniform(2), Grid1D::uniform(3), std::vector<double>(6, 0.0)};
  EXPECT_EQ(sup_abs(zero), 0.0);
}
