#include "pwc/optimal1d.hpp"

#include "oracles.hpp"

#include <gtest/gtest.h>

#include <random>

using namespace pwc;

namespace {

Histogram random_histogram(std::mt19937_64& rng, std::size_t max_bins, std::int64_t max_count) {
  const std::size_t bins = 1 + rng() % max_bins;
  std::vector<HistogramBin> b;
  std::int64_t value = static_cast<std::int64_t>(rng() % 5);
  for (std::size_t i = 0; i < bins; ++i) {
    b.push_back({value, 1 + static_cast<std::int64_t>(rng() % static_cast<std::uint64_t>(max_count))});
    value += 1 + static_cast<std::int64_t>(rng() % 30);
  }
  return Histogram(b);
}

}  // namespace

TEST(Histogram, CountsDistinctValues) {
  const Histogram h = histogram(oracle::gray(2, 2, {0, 0, 2, 2}));
  ASSERT_EQ(h.size(), 2u);
  EXPECT_EQ(h.bins()[0], (HistogramBin{0, 2}));
  EXPECT_EQ(h.bins()[1], (HistogramBin{2, 2}));
  EXPECT_EQ(h.pixel_count(), 4);
  EXPECT_EQ(h.find(2), 1u);
  EXPECT_EQ(h.find(1), 2u);
}

TEST(Histogram, ConstantImageHasOneBin) { EXPECT_EQ(histogram(oracle::gray(3, 1, {7, 7, 7})).size(), 1u); }

TEST(Histogram, EightBitImageHasAtMost256Bins) {
  std::mt19937_64 rng(1);
  const Histogram h = histogram(oracle::random_gray(rng, 64, 64, 0, 255));
  EXPECT_LE(h.size(), 256u);
  EXPECT_EQ(h.pixel_count(), 64 * 64);
}

TEST(Histogram, RejectsEmptyAndMultichannelInput) {
  EXPECT_THROW(histogram(std::vector<std::int64_t>{}), PreconditionError);
  IntImage color{1, 1, PixelMatrix<std::int64_t>::Zero(1, 3)};
  EXPECT_THROW(histogram(color), DimensionMismatch);
  EXPECT_THROW(Histogram({{2, 1}, {1, 1}}), PreconditionError);
  EXPECT_THROW(Histogram({{1, 0}}), PreconditionError);
}

TEST(PrefixStats, IntervalErrors) {
  const PrefixStats p(histogram(oracle::gray(2, 2, {0, 0, 2, 2})));
  EXPECT_EQ(p.sse(0, 1), 4.0);
  EXPECT_EQ(p.sse(0, 0), 0.0);
  EXPECT_EQ(p.sse(1, 1), 0.0);
  EXPECT_EQ(PrefixStats(histogram(oracle::gray(2, 1, {5, 5}))).sse(0, 0), 0.0);
}

TEST(OptimalSequence, ThreeValues) {
  const Histogram h = histogram(oracle::gray(3, 1, {0, 1, 4}));
  const OptimalSolution s = optimal_sequence(h, 10);
  EXPECT_EQ(s.max_clusters, 3u);
  EXPECT_EQ(*s.error.error_at(2), 0.5);
  EXPECT_EQ(s.cuts_for(2), (Cuts{2}));
  EXPECT_EQ(*s.error.error_at(3), 0.0);
  EXPECT_EQ(oracle::best_clustering(oracle::gray(3, 1, {0, 1, 4}), 2), 0.5);
}

TEST(OptimalSequence, SingleClusterIsTotalError) {
  const OptimalSolution s = optimal_sequence(histogram(oracle::gray(2, 2, {0, 0, 2, 2})), 1);
  ASSERT_EQ(s.error.size(), 1u);
  EXPECT_EQ(*s.error.error_at(1), 4.0);
  EXPECT_TRUE(s.cuts_for(1).empty());
}

TEST(OptimalSequence, EndsAtZeroWithOneClusterPerValue) {
  std::mt19937_64 rng(3);
  const Histogram h = random_histogram(rng, 12, 20);
  const OptimalSolution s = optimal_sequence(h, 1000);
  EXPECT_EQ(s.max_clusters, h.size());
  EXPECT_EQ(*s.error.error_at(h.size()), 0.0);
}

TEST(OptimalSequence, StrictlyDecreasing) {
  std::mt19937_64 rng(4);
  for (int t = 0; t < 50; ++t) {
    const OptimalSolution s = optimal_sequence(random_histogram(rng, 30, 50), 1000);
    for (std::size_t g = 2; g <= s.max_clusters; ++g) EXPECT_LT(*s.error.error_at(g), *s.error.error_at(g - 1));
  }
}

TEST(OptimalSequence, CutsReproduceTheError) {
  std::mt19937_64 rng(8);
  for (int t = 0; t < 50; ++t) {
    const Histogram h = random_histogram(rng, 20, 9);
    const PrefixStats prefix(h);
    const OptimalSolution s = optimal_sequence(h, 1000);
    for (std::size_t g = 1; g <= s.max_clusters; ++g) {
      EXPECT_EQ(s.cuts_for(g).size(), g - 1);
      EXPECT_EQ(interval_error(prefix, s.cuts_for(g)), *s.error.error_at(g));
    }
  }
}

TEST(OptimalSequence, TiesResolveToSmallestCutVector) {
  const OptimalSolution s = optimal_sequence(histogram(oracle::gray(3, 1, {0, 1, 2})), 3);
  EXPECT_EQ(*s.error.error_at(2), 0.5);
  EXPECT_EQ(s.cuts_for(2), (Cuts{1}));
}

TEST(OptimalSequence, IntervalsAreOptimalAmongAllAssignments) {
  std::mt19937_64 rng(21);
  for (int t = 0; t < 40; ++t) {
    const std::size_t n = 3 + rng() % 6;
    const IntImage u = oracle::random_gray(rng, n, 1, 0, 9);
    const OptimalSolution s = optimal_sequence(histogram(u), 1000);
    for (std::size_t g = 1; g <= s.max_clusters; ++g)
      EXPECT_TRUE(oracle::close(*s.error.error_at(g), oracle::best_clustering(u, g), 1e-12))
          << "n=" << n << " g=" << g;
  }
}

TEST(BruteForce, MatchesDynamicProgrammingExactly) {
  std::mt19937_64 rng(77);
  for (int t = 0; t < 200; ++t) {
    const Histogram h = random_histogram(rng, 12, 20);
    const OptimalSolution s = optimal_sequence(h, 1000);
    for (std::size_t g = 1; g <= h.size(); ++g) {
      const BruteForceOptimum b = brute_force_optimal(h, g);
      EXPECT_EQ(b.error, *s.error.error_at(g));
      EXPECT_EQ(b.cuts, s.cuts_for(g));
    }
  }
}

TEST(BruteForce, Extremes) {
  const Histogram h = histogram(oracle::gray(4, 1, {0, 3, 3, 8}));
  EXPECT_EQ(brute_force_optimal(h, h.size()).error, 0.0);
  EXPECT_EQ(brute_force_optimal(h, 1).error, oracle::sse({{0}, {3}, {3}, {8}}));
}

TEST(BruteForce, GuardsAgainstLargeInputs) {
  std::vector<HistogramBin> bins;
  for (int v = 0; v < 17; ++v) bins.push_back({v, 1});
  EXPECT_THROW(brute_force_optimal(Histogram(bins), 3), PreconditionError);
}

TEST(LabelsFromCuts, AssignsIntervalIndices) {
  EXPECT_EQ(labels_from_cuts(5, {2, 4}), (std::vector<ClusterId>{0, 0, 1, 1, 2}));
  EXPECT_EQ(labels_from_cuts(3, {}), (std::vector<ClusterId>{0, 0, 0}));
}
