#ifndef PWC_OPTIMAL1D_HPP
#define PWC_OPTIMAL1D_HPP

#include "pwc/core_stats.hpp"
#include "pwc/error_series.hpp"
#include "pwc/image.hpp"

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace pwc {

struct HistogramBin {
  std::int64_t value;
  std::int64_t count;
  friend bool operator==(const HistogramBin&, const HistogramBin&) = default;
};

/// Distinct grayscale values in increasing order with their pixel counts.
class Histogram {
 public:
  Histogram() = default;
  /// Bins must have strictly increasing values and positive counts.
  explicit Histogram(std::vector<HistogramBin> bins);

  const std::vector<HistogramBin>& bins() const { return bins_; }
  std::size_t size() const { return bins_.size(); }
  std::int64_t pixel_count() const { return pixel_count_; }
  /// Index of the bin holding `value`, or size() when absent.
  std::size_t find(std::int64_t value) const;

 private:
  std::vector<HistogramBin> bins_;
  std::int64_t pixel_count_ = 0;
};

Histogram histogram(std::span<const std::int64_t> values);
/// Grayscale only; throws on an empty or multichannel image.
Histogram histogram(const RasterImage& image);
Histogram histogram(const IntImage& image);

/// Cumulative count, sum and squared sum over bin prefixes, giving O(1)
/// interval statistics.
class PrefixStats {
 public:
  explicit PrefixStats(const Histogram& h);

  /// Statistics of bins first..last inclusive.
  ExactStats interval(std::size_t first, std::size_t last) const;
  double sse(std::size_t first, std::size_t last) const { return interval(first, last).sse(); }
  std::size_t size() const { return count_.size() - 1; }

 private:
  std::vector<std::int64_t> count_, sum_, sum_sq_;
};

/// Cut positions are indices of the first bin of every interval after the
/// first one, strictly increasing in 1..bins-1.
using Cuts = std::vector<std::size_t>;

/// Total error of the interval partition induced by `cuts`, summed left to
/// right.
double interval_error(const PrefixStats& prefix, const Cuts& cuts);

/// Bin -> interval index for the partition induced by `cuts`.
std::vector<ClusterId> labels_from_cuts(std::size_t bins, const Cuts& cuts);

struct OptimalSolution {
  std::size_t max_clusters = 0;
  ErrorSeries error;
  std::vector<Cuts> cuts;  // cuts[g - 1]

  const Cuts& cuts_for(std::size_t g) const { return cuts.at(g - 1); }
};

/// Minimum-error partitions into g contiguous value intervals for every
/// g = 1..min(max_clusters, bins), by dynamic programming over the
/// histogram. Ties resolve to the lexicographically smallest cut vector.
///
/// The interval cost is concave-Monge, so SMAWK or divide-and-conquer
/// row minima would cut the O(G * B^2) cost; with B <= 256 intensity
/// bins the plain recurrence is sufficient.
OptimalSolution optimal_sequence(const Histogram& h, std::size_t max_clusters);

struct BruteForceOptimum {
  double error = 0;
  Cuts cuts;
};

inline constexpr std::size_t kBruteForceMaxBins = 16;

/// Exhaustive enumeration over all cut placements for test oracles.
/// Throws PreconditionError above kBruteForceMaxBins bins.
BruteForceOptimum brute_force_optimal(const Histogram& h, std::size_t g);

}  // namespace pwc

#endif  // PWC_OPTIMAL1D_HPP
