#include "pwc/optimal1d.hpp"

#include <algorithm>
#include <limits>
#include <map>
#include <string>

namespace pwc {

Histogram::Histogram(std::vector<HistogramBin> bins) : bins_(std::move(bins)) {
  for (std::size_t i = 0; i < bins_.size(); ++i) {
    if (bins_[i].count < 1) throw PreconditionError("histogram counts must be positive");
    if (i > 0 && bins_[i].value <= bins_[i - 1].value)
      throw PreconditionError("histogram values must be strictly increasing");
    pixel_count_ += bins_[i].count;
  }
}

std::size_t Histogram::find(std::int64_t value) const {
  auto it = std::lower_bound(bins_.begin(), bins_.end(), value,
                             [](const HistogramBin& b, std::int64_t v) { return b.value < v; });
  if (it == bins_.end() || it->value != value) return bins_.size();
  return static_cast<std::size_t>(it - bins_.begin());
}

Histogram histogram(std::span<const std::int64_t> values) {
  if (values.empty()) throw PreconditionError("histogram of an empty image");
  std::map<std::int64_t, std::int64_t> counts;
  for (auto v : values) ++counts[v];
  std::vector<HistogramBin> bins;
  bins.reserve(counts.size());
  for (auto [v, c] : counts) bins.push_back({v, c});
  return Histogram(std::move(bins));
}

Histogram histogram(const IntImage& image) {
  if (image.channels() != 1) throw DimensionMismatch("optimal sequences are defined for grayscale images only");
  return histogram(std::span<const std::int64_t>(image.pixels.data(), static_cast<std::size_t>(image.pixels.size())));
}

Histogram histogram(const RasterImage& image) {
  if (image.channels != 1) throw DimensionMismatch("optimal sequences are defined for grayscale images only");
  return histogram(to_int_image(image));
}

PrefixStats::PrefixStats(const Histogram& h)
    : count_(h.size() + 1, 0), sum_(h.size() + 1, 0), sum_sq_(h.size() + 1, 0) {
  for (std::size_t i = 0; i < h.size(); ++i) {
    const auto& b = h.bins()[i];
    count_[i + 1] = count_[i] + b.count;
    sum_[i + 1] = sum_[i] + b.count * b.value;
    sum_sq_[i + 1] = sum_sq_[i] + b.count * b.value * b.value;
  }
}

ExactStats PrefixStats::interval(std::size_t first, std::size_t last) const {
  if (first > last || last >= size()) throw PreconditionError("invalid bin interval");
  Vector<std::int64_t> sum(1);
  sum(0) = sum_[last + 1] - sum_[first];
  return ExactStats::from_moments(count_[last + 1] - count_[first], std::move(sum),
                                  sum_sq_[last + 1] - sum_sq_[first]);
}

double interval_error(const PrefixStats& prefix, const Cuts& cuts) {
  long double total = 0;
  std::size_t first = 0;
  for (std::size_t k = 0; k <= cuts.size(); ++k) {
    const std::size_t end = k < cuts.size() ? cuts[k] : prefix.size();
    total += prefix.sse(first, end - 1);
    first = end;
  }
  return static_cast<double>(total);
}

std::vector<ClusterId> labels_from_cuts(std::size_t bins, const Cuts& cuts) {
  std::vector<ClusterId> labels(bins, 0);
  ClusterId current = 0;
  std::size_t next = 0;
  for (std::size_t i = 0; i < bins; ++i) {
    if (next < cuts.size() && cuts[next] == i) {
      ++current;
      ++next;
    }
    labels[i] = current;
  }
  return labels;
}

OptimalSolution optimal_sequence(const Histogram& h, std::size_t max_clusters) {
  if (max_clusters < 1) throw PreconditionError("optimal_sequence requires at least one cluster");
  OptimalSolution sol;
  sol.error = ErrorSeries(static_cast<std::size_t>(h.pixel_count()));
  const std::size_t bins = h.size();
  if (bins == 0) return sol;
  const std::size_t top = std::min(max_clusters, bins);
  sol.max_clusters = top;
  const PrefixStats prefix(h);

  // cost[g][i]: least error of bins i..bins-1 split into g intervals.
  // first_cut[g][i]: smallest start of the second interval achieving it.
  constexpr long double inf = std::numeric_limits<long double>::infinity();
  std::vector<std::vector<long double>> cost(top + 1, std::vector<long double>(bins + 1, inf));
  std::vector<std::vector<std::size_t>> first_cut(top + 1, std::vector<std::size_t>(bins + 1, 0));
  for (std::size_t i = 0; i < bins; ++i) cost[1][i] = prefix.sse(i, bins - 1);
  for (std::size_t g = 2; g <= top; ++g) {
    for (std::size_t i = 0; i + g <= bins; ++i) {
      long double best = inf;
      double best_rounded = std::numeric_limits<double>::infinity();
      std::size_t arg = 0;
      for (std::size_t c = i + 1; c + g - 1 <= bins; ++c) {
        const long double v = static_cast<long double>(prefix.sse(i, c - 1)) + cost[g - 1][c];
        // Compare at double resolution so that ties between equal rational
        // costs are not broken by extended-precision rounding noise.
        const double rounded = static_cast<double>(v);
        if (rounded < best_rounded) {
          best_rounded = rounded;
          best = v;
          arg = c;
        }
      }
      cost[g][i] = best;
      first_cut[g][i] = arg;
    }
  }

  for (std::size_t g = 1; g <= top; ++g) {
    Cuts cuts;
    std::size_t i = 0;
    for (std::size_t k = g; k >= 2; --k) {
      i = first_cut[k][i];
      cuts.push_back(i);
    }
    sol.error.push(g, interval_error(prefix, cuts));
    sol.cuts.push_back(std::move(cuts));
  }
  return sol;
}

namespace {

void enumerate_cuts(const PrefixStats& prefix, std::size_t remaining, std::size_t start, Cuts& current,
                    BruteForceOptimum& best, bool& found) {
  if (remaining == 0) {
    const double e = interval_error(prefix, current);
    if (!found || e < best.error) {
      best.error = e;
      best.cuts = current;
      found = true;
    }
    return;
  }
  const std::size_t bins = prefix.size();
  for (std::size_t c = start; c + remaining <= bins; ++c) {
    current.push_back(c);
    enumerate_cuts(prefix, remaining - 1, c + 1, current, best, found);
    current.pop_back();
  }
}

}  // namespace

BruteForceOptimum brute_force_optimal(const Histogram& h, std::size_t g) {
  if (h.size() > kBruteForceMaxBins) {
    throw PreconditionError("brute_force_optimal is limited to " + std::to_string(kBruteForceMaxBins) + " bins");
  }
  if (g < 1 || g > h.size()) throw PreconditionError("cluster count must be in 1..bins");
  const PrefixStats prefix(h);
  BruteForceOptimum best;
  Cuts current;
  bool found = false;
  // Lexicographic enumeration keeps the first minimum, i.e. the smallest
  // cut vector among ties.
  enumerate_cuts(prefix, g - 1, 1, current, best, found);
  return best;
}

}  // namespace pwc
