#ifndef PWC_REGIONS_HPP
#define PWC_REGIONS_HPP

#include "pwc/core_stats.hpp"
#include "pwc/error_series.hpp"
#include "pwc/image.hpp"

#include <cstddef>
#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

namespace pwc {

/// A region is named by the raster index of its first pixel.
using RegionId = std::int32_t;

enum class CriterionKind { plain, additive, flsa };

/// Greedy merge score over adjacent regions:
///   plain     merge increment
///   additive  merge increment - lambda * shared boundary length
///   flsa      merge increment / shared boundary length
struct MergeCriterion {
  CriterionKind kind = CriterionKind::plain;
  double lambda = 0;

  static MergeCriterion plain() { return {}; }
  static MergeCriterion additive(double lambda);
  static MergeCriterion flsa(double lambda = 1);
};

std::string to_string(CriterionKind kind);

/// Segments of a 4-connected pixel grid with exact statistics and shared
/// boundary lengths (number of straddling 4-adjacent pixel pairs).
class RegionGraph {
 public:
  struct Neighbor {
    RegionId id;
    std::int64_t length;
  };

  static RegionGraph singletons(const IntImage& image);
  /// Each label must form one 4-connected region; throws otherwise.
  static RegionGraph from_labels(const IntImage& image, std::span<const std::int32_t> labels);

  std::size_t width() const { return width_; }
  std::size_t height() const { return height_; }
  std::size_t pixel_count() const { return labels_.size(); }
  std::size_t region_count() const { return alive_count_; }

  std::vector<RegionId> region_ids() const;
  bool contains(RegionId id) const;
  const ExactStats& stats(RegionId id) const;
  const std::vector<std::size_t>& pixels(RegionId id) const;
  std::vector<Neighbor> neighbors(RegionId id) const;
  std::int64_t boundary_length(RegionId a, RegionId b) const;
  std::size_t edge_count() const;
  std::int64_t total_boundary() const;

  /// Pixel -> region id.
  std::vector<RegionId> label_map() const;
  RegionId region_of(std::size_t pixel) const;

  /// Running total squared error.
  double error() const { return static_cast<double>(error_); }
  double recomputed_error() const;

  /// Merges two adjacent regions; returns the surviving id (the smaller).
  RegionId merge(RegionId a, RegionId b);
  /// Moves pixels of `from` into the existing region `to`. `from` keeps at
  /// least one pixel and may become disconnected.
  void move_pixels(std::span<const std::size_t> pixels, RegionId from, RegionId to);
  /// Separates pixels of `from` into a new region; returns its id.
  RegionId extract(std::span<const std::size_t> pixels, RegionId from);

  /// Full recount of statistics, membership, ids and boundary lengths.
  bool consistent(std::string* why = nullptr) const;

  const IntImage& image() const { return image_; }

 private:
  friend class RegionMergeEngine;
  friend class ExtendedGrower;

  struct Edge {
    std::uint32_t slot;
    std::int64_t length;
  };
  struct Region {
    RegionId id = 0;
    ExactStats stats;
    std::vector<std::size_t> pixels;
    std::vector<Edge> edges;
    std::uint32_t version = 0;
    bool alive = false;
  };

  RegionGraph() = default;
  void build(std::span<const std::int32_t> labels);
  std::uint32_t slot_of(RegionId id) const;
  void add_length(std::uint32_t a, std::uint32_t b, std::int64_t delta);
  void transfer(std::span<const std::size_t> pixels, std::uint32_t from, std::uint32_t to);
  template <typename F>
  void for_each_neighbor_pixel(std::size_t p, F&& f) const;

  IntImage image_;
  std::size_t width_ = 0, height_ = 0;
  std::vector<std::uint32_t> labels_;  // pixel -> slot
  std::vector<Region> regions_;
  std::size_t alive_count_ = 0;
  long double error_ = 0;
};

/// Throws PreconditionError when a and b are not adjacent.
double merge_score(const RegionGraph& g, RegionId a, RegionId b, const MergeCriterion& c);

struct RegionSegmentation {
  ErrorSeries series;  // pure squared error at every recorded region count
  std::map<std::size_t, std::vector<RegionId>> snapshots;  // label maps at requested counts
  std::size_t merges = 0;
  std::size_t captures = 0;
  std::size_t splits = 0;
};

/// Greedy merging by minimum score until `target_g` regions remain.
/// Ties: (score, smaller id, larger id).
RegionSegmentation region_merge(RegionGraph g, const MergeCriterion& c, std::size_t target_g,
                                std::span<const std::size_t> snapshot_levels = {});

/// Region growing with three pixel-set operations chosen by their effect on
/// the squared error: merges of adjacent regions, captures of a
/// boundary-adjacent monochrome piece by a neighbouring region, and splits
/// of such a piece into a new region paired with the best available merge.
/// Every step performs one forced minimum-increment merge followed by
/// strictly improving captures and split/merge pairs around the regions it
/// touched.
RegionSegmentation region_grow_extended(RegionGraph g, std::size_t target_g,
                                        std::span<const std::size_t> snapshot_levels = {});

}  // namespace pwc

#endif  // PWC_REGIONS_HPP
