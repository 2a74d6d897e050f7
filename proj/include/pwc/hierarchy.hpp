#ifndef PWC_HIERARCHY_HPP
#define PWC_HIERARCHY_HPP

#include "pwc/core_stats.hpp"
#include "pwc/error_series.hpp"
#include "pwc/image.hpp"

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace pwc {

/// Distinct pixel values (exact channel tuples) of an image. Classes are
/// indexed in raster order of their first pixel; that index is the tie
/// breaker used throughout the hierarchy code.
struct ValueClasses {
  PixelMatrix<std::int64_t> values;   // one row per class
  std::vector<ExactStats> stats;      // all pixels of the class
  std::vector<ClusterId> pixel_class; // pixel -> class index

  std::size_t size() const { return stats.size(); }
  std::size_t pixel_count() const { return pixel_class.size(); }
  Eigen::Index channels() const { return values.cols(); }
};

ValueClasses value_classes(const PixelMatrix<std::int64_t>& pixels);

/// Partition over value classes with one cluster per class.
ExactPartition finest_partition(const ValueClasses& classes);

/// Pixel-level partition with one cluster per distinct value (E = 0).
ExactPartition initial_partition_from_values(const IntImage& u);

/// Expands a class-level partition to a pixel label map.
std::vector<ClusterId> pixel_labels(const ValueClasses& classes, const ExactPartition& p);

/// Renames every cluster to the smallest item index it contains.
void canonicalize(ExactPartition& p);
bool is_canonical(const ExactPartition& p);

struct MergeRecord {
  ClusterId first;
  ClusterId second;
  double delta;
  ClusterId result;  // first or second; the other id disappears

  bool touches(ClusterId id) const { return id == first || id == second; }
  ClusterId absorbed() const { return result == first ? second : first; }
  friend bool operator==(const MergeRecord&, const MergeRecord&) = default;
};

/// Nested sequence of partitions stored as a finest partition plus an
/// ordered merge list. Level g has g clusters.
class Hierarchy {
 public:
  Hierarchy() = default;
  /// Validates that every merge refers to live clusters during replay.
  Hierarchy(ExactPartition base, std::vector<MergeRecord> merges);

  const ExactPartition& base() const { return base_; }
  const std::vector<MergeRecord>& merges() const { return merges_; }
  std::size_t max_clusters() const { return base_.cluster_count(); }
  std::size_t min_clusters() const { return base_.cluster_count() - merges_.size(); }

  ExactPartition level(std::size_t g) const;
  /// All levels, index 0 holding min_clusters().
  std::vector<ExactPartition> levels() const;

  /// E per level, recomputed from the level statistics with clusters summed
  /// in order of their smallest member value.
  ErrorSeries error_series() const;

 private:
  ExactPartition base_;
  std::vector<MergeRecord> merges_;
};

/// Greedy merging by minimum merge increment down to one cluster.
/// Ties: (delta, smaller id, larger id). The surviving id is the smaller.
Hierarchy ward_merge_pass(const ExactPartition& p);

struct SplitRecord {
  ClusterId parent;   // keeps the part holding its smallest item
  ClusterId created;  // smallest item index of the separated part
  double delta;
};

struct SplitOutcome {
  ExactPartition partition;
  std::vector<SplitRecord> splits;
  bool stalled = false;  // no negative split remained before reaching the target
  std::string diagnostic;
};

/// Greedy splitting by most negative split increment up to `target_g`
/// clusters (capped at the number of distinct item values).
///
/// Candidate parts: for single-channel items, every run of whole value
/// groups at the low end of the cluster's sorted values (the complement
/// covers the high end). For multichannel items, the value group farthest
/// from the cluster mean, grown greedily by correction increments.
/// Ties: (delta, larger smallest-index of the separated part, fewer items
/// in it, smaller cluster id). Input ids must be canonical.
SplitOutcome split_pass(const ExactPartition& p, std::size_t target_g);

/// Movable item groups; each group must lie inside one cluster and the
/// groups must cover every item exactly once.
using Units = std::vector<std::vector<std::size_t>>;

struct RefineStats {
  std::size_t moves = 0;
  std::size_t sweeps = 0;
};

/// Exact reclassification: moves a unit to the cluster with the most
/// negative correction increment while it is strictly negative and the
/// source keeps at least one unit. Clusters are scanned in id order, units
/// in index order. Defaults to one unit per item. Cluster ids are kept.
ExactPartition refine_exact(const ExactPartition& p, const Units* units = nullptr, RefineStats* stats = nullptr);

/// Lloyd iteration to a fixpoint: every unit goes to the nearest cluster
/// mean (ties keep the current cluster, then the smaller id). A cluster
/// that would empty retains its member farthest from its mean.
ExactPartition refine_kmeans(const ExactPartition& p, const Units* units = nullptr, RefineStats* stats = nullptr);

struct ConvexifyReport {
  std::size_t swaps = 0;
  std::size_t rederivations = 0;
  std::vector<ConvexityViolation> residual;
};

/// Reorders merges so their increments are non-decreasing: adjacent
/// independent out-of-order merges are swapped; a dependent out-of-order
/// pair is re-derived by greedy merging from the level before it.
Hierarchy convexify(const Hierarchy& h, ConvexifyReport* report = nullptr);

/// Real-valued image whose level sets seed the initial partition.
struct MaskImage {
  std::size_t width = 0;
  std::size_t height = 0;
  PixelMatrix<double> values;

  std::size_t pixel_count() const { return width * height; }
};

MaskImage mask_from(const IntImage& image);
MaskImage mask_from(const RasterImage& image);

/// Pixels replaced by the exact mean of their cluster.
MaskImage render_approximation(const ValueClasses& classes, const ExactPartition& p, std::size_t width,
                               std::size_t height);

/// Class-level partition induced by the mask: each value class joins the
/// mask level set holding most of its pixels (ties: the level set seen
/// first in raster order).
ExactPartition mask_partition(const ValueClasses& classes, const MaskImage& mask);

struct Sequence {
  ValueClasses classes;
  Hierarchy hierarchy;
  ErrorSeries series;  // levels 1..min(max_clusters, g_max)
  ConvexifyReport convexity;
  std::size_t mask_clusters = 0;

  std::vector<ClusterId> pixel_labels_at(std::size_t g) const;
};

/// Hierarchical sequence seeded by a mask. Finer levels: greedy splitting
/// of the mask partition down to the value classes. Coarser levels: greedy
/// splitting from a single cluster over whole mask clusters. Merges are
/// then reordered for convexity.
Sequence build_sequence(const IntImage& u, const MaskImage& v, std::size_t max_clusters);
Sequence build_sequence(const IntImage& u, std::size_t max_clusters);

/// True when both hierarchies produce the same partitions at every level.
bool same_levels(const Hierarchy& a, const Hierarchy& b);

struct SelfConsistencyLevel {
  std::size_t level;
  bool reproduced;
};

struct SelfConsistencyReport {
  std::vector<SelfConsistencyLevel> levels;
  bool all_reproduced() const;
};

/// Re-runs the construction with each requested level approximation as the
/// mask and compares the resulting level sequence with `h`.
SelfConsistencyReport self_consistency_check(const IntImage& u, const Sequence& h,
                                             std::span<const std::size_t> levels);

}  // namespace pwc

#endif  // PWC_HIERARCHY_HPP
