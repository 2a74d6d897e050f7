#ifndef PWC_CORE_STATS_HPP
#define PWC_CORE_STATS_HPP

#include <Eigen/Core>

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <map>
#include <span>
#include <stdexcept>
#include <string>
#include <type_traits>
#include <vector>

namespace pwc {

template <typename Scalar>
using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

/// One row per pixel, one column per channel.
template <typename Scalar>
using PixelMatrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

using ClusterId = std::int32_t;

class DimensionMismatch : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class PreconditionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

namespace detail {

// Wide accumulator for exact numerators in integer mode.
using wide_int = __int128;

template <typename Scalar>
inline constexpr bool is_exact_v = std::is_integral_v<Scalar>;

inline double ratio(wide_int num, wide_int den) {
  return static_cast<double>(static_cast<long double>(num) / static_cast<long double>(den));
}

}  // namespace detail

/// Sufficient statistics of a pixel multiset: count, per-channel sum and the
/// sum of squared norms. Integral Scalar keeps every accumulator exact.
template <typename Scalar>
class ClusterStats {
 public:
  using scalar_type = Scalar;
  using Sum = Vector<Scalar>;

  ClusterStats() : sum_(Sum::Zero(0)) {}
  explicit ClusterStats(Eigen::Index channels) : sum_(Sum::Zero(channels)) {}

  /// Direct construction from moments; n = 0 requires zero moments.
  static ClusterStats from_moments(std::int64_t count, Sum sum, Scalar sum_sq) {
    if (count < 0) throw PreconditionError("negative pixel count");
    if (count == 0 && (sum_sq != Scalar(0) || !sum.isZero())) {
      throw PreconditionError("empty cluster must have zero moments");
    }
    ClusterStats s;
    s.count_ = count;
    s.sum_ = std::move(sum);
    s.sum_sq_ = sum_sq;
    return s;
  }

  template <typename Derived>
  static ClusterStats of_pixel(const Eigen::MatrixBase<Derived>& pixel) {
    ClusterStats s(pixel.size());
    s.add(pixel);
    return s;
  }

  template <typename Derived>
  void add(const Eigen::MatrixBase<Derived>& pixel) {
    if (pixel.size() != sum_.size()) {
      if (count_ == 0 && sum_.size() == 0) {
        sum_ = Sum::Zero(pixel.size());
      } else {
        throw DimensionMismatch("pixel has " + std::to_string(pixel.size()) + " channels, expected " +
                                std::to_string(sum_.size()));
      }
    }
    ++count_;
    for (Eigen::Index c = 0; c < pixel.size(); ++c) {
      const Scalar v = static_cast<Scalar>(pixel(c));
      sum_(c) += v;
      sum_sq_ += v * v;
    }
  }

  ClusterStats& operator+=(const ClusterStats& other) {
    if (other.count_ == 0 && other.sum_.size() == 0) return *this;
    if (count_ == 0 && sum_.size() == 0) {
      *this = other;
      return *this;
    }
    check_channels(other);
    count_ += other.count_;
    sum_ += other.sum_;
    sum_sq_ += other.sum_sq_;
    return *this;
  }

  /// Removes a sub-multiset. The caller guarantees membership.
  ClusterStats& operator-=(const ClusterStats& other) {
    if (other.count_ == 0 && other.sum_.size() == 0) return *this;
    check_channels(other);
    if (other.count_ > count_) throw PreconditionError("cannot remove more pixels than the cluster holds");
    count_ -= other.count_;
    sum_ -= other.sum_;
    sum_sq_ -= other.sum_sq_;
    return *this;
  }

  friend ClusterStats operator+(ClusterStats a, const ClusterStats& b) { return a += b; }
  friend ClusterStats operator-(ClusterStats a, const ClusterStats& b) { return a -= b; }

  friend bool operator==(const ClusterStats& a, const ClusterStats& b) {
    if (a.count_ != b.count_ || a.sum_.size() != b.sum_.size()) return false;
    return a.sum_ == b.sum_ && a.sum_sq_ == b.sum_sq_;
  }

  std::int64_t count() const { return count_; }
  bool empty() const { return count_ == 0; }
  Eigen::Index channels() const { return sum_.size(); }
  const Sum& sum() const { return sum_; }
  Scalar sum_sq() const { return sum_sq_; }

  Vector<double> mean() const {
    if (count_ == 0) throw PreconditionError("mean of an empty cluster");
    return sum_.template cast<double>() / static_cast<double>(count_);
  }

  /// Within-cluster squared error, Q - |S|^2 / n.
  double sse() const {
    if (count_ == 0) return 0.0;
    if constexpr (detail::is_exact_v<Scalar>) {
      detail::wide_int norm = 0;
      for (Eigen::Index c = 0; c < sum_.size(); ++c) norm += detail::wide_int(sum_(c)) * sum_(c);
      const detail::wide_int num = detail::wide_int(count_) * sum_sq_ - norm;
      return detail::ratio(num, count_);
    } else {
      const double v = static_cast<double>(sum_sq_) - sum_.squaredNorm() / static_cast<double>(count_);
      return std::max(v, 0.0);
    }
  }

 private:
  void check_channels(const ClusterStats& other) const {
    if (other.sum_.size() != sum_.size()) {
      throw DimensionMismatch("channel count mismatch: " + std::to_string(sum_.size()) + " vs " +
                              std::to_string(other.sum_.size()));
    }
  }

  std::int64_t count_ = 0;
  Sum sum_;
  Scalar sum_sq_ = Scalar(0);
};

using ExactStats = ClusterStats<std::int64_t>;
using RealStats = ClusterStats<double>;

template <typename Scalar>
ClusterStats<Scalar> accumulate(const PixelMatrix<Scalar>& pixels) {
  ClusterStats<Scalar> s(pixels.cols());
  for (Eigen::Index i = 0; i < pixels.rows(); ++i) s.add(pixels.row(i).transpose());
  return s;
}

/// Throws DimensionMismatch when the pixels disagree on channel count.
template <typename Scalar>
ClusterStats<Scalar> accumulate(std::span<const Vector<Scalar>> pixels) {
  ClusterStats<Scalar> s;
  for (const auto& p : pixels) s.add(p);
  return s;
}

template <typename Scalar>
ClusterStats<Scalar> accumulate(const std::vector<Vector<Scalar>>& pixels) {
  return accumulate(std::span<const Vector<Scalar>>(pixels));
}

/// Sum of within-cluster errors accumulated in extended precision, in the
/// order given. Equal cluster sequences give bit-identical totals.
template <typename Range>
double total_sse(const Range& clusters) {
  long double total = 0;
  for (const auto& s : clusters) total += s.sse();
  return static_cast<double>(total);
}

namespace detail {

template <typename Scalar>
void require_same_channels(const ClusterStats<Scalar>& a, const ClusterStats<Scalar>& b) {
  if (a.channels() != b.channels()) throw DimensionMismatch("channel count mismatch between clusters");
}

// |m * a.S - k * b.S|^2 for exact stats; the common numerator of the
// merge and split increments.
template <typename Scalar>
wide_int cross_norm(const ClusterStats<Scalar>& a, std::int64_t a_scale, const ClusterStats<Scalar>& b,
                    std::int64_t b_scale) {
  wide_int num = 0;
  for (Eigen::Index c = 0; c < a.channels(); ++c) {
    const wide_int d = wide_int(a_scale) * a.sum()(c) - wide_int(b_scale) * b.sum()(c);
    num += d * d;
  }
  return num;
}

}  // namespace detail

/// Increase of the total squared error when clusters a and b are merged:
/// |mean(a) - mean(b)|^2 / (1/n_a + 1/n_b). Never negative.
template <typename Scalar>
double merge_delta(const ClusterStats<Scalar>& a, const ClusterStats<Scalar>& b) {
  if (a.empty() || b.empty()) throw PreconditionError("merge_delta requires non-empty clusters");
  detail::require_same_channels(a, b);
  if constexpr (detail::is_exact_v<Scalar>) {
    const auto num = detail::cross_norm(a, b.count(), b, a.count());
    const detail::wide_int den = detail::wide_int(a.count()) * b.count() * (a.count() + b.count());
    return detail::ratio(num, den);
  } else {
    const double inv = 1.0 / static_cast<double>(a.count()) + 1.0 / static_cast<double>(b.count());
    return (a.mean() - b.mean()).squaredNorm() / inv;
  }
}

/// Increase of the total squared error when `part` (k < n pixels of
/// `parent`) leaves to form its own cluster:
/// -|mean(part) - mean(parent)|^2 / (1/k - 1/n). Never positive.
/// Membership of `part` in `parent` is the caller's contract.
template <typename Scalar>
double split_delta(const ClusterStats<Scalar>& parent, const ClusterStats<Scalar>& part) {
  if (part.empty()) throw PreconditionError("split_delta requires a non-empty part");
  if (part.count() >= parent.count()) {
    throw PreconditionError("split_delta requires part.n < parent.n (got " + std::to_string(part.count()) +
                            " >= " + std::to_string(parent.count()) + ")");
  }
  detail::require_same_channels(parent, part);
  const std::int64_t n = parent.count();
  const std::int64_t k = part.count();
  if constexpr (detail::is_exact_v<Scalar>) {
    const auto num = detail::cross_norm(part, n, parent, k);
    const detail::wide_int den = detail::wide_int(k) * n * (n - k);
    return -detail::ratio(num, den);
  } else {
    const double inv = 1.0 / static_cast<double>(k) - 1.0 / static_cast<double>(n);
    return -(part.mean() - parent.mean()).squaredNorm() / inv;
  }
}

/// Increase of the total squared error when `moved` leaves `src` and joins
/// `dst`; the split of `moved` out of `src` followed by its merge into `dst`.
template <typename Scalar>
double correction_delta(const ClusterStats<Scalar>& src, const ClusterStats<Scalar>& dst,
                        const ClusterStats<Scalar>& moved) {
  if (dst.empty()) throw PreconditionError("correction_delta requires a non-empty destination");
  const double split = split_delta(src, moved);
  return split + merge_delta(moved, dst);
}

/// The K-means assignment criterion: the correction increment with its
/// size-dependent factors dropped.
template <typename Scalar>
double kmeans_delta(const ClusterStats<Scalar>& src, const ClusterStats<Scalar>& dst,
                    const ClusterStats<Scalar>& moved) {
  if (dst.empty() || moved.empty()) throw PreconditionError("kmeans_delta requires non-empty clusters");
  if (moved.count() >= src.count()) throw PreconditionError("kmeans_delta requires moved.n < src.n");
  detail::require_same_channels(src, moved);
  detail::require_same_channels(dst, moved);
  const Vector<double> m = moved.mean();
  return (m - dst.mean()).squaredNorm() - (m - src.mean()).squaredNorm();
}

/// Assignment of items (pixels, or pre-aggregated value classes) to
/// clusters, with per-cluster statistics and a cached total error.
template <typename Scalar>
class Partition {
 public:
  using Stats = ClusterStats<Scalar>;

  Partition() = default;

  Partition(std::vector<Stats> items, std::vector<ClusterId> labels)
      : items_(std::move(items)), labels_(std::move(labels)) {
    if (items_.size() != labels_.size()) throw DimensionMismatch("one label per item required");
    for (std::size_t i = 0; i < items_.size(); ++i) {
      if (labels_[i] < 0) throw PreconditionError("cluster ids must be non-negative");
      if (items_[i].empty()) throw PreconditionError("items must be non-empty");
      clusters_[labels_[i]] += items_[i];
    }
    error_ = total_sse(cluster_stats());
  }

  static Partition from_pixels(const PixelMatrix<Scalar>& pixels, std::vector<ClusterId> labels) {
    std::vector<Stats> items;
    items.reserve(static_cast<std::size_t>(pixels.rows()));
    for (Eigen::Index i = 0; i < pixels.rows(); ++i) items.push_back(Stats::of_pixel(pixels.row(i).transpose()));
    return Partition(std::move(items), std::move(labels));
  }

  std::size_t item_count() const { return items_.size(); }
  std::size_t cluster_count() const { return clusters_.size(); }
  const std::vector<ClusterId>& labels() const { return labels_; }
  ClusterId label(std::size_t item) const { return labels_.at(item); }
  const Stats& item(std::size_t i) const { return items_.at(i); }
  const std::vector<Stats>& items() const { return items_; }
  const std::map<ClusterId, Stats>& clusters() const { return clusters_; }
  bool contains(ClusterId id) const { return clusters_.count(id) != 0; }

  const Stats& cluster(ClusterId id) const {
    auto it = clusters_.find(id);
    if (it == clusters_.end()) throw PreconditionError("unknown cluster id " + std::to_string(id));
    return it->second;
  }

  std::vector<Stats> cluster_stats() const {
    std::vector<Stats> out;
    out.reserve(clusters_.size());
    for (const auto& [id, s] : clusters_) out.push_back(s);
    return out;
  }

  /// Total squared error, maintained incrementally.
  double error() const { return error_; }

  ClusterId fresh_id() const { return clusters_.empty() ? 0 : clusters_.rbegin()->first + 1; }

  std::map<ClusterId, std::vector<std::size_t>> members() const {
    std::map<ClusterId, std::vector<std::size_t>> out;
    for (std::size_t i = 0; i < labels_.size(); ++i) out[labels_[i]].push_back(i);
    return out;
  }

  /// Moves `moved` from cluster `src` to `dst`. A `dst` that does not exist
  /// yet creates a new cluster (split); moving all of `src` into an existing
  /// cluster removes `src` (merge). Returns the change of the total error.
  double apply_move(std::span<const std::size_t> moved, ClusterId src, ClusterId dst) {
    if (moved.empty()) throw PreconditionError("apply_move with an empty item set");
    if (src == dst) throw PreconditionError("apply_move with identical source and destination");
    if (dst < 0) throw PreconditionError("cluster ids must be non-negative");
    auto src_it = clusters_.find(src);
    if (src_it == clusters_.end()) throw PreconditionError("unknown source cluster " + std::to_string(src));
    Stats part;
    for (std::size_t i : moved) {
      if (i >= labels_.size() || labels_[i] != src) {
        throw PreconditionError("item " + std::to_string(i) + " is not labelled " + std::to_string(src));
      }
      part += items_[i];
    }
    if (part.count() > src_it->second.count()) throw PreconditionError("duplicate items in move");
    const bool whole = part.count() == src_it->second.count();
    auto dst_it = clusters_.find(dst);
    double delta = 0.0;
    if (dst_it == clusters_.end()) {
      if (whole) throw PreconditionError("moving a whole cluster to a fresh id is a relabel, not a split");
      delta = split_delta(src_it->second, part);
      src_it->second -= part;
      clusters_[dst] = part;
    } else if (whole) {
      delta = merge_delta(src_it->second, dst_it->second);
      dst_it->second += part;
      clusters_.erase(src_it);
    } else {
      delta = correction_delta(src_it->second, dst_it->second, part);
      src_it->second -= part;
      dst_it->second += part;
    }
    for (std::size_t i : moved) labels_[i] = dst;
    error_ += delta;
    return delta;
  }

  Partition moved(std::span<const std::size_t> items, ClusterId src, ClusterId dst) const {
    Partition out = *this;
    out.apply_move(items, src, dst);
    return out;
  }

  /// Relabels clusters in place; `relabel` must be injective over live ids.
  template <typename F>
  void relabel(F&& relabel) {
    std::map<ClusterId, Stats> next;
    for (auto& [id, s] : clusters_) next.emplace(relabel(id), std::move(s));
    if (next.size() != clusters_.size()) throw PreconditionError("relabel is not injective");
    for (auto& l : labels_) l = relabel(l);
    clusters_ = std::move(next);
  }

  double recomputed_error() const { return Partition(items_, labels_).error_; }

  /// Recomputes the table from labels; stats must match exactly and the
  /// cached error within `rel_tol`.
  bool consistent(double rel_tol = 1e-9) const {
    const Partition fresh(items_, labels_);
    if (fresh.clusters_.size() != clusters_.size()) return false;
    for (const auto& [id, s] : fresh.clusters_) {
      auto it = clusters_.find(id);
      if (it == clusters_.end()) return false;
      if constexpr (detail::is_exact_v<Scalar>) {
        if (!(it->second == s)) return false;
      } else {
        if (it->second.count() != s.count()) return false;
        const double scale = std::max(1.0, std::abs(static_cast<double>(s.sum_sq())));
        if (std::abs(static_cast<double>(it->second.sum_sq() - s.sum_sq())) > rel_tol * scale) return false;
      }
    }
    const double scale = std::max(1.0, fresh.error_);
    return std::abs(fresh.error_ - error_) <= rel_tol * scale;
  }

 private:
  std::vector<Stats> items_;
  std::vector<ClusterId> labels_;
  std::map<ClusterId, Stats> clusters_;
  double error_ = 0.0;
};

using ExactPartition = Partition<std::int64_t>;

}  // namespace pwc

#endif  // PWC_CORE_STATS_HPP
