#ifndef PWC_ERROR_SERIES_HPP
#define PWC_ERROR_SERIES_HPP

#include <cstddef>
#include <optional>
#include <vector>

namespace pwc {

struct ConvexityViolation {
  std::size_t g;     // interior level i
  double excess;     // E_i - (E_{i-1} + E_{i+1}) / 2, positive
};

/// Total squared error as a function of the cluster count g.
/// E = N * sigma^2 links the error to the pixel standard deviation.
class ErrorSeries {
 public:
  struct Entry {
    std::size_t g;
    double error;
    friend bool operator==(const Entry&, const Entry&) = default;
  };

  ErrorSeries() = default;
  explicit ErrorSeries(std::size_t pixel_count) : pixel_count_(pixel_count) {}

  /// Appends a level; g must exceed the last recorded g.
  void push(std::size_t g, double error);

  const std::vector<Entry>& entries() const { return entries_; }
  std::size_t size() const { return entries_.size(); }
  bool empty() const { return entries_.empty(); }
  std::size_t pixel_count() const { return pixel_count_; }

  std::optional<double> error_at(std::size_t g) const;
  double sigma(double error) const;
  std::optional<double> sigma_at(std::size_t g) const;

  /// Keeps levels with g <= max_g.
  ErrorSeries truncated(std::size_t max_g) const;

  bool is_nonincreasing() const;
  /// E_i <= (E_{i-1} + E_{i+1}) / 2 over consecutive-g triples; `rel_slack`
  /// is relative to the largest recorded error.
  bool is_convex(double rel_slack = 1e-12) const { return convexity_violations(rel_slack).empty(); }
  std::vector<ConvexityViolation> convexity_violations(double rel_slack = 1e-12) const;

  friend bool operator==(const ErrorSeries&, const ErrorSeries&) = default;

 private:
  std::size_t pixel_count_ = 0;
  std::vector<Entry> entries_;
};

}  // namespace pwc

#endif  // PWC_ERROR_SERIES_HPP
