#include "pwc/error_series.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace pwc {

void ErrorSeries::push(std::size_t g, double error) {
  if (!entries_.empty() && g <= entries_.back().g) {
    throw std::invalid_argument("ErrorSeries levels must be strictly increasing (got g=" + std::to_string(g) + ")");
  }
  if (error < 0) throw std::invalid_argument("negative total squared error");
  entries_.push_back({g, error});
}

std::optional<double> ErrorSeries::error_at(std::size_t g) const {
  auto it = std::lower_bound(entries_.begin(), entries_.end(), g,
                             [](const Entry& e, std::size_t v) { return e.g < v; });
  if (it == entries_.end() || it->g != g) return std::nullopt;
  return it->error;
}

double ErrorSeries::sigma(double error) const {
  if (pixel_count_ == 0) throw std::logic_error("sigma requires a pixel count");
  return std::sqrt(error / static_cast<double>(pixel_count_));
}

std::optional<double> ErrorSeries::sigma_at(std::size_t g) const {
  auto e = error_at(g);
  if (!e) return std::nullopt;
  return sigma(*e);
}

ErrorSeries ErrorSeries::truncated(std::size_t max_g) const {
  ErrorSeries out(pixel_count_);
  for (const auto& e : entries_)
    if (e.g <= max_g) out.entries_.push_back(e);
  return out;
}

bool ErrorSeries::is_nonincreasing() const {
  for (std::size_t i = 1; i < entries_.size(); ++i)
    if (entries_[i].error > entries_[i - 1].error) return false;
  return true;
}

std::vector<ConvexityViolation> ErrorSeries::convexity_violations(double rel_slack) const {
  std::vector<ConvexityViolation> out;
  double scale = 0;
  for (const auto& e : entries_) scale = std::max(scale, e.error);
  const double slack = rel_slack * scale;
  for (std::size_t i = 1; i + 1 < entries_.size(); ++i) {
    const auto& lo = entries_[i - 1];
    const auto& mid = entries_[i];
    const auto& hi = entries_[i + 1];
    if (mid.g != lo.g + 1 || hi.g != mid.g + 1) continue;
    const double excess = mid.error - 0.5 * (lo.error + hi.error);
    if (excess > slack) out.push_back({mid.g, excess});
  }
  return out;
}

}  // namespace pwc
