#ifndef PWC_IMGIO_HPP
#define PWC_IMGIO_HPP

#include "pwc/core_stats.hpp"
#include "pwc/error_series.hpp"
#include "pwc/image.hpp"

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace pwc {

using Bytes = std::vector<std::uint8_t>;

class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& what, std::size_t offset);
  /// Byte offset at which the problem was detected.
  std::size_t offset() const { return offset_; }

 private:
  std::size_t offset_;
};

/// Binary P5 (gray) or P6 (RGB) with maxval <= 255.
RasterImage read_pnm(std::span<const std::uint8_t> bytes);
/// Canonical header "P5\n<w> <h>\n255\n" (P6 for three channels).
Bytes write_pnm(const RasterImage& image);

/// Every pixel replaced by its cluster mean, rounded half-to-even and
/// clamped to 0..255.
RasterImage approximation(const IntImage& image, std::span<const ClusterId> labels);
Bytes write_approximation(const IntImage& image, std::span<const ClusterId> labels);
Bytes write_approximation(const RasterImage& image, std::span<const ClusterId> labels);

enum class SeriesMode { error, sigma, both };

SeriesMode parse_series_mode(const std::string& text);

/// CSV with header g,E / g,sigma / g,E,sigma. Numbers use the shortest
/// decimal form that reads back to the same double.
std::string write_series(const ErrorSeries& series, SeriesMode mode);
std::string format_double(double value);

struct LabelMap {
  std::size_t width = 0;
  std::size_t height = 0;
  std::vector<std::uint32_t> labels;

  friend bool operator==(const LabelMap&, const LabelMap&) = default;
};

/// Sidecar: "LBL1", width u32, height u32, labels u32, little-endian.
Bytes write_labels(const LabelMap& map);
LabelMap read_labels(std::span<const std::uint8_t> bytes);

Bytes read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::span<const std::uint8_t> bytes);
void write_file(const std::filesystem::path& path, const std::string& text);

}  // namespace pwc

#endif  // PWC_IMGIO_HPP
