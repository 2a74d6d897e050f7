#ifndef PWC_IMAGE_HPP
#define PWC_IMAGE_HPP

#include "pwc/core_stats.hpp"

#include <cstddef>
#include <cstdint>
#include <vector>

namespace pwc {

/// Row-major 8-bit raster with 1 or 3 interleaved channels.
struct RasterImage {
  std::size_t width = 0;
  std::size_t height = 0;
  std::size_t channels = 1;
  std::vector<std::uint8_t> data;

  RasterImage() = default;
  RasterImage(std::size_t w, std::size_t h, std::size_t c);
  RasterImage(std::size_t w, std::size_t h, std::size_t c, std::vector<std::uint8_t> bytes);

  std::size_t pixel_count() const { return width * height; }
  std::uint8_t& at(std::size_t x, std::size_t y, std::size_t c = 0) { return data[(y * width + x) * channels + c]; }
  std::uint8_t at(std::size_t x, std::size_t y, std::size_t c = 0) const {
    return data[(y * width + x) * channels + c];
  }

  friend bool operator==(const RasterImage&, const RasterImage&) = default;
};

/// Exact integer pixel rows, one per pixel.
PixelMatrix<std::int64_t> to_pixels(const RasterImage& image);

/// Integer-valued image of arbitrary range, used where a transform may
/// leave the 8-bit domain (intensity rescaling).
struct IntImage {
  std::size_t width = 0;
  std::size_t height = 0;
  PixelMatrix<std::int64_t> pixels;

  std::size_t pixel_count() const { return width * height; }
  Eigen::Index channels() const { return pixels.cols(); }
};

IntImage to_int_image(const RasterImage& image);

/// x -> scale * x + offset on every channel.
IntImage affine(const IntImage& image, std::int64_t scale, std::int64_t offset);

/// Replicates every pixel into a 2x2 block.
IntImage enlarge2x(const IntImage& image);
RasterImage enlarge2x(const RasterImage& image);

/// Label map enlargement matching enlarge2x.
std::vector<ClusterId> enlarge2x(std::span<const ClusterId> labels, std::size_t width, std::size_t height);

}  // namespace pwc

#endif  // PWC_IMAGE_HPP
