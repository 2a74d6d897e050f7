#include "pwc/image.hpp"

#include <stdexcept>

namespace pwc {

RasterImage::RasterImage(std::size_t w, std::size_t h, std::size_t c)
    : width(w), height(h), channels(c), data(w * h * c, 0) {}

RasterImage::RasterImage(std::size_t w, std::size_t h, std::size_t c, std::vector<std::uint8_t> bytes)
    : width(w), height(h), channels(c), data(std::move(bytes)) {
  if (data.size() != w * h * c) throw DimensionMismatch("pixel data does not match image dimensions");
}

PixelMatrix<std::int64_t> to_pixels(const RasterImage& image) {
  const auto n = static_cast<Eigen::Index>(image.pixel_count());
  const auto c = static_cast<Eigen::Index>(image.channels);
  PixelMatrix<std::int64_t> out(n, c);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index k = 0; k < c; ++k) out(i, k) = image.data[static_cast<std::size_t>(i * c + k)];
  return out;
}

IntImage to_int_image(const RasterImage& image) { return {image.width, image.height, to_pixels(image)}; }

IntImage affine(const IntImage& image, std::int64_t scale, std::int64_t offset) {
  IntImage out = image;
  out.pixels = (image.pixels.array() * scale + offset).matrix();
  return out;
}

IntImage enlarge2x(const IntImage& image) {
  IntImage out{image.width * 2, image.height * 2, PixelMatrix<std::int64_t>(0, image.channels())};
  out.pixels.resize(static_cast<Eigen::Index>(out.pixel_count()), image.channels());
  for (std::size_t y = 0; y < out.height; ++y)
    for (std::size_t x = 0; x < out.width; ++x)
      out.pixels.row(static_cast<Eigen::Index>(y * out.width + x)) =
          image.pixels.row(static_cast<Eigen::Index>((y / 2) * image.width + x / 2));
  return out;
}

RasterImage enlarge2x(const RasterImage& image) {
  RasterImage out(image.width * 2, image.height * 2, image.channels);
  for (std::size_t y = 0; y < out.height; ++y)
    for (std::size_t x = 0; x < out.width; ++x)
      for (std::size_t c = 0; c < image.channels; ++c) out.at(x, y, c) = image.at(x / 2, y / 2, c);
  return out;
}

std::vector<ClusterId> enlarge2x(std::span<const ClusterId> labels, std::size_t width, std::size_t height) {
  if (labels.size() != width * height) throw DimensionMismatch("label map does not match dimensions");
  std::vector<ClusterId> out(labels.size() * 4);
  for (std::size_t y = 0; y < height * 2; ++y)
    for (std::size_t x = 0; x < width * 2; ++x) out[y * width * 2 + x] = labels[(y / 2) * width + x / 2];
  return out;
}

}  // namespace pwc
