#include "pwc/imgio.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iterator>
#include <map>

namespace pwc {

ParseError::ParseError(const std::string& what, std::size_t offset)
    : std::runtime_error(what + " at byte " + std::to_string(offset)), offset_(offset) {}

namespace {

bool is_space(std::uint8_t c) { return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\v' || c == '\f'; }

class HeaderReader {
 public:
  HeaderReader(std::span<const std::uint8_t> bytes, std::size_t start) : b_(bytes), pos_(start) {}

  std::size_t pos() const { return pos_; }

  void skip_space_and_comments() {
    while (pos_ < b_.size()) {
      if (is_space(b_[pos_])) {
        ++pos_;
      } else if (b_[pos_] == '#') {
        while (pos_ < b_.size() && b_[pos_] != '\n' && b_[pos_] != '\r') ++pos_;
      } else {
        break;
      }
    }
  }

  std::uint64_t number(const char* field) {
    if (pos_ < b_.size() && !is_space(b_[pos_]) && b_[pos_] != '#')
      throw ParseError(std::string("missing whitespace before ") + field, pos_);
    skip_space_and_comments();
    if (pos_ >= b_.size()) throw ParseError(std::string("header truncated before ") + field, pos_);
    if (b_[pos_] < '0' || b_[pos_] > '9') throw ParseError(std::string("expected ") + field, pos_);
    const std::size_t start = pos_;
    std::uint64_t value = 0;
    while (pos_ < b_.size() && b_[pos_] >= '0' && b_[pos_] <= '9') {
      value = value * 10 + (b_[pos_] - '0');
      if (value > (1ULL << 32)) throw ParseError(std::string(field) + " out of range", start);
      ++pos_;
    }
    return value;
  }

  void end_of_header() {
    if (pos_ >= b_.size()) throw ParseError("header truncated", pos_);
    if (!is_space(b_[pos_])) throw ParseError("expected a single whitespace after maxval", pos_);
    ++pos_;
  }

 private:
  std::span<const std::uint8_t> b_;
  std::size_t pos_ = 0;
};

void put_u32(Bytes& out, std::uint32_t v) {
  for (int k = 0; k < 4; ++k) out.push_back(static_cast<std::uint8_t>(v >> (8 * k)));
}

std::uint32_t get_u32(std::span<const std::uint8_t> b, std::size_t at) {
  std::uint32_t v = 0;
  for (int k = 0; k < 4; ++k) v |= static_cast<std::uint32_t>(b[at + k]) << (8 * k);
  return v;
}

// Nearest integer to num / den (den > 0), ties to even.
std::int64_t round_half_even(std::int64_t num, std::int64_t den) {
  std::int64_t q = num / den, r = num % den;
  if (r < 0) {
    r += den;
    --q;
  }
  const std::int64_t twice = 2 * r;
  if (twice > den || (twice == den && (q & 1) != 0)) ++q;
  return q;
}

}  // namespace

RasterImage read_pnm(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < 2) throw ParseError("missing magic number", 0);
  if (bytes[0] != 'P' || (bytes[1] != '5' && bytes[1] != '6'))
    throw ParseError("unsupported magic number (expected P5 or P6)", 0);
  const std::size_t channels = bytes[1] == '5' ? 1 : 3;
  HeaderReader header(bytes, 2);
  const std::size_t width_at = header.pos();
  const std::size_t width = header.number("width");
  const std::size_t height = header.number("height");
  if (width == 0 || height == 0) throw ParseError("zero image dimension", width_at);
  const std::size_t maxval_at = header.pos();
  const std::size_t maxval = header.number("maxval");
  if (maxval == 0) throw ParseError("maxval must be positive", maxval_at);
  if (maxval > 255)
    throw ParseError("maxval " + std::to_string(maxval) + " exceeds 255 (16-bit images are not supported)",
                     maxval_at);
  header.end_of_header();
  const std::size_t payload = header.pos();
  const std::size_t need = width * height * channels;
  if (bytes.size() - payload < need)
    throw ParseError("truncated payload: expected " + std::to_string(need) + " bytes, found " +
                         std::to_string(bytes.size() - payload),
                     bytes.size());
  const auto first = bytes.begin() + static_cast<std::ptrdiff_t>(payload);
  RasterImage img(width, height, channels, Bytes(first, first + static_cast<std::ptrdiff_t>(need)));
  for (std::size_t i = 0; i < need; ++i)
    if (img.data[i] > maxval) throw ParseError("sample exceeds maxval", payload + i);
  return img;
}

Bytes write_pnm(const RasterImage& image) {
  if (image.channels != 1 && image.channels != 3) throw PreconditionError("PNM output needs 1 or 3 channels");
  if (image.data.size() != image.pixel_count() * image.channels) throw DimensionMismatch("raster size mismatch");
  const std::string header = std::string(image.channels == 1 ? "P5" : "P6") + "\n" + std::to_string(image.width) +
                             " " + std::to_string(image.height) + "\n255\n";
  Bytes out(header.begin(), header.end());
  out.insert(out.end(), image.data.begin(), image.data.end());
  return out;
}

RasterImage approximation(const IntImage& image, std::span<const ClusterId> labels) {
  if (labels.size() != image.pixel_count()) throw DimensionMismatch("label map does not cover the image");
  const auto c = static_cast<std::size_t>(image.channels());
  if (c != 1 && c != 3) throw PreconditionError("approximation output needs 1 or 3 channels");
  std::map<ClusterId, std::pair<std::int64_t, std::vector<std::int64_t>>> sums;
  for (std::size_t p = 0; p < labels.size(); ++p) {
    auto& [n, s] = sums[labels[p]];
    if (s.empty()) s.assign(c, 0);
    ++n;
    for (std::size_t k = 0; k < c; ++k) s[k] += image.pixels(static_cast<Eigen::Index>(p), static_cast<Eigen::Index>(k));
  }
  std::map<ClusterId, std::vector<std::uint8_t>> means;
  for (const auto& [id, ns] : sums) {
    std::vector<std::uint8_t> m(c);
    for (std::size_t k = 0; k < c; ++k)
      m[k] = static_cast<std::uint8_t>(std::clamp<std::int64_t>(round_half_even(ns.second[k], ns.first), 0, 255));
    means.emplace(id, std::move(m));
  }
  RasterImage out(image.width, image.height, c);
  for (std::size_t p = 0; p < labels.size(); ++p) {
    const auto& m = means.at(labels[p]);
    std::copy(m.begin(), m.end(), out.data.begin() + static_cast<std::ptrdiff_t>(p * c));
  }
  return out;
}

Bytes write_approximation(const IntImage& image, std::span<const ClusterId> labels) {
  return write_pnm(approximation(image, labels));
}

Bytes write_approximation(const RasterImage& image, std::span<const ClusterId> labels) {
  return write_approximation(to_int_image(image), labels);
}

SeriesMode parse_series_mode(const std::string& text) {
  if (text == "E") return SeriesMode::error;
  if (text == "sigma") return SeriesMode::sigma;
  if (text == "both") return SeriesMode::both;
  throw std::invalid_argument("unknown series mode '" + text + "' (expected E or sigma)");
}

std::string format_double(double value) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, value);
  return std::string(buf, res.ptr);
}

std::string write_series(const ErrorSeries& series, SeriesMode mode) {
  std::string out = mode == SeriesMode::error ? "g,E\n" : mode == SeriesMode::sigma ? "g,sigma\n" : "g,E,sigma\n";
  for (const auto& e : series.entries()) {
    out += std::to_string(e.g);
    if (mode != SeriesMode::sigma) out += "," + format_double(e.error);
    if (mode != SeriesMode::error) out += "," + format_double(series.sigma(e.error));
    out += "\n";
  }
  return out;
}

Bytes write_labels(const LabelMap& map) {
  if (map.labels.size() != map.width * map.height) throw DimensionMismatch("label map size mismatch");
  Bytes out{'L', 'B', 'L', '1'};
  out.reserve(12 + 4 * map.labels.size());
  put_u32(out, static_cast<std::uint32_t>(map.width));
  put_u32(out, static_cast<std::uint32_t>(map.height));
  for (auto l : map.labels) put_u32(out, l);
  return out;
}

LabelMap read_labels(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < 12) throw ParseError("label header truncated", bytes.size());
  if (!(bytes[0] == 'L' && bytes[1] == 'B' && bytes[2] == 'L' && bytes[3] == '1'))
    throw ParseError("bad label magic (expected LBL1)", 0);
  LabelMap map;
  map.width = get_u32(bytes, 4);
  map.height = get_u32(bytes, 8);
  const std::size_t n = map.width * map.height;
  if ((bytes.size() - 12) / 4 < n) throw ParseError("truncated label payload", bytes.size());
  map.labels.resize(n);
  for (std::size_t i = 0; i < n; ++i) map.labels[i] = get_u32(bytes, 12 + 4 * i);
  return map;
}

Bytes read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  return Bytes(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

void write_file(const std::filesystem::path& path, std::span<const std::uint8_t> bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw std::runtime_error("write failed for " + path.string());
}

void write_file(const std::filesystem::path& path, const std::string& text) {
  write_file(path, std::span(reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
}

}  // namespace pwc
