#pragma once

// Binary PGM (P5) and PPM (P6) codecs, maxval 255 only.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "hogtrack/error.hpp"
#include "hogtrack/image.hpp"

namespace hogtrack::netpbm {

using Bytes = std::vector<std::uint8_t>;

namespace detail {

inline bool is_space(std::uint8_t c) {
  return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\v' || c == '\f';
}

class HeaderReader {
 public:
  explicit HeaderReader(std::span<const std::uint8_t> data) : data_(data) {}

  std::size_t offset() const { return pos_; }

  void skip_space_and_comments() {
    while (pos_ < data_.size()) {
      if (is_space(data_[pos_])) {
        ++pos_;
      } else if (data_[pos_] == '#') {
        while (pos_ < data_.size() && data_[pos_] != '\n') ++pos_;
      } else {
        break;
      }
    }
  }

  int read_int(const char* field) {
    skip_space_and_comments();
    const std::size_t start = pos_;
    long long v = 0;
    while (pos_ < data_.size() && data_[pos_] >= '0' && data_[pos_] <= '9') {
      v = v * 10 + (data_[pos_] - '0');
      if (v > 1'000'000'000) throw FormatError(std::string("header ") + field + " too large", start);
      ++pos_;
    }
    if (pos_ == start) {
      throw FormatError(std::string("expected header ") + field, start);
    }
    return static_cast<int>(v);
  }

  void single_space() {
    if (pos_ >= data_.size() || !is_space(data_[pos_])) {
      throw FormatError("expected whitespace after maxval", pos_);
    }
    ++pos_;
  }

 private:
  std::span<const std::uint8_t> data_;
  std::size_t pos_ = 2;
};

struct Header {
  char kind = '5';
  int width = 0;
  int height = 0;
  std::size_t payload = 0;
};

inline Header parse_header(std::span<const std::uint8_t> data) {
  if (data.size() < 2 || data[0] != 'P' || (data[1] != '5' && data[1] != '6')) {
    throw FormatError("unsupported image format; supported formats are binary PGM (P5) and binary PPM (P6)", 0);
  }
  Header h;
  h.kind = static_cast<char>(data[1]);
  HeaderReader reader(data);
  const std::size_t w_at = reader.offset();
  h.width = reader.read_int("width");
  h.height = reader.read_int("height");
  if (h.width < 1 || h.height < 1) throw FormatError("image dimensions must be positive", w_at);
  reader.skip_space_and_comments();
  const std::size_t maxval_at = reader.offset();
  const int maxval = reader.read_int("maxval");
  if (maxval != 255) {
    throw FormatError("maxval must be 255, got " + std::to_string(maxval), maxval_at);
  }
  reader.single_space();
  h.payload = reader.offset();
  return h;
}

inline void check_payload(std::span<const std::uint8_t> data, const Header& h, std::size_t channels) {
  const std::size_t need = static_cast<std::size_t>(h.width) * static_cast<std::size_t>(h.height) * channels;
  if (data.size() - h.payload < need) {
    throw FormatError("truncated payload: expected " + std::to_string(need) + " bytes, found " +
                          std::to_string(data.size() - h.payload),
                      data.size());
  }
}

inline std::string header(char kind, int w, int h) {
  return std::string("P") + kind + "\n" + std::to_string(w) + " " + std::to_string(h) + "\n255\n";
}

}  // namespace detail

// Either raster kind, as found in the file.
using AnyImage = std::variant<GrayImage, RgbImage>;

inline AnyImage decode(std::span<const std::uint8_t> data) {
  const auto h = detail::parse_header(data);
  if (h.kind == '5') {
    detail::check_payload(data, h, 1);
    const auto* first = data.data() + h.payload;
    return GrayImage(h.width, h.height,
                     std::vector<std::uint8_t>(first, first + static_cast<std::size_t>(h.width) * h.height));
  }
  detail::check_payload(data, h, 3);
  RgbImage rgb(h.width, h.height);
  const auto* p = data.data() + h.payload;
  for (auto& px : rgb.pixels) {
    px = {p[0], p[1], p[2]};
    p += 3;
  }
  return rgb;
}

inline Bytes encode(const GrayImage& image) {
  const auto head = detail::header('5', image.width, image.height);
  Bytes out(head.begin(), head.end());
  out.insert(out.end(), image.pixels.begin(), image.pixels.end());
  return out;
}

inline Bytes encode(const RgbImage& image) {
  const auto head = detail::header('6', image.width, image.height);
  Bytes out(head.begin(), head.end());
  out.reserve(out.size() + image.pixels.size() * 3);
  for (const auto& px : image.pixels) {
    out.push_back(px.r);
    out.push_back(px.g);
    out.push_back(px.b);
  }
  return out;
}

inline Bytes read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  return Bytes(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

inline void write_file(const std::filesystem::path& path, std::span<const std::uint8_t> bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("write failed for " + path.string());
}

}  // namespace hogtrack::netpbm
