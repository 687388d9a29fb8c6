#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "hogtrack/error.hpp"

namespace hogtrack {

// 8-bit single-channel raster, row-major.
struct GrayImage {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> pixels;

  GrayImage() = default;
  GrayImage(int w, int h, std::uint8_t fill = 0) : width(w), height(h) {
    if (w < 1 || h < 1) {
      throw ShapeError("image dimensions must be positive, got " + std::to_string(w) + "x" +
                       std::to_string(h));
    }
    pixels.assign(static_cast<std::size_t>(w) * static_cast<std::size_t>(h), fill);
  }
  GrayImage(int w, int h, std::vector<std::uint8_t> data) : width(w), height(h), pixels(std::move(data)) {
    if (w < 1 || h < 1 || pixels.size() != static_cast<std::size_t>(w) * static_cast<std::size_t>(h)) {
      throw ShapeError("pixel buffer does not match " + std::to_string(w) + "x" + std::to_string(h));
    }
  }

  std::uint8_t at(int x, int y) const { return pixels[static_cast<std::size_t>(y) * width + x]; }
  std::uint8_t& at(int x, int y) { return pixels[static_cast<std::size_t>(y) * width + x]; }

  bool operator==(const GrayImage&) const = default;
};

struct Rgb {
  std::uint8_t r = 0, g = 0, b = 0;
  bool operator==(const Rgb&) const = default;
};

struct RgbImage {
  int width = 0;
  int height = 0;
  std::vector<Rgb> pixels;

  RgbImage() = default;
  RgbImage(int w, int h, Rgb fill = {}) : width(w), height(h) {
    if (w < 1 || h < 1) throw ShapeError("image dimensions must be positive");
    pixels.assign(static_cast<std::size_t>(w) * static_cast<std::size_t>(h), fill);
  }

  const Rgb& at(int x, int y) const { return pixels[static_cast<std::size_t>(y) * width + x]; }
  Rgb& at(int x, int y) { return pixels[static_cast<std::size_t>(y) * width + x]; }

  bool operator==(const RgbImage&) const = default;
};

// Luma 0.299/0.587/0.114, rounded half-up. Integer form keeps it exact.
inline std::uint8_t luma(Rgb c) {
  const unsigned v = 299u * c.r + 587u * c.g + 114u * c.b;
  return static_cast<std::uint8_t>((v + 500u) / 1000u);
}

inline GrayImage to_gray(const RgbImage& rgb) {
  GrayImage out(rgb.width, rgb.height);
  for (std::size_t i = 0; i < rgb.pixels.size(); ++i) out.pixels[i] = luma(rgb.pixels[i]);
  return out;
}

inline RgbImage to_rgb(const GrayImage& gray) {
  RgbImage out(gray.width, gray.height);
  for (std::size_t i = 0; i < gray.pixels.size(); ++i) {
    const auto v = gray.pixels[i];
    out.pixels[i] = {v, v, v};
  }
  return out;
}

}  // namespace hogtrack
