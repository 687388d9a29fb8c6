#pragma once

// In-place iterative radix-2 FFT (1-D and row-column 2-D).

#include <cmath>
#include <complex>
#include <cstddef>
#include <numbers>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "hogtrack/error.hpp"

namespace hogtrack {

using Complex = std::complex<double>;

constexpr bool is_power_of_two(std::size_t n) noexcept { return n != 0 && (n & (n - 1)) == 0; }

// Forward transform uses exp(-2 pi i k n / N); the inverse is scaled by 1/N.
inline void fft(std::span<Complex> data, bool inverse = false) {
  const std::size_t n = data.size();
  if (!is_power_of_two(n)) throw ConfigError("fft length must be a power of two, got " + std::to_string(n));
  for (std::size_t i = 1, j = 0; i < n; ++i) {
    std::size_t bit = n >> 1;
    for (; j & bit; bit >>= 1) j ^= bit;
    j ^= bit;
    if (i < j) std::swap(data[i], data[j]);
  }
  const double sign = inverse ? 1.0 : -1.0;
  std::vector<Complex> twiddle;
  for (std::size_t len = 2; len <= n; len <<= 1) {
    const std::size_t half = len / 2;
    twiddle.resize(half);
    for (std::size_t k = 0; k < half; ++k) {
      twiddle[k] = std::polar(1.0, sign * 2.0 * std::numbers::pi * static_cast<double>(k) / static_cast<double>(len));
    }
    for (std::size_t start = 0; start < n; start += len) {
      for (std::size_t k = 0; k < half; ++k) {
        const Complex u = data[start + k];
        const Complex v = data[start + k + half] * twiddle[k];
        data[start + k] = u + v;
        data[start + k + half] = u - v;
      }
    }
  }
  if (inverse) {
    const double scale = 1.0 / static_cast<double>(n);
    for (auto& c : data) c *= scale;
  }
}

// Row-major width x height grid; both dimensions powers of two.
inline void fft2d(std::span<Complex> data, std::size_t width, std::size_t height, bool inverse = false) {
  if (data.size() != width * height) throw ShapeError("fft2d buffer does not match dimensions");
  for (std::size_t y = 0; y < height; ++y) fft(data.subspan(y * width, width), inverse);
  std::vector<Complex> column(height);
  for (std::size_t x = 0; x < width; ++x) {
    for (std::size_t y = 0; y < height; ++y) column[y] = data[y * width + x];
    fft(column, inverse);
    for (std::size_t y = 0; y < height; ++y) data[y * width + x] = column[y];
  }
}

}  // namespace hogtrack
