#pragma once

// Saliency maps as region proposal: the provider seam, a spectral-residual
// provider, PGM import/export, and salience windowing of frames.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include "hogtrack/error.hpp"
#include "hogtrack/fft.hpp"
#include "hogtrack/image.hpp"
#include "hogtrack/netpbm.hpp"

namespace hogtrack {

struct SaliencyMap {
  int width = 0;
  int height = 0;
  std::vector<double> values;

  SaliencyMap() = default;
  SaliencyMap(int w, int h, double fill = 0.0)
      : width(w), height(h), values(static_cast<std::size_t>(w) * static_cast<std::size_t>(h), fill) {
    if (w < 1 || h < 1) throw ShapeError("saliency map dimensions must be positive");
  }

  double at(int x, int y) const { return values[static_cast<std::size_t>(y) * width + x]; }
  double& at(int x, int y) { return values[static_cast<std::size_t>(y) * width + x]; }
};

// Spans below this are treated as a constant map.
inline constexpr double kDegenerateSpan = 1e-12;

inline SaliencyMap normalize_map(const SaliencyMap& map) {
  if (map.values.empty()) return map;
  for (double v : map.values) {
    if (!std::isfinite(v)) throw DataError("saliency map contains a non-finite value");
  }
  const auto [lo_it, hi_it] = std::minmax_element(map.values.begin(), map.values.end());
  const double lo = *lo_it;
  const double span = *hi_it - lo;
  SaliencyMap out = map;
  if (span < kDegenerateSpan) {
    std::fill(out.values.begin(), out.values.end(), 0.0);
    return out;
  }
  for (double& v : out.values) v = (v - lo) / span;
  return out;
}

// pixel * saliency, rounded half-up and clamped to [0, 255].
inline GrayImage apply_window(const GrayImage& image, const SaliencyMap& map) {
  if (image.width != map.width || image.height != map.height) {
    throw ShapeError("saliency map " + std::to_string(map.width) + "x" + std::to_string(map.height) +
                     " does not match image " + std::to_string(image.width) + "x" + std::to_string(image.height));
  }
  GrayImage out(image.width, image.height);
  for (std::size_t i = 0; i < image.pixels.size(); ++i) {
    const double v = std::floor(static_cast<double>(image.pixels[i]) * map.values[i] + 0.5);
    out.pixels[i] = static_cast<std::uint8_t>(std::clamp(v, 0.0, 255.0));
  }
  return out;
}

namespace detail {

inline void check_rect(int map_w, int map_h, int x, int y, int w, int h) {
  if (w < 1 || h < 1 || x < 0 || y < 0 || x + w > map_w || y + h > map_h) {
    throw BoundsError("rectangle (" + std::to_string(x) + ", " + std::to_string(y) + ", " + std::to_string(w) +
                      ", " + std::to_string(h) + ") outside " + std::to_string(map_w) + "x" +
                      std::to_string(map_h) + " map");
  }
}

}  // namespace detail

inline double mean_saliency(const SaliencyMap& map, int x, int y, int w, int h) {
  detail::check_rect(map.width, map.height, x, y, w, h);
  double sum = 0.0;
  for (int yy = y; yy < y + h; ++yy) {
    for (int xx = x; xx < x + w; ++xx) sum += map.at(xx, yy);
  }
  return sum / (static_cast<double>(w) * h);
}

// Summed-area table for repeated rectangle means.
class SummedAreaTable {
 public:
  explicit SummedAreaTable(const SaliencyMap& map)
      : width_(map.width), height_(map.height),
        sums_(static_cast<std::size_t>(map.width + 1) * (map.height + 1), 0.0) {
    for (int y = 0; y < height_; ++y) {
      double row = 0.0;
      for (int x = 0; x < width_; ++x) {
        row += map.at(x, y);
        sums_[index(x + 1, y + 1)] = sums_[index(x + 1, y)] + row;
      }
    }
  }

  double sum(int x, int y, int w, int h) const {
    detail::check_rect(width_, height_, x, y, w, h);
    return sums_[index(x + w, y + h)] - sums_[index(x, y + h)] - sums_[index(x + w, y)] + sums_[index(x, y)];
  }

  double mean(int x, int y, int w, int h) const { return sum(x, y, w, h) / (static_cast<double>(w) * h); }

 private:
  std::size_t index(int x, int y) const { return static_cast<std::size_t>(y) * (width_ + 1) + x; }

  int width_;
  int height_;
  std::vector<double> sums_;
};

namespace detail {

// Area-averaging resample weights: output i covers source [i*s, (i+1)*s).
inline std::vector<double> area_resample_1d(std::span<const double> src, std::size_t stride, std::size_t src_len,
                                            std::size_t dst_len, std::size_t offset) {
  std::vector<double> out(dst_len, 0.0);
  const double scale = static_cast<double>(src_len) / static_cast<double>(dst_len);
  for (std::size_t i = 0; i < dst_len; ++i) {
    const double lo = static_cast<double>(i) * scale;
    const double hi = static_cast<double>(i + 1) * scale;
    double acc = 0.0;
    const auto first = static_cast<std::size_t>(std::floor(lo));
    for (std::size_t j = first; j < src_len && static_cast<double>(j) < hi; ++j) {
      const double overlap = std::min(static_cast<double>(j + 1), hi) - std::max(static_cast<double>(j), lo);
      if (overlap > 0.0) acc += overlap * src[offset + j * stride];
    }
    out[i] = acc / scale;
  }
  return out;
}

inline std::vector<double> area_downscale(const GrayImage& image, int size) {
  const std::size_t w = image.width, h = image.height, n = size;
  std::vector<double> src(image.pixels.begin(), image.pixels.end());
  std::vector<double> rows(n * h);
  for (std::size_t y = 0; y < h; ++y) {
    const auto r = area_resample_1d(src, 1, w, n, y * w);
    std::copy(r.begin(), r.end(), rows.begin() + static_cast<std::ptrdiff_t>(y * n));
  }
  std::vector<double> out(n * n);
  for (std::size_t x = 0; x < n; ++x) {
    const auto c = area_resample_1d(rows, n, h, n, x);
    for (std::size_t y = 0; y < n; ++y) out[y * n + x] = c[y];
  }
  return out;
}

// One box pass of radius r along rows then columns, replicate borders.
// Summed directly so a constant field stays exactly constant.
inline void box_blur(std::vector<double>& v, int n, int r) {
  if (r <= 0) return;
  std::vector<double> tmp(v.size());
  const double inv = 1.0 / (2 * r + 1);
  for (int y = 0; y < n; ++y) {
    for (int x = 0; x < n; ++x) {
      double s = 0.0;
      for (int k = -r; k <= r; ++k) s += v[static_cast<std::size_t>(y) * n + std::clamp(x + k, 0, n - 1)];
      tmp[static_cast<std::size_t>(y) * n + x] = s * inv;
    }
  }
  for (int y = 0; y < n; ++y) {
    for (int x = 0; x < n; ++x) {
      double s = 0.0;
      for (int k = -r; k <= r; ++k) s += tmp[static_cast<std::size_t>(std::clamp(y + k, 0, n - 1)) * n + x];
      v[static_cast<std::size_t>(y) * n + x] = s * inv;
    }
  }
}

inline SaliencyMap bilinear_upscale(const std::vector<double>& src, int n, int width, int height) {
  SaliencyMap out(width, height);
  auto coord = [n](int i, int len) {
    const double s = (i + 0.5) * static_cast<double>(n) / len - 0.5;
    return std::clamp(s, 0.0, static_cast<double>(n - 1));
  };
  for (int y = 0; y < height; ++y) {
    const double sy = coord(y, height);
    const int y0 = static_cast<int>(sy);
    const int y1 = std::min(y0 + 1, n - 1);
    const double fy = sy - y0;
    for (int x = 0; x < width; ++x) {
      const double sx = coord(x, width);
      const int x0 = static_cast<int>(sx);
      const int x1 = std::min(x0 + 1, n - 1);
      const double fx = sx - x0;
      auto at = [&](int xx, int yy) { return src[static_cast<std::size_t>(yy) * n + xx]; };
      const double top = at(x0, y0) + fx * (at(x1, y0) - at(x0, y0));
      const double bottom = at(x0, y1) + fx * (at(x1, y1) - at(x0, y1));
      out.at(x, y) = top + fy * (bottom - top);
    }
  }
  return out;
}

}  // namespace detail

// Amplitudes below this fraction of the spectrum's peak are numerical noise
// and carry no phase.
inline constexpr double kSpectralFloor = 1e-10;

inline SaliencyMap spectral_residual(const GrayImage& image, int blur_radius = 3, int resize_to = 64) {
  if (resize_to < 1 || !is_power_of_two(static_cast<std::size_t>(resize_to))) {
    throw ConfigError("spectral residual resize must be a power of two, got " + std::to_string(resize_to));
  }
  if (blur_radius < 0) throw ConfigError("blur radius must be non-negative");
  const int n = resize_to;
  const std::size_t count = static_cast<std::size_t>(n) * n;

  const auto small = detail::area_downscale(image, n);
  std::vector<Complex> spectrum(small.begin(), small.end());
  fft2d(spectrum, n, n);

  std::vector<double> amplitude(count);
  double peak = 0.0;
  for (std::size_t i = 0; i < count; ++i) {
    amplitude[i] = std::abs(spectrum[i]);
    peak = std::max(peak, amplitude[i]);
  }
  if (peak == 0.0) return SaliencyMap(image.width, image.height, 0.0);
  const double floor = peak * kSpectralFloor;

  std::vector<double> log_amp(count, 0.0);
  for (std::size_t i = 0; i < count; ++i) {
    if (amplitude[i] > floor) log_amp[i] = std::log(amplitude[i]);
  }

  // Residual = log amplitude minus its 3x3 mean (spectrum is periodic).
  // Bins at or below the floor have no log amplitude and are left out of
  // the mean.
  std::vector<Complex> residual(count);
  for (int v = 0; v < n; ++v) {
    for (int u = 0; u < n; ++u) {
      const std::size_t i = static_cast<std::size_t>(v) * n + u;
      if (amplitude[i] <= floor) {
        residual[i] = 0.0;
        continue;
      }
      double s = 0.0;
      int used = 0;
      for (int dv = -1; dv <= 1; ++dv) {
        for (int du = -1; du <= 1; ++du) {
          const std::size_t j =
              static_cast<std::size_t>((v + dv + n) % n) * n + static_cast<std::size_t>((u + du + n) % n);
          if (amplitude[j] <= floor) continue;
          s += log_amp[j];
          ++used;
        }
      }
      const double r = log_amp[i] - s / used;
      residual[i] = std::exp(r) * (spectrum[i] / amplitude[i]);
    }
  }
  fft2d(residual, n, n, true);

  std::vector<double> energy(count);
  for (std::size_t i = 0; i < count; ++i) energy[i] = std::norm(residual[i]);
  for (int pass = 0; pass < 3; ++pass) detail::box_blur(energy, n, blur_radius);

  return normalize_map(detail::bilinear_upscale(energy, n, image.width, image.height));
}

// ---------------------------------------------------------------------------
// Map files: binary PGM, maxval 255. Load divides by 255; save multiplies
// by 255 and rounds half-up.

inline std::uint8_t map_byte(double v) {
  return static_cast<std::uint8_t>(std::clamp(std::floor(v * 255.0 + 0.5), 0.0, 255.0));
}

inline netpbm::Bytes encode_map(const SaliencyMap& map) {
  GrayImage raster(map.width, map.height);
  for (std::size_t i = 0; i < map.values.size(); ++i) raster.pixels[i] = map_byte(map.values[i]);
  return netpbm::encode(raster);
}

inline SaliencyMap decode_map(std::span<const std::uint8_t> bytes) {
  auto any = netpbm::decode(bytes);
  const auto* gray = std::get_if<GrayImage>(&any);
  if (gray == nullptr) throw FormatError("saliency maps must be binary PGM (P5)", 0);
  SaliencyMap map(gray->width, gray->height);
  for (std::size_t i = 0; i < gray->pixels.size(); ++i) map.values[i] = gray->pixels[i] / 255.0;
  return map;
}

inline void save_map(const SaliencyMap& map, const std::filesystem::path& path) {
  netpbm::write_file(path, encode_map(map));
}

inline SaliencyMap load_map(const std::filesystem::path& path) { return decode_map(netpbm::read_file(path)); }

// ---------------------------------------------------------------------------

class SaliencyProvider {
 public:
  virtual ~SaliencyProvider() = default;
  virtual std::string name() const = 0;
  // `frame_stem` is the frame's file name without extension; providers that
  // look maps up externally key on it.
  virtual SaliencyMap compute(const GrayImage& image, std::string_view frame_stem) const = 0;
};

class SpectralResidualProvider final : public SaliencyProvider {
 public:
  explicit SpectralResidualProvider(int blur_radius = 3, int resize_to = 64)
      : blur_radius_(blur_radius), resize_to_(resize_to) {
    if (!is_power_of_two(static_cast<std::size_t>(std::max(resize_to, 0)))) {
      throw ConfigError("spectral residual resize must be a power of two");
    }
  }

  std::string name() const override { return "spectral"; }

  SaliencyMap compute(const GrayImage& image, std::string_view) const override {
    return spectral_residual(image, blur_radius_, resize_to_);
  }

 private:
  int blur_radius_;
  int resize_to_;
};

// Reads `<directory>/<frame_stem>.pgm`.
class FileMapProvider final : public SaliencyProvider {
 public:
  explicit FileMapProvider(std::filesystem::path directory) : directory_(std::move(directory)) {}

  std::string name() const override { return "file:" + directory_.string(); }

  SaliencyMap compute(const GrayImage& image, std::string_view frame_stem) const override {
    const auto path = directory_ / (std::string(frame_stem) + ".pgm");
    if (!std::filesystem::exists(path)) {
      throw IoError("no saliency map for frame '" + std::string(frame_stem) + "' (expected " + path.string() + ")");
    }
    auto map = load_map(path);
    if (map.width != image.width || map.height != image.height) {
      throw ShapeError("saliency map for frame '" + std::string(frame_stem) + "' is " + std::to_string(map.width) +
                       "x" + std::to_string(map.height) + ", frame is " + std::to_string(image.width) + "x" +
                       std::to_string(image.height));
    }
    return map;
  }

 private:
  std::filesystem::path directory_;
};

// "spectral" or "file:<directory>".
inline std::unique_ptr<SaliencyProvider> make_provider(std::string_view name) {
  if (name == "spectral") return std::make_unique<SpectralResidualProvider>();
  constexpr std::string_view file_prefix = "file:";
  if (name.starts_with(file_prefix) && name.size() > file_prefix.size()) {
    return std::make_unique<FileMapProvider>(std::filesystem::path(std::string(name.substr(file_prefix.size()))));
  }
  throw ConfigError("unknown saliency provider '" + std::string(name) + "' (expected spectral or file:<dir>)");
}

}  // namespace hogtrack
