#pragma once

// Dense histogram-of-oriented-gradients features.
//
// Pipeline: centered [-1 0 1] gradients with replicate borders, unsigned
// orientation, magnitude votes split linearly between the two nearest
// orientation bins (no spatial interpolation), L2-Hys block normalization.
// Every path below (whole-field, per-window, dense, lazy lattice) accumulates
// pixels in the same order so their results agree bit for bit.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numbers>
#include <span>
#include <string>
#include <vector>

#include "hogtrack/error.hpp"
#include "hogtrack/image.hpp"

namespace hogtrack {

struct HogConfig {
  int window_w = 64;
  int window_h = 128;
  int cell = 8;          // cell side, pixels
  int block = 2;         // block side, cells
  int block_stride = 8;  // pixels
  int bins = 9;
  double clip = 0.2;     // L2-Hys clipping value

  int cells_x() const { return window_w / cell; }
  int cells_y() const { return window_h / cell; }
  int stride_cells() const { return block_stride / cell; }
  int blocks_x() const { return (window_w - block * cell) / block_stride + 1; }
  int blocks_y() const { return (window_h - block * cell) / block_stride + 1; }
  std::size_t block_length() const { return static_cast<std::size_t>(block) * block * bins; }
  std::size_t descriptor_length() const {
    return static_cast<std::size_t>(blocks_x()) * blocks_y() * block_length();
  }

  void validate() const {
    auto fail = [](const std::string& msg) { throw ConfigError("hog config: " + msg); };
    if (cell < 1) fail("cell must be positive");
    if (window_w < 1 || window_h < 1) fail("window must be positive");
    if (window_w % cell != 0 || window_h % cell != 0) fail("window must be a multiple of the cell size");
    if (block < 1) fail("block must be positive");
    if (block > cells_x() || block > cells_y()) fail("block larger than window");
    if (block_stride < 1 || block_stride % cell != 0) fail("block stride must be a positive multiple of the cell size");
    if ((cells_x() - block) % stride_cells() != 0 || (cells_y() - block) % stride_cells() != 0) {
      fail("blocks must tile the window exactly");
    }
    if (bins < 2) fail("bins must be at least 2");
    if (!(clip > 0.0 && clip <= 1.0)) fail("clip must be in (0, 1]");
  }

  bool operator==(const HogConfig&) const = default;
};

struct HogDescriptor {
  std::vector<double> values;
  HogConfig config;
};

struct GradientField {
  int width = 0;
  int height = 0;
  std::vector<double> magnitude;
  std::vector<double> orientation;  // degrees, [0, 180)

  double magnitude_at(int x, int y) const { return magnitude[static_cast<std::size_t>(y) * width + x]; }
  double orientation_at(int x, int y) const { return orientation[static_cast<std::size_t>(y) * width + x]; }
};

// Grid of per-cell orientation histograms, row-major over cells.
struct CellGrid {
  int cells_x = 0;
  int cells_y = 0;
  int bins = 0;
  std::vector<double> values;

  CellGrid() = default;
  CellGrid(int cx, int cy, int b)
      : cells_x(cx), cells_y(cy), bins(b), values(static_cast<std::size_t>(cx) * cy * b, 0.0) {}

  std::span<const double> cell(int cx, int cy) const {
    return {values.data() + (static_cast<std::size_t>(cy) * cells_x + cx) * bins, static_cast<std::size_t>(bins)};
  }
  std::span<double> cell(int cx, int cy) {
    return {values.data() + (static_cast<std::size_t>(cy) * cells_x + cx) * bins, static_cast<std::size_t>(bins)};
  }
};

namespace detail {

inline constexpr double kNormEpsilon = 1e-6;

struct PixelGradient {
  double magnitude;
  double orientation;
};

inline PixelGradient gradient_at(const GrayImage& image, int x, int y) {
  const int xl = std::max(x - 1, 0);
  const int xr = std::min(x + 1, image.width - 1);
  const int yu = std::max(y - 1, 0);
  const int yd = std::min(y + 1, image.height - 1);
  const double gx = static_cast<double>(image.at(xr, y)) - static_cast<double>(image.at(xl, y));
  const double gy = static_cast<double>(image.at(x, yd)) - static_cast<double>(image.at(x, yu));
  double angle = std::atan2(gy, gx) * (180.0 / std::numbers::pi);
  if (angle < 0.0) angle += 180.0;
  if (angle >= 180.0) angle -= 180.0;
  return {std::sqrt(gx * gx + gy * gy), angle};
}

// Splits `magnitude` between the two bins whose centers ((i + 0.5) * width)
// bracket `orientation`, wrapping around 180 degrees.
inline void vote(std::span<double> hist, double magnitude, double orientation) {
  const int bins = static_cast<int>(hist.size());
  const double pos = orientation / (180.0 / bins) - 0.5;
  const double lower = std::floor(pos);
  const double frac = pos - lower;
  const int b0 = ((static_cast<int>(lower) % bins) + bins) % bins;
  const int b1 = (b0 + 1) % bins;
  hist[b0] += magnitude * (1.0 - frac);
  hist[b1] += magnitude * frac;
}

inline void l2_normalize(std::span<double> v) {
  double sq = 0.0;
  for (double x : v) sq += x * x;
  const double denom = std::sqrt(sq + kNormEpsilon * kNormEpsilon);
  for (double& x : v) x /= denom;
}

// Writes the normalized descriptor of a window whose top-left cell is
// (cx0, cy0) into `out`. `cell_at(cx, cy)` yields a cell histogram.
template <class CellAccess>
void normalize_blocks(CellAccess&& cell_at, int cx0, int cy0, const HogConfig& config, std::span<double> out) {
  const std::size_t block_len = config.block_length();
  const int step = config.stride_cells();
  std::size_t offset = 0;
  for (int by = 0; by < config.blocks_y(); ++by) {
    for (int bx = 0; bx < config.blocks_x(); ++bx) {
      auto block = out.subspan(offset, block_len);
      std::size_t k = 0;
      for (int cy = 0; cy < config.block; ++cy) {
        for (int cx = 0; cx < config.block; ++cx) {
          const std::span<const double> hist = cell_at(cx0 + bx * step + cx, cy0 + by * step + cy);
          for (double v : hist) block[k++] = v;
        }
      }
      l2_normalize(block);
      for (double& v : block) v = std::min(v, config.clip);
      l2_normalize(block);
      offset += block_len;
    }
  }
}

}  // namespace detail

inline GradientField compute_gradients(const GrayImage& image) {
  GradientField field;
  field.width = image.width;
  field.height = image.height;
  field.magnitude.resize(image.pixels.size());
  field.orientation.resize(image.pixels.size());
  for (int y = 0; y < image.height; ++y) {
    for (int x = 0; x < image.width; ++x) {
      const auto g = detail::gradient_at(image, x, y);
      const std::size_t i = static_cast<std::size_t>(y) * image.width + x;
      field.magnitude[i] = g.magnitude;
      field.orientation[i] = g.orientation;
    }
  }
  return field;
}

// Histograms for the window whose top-left pixel is (x, y).
inline CellGrid cell_histograms(const GradientField& grad, int x, int y, const HogConfig& config) {
  config.validate();
  if (x < 0 || y < 0 || x + config.window_w > grad.width || y + config.window_h > grad.height) {
    throw BoundsError("window at (" + std::to_string(x) + ", " + std::to_string(y) + ") exceeds " +
                      std::to_string(grad.width) + "x" + std::to_string(grad.height) + " field");
  }
  CellGrid grid(config.cells_x(), config.cells_y(), config.bins);
  for (int cy = 0; cy < grid.cells_y; ++cy) {
    for (int cx = 0; cx < grid.cells_x; ++cx) {
      auto hist = grid.cell(cx, cy);
      for (int py = 0; py < config.cell; ++py) {
        for (int px = 0; px < config.cell; ++px) {
          const int gx = x + cx * config.cell + px;
          const int gy = y + cy * config.cell + py;
          detail::vote(hist, grad.magnitude_at(gx, gy), grad.orientation_at(gx, gy));
        }
      }
    }
  }
  return grid;
}

inline HogDescriptor block_normalize(const CellGrid& cells, const HogConfig& config) {
  config.validate();
  if (cells.cells_x != config.cells_x() || cells.cells_y != config.cells_y() || cells.bins != config.bins) {
    throw ShapeError("cell grid does not match hog config");
  }
  HogDescriptor d{std::vector<double>(config.descriptor_length()), config};
  detail::normalize_blocks([&](int cx, int cy) { return cells.cell(cx, cy); }, 0, 0, config, d.values);
  return d;
}

inline HogDescriptor hog_window(const GradientField& grad, int x, int y, const HogConfig& config) {
  return block_normalize(cell_histograms(grad, x, y, config), config);
}

// Gradients come from the whole image, so borders are only replicated at the
// true image edge.
inline HogDescriptor hog_window(const GrayImage& image, int x, int y, const HogConfig& config) {
  config.validate();
  if (x < 0 || y < 0 || x + config.window_w > image.width || y + config.window_h > image.height) {
    throw BoundsError("window at (" + std::to_string(x) + ", " + std::to_string(y) + ") exceeds image");
  }
  return hog_window(compute_gradients(image), x, y, config);
}

// Cell histograms on the image-wide lattice of cells anchored at (0, 0),
// computed on first use. Windows at cell-aligned positions read their cells
// from here, so overlapping windows share the histogram work and untouched
// regions of the image are never visited.
class CellLattice {
 public:
  CellLattice(const GrayImage& image, const HogConfig& config)
      : image_(&image),
        config_(config),
        grid_(image.width / config.cell, image.height / config.cell, config.bins),
        ready_(static_cast<std::size_t>(grid_.cells_x) * grid_.cells_y, 0) {
    config_.validate();
  }

  const HogConfig& config() const { return config_; }
  std::size_t cells_computed() const { return computed_; }

  std::span<const double> cell(int cx, int cy) {
    const std::size_t idx = static_cast<std::size_t>(cy) * grid_.cells_x + cx;
    if (!ready_[idx]) {
      auto hist = grid_.cell(cx, cy);
      const int x0 = cx * config_.cell;
      const int y0 = cy * config_.cell;
      for (int py = 0; py < config_.cell; ++py) {
        for (int px = 0; px < config_.cell; ++px) {
          const auto g = detail::gradient_at(*image_, x0 + px, y0 + py);
          detail::vote(hist, g.magnitude, g.orientation);
        }
      }
      ready_[idx] = 1;
      ++computed_;
    }
    return grid_.cell(cx, cy);
  }

  // (x, y) must be multiples of the cell size with the window in bounds.
  void describe(int x, int y, std::span<double> out) {
    if (x % config_.cell != 0 || y % config_.cell != 0) {
      throw ConfigError("lattice windows must be cell aligned");
    }
    if (x < 0 || y < 0 || x + config_.window_w > image_->width || y + config_.window_h > image_->height) {
      throw BoundsError("window at (" + std::to_string(x) + ", " + std::to_string(y) + ") exceeds image");
    }
    if (out.size() != config_.descriptor_length()) throw ShapeError("descriptor buffer has wrong length");
    detail::normalize_blocks([this](int cx, int cy) { return cell(cx, cy); }, x / config_.cell,
                             y / config_.cell, config_, out);
  }

  HogDescriptor describe(int x, int y) {
    HogDescriptor d{std::vector<double>(config_.descriptor_length()), config_};
    describe(x, y, d.values);
    return d;
  }

 private:
  const GrayImage* image_;
  HogConfig config_;
  CellGrid grid_;
  std::vector<unsigned char> ready_;
  std::size_t computed_ = 0;
};

struct DenseEntry {
  int x = 0;
  int y = 0;
  HogDescriptor descriptor;
};

// Descriptors at every in-bounds window whose corner lies on the stride
// lattice, row-major.
inline std::vector<DenseEntry> hog_dense(const GrayImage& image, const HogConfig& config, int stride) {
  config.validate();
  if (stride < 1 || stride % config.cell != 0) {
    throw ConfigError("dense stride must be a positive multiple of the cell size (" + std::to_string(config.cell) +
                      "), got " + std::to_string(stride));
  }
  std::vector<DenseEntry> out;
  if (config.window_w > image.width || config.window_h > image.height) return out;
  CellLattice lattice(image, config);
  for (int y = 0; y + config.window_h <= image.height; y += stride) {
    for (int x = 0; x + config.window_w <= image.width; x += stride) {
      out.push_back({x, y, lattice.describe(x, y)});
    }
  }
  return out;
}

}  // namespace hogtrack
