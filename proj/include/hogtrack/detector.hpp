#pragma once

// Single-scale sliding-window detection, over the whole frame or over the
// salience-windowed frame with low-saliency windows skipped.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstddef>
#include <istream>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "hogtrack/error.hpp"
#include "hogtrack/geometry.hpp"
#include "hogtrack/hog.hpp"
#include "hogtrack/image.hpp"
#include "hogtrack/saliency.hpp"
#include "hogtrack/svm.hpp"
#include "hogtrack/text.hpp"

namespace hogtrack {

// Which pixels the salient path extracts features from. `windowed` is the
// frame multiplied by the saliency map; `original` uses the map only to gate
// windows, which keeps salient scores identical to full-frame scores.
enum class FeatureSource { windowed, original };

struct DetectParams {
  int stride = 8;
  double tau = 0.20;              // skip windows whose mean saliency is below this
  std::optional<double> nms_iou;  // greedy suppression when set
  FeatureSource features = FeatureSource::windowed;

  void validate(const HogConfig& hog) const {
    if (stride < 1 || stride % hog.cell != 0) {
      throw ConfigError("stride must be a positive multiple of the hog cell size (" + std::to_string(hog.cell) +
                        "), got " + std::to_string(stride));
    }
    if (!(tau >= 0.0 && tau <= 1.0)) throw ConfigError("tau must be in [0, 1]");
    if (nms_iou && !(*nms_iou > 0.0 && *nms_iou < 1.0)) throw ConfigError("nms iou must be in (0, 1)");
  }
};

struct Detection {
  int frame = 0;
  Box box;
  double score = 0.0;
  std::vector<double> features;
};

struct DetectStats {
  std::size_t windows_total = 0;
  std::size_t windows_classified = 0;
  double wall_time_s = 0.0;
};

struct DetectResult {
  std::vector<Detection> detections;
  DetectStats stats;
};

struct WindowPos {
  int x = 0;
  int y = 0;
  bool operator==(const WindowPos&) const = default;
};

inline std::vector<WindowPos> sliding_windows(int frame_w, int frame_h, int win_w, int win_h, int stride) {
  std::vector<WindowPos> out;
  if (frame_w < 1 || frame_h < 1 || win_w < 1 || win_h < 1 || stride < 1) return out;
  for (int y = 0; y + win_h <= frame_h; y += stride) {
    for (int x = 0; x + win_w <= frame_w; x += stride) out.push_back({x, y});
  }
  return out;
}

// Greedy suppression. Order: descending score, then lower y, then lower x.
inline std::vector<Detection> nms(std::vector<Detection> detections, double iou_cutoff) {
  std::stable_sort(detections.begin(), detections.end(), [](const Detection& a, const Detection& b) {
    if (a.score != b.score) return a.score > b.score;
    if (a.box.y != b.box.y) return a.box.y < b.box.y;
    return a.box.x < b.box.x;
  });
  std::vector<Detection> kept;
  for (auto& d : detections) {
    const bool clear = std::all_of(kept.begin(), kept.end(),
                                   [&](const Detection& k) { return iou(k.box, d.box) <= iou_cutoff; });
    if (clear) kept.push_back(std::move(d));
  }
  return kept;
}

namespace detail {

inline void check_model(const LinearSvmModel& model, const HogConfig& hog) {
  hog.validate();
  if (model.dim != hog.descriptor_length() || model.weights.size() != model.dim) {
    throw ShapeError("model dimension " + std::to_string(model.dim) + " does not match hog descriptor length " +
                     std::to_string(hog.descriptor_length()));
  }
}

inline double seconds_since(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

// Scores the windows for which `keep(pos)` holds, on `source`.
template <class Keep>
DetectResult scan(const GrayImage& source, const LinearSvmModel& model, const HogConfig& hog,
                  const DetectParams& params, int frame, Keep&& keep) {
  DetectResult result;
  const auto windows = sliding_windows(source.width, source.height, hog.window_w, hog.window_h, params.stride);
  result.stats.windows_total = windows.size();
  CellLattice lattice(source, hog);
  std::vector<double> buffer(hog.descriptor_length());
  for (const auto& pos : windows) {
    if (!keep(pos)) continue;
    ++result.stats.windows_classified;
    lattice.describe(pos.x, pos.y, buffer);
    const double s = score(model, buffer);
    if (s > model.threshold) {
      result.detections.push_back({frame, Box{pos.x, pos.y, hog.window_w, hog.window_h}, s, buffer});
    }
  }
  if (params.nms_iou) result.detections = nms(std::move(result.detections), *params.nms_iou);
  return result;
}

}  // namespace detail

inline DetectResult detect_full(const GrayImage& image, const LinearSvmModel& model, const HogConfig& hog,
                                const DetectParams& params, int frame) {
  detail::check_model(model, hog);
  params.validate(hog);
  const auto start = std::chrono::steady_clock::now();
  auto result = detail::scan(image, model, hog, params, frame, [](const WindowPos&) { return true; });
  result.stats.wall_time_s = detail::seconds_since(start);
  return result;
}

inline DetectResult detect_salient(const GrayImage& image, const SaliencyMap& map, const LinearSvmModel& model,
                                   const HogConfig& hog, const DetectParams& params, int frame) {
  detail::check_model(model, hog);
  params.validate(hog);
  if (map.width != image.width || map.height != image.height) {
    throw ShapeError("saliency map does not match frame dimensions");
  }
  for (double v : map.values) {
    if (!(v >= 0.0 && v <= 1.0)) throw DataError("saliency map must be normalized to [0, 1]");
  }
  const auto start = std::chrono::steady_clock::now();
  const SummedAreaTable table(map);
  auto keep = [&](const WindowPos& p) { return table.mean(p.x, p.y, hog.window_w, hog.window_h) >= params.tau; };
  DetectResult result;
  if (params.features == FeatureSource::windowed) {
    const GrayImage windowed = apply_window(image, map);
    result = detail::scan(windowed, model, hog, params, frame, keep);
  } else {
    result = detail::scan(image, model, hog, params, frame, keep);
  }
  result.stats.wall_time_s = detail::seconds_since(start);
  return result;
}

// ---------------------------------------------------------------------------
// Detections stream: `frame,x,y,w,h,score` per line, no header.

inline void write_detections(std::ostream& out, const std::vector<Detection>& detections) {
  for (const auto& d : detections) {
    out << d.frame << ',' << d.box.x << ',' << d.box.y << ',' << d.box.w << ',' << d.box.h << ','
        << text::shortest(d.score) << '\n';
  }
}

inline std::vector<Detection> read_detections(std::istream& in) {
  std::vector<Detection> out;
  std::string line;
  std::size_t number = 0;
  while (std::getline(in, line)) {
    ++number;
    const auto trimmed = text::trim(line);
    if (trimmed.empty() || trimmed.front() == '#') continue;
    const auto fields = text::split(trimmed);
    if (fields.size() != 6) throw ParseError("expected 6 fields frame,x,y,w,h,score", number);
    Detection d;
    d.frame = text::parse<int>(fields[0], number, "frame");
    d.box.x = text::parse<int>(fields[1], number, "x");
    d.box.y = text::parse<int>(fields[2], number, "y");
    d.box.w = text::parse<int>(fields[3], number, "w");
    d.box.h = text::parse<int>(fields[4], number, "h");
    d.score = text::parse<double>(fields[5], number, "score");
    if (d.box.w < 1 || d.box.h < 1) throw ParseError("box size must be positive", number);
    out.push_back(std::move(d));
  }
  return out;
}

}  // namespace hogtrack
