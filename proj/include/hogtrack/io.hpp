#pragma once

// Frame and annotation ingestion, training-crop sampling and overlays.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>
#include <utility>
#include <vector>

#include "hogtrack/detector.hpp"
#include "hogtrack/error.hpp"
#include "hogtrack/eval.hpp"
#include "hogtrack/geometry.hpp"
#include "hogtrack/image.hpp"
#include "hogtrack/netpbm.hpp"
#include "hogtrack/random.hpp"
#include "hogtrack/text.hpp"
#include "hogtrack/tracker.hpp"

namespace hogtrack {

// P5 as is; P6 converted with the luma rule.
inline GrayImage decode_image(std::span<const std::uint8_t> bytes) {
  auto any = netpbm::decode(bytes);
  if (auto* gray = std::get_if<GrayImage>(&any)) return std::move(*gray);
  return to_gray(std::get<RgbImage>(any));
}

inline GrayImage decode_image(const std::filesystem::path& path) {
  try {
    return decode_image(netpbm::read_file(path));
  } catch (const FormatError& e) {
    throw FormatError(path.string() + ": " + e.what(), e.offset());
  }
}

inline void write_pgm(const GrayImage& image, const std::filesystem::path& path) {
  netpbm::write_file(path, netpbm::encode(image));
}

inline void write_ppm(const RgbImage& image, const std::filesystem::path& path) {
  netpbm::write_file(path, netpbm::encode(image));
}

// Image files of a directory in byte-wise lexicographic order of file name.
class FrameSequence {
 public:
  explicit FrameSequence(std::filesystem::path directory) : directory_(std::move(directory)) {
    if (!std::filesystem::is_directory(directory_)) {
      throw IoError("frame directory " + directory_.string() + " does not exist");
    }
    for (const auto& entry : std::filesystem::directory_iterator(directory_)) {
      if (!entry.is_regular_file()) continue;
      const auto ext = entry.path().extension().string();
      if (ext == ".pgm" || ext == ".ppm" || ext == ".pnm") files_.push_back(entry.path());
    }
    std::sort(files_.begin(), files_.end(),
              [](const auto& a, const auto& b) { return a.filename().string() < b.filename().string(); });
    if (files_.empty()) {
      throw IoError("no .pgm/.ppm frames in " + directory_.string() +
                    " (convert other formats first, e.g. `convert in.jpg out.pgm`)");
    }
    const auto first = decode_image(files_.front());
    width_ = first.width;
    height_ = first.height;
  }

  std::size_t size() const { return files_.size(); }
  int width() const { return width_; }
  int height() const { return height_; }
  const std::filesystem::path& path(std::size_t i) const { return files_.at(i); }
  std::string stem(std::size_t i) const { return files_.at(i).stem().string(); }

  GrayImage frame(std::size_t i) const {
    auto image = decode_image(files_.at(i));
    if (image.width != width_ || image.height != height_) {
      throw ShapeError(files_[i].string() + " is " + std::to_string(image.width) + "x" +
                       std::to_string(image.height) + ", sequence frames are " + std::to_string(width_) + "x" +
                       std::to_string(height_));
    }
    return image;
  }

 private:
  std::filesystem::path directory_;
  std::vector<std::filesystem::path> files_;
  int width_ = 0;
  int height_ = 0;
};

struct AnnotationSet {
  std::vector<GroundTruthBox> boxes;

  std::vector<Box> for_frame(int frame) const {
    std::vector<Box> out;
    for (const auto& b : boxes) {
      if (b.frame == frame) out.push_back(b.box);
    }
    return out;
  }
};

// `frame,x,y,w,h` per line (frame = index in the sequence). A non-numeric
// first line is taken as a header.
inline AnnotationSet parse_annotations(std::istream& in, int frame_w, int frame_h) {
  AnnotationSet set;
  std::string line;
  std::size_t number = 0;
  bool first = true;
  while (std::getline(in, line)) {
    ++number;
    const auto trimmed = text::trim(line);
    if (trimmed.empty()) continue;
    const auto fields = text::split(trimmed);
    if (first) {
      first = false;
      int probe = 0;
      if (!text::try_parse(fields[0], probe)) continue;
    }
    if (fields.size() != 5) throw ParseError("expected 5 fields frame,x,y,w,h", number);
    GroundTruthBox gt;
    gt.frame = text::parse<int>(fields[0], number, "frame");
    gt.box = {text::parse<int>(fields[1], number, "x"), text::parse<int>(fields[2], number, "y"),
              text::parse<int>(fields[3], number, "w"), text::parse<int>(fields[4], number, "h")};
    if (gt.frame < 0) throw ParseError("frame index must be non-negative", number);
    if (!gt.box.inside(frame_w, frame_h)) {
      throw ParseError("box (" + std::string(trimmed) + ") is not inside the " + std::to_string(frame_w) + "x" +
                           std::to_string(frame_h) + " frame",
                       number);
    }
    set.boxes.push_back(gt);
  }
  return set;
}

inline AnnotationSet load_annotations(const std::filesystem::path& path, int frame_w, int frame_h) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open annotations " + path.string());
  try {
    return parse_annotations(in, frame_w, frame_h);
  } catch (const ParseError& e) {
    throw ParseError(path.string() + ": " + e.what(), e.line());
  }
}

// Nearest-neighbour resample of a rectangle to w x h.
inline GrayImage crop_resize(const GrayImage& image, const Box& region, int w, int h) {
  GrayImage out(w, h);
  for (int y = 0; y < h; ++y) {
    const int sy = std::min(region.y + static_cast<int>((y + 0.5) * region.h / h), region.y + region.h - 1);
    for (int x = 0; x < w; ++x) {
      const int sx = std::min(region.x + static_cast<int>((x + 0.5) * region.w / w), region.x + region.w - 1);
      out.at(x, y) = image.at(sx, sy);
    }
  }
  return out;
}

struct Crop {
  GrayImage image;
  int label = 1;
  int frame = 0;
  Box source;
};

struct CropSet {
  std::vector<Crop> crops;
  std::size_t skipped_negatives = 0;
};

inline constexpr double kNegativeMaxIou = 0.2;
inline constexpr int kNegativeAttempts = 100;

// Positives: annotated boxes resized to the window. Negatives: uniformly
// placed window-sized crops overlapping no truth box by IoU 0.2 or more.
inline CropSet sample_crops(const FrameSequence& sequence, const AnnotationSet& annotations, int negatives_per_frame,
                            std::uint64_t seed, int window_w, int window_h) {
  if (negatives_per_frame < 0) throw ConfigError("negatives per frame must be non-negative");
  if (window_w < 1 || window_h < 1) throw ConfigError("crop window must be positive");
  CropSet set;
  Rng rng(seed);
  for (std::size_t i = 0; i < sequence.size(); ++i) {
    const int frame = static_cast<int>(i);
    const auto truth = annotations.for_frame(frame);
    if (truth.empty() && negatives_per_frame == 0) continue;
    const auto image = sequence.frame(i);
    for (const auto& box : truth) set.crops.push_back({crop_resize(image, box, window_w, window_h), 1, frame, box});
    if (window_w > image.width || window_h > image.height) {
      set.skipped_negatives += static_cast<std::size_t>(negatives_per_frame);
      continue;
    }
    for (int n = 0; n < negatives_per_frame; ++n) {
      bool placed = false;
      for (int attempt = 0; attempt < kNegativeAttempts && !placed; ++attempt) {
        const Box candidate{static_cast<int>(rng.between(0, image.width - window_w)),
                            static_cast<int>(rng.between(0, image.height - window_h)), window_w, window_h};
        const bool clear = std::all_of(truth.begin(), truth.end(),
                                       [&](const Box& t) { return iou(candidate, t) < kNegativeMaxIou; });
        if (clear) {
          set.crops.push_back({crop_resize(image, candidate, window_w, window_h), -1, frame, candidate});
          placed = true;
        }
      }
      if (!placed) ++set.skipped_negatives;
    }
  }
  return set;
}

// ---------------------------------------------------------------------------
// Overlays

inline constexpr Rgb kDetectionColor{0, 255, 0};

inline constexpr std::array<Rgb, 12> kTrackPalette{{
    {230, 25, 75}, {60, 180, 75}, {255, 225, 25}, {0, 130, 200}, {245, 130, 48}, {145, 30, 180},
    {70, 240, 240}, {240, 50, 230}, {210, 245, 60}, {250, 190, 190}, {0, 128, 128}, {170, 110, 40},
}};

inline Rgb track_color(std::size_t id) { return kTrackPalette[id % kTrackPalette.size()]; }

inline void put_pixel(RgbImage& image, int x, int y, Rgb c) {
  if (x >= 0 && y >= 0 && x < image.width && y < image.height) image.at(x, y) = c;
}

inline void draw_rect(RgbImage& image, const Box& box, Rgb c) {
  const int x1 = box.x + box.w - 1;
  const int y1 = box.y + box.h - 1;
  for (int x = box.x; x <= x1; ++x) {
    put_pixel(image, x, box.y, c);
    put_pixel(image, x, y1, c);
  }
  for (int y = box.y; y <= y1; ++y) {
    put_pixel(image, box.x, y, c);
    put_pixel(image, x1, y, c);
  }
}

// Bresenham, endpoints included.
inline void draw_line(RgbImage& image, int x0, int y0, int x1, int y1, Rgb c) {
  const int dx = std::abs(x1 - x0);
  const int dy = -std::abs(y1 - y0);
  const int sx = x0 < x1 ? 1 : -1;
  const int sy = y0 < y1 ? 1 : -1;
  int err = dx + dy;
  while (true) {
    put_pixel(image, x0, y0, c);
    if (x0 == x1 && y0 == y1) break;
    const int e2 = 2 * err;
    if (e2 >= dy) {
      err += dy;
      x0 += sx;
    }
    if (e2 <= dx) {
      err += dx;
      y0 += sy;
    }
  }
}

inline RgbImage draw_overlay(const GrayImage& image, const std::vector<Detection>& detections,
                             const std::vector<Track>& tracks) {
  auto canvas = to_rgb(image);
  for (const auto& d : detections) draw_rect(canvas, d.box, kDetectionColor);
  auto px = [](double v) { return static_cast<int>(std::floor(v + 0.5)); };
  for (const auto& t : tracks) {
    const auto color = track_color(t.id);
    if (t.points.size() == 1) put_pixel(canvas, px(t.points[0].cx), px(t.points[0].cy), color);
    for (std::size_t i = 1; i < t.points.size(); ++i) {
      draw_line(canvas, px(t.points[i - 1].cx), px(t.points[i - 1].cy), px(t.points[i].cx), px(t.points[i].cy),
                color);
    }
  }
  return canvas;
}

inline void render_overlay(const GrayImage& image, const std::vector<Detection>& detections,
                           const std::vector<Track>& tracks, const std::filesystem::path& path) {
  write_ppm(draw_overlay(image, detections, tracks), path);
}

}  // namespace hogtrack
