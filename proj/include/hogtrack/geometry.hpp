#pragma once

#include <algorithm>

namespace hogtrack {

// Axis-aligned pixel rectangle [x, x+w) x [y, y+h).
struct Box {
  int x = 0;
  int y = 0;
  int w = 0;
  int h = 0;

  long long area() const { return static_cast<long long>(w) * h; }
  double center_x() const { return x + w / 2.0; }
  double center_y() const { return y + h / 2.0; }
  bool inside(int frame_w, int frame_h) const {
    return x >= 0 && y >= 0 && w > 0 && h > 0 && x + w <= frame_w && y + h <= frame_h;
  }

  bool operator==(const Box&) const = default;
};

inline double iou(const Box& a, const Box& b) {
  const long long ix = std::max(0, std::min(a.x + a.w, b.x + b.w) - std::max(a.x, b.x));
  const long long iy = std::max(0, std::min(a.y + a.h, b.y + b.h) - std::max(a.y, b.y));
  const long long inter = ix * iy;
  const long long uni = a.area() + b.area() - inter;
  return uni > 0 ? static_cast<double>(inter) / static_cast<double>(uni) : 0.0;
}

}  // namespace hogtrack
