#pragma once

// Post-recording tracking: every detection of the video is logged with its
// HOG vector, then all of them are clustered at once with k set to the
// largest per-frame detection count. Each cluster, ordered by frame, is one
// person's path.

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <istream>
#include <limits>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "hogtrack/detector.hpp"
#include "hogtrack/error.hpp"
#include "hogtrack/random.hpp"
#include "hogtrack/text.hpp"

namespace hogtrack {

struct RecordFrame {
  int frame = 0;
  std::vector<Detection> detections;
};

struct DetectionRecord {
  int hog_dim = 0;
  int frame_w = 0;
  int frame_h = 0;
  std::vector<RecordFrame> frames;  // strictly increasing frame index

  std::size_t total_detections() const {
    std::size_t n = 0;
    for (const auto& f : frames) n += f.detections.size();
    return n;
  }

  void validate() const {
    for (std::size_t i = 1; i < frames.size(); ++i) {
      if (frames[i].frame <= frames[i - 1].frame) throw InputError("record frame indices must strictly increase");
    }
    for (const auto& f : frames) {
      for (const auto& d : f.detections) {
        if (d.features.size() != static_cast<std::size_t>(hog_dim)) {
          throw ShapeError("detection in frame " + std::to_string(f.frame) + " has " +
                           std::to_string(d.features.size()) + " features, record declares " +
                           std::to_string(hog_dim));
        }
      }
    }
  }
};

struct ClusterPoint {
  int frame = 0;
  double cx = 0.0;
  double cy = 0.0;
  std::vector<double> vector;  // hog values followed by the scaled center
};

struct KMeansResult {
  std::vector<std::size_t> assignments;
  std::vector<std::vector<double>> centroids;
  double inertia = 0.0;
  std::size_t best_restart = 0;
};

struct KMeansOptions {
  std::size_t restarts = 100;
  std::size_t max_iters = 300;
  std::uint64_t seed = 0;
  // Called after every centroid update with (restart, iteration, inertia).
  std::function<void(std::size_t, std::size_t, double)> on_iteration;
};

struct TrackPoint {
  int frame = 0;
  double cx = 0.0;
  double cy = 0.0;
  bool operator==(const TrackPoint&) const = default;
};

struct Track {
  std::size_t id = 0;
  std::vector<TrackPoint> points;

  // Points that share a frame with the previous point; one person cannot be
  // in two places, so non-zero values flag a merge of two people.
  std::size_t same_frame_collisions() const {
    std::size_t n = 0;
    for (std::size_t i = 1; i < points.size(); ++i) n += points[i].frame == points[i - 1].frame;
    return n;
  }
};

inline std::size_t choose_k(const DetectionRecord& record) {
  if (record.frames.empty()) throw InputError("detection record has no frames");
  std::size_t k = 0;
  for (const auto& f : record.frames) k = std::max(k, f.detections.size());
  return k;
}

inline std::vector<ClusterPoint> build_points(const DetectionRecord& record, double location_weight = 1.0) {
  record.validate();
  if (record.total_detections() > 0 && (record.frame_w < 1 || record.frame_h < 1)) {
    throw ShapeError("record frame size must be positive");
  }
  std::vector<ClusterPoint> points;
  points.reserve(record.total_detections());
  for (const auto& f : record.frames) {
    for (const auto& d : f.detections) {
      ClusterPoint p{f.frame, d.box.center_x(), d.box.center_y(), {}};
      p.vector.reserve(d.features.size() + 2);
      p.vector.assign(d.features.begin(), d.features.end());
      p.vector.push_back(location_weight * p.cx / record.frame_w);
      p.vector.push_back(location_weight * p.cy / record.frame_h);
      points.push_back(std::move(p));
    }
  }
  return points;
}

namespace detail {

inline double squared_distance(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    s += d * d;
  }
  return s;
}

inline std::size_t nearest(std::span<const double> p, const std::vector<std::vector<double>>& centroids) {
  std::size_t best = 0;
  double best_d = std::numeric_limits<double>::infinity();
  for (std::size_t c = 0; c < centroids.size(); ++c) {
    const double d = squared_distance(p, centroids[c]);
    if (d < best_d) {
      best_d = d;
      best = c;
    }
  }
  return best;
}

inline void recompute_means(const std::vector<std::vector<double>>& points, const std::vector<std::size_t>& assign,
                            std::vector<std::vector<double>>& centroids, const std::vector<std::size_t>& counts) {
  for (std::size_t c = 0; c < centroids.size(); ++c) {
    if (counts[c] > 0) std::fill(centroids[c].begin(), centroids[c].end(), 0.0);
  }
  for (std::size_t i = 0; i < points.size(); ++i) {
    auto& c = centroids[assign[i]];
    for (std::size_t j = 0; j < c.size(); ++j) c[j] += points[i][j];
  }
  for (std::size_t c = 0; c < centroids.size(); ++c) {
    if (counts[c] == 0) continue;
    const double inv = 1.0 / static_cast<double>(counts[c]);
    for (double& v : centroids[c]) v *= inv;
  }
}

// Means of the current assignment; every empty cluster seizes the point
// farthest from its centroid among clusters that can spare one.
inline void update_centroids(const std::vector<std::vector<double>>& points, std::vector<std::size_t>& assign,
                             std::vector<std::vector<double>>& centroids) {
  std::vector<std::size_t> counts(centroids.size(), 0);
  for (auto a : assign) ++counts[a];
  recompute_means(points, assign, centroids, counts);
  bool repaired = false;
  for (std::size_t e = 0; e < centroids.size(); ++e) {
    if (counts[e] != 0) continue;
    std::size_t victim = points.size();
    double worst = -1.0;
    for (std::size_t i = 0; i < points.size(); ++i) {
      if (counts[assign[i]] < 2) continue;
      const double d = squared_distance(points[i], centroids[assign[i]]);
      if (d > worst) {
        worst = d;
        victim = i;
      }
    }
    if (victim == points.size()) break;  // k > n cannot happen here
    --counts[assign[victim]];
    assign[victim] = e;
    counts[e] = 1;
    repaired = true;
  }
  if (repaired) recompute_means(points, assign, centroids, counts);
}

inline double inertia(const std::vector<std::vector<double>>& points, const std::vector<std::size_t>& assign,
                      const std::vector<std::vector<double>>& centroids) {
  double s = 0.0;
  for (std::size_t i = 0; i < points.size(); ++i) s += squared_distance(points[i], centroids[assign[i]]);
  return s;
}

}  // namespace detail

// Sum of squared distances from each point to its assigned centroid.
inline double kmeans_inertia(const std::vector<std::vector<double>>& points, const KMeansResult& result) {
  return detail::inertia(points, result.assignments, result.centroids);
}

// Lloyd's algorithm from `restarts` random initializations; returns the
// restart with the lowest inertia (earliest on ties). Restart r draws its
// initial centroids from a generator seeded with mix(seed, r).
inline KMeansResult kmeans(const std::vector<std::vector<double>>& points, std::size_t k,
                           const KMeansOptions& options = {}) {
  const std::size_t n = points.size();
  if (n == 0 && k == 0) return {};
  if (k == 0 || k > n) {
    throw InputError("k must be in [1, " + std::to_string(n) + "], got " + std::to_string(k));
  }
  if (options.restarts < 1) throw ConfigError("k-means needs at least one restart");
  if (options.max_iters < 1) throw ConfigError("k-means needs at least one iteration");
  const std::size_t dim = points.front().size();
  for (const auto& p : points) {
    if (p.size() != dim) throw ShapeError("k-means points have inconsistent dimensions");
  }

  KMeansResult best;
  best.inertia = std::numeric_limits<double>::infinity();
  std::vector<std::size_t> indices(n);

  for (std::size_t r = 0; r < options.restarts; ++r) {
    Rng rng(mix(options.seed, r));
    for (std::size_t i = 0; i < n; ++i) indices[i] = i;
    for (std::size_t i = 0; i < k; ++i) {
      const std::size_t j = i + static_cast<std::size_t>(rng.below(n - i));
      std::swap(indices[i], indices[j]);
    }
    std::vector<std::vector<double>> centroids(k);
    for (std::size_t c = 0; c < k; ++c) centroids[c] = points[indices[c]];

    std::vector<std::size_t> assign(n);
    for (std::size_t i = 0; i < n; ++i) assign[i] = detail::nearest(points[i], centroids);

    std::vector<std::size_t> next(n);
    for (std::size_t iter = 0; iter < options.max_iters; ++iter) {
      detail::update_centroids(points, assign, centroids);
      if (options.on_iteration) options.on_iteration(r, iter, detail::inertia(points, assign, centroids));
      for (std::size_t i = 0; i < n; ++i) next[i] = detail::nearest(points[i], centroids);
      if (next == assign) break;
      assign.swap(next);
    }

    const double total = detail::inertia(points, assign, centroids);
    if (total < best.inertia) {
      best.assignments = std::move(assign);
      best.centroids = std::move(centroids);
      best.inertia = total;
      best.best_restart = r;
    }
  }
  return best;
}

inline std::vector<Track> build_tracks(const DetectionRecord& record, const KMeansResult& result) {
  if (result.assignments.size() != record.total_detections()) {
    throw ShapeError("clustering covers " + std::to_string(result.assignments.size()) + " points, record has " +
                     std::to_string(record.total_detections()) + " detections");
  }
  std::vector<Track> tracks(result.centroids.size());
  for (std::size_t c = 0; c < tracks.size(); ++c) tracks[c].id = c;
  std::size_t i = 0;
  for (const auto& f : record.frames) {
    for (const auto& d : f.detections) {
      const auto c = result.assignments[i++];
      if (c >= tracks.size()) throw ShapeError("assignment refers to a missing cluster");
      tracks[c].points.push_back({f.frame, d.box.center_x(), d.box.center_y()});
    }
  }
  std::vector<Track> out;
  for (auto& t : tracks) {
    if (t.points.empty()) continue;
    std::sort(t.points.begin(), t.points.end(), [](const TrackPoint& a, const TrackPoint& b) {
      if (a.frame != b.frame) return a.frame < b.frame;
      if (a.cx != b.cx) return a.cx < b.cx;
      return a.cy < b.cy;
    });
    out.push_back(std::move(t));
  }
  return out;
}

struct TrackParams {
  double location_weight = 1.0;
  std::size_t restarts = 100;
  std::size_t max_iters = 300;
  std::uint64_t seed = 0;
};

struct TrackingSummary {
  std::size_t k = 0;
  double inertia = 0.0;
  std::size_t restarts = 0;
  std::size_t collisions = 0;
  std::vector<Track> tracks;
};

inline TrackingSummary track_detailed(const DetectionRecord& record, const TrackParams& params = {}) {
  TrackingSummary summary;
  summary.k = choose_k(record);
  summary.restarts = params.restarts;
  const auto points = build_points(record, params.location_weight);
  if (summary.k == 0) return summary;
  std::vector<std::vector<double>> vectors;
  vectors.reserve(points.size());
  for (const auto& p : points) vectors.push_back(p.vector);
  const auto clustering = kmeans(vectors, summary.k, {params.restarts, params.max_iters, params.seed, {}});
  summary.inertia = clustering.inertia;
  summary.tracks = build_tracks(record, clustering);
  for (const auto& t : summary.tracks) summary.collisions += t.same_frame_collisions();
  return summary;
}

inline std::vector<Track> track(const DetectionRecord& record, double location_weight = 1.0,
                                std::size_t restarts = 100, std::uint64_t seed = 0) {
  return track_detailed(record, {location_weight, restarts, 300, seed}).tracks;
}

// ---------------------------------------------------------------------------
// Record file: first line `hog_dim,frame_w,frame_h`, then one line per
// detection `frame,x,y,w,h,score,f1,...,fn`, grouped by ascending frame.

inline void write_record(std::ostream& out, const DetectionRecord& record) {
  out << record.hog_dim << ',' << record.frame_w << ',' << record.frame_h << '\n';
  for (const auto& f : record.frames) {
    for (const auto& d : f.detections) {
      out << f.frame << ',' << d.box.x << ',' << d.box.y << ',' << d.box.w << ',' << d.box.h << ','
          << text::shortest(d.score);
      for (double v : d.features) out << ',' << text::shortest(v);
      out << '\n';
    }
  }
}

inline DetectionRecord read_record(std::istream& in) {
  DetectionRecord record;
  std::string line;
  std::size_t number = 0;
  bool have_header = false;
  while (std::getline(in, line)) {
    ++number;
    const auto trimmed = text::trim(line);
    if (trimmed.empty()) continue;
    const auto fields = text::split(trimmed);
    if (!have_header) {
      if (fields.size() != 3) throw ParseError("expected header hog_dim,frame_w,frame_h", number);
      record.hog_dim = text::parse<int>(fields[0], number, "hog_dim");
      record.frame_w = text::parse<int>(fields[1], number, "frame_w");
      record.frame_h = text::parse<int>(fields[2], number, "frame_h");
      if (record.hog_dim < 0 || record.frame_w < 1 || record.frame_h < 1) {
        throw ParseError("header values out of range", number);
      }
      have_header = true;
      continue;
    }
    if (fields.size() != 6 + static_cast<std::size_t>(record.hog_dim)) {
      throw ParseError("expected " + std::to_string(6 + record.hog_dim) + " fields, found " +
                           std::to_string(fields.size()),
                       number);
    }
    Detection d;
    d.frame = text::parse<int>(fields[0], number, "frame");
    d.box = {text::parse<int>(fields[1], number, "x"), text::parse<int>(fields[2], number, "y"),
             text::parse<int>(fields[3], number, "w"), text::parse<int>(fields[4], number, "h")};
    d.score = text::parse<double>(fields[5], number, "score");
    d.features.reserve(static_cast<std::size_t>(record.hog_dim));
    for (std::size_t i = 6; i < fields.size(); ++i) d.features.push_back(text::parse<double>(fields[i], number, "feature"));
    if (!record.frames.empty() && d.frame < record.frames.back().frame) {
      throw ParseError("detections must be grouped by ascending frame", number);
    }
    if (record.frames.empty() || record.frames.back().frame != d.frame) record.frames.push_back({d.frame, {}});
    record.frames.back().detections.push_back(std::move(d));
  }
  if (!have_header) throw ParseError("missing record header", number + 1);
  return record;
}

inline nlohmann::json tracks_to_json(const std::vector<Track>& tracks) {
  nlohmann::json doc;
  doc["tracks"] = nlohmann::json::array();
  for (const auto& t : tracks) {
    nlohmann::json jt;
    jt["id"] = t.id;
    jt["points"] = nlohmann::json::array();
    for (const auto& p : t.points) jt["points"].push_back({{"frame", p.frame}, {"cx", p.cx}, {"cy", p.cy}});
    doc["tracks"].push_back(std::move(jt));
  }
  return doc;
}

}  // namespace hogtrack
