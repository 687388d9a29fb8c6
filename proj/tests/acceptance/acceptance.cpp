// Acceptance run: one PASS/FAIL line per criterion, nonzero exit on any FAIL.

#include <unistd.h>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <limits>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "hogtrack/hogtrack.hpp"
#include "support/oracles.hpp"
#include "support/synthetic.hpp"

namespace fs = std::filesystem;
using namespace hogtrack;

namespace {

struct Check {
  bool ok = true;
  std::ostringstream detail;

  void expect(bool cond, const std::string& what) {
    if (!cond && ok) detail << "failed: " << what << "; ";
    ok = ok && cond;
  }
};

int failures = 0;

void criterion(int id, const std::string& name, double limit_s, const std::function<void(Check&)>& body) {
  Check c;
  const auto start = std::chrono::steady_clock::now();
  try {
    body(c);
  } catch (const std::exception& e) {
    c.ok = false;
    c.detail << "exception: " << e.what() << "; ";
  }
  const double elapsed = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  if (limit_s > 0.0 && elapsed >= limit_s) {
    c.ok = false;
    c.detail << "runtime " << elapsed << " s over limit " << limit_s << " s; ";
  }
  std::printf("[%s] %d %s (%.2f s) %s\n", c.ok ? "PASS" : "FAIL", id, name.c_str(), elapsed, c.detail.str().c_str());
  std::fflush(stdout);
  failures += !c.ok;
}

GrayImage noise_image(int w, int h, Rng& rng) {
  GrayImage g(w, h);
  for (auto& p : g.pixels) p = static_cast<std::uint8_t>(rng.below(256));
  return g;
}

// Union of a few random rectangles.
SaliencyMap random_mask(int w, int h, Rng& rng) {
  SaliencyMap m(w, h, 0.0);
  const int count = static_cast<int>(rng.between(1, 4));
  for (int r = 0; r < count; ++r) {
    const int rw = static_cast<int>(rng.between(32, w));
    const int rh = static_cast<int>(rng.between(64, h));
    const int rx = static_cast<int>(rng.between(0, w - rw));
    const int ry = static_cast<int>(rng.between(0, h - rh));
    for (int y = ry; y < ry + rh; ++y)
      for (int x = rx; x < rx + rw; ++x) m.at(x, y) = 1.0;
  }
  return m;
}

const LinearSvmModel& person_model() {
  static const auto m = testing::trained_person_model(HogConfig{});
  return m;
}

LinearSvmModel accept_all(LinearSvmModel m) {
  m.threshold = -std::numeric_limits<double>::infinity();
  return m;
}

void hog_correctness(Check& c) {
  const HogConfig hog;
  c.expect(hog.descriptor_length() == 3780, "descriptor length 3780");
  Rng rng(101);
  double worst = 0.0;
  for (int i = 0; i < 10; ++i) {
    const auto img = noise_image(64, 128, rng);
    const auto got = hog_window(img, 0, 0, hog).values;
    const auto want = oracle::naive_hog(img, 0, 0, hog);
    c.expect(got.size() == 3780 && want.size() == 3780, "window length");
    for (std::size_t j = 0; j < std::min(got.size(), want.size()); ++j) worst = std::max(worst, std::abs(got[j] - want[j]));
  }
  c.expect(worst <= 1e-9, "oracle agreement within 1e-9");
  const auto scene = testing::cluttered_background(160, 224, rng);
  const auto dense = hog_dense(scene, hog, 8);
  std::size_t mismatched = 0;
  for (const auto& e : dense) mismatched += hog_window(scene, e.x, e.y, hog).values != e.descriptor.values;
  c.expect(dense.size() == sliding_windows(160, 224, 64, 128, 8).size(), "dense covers every position");
  c.expect(mismatched == 0, "dense equals per-window");
  c.detail << "max |diff| " << worst << ", " << dense.size() << " dense positions";
}

void svm_training(Check& c) {
  Rng rng(202);
  const std::size_t dim = 20;
  std::vector<double> truth(dim);
  double norm = 0.0;
  for (double& v : truth) {
    v = rng.uniform(-1.0, 1.0);
    norm += v * v;
  }
  for (double& v : truth) v /= std::sqrt(norm);
  std::vector<LabeledSample> samples;
  while (samples.size() < 100) {
    std::vector<double> x(dim);
    for (double& v : x) v = rng.uniform(-1.0, 1.0);
    double m = 0.0;
    for (std::size_t j = 0; j < dim; ++j) m += truth[j] * x[j];
    if (std::abs(m) < 0.5) continue;
    samples.push_back({std::move(x), m > 0 ? 1 : -1});
  }
  const TrainParams params{1e-4, 50, 9};
  const auto a = train(samples, params);
  const auto b = train(samples, params);
  const double acc = training_accuracy(a, samples);
  const double obj = svm_objective(a, samples, params.lambda);
  c.expect(acc == 1.0, "separable accuracy 1.0");
  c.expect(obj <= 1.0, "objective <= 1");
  c.expect(a.weights == b.weights && a.bias == b.bias, "bitwise deterministic");

  const auto corpus = testing::template_corpus(100, HogConfig{}, 7);
  const auto model = train(corpus, {});
  const double template_acc = training_accuracy(model, corpus);
  c.expect(corpus.size() == 200, "200 crops");
  c.expect(template_acc >= 0.95, "template accuracy >= 0.95");
  c.detail << "separable acc " << acc << " obj " << obj << ", template acc " << template_acc;
}

void subset_property(Check& c) {
  const HogConfig hog;
  const auto model = accept_all(person_model());
  Rng rng(303);
  DetectParams params;
  params.features = FeatureSource::original;
  std::size_t compared = 0;
  for (int trial = 0; trial < 20; ++trial) {
    auto img = testing::cluttered_background(320, 240, rng);
    testing::paint_person(img, static_cast<int>(rng.between(0, 256)), static_cast<int>(rng.between(0, 112)), 64, 128);
    const auto mask = random_mask(320, 240, rng);
    params.tau = trial == 0 ? 1.0 : 1.0 - rng.uniform();  // (0, 1]
    const auto full = detect_full(img, model, hog, params, trial);
    const auto sal = detect_salient(img, mask, model, hog, params, trial);
    std::vector<std::pair<WindowPos, double>> expected;
    for (const auto& d : full.detections) {
      if (mean_saliency(mask, d.box.x, d.box.y, d.box.w, d.box.h) >= params.tau) {
        expected.push_back({{d.box.x, d.box.y}, d.score});
      }
    }
    std::vector<std::pair<WindowPos, double>> got;
    for (const auto& d : sal.detections) got.push_back({{d.box.x, d.box.y}, d.score});
    c.expect(got == expected, "trial " + std::to_string(trial) + " salient == restricted full");
    c.expect(sal.stats.windows_classified == expected.size(), "classified count matches restriction");
    compared += expected.size();
  }
  c.detail << compared << " windows compared bitwise";
}

// Frames with one planted person and a map that is 1 on a rectangle around it.
struct SpeedCorpus {
  std::vector<GrayImage> frames;
  std::vector<SaliencyMap> maps;
  std::vector<GroundTruthBox> truth;
};

SpeedCorpus speed_corpus(int count, std::uint64_t seed) {
  SpeedCorpus s;
  Rng rng(seed);
  for (int f = 0; f < count; ++f) {
    auto img = testing::cluttered_background(320, 240, rng);
    const Box b{static_cast<int>(rng.between(0, 32)) * 8, static_cast<int>(rng.between(0, 14)) * 8, 64, 128};
    testing::paint_person(img, b.x, b.y, b.w, b.h, testing::Texture::vertical);
    SaliencyMap m(320, 240, 0.0);
    const int x0 = std::max(0, b.x - 8), y0 = std::max(0, b.y - 8);
    const int x1 = std::min(320, b.x + b.w + 8), y1 = std::min(240, b.y + b.h + 8);
    for (int y = y0; y < y1; ++y)
      for (int x = x0; x < x1; ++x) m.at(x, y) = 1.0;
    s.frames.push_back(std::move(img));
    s.maps.push_back(std::move(m));
    s.truth.push_back({f, b});
  }
  return s;
}

void speed(Check& c) {
  const HogConfig hog;
  const auto corpus = speed_corpus(20, 404);
  DetectParams params;
  params.tau = 0.8;
  std::size_t full_windows = 0, sal_windows = 0, kept = 0;
  double full_time = 0.0, sal_time = 0.0;
  for (std::size_t f = 0; f < corpus.frames.size(); ++f) {
    for (const auto& p : sliding_windows(320, 240, 64, 128, params.stride)) {
      kept += mean_saliency(corpus.maps[f], p.x, p.y, 64, 128) >= params.tau;
    }
    const auto full = detect_full(corpus.frames[f], person_model(), hog, params, static_cast<int>(f));
    const auto sal = detect_salient(corpus.frames[f], corpus.maps[f], person_model(), hog, params, static_cast<int>(f));
    full_windows += full.stats.windows_classified;
    sal_windows += sal.stats.windows_classified;
    full_time += full.stats.wall_time_s;
    sal_time += sal.stats.wall_time_s;
  }
  const double keep_ratio = static_cast<double>(kept) / static_cast<double>(full_windows);
  const double window_ratio = static_cast<double>(sal_windows) / static_cast<double>(full_windows);
  const double speedup = full_time / sal_time;
  c.expect(keep_ratio <= 0.15, "map keeps <= 15% of windows");
  c.expect(window_ratio <= 0.20, "salient classifies <= 20% of windows");
  c.expect(speedup >= 3.0, "salient >= 3x faster");
  c.detail << "kept " << keep_ratio << ", windows ratio " << window_ratio << ", speedup " << speedup << "x (full "
           << full_time << " s, salient " << sal_time << " s)";
}

void recall_direction(Check& c) {
  const HogConfig hog;
  const auto corpus = speed_corpus(20, 505);
  Rng rng(506);
  DetectParams params;
  params.features = FeatureSource::original;
  std::vector<Detection> full_dets, sal_dets;
  for (std::size_t f = 0; f < corpus.frames.size(); ++f) {
    const auto mask = random_mask(320, 240, rng);
    params.tau = 1.0 - rng.uniform();
    auto full = detect_full(corpus.frames[f], person_model(), hog, params, static_cast<int>(f));
    auto sal = detect_salient(corpus.frames[f], mask, person_model(), hog, params, static_cast<int>(f));
    full_dets.insert(full_dets.end(), full.detections.begin(), full.detections.end());
    sal_dets.insert(sal_dets.end(), sal.detections.begin(), sal.detections.end());
  }
  const auto rf = match_and_score(full_dets, corpus.truth);
  const auto rs = match_and_score(sal_dets, corpus.truth);
  c.expect(rs.recall <= rf.recall, "recall(salient) <= recall(full)");
  c.expect(rs.fp <= rf.fp, "fp(salient) <= fp(full)");
  c.detail << "full tp/fp/fn " << rf.tp << "/" << rf.fp << "/" << rf.fn << " recall " << rf.recall << ", salient "
           << rs.tp << "/" << rs.fp << "/" << rs.fn << " recall " << rs.recall;
}

void kmeans_optimality(Check& c) {
  Rng rng(606);
  int optimal = 0;
  bool monotone = true;
  for (int instance = 0; instance < 100; ++instance) {
    const std::size_t n = static_cast<std::size_t>(rng.between(3, 10));
    const std::size_t k = static_cast<std::size_t>(rng.between(1, 3));
    std::vector<std::vector<double>> points(n, std::vector<double>(2));
    for (auto& p : points)
      for (double& v : p) v = rng.uniform(-10.0, 10.0);
    std::size_t restart = std::numeric_limits<std::size_t>::max();
    double last = 0.0;
    KMeansOptions opts{100, 300, rng.next(), [&](std::size_t r, std::size_t, double inertia) {
                         if (r == restart && inertia > last + 1e-12 * std::max(1.0, last)) monotone = false;
                         restart = r;
                         last = inertia;
                       }};
    const auto result = kmeans(points, k, opts);
    optimal += std::abs(result.inertia - oracle::brute_force_inertia(points, k)) <= 1e-9;
  }
  c.expect(optimal >= 95, ">= 95 of 100 optimal");
  c.expect(monotone, "per-iteration inertia monotone");
  c.detail << optimal << "/100 optimal, monotone " << (monotone ? "yes" : "no");
}

void end_to_end_tracking(Check& c) {
  const HogConfig hog;
  Rng rng(707);
  constexpr int kFrames = 30;
  auto planted = [](int mover, int f) {
    // mover 0 walks right along the top, mover 1 walks left along the bottom
    return mover == 0 ? Box{8 + 6 * f, 16, 64, 128} : Box{248 - 6 * f, 104, 64, 128};
  };
  DetectParams params;
  params.nms_iou = 0.3;
  DetectionRecord record{static_cast<int>(hog.descriptor_length()), 320, 240, {}};
  for (int f = 0; f < kFrames; ++f) {
    auto img = testing::cluttered_background(320, 240, rng);
    const auto a = planted(0, f), b = planted(1, f);
    testing::paint_person(img, a.x, a.y, a.w, a.h, testing::Texture::vertical);
    testing::paint_person(img, b.x, b.y, b.w, b.h, testing::Texture::horizontal);
    record.frames.push_back({f, detect_full(img, person_model(), hog, params, f).detections});
  }
  const auto summary = track_detailed(record);
  c.expect(summary.k == 2, "choose_k = 2");
  c.expect(summary.tracks.size() == 2, "exactly 2 tracks");
  const double diagonal = std::hypot(64.0, 128.0);
  double worst = 0.0;
  for (const auto& t : summary.tracks) {
    bool ordered = true;
    for (std::size_t i = 1; i < t.points.size(); ++i) ordered = ordered && t.points[i - 1].frame <= t.points[i].frame;
    c.expect(ordered, "track points monotone in frame");
    // the track's mover is the one nearer to its points overall
    double d0 = 0.0, d1 = 0.0;
    for (const auto& p : t.points) {
      const auto a = planted(0, p.frame), b = planted(1, p.frame);
      d0 += std::hypot(p.cx - a.center_x(), p.cy - a.center_y());
      d1 += std::hypot(p.cx - b.center_x(), p.cy - b.center_y());
    }
    const int mover = d0 <= d1 ? 0 : 1;
    for (const auto& p : t.points) {
      const auto m = planted(mover, p.frame);
      worst = std::max(worst, std::hypot(p.cx - m.center_x(), p.cy - m.center_y()));
    }
  }
  c.expect(worst <= diagonal, "points within one window diagonal");
  c.detail << "k " << summary.k << ", detections " << record.total_detections() << ", collisions "
           << summary.collisions << ", worst offset " << worst << " px";
}

void eval_arithmetic(Check& c) {
  auto det = [](int frame, Box b, double s) { return Detection{frame, b, s, {}}; };
  const std::vector<GroundTruthBox> truth{
      {0, {0, 0, 10, 10}}, {0, {50, 0, 10, 10}}, {1, {0, 0, 10, 10}}, {2, {0, 0, 10, 10}}};
  const std::vector<Detection> dets{det(0, {0, 0, 10, 10}, 0.9), det(0, {51, 0, 10, 10}, 0.8),
                                    det(1, {1, 1, 10, 10}, 0.7), det(1, {80, 80, 10, 10}, 0.6),
                                    det(3, {0, 0, 10, 10}, 0.5)};
  const auto r = match_and_score(dets, truth);
  c.expect(r.tp == 3 && r.fp == 2 && r.fn == 1, "(tp, fp, fn) = (3, 2, 1)");
  c.expect(std::abs(r.precision - 0.6) < 1e-12 && std::abs(r.recall - 0.75) < 1e-12, "0.6 / 0.75");
  const auto dbl = match_and_score({det(0, {0, 0, 20, 20}, 0.9), det(0, {1, 0, 20, 20}, 0.7)}, {{0, {0, 0, 20, 20}}});
  c.expect(dbl.tp == 1 && dbl.fp == 1, "double detection (1, 1)");
  c.detail << "precision " << r.precision << ", recall " << r.recall << ", double " << dbl.tp << "/" << dbl.fp;
}

void io_round_trips(Check& c) {
  Rng rng(808);
  bool images = true;
  for (int i = 0; i < 20; ++i) {
    auto g = noise_image(static_cast<int>(rng.between(1, 64)), static_cast<int>(rng.between(1, 64)), rng);
    images = images && decode_image(netpbm::encode(g)) == g;
    RgbImage rgb(g.width, g.height);
    for (auto& p : rgb.pixels) p = {static_cast<std::uint8_t>(rng.below(256)), static_cast<std::uint8_t>(rng.below(256)),
                                    static_cast<std::uint8_t>(rng.below(256))};
    images = images && std::get<RgbImage>(netpbm::decode(netpbm::encode(rgb))) == rgb;
  }
  c.expect(images, "PGM/PPM identity");

  SaliencyMap map(97, 61);
  for (double& v : map.values) v = rng.uniform();
  const auto back = decode_map(encode_map(map));
  double map_err = 0.0;
  for (std::size_t i = 0; i < map.values.size(); ++i) map_err = std::max(map_err, std::abs(map.values[i] - back.values[i]));
  c.expect(map_err <= 1.0 / 510.0, "map error <= 1/510");

  const auto dir = fs::temp_directory_path() / ("hogtrack_accept_" + std::to_string(::getpid()));
  fs::create_directories(dir);
  const auto path = dir / "model.json";
  save_model(person_model(), path);
  const auto loaded = load_model(path);
  fs::remove_all(dir);
  double score_err = 0.0;
  std::vector<double> x(person_model().dim);
  for (int i = 0; i < 20; ++i) {
    for (double& v : x) v = rng.uniform();
    score_err = std::max(score_err, std::abs(score(person_model(), x) - score(loaded, x)));
  }
  c.expect(score_err <= 1e-12, "model scores within 1e-12");
  c.detail << "map err " << map_err << ", score err " << score_err;
}

}  // namespace

int main() {
  criterion(1, "HOG matches naive oracle, length 3780, dense == per-window", 10.0, hog_correctness);
  criterion(2, "SVM separable accuracy, objective bound, determinism, template corpus", 0.0, svm_training);
  criterion(3, "salient == full restricted to mean saliency >= tau (20 binary masks)", 0.0, subset_property);
  criterion(4, "salient path classifies <= 20% of windows and runs >= 3x faster", 60.0, speed);
  criterion(5, "binary-mask regime: salient recall and fp do not exceed full", 0.0, recall_direction);
  criterion(6, "k-means best-of-100 matches brute force in >= 95/100, monotone iterations", 30.0, kmeans_optimality);
  criterion(7, "two movers: k = 2, two ordered tracks within a window diagonal", 60.0, end_to_end_tracking);
  criterion(8, "precision/recall arithmetic and greedy double detection", 0.0, eval_arithmetic);
  criterion(9, "PGM/PPM, saliency map and model file round trips", 0.0, io_round_trips);
  std::printf("%d of 9 criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}
