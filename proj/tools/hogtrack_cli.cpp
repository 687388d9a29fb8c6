// hogtrack: train, detect, saliency, track, eval, bench and overlay stages.
// Exit status: 0 success, 1 runtime or data error, 2 usage or config error.

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <iterator>
#include <limits>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "hogtrack/hogtrack.hpp"

namespace fs = std::filesystem;
using namespace hogtrack;

namespace {

constexpr int kExitRuntime = 1;
constexpr int kExitUsage = 2;

struct HogFlags {
  std::string window;
  int cell = 0;
  int bins = 0;

  bool any() const { return !window.empty() || cell != 0 || bins != 0; }

  HogConfig apply(HogConfig base) const {
    if (!window.empty()) {
      const auto [w, h] = parse_size(window, "--hog-window");
      base.window_w = w;
      base.window_h = h;
    }
    if (cell != 0) {
      // keep the default 2x2-cell block geometry when the cell changes
      base.cell = cell;
      base.block_stride = cell;
    }
    if (bins != 0) base.bins = bins;
    base.validate();
    return base;
  }

  static std::pair<int, int> parse_size(const std::string& s, const char* flag) {
    const auto x = s.find_first_of("xX");
    int w = 0, h = 0;
    if (x == std::string::npos || !text::try_parse(std::string_view(s).substr(0, x), w) ||
        !text::try_parse(std::string_view(s).substr(x + 1), h) || w < 1 || h < 1) {
      throw ConfigError(std::string(flag) + " expects WxH with positive integers, got '" + s + "'");
    }
    return {w, h};
  }
};

void add_hog_flags(CLI::App* sub, HogFlags& flags) {
  sub->add_option("--hog-window", flags.window, "HOG window size WxH (default 64x128)");
  sub->add_option("--hog-cell", flags.cell, "HOG cell side in pixels (default 8)")->check(CLI::PositiveNumber);
  sub->add_option("--hog-bins", flags.bins, "orientation bins (default 9)")->check(CLI::PositiveNumber);
}

std::ofstream open_out(const fs::path& path) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  return out;
}

void finish(std::ofstream& out, const fs::path& path) {
  out.flush();
  if (!out) throw IoError("write failed for " + path.string());
}

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

// ---------------------------------------------------------------------------

struct TrainOptions {
  fs::path frames, annotations, out;
  int negatives = 10;
  double lambda = 1e-4;
  int epochs = 50;
  std::uint64_t seed = 0;
  std::size_t jobs = 1;
  HogFlags hog;
};

int cmd_train(const TrainOptions& o) {
  const HogConfig hog = o.hog.apply({});
  TrainParams params{o.lambda, o.epochs, o.seed};
  params.validate();
  const FrameSequence seq(o.frames);
  const auto ann = load_annotations(o.annotations, seq.width(), seq.height());
  const auto crops = sample_crops(seq, ann, o.negatives, o.seed, hog.window_w, hog.window_h);

  std::vector<LabeledSample> samples(crops.crops.size());
  parallel_for(samples.size(), o.jobs, [&](std::size_t i) {
    samples[i] = {hog_window(crops.crops[i].image, 0, 0, hog).values, crops.crops[i].label};
  });
  std::size_t positives = 0;
  for (const auto& s : samples) positives += s.label == 1;

  auto model = train(samples, params);
  model.hog = hog;
  save_model(model, o.out);

  std::cout << "samples: " << samples.size() << " (positive " << positives << ", negative "
            << samples.size() - positives << ")\n";
  if (crops.skipped_negatives) std::cout << "skipped_negatives: " << crops.skipped_negatives << '\n';
  std::cout << std::setprecision(6) << "objective: " << svm_objective(model, samples, params.lambda) << '\n';
  std::cout << "training_accuracy: " << training_accuracy(model, samples) << '\n';
  std::cout << "model: " << o.out.string() << '\n';
  return 0;
}

// ---------------------------------------------------------------------------

struct DetectOptions {
  fs::path frames, model, out, record;
  std::string mode = "full";
  std::string provider = "spectral";
  std::string features = "windowed";
  DetectParams params;
  double nms = 0.0;
  std::size_t jobs = 1;
  HogFlags hog;
};

HogConfig model_hog(const LinearSvmModel& model, const HogFlags& flags) {
  if (!model.hog) return flags.apply({});
  if (flags.any() && flags.apply(*model.hog) != *model.hog) {
    throw ConfigError("hog flags conflict with the configuration stored in the model");
  }
  return *model.hog;
}

FeatureSource parse_features(const std::string& s) {
  return s == "original" ? FeatureSource::original : FeatureSource::windowed;
}

int cmd_detect(DetectOptions o, const CLI::App& sub) {
  const bool salient = o.mode == "salient";
  if (!salient) {
    for (const char* flag : {"--provider", "--tau", "--features"}) {
      if (sub.count(flag)) throw ConfigError(std::string(flag) + " only applies to --mode salient");
    }
  }
  if (sub.count("--nms-iou")) o.params.nms_iou = o.nms;
  o.params.features = parse_features(o.features);
  const auto model = load_model(o.model);
  const HogConfig hog = model_hog(model, o.hog);
  o.params.validate(hog);
  std::unique_ptr<SaliencyProvider> provider;
  if (salient) provider = make_provider(o.provider);

  const FrameSequence seq(o.frames);
  std::vector<DetectResult> results(seq.size());
  parallel_for(seq.size(), o.jobs, [&](std::size_t i) {
    const auto image = seq.frame(i);
    const int index = static_cast<int>(i);
    if (salient) {
      results[i] = detect_salient(image, provider->compute(image, seq.stem(i)), model, hog, o.params, index);
    } else {
      results[i] = detect_full(image, model, hog, o.params, index);
    }
  });

  DetectStats total;
  std::size_t count = 0;
  auto out = open_out(o.out);
  for (const auto& r : results) {
    write_detections(out, r.detections);
    total.windows_total += r.stats.windows_total;
    total.windows_classified += r.stats.windows_classified;
    total.wall_time_s += r.stats.wall_time_s;
    count += r.detections.size();
  }
  finish(out, o.out);

  if (!o.record.empty()) {
    DetectionRecord record{static_cast<int>(hog.descriptor_length()), seq.width(), seq.height(), {}};
    for (std::size_t i = 0; i < results.size(); ++i) {
      record.frames.push_back({static_cast<int>(i), std::move(results[i].detections)});
    }
    auto rec = open_out(o.record);
    write_record(rec, record);
    finish(rec, o.record);
  }

  std::cout << "mode: " << o.mode << (salient ? " (provider " + provider->name() + ")" : "") << '\n';
  std::cout << "frames: " << seq.size() << '\n';
  std::cout << "windows_total: " << total.windows_total << '\n';
  std::cout << "windows_classified: " << total.windows_classified << '\n';
  std::cout << "detections: " << count << '\n';
  std::cout << std::fixed << std::setprecision(6) << "time_s: " << total.wall_time_s << '\n';
  return 0;
}

// ---------------------------------------------------------------------------

struct SaliencyOptions {
  fs::path frames, out;
  std::string provider = "spectral";
  std::size_t jobs = 1;
};

int cmd_saliency(const SaliencyOptions& o) {
  const auto provider = make_provider(o.provider);
  const FrameSequence seq(o.frames);
  fs::create_directories(o.out);
  std::vector<std::string> errors(seq.size());
  parallel_for(seq.size(), o.jobs, [&](std::size_t i) {
    try {
      save_map(provider->compute(seq.frame(i), seq.stem(i)), o.out / (seq.stem(i) + ".pgm"));
    } catch (const std::exception& e) {
      errors[i] = e.what();
    }
  });
  std::size_t failed = 0;
  for (std::size_t i = 0; i < errors.size(); ++i) {
    if (errors[i].empty()) continue;
    ++failed;
    std::cerr << "hogtrack: frame " << seq.stem(i) << ": " << errors[i] << '\n';
  }
  std::cout << "maps: " << seq.size() - failed << '\n';
  if (failed) {
    std::cerr << "hogtrack: " << failed << " of " << seq.size() << " maps failed\n";
    return kExitRuntime;
  }
  return 0;
}

// ---------------------------------------------------------------------------

struct TrackOptions {
  fs::path record, out;
  TrackParams params;
};

int cmd_track(const TrackOptions& o) {
  if (!(o.params.location_weight >= 0.0)) throw ConfigError("--location-weight must be non-negative");
  if (o.params.restarts < 1) throw ConfigError("--restarts must be at least 1");
  const auto content = slurp(o.record);
  DetectionRecord record;
  if (!text::trim(content).empty()) {
    std::istringstream in(content);
    record = read_record(in);
  }

  auto out = open_out(o.out);
  if (record.total_detections() == 0) {
    out << tracks_to_json({}).dump(2) << '\n';
    finish(out, o.out);
    std::cerr << "hogtrack: record holds no detections, wrote empty tracks\n";
    std::cout << "k: 0\ntracks: 0\n";
    return 0;
  }
  const auto summary = track_detailed(record, o.params);
  out << tracks_to_json(summary.tracks).dump(2) << '\n';
  finish(out, o.out);

  std::cout << "k: " << summary.k << '\n';
  std::cout << std::setprecision(10) << "inertia: " << summary.inertia << '\n';
  std::cout << "restarts: " << summary.restarts << '\n';
  std::cout << "tracks: " << summary.tracks.size() << '\n';
  std::cout << "collisions: " << summary.collisions << '\n';
  if (summary.collisions) {
    std::cerr << "hogtrack: " << summary.collisions
              << " track points share a frame with another point of the same track\n";
  }
  return 0;
}

// ---------------------------------------------------------------------------

struct EvalOptions {
  fs::path detections, truth;
  std::string frame_size;
  double iou = 0.5;
};

std::vector<Detection> load_detections(const fs::path& path) {
  std::istringstream in(slurp(path));
  try {
    return read_detections(in);
  } catch (const ParseError& e) {
    throw ParseError(path.string() + ": " + e.what(), e.line());
  }
}

int cmd_eval(const EvalOptions& o) {
  int w = std::numeric_limits<int>::max() / 2, h = w;
  if (!o.frame_size.empty()) std::tie(w, h) = HogFlags::parse_size(o.frame_size, "--frame-size");
  const auto truth = load_annotations(o.truth, w, h);
  const auto report = match_and_score(load_detections(o.detections), truth.boxes, o.iou);
  std::cout << format_eval(report);
  return 0;
}

// ---------------------------------------------------------------------------

struct BenchOptions {
  fs::path frames, annotations, model;
  std::string provider = "spectral";
  std::string features = "windowed";
  DetectParams params;
  double nms = 0.0;
  double iou = 0.5;
  std::size_t jobs = 1;
};

int cmd_bench(BenchOptions o, const CLI::App& sub) {
  if (sub.count("--nms-iou")) o.params.nms_iou = o.nms;
  o.params.features = parse_features(o.features);
  const auto model = load_model(o.model);
  const HogConfig hog = model_hog(model, {});
  o.params.validate(hog);
  const auto provider = make_provider(o.provider);
  const FrameSequence seq(o.frames);
  const auto truth = load_annotations(o.annotations, seq.width(), seq.height());
  std::vector<BenchFrame> frames;
  frames.reserve(seq.size());
  for (std::size_t i = 0; i < seq.size(); ++i) frames.push_back({seq.frame(i), seq.stem(i)});
  const auto report = bench_compare(frames, *provider, model, hog, o.params, truth.boxes, o.iou, o.jobs);
  std::cout << "provider: " << provider->name() << ", tau " << o.params.tau << ", frames " << frames.size() << '\n';
  std::cout << format_bench(report);
  return 0;
}

// ---------------------------------------------------------------------------

struct OverlayOptions {
  fs::path frames, detections, tracks, out;
};

std::vector<Track> load_tracks(const fs::path& path) {
  std::vector<Track> tracks;
  try {
    const auto doc = nlohmann::json::parse(slurp(path));
    for (const auto& jt : doc.at("tracks")) {
      Track t{jt.at("id").get<std::size_t>(), {}};
      for (const auto& p : jt.at("points")) {
        t.points.push_back({p.at("frame").get<int>(), p.at("cx").get<double>(), p.at("cy").get<double>()});
      }
      tracks.push_back(std::move(t));
    }
  } catch (const nlohmann::json::exception& e) {
    throw DataError(path.string() + ": malformed tracks file: " + e.what());
  }
  return tracks;
}

int cmd_overlay(const OverlayOptions& o) {
  const FrameSequence seq(o.frames);
  const auto dets = o.detections.empty() ? std::vector<Detection>{} : load_detections(o.detections);
  const auto tracks = o.tracks.empty() ? std::vector<Track>{} : load_tracks(o.tracks);
  fs::create_directories(o.out);
  for (std::size_t i = 0; i < seq.size(); ++i) {
    const int frame = static_cast<int>(i);
    std::vector<Detection> here;
    for (const auto& d : dets) {
      if (d.frame == frame) here.push_back(d);
    }
    // paths drawn up to the current frame
    std::vector<Track> so_far;
    for (const auto& t : tracks) {
      Track cut{t.id, {}};
      for (const auto& p : t.points) {
        if (p.frame <= frame) cut.points.push_back(p);
      }
      if (!cut.points.empty()) so_far.push_back(std::move(cut));
    }
    render_overlay(seq.frame(i), here, so_far, o.out / (seq.stem(i) + ".ppm"));
  }
  std::cout << "overlays: " << seq.size() << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"HOG + SVM human detection with saliency gating and k-means tracking"};
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all", "show help for every subcommand");

  TrainOptions train_o;
  auto* train_cmd = app.add_subcommand("train", "sample crops, train a linear SVM on HOG features");
  train_cmd->add_option("--frames", train_o.frames, "directory of .pgm/.ppm frames")
      ->required()->check(CLI::ExistingDirectory);
  train_cmd->add_option("--annotations", train_o.annotations, "CSV frame,x,y,w,h")
      ->required()->check(CLI::ExistingFile);
  train_cmd->add_option("--out", train_o.out, "model file to write")->required();
  train_cmd->add_option("--negatives", train_o.negatives, "negative crops per frame")->capture_default_str()
      ->check(CLI::NonNegativeNumber);
  train_cmd->add_option("--lambda", train_o.lambda, "regularization strength")->capture_default_str();
  train_cmd->add_option("--epochs", train_o.epochs, "passes over the data")->capture_default_str();
  train_cmd->add_option("--seed", train_o.seed, "sampling and shuffling seed")->capture_default_str();
  train_cmd->add_option("--jobs", train_o.jobs, "worker threads")->capture_default_str()->check(CLI::PositiveNumber);
  add_hog_flags(train_cmd, train_o.hog);

  DetectOptions detect_o;
  auto* detect_cmd = app.add_subcommand("detect", "sliding-window detection, full frame or saliency gated");
  detect_cmd->add_option("--frames", detect_o.frames)->required()->check(CLI::ExistingDirectory);
  detect_cmd->add_option("--model", detect_o.model)->required()->check(CLI::ExistingFile);
  detect_cmd->add_option("--out", detect_o.out, "detections file")->required();
  detect_cmd->add_option("--mode", detect_o.mode, "full or salient")->capture_default_str()->check(CLI::IsMember({"full", "salient"}));
  detect_cmd->add_option("--provider", detect_o.provider, "spectral or file:<dir>")->capture_default_str();
  detect_cmd->add_option("--tau", detect_o.params.tau, "minimum mean window saliency")->capture_default_str();
  detect_cmd->add_option("--features", detect_o.features, "windowed or original pixels for salient HOG")->capture_default_str()
      ->check(CLI::IsMember({"windowed", "original"}));
  detect_cmd->add_option("--stride", detect_o.params.stride, "window stride in pixels")->capture_default_str();
  detect_cmd->add_option("--nms-iou", detect_o.nms, "enable greedy NMS at this IoU");
  detect_cmd->add_option("--record", detect_o.record, "also write the tracker record file");
  detect_cmd->add_option("--jobs", detect_o.jobs, "worker threads")->capture_default_str()->check(CLI::PositiveNumber);
  add_hog_flags(detect_cmd, detect_o.hog);

  SaliencyOptions saliency_o;
  auto* saliency_cmd = app.add_subcommand("saliency", "write one saliency map per frame");
  saliency_cmd->add_option("--frames", saliency_o.frames)->required()->check(CLI::ExistingDirectory);
  saliency_cmd->add_option("--out", saliency_o.out, "output directory")->required();
  saliency_cmd->add_option("--provider", saliency_o.provider, "spectral or file:<dir>")->capture_default_str();
  saliency_cmd->add_option("--jobs", saliency_o.jobs, "worker threads")->capture_default_str()->check(CLI::PositiveNumber);

  TrackOptions track_o;
  auto* track_cmd = app.add_subcommand("track", "cluster recorded detections into per-person paths");
  track_cmd->add_option("--record", track_o.record)->required()->check(CLI::ExistingFile);
  track_cmd->add_option("--out", track_o.out, "tracks JSON file")->required();
  track_cmd->add_option("--location-weight", track_o.params.location_weight, "weight of normalized position")->capture_default_str();
  track_cmd->add_option("--restarts", track_o.params.restarts, "k-means restarts")->capture_default_str();
  track_cmd->add_option("--seed", track_o.params.seed, "restart seed")->capture_default_str();

  EvalOptions eval_o;
  auto* eval_cmd = app.add_subcommand("eval", "score a detections file against ground truth");
  eval_cmd->add_option("--detections", eval_o.detections)->required()->check(CLI::ExistingFile);
  eval_cmd->add_option("--truth", eval_o.truth, "CSV frame,x,y,w,h")->required()->check(CLI::ExistingFile);
  eval_cmd->add_option("--frame-size", eval_o.frame_size, "WxH bounds check for truth boxes");
  eval_cmd->add_option("--iou", eval_o.iou, "match threshold")->capture_default_str();

  BenchOptions bench_o;
  auto* bench_cmd = app.add_subcommand("bench", "compare full-frame and salient detection");
  bench_cmd->add_option("--frames", bench_o.frames)->required()->check(CLI::ExistingDirectory);
  bench_cmd->add_option("--annotations", bench_o.annotations)->required()->check(CLI::ExistingFile);
  bench_cmd->add_option("--model", bench_o.model)->required()->check(CLI::ExistingFile);
  bench_cmd->add_option("--provider", bench_o.provider, "spectral or file:<dir>")->capture_default_str();
  bench_cmd->add_option("--tau", bench_o.params.tau, "minimum mean window saliency")->capture_default_str();
  bench_cmd->add_option("--features", bench_o.features, "windowed or original")->capture_default_str()
      ->check(CLI::IsMember({"windowed", "original"}));
  bench_cmd->add_option("--stride", bench_o.params.stride, "window stride in pixels")->capture_default_str();
  bench_cmd->add_option("--nms-iou", bench_o.nms, "enable greedy NMS at this IoU");
  bench_cmd->add_option("--iou", bench_o.iou, "match threshold")->capture_default_str();
  bench_cmd->add_option("--jobs", bench_o.jobs, "worker threads")->capture_default_str()->check(CLI::PositiveNumber);

  OverlayOptions overlay_o;
  auto* overlay_cmd = app.add_subcommand("overlay", "draw detections and track paths onto frames");
  overlay_cmd->add_option("--frames", overlay_o.frames)->required()->check(CLI::ExistingDirectory);
  overlay_cmd->add_option("--detections", overlay_o.detections)->check(CLI::ExistingFile);
  overlay_cmd->add_option("--tracks", overlay_o.tracks)->check(CLI::ExistingFile);
  overlay_cmd->add_option("--out", overlay_o.out, "output directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitUsage;
  }

  try {
    if (*train_cmd) return cmd_train(train_o);
    if (*detect_cmd) return cmd_detect(detect_o, *detect_cmd);
    if (*saliency_cmd) return cmd_saliency(saliency_o);
    if (*track_cmd) return cmd_track(track_o);
    if (*eval_cmd) return cmd_eval(eval_o);
    if (*bench_cmd) return cmd_bench(bench_o, *bench_cmd);
    if (*overlay_cmd) return cmd_overlay(overlay_o);
  } catch (const ConfigError& e) {
    std::cerr << "hogtrack: " << e.what() << '\n';
    return kExitUsage;
  } catch (const ParseError& e) {
    std::cerr << "hogtrack: line " << e.line() << ": " << e.what() << '\n';
    return kExitRuntime;
  } catch (const std::exception& e) {
    std::cerr << "hogtrack: " << e.what() << '\n';
    return kExitRuntime;
  }
  return kExitUsage;
}
