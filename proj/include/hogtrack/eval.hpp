#pragma once

// Precision/recall against ground truth and the full-vs-salient benchmark.

#include <algorithm>
#include <chrono>
#include <cstddef>
#include <iomanip>
#include <map>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "hogtrack/detector.hpp"
#include "hogtrack/geometry.hpp"
#include "hogtrack/parallel.hpp"
#include "hogtrack/saliency.hpp"

namespace hogtrack {

struct GroundTruthBox {
  int frame = 0;
  Box box;
};

struct EvalReport {
  std::size_t tp = 0;
  std::size_t fp = 0;
  std::size_t fn = 0;
  double precision = 0.0;
  double recall = 0.0;
  double wall_time_s = 0.0;
  std::size_t windows_classified = 0;
};

inline void finalize_rates(EvalReport& r) {
  r.precision = (r.tp + r.fp) ? static_cast<double>(r.tp) / static_cast<double>(r.tp + r.fp) : 0.0;
  r.recall = (r.tp + r.fn) ? static_cast<double>(r.tp) / static_cast<double>(r.tp + r.fn) : 0.0;
}

// Per frame, detections in descending score (input order on ties) each claim
// the unmatched truth box of highest IoU (lowest index on ties); the claim is
// a true positive iff that IoU reaches `iou_cutoff`.
inline EvalReport match_and_score(const std::vector<Detection>& detections, const std::vector<GroundTruthBox>& truth,
                                  double iou_cutoff = 0.5) {
  std::map<int, std::vector<const Detection*>> dets_by_frame;
  std::map<int, std::vector<Box>> truth_by_frame;
  for (const auto& d : detections) dets_by_frame[d.frame].push_back(&d);
  for (const auto& t : truth) truth_by_frame[t.frame].push_back(t.box);

  EvalReport report;
  for (auto& [frame, dets] : dets_by_frame) {
    std::stable_sort(dets.begin(), dets.end(), [](const Detection* a, const Detection* b) { return a->score > b->score; });
    const auto it = truth_by_frame.find(frame);
    static const std::vector<Box> kNone;
    const auto& boxes = it == truth_by_frame.end() ? kNone : it->second;
    std::vector<bool> matched(boxes.size(), false);
    for (const auto* d : dets) {
      double best = -1.0;
      std::size_t best_idx = boxes.size();
      for (std::size_t j = 0; j < boxes.size(); ++j) {
        if (matched[j]) continue;
        const double v = iou(d->box, boxes[j]);
        if (v > best) {
          best = v;
          best_idx = j;
        }
      }
      if (best_idx < boxes.size() && best >= iou_cutoff) {
        matched[best_idx] = true;
        ++report.tp;
      } else {
        ++report.fp;
      }
    }
  }
  report.fn = truth.size() - report.tp;
  finalize_rates(report);
  return report;
}

struct BenchFrame {
  GrayImage image;
  std::string stem;
};

struct BenchReport {
  EvalReport full;
  EvalReport salient;
  double saliency_time_s = 0.0;  // map computation, excluded from both paths
  std::size_t workers = 1;

  double time_ratio() const { return salient.wall_time_s > 0.0 ? full.wall_time_s / salient.wall_time_s : 0.0; }
  double windows_ratio() const {
    return full.windows_classified ? static_cast<double>(salient.windows_classified) /
                                         static_cast<double>(full.windows_classified)
                                   : 0.0;
  }
};

// Runs both detector paths on every frame. Only detection work is timed;
// saliency maps are computed first and reported separately. With more than one
// worker, frames run concurrently and times are summed per frame.
inline BenchReport bench_compare(const std::vector<BenchFrame>& frames, const SaliencyProvider& provider,
                                 const LinearSvmModel& model, const HogConfig& hog, const DetectParams& params,
                                 const std::vector<GroundTruthBox>& truth, double iou_cutoff = 0.5,
                                 std::size_t workers = 1) {
  BenchReport report;
  report.workers = std::max<std::size_t>(workers, 1);
  std::vector<SaliencyMap> maps(frames.size());
  const auto sal_start = std::chrono::steady_clock::now();
  parallel_for(frames.size(), report.workers,
               [&](std::size_t i) { maps[i] = provider.compute(frames[i].image, frames[i].stem); });
  report.saliency_time_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - sal_start).count();

  std::vector<DetectResult> full(frames.size()), salient(frames.size());
  parallel_for(frames.size(), report.workers, [&](std::size_t i) {
    const int index = static_cast<int>(i);
    full[i] = detect_full(frames[i].image, model, hog, params, index);
    salient[i] = detect_salient(frames[i].image, maps[i], model, hog, params, index);
  });
  std::vector<Detection> full_dets, salient_dets;
  for (std::size_t i = 0; i < frames.size(); ++i) {
    report.full.wall_time_s += full[i].stats.wall_time_s;
    report.full.windows_classified += full[i].stats.windows_classified;
    for (auto& d : full[i].detections) full_dets.push_back(std::move(d));
    report.salient.wall_time_s += salient[i].stats.wall_time_s;
    report.salient.windows_classified += salient[i].stats.windows_classified;
    for (auto& d : salient[i].detections) salient_dets.push_back(std::move(d));
  }
  auto score_into = [&](EvalReport& target, const std::vector<Detection>& dets) {
    const auto scored = match_and_score(dets, truth, iou_cutoff);
    target.tp = scored.tp;
    target.fp = scored.fp;
    target.fn = scored.fn;
    target.precision = scored.precision;
    target.recall = scored.recall;
  };
  score_into(report.full, full_dets);
  score_into(report.salient, salient_dets);
  return report;
}

// Two-column comparison table, full frame vs salience-windowed.
inline std::string format_bench(const BenchReport& r) {
  std::ostringstream out;
  auto row = [&](const std::string& label, const std::string& a, const std::string& b) {
    out << std::left << std::setw(30) << label << std::setw(16) << a << b << '\n';
  };
  auto pct = [](double v) {
    std::ostringstream s;
    s << std::fixed << std::setprecision(2) << v * 100.0 << '%';
    return s.str();
  };
  auto sec = [](double v) {
    std::ostringstream s;
    s << std::fixed << std::setprecision(6) << v;
    return s.str();
  };
  row("Parameters", "Full frame", "Salience-windowed");
  row("Execution Time (s)", sec(r.full.wall_time_s), sec(r.salient.wall_time_s));
  row("Precision", pct(r.full.precision), pct(r.salient.precision));
  row("Recall", pct(r.full.recall), pct(r.salient.recall));
  row("Windows Classified", std::to_string(r.full.windows_classified), std::to_string(r.salient.windows_classified));
  row("TP / FP / FN", std::to_string(r.full.tp) + "/" + std::to_string(r.full.fp) + "/" + std::to_string(r.full.fn),
      std::to_string(r.salient.tp) + "/" + std::to_string(r.salient.fp) + "/" + std::to_string(r.salient.fn));
  out << "saliency_time_s: " << sec(r.saliency_time_s) << '\n';
  out << "time_ratio: " << std::setprecision(4) << r.time_ratio() << '\n';
  out << "windows_ratio: " << std::setprecision(4) << r.windows_ratio() << '\n';
  out << "workers: " << r.workers << '\n';
  return out.str();
}

inline std::string format_eval(const EvalReport& r) {
  std::ostringstream out;
  out << "tp: " << r.tp << "\nfp: " << r.fp << "\nfn: " << r.fn << '\n';
  out << std::setprecision(6) << "precision: " << r.precision << "\nrecall: " << r.recall << '\n';
  return out.str();
}

}  // namespace hogtrack
