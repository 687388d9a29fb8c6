#pragma once

// Linear two-class SVM trained by stochastic subgradient descent on the
// regularized hinge loss (Pegasos step schedule).

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "hogtrack/error.hpp"
#include "hogtrack/hog.hpp"
#include "hogtrack/random.hpp"
#include "hogtrack/text.hpp"

namespace hogtrack {

struct LabeledSample {
  std::vector<double> features;
  int label = 1;  // +1 or -1
};

struct TrainParams {
  double lambda = 1e-4;
  int epochs = 50;
  std::uint64_t seed = 0;

  void validate() const {
    if (!(lambda > 0.0) || !std::isfinite(lambda)) throw ConfigError("lambda must be positive");
    if (epochs < 1) throw ConfigError("epochs must be at least 1");
  }
};

struct LinearSvmModel {
  std::vector<double> weights;
  double bias = 0.0;
  double threshold = 0.0;  // classify() is score > threshold
  std::size_t dim = 0;
  std::size_t trained_on = 0;
  double lambda = 1e-4;
  std::uint64_t seed = 0;
  // Feature layout the weights were trained against, when known.
  std::optional<HogConfig> hog;
};

namespace detail {

inline double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

inline std::size_t check_samples(std::span<const LabeledSample> samples) {
  if (samples.empty()) throw TrainingError("no training samples");
  const std::size_t dim = samples.front().features.size();
  bool pos = false, neg = false;
  for (const auto& s : samples) {
    if (s.features.size() != dim) {
      throw ShapeError("sample has " + std::to_string(s.features.size()) + " features, expected " +
                       std::to_string(dim));
    }
    if (s.label == 1) {
      pos = true;
    } else if (s.label == -1) {
      neg = true;
    } else {
      throw TrainingError("labels must be +1 or -1");
    }
  }
  if (!pos || !neg) throw TrainingError("training needs at least one sample of each class");
  return dim;
}

// Bias regularized with the weights, as the trailing component of w.
inline double objective(std::span<const double> w, double b, std::span<const LabeledSample> samples,
                        double lambda) {
  double hinge = 0.0;
  for (const auto& s : samples) {
    hinge += std::max(0.0, 1.0 - s.label * (dot(w, s.features) + b));
  }
  return 0.5 * lambda * (dot(w, w) + b * b) + hinge / static_cast<double>(samples.size());
}

}  // namespace detail

// lambda/2 (|w|^2 + b^2) + mean hinge loss. Exactly 1.0 for the zero model.
inline double svm_objective(const LinearSvmModel& model, std::span<const LabeledSample> samples, double lambda) {
  return detail::objective(model.weights, model.bias, samples, lambda);
}

// Returns the lowest-objective iterate among the starting point (the zero
// model) and the end of every epoch.
inline LinearSvmModel train(std::span<const LabeledSample> samples, const TrainParams& params) {
  params.validate();
  const std::size_t dim = detail::check_samples(samples);
  const double lambda = params.lambda;

  std::vector<double> w(dim, 0.0);
  double b = 0.0;
  std::vector<double> best_w = w;
  double best_b = 0.0;
  double best_obj = detail::objective(w, b, samples, lambda);

  std::vector<std::size_t> order(samples.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng rng(params.seed);
  std::uint64_t t = 0;

  for (int epoch = 0; epoch < params.epochs; ++epoch) {
    rng.shuffle(std::span<std::size_t>(order));
    for (const std::size_t i : order) {
      const auto& s = samples[i];
      ++t;
      const double eta = 1.0 / (lambda * static_cast<double>(t));
      const double y = s.label;
      const double margin = y * (detail::dot(w, s.features) + b);
      const double shrink = 1.0 - eta * lambda;
      for (double& v : w) v *= shrink;
      b *= shrink;
      if (margin < 1.0) {
        const double step = eta * y;
        for (std::size_t j = 0; j < dim; ++j) w[j] += step * s.features[j];
        b += step;
      }
      // Pegasos projection onto the ball of radius 1/sqrt(lambda).
      double sq = b * b;
      for (double v : w) sq += v * v;
      if (sq * lambda > 1.0) {
        const double scale = 1.0 / std::sqrt(sq * lambda);
        for (double& v : w) v *= scale;
        b *= scale;
      }
    }
    const double obj = detail::objective(w, b, samples, lambda);
    if (obj < best_obj) {
      best_obj = obj;
      best_w = w;
      best_b = b;
    }
  }

  LinearSvmModel model;
  model.weights = std::move(best_w);
  model.bias = best_b;
  model.threshold = 0.0;
  model.dim = dim;
  model.trained_on = samples.size();
  model.lambda = lambda;
  model.seed = params.seed;
  return model;
}

inline double score(const LinearSvmModel& model, std::span<const double> features) {
  if (features.size() != model.dim || model.weights.size() != model.dim) {
    throw ShapeError("feature length " + std::to_string(features.size()) + " does not match model dimension " +
                     std::to_string(model.dim));
  }
  return detail::dot(model.weights, features) + model.bias;
}

inline bool classify(const LinearSvmModel& model, std::span<const double> features) {
  return score(model, features) > model.threshold;
}

inline double training_accuracy(const LinearSvmModel& model, std::span<const LabeledSample> samples) {
  if (samples.empty()) throw InputError("accuracy of an empty sample set is undefined");
  std::size_t correct = 0;
  for (const auto& s : samples) {
    if (classify(model, s.features) == (s.label == 1)) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(samples.size());
}

// ---------------------------------------------------------------------------
// Model file: a JSON object
//   {"format_version": 1, "dim", "lambda", "seed", "threshold", "bias",
//    "trained_on", "weights": [...], "hog": {...} (optional)}
// Reals are written as shortest round-trip decimals.

inline constexpr int kModelFormatVersion = 1;

inline std::string model_to_text(const LinearSvmModel& model) {
  using text::shortest;
  auto finite = [](double v, const char* what) {
    if (!std::isfinite(v)) throw DataError(std::string("model ") + what + " is not finite");
  };
  finite(model.bias, "bias");
  finite(model.threshold, "threshold");
  finite(model.lambda, "lambda");
  if (model.weights.size() != model.dim) throw ShapeError("model weights length does not match dim");

  std::ostringstream out;
  out << "{\n";
  out << "  \"format_version\": " << kModelFormatVersion << ",\n";
  out << "  \"dim\": " << model.dim << ",\n";
  out << "  \"lambda\": " << shortest(model.lambda) << ",\n";
  out << "  \"seed\": " << model.seed << ",\n";
  out << "  \"trained_on\": " << model.trained_on << ",\n";
  out << "  \"threshold\": " << shortest(model.threshold) << ",\n";
  out << "  \"bias\": " << shortest(model.bias) << ",\n";
  if (model.hog) {
    const auto& h = *model.hog;
    out << "  \"hog\": {\"window_w\": " << h.window_w << ", \"window_h\": " << h.window_h
        << ", \"cell\": " << h.cell << ", \"block\": " << h.block << ", \"block_stride\": " << h.block_stride
        << ", \"bins\": " << h.bins << ", \"clip\": " << shortest(h.clip) << "},\n";
  }
  out << "  \"weights\": [";
  for (std::size_t i = 0; i < model.weights.size(); ++i) {
    finite(model.weights[i], "weight");
    if (i) out << ", ";
    out << shortest(model.weights[i]);
  }
  out << "]\n}\n";
  return out.str();
}

inline LinearSvmModel model_from_text(const std::string& text) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw DataError(std::string("model file is not valid JSON: ") + e.what());
  }
  try {
    const int version = doc.at("format_version").get<int>();
    if (version != kModelFormatVersion) {
      throw DataError("unsupported model format_version " + std::to_string(version));
    }
    LinearSvmModel model;
    model.dim = doc.at("dim").get<std::size_t>();
    model.lambda = doc.at("lambda").get<double>();
    model.seed = doc.at("seed").get<std::uint64_t>();
    model.threshold = doc.at("threshold").get<double>();
    model.bias = doc.at("bias").get<double>();
    model.trained_on = doc.value("trained_on", std::size_t{0});
    model.weights = doc.at("weights").get<std::vector<double>>();
    if (model.weights.size() != model.dim) {
      throw ShapeError("model has " + std::to_string(model.weights.size()) + " weights but dim " +
                       std::to_string(model.dim));
    }
    if (doc.contains("hog")) {
      const auto& h = doc["hog"];
      HogConfig cfg;
      cfg.window_w = h.at("window_w").get<int>();
      cfg.window_h = h.at("window_h").get<int>();
      cfg.cell = h.at("cell").get<int>();
      cfg.block = h.at("block").get<int>();
      cfg.block_stride = h.at("block_stride").get<int>();
      cfg.bins = h.at("bins").get<int>();
      cfg.clip = h.at("clip").get<double>();
      cfg.validate();
      if (cfg.descriptor_length() != model.dim) throw ShapeError("model hog layout does not match dim");
      model.hog = cfg;
    }
    return model;
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("malformed model file: ") + e.what());
  }
}

inline void save_model(const LinearSvmModel& model, const std::filesystem::path& path) {
  const auto text = model_to_text(model);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out << text;
  if (!out) throw IoError("write failed for " + path.string());
}

inline LinearSvmModel load_model(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open model " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return model_from_text(buf.str());
}

}  // namespace hogtrack
