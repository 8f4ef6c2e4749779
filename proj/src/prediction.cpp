#include "ncrl/prediction.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "ncrl/metrics.hpp"
#include "ncrl/numeric.hpp"

namespace ncrl {
namespace {

void check_collection(std::span<const Scores> scores, std::span<const LabelVector> gold,
                      const ThresholdGrid& grid) {
  if (grid.size() == 0) throw std::invalid_argument("threshold grid is empty");
  if (scores.empty()) throw std::invalid_argument("sweep needs at least one instance");
  if (scores.size() != gold.size()) {
    throw std::invalid_argument("sweep got " + std::to_string(scores.size()) +
                                " score vectors but " + std::to_string(gold.size()) +
                                " label vectors");
  }
  for (std::size_t n = 0; n < scores.size(); ++n) require_matching(gold[n], scores[n]);
}

// sigmoid(f_i) for labels 1..K of every instance, flattened row-major.
std::vector<double> label_probabilities(std::span<const Scores> scores, std::size_t k) {
  std::vector<double> p;
  p.reserve(scores.size() * k);
  for (const Scores& f : scores) {
    for (std::size_t i = 1; i <= k; ++i) p.push_back(sigmoid(f[i]));
  }
  return p;
}

}  // namespace

ThresholdGrid::ThresholdGrid(std::vector<double> thresholds) : values_(std::move(thresholds)) {
  if (values_.empty()) throw std::invalid_argument("threshold grid is empty");
  for (std::size_t i = 0; i < values_.size(); ++i) {
    if (!(values_[i] > 0.0 && values_[i] < 1.0)) {
      throw std::invalid_argument("threshold " + std::to_string(values_[i]) +
                                  " outside (0, 1)");
    }
    if (i > 0 && !(values_[i] > values_[i - 1])) {
      throw std::invalid_argument("threshold grid must be strictly increasing");
    }
  }
}

ThresholdGrid ThresholdGrid::uniform(double lo, double hi, double step) {
  if (!(step > 0.0) || hi < lo) throw std::invalid_argument("bad threshold grid range");
  const auto n = static_cast<std::size_t>(std::floor((hi - lo) / step + 1e-9));
  std::vector<double> v;
  v.reserve(n + 1);
  for (std::size_t i = 0; i <= n; ++i) {
    // round to 1e-12 so 0.1 + 7 * 0.1 prints and compares as 0.8
    v.push_back(std::round((lo + static_cast<double>(i) * step) * 1e12) / 1e12);
  }
  return ThresholdGrid(std::move(v));
}

PredictionSet predict_adaptive(std::span<const double> f) {
  PredictionSet out;
  for (std::size_t i = 1; i < f.size(); ++i) {
    if (f[i] > f[0]) out.push_back(i);
  }
  return out;
}

PredictionSet predict_global(std::span<const double> f, double t) {
  PredictionSet out;
  for (std::size_t i = 1; i < f.size(); ++i) {
    if (sigmoid(f[i]) > t) out.push_back(i);
  }
  return out;
}

PredictionSet predict_per_label(std::span<const double> f, std::span<const double> thresholds) {
  if (f.empty() || thresholds.size() != f.size() - 1) {
    throw std::invalid_argument("per-label thresholds have " +
                                std::to_string(thresholds.size()) + " entries for " +
                                std::to_string(f.empty() ? 0 : f.size() - 1) + " labels");
  }
  PredictionSet out;
  for (std::size_t i = 1; i < f.size(); ++i) {
    if (sigmoid(f[i]) > thresholds[i - 1]) out.push_back(i);
  }
  return out;
}

Scores margin_scores(std::span<const double> f) {
  Scores out(f.size(), 0.0);
  for (std::size_t i = 1; i < f.size(); ++i) out[i] = f[i] - f[0];
  return out;
}

SweepResult sweep_global_threshold(std::span<const Scores> scores,
                                   std::span<const LabelVector> gold,
                                   const ThresholdGrid& grid) {
  check_collection(scores, gold, grid);
  const std::size_t k = gold.front().num_classes();
  const std::vector<double> prob = label_probabilities(scores, k);

  SweepResult best{grid.values().front(), -1.0};
  for (double t : grid.values()) {
    std::size_t tp = 0, fp = 0, fn = 0;
    for (std::size_t n = 0; n < gold.size(); ++n) {
      for (std::size_t i = 1; i <= k; ++i) {
        const bool pred = prob[n * k + i - 1] > t;
        const bool truth = gold[n][i];
        tp += pred && truth;
        fp += pred && !truth;
        fn += !pred && truth;
      }
    }
    const double f1 = f1_score(tp, fp, fn);
    if (f1 > best.micro_f1) best = {t, f1};
  }
  return best;
}

std::vector<double> sweep_per_label_thresholds(std::span<const Scores> scores,
                                               std::span<const LabelVector> gold,
                                               const ThresholdGrid& grid) {
  check_collection(scores, gold, grid);
  const std::size_t k = gold.front().num_classes();
  const std::vector<double> prob = label_probabilities(scores, k);

  std::vector<double> out(k);
  for (std::size_t i = 1; i <= k; ++i) {
    double best_t = grid.values().front();
    double best_f1 = -1.0;
    for (double t : grid.values()) {
      std::size_t tp = 0, fp = 0, fn = 0;
      for (std::size_t n = 0; n < gold.size(); ++n) {
        const bool pred = prob[n * k + i - 1] > t;
        const bool truth = gold[n][i];
        tp += pred && truth;
        fp += pred && !truth;
        fn += !pred && truth;
      }
      const double f1 = f1_score(tp, fp, fn);
      if (f1 > best_f1) {
        best_f1 = f1;
        best_t = t;
      }
    }
    out[i - 1] = best_t;
  }
  return out;
}

}  // namespace ncrl
