#pragma once

#include <span>
#include <vector>

#include "ncrl/labels.hpp"

namespace ncrl {

/// Predicted positive labels, ascending, each in 1..K. Empty means NA.
using PredictionSet = std::vector<std::size_t>;

/// Strictly increasing thresholds inside (0, 1).
class ThresholdGrid {
 public:
  explicit ThresholdGrid(std::vector<double> thresholds);

  /// {lo, lo + step, ..., hi}, built by integer steps to avoid drift.
  static ThresholdGrid uniform(double lo, double hi, double step);
  /// {0.1, 0.2, ..., 0.9}
  static ThresholdGrid coarse() { return uniform(0.1, 0.9, 0.1); }
  /// {0.1, 0.11, ..., 0.9}
  static ThresholdGrid fine() { return uniform(0.1, 0.9, 0.01); }

  std::span<const double> values() const { return values_; }
  std::size_t size() const { return values_.size(); }

 private:
  std::vector<double> values_;
};

/// Labels scoring strictly above f_0. Ties predict negative.
PredictionSet predict_adaptive(std::span<const double> f);

/// Labels with sigmoid(f_i) > t.
PredictionSet predict_global(std::span<const double> f, double t);

/// Labels with sigmoid(f_i) > thresholds[i - 1].
PredictionSet predict_per_label(std::span<const double> f, std::span<const double> thresholds);

/// Rewrites f as margins against the none class: f'_0 = 0, f'_i = f_i - f_0.
/// Global thresholds on these equal adaptive prediction at t = 1/2.
Scores margin_scores(std::span<const double> f);

struct SweepResult {
  double threshold = 0.0;
  double micro_f1 = 0.0;
};

/// Best global threshold by micro-F1; ties go to the smaller threshold.
SweepResult sweep_global_threshold(std::span<const Scores> scores,
                                   std::span<const LabelVector> gold,
                                   const ThresholdGrid& grid);

/// Independent per-label sweep maximizing each label's F1; ties go to the
/// smaller threshold. Returns one threshold per label (by label - 1).
std::vector<double> sweep_per_label_thresholds(std::span<const Scores> scores,
                                               std::span<const LabelVector> gold,
                                               const ThresholdGrid& grid);

}  // namespace ncrl
