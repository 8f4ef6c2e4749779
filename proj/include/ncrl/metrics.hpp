#pragma once

#include <span>
#include <vector>

#include "ncrl/labels.hpp"
#include "ncrl/prediction.hpp"

namespace ncrl {

/// Per-label counts over labels 1..K, stored by label - 1.
struct ConfusionCounts {
  std::vector<std::size_t> tp;
  std::vector<std::size_t> fp;
  std::vector<std::size_t> fn;

  explicit ConfusionCounts(std::size_t num_classes = 0)
      : tp(num_classes, 0), fp(num_classes, 0), fn(num_classes, 0) {}

  std::size_t num_classes() const { return tp.size(); }
  void add(const PredictionSet& pred, const LabelVector& gold);
};

ConfusionCounts confusion(std::span<const PredictionSet> pred,
                          std::span<const LabelVector> gold);

struct F1Scores {
  double micro_f1 = 0.0;
  double macro_f1 = 0.0;
  double micro_precision = 0.0;
  double micro_recall = 0.0;
};

/// Vanishing denominators give 0.
F1Scores micro_macro_f1(const ConfusionCounts& counts);

/// F1 from raw counts with the same 0/0 convention.
double f1_score(std::size_t tp, std::size_t fp, std::size_t fn);

/// Mean over instances with at least one positive label of the average
/// precision of the gold set under the score ranking of labels 1..K.
/// Equal scores rank the smaller label index first.
double mean_average_precision(std::span<const Scores> scores,
                              std::span<const LabelVector> gold);

double mean_ncre(std::span<const Scores> scores, std::span<const LabelVector> gold);

struct MetricsReport {
  double micro_f1 = 0.0;
  double macro_f1 = 0.0;
  double micro_precision = 0.0;
  double micro_recall = 0.0;
  double map = 0.0;  // NaN when no instance has a positive label
  double mean_ncre = 0.0;
};

MetricsReport evaluate_predictions(std::span<const Scores> scores,
                                   std::span<const PredictionSet> pred,
                                   std::span<const LabelVector> gold);

}  // namespace ncrl
