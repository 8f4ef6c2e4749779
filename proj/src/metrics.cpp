#include "ncrl/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <string>

#include "ncrl/losses.hpp"

namespace ncrl {
namespace {

double ratio(std::size_t num, std::size_t den) {
  return den == 0 ? 0.0 : static_cast<double>(num) / static_cast<double>(den);
}

void check_lengths(std::size_t a, std::size_t b, const char* what) {
  if (a != b) {
    throw std::invalid_argument(std::string(what) + ": " + std::to_string(a) +
                                " predictions/scores vs " + std::to_string(b) +
                                " gold label vectors");
  }
}

// Average precision of the gold set when labels are ranked by descending
// score, earlier label first on ties.
double average_precision(std::span<const double> f, const LabelVector& gold) {
  std::vector<std::size_t> order(f.size() - 1);
  std::iota(order.begin(), order.end(), std::size_t{1});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return f[a] > f[b]; });
  std::size_t hits = 0;
  double sum = 0.0;
  for (std::size_t rank = 0; rank < order.size(); ++rank) {
    if (gold[order[rank]]) {
      ++hits;
      sum += static_cast<double>(hits) / static_cast<double>(rank + 1);
    }
  }
  return sum / static_cast<double>(hits);
}

}  // namespace

void ConfusionCounts::add(const PredictionSet& pred, const LabelVector& gold) {
  if (gold.num_classes() != num_classes()) {
    throw std::invalid_argument("label vector has " + std::to_string(gold.num_classes()) +
                                " classes, counts track " + std::to_string(num_classes()));
  }
  std::vector<std::uint8_t> predicted(num_classes() + 1, 0);
  for (std::size_t i : pred) {
    if (i < 1 || i > num_classes()) {
      throw std::invalid_argument("predicted label " + std::to_string(i) + " out of range");
    }
    predicted[i] = 1;
  }
  for (std::size_t i = 1; i <= num_classes(); ++i) {
    if (predicted[i] && gold[i]) ++tp[i - 1];
    if (predicted[i] && !gold[i]) ++fp[i - 1];
    if (!predicted[i] && gold[i]) ++fn[i - 1];
  }
}

ConfusionCounts confusion(std::span<const PredictionSet> pred,
                          std::span<const LabelVector> gold) {
  check_lengths(pred.size(), gold.size(), "confusion");
  ConfusionCounts counts(gold.empty() ? 0 : gold.front().num_classes());
  for (std::size_t n = 0; n < pred.size(); ++n) counts.add(pred[n], gold[n]);
  return counts;
}

double f1_score(std::size_t tp, std::size_t fp, std::size_t fn) {
  return ratio(2 * tp, 2 * tp + fp + fn);
}

F1Scores micro_macro_f1(const ConfusionCounts& counts) {
  const std::size_t tp = std::accumulate(counts.tp.begin(), counts.tp.end(), std::size_t{0});
  const std::size_t fp = std::accumulate(counts.fp.begin(), counts.fp.end(), std::size_t{0});
  const std::size_t fn = std::accumulate(counts.fn.begin(), counts.fn.end(), std::size_t{0});

  F1Scores out;
  out.micro_precision = ratio(tp, tp + fp);
  out.micro_recall = ratio(tp, tp + fn);
  out.micro_f1 = f1_score(tp, fp, fn);
  double macro = 0.0;
  for (std::size_t i = 0; i < counts.num_classes(); ++i) {
    macro += f1_score(counts.tp[i], counts.fp[i], counts.fn[i]);
  }
  out.macro_f1 = counts.num_classes() == 0
                     ? 0.0
                     : macro / static_cast<double>(counts.num_classes());
  return out;
}

double mean_average_precision(std::span<const Scores> scores,
                              std::span<const LabelVector> gold) {
  check_lengths(scores.size(), gold.size(), "mean_average_precision");
  double sum = 0.0;
  std::size_t used = 0;
  for (std::size_t n = 0; n < scores.size(); ++n) {
    require_matching(gold[n], scores[n]);
    if (gold[n].is_none()) continue;
    sum += average_precision(scores[n], gold[n]);
    ++used;
  }
  if (used == 0) {
    throw std::invalid_argument("mean_average_precision: no instance has a positive label");
  }
  return sum / static_cast<double>(used);
}

double mean_ncre(std::span<const Scores> scores, std::span<const LabelVector> gold) {
  check_lengths(scores.size(), gold.size(), "mean_ncre");
  if (scores.empty()) throw std::invalid_argument("mean_ncre: empty collection");
  double sum = 0.0;
  for (std::size_t n = 0; n < scores.size(); ++n) sum += ncre_error(gold[n], scores[n]);
  return sum / static_cast<double>(scores.size());
}

MetricsReport evaluate_predictions(std::span<const Scores> scores,
                                   std::span<const PredictionSet> pred,
                                   std::span<const LabelVector> gold) {
  const F1Scores f1 = micro_macro_f1(confusion(pred, gold));
  MetricsReport r;
  r.micro_f1 = f1.micro_f1;
  r.macro_f1 = f1.macro_f1;
  r.micro_precision = f1.micro_precision;
  r.micro_recall = f1.micro_recall;
  const bool any_positive =
      std::any_of(gold.begin(), gold.end(), [](const LabelVector& y) { return !y.is_none(); });
  r.map = any_positive ? mean_average_precision(scores, gold)
                       : std::numeric_limits<double>::quiet_NaN();
  r.mean_ncre = mean_ncre(scores, gold);
  return r;
}

}  // namespace ncrl
