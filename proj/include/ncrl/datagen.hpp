#pragma once

#include <cstdint>
#include <vector>

#include "ncrl/dataset.hpp"

namespace ncrl {

/// Hidden linear labeling rule: label i is positive iff
/// directions[i] . x > thresholds[i].
struct GroundTruth {
  std::vector<std::vector<double>> directions;
  std::vector<double> thresholds;

  /// Witness scores: f_0 = 0 and f_i = directions[i] . x - thresholds[i].
  Scores scores(const std::vector<double>& features) const;
};

struct GeneratedData {
  Dataset data;
  GroundTruth truth;
};

/// Probe size for threshold calibration.
inline constexpr std::size_t kCalibrationProbe = 10000;
/// Allowed absolute gap between realized and targeted rates.
inline constexpr double kCalibrationTolerance = 0.05;

GeneratedData generate_with_truth(const SyntheticConfig& config);
Dataset generate(const SyntheticConfig& config);

/// Threshold (in standard deviations) giving positive rate `rate`.
double bias_for_positive_rate(double rate);
/// Uniform bias that yields `none_fraction` over K independent labels.
double uniform_bias_for_none_fraction(std::size_t num_labels, double none_fraction);

Dataset inject_false_negatives(const Dataset& data, double rate, std::uint64_t seed);
Dataset inject_symmetric_noise(const Dataset& data, double rate, std::uint64_t seed);
Dataset strip_none_instances(const Dataset& data);

struct ClassPriorReport {
  std::vector<std::size_t> positive_counts;  // by label - 1
  std::vector<double> positive_rates;
  std::size_t none_count = 0;
  double none_fraction = 0.0;
  /// max rate / min rate; +inf when some label never fires, 1 when all rates are equal.
  double imbalance_ratio = 1.0;
};

ClassPriorReport class_prior_report(const Dataset& data);

}  // namespace ncrl
