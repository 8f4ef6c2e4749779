#include "ncrl/datagen.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

#include "ncrl/rng.hpp"

namespace ncrl {
namespace {

constexpr std::uint64_t kDirectionStream = 10;
constexpr std::uint64_t kFalseNegativeStream = 11;
constexpr std::uint64_t kSymmetricStream = 12;

double normal_upper_tail(double x) { return 0.5 * std::erfc(x / std::sqrt(2.0)); }

double dot(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

void check_rate(double rate, const char* name) {
  if (!(rate >= 0.0 && rate <= 1.0)) {
    throw std::invalid_argument(std::string(name) + " must lie in [0, 1], got " +
                                std::to_string(rate));
  }
}

void validate_config(const SyntheticConfig& c) {
  if (c.num_labels == 0) throw std::invalid_argument("num_labels must be at least 1");
  if (c.feature_dim == 0) throw std::invalid_argument("feature_dim must be at least 1");
  if (c.num_instances == 0) throw std::invalid_argument("num_instances must be at least 1");
  if (!(c.boundary_margin >= 0.0 && c.boundary_margin < 1.0)) {
    throw std::invalid_argument("boundary_margin must lie in [0, 1)");
  }
  check_rate(c.noise_false_negative_rate, "noise_false_negative_rate");
  check_rate(c.noise_symmetric_rate, "noise_symmetric_rate");
  if (c.none_fraction_target) check_rate(*c.none_fraction_target, "none_fraction_target");
  if (!c.per_label_bias.empty()) {
    if (c.per_label_bias.size() != c.num_labels) {
      throw std::invalid_argument("per_label_bias has " +
                                  std::to_string(c.per_label_bias.size()) +
                                  " entries, expected num_labels=" +
                                  std::to_string(c.num_labels));
    }
    for (double b : c.per_label_bias) {
      if (std::isnan(b)) throw std::invalid_argument("per_label_bias contains NaN");
    }
  } else if (!c.none_fraction_target) {
    throw std::invalid_argument("either per_label_bias or none_fraction_target is required");
  }
}

// Unit directions; the first min(K, d) are mutually orthogonal so that label
// projections of a spherical Gaussian are independent standard normals.
std::vector<std::vector<double>> draw_directions(const SyntheticConfig& c) {
  Rng rng = make_rng(c.seed, kDirectionStream);
  std::normal_distribution<double> normal;
  std::vector<std::vector<double>> dirs(c.num_labels, std::vector<double>(c.feature_dim));
  for (std::size_t i = 0; i < c.num_labels; ++i) {
    auto& w = dirs[i];
    for (;;) {
      for (double& v : w) v = normal(rng);
      if (i < c.feature_dim) {
        for (std::size_t j = 0; j < i; ++j) {
          const double proj = dot(w, dirs[j]);
          for (std::size_t t = 0; t < w.size(); ++t) w[t] -= proj * dirs[j][t];
        }
      }
      const double norm = std::sqrt(dot(w, w));
      if (norm > 1e-8) {
        for (double& v : w) v /= norm;
        break;
      }
    }
  }
  return dirs;
}

std::vector<double> draw_features(Rng& rng, std::size_t dim) {
  std::normal_distribution<double> normal;
  std::vector<double> x(dim);
  for (double& v : x) v = normal(rng);
  return x;
}

// One-pass quantile adjustment on the probe projections. Rates too extreme
// for the probe to resolve keep the analytic threshold.
double calibrate_threshold(double bias, std::vector<double> projections) {
  if (std::isinf(bias)) return bias;
  const double rate = normal_upper_tail(bias);
  const double n = static_cast<double>(projections.size());
  if (rate * n < 10.0 || (1.0 - rate) * n < 10.0) return bias;
  std::sort(projections.begin(), projections.end());
  const auto above = static_cast<std::size_t>(std::llround(rate * n));
  const std::size_t cut = projections.size() - above;
  return 0.5 * (projections[cut - 1] + projections[cut]);
}

}  // namespace

Scores GroundTruth::scores(const std::vector<double>& features) const {
  Scores f(directions.size() + 1, 0.0);
  for (std::size_t i = 0; i < directions.size(); ++i) {
    f[i + 1] = dot(directions[i], features) - thresholds[i];
  }
  return f;
}

double bias_for_positive_rate(double rate) {
  check_rate(rate, "positive rate");
  if (rate == 0.0) return std::numeric_limits<double>::infinity();
  if (rate == 1.0) return -std::numeric_limits<double>::infinity();
  double lo = -40.0;
  double hi = 40.0;
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    (normal_upper_tail(mid) > rate ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

double uniform_bias_for_none_fraction(std::size_t num_labels, double none_fraction) {
  check_rate(none_fraction, "none fraction");
  if (num_labels == 0) throw std::invalid_argument("num_labels must be at least 1");
  const double rate = 1.0 - std::pow(none_fraction, 1.0 / static_cast<double>(num_labels));
  return bias_for_positive_rate(std::clamp(rate, 0.0, 1.0));
}

GeneratedData generate_with_truth(const SyntheticConfig& config) {
  validate_config(config);
  const std::size_t k = config.num_labels;

  std::vector<double> bias = config.per_label_bias;
  if (bias.empty()) {
    bias.assign(k, uniform_bias_for_none_fraction(k, *config.none_fraction_target));
  }

  GroundTruth truth;
  truth.directions = draw_directions(config);

  Rng probe_rng = make_rng(config.seed, stream::kProbe);
  std::vector<std::vector<double>> probe_proj(k, std::vector<double>(kCalibrationProbe));
  for (std::size_t n = 0; n < kCalibrationProbe; ++n) {
    const std::vector<double> x = draw_features(probe_rng, config.feature_dim);
    for (std::size_t i = 0; i < k; ++i) probe_proj[i][n] = dot(truth.directions[i], x);
  }
  truth.thresholds.resize(k);
  for (std::size_t i = 0; i < k; ++i) {
    truth.thresholds[i] = calibrate_threshold(bias[i], probe_proj[i]);
  }

  if (config.none_fraction_target) {
    std::size_t none = 0;
    for (std::size_t n = 0; n < kCalibrationProbe; ++n) {
      bool any = false;
      for (std::size_t i = 0; i < k && !any; ++i) any = probe_proj[i][n] > truth.thresholds[i];
      none += any ? 0 : 1;
    }
    const double realized = static_cast<double>(none) / static_cast<double>(kCalibrationProbe);
    if (std::abs(realized - *config.none_fraction_target) > kCalibrationTolerance) {
      std::ostringstream msg;
      msg << "none_fraction_target=" << *config.none_fraction_target
          << " conflicts with the per-label positive rates implied by per_label_bias"
          << " (calibration probe none fraction " << realized << ")";
      throw std::invalid_argument(msg.str());
    }
  }

  Dataset data;
  data.provenance = config;
  data.instances.reserve(config.num_instances);
  Rng rng = make_rng(config.seed, stream::kData);
  for (std::size_t n = 0; n < config.num_instances; ++n) {
    Instance inst;
    inst.labels = LabelVector(k);
    std::vector<double> proj(k);
    for (bool inside_gap = true; inside_gap;) {
      inst.features = draw_features(rng, config.feature_dim);
      inside_gap = false;
      for (std::size_t i = 0; i < k; ++i) {
        proj[i] = dot(truth.directions[i], inst.features);
        inside_gap = inside_gap || std::abs(proj[i] - truth.thresholds[i]) < config.boundary_margin;
      }
    }
    for (std::size_t i = 0; i < k; ++i) {
      if (proj[i] > truth.thresholds[i]) inst.labels.set(i + 1, true);
    }
    data.instances.push_back(std::move(inst));
  }

  if (config.noise_false_negative_rate > 0.0) {
    data = inject_false_negatives(data, config.noise_false_negative_rate,
                                  derive_seed(config.seed, kFalseNegativeStream));
  }
  if (config.noise_symmetric_rate > 0.0) {
    data = inject_symmetric_noise(data, config.noise_symmetric_rate,
                                  derive_seed(config.seed, kSymmetricStream));
  }
  return {std::move(data), std::move(truth)};
}

Dataset generate(const SyntheticConfig& config) { return generate_with_truth(config).data; }

Dataset inject_false_negatives(const Dataset& data, double rate, std::uint64_t seed) {
  check_rate(rate, "false negative rate");
  Dataset out = data;
  Rng rng = make_rng(seed, stream::kNoise);
  std::bernoulli_distribution flip(rate);
  for (Instance& inst : out.instances) {
    for (std::size_t i = 1; i <= inst.labels.num_classes(); ++i) {
      if (inst.labels[i] && flip(rng)) inst.labels.set(i, false);
    }
  }
  return out;
}

Dataset inject_symmetric_noise(const Dataset& data, double rate, std::uint64_t seed) {
  check_rate(rate, "symmetric noise rate");
  Dataset out = data;
  Rng rng = make_rng(seed, stream::kNoise);
  std::bernoulli_distribution flip(rate);
  for (Instance& inst : out.instances) {
    for (std::size_t i = 1; i <= inst.labels.num_classes(); ++i) {
      if (flip(rng)) inst.labels.set(i, !inst.labels[i]);
    }
  }
  return out;
}

Dataset strip_none_instances(const Dataset& data) {
  Dataset out;
  out.provenance = data.provenance;
  for (const Instance& inst : data.instances) {
    if (!inst.labels.is_none()) out.instances.push_back(inst);
  }
  if (out.instances.empty()) {
    throw std::invalid_argument("stripping none-class instances left an empty dataset");
  }
  return out;
}

ClassPriorReport class_prior_report(const Dataset& data) {
  data.validate();
  const std::size_t k = data.num_classes();
  ClassPriorReport r;
  r.positive_counts.assign(k, 0);
  for (const Instance& inst : data.instances) {
    for (std::size_t i = 1; i <= k; ++i) r.positive_counts[i - 1] += inst.labels[i] ? 1 : 0;
    r.none_count += inst.labels.is_none() ? 1 : 0;
  }
  const auto n = static_cast<double>(data.size());
  r.positive_rates.resize(k);
  for (std::size_t i = 0; i < k; ++i) {
    r.positive_rates[i] = static_cast<double>(r.positive_counts[i]) / n;
  }
  r.none_fraction = static_cast<double>(r.none_count) / n;
  const auto [lo, hi] = std::minmax_element(r.positive_rates.begin(), r.positive_rates.end());
  if (*lo == *hi) {
    r.imbalance_ratio = 1.0;
  } else if (*lo == 0.0) {
    r.imbalance_ratio = std::numeric_limits<double>::infinity();
  } else {
    r.imbalance_ratio = *hi / *lo;
  }
  return r;
}

}  // namespace ncrl
