#include "ncrl/consistency.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "ncrl/numeric.hpp"
#include "ncrl/rng.hpp"

namespace ncrl {
namespace {

void check_lengths(const MarginalDistribution& delta, std::span<const double> f) {
  if (f.size() != delta.num_classes() + 1) {
    throw std::invalid_argument("score vector has " + std::to_string(f.size()) +
                                " entries, expected " +
                                std::to_string(delta.num_classes() + 1));
  }
}

// Labels this close to 1/2 are not held to a sign in experiment trials.
constexpr double kAmbiguousBand = 0.01;

constexpr double kSampleLow = 0.05;
constexpr double kSampleHigh = 0.95;

}  // namespace

MarginalDistribution::MarginalDistribution(std::vector<double> delta)
    : delta_(std::move(delta)) {
  if (delta_.empty()) {
    throw std::invalid_argument("marginal distribution needs at least one label");
  }
  for (std::size_t i = 0; i < delta_.size(); ++i) {
    if (!(delta_[i] > 0.0 && delta_[i] < 1.0)) {
      throw std::invalid_argument("marginal probability for label " + std::to_string(i + 1) +
                                  " is " + std::to_string(delta_[i]) +
                                  ", must lie strictly inside (0, 1)");
    }
  }
}

double ncre_conditional_risk(const MarginalDistribution& delta, std::span<const double> f) {
  check_lengths(delta, f);
  double risk = 0.0;
  for (std::size_t i = 1; i < f.size(); ++i) {
    if (f[i] < f[0]) {
      risk += delta[i];
    } else if (f[i] > f[0]) {
      risk += 1.0 - delta[i];
    } else {
      risk += 0.5;
    }
  }
  return risk;
}

double bayes_ncre_risk(const MarginalDistribution& delta) {
  double risk = 0.0;
  for (double d : delta.values()) risk += std::min(d, 1.0 - d);
  return risk;
}

bool bayes_optimal_membership(const MarginalDistribution& delta, std::span<const double> f,
                              double tie_tolerance) {
  check_lengths(delta, f);
  for (std::size_t i = 1; i < f.size(); ++i) {
    const double margin = f[i] - f[0];
    const bool tied = std::abs(margin) <= tie_tolerance;
    if (delta[i] > 0.5 && (tied || margin < 0.0)) return false;
    if (delta[i] < 0.5 && (tied || margin > 0.0)) return false;
  }
  return true;
}

std::vector<double> optimal_margin_closed_form(const MarginalDistribution& delta) {
  std::vector<double> out;
  out.reserve(delta.num_classes());
  for (double d : delta.values()) out.push_back(logit(d));
  return out;
}

double expected_ncrl(const MarginalDistribution& delta, std::span<const double> f,
                     std::span<double> grad) {
  check_lengths(delta, f);
  if (grad.size() != f.size()) {
    throw std::invalid_argument("gradient buffer length mismatch");
  }
  std::fill(grad.begin(), grad.end(), 0.0);
  double value = 0.0;
  for (std::size_t i = 1; i < f.size(); ++i) {
    const double m = f[i] - f[0];
    const double d = delta[i];
    value += d * softplus(-m) + (1.0 - d) * softplus(m);
    // d/dm = -d * sigmoid(-m) + (1 - d) * sigmoid(m) = sigmoid(m) - d
    const double slope = sigmoid(m) - d;
    grad[i] += slope;
    grad[0] -= slope;
  }
  return value;
}

Scores minimize_conditional_ncrl(const MarginalDistribution& delta,
                                 std::span<const double> init, double step,
                                 std::size_t iters) {
  check_lengths(delta, init);
  if (!(step > 0.0)) throw std::invalid_argument("step must be positive");
  Scores f(init.begin(), init.end());
  std::vector<double> grad(f.size());
  for (std::size_t it = 0; it < iters; ++it) {
    const double value = expected_ncrl(delta, f, grad);
    for (std::size_t i = 0; i < f.size(); ++i) f[i] -= step * grad[i];
    if (!std::isfinite(value) ||
        !std::all_of(f.begin(), f.end(), [](double v) { return std::isfinite(v); })) {
      throw std::runtime_error("conditional NCRL minimization diverged at iteration " +
                               std::to_string(it));
    }
  }
  return f;
}

ConsistencyTrial run_consistency_trial(const MarginalDistribution& delta) {
  const std::size_t k = delta.num_classes();
  // The Hessian's largest eigenvalue is at most (K + 1) / 4, so 0.5 is stable
  // up to K = 5; beyond that the step shrinks and the budget grows to match.
  const double step = std::min(0.5, 3.0 / static_cast<double>(k + 1));
  const auto iters = static_cast<std::size_t>(std::ceil(5000.0 * 0.5 / step));

  const Scores f = minimize_conditional_ncrl(delta, Scores(k + 1, 0.0), step, iters);
  const std::vector<double> optimum = optimal_margin_closed_form(delta);

  ConsistencyTrial trial;
  for (std::size_t i = 1; i <= k; ++i) {
    trial.margin_deviation =
        std::max(trial.margin_deviation, std::abs((f[i] - f[0]) - optimum[i - 1]));
  }

  trial.sign_agreement = true;
  for (std::size_t i = 1; i <= k; ++i) {
    if (std::abs(delta[i] - 0.5) <= kAmbiguousBand) continue;
    const double margin = f[i] - f[0];
    const bool agrees = std::abs(margin) > kTieTolerance && (margin > 0.0) == (delta[i] > 0.5);
    trial.sign_agreement = trial.sign_agreement && agrees;
  }

  trial.ncre_risk_gap = ncre_conditional_risk(delta, f) - bayes_ncre_risk(delta);
  return trial;
}

ConsistencyReport run_consistency_experiment(std::size_t trials, std::size_t num_classes,
                                             std::uint64_t seed) {
  if (trials == 0) throw std::invalid_argument("trials must be at least 1");
  if (num_classes == 0) throw std::invalid_argument("K must be at least 1");
  Rng rng = make_rng(seed, stream::kConsistency);
  std::uniform_real_distribution<double> sample(kSampleLow, kSampleHigh);

  ConsistencyReport report;
  report.trials = trials;
  report.ncre_risk_gap = -INFINITY;
  std::size_t agreeing = 0;
  for (std::size_t t = 0; t < trials; ++t) {
    std::vector<double> delta(num_classes);
    for (double& d : delta) d = sample(rng);
    const ConsistencyTrial trial = run_consistency_trial(MarginalDistribution(std::move(delta)));
    report.max_margin_deviation = std::max(report.max_margin_deviation, trial.margin_deviation);
    report.ncre_risk_gap = std::max(report.ncre_risk_gap, trial.ncre_risk_gap);
    agreeing += trial.sign_agreement ? 1 : 0;
  }
  report.sign_agreement_rate = static_cast<double>(agreeing) / static_cast<double>(trials);
  return report;
}

}  // namespace ncrl
