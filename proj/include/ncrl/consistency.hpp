#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "ncrl/labels.hpp"

namespace ncrl {

/// Marginal probabilities P(y_i = 1 | x) for labels 1..K, each strictly
/// inside (0, 1). Stored by label - 1.
class MarginalDistribution {
 public:
  explicit MarginalDistribution(std::vector<double> delta);
  std::size_t num_classes() const { return delta_.size(); }
  /// P(y_i = 1 | x), i in 1..K.
  double operator[](std::size_t i) const { return delta_[i - 1]; }
  std::span<const double> values() const { return delta_; }

 private:
  std::vector<double> delta_;
};

struct ConsistencyReport {
  double max_margin_deviation = 0.0;
  double sign_agreement_rate = 0.0;
  double ncre_risk_gap = 0.0;  // worst conditional NCRE risk above the Bayes risk
  std::size_t trials = 0;

  friend bool operator==(const ConsistencyReport&, const ConsistencyReport&) = default;
};

/// Recovered margins below this magnitude count as ties in membership checks.
inline constexpr double kTieTolerance = 1e-6;

double ncre_conditional_risk(const MarginalDistribution& delta, std::span<const double> f);

/// Sum over labels of min(delta_i, 1 - delta_i).
double bayes_ncre_risk(const MarginalDistribution& delta);

/// Whether f lies in the Bayes-optimal set for the conditional NCRE risk.
/// Margins within tie_tolerance of zero count as ties, which only satisfy
/// labels with delta_i = 1/2.
bool bayes_optimal_membership(const MarginalDistribution& delta, std::span<const double> f,
                              double tie_tolerance = 0.0);

/// logit(delta_i) per label: the minimizer of the expected plain NCRL.
std::vector<double> optimal_margin_closed_form(const MarginalDistribution& delta);

/// Expected plain NCRL under the marginals, and its gradient.
double expected_ncrl(const MarginalDistribution& delta, std::span<const double> f,
                     std::span<double> grad);

/// Fixed-step gradient descent on the expected plain NCRL from init.
Scores minimize_conditional_ncrl(const MarginalDistribution& delta,
                                 std::span<const double> init, double step,
                                 std::size_t iters);

struct ConsistencyTrial {
  double margin_deviation = 0.0;
  bool sign_agreement = false;
  double ncre_risk_gap = 0.0;
};

/// One trial: minimize from zero and compare against the closed form.
ConsistencyTrial run_consistency_trial(const MarginalDistribution& delta);

/// Samples delta uniformly from [0.05, 0.95]^K per trial.
ConsistencyReport run_consistency_experiment(std::size_t trials, std::size_t num_classes,
                                             std::uint64_t seed);

}  // namespace ncrl
