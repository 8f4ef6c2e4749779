#pragma once

#include <span>
#include <string_view>
#include <vector>

#include "ncrl/labels.hpp"

namespace ncrl {

/// Label margins derived from a score vector. Vectors are indexed by
/// label - 1, so pos[0] is the margin of label 1.
struct Margins {
  std::vector<double> pos;  // f_i - f_0
  std::vector<double> neg;  // f_0 - f_i
  double avg_pos = 0.0;     // f_0 - mean(f_1..f_K)
  double avg_neg = 0.0;     // mean(f_1..f_K) - f_0
};

Margins compute_margins(std::span<const double> f);

struct LossResult {
  double value = 0.0;
  std::vector<double> grad;  // d value / d f_i for i in 0..K
};

/// Margin-shift amount, 0 <= gamma < 1. gamma = 0 disables shifting.
class ShiftParam {
 public:
  constexpr ShiftParam() = default;
  explicit ShiftParam(double gamma);
  constexpr double value() const { return gamma_; }

 private:
  double gamma_ = 0.0;
};

enum class LossKind {
  ncrl_plain,
  ncrl_shifted,  // ncrl_plain with negative-margin shifting, no average-margin term
  ncrl_final,
  margin_reg,
  bce,
  bce_shifted,
  atl,
  pairwise,
};

std::string_view to_string(LossKind kind);
LossKind parse_loss_kind(std::string_view name);

/// True for losses that see only score differences (sum of gradient is zero).
bool is_margin_based(LossKind kind);

/// True for losses whose value depends on the shift parameter.
bool uses_shift(LossKind kind);

/// Number of reversely ordered (none class, label) pairs; ties count 1/2.
double ncre_error(const LabelVector& y, std::span<const double> f);

LossResult ncrl_plain(const LabelVector& y, std::span<const double> f);
LossResult margin_regularization(const LabelVector& y, std::span<const double> f);
LossResult ncrl_shifted(const LabelVector& y, std::span<const double> f, ShiftParam gamma);
LossResult ncrl_final(const LabelVector& y, std::span<const double> f, ShiftParam gamma);

/// min(sigmoid(m_neg) + gamma, 1).
double shifted_negative_prob(double m_neg, ShiftParam gamma);

/// Independent sigmoid cross entropy over labels 1..K; f_0 is ignored.
LossResult bce(const LabelVector& y, std::span<const double> f);
LossResult bce_shifted(const LabelVector& y, std::span<const double> f, ShiftParam gamma);

/// Adaptive thresholding loss with f_0 as the learned threshold.
LossResult atl(const LabelVector& y, std::span<const double> f);

/// Logistic pairwise ranking loss over (positive, negative) label pairs.
LossResult pairwise_ranking(const LabelVector& y, std::span<const double> f);

std::size_t hamming_error(const LabelVector& y, std::span<const int> predicted);
double ranking_error(const LabelVector& y, std::span<const double> f);

LossResult evaluate_loss(LossKind kind, const LabelVector& y, std::span<const double> f,
                         ShiftParam gamma = ShiftParam{});

}  // namespace ncrl
