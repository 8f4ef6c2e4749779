#include "ncrl/losses.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "ncrl/numeric.hpp"

namespace ncrl {
namespace {

struct Term {
  double value;
  double slope;  // d value / d margin
};

// -log sigmoid(m)
Term positive_term(double m) { return {softplus(-m), -sigmoid(-m)}; }

// -log min(sigmoid(m) + gamma, 1). Without a shift this is the plain
// log-sigmoid term, evaluated in the log domain so it never reaches -inf.
Term negative_term(double m, ShiftParam gamma) {
  const double g = gamma.value();
  if (g == 0.0) {
    return positive_term(m);
  }
  const double s = sigmoid(m);
  if (s >= 1.0 - g) {
    return {0.0, 0.0};
  }
  const double p = s + g;
  return {-std::log(p), -s * sigmoid(-m) / p};
}

void check_inputs(const LabelVector& y, std::span<const double> f, const char* what) {
  require_matching(y, f);
  require_finite(f, what);
}

double mean_label_score(std::span<const double> f) {
  double sum = 0.0;
  for (std::size_t i = 1; i < f.size(); ++i) sum += f[i];
  return sum / static_cast<double>(f.size() - 1);
}

// Per-label margin terms for i = 1..K, optionally followed by the
// average-margin term for i = 0.
LossResult margin_loss(const LabelVector& y, std::span<const double> f, ShiftParam gamma,
                       bool label_terms, bool average_term) {
  const std::size_t k = y.num_classes();
  LossResult out;
  out.grad.assign(k + 1, 0.0);
  const double f0 = f[0];

  if (label_terms) {
    for (std::size_t i = 1; i <= k; ++i) {
      if (y[i]) {
        const Term t = positive_term(f[i] - f0);
        out.value += t.value;
        out.grad[i] += t.slope;
        out.grad[0] -= t.slope;
      } else {
        const Term t = negative_term(f0 - f[i], gamma);
        out.value += t.value;
        out.grad[0] += t.slope;
        out.grad[i] -= t.slope;
      }
    }
  }

  if (average_term) {
    const double mean = mean_label_score(f);
    const double inv_k = 1.0 / static_cast<double>(k);
    if (y.is_none()) {
      const Term t = positive_term(f0 - mean);
      out.value += t.value;
      out.grad[0] += t.slope;
      for (std::size_t i = 1; i <= k; ++i) out.grad[i] -= t.slope * inv_k;
    } else {
      const Term t = negative_term(mean - f0, gamma);
      out.value += t.value;
      out.grad[0] -= t.slope;
      for (std::size_t i = 1; i <= k; ++i) out.grad[i] += t.slope * inv_k;
    }
  }
  return out;
}

// log(sum exp(f_j)) over the selected indices.
double log_sum_exp(std::span<const double> f, std::span<const std::size_t> idx) {
  double hi = -INFINITY;
  for (std::size_t j : idx) hi = std::max(hi, f[j]);
  double sum = 0.0;
  for (std::size_t j : idx) sum += std::exp(f[j] - hi);
  return hi + std::log(sum);
}

}  // namespace

ShiftParam::ShiftParam(double gamma) : gamma_(gamma) {
  if (!(gamma >= 0.0 && gamma < 1.0)) {
    throw std::invalid_argument("shift gamma must lie in [0, 1), got " +
                                std::to_string(gamma));
  }
}

std::string_view to_string(LossKind kind) {
  switch (kind) {
    case LossKind::ncrl_plain: return "ncrl_plain";
    case LossKind::ncrl_shifted: return "ncrl_shifted";
    case LossKind::ncrl_final: return "ncrl_final";
    case LossKind::margin_reg: return "margin_reg";
    case LossKind::bce: return "bce";
    case LossKind::bce_shifted: return "bce_shifted";
    case LossKind::atl: return "atl";
    case LossKind::pairwise: return "pairwise";
  }
  return "unknown";
}

LossKind parse_loss_kind(std::string_view name) {
  for (LossKind k : {LossKind::ncrl_plain, LossKind::ncrl_shifted, LossKind::ncrl_final,
                     LossKind::margin_reg, LossKind::bce, LossKind::bce_shifted,
                     LossKind::atl, LossKind::pairwise}) {
    if (to_string(k) == name) return k;
  }
  throw std::invalid_argument("unknown loss kind '" + std::string(name) + "'");
}

bool is_margin_based(LossKind kind) {
  switch (kind) {
    case LossKind::ncrl_plain:
    case LossKind::ncrl_shifted:
    case LossKind::ncrl_final:
    case LossKind::margin_reg:
    case LossKind::atl:
      return true;
    default:
      return false;
  }
}

bool uses_shift(LossKind kind) {
  return kind == LossKind::ncrl_shifted || kind == LossKind::ncrl_final ||
         kind == LossKind::bce_shifted;
}

Margins compute_margins(std::span<const double> f) {
  if (f.size() < 2) {
    throw std::invalid_argument("score vector needs f_0 and at least one label score");
  }
  Margins m;
  const std::size_t k = f.size() - 1;
  m.pos.resize(k);
  m.neg.resize(k);
  for (std::size_t i = 1; i <= k; ++i) {
    m.pos[i - 1] = f[i] - f[0];
    m.neg[i - 1] = f[0] - f[i];
  }
  const double mean = mean_label_score(f);
  m.avg_pos = f[0] - mean;
  m.avg_neg = mean - f[0];
  return m;
}

double ncre_error(const LabelVector& y, std::span<const double> f) {
  require_matching(y, f);
  double err = 0.0;
  for (std::size_t i = 1; i < f.size(); ++i) {
    if (f[i] == f[0]) {
      err += 0.5;
    } else if (y[i] ? f[i] < f[0] : f[i] > f[0]) {
      err += 1.0;
    }
  }
  return err;
}

LossResult ncrl_plain(const LabelVector& y, std::span<const double> f) {
  check_inputs(y, f, "ncrl_plain");
  return margin_loss(y, f, ShiftParam{}, true, false);
}

LossResult margin_regularization(const LabelVector& y, std::span<const double> f) {
  check_inputs(y, f, "margin_regularization");
  return margin_loss(y, f, ShiftParam{}, false, true);
}

LossResult ncrl_shifted(const LabelVector& y, std::span<const double> f, ShiftParam gamma) {
  check_inputs(y, f, "ncrl_shifted");
  return margin_loss(y, f, gamma, true, false);
}

LossResult ncrl_final(const LabelVector& y, std::span<const double> f, ShiftParam gamma) {
  check_inputs(y, f, "ncrl_final");
  return margin_loss(y, f, gamma, true, true);
}

double shifted_negative_prob(double m_neg, ShiftParam gamma) {
  return std::min(sigmoid(m_neg) + gamma.value(), 1.0);
}

LossResult bce(const LabelVector& y, std::span<const double> f) {
  return bce_shifted(y, f, ShiftParam{});
}

LossResult bce_shifted(const LabelVector& y, std::span<const double> f, ShiftParam gamma) {
  check_inputs(y, f, "bce");
  LossResult out;
  out.grad.assign(f.size(), 0.0);
  for (std::size_t i = 1; i < f.size(); ++i) {
    // The negative probability 1 - sigmoid(f_i) is sigmoid(-f_i), so the
    // shifted negative term is the margin-shift term at margin -f_i.
    const Term t = y[i] ? positive_term(f[i]) : negative_term(-f[i], gamma);
    out.value += t.value;
    out.grad[i] = y[i] ? t.slope : -t.slope;
  }
  return out;
}

LossResult atl(const LabelVector& y, std::span<const double> f) {
  check_inputs(y, f, "atl");
  const std::size_t k = y.num_classes();
  LossResult out;
  out.grad.assign(k + 1, 0.0);

  std::vector<std::size_t> with_pos{0};
  std::vector<std::size_t> with_neg{0};
  for (std::size_t i = 1; i <= k; ++i) (y[i] ? with_pos : with_neg).push_back(i);

  const std::size_t num_pos = with_pos.size() - 1;
  if (num_pos > 0) {
    // Each positive i contributes lse(P ∪ {0}) - f_i.
    const double lse = log_sum_exp(f, with_pos);
    out.value += static_cast<double>(num_pos) * lse;
    for (std::size_t j : with_pos) {
      out.grad[j] += static_cast<double>(num_pos) * std::exp(f[j] - lse);
    }
    for (std::size_t j = 1; j < with_pos.size(); ++j) {
      out.value -= f[with_pos[j]];
      out.grad[with_pos[j]] -= 1.0;
    }
  }

  const double lse = log_sum_exp(f, with_neg);
  out.value += lse - f[0];
  for (std::size_t j : with_neg) out.grad[j] += std::exp(f[j] - lse);
  out.grad[0] -= 1.0;
  return out;
}

LossResult pairwise_ranking(const LabelVector& y, std::span<const double> f) {
  require_matching(y, f);
  LossResult out;
  out.grad.assign(f.size(), 0.0);
  for (std::size_t i = 1; i < f.size(); ++i) {
    if (!y[i]) continue;
    for (std::size_t j = 1; j < f.size(); ++j) {
      if (y[j]) continue;
      const double d = f[j] - f[i];
      out.value += softplus(d);
      const double s = sigmoid(d);
      out.grad[i] -= s;
      out.grad[j] += s;
    }
  }
  return out;
}

std::size_t hamming_error(const LabelVector& y, std::span<const int> predicted) {
  if (predicted.size() != y.num_classes()) {
    throw std::invalid_argument("prediction has " + std::to_string(predicted.size()) +
                                " flags but there are " + std::to_string(y.num_classes()) +
                                " labels");
  }
  std::size_t err = 0;
  for (std::size_t i = 1; i <= y.num_classes(); ++i) {
    err += (predicted[i - 1] != 0) != y[i] ? 1 : 0;
  }
  return err;
}

double ranking_error(const LabelVector& y, std::span<const double> f) {
  require_matching(y, f);
  double err = 0.0;
  for (std::size_t i = 1; i < f.size(); ++i) {
    if (!y[i]) continue;
    for (std::size_t j = 1; j < f.size(); ++j) {
      if (y[j]) continue;
      if (f[i] < f[j]) {
        err += 1.0;
      } else if (f[i] == f[j]) {
        err += 0.5;
      }
    }
  }
  return err;
}

LossResult evaluate_loss(LossKind kind, const LabelVector& y, std::span<const double> f,
                         ShiftParam gamma) {
  switch (kind) {
    case LossKind::ncrl_plain: return ncrl_plain(y, f);
    case LossKind::ncrl_shifted: return ncrl_shifted(y, f, gamma);
    case LossKind::ncrl_final: return ncrl_final(y, f, gamma);
    case LossKind::margin_reg: return margin_regularization(y, f);
    case LossKind::bce: return bce(y, f);
    case LossKind::bce_shifted: return bce_shifted(y, f, gamma);
    case LossKind::atl: return atl(y, f);
    case LossKind::pairwise: return pairwise_ranking(y, f);
  }
  throw std::invalid_argument("unhandled loss kind");
}

}  // namespace ncrl
