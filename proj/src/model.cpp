#include "ncrl/model.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "ncrl/metrics.hpp"
#include "ncrl/prediction.hpp"

namespace ncrl {
namespace {

void check_input(std::span<const double> x, std::size_t d) {
  if (x.size() != d) {
    throw std::invalid_argument("feature vector has " + std::to_string(x.size()) +
                                " entries, scorer expects " + std::to_string(d));
  }
}

void check_grad(std::span<const double> dscores, std::span<double> grad, std::size_t outputs,
                std::size_t params) {
  if (dscores.size() != outputs || grad.size() != params) {
    throw std::invalid_argument("gradient buffer size mismatch");
  }
}

void fill_normal(std::span<double> values, double stddev, Rng& rng) {
  std::normal_distribution<double> normal(0.0, stddev);
  for (double& v : values) v = normal(rng);
}

std::span<double> mutable_parameters(Scorer& scorer) {
  return std::visit([](auto& s) { return s.parameters(); }, scorer);
}

void accumulate(const Scorer& scorer, std::span<const double> x, std::span<const double> dscores,
                std::span<double> grad) {
  std::visit([&](const auto& s) { s.accumulate_gradient(x, dscores, grad); }, scorer);
}

double dev_score(const Scorer& scorer, const Dataset& dev, PredictionRule rule,
                 double& threshold) {
  const std::vector<Scores> scores = forward_all(scorer, dev);
  std::vector<LabelVector> gold;
  gold.reserve(dev.size());
  for (const Instance& inst : dev.instances) gold.push_back(inst.labels);
  if (rule == PredictionRule::global_sweep) {
    const SweepResult r = sweep_global_threshold(scores, gold, ThresholdGrid::coarse());
    threshold = r.threshold;
    return r.micro_f1;
  }
  std::vector<PredictionSet> pred;
  pred.reserve(scores.size());
  for (const Scores& f : scores) pred.push_back(predict_adaptive(f));
  threshold = std::numeric_limits<double>::quiet_NaN();
  return micro_macro_f1(confusion(pred, gold)).micro_f1;
}

}  // namespace

// ---- LinearScorer ---------------------------------------------------------

LinearScorer::LinearScorer(std::size_t num_classes, std::size_t input_dim)
    : k_(num_classes), d_(input_dim), params_((num_classes + 1) * (input_dim + 1), 0.0) {
  if (num_classes == 0 || input_dim == 0) {
    throw std::invalid_argument("linear scorer needs K >= 1 and d >= 1");
  }
}

LinearScorer LinearScorer::random(std::size_t num_classes, std::size_t input_dim, Rng& rng) {
  LinearScorer s(num_classes, input_dim);
  fill_normal(s.parameters().first((num_classes + 1) * input_dim),
              1.0 / std::sqrt(static_cast<double>(input_dim)), rng);
  return s;
}

Scores LinearScorer::forward(std::span<const double> x) const {
  check_input(x, d_);
  Scores f(k_ + 1);
  for (std::size_t r = 0; r <= k_; ++r) {
    const double* w = &params_[r * d_];
    double s = bias(r);
    for (std::size_t c = 0; c < d_; ++c) s += w[c] * x[c];
    f[r] = s;
  }
  return f;
}

void LinearScorer::accumulate_gradient(std::span<const double> x,
                                       std::span<const double> dscores,
                                       std::span<double> grad) const {
  check_input(x, d_);
  check_grad(dscores, grad, k_ + 1, params_.size());
  const std::size_t bias_offset = (k_ + 1) * d_;
  for (std::size_t r = 0; r <= k_; ++r) {
    const double g = dscores[r];
    if (g == 0.0) continue;
    double* row = &grad[r * d_];
    for (std::size_t c = 0; c < d_; ++c) row[c] += g * x[c];
    grad[bias_offset + r] += g;
  }
}

// ---- MlpScorer ------------------------------------------------------------

MlpScorer::MlpScorer(std::size_t num_classes, std::size_t input_dim, std::size_t hidden)
    : k_(num_classes),
      d_(input_dim),
      h_(hidden),
      params_(hidden * input_dim + hidden + (num_classes + 1) * hidden + num_classes + 1, 0.0) {
  if (num_classes == 0 || input_dim == 0 || hidden == 0) {
    throw std::invalid_argument("MLP scorer needs K >= 1, d >= 1 and H >= 1");
  }
}

MlpScorer MlpScorer::random(std::size_t num_classes, std::size_t input_dim, std::size_t hidden,
                            Rng& rng) {
  MlpScorer s(num_classes, input_dim, hidden);
  auto p = s.parameters();
  fill_normal(p.subspan(0, hidden * input_dim),
              1.0 / std::sqrt(static_cast<double>(input_dim)), rng);
  fill_normal(p.subspan(s.output_weight_offset(), (num_classes + 1) * hidden),
              1.0 / std::sqrt(static_cast<double>(hidden)), rng);
  return s;
}

std::vector<double> MlpScorer::hidden_activations(std::span<const double> x) const {
  std::vector<double> a(h_);
  const double* b1 = &params_[hidden_bias_offset()];
  for (std::size_t j = 0; j < h_; ++j) {
    const double* w = &params_[j * d_];
    double s = b1[j];
    for (std::size_t c = 0; c < d_; ++c) s += w[c] * x[c];
    a[j] = std::max(s, 0.0);
  }
  return a;
}

Scores MlpScorer::forward(std::span<const double> x) const {
  check_input(x, d_);
  const std::vector<double> a = hidden_activations(x);
  const double* w2 = &params_[output_weight_offset()];
  const double* b2 = &params_[output_bias_offset()];
  Scores f(k_ + 1);
  for (std::size_t r = 0; r <= k_; ++r) {
    double s = b2[r];
    for (std::size_t j = 0; j < h_; ++j) s += w2[r * h_ + j] * a[j];
    f[r] = s;
  }
  return f;
}

void MlpScorer::accumulate_gradient(std::span<const double> x, std::span<const double> dscores,
                                    std::span<double> grad) const {
  check_input(x, d_);
  check_grad(dscores, grad, k_ + 1, params_.size());
  const std::vector<double> a = hidden_activations(x);
  const double* w2 = &params_[output_weight_offset()];
  double* gw2 = &grad[output_weight_offset()];
  double* gb2 = &grad[output_bias_offset()];
  std::vector<double> da(h_, 0.0);
  for (std::size_t r = 0; r <= k_; ++r) {
    const double g = dscores[r];
    if (g == 0.0) continue;
    gb2[r] += g;
    for (std::size_t j = 0; j < h_; ++j) {
      gw2[r * h_ + j] += g * a[j];
      da[j] += g * w2[r * h_ + j];
    }
  }
  double* gb1 = &grad[hidden_bias_offset()];
  for (std::size_t j = 0; j < h_; ++j) {
    if (a[j] <= 0.0 || da[j] == 0.0) continue;
    gb1[j] += da[j];
    double* row = &grad[j * d_];
    for (std::size_t c = 0; c < d_; ++c) row[c] += da[j] * x[c];
  }
}

// ---- Scorer helpers -------------------------------------------------------

Scores forward(const Scorer& scorer, std::span<const double> features) {
  return std::visit([&](const auto& s) { return s.forward(features); }, scorer);
}

std::vector<Scores> forward_all(const Scorer& scorer, const Dataset& data) {
  std::vector<Scores> out;
  out.reserve(data.size());
  for (const Instance& inst : data.instances) out.push_back(forward(scorer, inst.features));
  return out;
}

std::size_t input_dim(const Scorer& scorer) {
  return std::visit([](const auto& s) { return s.input_dim(); }, scorer);
}

std::size_t num_classes(const Scorer& scorer) {
  return std::visit([](const auto& s) { return s.num_classes(); }, scorer);
}

std::span<const double> parameters(const Scorer& scorer) {
  return std::visit([](const auto& s) { return s.parameters(); }, scorer);
}

// ---- Optimizer and schedule -----------------------------------------------

Adam::Adam(std::size_t num_params, double beta1, double beta2, double epsilon)
    : beta1_(beta1), beta2_(beta2), epsilon_(epsilon), m_(num_params, 0.0), v_(num_params, 0.0) {}

void Adam::step(std::span<double> params, std::span<const double> grad, double learning_rate) {
  if (params.size() != m_.size() || grad.size() != m_.size()) {
    throw std::invalid_argument("Adam: parameter count mismatch");
  }
  ++t_;
  const double c1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
  for (std::size_t i = 0; i < params.size(); ++i) {
    m_[i] = beta1_ * m_[i] + (1.0 - beta1_) * grad[i];
    v_[i] = beta2_ * v_[i] + (1.0 - beta2_) * grad[i] * grad[i];
    params[i] -= learning_rate * (m_[i] / c1) / (std::sqrt(v_[i] / c2) + epsilon_);
  }
}

double warmup_linear_decay(std::size_t step, std::size_t total_steps, double warmup_fraction,
                           double peak) {
  if (total_steps == 0 || step >= total_steps) return 0.0;
  const auto warmup =
      static_cast<std::size_t>(std::floor(warmup_fraction * static_cast<double>(total_steps)));
  if (step < warmup) {
    return peak * static_cast<double>(step + 1) / static_cast<double>(warmup);
  }
  return peak * static_cast<double>(total_steps - step) /
         static_cast<double>(total_steps - warmup);
}

PredictionRule native_rule(LossKind kind) {
  switch (kind) {
    case LossKind::bce:
    case LossKind::bce_shifted:
    case LossKind::pairwise:
      return PredictionRule::global_sweep;
    default:
      return PredictionRule::adaptive;
  }
}

// ---- Training -------------------------------------------------------------

void TrainConfig::validate() const {
  if (epochs == 0) throw std::invalid_argument("epochs must be at least 1");
  if (batch_size == 0) throw std::invalid_argument("batch_size must be at least 1");
  if (!(learning_rate > 0.0)) throw std::invalid_argument("learning_rate must be positive");
  if (!(warmup_fraction >= 0.0 && warmup_fraction < 1.0)) {
    throw std::invalid_argument("warmup_fraction must lie in [0, 1)");
  }
  if (architecture == Architecture::mlp && hidden == 0) {
    throw std::invalid_argument("hidden width must be at least 1");
  }
}

Scorer init_scorer(std::size_t num_classes, std::size_t input_dim, const TrainConfig& config) {
  Rng rng = make_rng(config.seed, stream::kInit);
  if (config.architecture == Architecture::mlp) {
    return MlpScorer::random(num_classes, input_dim, config.hidden, rng);
  }
  return LinearScorer::random(num_classes, input_dim, rng);
}

TrainResult train(const Dataset& data, const Dataset& dev, const TrainConfig& config) {
  config.validate();
  data.validate();
  dev.validate();
  if (dev.feature_dim() != data.feature_dim() || dev.num_classes() != data.num_classes()) {
    throw std::invalid_argument("train and dev datasets disagree on dimensions");
  }

  Scorer scorer = init_scorer(data.num_classes(), data.feature_dim(), config);
  const std::size_t num_params = parameters(scorer).size();
  Adam optimizer(num_params);
  std::vector<double> grad(num_params);

  const std::size_t n = data.size();
  const std::size_t batches = (n + config.batch_size - 1) / config.batch_size;
  const std::size_t total_steps = batches * config.epochs;
  const PredictionRule rule = native_rule(config.loss_kind);

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng shuffle_rng = make_rng(config.seed, stream::kShuffle);

  TrainResult result{scorer, {}};
  double best_f1 = -1.0;
  std::size_t step = 0;
  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), shuffle_rng);
    double epoch_loss = 0.0;
    for (std::size_t b = 0; b < batches; ++b, ++step) {
      const std::size_t begin = b * config.batch_size;
      const std::size_t end = std::min(n, begin + config.batch_size);
      const double scale = 1.0 / static_cast<double>(end - begin);
      std::fill(grad.begin(), grad.end(), 0.0);
      for (std::size_t p = begin; p < end; ++p) {
        const Instance& inst = data.instances[order[p]];
        const Scores f = forward(scorer, inst.features);
        if (!std::all_of(f.begin(), f.end(), [](double v) { return std::isfinite(v); })) {
          throw DivergenceError("scores became non-finite at step " + std::to_string(step),
                                step);
        }
        LossResult loss = evaluate_loss(config.loss_kind, inst.labels, f, config.gamma);
        if (!std::isfinite(loss.value)) {
          throw DivergenceError("training loss became non-finite at step " +
                                    std::to_string(step),
                                step);
        }
        epoch_loss += loss.value;
        for (double& g : loss.grad) g *= scale;
        accumulate(scorer, inst.features, loss.grad, grad);
      }
      const double lr =
          warmup_linear_decay(step, total_steps, config.warmup_fraction, config.learning_rate);
      auto params = mutable_parameters(scorer);
      optimizer.step(params, grad, lr);
      if (!std::all_of(params.begin(), params.end(), [](double v) { return std::isfinite(v); })) {
        throw DivergenceError("parameters became non-finite at step " + std::to_string(step),
                              step);
      }
    }
    result.history.train_loss.push_back(epoch_loss / static_cast<double>(n));

    double threshold = 0.0;
    const double f1 = dev_score(scorer, dev, rule, threshold);
    result.history.dev_micro_f1.push_back(f1);
    if (f1 > best_f1) {
      best_f1 = f1;
      result.scorer = scorer;
      result.history.best_epoch = epoch;
      result.history.best_threshold = threshold;
    }
  }
  return result;
}

// ---- Gradient checking ----------------------------------------------------

std::vector<double> finite_difference_gradient(LossKind kind, const LabelVector& y,
                                               std::span<const double> f, ShiftParam gamma,
                                               double step) {
  Scores probe(f.begin(), f.end());
  std::vector<double> out(f.size());
  for (std::size_t i = 0; i < f.size(); ++i) {
    probe[i] = f[i] + step;
    const double up = evaluate_loss(kind, y, probe, gamma).value;
    probe[i] = f[i] - step;
    const double down = evaluate_loss(kind, y, probe, gamma).value;
    probe[i] = f[i];
    out[i] = (up - down) / (2.0 * step);
  }
  return out;
}

double gradient_relative_error(double analytic, double numeric) {
  const double diff = std::abs(analytic - numeric);
  const double scale = std::max(std::abs(analytic), std::abs(numeric));
  return scale < 1e-8 ? diff : diff / scale;
}

double grad_check(LossKind kind, ShiftParam gamma, std::size_t num_classes, std::size_t trials,
                  std::uint64_t seed) {
  if (trials == 0) throw std::invalid_argument("grad_check needs at least one trial");
  if (num_classes == 0) throw std::invalid_argument("grad_check needs K >= 1");
  Rng rng = make_rng(seed, stream::kGradCheck);
  std::uniform_real_distribution<double> score(-3.0, 3.0);
  std::bernoulli_distribution positive(0.3);

  double worst = 0.0;
  for (std::size_t t = 0; t < trials; ++t) {
    std::vector<int> flags(num_classes);
    for (int& v : flags) v = positive(rng) ? 1 : 0;
    const LabelVector y = LabelVector::from_flags(flags);
    Scores f(num_classes + 1);
    for (double& v : f) v = score(rng);

    const LossResult analytic = evaluate_loss(kind, y, f, gamma);
    const std::vector<double> numeric = finite_difference_gradient(kind, y, f, gamma);
    for (std::size_t i = 0; i < f.size(); ++i) {
      worst = std::max(worst, gradient_relative_error(analytic.grad[i], numeric[i]));
    }
  }
  return worst;
}

}  // namespace ncrl
