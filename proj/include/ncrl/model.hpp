#pragma once

#include <cstdint>
#include <limits>
#include <span>
#include <stdexcept>
#include <variant>
#include <vector>

#include "ncrl/dataset.hpp"
#include "ncrl/losses.hpp"
#include "ncrl/rng.hpp"

namespace ncrl {

/// f(x) = W x + b with K+1 outputs. Parameters are stored flat: the
/// (K+1) x d weight matrix row-major, then the K+1 biases.
class LinearScorer {
 public:
  LinearScorer(std::size_t num_classes, std::size_t input_dim);

  /// Weights drawn from N(0, 1/d), zero bias.
  static LinearScorer random(std::size_t num_classes, std::size_t input_dim, Rng& rng);

  std::size_t num_classes() const { return k_; }
  std::size_t input_dim() const { return d_; }

  double& weight(std::size_t row, std::size_t col) { return params_[row * d_ + col]; }
  double weight(std::size_t row, std::size_t col) const { return params_[row * d_ + col]; }
  double& bias(std::size_t row) { return params_[(k_ + 1) * d_ + row]; }
  double bias(std::size_t row) const { return params_[(k_ + 1) * d_ + row]; }

  Scores forward(std::span<const double> x) const;
  /// grad += d(score . dscores)/d params
  void accumulate_gradient(std::span<const double> x, std::span<const double> dscores,
                           std::span<double> grad) const;

  std::span<double> parameters() { return params_; }
  std::span<const double> parameters() const { return params_; }

  friend bool operator==(const LinearScorer&, const LinearScorer&) = default;

 private:
  std::size_t k_;
  std::size_t d_;
  std::vector<double> params_;
};

/// One rectified hidden layer of width H. Flat layout: input->hidden weights
/// (H x d), hidden bias (H), hidden->output weights ((K+1) x H), output bias.
class MlpScorer {
 public:
  MlpScorer(std::size_t num_classes, std::size_t input_dim, std::size_t hidden);

  static MlpScorer random(std::size_t num_classes, std::size_t input_dim, std::size_t hidden,
                          Rng& rng);

  std::size_t num_classes() const { return k_; }
  std::size_t input_dim() const { return d_; }
  std::size_t hidden() const { return h_; }

  Scores forward(std::span<const double> x) const;
  void accumulate_gradient(std::span<const double> x, std::span<const double> dscores,
                           std::span<double> grad) const;

  std::span<double> parameters() { return params_; }
  std::span<const double> parameters() const { return params_; }

  /// Offsets of the four parameter blocks inside parameters().
  std::size_t hidden_bias_offset() const { return h_ * d_; }
  std::size_t output_weight_offset() const { return h_ * d_ + h_; }
  std::size_t output_bias_offset() const { return h_ * d_ + h_ + (k_ + 1) * h_; }

  friend bool operator==(const MlpScorer&, const MlpScorer&) = default;

 private:
  std::vector<double> hidden_activations(std::span<const double> x) const;

  std::size_t k_;
  std::size_t d_;
  std::size_t h_;
  std::vector<double> params_;
};

using Scorer = std::variant<LinearScorer, MlpScorer>;

/// K+1 scores. Throws on feature-dimension mismatch.
Scores forward(const Scorer& scorer, std::span<const double> features);
std::vector<Scores> forward_all(const Scorer& scorer, const Dataset& data);
std::size_t input_dim(const Scorer& scorer);
std::size_t num_classes(const Scorer& scorer);
std::span<const double> parameters(const Scorer& scorer);

/// Adaptive-moment optimizer without weight decay.
class Adam {
 public:
  explicit Adam(std::size_t num_params, double beta1 = 0.9, double beta2 = 0.999,
                double epsilon = 1e-8);
  void step(std::span<double> params, std::span<const double> grad, double learning_rate);

 private:
  double beta1_;
  double beta2_;
  double epsilon_;
  std::size_t t_ = 0;
  std::vector<double> m_;
  std::vector<double> v_;
};

/// Linear warmup to `peak` over the first warmup_fraction of steps, then
/// linear decay to zero. `step` is zero-based.
double warmup_linear_decay(std::size_t step, std::size_t total_steps, double warmup_fraction,
                           double peak);

enum class Architecture { linear, mlp };

/// How a trained scorer turns scores into label sets.
enum class PredictionRule {
  adaptive,     // labels above f_0
  global_sweep  // sigmoid(f_i) against a global threshold tuned on dev
};

PredictionRule native_rule(LossKind kind);

struct TrainConfig {
  LossKind loss_kind = LossKind::ncrl_plain;
  ShiftParam gamma{};
  std::size_t epochs = 10;
  std::size_t batch_size = 32;
  double learning_rate = 1e-2;
  double warmup_fraction = 0.1;
  std::uint64_t seed = 0;
  Architecture architecture = Architecture::linear;
  std::size_t hidden = 32;

  void validate() const;
};

struct TrainHistory {
  std::vector<double> train_loss;   // mean per-instance loss per epoch
  std::vector<double> dev_micro_f1; // under the native prediction rule
  std::size_t best_epoch = 0;
  /// Dev-tuned global threshold at the best epoch; NaN for adaptive rules.
  double best_threshold = std::numeric_limits<double>::quiet_NaN();
};

struct TrainResult {
  Scorer scorer;
  TrainHistory history;
};

/// Raised when a training loss or parameter turns non-finite.
class DivergenceError : public std::runtime_error {
 public:
  DivergenceError(const std::string& what, std::size_t step)
      : std::runtime_error(what), step_(step) {}
  std::size_t step() const { return step_; }

 private:
  std::size_t step_;
};

Scorer init_scorer(std::size_t num_classes, std::size_t input_dim, const TrainConfig& config);

/// Mini-batch training with mean batch reduction. Returns the checkpoint
/// with the best dev micro-F1 (earliest on ties).
TrainResult train(const Dataset& data, const Dataset& dev, const TrainConfig& config);

/// Central differences of a loss with respect to the scores.
std::vector<double> finite_difference_gradient(LossKind kind, const LabelVector& y,
                                               std::span<const double> f, ShiftParam gamma,
                                               double step = 1e-5);

/// |a - n| / max(|a|, |n|), or |a - n| when both magnitudes are below 1e-8.
double gradient_relative_error(double analytic, double numeric);

/// Worst relative error between analytic and central-difference gradients
/// over random (y, f) draws.
double grad_check(LossKind kind, ShiftParam gamma, std::size_t num_classes, std::size_t trials,
                  std::uint64_t seed);

}  // namespace ncrl
