#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "ncrl/datagen.hpp"
#include "ncrl/experiments.hpp"
#include "ncrl/model.hpp"

using namespace ncrl;

namespace {

Dataset small_data(std::size_t n, std::uint64_t seed) {
  SyntheticConfig c;
  c.num_labels = 4;
  c.feature_dim = 6;
  c.num_instances = n;
  c.none_fraction_target = 0.4;
  c.seed = seed;
  return generate(c);
}

// d(sum_j dscores_j * f_j)/d params, by central differences on the flat parameters.
template <typename S>
std::vector<double> numeric_param_grad(S scorer, const std::vector<double>& x,
                                       const std::vector<double>& dscores) {
  auto objective = [&](const S& s) {
    const Scores f = s.forward(x);
    double v = 0.0;
    for (std::size_t j = 0; j < f.size(); ++j) v += dscores[j] * f[j];
    return v;
  };
  std::vector<double> out(scorer.parameters().size());
  const double h = 1e-6;
  for (std::size_t p = 0; p < out.size(); ++p) {
    const double keep = scorer.parameters()[p];
    scorer.parameters()[p] = keep + h;
    const double up = objective(scorer);
    scorer.parameters()[p] = keep - h;
    const double dn = objective(scorer);
    scorer.parameters()[p] = keep;
    out[p] = (up - dn) / (2 * h);
  }
  return out;
}

}  // namespace

TEST(LinearScorer, ZeroParametersGiveZeroScores) {
  const LinearScorer s(3, 4);
  for (double v : s.forward(std::vector<double>{1, 2, 3, 4})) EXPECT_EQ(v, 0.0);
}

TEST(LinearScorer, HandSetParameters) {
  LinearScorer s(1, 1);
  s.weight(0, 0) = 0.5;
  s.weight(1, 0) = -1.5;
  s.bias(0) = 0.25;
  s.bias(1) = 2.0;
  const Scores f = s.forward(std::vector<double>{2.0});
  EXPECT_EQ(f, (Scores{1.25, -1.0}));
  EXPECT_THROW(s.forward(std::vector<double>{1.0, 2.0}), std::invalid_argument);
}

TEST(LinearScorer, RandomIsPure) {
  Rng rng(5);
  const LinearScorer s = LinearScorer::random(4, 6, rng);
  const std::vector<double> x{0.1, -0.2, 0.3, 0.5, -1.0, 2.0};
  EXPECT_EQ(s.forward(x), s.forward(x));
  for (std::size_t r = 0; r <= 4; ++r) EXPECT_EQ(s.bias(r), 0.0);
}

TEST(Scorers, BackpropMatchesFiniteDifferences) {
  Rng rng(9);
  std::normal_distribution<double> normal;
  std::vector<double> x(6), dscores(5);
  for (double& v : x) v = normal(rng);
  for (double& v : dscores) v = normal(rng);

  const LinearScorer lin = LinearScorer::random(4, 6, rng);
  std::vector<double> g(lin.parameters().size(), 0.0);
  lin.accumulate_gradient(x, dscores, g);
  const auto ng = numeric_param_grad(lin, x, dscores);
  for (std::size_t p = 0; p < g.size(); ++p) EXPECT_NEAR(g[p], ng[p], 1e-7);

  MlpScorer mlp = MlpScorer::random(4, 6, 8, rng);
  // Nonzero hidden biases so some units are active and some are not.
  for (std::size_t h = 0; h < 8; ++h) {
    mlp.parameters()[mlp.hidden_bias_offset() + h] = h % 2 ? 0.3 : -0.3;
  }
  std::vector<double> gm(mlp.parameters().size(), 0.0);
  mlp.accumulate_gradient(x, dscores, gm);
  const auto ngm = numeric_param_grad(mlp, x, dscores);
  for (std::size_t p = 0; p < gm.size(); ++p) EXPECT_NEAR(gm[p], ngm[p], 1e-6);
}

TEST(Schedule, WarmupThenLinearDecay) {
  EXPECT_DOUBLE_EQ(warmup_linear_decay(0, 10, 0.2, 1.0), 0.5);
  EXPECT_DOUBLE_EQ(warmup_linear_decay(1, 10, 0.2, 1.0), 1.0);
  EXPECT_DOUBLE_EQ(warmup_linear_decay(2, 10, 0.2, 1.0), 1.0);
  EXPECT_DOUBLE_EQ(warmup_linear_decay(9, 10, 0.2, 1.0), 0.125);
  EXPECT_DOUBLE_EQ(warmup_linear_decay(10, 10, 0.2, 1.0), 0.0);
  EXPECT_DOUBLE_EQ(warmup_linear_decay(0, 4, 0.0, 2.0), 2.0);
}

TEST(Adam, FirstStepMovesByLearningRate) {
  Adam opt(2);
  std::vector<double> p{1.0, -1.0};
  const std::vector<double> g{0.5, -2.0};
  opt.step(p, g, 0.1);
  EXPECT_NEAR(p[0], 0.9, 1e-6);
  EXPECT_NEAR(p[1], -0.9, 1e-6);
}

TEST(TrainConfig, Validation) {
  TrainConfig c;
  c.epochs = 0;
  EXPECT_THROW(c.validate(), std::invalid_argument);
  c.epochs = 1;
  c.batch_size = 0;
  EXPECT_THROW(c.validate(), std::invalid_argument);
  c.batch_size = 4;
  c.learning_rate = 0.0;
  EXPECT_THROW(c.validate(), std::invalid_argument);
}

TEST(Train, OneEpochHistory) {
  const Dataset d = small_data(120, 1);
  TrainConfig c;
  c.epochs = 1;
  const TrainResult r = train(d.slice(0, 100), d.slice(100, 120), c);
  EXPECT_EQ(r.history.train_loss.size(), 1u);
  EXPECT_EQ(r.history.dev_micro_f1.size(), 1u);
  EXPECT_EQ(r.history.best_epoch, 0u);
  EXPECT_TRUE(std::isnan(r.history.best_threshold));
}

TEST(Train, DeterministicBitForBit) {
  const Dataset d = small_data(300, 2);
  for (Architecture arch : {Architecture::linear, Architecture::mlp}) {
    TrainConfig c;
    c.loss_kind = LossKind::ncrl_final;
    c.gamma = ShiftParam(0.05);
    c.epochs = 3;
    c.seed = 7;
    c.architecture = arch;
    c.hidden = 8;
    const TrainResult a = train(d.slice(0, 250), d.slice(250, 300), c);
    const TrainResult b = train(d.slice(0, 250), d.slice(250, 300), c);
    EXPECT_EQ(a.scorer, b.scorer);
    EXPECT_EQ(a.history.train_loss, b.history.train_loss);
  }
}

TEST(Train, LossDecreasesAndGlobalRuleRecordsThreshold) {
  const Dataset d = small_data(600, 3);
  TrainConfig c;
  c.loss_kind = LossKind::bce;
  c.epochs = 8;
  const TrainResult r = train(d.slice(0, 500), d.slice(500, 600), c);
  EXPECT_LT(r.history.train_loss.back(), r.history.train_loss.front());
  EXPECT_FALSE(std::isnan(r.history.best_threshold));
  EXPECT_GT(r.history.best_threshold, 0.0);
  EXPECT_LT(r.history.best_threshold, 1.0);
}

TEST(Train, BestCheckpointIsEarliestMaximum) {
  const Dataset d = small_data(400, 4);
  TrainConfig c;
  c.epochs = 6;
  const TrainResult r = train(d.slice(0, 300), d.slice(300, 400), c);
  const auto& h = r.history.dev_micro_f1;
  for (std::size_t e = 0; e < h.size(); ++e) {
    if (e < r.history.best_epoch) EXPECT_LT(h[e], h[r.history.best_epoch]);
    if (e > r.history.best_epoch) EXPECT_LE(h[e], h[r.history.best_epoch]);
  }
}

TEST(Train, SeparableDataIsLearned) {
  const ExperimentConfig preset = separable_preset();
  const Splits s = make_splits(preset, 1);
  const TrainConfig& c = preset.variants.front().train;
  const TrainResult r = train(s.train, s.dev, c);
  const auto& loss = r.history.train_loss;
  ASSERT_EQ(loss.size(), c.epochs);
  EXPECT_LT(loss.back(), 0.05);
  EXPECT_GE(r.history.dev_micro_f1[r.history.best_epoch], 0.95);
  // Past warmup the epoch loss only creeps up by noise.
  const auto warm = static_cast<std::size_t>(std::ceil(c.warmup_fraction * c.epochs)) + 1;
  for (std::size_t e = warm; e < loss.size(); ++e) EXPECT_LE(loss[e], loss[e - 1] + 1e-3) << e;
}

TEST(Train, DivergenceReportsStep) {
  const Dataset d = small_data(100, 5);
  TrainConfig c;
  c.epochs = 3;
  c.warmup_fraction = 0.0;
  c.learning_rate = 1e308;
  try {
    train(d.slice(0, 80), d.slice(80, 100), c);
    FAIL() << "expected divergence";
  } catch (const DivergenceError& e) {
    EXPECT_LT(e.step(), 30u);
    EXPECT_NE(std::string(e.what()).find("step"), std::string::npos);
  }
}

TEST(Train, RejectsMismatchedDev) {
  const Dataset a = small_data(50, 1);
  SyntheticConfig c;
  c.num_labels = 4;
  c.feature_dim = 7;
  c.num_instances = 20;
  c.none_fraction_target = 0.4;
  EXPECT_THROW(train(a, generate(c), TrainConfig{}), std::invalid_argument);
}

TEST(GradCheck, EveryLossKind) {
  for (LossKind kind : {LossKind::ncrl_plain, LossKind::ncrl_shifted, LossKind::ncrl_final,
                        LossKind::margin_reg, LossKind::bce, LossKind::bce_shifted,
                        LossKind::atl, LossKind::pairwise}) {
    for (double g : {0.0, 0.05}) {
      EXPECT_LT(grad_check(kind, ShiftParam(g), 10, 100, 1), 1e-4) << to_string(kind) << g;
    }
  }
  EXPECT_LT(grad_check(LossKind::atl, ShiftParam(0.0), 30, 100, 2), 1e-4);
}

TEST(GradCheck, ClampedCoordinateIsZero) {
  const LabelVector y = LabelVector::from_flags({1, 0, 0});
  // Label 2 and the average-margin term are both past the clamp.
  const Scores f{0.0, 20.0, -5.0, 0.0};
  const ShiftParam g(0.05);
  const LossResult r = evaluate_loss(LossKind::ncrl_final, y, f, g);
  const auto fd = finite_difference_gradient(LossKind::ncrl_final, y, f, g);
  EXPECT_EQ(r.grad[2], 0.0);
  EXPECT_EQ(fd[2], 0.0);
}

TEST(GradCheck, RelativeErrorConvention) {
  EXPECT_EQ(gradient_relative_error(0.0, 0.0), 0.0);
  EXPECT_DOUBLE_EQ(gradient_relative_error(1e-10, 2e-10), 1e-10);
  EXPECT_DOUBLE_EQ(gradient_relative_error(1.0, 0.5), 0.5);
}
