#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "ncrl/losses.hpp"
#include "ncrl/model.hpp"
#include "ncrl/numeric.hpp"

using namespace ncrl;

namespace {

const double kLn2 = std::log(2.0);

LabelVector flags(std::initializer_list<int> f) { return LabelVector::from_flags(f); }

struct RandomCase {
  LabelVector y;
  Scores f;
};

RandomCase random_case(std::mt19937_64& rng, std::size_t k) {
  std::uniform_real_distribution<double> score(-4.0, 4.0);
  std::bernoulli_distribution pos(0.3);
  std::vector<int> fl(k);
  for (auto& v : fl) v = pos(rng) ? 1 : 0;
  Scores f(k + 1);
  for (auto& v : f) v = score(rng);
  return {LabelVector::from_flags(fl), f};
}

const LossKind kAllKinds[] = {LossKind::ncrl_plain, LossKind::ncrl_shifted,
                              LossKind::ncrl_final, LossKind::margin_reg,
                              LossKind::bce,        LossKind::bce_shifted,
                              LossKind::atl,        LossKind::pairwise};

}  // namespace

TEST(Ncre, HandCases) {
  EXPECT_DOUBLE_EQ(ncre_error(flags({1, 0}), Scores{0, 1, -1}), 0.0);
  EXPECT_DOUBLE_EQ(ncre_error(flags({1, 0}), Scores{0, -1, 1}), 2.0);
  EXPECT_DOUBLE_EQ(ncre_error(flags({1, 1}), Scores{0, 0, 1}), 0.5);
  EXPECT_THROW(ncre_error(flags({1, 0}), Scores{0, 1}), std::invalid_argument);
}

TEST(NcrlPlain, ZeroScores) {
  const LossResult r = ncrl_plain(flags({1, 0}), Scores{0, 0, 0});
  EXPECT_NEAR(r.value, 2 * kLn2, 1e-12);
  EXPECT_NEAR(r.grad[0], 0.0, 1e-15);
  EXPECT_NEAR(r.grad[1], -0.5, 1e-15);
  EXPECT_NEAR(r.grad[2], 0.5, 1e-15);
}

TEST(NcrlPlain, ReferenceValueAndShift) {
  const double ref = 0.440189698561195330;
  EXPECT_NEAR(ncrl_plain(flags({1, 0}), Scores{0, 2, -1}).value, ref, 1e-12);
  for (double c : {-7.5, 0.25, 3.0, 1e3}) {
    EXPECT_NEAR(ncrl_plain(flags({1, 0}), Scores{c, 2 + c, -1 + c}).value, ref, 1e-9);
  }
}

TEST(NcrlPlain, RejectsNonFinite) {
  EXPECT_THROW(ncrl_plain(flags({1, 0}), Scores{0, NAN, 0}), std::invalid_argument);
  EXPECT_THROW(ncrl_plain(flags({1, 0}), Scores{INFINITY, 0, 0}), std::invalid_argument);
}

TEST(MarginRegularization, HandCases) {
  EXPECT_NEAR(margin_regularization(flags({0, 0}), Scores{0, 0, 0}).value, kLn2, 1e-12);
  EXPECT_NEAR(margin_regularization(flags({0, 0}), Scores{1, 0, 0}).value,
              0.313261687518222834, 1e-12);
  EXPECT_NEAR(margin_regularization(flags({1, 0}), Scores{0, 1, 1}).value,
              0.313261687518222834, 1e-12);
}

TEST(ShiftedNegativeProb, Values) {
  EXPECT_NEAR(shifted_negative_prob(0.0, ShiftParam(0.05)), 0.55, 1e-12);
  EXPECT_EQ(shifted_negative_prob(10.0, ShiftParam(0.05)), 1.0);
  EXPECT_NEAR(shifted_negative_prob(1.0, ShiftParam(0.0)), 0.731058578630004879, 1e-12);
}

TEST(ShiftParam, Range) {
  EXPECT_NO_THROW(ShiftParam(0.0));
  EXPECT_NO_THROW(ShiftParam(0.99));
  EXPECT_THROW(ShiftParam(1.0), std::invalid_argument);
  EXPECT_THROW(ShiftParam(-0.01), std::invalid_argument);
  EXPECT_THROW(ShiftParam(NAN), std::invalid_argument);
}

TEST(NcrlFinal, SingleLabelReference) {
  const LossResult r = ncrl_final(flags({0}), Scores{1, 0}, ShiftParam(0.05));
  EXPECT_NEAR(r.value, 0.560366814825488309, 1e-12);
}

TEST(NcrlFinal, AllZeroMargins) {
  EXPECT_NEAR(ncrl_final(flags({1, 1}), Scores{0, 0, 0}, ShiftParam(0.0)).value, 3 * kLn2,
              1e-12);
}

TEST(NcrlFinal, MixedReference) {
  // Two positives, one negative, the average term on the negative side.
  const LossResult r = ncrl_final(flags({1, 0, 1}), Scores{0.2, 1.5, -0.3, 0.1}, ShiftParam(0.05));
  EXPECT_NEAR(r.value, 1.879683855240045830, 1e-12);
}

TEST(NcrlFinal, DecomposesWithoutShift) {
  std::mt19937_64 rng(11);
  for (int t = 0; t < 500; ++t) {
    const auto c = random_case(rng, 1 + t % 12);
    const LossResult fin = ncrl_final(c.y, c.f, ShiftParam(0.0));
    const LossResult plain = ncrl_plain(c.y, c.f);
    const LossResult reg = margin_regularization(c.y, c.f);
    EXPECT_NEAR(fin.value, plain.value + reg.value, 1e-12);
    for (std::size_t i = 0; i < c.f.size(); ++i) {
      EXPECT_NEAR(fin.grad[i], plain.grad[i] + reg.grad[i], 1e-12);
    }
  }
}

TEST(NcrlFinal, ClampedNegativesHaveZeroLossAndGradient) {
  // Label 2 is an easy negative: sigma(f0 - f2) = sigma(10) > 1 - gamma.
  const LabelVector y = flags({1, 0});
  const Scores f{0.0, 1.0, -10.0};
  const ShiftParam g(0.05);
  const LossResult shifted = ncrl_shifted(y, f, g);
  EXPECT_EQ(shifted.grad[2], 0.0);
  EXPECT_NEAR(shifted.value, softplus(-1.0), 1e-15);
  const auto fd = finite_difference_gradient(LossKind::ncrl_shifted, y, f, g);
  EXPECT_EQ(fd[2], 0.0);
}

TEST(Bce, Values) {
  EXPECT_NEAR(bce(flags({1, 0}), Scores{5, 0, 0}).value, 2 * kLn2, 1e-12);
  EXPECT_NEAR(bce(flags({1, 0}), Scores{-3, 2, -2}).value, 0.253856022085944993, 1e-12);
  const LossResult sat = bce(flags({0, 0}), Scores{0, -30, -30});
  EXPECT_TRUE(std::isfinite(sat.value));
  EXPECT_NEAR(sat.value, 0.0, 1e-12);
}

TEST(Bce, IgnoresNoneScore) {
  const LossResult a = bce(flags({1, 0, 1}), Scores{-2, 0.3, 1, -1});
  const LossResult b = bce(flags({1, 0, 1}), Scores{9, 0.3, 1, -1});
  EXPECT_EQ(a.value, b.value);
  EXPECT_EQ(a.grad[0], 0.0);
}

TEST(BceShifted, Values) {
  std::mt19937_64 rng(3);
  for (int t = 0; t < 200; ++t) {
    const auto c = random_case(rng, 1 + t % 6);
    const LossResult a = bce(c.y, c.f);
    const LossResult b = bce_shifted(c.y, c.f, ShiftParam(0.0));
    EXPECT_EQ(a.value, b.value);
    EXPECT_EQ(a.grad, b.grad);
  }
  EXPECT_NEAR(bce_shifted(flags({0}), Scores{0, 0}, ShiftParam(0.05)).value,
              0.597837000755620449, 1e-12);
  const LossResult clamped = bce_shifted(flags({0}), Scores{0, -10}, ShiftParam(0.05));
  EXPECT_EQ(clamped.value, 0.0);
  EXPECT_EQ(clamped.grad[1], 0.0);
}

TEST(Atl, Values) {
  EXPECT_NEAR(atl(flags({1, 0}), Scores{0, 0, 0}).value, 2 * kLn2, 1e-12);
  EXPECT_NEAR(atl(flags({0, 0}), Scores{0, 0, 0}).value, std::log(3.0), 1e-12);
  EXPECT_NEAR(atl(flags({1, 0}), Scores{0, 1, -1}).value, 0.626523375036445668, 1e-12);
  EXPECT_NEAR(atl(flags({0, 0}), Scores{0.5, 1, -1}).value, 1.054956919641990648, 1e-12);
  EXPECT_TRUE(std::isfinite(atl(flags({1, 0}), Scores{800, -800, 900}).value));
}

TEST(Pairwise, Values) {
  EXPECT_NEAR(pairwise_ranking(flags({1, 0}), Scores{0, 0, 0}).value, kLn2, 1e-12);
  EXPECT_NEAR(pairwise_ranking(flags({1, 0}), Scores{0, 3, 0}).value, 0.048587351573742059,
              1e-12);
  const LossResult none = pairwise_ranking(flags({0, 0, 0}), Scores{0, 5, -2, 1});
  EXPECT_EQ(none.value, 0.0);
  for (double g : none.grad) EXPECT_EQ(g, 0.0);
}

TEST(Pairwise, MarginIdentityIsExact) {
  // m_i^+ + m_j^- = (f_i - f_0) + (f_0 - f_j) = f_i - f_j
  std::mt19937_64 rng(5);
  std::uniform_int_distribution<int> pick(-1000, 1000);
  for (int t = 0; t < 1000; ++t) {
    // Scores on a dyadic grid keep every difference exactly representable.
    const Scores f{pick(rng) / 64.0, pick(rng) / 64.0, pick(rng) / 64.0};
    const Margins m = compute_margins(f);
    EXPECT_EQ(m.pos[0] + m.neg[1], f[1] - f[2]);
    EXPECT_EQ(m.pos[1] + m.neg[0], f[2] - f[1]);
  }
}

TEST(Margins, Definitions) {
  const Margins m = compute_margins(Scores{1, 3, -1, 4});
  EXPECT_EQ(m.pos, (std::vector<double>{2, -2, 3}));
  EXPECT_EQ(m.neg, (std::vector<double>{-2, 2, -3}));
  EXPECT_DOUBLE_EQ(m.avg_pos, 1 - 2.0);
  EXPECT_DOUBLE_EQ(m.avg_neg, 2.0 - 1);
}

TEST(Losses, MarginBasedAreShiftInvariantWithZeroSumGradient) {
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> shift(-50.0, 50.0);
  for (LossKind kind : kAllKinds) {
    if (!is_margin_based(kind)) continue;
    for (int t = 0; t < 200; ++t) {
      auto c = random_case(rng, 1 + t % 10);
      const ShiftParam g(t % 2 ? 0.05 : 0.0);
      const LossResult a = evaluate_loss(kind, c.y, c.f, g);
      const double s = shift(rng);
      Scores moved = c.f;
      for (double& v : moved) v += s;
      const LossResult b = evaluate_loss(kind, c.y, moved, g);
      EXPECT_NEAR(a.value, b.value, 1e-9) << to_string(kind);
      double sum = 0.0;
      for (double v : a.grad) sum += v;
      EXPECT_NEAR(sum, 0.0, 1e-9) << to_string(kind);
    }
  }
}

TEST(Losses, NamesRoundTrip) {
  for (LossKind kind : kAllKinds) EXPECT_EQ(parse_loss_kind(to_string(kind)), kind);
  EXPECT_THROW(parse_loss_kind("hinge"), std::invalid_argument);
}

TEST(HammingError, HandCases) {
  const std::vector<int> a{1, 0}, b{0, 1}, c{1, 0, 0};
  EXPECT_EQ(hamming_error(flags({1, 0}), a), 0u);
  EXPECT_EQ(hamming_error(flags({1, 0}), b), 2u);
  EXPECT_EQ(hamming_error(flags({1, 1, 0}), c), 1u);
  EXPECT_THROW(hamming_error(flags({1, 1, 0}), a), std::invalid_argument);
}

TEST(RankingError, HandCases) {
  EXPECT_DOUBLE_EQ(ranking_error(flags({1, 0}), Scores{0, 2, 1}), 0.0);
  EXPECT_DOUBLE_EQ(ranking_error(flags({1, 0}), Scores{0, 1, 2}), 1.0);
  EXPECT_DOUBLE_EQ(ranking_error(flags({1, 0}), Scores{0, 1, 1}), 0.5);
}

TEST(Numeric, StableHelpers) {
  EXPECT_NEAR(softplus(0.0), kLn2, 1e-15);
  EXPECT_EQ(softplus(-800.0), 0.0);
  EXPECT_EQ(softplus(800.0), 800.0);
  EXPECT_EQ(sigmoid(-800.0), 0.0);
  EXPECT_EQ(sigmoid(800.0), 1.0);
  EXPECT_NEAR(logit(0.8), std::log(4.0), 1e-15);
  EXPECT_THROW(logit(1.0), std::invalid_argument);
}
