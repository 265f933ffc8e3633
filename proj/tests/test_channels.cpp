#include <gtest/gtest.h>

#include <vector>

#include "mjls/channels.hpp"

using namespace mjls;

TEST(IndexSet, EmptyAndFull) {
  const auto none = index_set_and_mask(OutcomeIndex{0}, 2);
  EXPECT_TRUE(none.channels.empty());
  EXPECT_EQ(none.mask, Matrix::Zero(2, 2));
  const auto all = index_set_and_mask(OutcomeIndex{3}, 2);
  EXPECT_EQ(all.channels, (std::vector<int>{1, 2}));
  EXPECT_EQ(all.mask, Matrix::Identity(2, 2));
}

TEST(IndexSet, SecondChannelOnly) {
  const auto out = index_set_and_mask(OutcomeIndex{2}, 2);
  EXPECT_EQ(out.channels, (std::vector<int>{2}));
  Matrix expected = Matrix::Zero(2, 2);
  expected(1, 1) = 1.0;
  EXPECT_EQ(out.mask, expected);
  EXPECT_EQ(outcome_mask(OutcomeIndex{2}, 2), expected);
}

TEST(IndexSet, OutOfRange) {
  EXPECT_THROW(index_set_and_mask(OutcomeIndex{4}, 2), std::domain_error);
}

TEST(StationarySuccess, ClosedForm) {
  EXPECT_DOUBLE_EQ(stationary_success({1.0, 1.0}), 1.0);
  EXPECT_DOUBLE_EQ(stationary_success({0.88, 0.89}), 0.89 / 1.01);
  EXPECT_DOUBLE_EQ(stationary_success({0.37, 0.37}), 0.37);
}

TEST(OutcomeDistribution, PerfectChannelStationary) {
  const auto dist = outcome_distribution(ChannelBank{{{1.0, 1.0}}}, Prior{Stationary{}});
  ASSERT_EQ(dist.size(), 2u);
  EXPECT_EQ(dist[0], 0.0);
  EXPECT_EQ(dist[1], 1.0);
}

TEST(OutcomeDistribution, FairCoins) {
  const auto dist = outcome_distribution(ChannelBank{{{0.5, 0.3}, {0.5, 0.9}}}, Prior{OutcomeIndex{3}});
  for (double p : dist.probs()) EXPECT_DOUBLE_EQ(p, 0.25);
}

TEST(OutcomeDistribution, MixedPrior) {
  // Channel 1 delivered last time (uses v̄¹), channel 2 did not (uses μ̄²).
  const ChannelBank bank{{{0.9, 0.5}, {0.6, 0.2}}};
  const auto dist = outcome_distribution(bank, Prior{OutcomeIndex{1}});
  EXPECT_DOUBLE_EQ(dist[1], 0.9 * 0.8);
  // Enumeration oracle for the full vector.
  const double s1 = 0.9, s2 = 0.2;
  const std::vector<double> expected{(1 - s1) * (1 - s2), s1 * (1 - s2), (1 - s1) * s2, s1 * s2};
  for (std::size_t l = 0; l < 4; ++l) EXPECT_NEAR(dist[l], expected[l], 1e-15);
}

TEST(OutcomeDistribution, MarginalsMatchSuccessProbabilities) {
  const ChannelBank bank{{{0.88, 0.89}, {0.86, 0.87}, {0.7, 0.4}}};
  for (std::uint32_t j = 0; j < 8; ++j) {
    const Prior prior{OutcomeIndex{j}};
    const auto dist = outcome_distribution(bank, prior);
    const auto success = success_probabilities(bank, prior);
    double total = 0.0;
    for (double p : dist.probs()) total += p;
    EXPECT_NEAR(total, 1.0, 1e-15);
    for (int h = 0; h < 3; ++h) {
      double marginal = 0.0;
      for (std::uint32_t l = 0; l < 8; ++l)
        if (OutcomeIndex{l}.delivered(h)) marginal += dist[l];
      EXPECT_NEAR(marginal, success[static_cast<std::size_t>(h)], 1e-15);
    }
  }
}

TEST(Expectation, PointMassAndConstant) {
  const std::vector<Matrix> values{Matrix::Identity(2, 2), 2 * Matrix::Identity(2, 2),
                                   3 * Matrix::Identity(2, 2), 4 * Matrix::Identity(2, 2)};
  EXPECT_EQ(expect_over_outcomes(ChannelOutcomeDistribution::point_mass(4, 2), values), values[2]);

  Matrix M(2, 2);
  M << 1, 2, 3, 4;
  const auto dist = outcome_distribution(ChannelBank{{{0.3, 0.6}, {0.8, 0.1}}}, Prior{Stationary{}});
  const Matrix out = expect_over_outcomes(dist, [&](std::size_t) { return M; });
  EXPECT_LT((out - M).cwiseAbs().maxCoeff(), 1e-14);
}

TEST(Expectation, UniformOverFourOutcomes) {
  const ChannelOutcomeDistribution dist({0.25, 0.25, 0.25, 0.25});
  const Matrix out =
      expect_over_outcomes(dist, [](std::size_t l) { return Matrix(static_cast<double>(l) * Matrix::Identity(3, 3)); });
  EXPECT_LT((out - 1.5 * Matrix::Identity(3, 3)).cwiseAbs().maxCoeff(), 1e-15);
}

TEST(Expectation, ShapeMismatch) {
  const ChannelOutcomeDistribution dist({0.5, 0.5});
  const std::vector<Matrix> values{Matrix::Identity(2, 2), Matrix::Identity(3, 3)};
  EXPECT_THROW(expect_over_outcomes(dist, values), std::domain_error);
}
