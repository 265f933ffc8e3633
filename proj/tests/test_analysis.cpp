#include <gtest/gtest.h>

#include <vector>

#include "fixtures.hpp"
#include "mjls/analysis.hpp"

using namespace mjls;

namespace {

MjlsModel stable_scalar(double a) {
  Matrix C(2, 1), D(2, 1);
  C << 1, 0;
  D << 0, 1;
  return MjlsModel({{Matrix::Constant(1, 1, a), Matrix::Constant(1, 1, 0.7), C, D, Matrix::Constant(1, 1, 1.0)}},
                   MarkovChain{Matrix::Constant(1, 1, 1.0)}, ChannelBank{{{1.0, 1.0}}});
}

}  // namespace

TEST(Observability, ExampleWitnessIsModeOneThreeTimes) {
  const MjlsModel ex = fixtures::example_model(0.88, 0.86, 0.89, 0.87);
  const ObservabilityReport r = weak_observability(ex);
  ASSERT_TRUE(r.observable);
  EXPECT_EQ(r.witness_path, (std::vector<int>{0, 0, 0}));
  EXPECT_EQ(r.best_rank, 3);

  const Matrix O = jump_observability_matrix(ex, r.witness_path);
  Matrix rows(3, 3);
  rows << 1, 1, 1, 2, 3, 4, 6, 7, 13;
  Matrix nonzero(3, 3);
  int filled = 0;
  for (Eigen::Index k = 0; k < O.rows(); ++k)
    if (O.row(k).cwiseAbs().maxCoeff() > 0) nonzero.row(filled++) = O.row(k);
  ASSERT_EQ(filled, 3);
  EXPECT_EQ(nonzero, rows);
  EXPECT_EQ(numerical_rank(O), 3);
}

TEST(Observability, IdentityOutputNeedsOneStep) {
  auto modes = fixtures::example_model(1, 1, 1, 1).modes();
  for (auto& md : modes) {
    md.C = Matrix::Identity(3, 3);
    md.D = Matrix::Zero(3, 2);
  }
  const MjlsModel model(modes, fixtures::example_model(1, 1, 1, 1).chain(), fixtures::example_bank(1, 1, 1, 1));
  const ObservabilityReport r = weak_observability(model);
  ASSERT_TRUE(r.observable);
  EXPECT_EQ(r.witness_path.size(), 1u);
}

TEST(Observability, ZeroOutputIsNeverObservable) {
  auto modes = fixtures::example_model(1, 1, 1, 1).modes();
  for (auto& md : modes) md.C.setZero();
  const MjlsModel model(modes, fixtures::example_model(1, 1, 1, 1).chain(), fixtures::example_bank(1, 1, 1, 1));
  for (int len : {1, 3, 8}) {
    const ObservabilityReport r = weak_observability(model, len);
    EXPECT_FALSE(r.observable);
    EXPECT_TRUE(r.witness_path.empty());
    EXPECT_EQ(r.max_length_searched, len);
    EXPECT_EQ(r.best_rank, 0);
  }
}

TEST(Observability, WitnessOnlyUsesPositiveTransitions) {
  // Mode 2 alone observes everything but mode 1 never moves there.
  auto modes = fixtures::example_model(1, 1, 1, 1).modes();
  modes[0].C.setZero();
  modes[1].C = Matrix::Identity(3, 3);
  modes[1].D = Matrix::Zero(3, 2);
  Matrix T(2, 2);
  T << 1.0, 0.0, 0.5, 0.5;
  const MjlsModel model(modes, MarkovChain{T}, fixtures::example_bank(1, 1, 1, 1));
  const ObservabilityReport r = weak_observability(model, 4);
  ASSERT_TRUE(r.observable);
  EXPECT_EQ(r.witness_path, (std::vector<int>{1}));
}

TEST(GammaSearch, StableScalarHasFiniteCriticalLevel) {
  const GammaSearchResult r = gamma_critical(stable_scalar(0.5));
  ASSERT_EQ(r.status, GammaSearchStatus::Found);
  ASSERT_TRUE(r.gamma_c.has_value());
  EXPECT_LT(r.hi - r.lo, 1e-3);
  EXPECT_TRUE(r.theta_only_predicate);
  EXPECT_TRUE(probe_attenuation(stable_scalar(0.5), 100.0, {}).predicate);
}

TEST(GammaSearch, BracketInvariantHoldsAtEveryStep) {
  const MjlsModel model = fixtures::example_model(0.88, 0.86, 0.89, 0.87);
  GammaSearchConfig cfg;
  cfg.tol = 1e-2;
  const GammaSearchResult r = gamma_critical(model, cfg);
  ASSERT_EQ(r.status, GammaSearchStatus::Found);
  EXPECT_FALSE(r.theta_only_predicate);
  for (const BracketStep& step : r.log) {
    EXPECT_LE(step.lo, step.probe);
    EXPECT_GE(step.hi, step.probe);
  }
  // The bisection phase starts once a true probe is logged; from then on the
  // running bracket endpoints keep their predicate values.
  bool bisecting = false;
  for (std::size_t k = 1; k < r.log.size(); ++k) {
    if (!bisecting) {
      bisecting = r.log[k].predicate;
      continue;
    }
    EXPECT_FALSE(probe_attenuation(model, r.log[k].lo, cfg).predicate) << "step " << k;
    EXPECT_TRUE(probe_attenuation(model, r.log[k].hi, cfg).predicate) << "step " << k;
  }
  EXPECT_FALSE(probe_attenuation(model, r.lo, cfg).predicate);
  EXPECT_TRUE(probe_attenuation(model, *r.gamma_c, cfg).predicate);
}

TEST(GammaSearch, PredicateAtLowerBracketIsRejected) {
  GammaSearchConfig cfg;
  cfg.lo = 50.0;
  cfg.hi = 100.0;
  const GammaSearchResult r = gamma_critical(stable_scalar(0.5), cfg);
  EXPECT_EQ(r.status, GammaSearchStatus::InvalidLowerBracket);
  EXPECT_FALSE(r.gamma_c.has_value());
}

TEST(GammaSearch, PoorChannelsHaveNoFiniteLevel) {
  GammaSearchConfig cfg;
  cfg.hi_cap = 1e3;
  const GammaSearchResult r = gamma_critical(fixtures::example_model(0.72, 0.76, 0.77, 0.67), cfg);
  EXPECT_EQ(r.status, GammaSearchStatus::NoFiniteGamma);
  EXPECT_FALSE(r.gamma_c.has_value());
  EXPECT_EQ(r.hi, 1e3);
}

TEST(Sweep, SinglePointMatchesDirectSearch) {
  const MjlsModel model = fixtures::example_model(0.85, 0.85, 0.82, 0.8);
  GammaSearchConfig cfg;
  cfg.tol = 1e-2;
  const std::vector<double> grid{0.9};
  const auto rows = sweep(model, {0, ChannelField::StayGood}, grid, cfg);
  ASSERT_EQ(rows.size(), 1u);
  const GammaSearchResult direct = gamma_critical(model.with_bank(fixtures::example_bank(0.9, 0.85, 0.82, 0.8)), cfg);
  EXPECT_EQ(rows[0].result.gamma_c, direct.gamma_c);
}

TEST(Sweep, CriticalLevelFallsAsChannelImproves) {
  const MjlsModel model = fixtures::example_model(0.85, 0.85, 0.82, 0.8);
  GammaSearchConfig cfg;
  cfg.tol = 1e-2;
  const std::vector<double> grid{0.8, 0.9, 0.95};
  const auto rows = sweep(model, {0, ChannelField::StayGood}, grid, cfg, 2);
  for (const auto& row : rows) ASSERT_TRUE(row.result.gamma_c.has_value());
  for (std::size_t k = 1; k < rows.size(); ++k)
    EXPECT_LE(*rows[k].result.gamma_c, *rows[k - 1].result.gamma_c + cfg.tol);
}

TEST(Sweep, RejectsGridOutsideUnitInterval) {
  const std::vector<double> grid{0.5, 1.2};
  EXPECT_THROW(sweep(stable_scalar(0.5), {0, ChannelField::Recover}, grid), std::domain_error);
}
