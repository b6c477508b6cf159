#include <gtest/gtest.h>

#include <cmath>
#include <string>

#include "prospectus/experiments.hpp"

namespace prospectus {
namespace {

ExperimentSetup defaults() { return ExperimentSetup{}; }

TEST(Fourfold, DistortionOnlySignPattern) {
  const ExperimentSetup s = defaults();
  const std::array<int, 4> expected{+1, -1, -1, +1};
  for (std::size_t i = 0; i < kAllQuadrants.size(); ++i) {
    const auto series = fourfold_experiment(s, kAllQuadrants[i], Variant::DistortionOnly);
    EXPECT_EQ(ra_sign(series), expected[i]) << series.quadrant;
    EXPECT_EQ(series.records.size(), s.grid.n_points);
  }
}

TEST(Fourfold, GeneralCptChangesSignSomewhere) {
  int changes = 0;
  for (Quadrant q : kAllQuadrants) {
    changes += ra_sign_changes(fourfold_experiment(defaults(), q, Variant::GeneralCpt));
  }
  EXPECT_GT(changes, 0);
}

TEST(Fourfold, RationalAgentHasZeroRelativeAttractiveness) {
  ExperimentSetup s = defaults();
  s.cpt = CptParams::neutral();
  for (Quadrant q : kAllQuadrants) {
    for (Variant v : {Variant::DistortionOnly, Variant::GeneralCpt}) {
      for (const auto& r : fourfold_experiment(s, q, v).records) EXPECT_NEAR(r.ra, 0.0, 1e-10);
    }
  }
}

TEST(Fourfold, AdmissibleGridKeepsCertainOptionInRegime) {
  const ExperimentSetup s = defaults();
  for (Quadrant q : kAllQuadrants) {
    for (double g : fourfold_admissible_grid(s, q)) {
      const double x_tilde = is_gain_quadrant(q) ? s.x_lo : s.x_hi;
      const double r = x_tilde + s.b * g;
      if (is_gain_quadrant(q)) {
        EXPECT_GE(s.a_o, r);
      } else {
        EXPECT_LT(s.a_o, r);
      }
    }
  }
}

TEST(Fourfold, EmptyAdmissibleRangeNamesInequality) {
  ExperimentSetup s = defaults();
  s.grid = {40.0, 60.0, 10};
  try {
    fourfold_admissible_grid(s, Quadrant::HighProbLoss);
    FAIL() << "expected InvalidSetup";
  } catch (const InvalidSetup& e) {
    EXPECT_NE(std::string(e.what()).find("A_o < x_hi + b*gamma"), std::string::npos);
  }
}

TEST(LambdaStar, SymmetricTwoPointIsOne) {
  const DiscreteProspect x({{-3.0, 0.5}, {1.0, 0.5}});
  CptParams p;
  p.beta_gain = p.beta_loss = 0.6;
  const LambdaStar ls = lambda_star_search(x, p);
  EXPECT_NEAR(ls.lambda_star, 1.0, 1e-9);
}

TEST(LambdaStar, BracketResidualsHaveOppositeSigns) {
  const ExperimentSetup s = defaults();
  const ContinuousProspect x = s.distribution(Family::Bernoulli);
  const LambdaStar ls = lambda_star_search(x, s.cpt);
  EXPECT_GE(ls.u_s_below, 0.0);
  EXPECT_LT(ls.u_s_above, 0.0);
  EXPECT_LE(ls.above - ls.below, 1e-10);
}

TEST(LambdaStar, SurveyAgentDislikesBernoulliAtMean) {
  const ExperimentSetup s = defaults();
  const ContinuousProspect x = s.distribution(Family::Bernoulli);
  for (double lambda : {2.0, 5.0, 20.0}) {
    CptParams p = CptParams::survey_means();
    p.lambda = lambda;
    EXPECT_LT(subjective_at_mean(x, p), 0.0) << lambda;
  }
}

TEST(LambdaStar, SubjectiveUtilityDecreasesInLambda) {
  const ContinuousProspect x = defaults().distribution(Family::Normal);
  CptParams p = CptParams::survey_means();
  double prev = numeric::kInf;
  for (double lambda = 0.25; lambda < 40.0; lambda *= 1.5) {
    p.lambda = lambda;
    const double u = subjective_at_mean(x, p);
    EXPECT_LT(u, prev);
    prev = u;
  }
}

TEST(LambdaStar, DegenerateProspectRejected) {
  EXPECT_THROW(lambda_star_search(DiscreteProspect::certain(-4.0), CptParams{}), InvalidProspect);
}

TEST(MixedProspect, LinearGainsGiveUnboundedTariff) {
  ExperimentSetup s = defaults();
  s.cpt.beta_gain = 1.0;
  const auto tb = mixed_prospect_tariff_bounds(s, s.distribution(Family::Normal));
  EXPECT_TRUE(std::isinf(tb.gamma_upper));
}

TEST(MixedProspect, LowerBoundSolvesDefiningEquation) {
  const ExperimentSetup s = defaults();
  for (Family f : kAllFamilies) {
    const ContinuousProspect x = s.distribution(f);
    const auto tb = mixed_prospect_tariff_bounds(s, x);
    EXPECT_NEAR(x.mean() + s.b * tb.gamma_lower - s.a_o, 0.0, 1e-10);
    EXPECT_GT(tb.gamma_upper, tb.gamma_lower);
  }
}

TEST(MixedProspect, NormalSetupIsAverseAcrossWholeInterval) {
  const auto m = mixed_prospect_experiment(defaults(), Family::Normal);
  ASSERT_EQ(m.series.records.size(), 50u);
  for (const auto& r : m.series.records) EXPECT_LT(r.p_s, r.p_o) << r.gamma;
  EXPECT_FALSE(m.first_violation.has_value());
  EXPECT_FALSE(m.first_non_decrease.has_value());
  EXPECT_DOUBLE_EQ(m.series.records.front().gamma, m.bounds.gamma_lower);
  EXPECT_LT(m.series.records.back().gamma, m.bounds.gamma_upper);
}

TEST(MixedProspect, RationalCurvesCoincide) {
  ExperimentSetup s = defaults();
  s.cpt = CptParams::neutral();
  const ContinuousProspect x = s.distribution(Family::Normal);
  for (double g : s.grid.values()) {
    const auto r = evaluate_point(x, g, x.mean() + s.b * g, s, s.cpt);
    EXPECT_NEAR(r.p_s, r.p_o, 1e-10);
  }
}

TEST(SelfReference, EqualityAtCrossingTariff) {
  for (Family f : kAllFamilies) {
    const auto r = self_reference_experiment(defaults(), f);
    EXPECT_LT(r.gap_at_gamma_star, 1e-8) << r.distribution;
  }
}

TEST(SelfReference, DiscreteFamiliesSatisfyInequality) {
  for (Family f : {Family::Poisson, Family::Bernoulli}) {
    const auto r = self_reference_experiment(defaults(), f);
    EXPECT_FALSE(r.first_violation.has_value()) << r.distribution;
    EXPECT_GE(r.worst_gap, 0.0);
  }
}

TEST(SelfReference, SeriesShareTheGrid) {
  const auto r = self_reference_experiment(defaults(), Family::Uniform);
  ASSERT_EQ(r.at_mean.records.size(), r.at_certain.records.size());
  for (std::size_t i = 0; i < r.at_mean.records.size(); ++i) {
    EXPECT_EQ(r.at_mean.records[i].gamma, r.at_certain.records[i].gamma);
    EXPECT_EQ(r.at_certain.records[i].reference, defaults().a_o);
  }
}

TEST(Monotonicity, StaticAndTariffLinkedDecrease) {
  for (ReferenceMode m : {ReferenceMode::Static, ReferenceMode::TariffLinked}) {
    const auto rep = verify_monotonicity(defaults(), m, defaults().grid.values());
    EXPECT_TRUE(rep.strictly_decreasing) << to_string(m);
    EXPECT_EQ(rep.series.records.size(), 200u);
  }
}

TEST(Monotonicity, ZeroTariffCoefficientRejected) {
  ExperimentSetup s = defaults();
  s.b = 0.0;
  EXPECT_THROW(verify_monotonicity(s, ReferenceMode::Static, s.grid.values()), InvalidSetup);
}

TEST(Experiments, RepeatedRunsAreBitIdentical) {
  const auto a = mixed_prospect_experiment(defaults(), Family::Uniform);
  const auto b = mixed_prospect_experiment(defaults(), Family::Uniform);
  ASSERT_EQ(a.series.records.size(), b.series.records.size());
  for (std::size_t i = 0; i < a.series.records.size(); ++i) {
    EXPECT_EQ(a.series.records[i].p_s, b.series.records[i].p_s);
    EXPECT_EQ(a.series.records[i].u_s, b.series.records[i].u_s);
  }
}

}  // namespace
}  // namespace prospectus
