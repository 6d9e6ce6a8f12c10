#include <gtest/gtest.h>

#include <cmath>

#include "infcone/optimality.hpp"

using namespace infcone;

namespace {

LadderConfig small_cfg() {
  LadderConfig cfg;
  cfg.samples_per_shell = 64;
  return cfg;
}

const char* kHyperbolic = "x1 >= 0; x2 >= 0; x1*x2 >= 1";

}  // namespace

TEST(MinimizingSequence, DecayingExponentialEscapes) {
  const auto r = find_minimizing_sequence(parse_function("exp(-x1)"), nullptr, small_cfg());
  EXPECT_TRUE(r.escapes_to_infinity);
  EXPECT_FALSE(r.attained_flag);
  ASSERT_TRUE(r.inf_estimate.is_finite());
  // Oracle: the smallest shell value is e^{-1.25 R} at R = 1e1 already, far below 1e-3.
  EXPECT_LT(std::abs(r.inf_estimate.value()), 1e-3);
  for (std::size_t i = 1; i < r.values.size(); ++i) EXPECT_LE(r.values[i], r.values[i - 1]);
}

TEST(MinimizingSequence, SquareIsAttained) {
  const auto r = find_minimizing_sequence(parse_function("x1^2"), nullptr, small_cfg());
  EXPECT_TRUE(r.attained_flag);
  EXPECT_FALSE(r.escapes_to_infinity);
  EXPECT_NEAR(r.inf_estimate.value(), 0.0, 1e-6);
}

TEST(MinimizingSequence, LinearIsUnboundedBelow) {
  const auto r = find_minimizing_sequence(parse_function("x1 - 2*x2"), nullptr, small_cfg());
  EXPECT_TRUE(r.unbounded_below);
  EXPECT_TRUE(r.inf_estimate.is_neg_inf());
}

TEST(MinimizingSequence, LinearDecayAtDefaultSampling) {
  // Shell minima of 3 x1 + x2 scale exactly with the radius ratio.
  const auto r = find_minimizing_sequence(parse_function("3*x1 + x2"));
  EXPECT_TRUE(r.unbounded_below);
}

TEST(MinimizingSequence, HyperbolicRegionEscapes) {
  const auto c = parse_set(kHyperbolic, 2);
  const auto r = find_minimizing_sequence(parse_function("x1", 2), &c, small_cfg());
  EXPECT_TRUE(r.escapes_to_infinity);
  EXPECT_LT(std::abs(r.inf_estimate.value()), 1e-3);
  for (const auto& p : r.points) EXPECT_TRUE(c.contains(p));
}

TEST(MinimizingSequence, HalfplaneAttainsOnItsEdge) {
  // x1 on {x1 >= 0} reaches 0 at every (0, t), including t = 0.
  const auto c = parse_set("x1 >= 0", 2);
  const auto r = find_minimizing_sequence(parse_function("x1", 2), &c, small_cfg());
  EXPECT_TRUE(r.attained_flag);
  EXPECT_FALSE(r.escapes_to_infinity);
}

TEST(Fermat, Verdicts) {
  const auto cfg = small_cfg();
  const auto dec = fermat_at_infinity(parse_function("exp(-x1)"), cfg);
  EXPECT_EQ(dec.status, CertificateStatus::Holds) << dec.reason;
  const auto sq = fermat_at_infinity(parse_function("x1^2"), cfg);
  EXPECT_EQ(sq.status, CertificateStatus::NotApplicable);
  EXPECT_EQ(sq.reason, "infimum attained");
  const auto lin = fermat_at_infinity(parse_function("3*x1 + x2"), cfg);
  EXPECT_EQ(lin.status, CertificateStatus::NotApplicable);
  EXPECT_EQ(lin.reason, "unbounded below");
  const auto kink = fermat_at_infinity(parse_function("piecewise(x1 <= 0: 0; else: -x1)"), cfg);
  EXPECT_EQ(kink.status, CertificateStatus::NotApplicable);
}

TEST(Fermat, GrowingExponentialHolds) {
  const auto c = fermat_at_infinity(parse_function("exp(x1)"), small_cfg());
  EXPECT_EQ(c.status, CertificateStatus::Holds) << c.reason;
  EXPECT_NEAR(c.margin, 0.0, 1e-6);
}

TEST(Constrained, HyperbolicRegion) {
  const auto c = constrained_condition_at_infinity(parse_function("x1", 2), parse_set(kHyperbolic, 2), small_cfg());
  ASSERT_EQ(c.status, CertificateStatus::Holds) << c.reason;
  ASSERT_TRUE(c.xi && c.w);
  EXPECT_NEAR((*c.xi)[0], 1.0, 1e-6);
  EXPECT_NEAR((*c.xi)[1], 0.0, 1e-6);
  EXPECT_NEAR((*c.w)[0], -1.0, 1e-6);
  EXPECT_NEAR((*c.w)[1], 0.0, 1e-6);
  EXPECT_LT(c.residual, 1e-6);
  EXPECT_TRUE(c.qualification_witnessed);
  for (const auto& row : c.directional_check) EXPECT_TRUE(row.ok);
}

TEST(Constrained, HalfplaneNotApplicable) {
  const auto c = constrained_condition_at_infinity(parse_function("x1", 2), parse_set("x1 >= 0", 2), small_cfg());
  EXPECT_EQ(c.status, CertificateStatus::NotApplicable);
}

TEST(Constrained, ZeroFunctionNeverEscapes) {
  // f = 0 attains its infimum everywhere, so the condition never needs to be checked.
  const auto c = constrained_condition_at_infinity(parse_function("@dim 2\n0"), parse_set("x2 <= 0", 2), small_cfg());
  EXPECT_EQ(c.status, CertificateStatus::NotApplicable);
}

TEST(Constrained, DecayOnHalfplane) {
  // exp(-x1) on {x2 <= 0}: escapes along x1 -> +inf; d f = {(xi, 0): xi <= 0}.
  const auto c = constrained_condition_at_infinity(parse_function("exp(-x1) + 0*x2"), parse_set("x2 <= 0", 2), small_cfg());
  EXPECT_EQ(c.status, CertificateStatus::Holds) << c.reason;
}
