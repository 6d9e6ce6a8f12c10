#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "infcone/function.hpp"

using namespace infcone;

namespace {

const char* kKinkAtZero = "piecewise(x1 <= 0: 0; else: -x1)";

TEST(ParseFunction, PiecewiseAndEval) {
  const auto f = parse_function(kKinkAtZero);
  EXPECT_EQ(f.dim, 1u);
  EXPECT_EQ(eval(f, {2.0}), ExtendedReal(-2.0));
  EXPECT_EQ(eval(f, {-3.0}), ExtendedReal(0.0));
}

TEST(ParseFunction, DimensionInferredAndDeclared) {
  EXPECT_EQ(parse_function("exp(x1) + x2").dim, 2u);
  EXPECT_EQ(parse_function("x1").dim, 1u);
  EXPECT_EQ(parse_function("@dim 3\nx1").dim, 3u);
  EXPECT_EQ(eval(parse_function("x1"), {4.5}), ExtendedReal(4.5));
}

TEST(ParseFunction, Errors) {
  try {
    parse_function("x1 +\n  * 2");
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 2);
    EXPECT_EQ(e.column(), 3);
  }
  EXPECT_THROW(parse_function("foo(x1)"), ParseError);
  EXPECT_THROW(parse_function("exp(x1, x2)"), ParseError);
  EXPECT_THROW(parse_function("max(x1)"), ParseError);
  EXPECT_THROW(parse_function("@dim 1\nx2"), ParseError);
  EXPECT_THROW(parse_function("x1^x2"), ParseError);
  EXPECT_THROW(parse_function("@bogus\nx1"), ParseError);
  EXPECT_THROW(parse_function("(x1"), ParseError);
}

TEST(Eval, ExtendedConventions) {
  EXPECT_EQ(eval(parse_function("exp(x1)"), {0.0}), ExtendedReal(1.0));
  EXPECT_TRUE(eval(parse_function("log(x1)"), {0.0}).is_neg_inf());
  EXPECT_TRUE(eval(parse_function("log(x1)"), {-1.0}).is_neg_inf());
  EXPECT_TRUE(eval(parse_function("1/x1"), {0.0}).is_pos_inf());
  EXPECT_TRUE(eval(parse_function("-1/x1"), {0.0}).is_neg_inf());
  EXPECT_THROW(eval(parse_function("x1/x1"), {0.0}), UndefinedOperation);
  EXPECT_THROW(eval(parse_function("x1*inf"), {0.0}), UndefinedOperation);
  EXPECT_TRUE(eval(parse_function("inf - inf + x1"), {0.0}).is_pos_inf());
  EXPECT_TRUE(eval(parse_function("exp(x1)"), {1000.0}).is_pos_inf());
  const long double big = eval_long(parse_function("exp(x1)"), {1000.0});
  EXPECT_TRUE(std::isfinite(big));
  EXPECT_NEAR(static_cast<double>(big / std::exp(1000.0L)), 1.0, 1e-12);
  EXPECT_DOUBLE_EQ(eval(parse_function("x1^-2"), {2.0}).value(), 0.25);
  EXPECT_DOUBLE_EQ(eval(parse_function("max(x1, 2, -x1)"), {-3.0}).value(), 3.0);
  EXPECT_DOUBLE_EQ(eval(parse_function("min(x1, 2)"), {5.0}).value(), 2.0);
}

TEST(Eval, UndefinedNamesSubexpression) {
  try {
    eval(parse_function("1 + x1*inf"), {0.0});
    FAIL();
  } catch (const UndefinedOperation& e) {
    EXPECT_NE(std::string(e.what()).find("1:7"), std::string::npos) << e.what();
  }
}

TEST(Grad, KinkAndSmooth) {
  const auto f = parse_function("-abs(x1)");
  const auto g = grad(f, {3.0});
  ASSERT_TRUE(g.differentiable());
  EXPECT_DOUBLE_EQ((*g.gradient)[0], -1.0);
  EXPECT_FALSE(grad(f, {0.0}).differentiable());
  const auto e = grad(parse_function("exp(x1)"), {1.0});
  ASSERT_TRUE(e.differentiable());
  EXPECT_NEAR((*e.gradient)[0], std::exp(1.0), 1e-14);
}

TEST(Grad, BranchIdChanges) {
  const auto f = parse_function(kKinkAtZero);
  EXPECT_NE(grad(f, {-1.0}).branch_id, grad(f, {1.0}).branch_id);
}

TEST(Grad, DirectionalDerivativeIsOneSided) {
  const auto f = parse_function("abs(x1)");
  EXPECT_DOUBLE_EQ(*directional_derivative(f, {0.0}, {1.0}), 1.0);
  EXPECT_DOUBLE_EQ(*directional_derivative(f, {0.0}, {-1.0}), 1.0);
  const auto k = parse_function(kKinkAtZero);
  EXPECT_DOUBLE_EQ(*directional_derivative(k, {0.0}, {2.0}), -2.0);
  EXPECT_DOUBLE_EQ(*directional_derivative(k, {0.0}, {-2.0}), 0.0);
}

// Oracle: central finite differences in long double.
TEST(Grad, MatchesFiniteDifferences) {
  const std::vector<std::string> fns = {
      "exp(x1) + x2",
      "x1^3 - 2*x1*x2 + sqrt(x2^2 + 1)",
      "log(1 + x1^2) * cos(x2)",
      "piecewise(x1 >= 1: x1; x1 >= -1: 0.5*x1^2 + 0.5; else: -x1)",
      "max(x1 + x2, 2*x1 - x2) + sin(x1)",
      "x1 / (1 + x2^2)",
  };
  std::mt19937_64 rng(2024);
  std::uniform_real_distribution<double> u(-3.0, 3.0);
  for (const auto& src : fns) {
    const auto f = parse_function(src, 2);
    int checked = 0;
    for (int s = 0; s < 1000; ++s) {
      const Vec x{u(rng), u(rng)};
      const auto g = grad(f, x, 1e-4);
      if (!g.differentiable()) continue;
      for (std::size_t i = 0; i < 2; ++i) {
        const long double h = 1e-6L;
        Vec xp = x, xm = x;
        xp[i] += static_cast<double>(h);
        xm[i] -= static_cast<double>(h);
        const long double fd = (eval_long(f, xp) - eval_long(f, xm)) / (2 * h);
        const double an = (*g.gradient)[i];
        EXPECT_LE(std::abs(an - static_cast<double>(fd)), 1e-4 * std::max(1.0, std::abs(an))) << src;
      }
      ++checked;
    }
    EXPECT_GT(checked, 900) << src;
  }
}

TEST(AffineCells, AbsHasTwoCells) {
  const auto cells = affine_cells(parse_function("abs(x1)"));
  ASSERT_TRUE(cells.has_value());
  EXPECT_EQ(cells->size(), 2u);
  EXPECT_FALSE(affine_cells(parse_function("exp(x1)")).has_value());
  EXPECT_TRUE(is_piecewise_affine(parse_function(kKinkAtZero)));
  EXPECT_FALSE(is_piecewise_affine(parse_function("piecewise(x1^2 <= 1: 0; else: x1)")));
}

TEST(AffineCells, ValuesAgreeWithEval) {
  const auto f = parse_function("max(x1 + x2, 2*x1 - x2, -x1) + abs(x2 - 1)", 2);
  const auto cells = affine_cells(f);
  ASSERT_TRUE(cells.has_value());
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(-5.0, 5.0);
  for (int s = 0; s < 200; ++s) {
    const Vec x{u(rng), u(rng)};
    bool found = false;
    for (const auto& c : *cells) {
      bool inside = true;
      for (const auto& h : c.constraints) inside = inside && dot(h.a, x) <= h.b + 1e-12;
      if (!inside) continue;
      found = true;
      EXPECT_NEAR(dot(c.value.a, x) + c.value.b, eval(f, x).value(), 1e-9);
    }
    EXPECT_TRUE(found);
  }
}

TEST(Sets, ParseAndMembership) {
  const auto c = parse_set("x1 >= 0; x2 >= 0; x1*x2 >= 1");
  EXPECT_EQ(c.dim, 2u);
  EXPECT_EQ(c.kind, SetKind::Smooth);
  EXPECT_TRUE(c.contains({1, 1}));
  EXPECT_FALSE(c.contains({0.5, 1}));
  EXPECT_EQ(parse_set("x2 <= 0", 2).kind, SetKind::Polyhedral);
  EXPECT_EQ(parse_set("abs(x1) <= x2").kind, SetKind::Mixed);
  EXPECT_THROW(parse_set("x1 + 1"), ParseError);
  EXPECT_THROW(parse_set("x1 <= 0 x2 <= 0"), ParseError);
}

TEST(Sets, IndicatorLift) {
  const auto ind = lift_indicator(parse_set("x1 <= 0"));
  EXPECT_TRUE(ind.meta.lsc);
  EXPECT_EQ(eval(ind, {-1.0}), ExtendedReal(0.0));
  EXPECT_TRUE(eval(ind, {1.0}).is_pos_inf());
  const auto ind2 = lift_indicator(parse_set("x1 >= 0; x2 >= 0; x1*x2 >= 1"));
  EXPECT_EQ(eval(ind2, {1.0, 1.0}), ExtendedReal(0.0));
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(-3.0, 3.0);
  for (int s = 0; s < 200; ++s) {
    const auto v = eval(ind2, {u(rng), u(rng)});
    EXPECT_TRUE(v == ExtendedReal(0.0) || v.is_pos_inf());
  }
}

TEST(Distance, Halfspace) {
  const auto c = parse_set("x2 <= 0", 2);
  const auto d = distance_function(c, {0, 2});
  EXPECT_DOUBLE_EQ(d.distance, 2.0);
  EXPECT_NEAR(d.nearest[0][1], 0.0, 1e-12);
  EXPECT_FALSE(d.local_only);
  EXPECT_EQ(distance_function(c, {5, -1}).distance, 0.0);
}

TEST(Distance, InfeasibleSetRejected) {
  EXPECT_THROW(distance_function(parse_set("x1 <= -1; x1 >= 1"), {0.0}), std::invalid_argument);
}

// Oracle: dense grid minimization over C intersected with a box.
TEST(Distance, SmoothSetAgainstGridOracle) {
  const auto c = parse_set("x1 >= 0; x2 >= 0; x1*x2 >= 1");
  const auto d = distance_function(c, {0, 0});
  EXPECT_TRUE(d.local_only);
  double best = 1e300;
  for (int i = 0; i <= 2000; ++i) {
    const double x1 = 0.2 + 4.8 * i / 2000.0;
    best = std::min(best, std::hypot(x1, 1.0 / x1));
  }
  EXPECT_NEAR(d.distance, best, 1e-4);
  EXPECT_NEAR(d.distance, std::sqrt(2.0), 1e-6);
}

TEST(Distance, OneLipschitzOnRandomPairs) {
  const std::vector<SetDesc> sets = {parse_set("x2 <= 0", 2), parse_set("x1 + x2 <= 1; x1 - x2 <= 1"),
                                     parse_set("x1 >= 0; x2 >= 0; x1*x2 >= 1")};
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> u(-4.0, 4.0);
  for (const auto& c : sets) {
    for (int s = 0; s < 100; ++s) {
      const Vec x{u(rng), u(rng)}, y{u(rng), u(rng)};
      const double dx = distance_function(c, x).distance;
      const double dy = distance_function(c, y).distance;
      EXPECT_LE(std::abs(dx - dy), distance(x, y) + 1e-7);
    }
  }
}

TEST(Continuity, DetectsJumps) {
  EXPECT_TRUE(check_continuity(parse_function("piecewise(x1 >= 1: x1; x1 >= -1: 0.5*x1^2 + 0.5; else: -x1)")).consistent);
  EXPECT_FALSE(check_continuity(parse_function("piecewise(x1 <= 0: 0; else: 1 + x1)")).consistent);
}

TEST(Functions, SumAndNegation) {
  const auto s = add_functions(parse_function(kKinkAtZero), affine_function({1.0}));
  EXPECT_EQ(eval(s, {2.0}), ExtendedReal(0.0));
  EXPECT_EQ(eval(s, {-2.0}), ExtendedReal(-2.0));
  EXPECT_EQ(eval(negate_function(s), {-2.0}), ExtendedReal(2.0));
  EXPECT_TRUE(is_piecewise_affine(s));
}

TEST(Functions, EpigraphSet) {
  const auto epi = epigraph_set(parse_function("exp(x1)"));
  EXPECT_EQ(epi.dim, 2u);
  EXPECT_TRUE(epi.contains({0.0, 1.0}));
  EXPECT_FALSE(epi.contains({0.0, 0.5}));
}

}  // namespace
