#include <gtest/gtest.h>

#include <random>

#include "infcone/poly_cone.hpp"
#include "infcone/poly_set.hpp"

using namespace infcone;

namespace {

// Oracle: brute-force polar membership, w in K° iff <r,w> <= 0 on rays and <l,w> = 0 on lineality.
bool polar_oracle_contains(const PolyCone& k, const Vec& w, double tol = 1e-7) {
  for (const auto& r : k.rays) {
    if (dot(r, w) > tol) return false;
  }
  for (const auto& l : k.lineality) {
    if (std::abs(dot(l, w)) > tol) return false;
  }
  return true;
}

TEST(PolarCone, TwoHalfplaneIntersection) {
  // K = {v2 >= 0, v1 + v2 >= 0}; generators (1,0) and (-1,1).
  const auto k = cone_from_generators(2, {{1, 0}, {-1, 1}});
  const auto p = polar_cone(k);
  // Expected {w1 <= 0, w2 <= 0, w2 - w1 <= 0}.
  for (const Vec& w : std::vector<Vec>{{-1, -1}, {-1, -2}, {0, 0}, {-3, -3.5}, {0, -1}}) {
    EXPECT_TRUE(cone_contains(p, w)) << w[0] << "," << w[1];
  }
  for (const Vec& w : std::vector<Vec>{{1, 0}, {0, 1}, {-1, 0}, {-1, -0.5}}) {
    EXPECT_FALSE(cone_contains(p, w)) << w[0] << "," << w[1];
  }
  const auto expected = cone_from_inequalities({{1, 0}, {0, 1}, {-1, 1}}, {}, 2);
  EXPECT_TRUE(set_eq(p, expected));
}

TEST(PolarCone, WholeSpaceAndZero) {
  EXPECT_TRUE(polar_cone(PolyCone::whole(2)).is_zero());
  EXPECT_TRUE(polar_cone(PolyCone::zero(3)).is_whole());
}

TEST(PolarCone, SingleGeneratorIsHalfplane) {
  const auto p = polar_cone(cone_from_generators(2, {{1, 0}}));
  EXPECT_EQ(p.lineality.size(), 1u);
  ASSERT_EQ(p.rays.size(), 1u);
  EXPECT_NEAR(p.rays[0][0], -1.0, 1e-12);
  EXPECT_NEAR(p.rays[0][1], 0.0, 1e-12);
}

TEST(PolarCone, CapabilityLimit) {
  EXPECT_THROW(polar_cone(PolyCone::zero(5)), CapabilityError);
}

TEST(PolarCone, CanonicalFormIsIrredundant) {
  const auto k = cone_from_generators(2, {{1, 0}, {1, 1}, {0, 1}, {2, 0}});
  EXPECT_EQ(k.rays.size(), 2u);
  EXPECT_TRUE(k.lineality.empty());
  for (const auto& r : k.rays) EXPECT_NEAR(norm(r), 1.0, 1e-12);
}

PolyCone random_cone(std::mt19937_64& rng) {
  std::uniform_int_distribution<int> dim_d(1, 3), count_d(0, 6);
  std::normal_distribution<double> g(0.0, 1.0);
  const std::size_t dim = static_cast<std::size_t>(dim_d(rng));
  const int count = count_d(rng);
  std::vector<Vec> rays;
  for (int i = 0; i < count; ++i) {
    Vec r(dim);
    for (auto& x : r) x = g(rng);
    rays.push_back(r);
  }
  return PolyCone{dim, rays, {}};
}

TEST(PolarCone, InvolutionOnRandomCones) {
  std::mt19937_64 rng(12345);
  for (int trial = 0; trial < 200; ++trial) {
    const auto k = random_cone(rng);
    const auto pp = polar_cone(polar_cone(k));
    EXPECT_TRUE(set_eq(pp, canonicalize(k))) << "trial " << trial;
    // Every generator of K lies in K°°, checked against the brute-force polar of K°.
    const auto p = polar_cone(k);
    for (const auto& r : k.rays) EXPECT_TRUE(polar_oracle_contains(p, r)) << "trial " << trial;
  }
}

TEST(PolarCone, PolarMatchesBruteForceOracle) {
  std::mt19937_64 rng(99);
  std::normal_distribution<double> g(0.0, 1.0);
  for (int trial = 0; trial < 100; ++trial) {
    const auto k = random_cone(rng);
    const auto p = polar_cone(k);
    for (int s = 0; s < 20; ++s) {
      Vec w(k.dim);
      for (auto& x : w) x = g(rng);
      const bool oracle = polar_oracle_contains(k, w, 1e-9);
      // Skip samples that sit on a facet within rounding.
      bool near = false;
      for (const auto& r : k.rays) near = near || std::abs(dot(normalized(r), w)) < 1e-6;
      if (!near) EXPECT_EQ(cone_contains(p, w, 1e-9), oracle) << "trial " << trial;
    }
  }
}

TEST(PolarCone, AntiMonotone) {
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 100; ++trial) {
    auto k1 = random_cone(rng);
    auto k2 = k1;
    std::normal_distribution<double> g(0.0, 1.0);
    Vec extra(k1.dim);
    for (auto& x : extra) x = g(rng);
    k2.rays.push_back(extra);
    ASSERT_TRUE(cone_subset(canonicalize(k1), canonicalize(k2)));
    EXPECT_TRUE(cone_subset(polar_cone(k2), polar_cone(k1))) << "trial " << trial;
  }
}

TEST(ConvexHull, SegmentFromTwoPoints) {
  const auto s = convex_hull({{-1}, {1}});
  ASSERT_EQ(s.vertices.size(), 2u);
  EXPECT_DOUBLE_EQ(s.vertices[0][0], -1);
  EXPECT_DOUBLE_EQ(s.vertices[1][0], 1);
}

TEST(ConvexHull, SingletonAndInteriorElimination) {
  EXPECT_EQ(convex_hull({{0, 0}}).vertices.size(), 1u);
  const auto s = convex_hull({{0, 0}, {1, 0}, {0.5, 0}, {1, 0}});
  EXPECT_EQ(s.vertices.size(), 2u);
}

TEST(ConvexHull, EmptyInputGivesEmptySet) {
  EXPECT_TRUE(convex_hull({}).is_empty());
}

TEST(SupportFunction, Examples) {
  const auto seg = convex_hull({{-1}, {0}});
  EXPECT_EQ(support_function(seg, {-1}), ExtendedReal(1.0));
  EXPECT_EQ(support_function(seg, {1}), ExtendedReal(0.0));
  const PolyConvexSet half{1, {{0}}, {{1}}};
  EXPECT_TRUE(support_function(half, {1}).is_pos_inf());
  EXPECT_EQ(support_function(half, {-1}), ExtendedReal(0.0));
  EXPECT_EQ(support_function(half, {0}), ExtendedReal(0.0));
  EXPECT_TRUE(support_function(PolyConvexSet::empty(2), {1, 0}).is_neg_inf());
}

TEST(SupportFunction, HomogeneousAndSubadditive) {
  std::mt19937_64 rng(3);
  std::normal_distribution<double> g(0.0, 1.0);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<Vec> pts;
    for (int i = 0; i < 6; ++i) pts.push_back({g(rng), g(rng)});
    const auto s = convex_hull(pts);
    const Vec u{g(rng), g(rng)}, v{g(rng), g(rng)};
    const double su = support_function(s, u).value();
    const double sv = support_function(s, v).value();
    EXPECT_NEAR(support_function(s, scale(u, 3.0)).value(), 3.0 * su, 1e-9);
    EXPECT_LE(support_function(s, add(u, v)).value(), su + sv + 1e-9);
    // Oracle: max over all input points.
    double brute = -1e300;
    for (const auto& p : pts) brute = std::max(brute, dot(p, u));
    EXPECT_NEAR(su, brute, 1e-9);
  }
}

TEST(Minkowski, ContainsZeroWithCertificate) {
  const auto nonpos = cone_from_generators(2, {{-1, 0}, {0, -1}});
  const auto c = minkowski_contains_zero(PolyConvexSet::point({1, 0}), nonpos);
  ASSERT_TRUE(c.contains_zero);
  EXPECT_NEAR(c.xi[0], 1.0, 1e-9);
  EXPECT_NEAR(c.w[0], -1.0, 1e-9);
  EXPECT_LT(c.residual, 1e-9);
  EXPECT_FALSE(minkowski_contains_zero(PolyConvexSet::point({1, 0}), PolyCone::zero(2)).contains_zero);
  const auto seg = convex_hull({{-1}, {0}});
  const auto c2 = minkowski_contains_zero(seg, PolyCone::zero(1));
  ASSERT_TRUE(c2.contains_zero);
  EXPECT_NEAR(c2.xi[0], 0.0, 1e-9);
}

TEST(SetEq, Tolerance) {
  const auto a = convex_hull({{-1}, {0}});
  EXPECT_TRUE(set_eq(a, a));
  EXPECT_TRUE(set_eq(a, convex_hull({{-1}, {1e-9}})));
  EXPECT_FALSE(set_eq(a, convex_hull({{0}, {1}})));
  EXPECT_FALSE(set_eq(a, PolyConvexSet::empty(1)));
  EXPECT_TRUE(set_eq(PolyConvexSet::empty(1), PolyConvexSet::empty(1)));
}

TEST(Polyhedron, FromInequalities) {
  // [-1, 0] as {x <= 0, -x <= 1}.
  const auto s = polyhedron_from_inequalities({{1}, {-1}}, {0, 1}, 1);
  EXPECT_TRUE(set_eq(s, convex_hull({{-1}, {0}})));
  // [0, inf)
  const auto h = polyhedron_from_inequalities({{-1}}, {0}, 1);
  EXPECT_FALSE(h.is_bounded());
  EXPECT_TRUE(support_function(h, {1}).is_pos_inf());
  // Infeasible.
  EXPECT_TRUE(polyhedron_from_inequalities({{1}, {-1}}, {-1, -1}, 1).is_empty());
}

TEST(Hausdorff, BoxTruncation) {
  const PolyConvexSet half{1, {{0}}, {{1}}};
  const PolyConvexSet almost{1, {{1e-4}}, {{1}}};
  EXPECT_LT(hausdorff_in_box(half, almost), 1e-3);
  EXPECT_GT(hausdorff_in_box(half, convex_hull({{0}})), 0.9);
}

TEST(Lp, SimpleOptimum) {
  lp::Problem p(2);
  p.objective = {-1, -1};
  p.add({1, 2}, lp::Relation::Le, 4);
  p.add({3, 1}, lp::Relation::Le, 6);
  const auto r = lp::solve(p);
  ASSERT_EQ(r.status, lp::Status::Optimal);
  EXPECT_NEAR(r.objective, -2.8, 1e-9);
}

TEST(Lp, InfeasibleAndUnbounded) {
  lp::Problem p(1);
  p.add({1}, lp::Relation::Ge, 2);
  p.add({1}, lp::Relation::Le, 1);
  EXPECT_EQ(lp::solve(p).status, lp::Status::Infeasible);
  lp::Problem q(1);
  q.objective = {-1};
  EXPECT_EQ(lp::solve(q).status, lp::Status::Unbounded);
}

}  // namespace
