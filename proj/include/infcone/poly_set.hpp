#pragma once

#include <cmath>
#include <numbers>
#include <optional>
#include <vector>

#include "infcone/extended_real.hpp"
#include "infcone/lp.hpp"
#include "infcone/poly_cone.hpp"
#include "infcone/vec.hpp"

namespace infcone {

/**
 * @brief Closed convex set co(vertices) + cone(rays).
 *
 * An empty vertex list is the empty set (a legitimate value: subgradient
 * sets at infinity may be empty). Lines are carried as pairs of opposite rays.
 */
struct PolyConvexSet {
  std::size_t dim = 0;
  std::vector<Vec> vertices;
  std::vector<Vec> rays;

  static PolyConvexSet empty(std::size_t dim) { return PolyConvexSet{dim, {}, {}}; }
  static PolyConvexSet point(Vec p) {
    const std::size_t d = p.size();
    return PolyConvexSet{d, {std::move(p)}, {}};
  }

  [[nodiscard]] bool is_empty() const { return vertices.empty(); }
  [[nodiscard]] bool is_bounded() const { return rays.empty(); }

  void validate() const {
    for (const auto& v : vertices) {
      if (v.size() != dim) throw DimensionMismatch("PolyConvexSet: vertex dimension mismatch");
    }
    for (const auto& r : rays) {
      if (r.size() != dim) throw DimensionMismatch("PolyConvexSet: ray dimension mismatch");
    }
  }
};

namespace detail {

// Is p in co(vs) + cone(rs)? Solved as an LP feasibility problem.
inline bool in_hull(const Vec& p, const std::vector<Vec>& vs, const std::vector<Vec>& rs) {
  if (vs.empty()) return false;
  const std::size_t d = p.size();
  const std::size_t nv = vs.size();
  lp::Problem prob(nv + rs.size());
  prob.objective.clear();
  for (std::size_t i = 0; i < d; ++i) {
    Vec row(nv + rs.size());
    for (std::size_t j = 0; j < nv; ++j) row[j] = vs[j][i];
    for (std::size_t j = 0; j < rs.size(); ++j) row[nv + j] = rs[j][i];
    prob.add(std::move(row), lp::Relation::Eq, p[i]);
  }
  Vec ones(nv + rs.size(), 0.0);
  for (std::size_t j = 0; j < nv; ++j) ones[j] = 1.0;
  prob.add(std::move(ones), lp::Relation::Eq, 1.0);
  return lp::solve(prob).status == lp::Status::Optimal;
}

// Is r in cone(rs)?
inline bool in_cone(const Vec& r, const std::vector<Vec>& rs) {
  if (rs.empty()) return norm(r) == 0.0;
  const std::size_t d = r.size();
  lp::Problem prob(rs.size());
  prob.objective.clear();
  for (std::size_t i = 0; i < d; ++i) {
    Vec row(rs.size());
    for (std::size_t j = 0; j < rs.size(); ++j) row[j] = rs[j][i];
    prob.add(std::move(row), lp::Relation::Eq, r[i]);
  }
  return lp::solve(prob).status == lp::Status::Optimal;
}

}  // namespace detail

/// Minimal V-representation: duplicate, interior and redundant generators removed.
inline PolyConvexSet reduce(const PolyConvexSet& s, double tol = 1e-9) {
  s.validate();
  PolyConvexSet out{s.dim, {}, {}};
  if (s.is_empty()) return out;

  std::vector<Vec> rays;
  for (const auto& r : s.rays) {
    if (norm(r) > tol) detail::push_unique_direction(rays, normalized(r), 1e-9);
  }
  for (std::size_t i = 0; i < rays.size();) {
    std::vector<Vec> others;
    for (std::size_t j = 0; j < rays.size(); ++j) {
      if (j != i) others.push_back(rays[j]);
    }
    if (!others.empty() && detail::in_cone(rays[i], others)) {
      rays.erase(rays.begin() + static_cast<std::ptrdiff_t>(i));
    } else {
      ++i;
    }
  }

  std::vector<Vec> verts;
  for (const auto& v : s.vertices) {
    bool dup = false;
    for (const auto& w : verts) {
      if (distance(v, w) <= tol * std::max(1.0, norm(v))) dup = true;
    }
    if (!dup) verts.push_back(v);
  }
  for (std::size_t i = 0; i < verts.size();) {
    std::vector<Vec> others;
    for (std::size_t j = 0; j < verts.size(); ++j) {
      if (j != i) others.push_back(verts[j]);
    }
    if (!others.empty() && detail::in_hull(verts[i], others, rays)) {
      verts.erase(verts.begin() + static_cast<std::ptrdiff_t>(i));
    } else {
      ++i;
    }
  }
  detail::sort_lex(verts);
  detail::sort_lex(rays);
  out.vertices = std::move(verts);
  out.rays = std::move(rays);
  return out;
}

/// Convex hull of a finite point list; an empty list gives the empty set.
inline PolyConvexSet convex_hull(const std::vector<Vec>& points) {
  if (points.empty()) return PolyConvexSet{};
  const std::size_t d = points.front().size();
  for (const auto& p : points) {
    if (p.size() != d) throw DimensionMismatch("convex_hull: points of different dimensions");
  }
  return reduce(PolyConvexSet{d, points, {}});
}

/// sup { <xi, v> : xi in S }; -inf for the empty set, +inf along recession rays.
inline ExtendedReal support_function(const PolyConvexSet& s, const Vec& v, double tol = 1e-12) {
  if (v.size() != s.dim) throw DimensionMismatch("support_function: dimension mismatch");
  if (s.is_empty()) return ExtendedReal::neg_inf();
  for (const auto& r : s.rays) {
    if (dot(r, v) > tol * std::max(1.0, norm(v))) return ExtendedReal::pos_inf();
  }
  double best = -std::numeric_limits<double>::infinity();
  for (const auto& p : s.vertices) best = std::max(best, dot(p, v));
  return best;
}

/// Recession cone cone(rays) as a PolyCone.
inline PolyCone recession_cone(const PolyConvexSet& s) {
  if (s.rays.empty()) return PolyCone::zero(s.dim);
  return cone_from_generators(s.dim, s.rays);
}

/**
 * @brief { xi : A xi <= b } in V-representation.
 *
 * Homogenizes to the cone { (xi, s) : A xi - b s <= 0, s >= 0 } and reads
 * vertices off the generators with s > 0.
 */
inline PolyConvexSet polyhedron_from_inequalities(const std::vector<Vec>& a, const Vec& b, std::size_t dim,
                                                  const std::vector<Vec>& aeq = {}, const Vec& beq = {}) {
  if (a.size() != b.size() || aeq.size() != beq.size()) {
    throw DimensionMismatch("polyhedron_from_inequalities: row/rhs count mismatch");
  }
  std::vector<Vec> rows;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a[i].size() != dim) throw DimensionMismatch("polyhedron_from_inequalities: row dimension mismatch");
    Vec row = a[i];
    row.push_back(-b[i]);
    rows.push_back(std::move(row));
  }
  Vec s_row(dim + 1, 0.0);
  s_row[dim] = -1.0;
  rows.push_back(s_row);
  std::vector<Vec> eq_rows;
  for (std::size_t i = 0; i < aeq.size(); ++i) {
    if (aeq[i].size() != dim) throw DimensionMismatch("polyhedron_from_inequalities: row dimension mismatch");
    Vec row = aeq[i];
    row.push_back(-beq[i]);
    eq_rows.push_back(std::move(row));
  }
  const PolyCone hom = cone_from_inequalities(rows, eq_rows, dim + 1);

  PolyConvexSet out{dim, {}, {}};
  constexpr double kEps = 1e-9;
  for (const auto& r : hom.rays) {
    Vec xi(r.begin(), r.begin() + static_cast<std::ptrdiff_t>(dim));
    if (r[dim] > kEps) {
      out.vertices.push_back(scale(xi, 1.0 / r[dim]));
    } else {
      out.rays.push_back(xi);
    }
  }
  for (const auto& l : hom.lineality) {
    Vec xi(l.begin(), l.begin() + static_cast<std::ptrdiff_t>(dim));
    out.rays.push_back(xi);
    out.rays.push_back(scale(xi, -1.0));
  }
  // A nonempty polyhedron always yields a generator with s > 0.
  if (out.vertices.empty()) return PolyConvexSet::empty(dim);
  return reduce(out);
}

/// Certificate for 0 in S + K.
struct MinkowskiCertificate {
  bool contains_zero = false;
  Vec xi;  // element of S
  Vec w;   // element of K
  double residual = 0.0;
};

/// Decides 0 in S + K by LP feasibility; with tol > 0, accepts |xi + w|_inf <= tol.
inline MinkowskiCertificate minkowski_contains_zero(const PolyConvexSet& s, const PolyCone& k, double tol = 0.0) {
  if (s.dim != k.dim) throw DimensionMismatch("minkowski_contains_zero: dimension mismatch");
  MinkowskiCertificate cert;
  if (s.is_empty()) return cert;
  const std::size_t d = s.dim;
  const std::size_t nv = s.vertices.size();
  const std::size_t nr = s.rays.size();
  const std::size_t nk = k.rays.size();
  const std::size_t nl = k.lineality.size();
  const std::size_t nvars = nv + nr + nk + nl;
  lp::Problem prob(nvars);
  prob.objective.clear();
  for (std::size_t j = nv + nr + nk; j < nvars; ++j) prob.free_var[j] = true;
  auto column = [&](std::size_t j) -> const Vec& {
    if (j < nv) return s.vertices[j];
    if (j < nv + nr) return s.rays[j - nv];
    if (j < nv + nr + nk) return k.rays[j - nv - nr];
    return k.lineality[j - nv - nr - nk];
  };
  for (std::size_t i = 0; i < d; ++i) {
    Vec row(nvars);
    for (std::size_t j = 0; j < nvars; ++j) row[j] = column(j)[i];
    if (tol > 0) {
      prob.add(row, lp::Relation::Le, tol);
      prob.add(std::move(row), lp::Relation::Ge, -tol);
    } else {
      prob.add(std::move(row), lp::Relation::Eq, 0.0);
    }
  }
  Vec ones(nvars, 0.0);
  for (std::size_t j = 0; j < nv; ++j) ones[j] = 1.0;
  prob.add(std::move(ones), lp::Relation::Eq, 1.0);
  const auto res = lp::solve(prob);
  if (res.status != lp::Status::Optimal) return cert;

  cert.contains_zero = true;
  cert.xi.assign(d, 0.0);
  cert.w.assign(d, 0.0);
  for (std::size_t j = 0; j < nvars; ++j) {
    Vec& target = j < nv + nr ? cert.xi : cert.w;
    const Vec& col = column(j);
    for (std::size_t i = 0; i < d; ++i) target[i] += res.x[j] * col[i];
  }
  cert.residual = norm(add(cert.xi, cert.w));
  return cert;
}

/// Deterministic direction grid on the unit sphere used for support comparisons.
inline std::vector<Vec> direction_grid(std::size_t dim, std::size_t count = 0) {
  std::vector<Vec> out;
  if (dim == 0) return out;
  if (dim == 1) return {{1.0}, {-1.0}};
  if (dim == 2) {
    const std::size_t n = count == 0 ? 32 : count;
    for (std::size_t i = 0; i < n; ++i) {
      const double a = 2.0 * std::numbers::pi * static_cast<double>(i) / static_cast<double>(n);
      out.push_back({std::cos(a), std::sin(a)});
    }
    return out;
  }
  for (std::size_t i = 0; i < dim; ++i) {
    out.push_back(unit_axis(dim, i));
    out.push_back(unit_axis(dim, i, -1.0));
  }
  if (dim == 3) {
    const std::size_t n = count == 0 ? 64 : count;
    const double golden = std::numbers::pi * (3.0 - std::sqrt(5.0));
    for (std::size_t i = 0; i < n; ++i) {
      const double z = 1.0 - 2.0 * (static_cast<double>(i) + 0.5) / static_cast<double>(n);
      const double r = std::sqrt(1.0 - z * z);
      const double th = golden * static_cast<double>(i);
      out.push_back({r * std::cos(th), r * std::sin(th), z});
    }
    return out;
  }
  // dim >= 4: axes plus all sign patterns of the diagonal.
  const std::size_t patterns = std::size_t{1} << dim;
  for (std::size_t m = 0; m < patterns; ++m) {
    Vec v(dim);
    for (std::size_t i = 0; i < dim; ++i) v[i] = (m >> i) & 1U ? -1.0 : 1.0;
    out.push_back(normalized(v));
  }
  return out;
}

/**
 * @brief Equality of closed convex sets up to tolerance.
 *
 * Recession cones must agree under the angular tolerance, and support
 * functions must agree (both +inf, or finite within abs/rel tolerance) on
 * the direction grid.
 */
inline bool set_eq(const PolyConvexSet& a, const PolyConvexSet& b, const Tolerance& tol = {}) {
  if (a.dim != b.dim) throw DimensionMismatch("set_eq: dimension mismatch");
  if (a.is_empty() || b.is_empty()) return a.is_empty() == b.is_empty();
  if (!set_eq(recession_cone(a), recession_cone(b), std::max(tol.cone_angle_tol, 1e-9))) return false;
  for (const auto& u : direction_grid(a.dim)) {
    const ExtendedReal ha = support_function(a, u);
    const ExtendedReal hb = support_function(b, u);
    if (ha.is_finite() != hb.is_finite()) return false;
    if (ha.is_finite() && std::abs(ha.value() - hb.value()) > tol.scaled(std::max(std::abs(ha.value()), std::abs(hb.value())))) {
      return false;
    }
  }
  return true;
}

/// sup { <xi, u> : xi in S, |xi_i| <= box for all i } (S nonempty).
inline ExtendedReal boxed_support(const PolyConvexSet& s, const Vec& u, double box) {
  if (s.is_empty()) return ExtendedReal::neg_inf();
  const std::size_t d = s.dim;
  const std::size_t nv = s.vertices.size();
  const std::size_t nvars = nv + s.rays.size();
  lp::Problem prob(nvars);
  auto column = [&](std::size_t j) -> const Vec& { return j < nv ? s.vertices[j] : s.rays[j - nv]; };
  for (std::size_t j = 0; j < nvars; ++j) prob.objective[j] = -dot(column(j), u);
  Vec ones(nvars, 0.0);
  for (std::size_t j = 0; j < nv; ++j) ones[j] = 1.0;
  prob.add(std::move(ones), lp::Relation::Eq, 1.0);
  for (std::size_t i = 0; i < d; ++i) {
    Vec row(nvars);
    for (std::size_t j = 0; j < nvars; ++j) row[j] = column(j)[i];
    prob.add(row, lp::Relation::Le, box);
    prob.add(row, lp::Relation::Ge, -box);
  }
  const auto res = lp::solve(prob);
  if (res.status != lp::Status::Optimal) return ExtendedReal::neg_inf();
  return -res.objective;
}

/// Hausdorff distance between S and T after truncation to the cube [-box, box]^n.
inline double hausdorff_in_box(const PolyConvexSet& s, const PolyConvexSet& t, double box = 1.0) {
  if (s.dim != t.dim) throw DimensionMismatch("hausdorff_in_box: dimension mismatch");
  double worst = 0.0;
  for (const auto& u : direction_grid(s.dim, s.dim == 2 ? 128 : 0)) {
    const ExtendedReal hs = boxed_support(s, u, box);
    const ExtendedReal ht = boxed_support(t, u, box);
    if (hs.is_finite() != ht.is_finite()) return std::numeric_limits<double>::infinity();
    if (hs.is_finite()) worst = std::max(worst, std::abs(hs.value() - ht.value()));
  }
  return worst;
}

/// -S
inline PolyConvexSet negate(const PolyConvexSet& s) {
  PolyConvexSet out = s;
  for (auto& v : out.vertices) v = scale(v, -1.0);
  for (auto& r : out.rays) r = scale(r, -1.0);
  return reduce(out);
}

/// S + T
inline PolyConvexSet minkowski_sum(const PolyConvexSet& s, const PolyConvexSet& t) {
  if (s.dim != t.dim) throw DimensionMismatch("minkowski_sum: dimension mismatch");
  if (s.is_empty() || t.is_empty()) return PolyConvexSet::empty(s.dim);
  PolyConvexSet out{s.dim, {}, s.rays};
  out.rays.insert(out.rays.end(), t.rays.begin(), t.rays.end());
  for (const auto& a : s.vertices) {
    for (const auto& b : t.vertices) out.vertices.push_back(add(a, b));
  }
  return reduce(out);
}

}  // namespace infcone
