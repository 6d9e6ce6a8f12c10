#pragma once

#include <algorithm>
#include <cstddef>
#include <vector>

#include "infcone/linalg.hpp"
#include "infcone/lp.hpp"
#include "infcone/vec.hpp"

namespace infcone {

/// Largest ambient dimension served by the exact vertex/facet enumeration.
inline constexpr std::size_t kMaxExactDim = 4;

/**
 * @brief Closed convex polyhedral cone in V-representation.
 *
 * The represented set is { sum a_i r_i + sum b_j l_j : a_i >= 0, b_j real }.
 * Values produced by the library are canonical: rays are unit length,
 * orthogonal to the lineality space, irredundant and sorted
 * lexicographically; the lineality basis is orthonormal.
 */
struct PolyCone {
  std::size_t dim = 0;
  std::vector<Vec> rays;
  std::vector<Vec> lineality;

  static PolyCone zero(std::size_t dim) { return PolyCone{dim, {}, {}}; }
  static PolyCone whole(std::size_t dim) {
    PolyCone k{dim, {}, {}};
    for (std::size_t i = 0; i < dim; ++i) k.lineality.push_back(unit_axis(dim, i));
    return k;
  }

  [[nodiscard]] bool is_zero() const { return rays.empty() && lineality.empty(); }
  [[nodiscard]] bool is_whole() const { return lineality.size() == dim; }

  void validate() const {
    for (const auto& r : rays) {
      if (r.size() != dim) throw DimensionMismatch("PolyCone: ray dimension mismatch");
    }
    for (const auto& l : lineality) {
      if (l.size() != dim) throw DimensionMismatch("PolyCone: lineality dimension mismatch");
    }
  }
};

namespace detail {

inline void canonical_sign(Vec& v) {
  for (double& x : v) {
    if (std::abs(x) > 1e-12) {
      if (x < 0) {
        for (double& y : v) y = -y;
      }
      return;
    }
  }
}

inline void sort_lex(std::vector<Vec>& vs) {
  std::sort(vs.begin(), vs.end(), [](const Vec& a, const Vec& b) { return lex_less(a, b, 1e-12); });
}

inline void push_unique_direction(std::vector<Vec>& out, Vec dir, double angle_tol) {
  for (const auto& d : out) {
    if (angle_between(d, dir) <= angle_tol) return;
  }
  out.push_back(std::move(dir));
}

// Removes components along an orthonormal basis.
inline Vec project_out(Vec v, const std::vector<Vec>& basis) {
  for (const auto& b : basis) {
    const double c = dot(v, b);
    for (std::size_t i = 0; i < v.size(); ++i) v[i] -= c * b[i];
  }
  return v;
}

// Calls fn(subset) for every k-subset of {0..n-1}.
template <class Fn>
void for_each_subset(std::size_t n, std::size_t k, Fn&& fn) {
  std::vector<std::size_t> idx(k);
  for (std::size_t i = 0; i < k; ++i) idx[i] = i;
  if (k > n) return;
  while (true) {
    fn(idx);
    std::size_t i = k;
    while (i > 0) {
      --i;
      if (idx[i] != i + n - k) break;
      if (i == 0) return;
    }
    if (k == 0 || idx[i] == i + n - k) return;
    ++idx[i];
    for (std::size_t j = i + 1; j < k; ++j) idx[j] = idx[j - 1] + 1;
  }
}

}  // namespace detail

/**
 * @brief V-representation of { w : A w <= 0, E w = 0 }.
 *
 * Extreme rays of the pointed part are found by enumerating tight row
 * subsets of size (d - 1), where d is the dimension of the pointed part.
 * Capped at kMaxExactDim.
 */
inline PolyCone cone_from_inequalities(const std::vector<Vec>& ineq, const std::vector<Vec>& eq,
                                       std::size_t dim, double tol = 1e-9) {
  if (dim > kMaxExactDim) {
    throw CapabilityError("exact cone enumeration supports ambient dimension <= 4, got " + std::to_string(dim));
  }
  std::vector<Vec> a;
  for (const auto& r : ineq) {
    if (r.size() != dim) throw DimensionMismatch("cone_from_inequalities: row dimension mismatch");
    const double n = norm(r);
    if (n > tol) a.push_back(scale(r, 1.0 / n));
  }
  std::vector<Vec> e;
  for (const auto& r : eq) {
    if (r.size() != dim) throw DimensionMismatch("cone_from_inequalities: row dimension mismatch");
    const double n = norm(r);
    if (n > tol) e.push_back(scale(r, 1.0 / n));
  }

  std::vector<Vec> all = a;
  all.insert(all.end(), e.begin(), e.end());
  PolyCone out{dim, {}, linalg::null_space(all, dim)};

  const std::size_t span_e = linalg::rank(e, dim);
  const std::size_t lin = out.lineality.size();
  const std::size_t d = dim - span_e - lin;  // dimension of the pointed part's ambient space
  if (d > 0) {
    std::vector<Vec> base = e;
    base.insert(base.end(), out.lineality.begin(), out.lineality.end());
    auto consider = [&](const std::vector<std::size_t>& subset) {
      std::vector<Vec> rows = base;
      for (auto i : subset) rows.push_back(a[i]);
      auto ns = linalg::null_space(rows, dim);
      if (ns.size() != 1) return;
      for (double sgn : {1.0, -1.0}) {
        Vec u = scale(ns[0], sgn);
        bool ok = true;
        for (const auto& row : a) {
          if (dot(row, u) > 1e-7) {
            ok = false;
            break;
          }
        }
        if (ok) detail::push_unique_direction(out.rays, u, 1e-7);
      }
    };
    detail::for_each_subset(a.size(), d - 1, consider);
  }
  for (auto& r : out.rays) r = normalized(r);
  for (auto& l : out.lineality) detail::canonical_sign(l);
  detail::sort_lex(out.rays);
  detail::sort_lex(out.lineality);
  return out;
}

/// { w : <v, w> <= 0 for all v in K }.
inline PolyCone polar_cone(const PolyCone& k) {
  k.validate();
  return cone_from_inequalities(k.rays, k.lineality, k.dim);
}

/// Canonical (irredundant, sorted) form of K.
inline PolyCone canonicalize(const PolyCone& k) { return polar_cone(polar_cone(k)); }

/// Builds a canonical cone from arbitrary generators.
inline PolyCone cone_from_generators(std::size_t dim, std::vector<Vec> rays, std::vector<Vec> lineality = {}) {
  PolyCone k{dim, std::move(rays), std::move(lineality)};
  k.validate();
  return canonicalize(k);
}

/// Facet description of K: K = { w : <g, w> <= 0 for g in rays, <h, w> = 0 for h in lineality }.
struct HalfspaceForm {
  std::vector<Vec> normals;
  std::vector<Vec> equalities;
};

inline HalfspaceForm halfspace_form(const PolyCone& k) {
  const PolyCone p = polar_cone(k);
  return {p.rays, p.lineality};
}

/// Membership test with a relative tolerance on the facet inequalities.
inline bool cone_contains(const HalfspaceForm& h, const Vec& v, double tol) {
  const double scale_v = std::max(1.0, norm(v));
  for (const auto& g : h.normals) {
    if (dot(g, v) > tol * scale_v) return false;
  }
  for (const auto& q : h.equalities) {
    if (std::abs(dot(q, v)) > tol * scale_v) return false;
  }
  return true;
}

inline bool cone_contains(const PolyCone& k, const Vec& v, double tol = 1e-6) {
  if (v.size() != k.dim) throw DimensionMismatch("cone_contains: dimension mismatch");
  return cone_contains(halfspace_form(k), v, tol);
}

/// Interior test: strict facet inequalities and no equalities.
inline bool cone_interior_contains(const PolyCone& k, const Vec& v, double tol = 1e-6) {
  const auto h = halfspace_form(k);
  if (!h.equalities.empty()) return false;
  const double scale_v = std::max(1.0, norm(v));
  for (const auto& g : h.normals) {
    if (dot(g, v) > -tol * scale_v) return false;
  }
  return true;
}

/// A is a subset of B, tested on A's generators.
inline bool cone_subset(const PolyCone& a, const PolyCone& b, double tol = 1e-6) {
  if (a.dim != b.dim) throw DimensionMismatch("cone_subset: dimension mismatch");
  const auto h = halfspace_form(b);
  for (const auto& r : a.rays) {
    if (!cone_contains(h, r, tol)) return false;
  }
  for (const auto& l : a.lineality) {
    if (!cone_contains(h, l, tol) || !cone_contains(h, scale(l, -1.0), tol)) return false;
  }
  return true;
}

inline bool set_eq(const PolyCone& a, const PolyCone& b, double tol = 1e-6) {
  return cone_subset(a, b, tol) && cone_subset(b, a, tol);
}

/// Intersection of two cones via their facet descriptions.
inline PolyCone cone_intersection(const PolyCone& a, const PolyCone& b) {
  if (a.dim != b.dim) throw DimensionMismatch("cone_intersection: dimension mismatch");
  auto ha = halfspace_form(a);
  auto hb = halfspace_form(b);
  ha.normals.insert(ha.normals.end(), hb.normals.begin(), hb.normals.end());
  ha.equalities.insert(ha.equalities.end(), hb.equalities.begin(), hb.equalities.end());
  return cone_from_inequalities(ha.normals, ha.equalities, a.dim);
}

/// K is pointed iff its lineality space is {0}.
inline bool is_pointed(const PolyCone& k) { return canonicalize(k).lineality.empty(); }

/// -K
inline PolyCone negate(const PolyCone& k) {
  PolyCone out = k;
  for (auto& r : out.rays) r = scale(r, -1.0);
  return canonicalize(out);
}

}  // namespace infcone
