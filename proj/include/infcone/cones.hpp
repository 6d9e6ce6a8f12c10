#pragma once

// Tangent and normal cones at infinity: exact for finite unions of polyhedra
// (polyhedral sets, epigraphs of piecewise-affine functions), sampled from
// limiting constraint normals otherwise.

#include <algorithm>
#include <cmath>
#include <functional>
#include <string>
#include <vector>

#include "infcone/estimators.hpp"
#include "infcone/poly_cone.hpp"

namespace infcone {

enum class ConeMethod { ExactPolyhedral, SampledLimitingNormals };

inline const char* to_string(ConeMethod m) {
  return m == ConeMethod::ExactPolyhedral ? "exact_polyhedral" : "sampled_limiting_normals";
}

/// Relatively open face of the hyperplane arrangement of C, lying inside C.
struct FaceRecord {
  std::size_t face_id = 0;
  std::vector<std::size_t> active;  // hyperplanes containing the face
  Vec point;                        // relative-interior sample
  bool unbounded = false;           // |pi(x)| is unbounded on the face
};

struct ConeCrossCheck {
  Vec direction;
  Membership expected = Membership::Member;
  Membership observed = Membership::Inconclusive;
  [[nodiscard]] bool agrees() const { return expected == observed; }
};

struct ConePairAtInfinity {
  PolyCone tangent;
  PolyCone normal;
  ConeMethod method = ConeMethod::ExactPolyhedral;
  IndexSet index_set;
  std::vector<FaceRecord> faces;
  std::vector<ConeCrossCheck> cross_checks;
  std::vector<std::string> notes;

  [[nodiscard]] bool cross_checks_agree() const {
    return std::all_of(cross_checks.begin(), cross_checks.end(), [](const auto& c) { return c.agrees(); });
  }
};

inline constexpr std::size_t kMaxFaceConstraints = 64;

namespace detail {

struct Hyperplane {
  Vec a;  // unit normal, first nonzero coordinate positive
  double b = 0;
};

// A piece row <a,x> <= b expressed as "sign of hyperplane h is in {side, 0}".
struct PieceRow {
  std::size_t h = 0;
  int side = -1;
};

struct Arrangement {
  std::vector<Hyperplane> planes;
  std::vector<std::vector<PieceRow>> pieces;
};

inline Arrangement build_arrangement(const std::vector<std::vector<Halfspace>>& pieces, std::size_t dim) {
  Arrangement arr;
  for (const auto& rows : pieces) {
    std::vector<PieceRow> pr;
    bool empty_piece = false;
    for (const auto& r : rows) {
      const double n = norm(r.a);
      if (n < 1e-12) {
        if (r.b < -1e-12) empty_piece = true;
        continue;
      }
      Vec a = scale(r.a, 1.0 / n);
      double b = r.b / n;
      int side = -1;
      const auto lead = std::find_if(a.begin(), a.end(), [](double v) { return std::abs(v) > 1e-12; });
      if (*lead < 0) {
        a = scale(a, -1.0);
        b = -b;
        side = 1;
      }
      std::size_t h = arr.planes.size();
      for (std::size_t i = 0; i < arr.planes.size(); ++i) {
        if (max_abs(sub(arr.planes[i].a, a)) < 1e-9 && std::abs(arr.planes[i].b - b) < 1e-9 * std::max(1.0, std::abs(b))) {
          h = i;
          break;
        }
      }
      if (h == arr.planes.size()) arr.planes.push_back({a, b});
      pr.push_back({h, side});
    }
    if (!empty_piece) arr.pieces.push_back(std::move(pr));
  }
  if (arr.planes.size() > kMaxFaceConstraints) {
    throw CapabilityError("face enumeration supports at most 64 distinct constraint hyperplanes");
  }
  (void)dim;
  return arr;
}

// Relatively open face with sign vector sigma (0 = on the plane); returns an interior point.
inline std::optional<Vec> open_face_point(const Arrangement& arr, const std::vector<int>& sigma, std::size_t dim) {
  lp::Problem p(dim + 1);
  p.free_var.assign(dim + 1, true);
  p.free_var[dim] = false;
  p.objective.assign(dim + 1, 0.0);
  p.objective[dim] = -1.0;
  Vec cap(dim + 1, 0.0);
  cap[dim] = 1.0;
  p.add(cap, lp::Relation::Le, 1.0);
  for (std::size_t h = 0; h < sigma.size(); ++h) {
    Vec row(arr.planes[h].a);
    row.push_back(0.0);
    if (sigma[h] == 0) {
      p.add(row, lp::Relation::Eq, arr.planes[h].b);
    } else {
      for (auto& v : row) v *= sigma[h];
      row[dim] = -1.0;
      p.add(row, lp::Relation::Ge, sigma[h] * arr.planes[h].b);
    }
  }
  const auto r = lp::solve(p);
  if (r.status != lp::Status::Optimal || r.x[dim] <= 1e-9) return std::nullopt;
  return Vec(r.x.begin(), r.x.begin() + static_cast<std::ptrdiff_t>(dim));
}

inline bool piece_compatible(const std::vector<PieceRow>& piece, const std::vector<int>& sigma) {
  for (const auto& r : piece) {
    if (r.h < sigma.size() && sigma[r.h] != 0 && sigma[r.h] != r.side) return false;
  }
  return true;
}

// Rows (as "<a, v> <= 0") of the classical tangent cone of a piece at a face.
inline std::vector<Vec> piece_tangent_rows(const Arrangement& arr, const std::vector<PieceRow>& piece,
                                           const std::vector<int>& sigma) {
  std::vector<Vec> rows;
  for (const auto& r : piece) {
    if (sigma[r.h] == 0) rows.push_back(scale(arr.planes[r.h].a, -static_cast<double>(r.side)));
  }
  return rows;
}

inline bool projection_unbounded(const PolyCone& rec, const IndexSet& idx) {
  for (const auto& r : rec.rays) {
    if (idx.pi_norm(r) > 1e-9) return true;
  }
  for (const auto& l : rec.lineality) {
    if (idx.pi_norm(l) > 1e-9) return true;
  }
  return false;
}

inline std::vector<Vec> generator_directions(const PolyCone& k) {
  std::vector<Vec> out = k.rays;
  for (const auto& l : k.lineality) {
    out.push_back(l);
    out.push_back(scale(l, -1.0));
  }
  return out;
}

}  // namespace detail

/**
 * @brief Exact cones at infinity of a finite union of polyhedra.
 *
 * The tangent cone is the intersection, over relatively open faces of the
 * constraint arrangement that lie in C and are unbounded under pi, of the
 * classical tangent cone of C at the face. Generators are cross-checked
 * against the sampled membership test when `cross_check` is set.
 */
inline ConePairAtInfinity exact_cones_union(const std::vector<std::vector<Halfspace>>& pieces, std::size_t dim,
                                            const IndexSet& idx, const SampledSet* sampler,
                                            const LadderConfig& cfg = {}) {
  if (dim > kMaxExactDim) throw CapabilityError("exact cone engine supports ambient dimension <= 4");
  idx.validate(dim);
  const auto arr = detail::build_arrangement(pieces, dim);
  if (arr.pieces.empty()) throw std::invalid_argument("exact cones: the set is empty");
  ConePairAtInfinity out;
  out.method = ConeMethod::ExactPolyhedral;
  out.index_set = idx;

  std::vector<Vec> tangent_rows;
  bool any_unbounded = false;
  std::vector<int> sigma;
  const std::size_t m = arr.planes.size();
  std::function<void()> dfs = [&]() {
    if (!std::any_of(arr.pieces.begin(), arr.pieces.end(),
                     [&](const auto& pc) { return detail::piece_compatible(pc, sigma); })) {
      return;
    }
    if (!sigma.empty() && !detail::open_face_point(arr, sigma, dim)) return;
    if (sigma.size() == m) {
      const auto x = detail::open_face_point(arr, sigma, dim);
      if (!x) return;
      // Recession cone of the face closure.
      std::vector<Vec> ineq, eq;
      for (std::size_t h = 0; h < m; ++h) {
        if (sigma[h] == 0) eq.push_back(arr.planes[h].a);
        else ineq.push_back(scale(arr.planes[h].a, sigma[h] > 0 ? -1.0 : 1.0));
      }
      FaceRecord rec;
      rec.face_id = out.faces.size();
      for (std::size_t h = 0; h < m; ++h) {
        if (sigma[h] == 0) rec.active.push_back(h);
      }
      rec.point = *x;
      rec.unbounded = detail::projection_unbounded(cone_from_inequalities(ineq, eq, dim), idx);
      if (rec.unbounded) {
        any_unbounded = true;
        // Contingent cone: union of the containing pieces' tangent cones; use it when one contains the rest.
        std::vector<std::vector<Vec>> cands;
        for (const auto& pc : arr.pieces) {
          if (detail::piece_compatible(pc, sigma)) cands.push_back(detail::piece_tangent_rows(arr, pc, sigma));
        }
        std::vector<PolyCone> cones;
        for (const auto& rows : cands) cones.push_back(cone_from_inequalities(rows, {}, dim));
        std::optional<std::size_t> biggest;
        for (std::size_t i = 0; i < cones.size() && !biggest; ++i) {
          bool all = true;
          for (std::size_t j = 0; j < cones.size() && all; ++j) all = cone_subset(cones[j], cones[i]);
          if (all) biggest = i;
        }
        if (biggest) {
          tangent_rows.insert(tangent_rows.end(), cands[*biggest].begin(), cands[*biggest].end());
        } else {
          out.notes.push_back("face " + std::to_string(rec.face_id) +
                              " has a nonconvex contingent cone; covered by its neighbouring faces");
        }
      }
      out.faces.push_back(std::move(rec));
      return;
    }
    for (int s : {-1, 0, 1}) {
      sigma.push_back(s);
      dfs();
      sigma.pop_back();
    }
  };
  dfs();
  if (out.faces.empty()) throw std::invalid_argument("exact cones: the set is empty");
  if (!any_unbounded) throw PreconditionError("cones at infinity require pi(C) to be unbounded");

  out.tangent = cone_from_inequalities(tangent_rows, {}, dim);
  out.normal = polar_cone(out.tangent);

  if (sampler) {
    for (const auto& g : detail::generator_directions(out.tangent)) {
      out.cross_checks.push_back({g, Membership::Member, tangent_membership(*sampler, g, idx, cfg).verdict});
    }
    for (const auto& w : detail::generator_directions(out.normal)) {
      if (cone_contains(out.tangent, w)) continue;
      out.cross_checks.push_back({w, Membership::Nonmember, tangent_membership(*sampler, w, idx, cfg).verdict});
    }
    if (!out.cross_checks_agree()) out.notes.push_back("sampled membership disagrees with the exact cone");
  }
  return out;
}

/// Exact cones at infinity of a set whose constraints are all (piecewise-)affine.
inline ConePairAtInfinity exact_cones_polyhedral(const SetDesc& c, const IndexSet& idx, const LadderConfig& cfg = {},
                                                 bool cross_check = true) {
  std::vector<std::vector<Halfspace>> pieces;
  if (c.kind == SetKind::Polyhedral) {
    pieces.push_back(polyhedral_rows(c));
  } else if (auto u = polyhedral_pieces(c)) {
    pieces = std::move(*u);
  } else {
    throw CapabilityError("exact cones need affine or piecewise-affine constraints");
  }
  if (pieces.empty()) throw std::invalid_argument("exact cones: the set is empty");
  if (!cross_check) return exact_cones_union(pieces, c.dim, idx, nullptr, cfg);
  const SampledSet sampler(c);
  return exact_cones_union(pieces, c.dim, idx, &sampler, cfg);
}

/// Cones of epi f in R^{n+1} at infinity in the x coordinates, for piecewise-affine f.
inline ConePairAtInfinity epigraph_cones_piecewise_affine(const FuncDesc& f, const LadderConfig& cfg = {},
                                                          bool cross_check = true) {
  if (!is_piecewise_affine(f)) throw CapabilityError("epigraph cones: f is not piecewise-affine");
  return exact_cones_polyhedral(epigraph_set(f), IndexSet::all(f.dim), cfg, cross_check);
}

namespace detail {

struct NormalSample {
  Vec dir;
  std::size_t rung = 0;
};

// Unit direction of (g, -1) when some entries of g overflowed to +-inf.
inline std::optional<Vec> graph_normal(const Vec& g) {
  Vec d(g);
  d.push_back(-1.0);
  std::size_t infs = 0;
  for (auto v : g) infs += std::isinf(v) ? 1 : 0;
  if (infs == 0) return normalized(d);
  if (infs > 1) return std::nullopt;
  for (auto& v : d) v = std::isinf(v) ? (v > 0 ? 1.0 : -1.0) : 0.0;
  return d;
}

// Classical normal generators at a boundary point p.
inline std::vector<Vec> boundary_normals(const SampledSet& c, const SampledSet::FarPoint& p) {
  std::vector<Vec> out;
  if (c.graph()) {
    const Vec x(p.z.begin(), p.z.end() - 1);
    const auto g = gradient(c.graph()->body, x);
    if (g.gradient) {
      if (auto d = graph_normal(*g.gradient)) out.push_back(std::move(*d));
    }
    return out;
  }
  const auto& set = c.desc();
  const double tol = 1e-7 * std::max(1.0, max_abs(p.z));
  bool kink = false;
  for (std::size_t i = 0; i < set.constraints.size(); ++i) {
    if (std::abs(set.violation(i, p.z)) > tol && set.constraints[i].rel != Rel::Eq) continue;
    if (set.constraints[i].rel == Rel::Eq && set.violation(i, p.z) > tol) continue;
    const auto g = gradient(set.constraints[i].expr, p.z);
    if (!g.gradient) {
      kink = true;
      continue;
    }
    if (norm(*g.gradient) < 1e-300) continue;
    const Vec u = normalized(*g.gradient);
    switch (set.constraints[i].rel) {
      case Rel::Le:
      case Rel::Lt: out.push_back(u); break;
      case Rel::Ge:
      case Rel::Gt: out.push_back(scale(u, -1.0)); break;
      case Rel::Eq:
        out.push_back(u);
        out.push_back(scale(u, -1.0));
        break;
    }
  }
  if (out.empty() || kink) {
    // Proximal normal from the projection.
    const Vec d = sub(p.origin, p.z);
    if (norm(d) > 0) out.push_back(normalized(d));
  }
  return out;
}

}  // namespace detail

/**
 * @brief Normal cone at infinity as the conic hull of clustered limiting normals.
 *
 * Normals are collected at far boundary points on the upper half of the
 * radius ladder, clustered on the sphere with threshold 1e3 * cone_angle_tol,
 * and clusters seen on fewer than two rungs are dropped when two or more
 * rungs contribute.
 */
inline ConePairAtInfinity sampled_normal_cone(const SampledSet& c, const IndexSet& idx, const LadderConfig& cfg = {}) {
  cfg.validate();
  idx.validate(c.dim());
  if (c.dim() > kMaxExactDim) throw CapabilityError("sampled normal cone: hull computation supports dimension <= 4");
  ConePairAtInfinity out;
  out.method = ConeMethod::SampledLimitingNormals;
  out.index_set = idx;
  const std::size_t K = cfg.radii.size();
  const std::size_t first = (K - 1) / 2;
  const std::size_t count = c.exact_distance() || c.graph() ? cfg.samples_per_shell
                                                            : std::min<std::size_t>(cfg.samples_per_shell, 64);
  std::vector<detail::NormalSample> samples;
  bool any_far = false;
  for (std::size_t k = first; k < K; ++k) {
    const auto pts = c.far_samples(idx, cfg.radii[k], count, rung_seed(cfg.seed, 21, k), !c.graph());
    any_far = any_far || !pts.empty();
    for (const auto& p : pts) {
      if (!p.boundary) continue;
      for (auto& d : detail::boundary_normals(c, p)) samples.push_back({std::move(d), k});
    }
  }
  if (!any_far) throw PreconditionError("pi(C) appears bounded: no feasible points on the outer shells");

  const double theta = cfg.tol.cone_angle_tol * 1e3;
  // rep steers matching; the output generator averages the outermost rung only.
  struct Cluster {
    Vec sum;
    Vec rep;
    std::vector<std::size_t> rungs;
    Vec top_sum;
    std::size_t top_rung;
  };
  std::vector<Cluster> clusters;
  for (const auto& s : samples) {
    bool placed = false;
    for (auto& cl : clusters) {
      if (angle_between(cl.rep, s.dir) <= theta) {
        cl.sum = add(cl.sum, s.dir);
        cl.rep = normalized(cl.sum);
        if (std::find(cl.rungs.begin(), cl.rungs.end(), s.rung) == cl.rungs.end()) cl.rungs.push_back(s.rung);
        if (s.rung > cl.top_rung) {
          cl.top_rung = s.rung;
          cl.top_sum = s.dir;
        } else if (s.rung == cl.top_rung) {
          cl.top_sum = add(cl.top_sum, s.dir);
        }
        placed = true;
        break;
      }
    }
    if (!placed) clusters.push_back({s.dir, s.dir, {s.rung}, s.dir, s.rung});
  }
  std::vector<std::size_t> contributing;
  for (const auto& s : samples) {
    if (std::find(contributing.begin(), contributing.end(), s.rung) == contributing.end()) contributing.push_back(s.rung);
  }
  std::vector<Vec> reps;
  for (const auto& cl : clusters) {
    if (contributing.size() >= 2 && cl.rungs.size() < 2) continue;
    reps.push_back(normalized(cl.top_sum));
  }
  if (samples.empty()) out.notes.push_back("no boundary points on the outer shells; normal cone is {0}");
  out.notes.push_back("sampled: coverage of limiting normals is not guaranteed");
  out.normal = cone_from_generators(c.dim(), reps);
  out.tangent = polar_cone(out.normal);
  return out;
}

inline ConePairAtInfinity sampled_normal_cone(const SetDesc& c, const IndexSet& idx, const LadderConfig& cfg = {}) {
  return sampled_normal_cone(SampledSet(c), idx, cfg);
}

/// Cones of epi f at infinity (x coordinates): exact for piecewise-affine f, sampled otherwise.
inline ConePairAtInfinity epigraph_cones(const FuncDesc& f, const LadderConfig& cfg = {}, bool cross_check = false) {
  if (is_piecewise_affine(f) && f.dim + 1 <= kMaxExactDim) return epigraph_cones_piecewise_affine(f, cfg, cross_check);
  return sampled_normal_cone(SampledSet::epigraph(f), IndexSet::all(f.dim), cfg);
}

/// Cones of C at infinity: exact when the constraints are (piecewise-)affine and dim <= 4, sampled otherwise.
inline ConePairAtInfinity set_cones_at_infinity(const SetDesc& c, const IndexSet& idx, const LadderConfig& cfg = {},
                                                bool cross_check = false) {
  if (c.dim <= kMaxExactDim) {
    try {
      return exact_cones_polyhedral(c, idx, cfg, cross_check);
    } catch (const CapabilityError&) {
    }
  }
  return sampled_normal_cone(c, idx, cfg);
}

struct PointednessReport {
  bool pointed = true;
  bool tangent_has_interior = true;
  [[nodiscard]] bool consistent() const { return pointed == tangent_has_interior; }
};

/// The normal cone is pointed iff the tangent cone has nonempty interior.
inline PointednessReport pointedness_check(const ConePairAtInfinity& pair) {
  PointednessReport r;
  r.pointed = is_pointed(pair.normal);
  std::vector<Vec> gens = pair.tangent.rays;
  gens.insert(gens.end(), pair.tangent.lineality.begin(), pair.tangent.lineality.end());
  r.tangent_has_interior = linalg::rank(gens, pair.tangent.dim) == pair.tangent.dim;
  return r;
}

}  // namespace infcone
