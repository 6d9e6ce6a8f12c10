#pragma once

// Subgradients at infinity: three routes to the set, singular subgradients,
// the Lipschitz-at-infinity classifier, the directional Lipschitz test, the
// sum rule check and distance-function subgradients.

#include <algorithm>
#include <cmath>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "infcone/cones.hpp"
#include "infcone/estimators.hpp"
#include "infcone/poly_set.hpp"

namespace infcone {

enum class SubgradientRoute { EpigraphPolar, GradientSampling, SupportReconstruction, PerpendicularLimits };

inline const char* to_string(SubgradientRoute r) {
  switch (r) {
    case SubgradientRoute::EpigraphPolar: return "epigraph_polar";
    case SubgradientRoute::GradientSampling: return "gradient_sampling";
    case SubgradientRoute::SupportReconstruction: return "support_reconstruction";
    case SubgradientRoute::PerpendicularLimits: return "perpendicular_limits";
  }
  return "?";
}

struct DirectionEstimate {
  Vec direction;
  LimitEstimate estimate;
};

struct SubgradientDiagnostics {
  std::vector<std::string> notes;
  bool outer_approximation = false;
  bool unvalidated_hypothesis = false;
  std::optional<PolyCone> normal_cone;          // epigraph polar
  std::optional<LimitEstimate> at_zero;         // support reconstruction: f^(inf; 0)
  std::vector<DirectionEstimate> directions;    // support reconstruction
  std::size_t inconclusive_directions = 0;
  std::vector<double> rung_gradient_norms;      // gradient sampling, +inf on overflow
  bool gradient_norms_diverge = false;
  std::size_t gradients_used = 0;
  std::size_t nondifferentiable_skipped = 0;
  std::size_t clusters_dropped = 0;
  bool perpendiculars_found = true;             // distance route
  std::optional<bool> cross_check_agrees;       // distance route vs gradient sampling
};

/// A closed convex set of subgradients at infinity with the route that produced it.
struct SubgradientSetAtInfinity {
  PolyConvexSet set;
  SubgradientRoute route = SubgradientRoute::EpigraphPolar;
  SubgradientDiagnostics diagnostics;
};

// ---------------------------------------------------------------------------
// Slices of the epigraph normal cone

/// { xi : (xi, -1) in N }.
inline PolyConvexSet normal_cone_slice(const PolyCone& normal, std::size_t n) {
  if (normal.dim != n + 1) throw DimensionMismatch("normal_cone_slice: cone must live in R^(n+1)");
  const auto h = halfspace_form(normal);
  std::vector<Vec> a;
  Vec b;
  // <g_x, xi> - g_last <= 0
  for (const auto& g : h.normals) {
    a.emplace_back(g.begin(), g.end() - 1);
    b.push_back(g.back());
  }
  for (const auto& q : h.equalities) {
    a.emplace_back(q.begin(), q.end() - 1);
    b.push_back(q.back());
    a.push_back(scale(a.back(), -1.0));
    b.push_back(-q.back());
  }
  return polyhedron_from_inequalities(a, b, n);
}

/// { xi : (xi, 0) in N }.
inline PolyCone singular_cone_slice(const PolyCone& normal, std::size_t n) {
  if (normal.dim != n + 1) throw DimensionMismatch("singular_cone_slice: cone must live in R^(n+1)");
  const auto h = halfspace_form(normal);
  std::vector<Vec> ineq, eq;
  for (const auto& g : h.normals) ineq.emplace_back(g.begin(), g.end() - 1);
  for (const auto& q : h.equalities) eq.emplace_back(q.begin(), q.end() - 1);
  return cone_from_inequalities(ineq, eq, n);
}

// ---------------------------------------------------------------------------
// Route 1: exact epigraph polar

inline SubgradientSetAtInfinity subgradients_epigraph_polar(const FuncDesc& f, const LadderConfig& cfg = {}) {
  if (!is_piecewise_affine(f)) {
    throw CapabilityError("epigraph polar route needs a piecewise-affine function");
  }
  const auto pair = epigraph_cones_piecewise_affine(f, cfg, false);
  SubgradientSetAtInfinity out;
  out.route = SubgradientRoute::EpigraphPolar;
  out.set = normal_cone_slice(pair.normal, f.dim);
  out.diagnostics.normal_cone = pair.normal;
  out.diagnostics.notes = pair.notes;
  return out;
}

// ---------------------------------------------------------------------------
// Route 2: gradient sampling

/// Gradient oracle result: a gradient, an overflowing gradient, or a kink.
struct GradientSample {
  std::optional<Vec> gradient;
  bool overflow = false;
};

template <class G>
concept GradientField = ScalarField<G> && requires(const G& g, const Vec& x) {
  { g.gradient(x) } -> std::convertible_to<GradientSample>;
};

struct FunctionGradientField {
  const FuncDesc* f;
  [[nodiscard]] std::size_t dim() const { return f->dim; }
  [[nodiscard]] long double value(const Vec& x) const { return eval_long(*f, x); }
  [[nodiscard]] GradientSample gradient(const Vec& x) const {
    GradientSample s;
    try {
      auto g = infcone::gradient(f->body, x);
      if (!std::isfinite(g.value)) {
        s.overflow = true;
      } else if (g.gradient) {
        if (std::all_of(g.gradient->begin(), g.gradient->end(), [](double t) { return std::isfinite(t); })) {
          s.gradient = std::move(g.gradient);
        } else {
          s.overflow = true;
        }
      }
    } catch (const UndefinedOperation&) {
    }
    return s;
  }
};

/// d_C with its gradient (x - P(x))/d off C, 0 deep inside C, a kink on the boundary.
struct DistanceGradientField {
  const SampledSet* c;
  [[nodiscard]] std::size_t dim() const { return c->dim(); }
  [[nodiscard]] long double value(const Vec& x) const {
    const auto r = c->distance(x);
    return r ? r->distance : std::numeric_limits<long double>::quiet_NaN();
  }
  [[nodiscard]] GradientSample gradient(const Vec& x) const {
    GradientSample s;
    const auto r = c->distance(x);
    if (!r) return s;
    if (r->distance > 1e-12 * std::max(1.0, max_abs(x))) {
      s.gradient = scale(sub(x, r->nearest.front()), 1.0 / r->distance);
      return s;
    }
    const double h = 1e-6 * std::max(1.0, max_abs(x));
    for (std::size_t i = 0; i < x.size(); ++i) {
      for (double sg : {1.0, -1.0}) {
        if (!c->contains(axpy(x, sg * h, unit_axis(x.size(), i)), 0.0)) return s;
      }
    }
    s.gradient = Vec(x.size(), 0.0);
    return s;
  }
};

namespace detail {

struct GradientCluster {
  Vec anchor;
  Vec top_sum;
  std::size_t top_rung = 0;
  std::size_t top_count = 0;
  std::size_t count = 0;
  std::set<std::size_t> rungs;
};

inline void add_to_clusters(std::vector<GradientCluster>& cs, const Vec& g, std::size_t rung, double theta) {
  const double thr = theta * std::max(1.0, norm(g));
  GradientCluster* best = nullptr;
  double best_d = thr;
  for (auto& c : cs) {
    const double d = distance(c.anchor, g);
    if (d <= best_d) {
      best_d = d;
      best = &c;
    }
  }
  if (!best) {
    cs.push_back(GradientCluster{g, g, rung, 1, 1, {rung}});
    return;
  }
  ++best->count;
  best->rungs.insert(rung);
  if (rung > best->top_rung) {
    best->top_rung = rung;
    best->top_sum = g;
    best->top_count = 1;
  } else if (rung == best->top_rung) {
    best->top_sum = add(best->top_sum, g);
    ++best->top_count;
  }
}

}  // namespace detail

/**
 * @brief co{ lim grad f(x) : x -> infinity }, sampled on the upper half of the ladder.
 *
 * Kinks are retried with a deterministic jitter of 10 abs_tol. Gradients are
 * clustered; a limit must appear on the outermost contributing rung, and
 * single-point clusters are dropped as noise. The result is only meaningful
 * when f is Lipschitz at infinity; pass `lipschitz_validated` once the
 * classifier has said so, otherwise it is labeled as an unvalidated hypothesis.
 */
template <GradientField G>
SubgradientSetAtInfinity subgradients_gradient_sampling(const G& f, const LadderConfig& cfg, const IndexSet& idx,
                                                        bool lipschitz_validated = false) {
  cfg.validate();
  const std::size_t n = f.dim();
  idx.validate(n);
  const std::size_t K = cfg.radii.size();
  const std::size_t k0 = (K - 1) / 2;
  const double theta = 1e3 * cfg.tol.cone_angle_tol;
  const double jitter = 10 * cfg.tol.abs_tol;

  SubgradientSetAtInfinity out;
  out.route = SubgradientRoute::GradientSampling;
  auto& diag = out.diagnostics;
  diag.unvalidated_hypothesis = !lipschitz_validated;
  if (!lipschitz_validated) diag.notes.push_back("unvalidated hypothesis: Lipschitz at infinity not established");

  std::vector<detail::GradientCluster> clusters;
  std::size_t top_rung = 0;
  bool any = false;
  for (std::size_t k = k0; k < K; ++k) {
    const auto pts = shell_points(n, idx, cfg.radii[k], cfg.samples_per_shell, rung_seed(cfg.seed, 31, k));
    Rng rng(rung_seed(cfg.seed, 32, k));
    double max_norm = 0;
    for (const auto& x : pts) {
      GradientSample g = f.gradient(x);
      for (int tries = 0; !g.gradient && !g.overflow && tries < 4; ++tries) {
        Vec u(n);
        for (auto& t : u) t = rng.normal();
        g = f.gradient(axpy(x, jitter, normalized(u)));
      }
      if (g.overflow) {
        max_norm = std::numeric_limits<double>::infinity();
        continue;
      }
      if (!g.gradient) {
        ++diag.nondifferentiable_skipped;
        continue;
      }
      max_norm = std::max(max_norm, norm(*g.gradient));
      detail::add_to_clusters(clusters, *g.gradient, k, theta);
      ++diag.gradients_used;
      top_rung = std::max(top_rung, k);
      any = true;
    }
    diag.rung_gradient_norms.push_back(max_norm);
  }
  if (!any) throw EstimateUnavailable("gradient sampling: every sampled point was nondifferentiable");

  const auto& norms = diag.rung_gradient_norms;
  if (!std::isfinite(norms.back())) {
    diag.gradient_norms_diverge = true;
  } else if (norms.size() >= 3) {
    std::vector<long double> tail(norms.end() - 3, norms.end());
    diag.gradient_norms_diverge = detail::growth_sign(tail) > 0;
  }
  if (diag.gradient_norms_diverge) diag.notes.push_back("gradient norms diverge: evidence against Lipschitz at infinity");

  std::vector<Vec> reps;
  for (const auto& c : clusters) {
    if (c.top_rung != top_rung || (c.count == 1 && c.rungs.size() < 3)) {
      ++diag.clusters_dropped;
      continue;
    }
    reps.push_back(scale(c.top_sum, 1.0 / static_cast<double>(c.top_count)));
  }
  if (reps.empty()) throw EstimateUnavailable("gradient sampling: no gradient limit survived clustering");
  out.set = convex_hull(reps);
  return out;
}

inline SubgradientSetAtInfinity subgradients_gradient_sampling(const FuncDesc& f, const LadderConfig& cfg = {},
                                                               bool lipschitz_validated = false) {
  return subgradients_gradient_sampling(FunctionGradientField{&f}, cfg, IndexSet::all(f.dim), lipschitz_validated);
}

// ---------------------------------------------------------------------------
// Route 3: support reconstruction

/// Axes and sign diagonals (2n + 2^n directions) up to n = 3; the sphere grid beyond.
inline std::vector<Vec> reconstruction_grid(std::size_t n) {
  if (n > 3) return direction_grid(n);
  std::vector<Vec> out;
  for (std::size_t i = 0; i < n; ++i) {
    out.push_back(unit_axis(n, i, 1.0));
    out.push_back(unit_axis(n, i, -1.0));
  }
  if (n == 1) return out;
  for (std::size_t mask = 0; mask < (std::size_t{1} << n); ++mask) {
    Vec d(n);
    for (std::size_t i = 0; i < n; ++i) d[i] = (mask >> i) & 1 ? -1.0 : 1.0;
    out.push_back(normalized(d));
  }
  return out;
}

/// Slack added to an estimate before it becomes a halfspace bound.
inline double support_slack(const LimitEstimate& e) {
  return std::max(e.error_bar, 1e-9 * std::max(1.0, std::abs(e.value->value())));
}

/**
 * @brief Outer approximation { xi : <xi, v> <= f^(inf; v) } from a table of
 * upper subderivative estimates; empty when the estimate at 0 is -inf.
 */
inline SubgradientSetAtInfinity subgradients_from_estimates(std::size_t n, const LimitEstimate& at_zero,
                                                            std::vector<DirectionEstimate> table) {
  SubgradientSetAtInfinity out;
  out.route = SubgradientRoute::SupportReconstruction;
  auto& diag = out.diagnostics;
  diag.outer_approximation = true;
  diag.at_zero = at_zero;
  diag.directions = std::move(table);
  if (at_zero.is_neg_inf()) {
    out.set = PolyConvexSet::empty(n);
    diag.notes.push_back("upper subderivative at 0 is -inf: empty set");
    return out;
  }
  struct Row {
    const Vec* dir;
    double value, slack;
    bool used = false;
  };
  std::vector<Row> rows;
  for (const auto& d : diag.directions) {
    const auto& e = d.estimate;
    if (!e.value) {
      ++diag.inconclusive_directions;
      continue;
    }
    if (e.is_neg_inf()) {
      out.set = PolyConvexSet::empty(n);
      diag.notes.push_back("upper subderivative is -inf along a grid direction: empty set");
      return out;
    }
    if (e.is_pos_inf()) continue;
    rows.push_back({&d.direction, e.value->value(), support_slack(e)});
  }
  // Opposite bounds closer than their error bars pin a hyperplane; an explicit
  // equality avoids a near-degenerate slab in the vertex enumeration.
  std::vector<Vec> a, aeq;
  Vec b, beq;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (std::size_t j = i + 1; j < rows.size() && !rows[i].used; ++j) {
      if (rows[j].used || norm(add(*rows[i].dir, *rows[j].dir)) > 1e-12) continue;
      if (std::abs(rows[i].value + rows[j].value) > rows[i].slack + rows[j].slack) continue;
      aeq.push_back(*rows[i].dir);
      beq.push_back(0.5 * (rows[i].value - rows[j].value));
      rows[i].used = rows[j].used = true;
    }
  }
  for (const auto& r : rows) {
    if (r.used) continue;
    a.push_back(*r.dir);
    b.push_back(r.value + r.slack);
  }
  if (!aeq.empty()) diag.notes.push_back(std::to_string(aeq.size()) + " thin slab(s) treated as hyperplanes");
  if (2 * diag.inconclusive_directions > diag.directions.size()) {
    throw EstimateUnavailable("support reconstruction: more than half of the grid is inconclusive");
  }
  if (diag.inconclusive_directions) {
    diag.notes.push_back(std::to_string(diag.inconclusive_directions) + " grid direction(s) inconclusive and skipped");
  }
  out.set = polyhedron_from_inequalities(a, b, n, aeq, beq);
  return out;
}

inline std::vector<DirectionEstimate> subderivative_table(const FuncDesc& f, const std::vector<Vec>& dirs,
                                                          const LadderConfig& cfg) {
  std::vector<DirectionEstimate> out;
  for (const auto& v : dirs) out.push_back({v, upper_subderivative(f, v, cfg)});
  return out;
}

inline SubgradientSetAtInfinity subgradients_support_reconstruction(const FuncDesc& f, const LadderConfig& cfg = {},
                                                                    std::optional<std::vector<Vec>> directions = {}) {
  const auto dirs = directions ? *directions : reconstruction_grid(f.dim);
  const auto zero = upper_subderivative(f, Vec(f.dim, 0.0), cfg);
  if (zero.is_neg_inf()) return subgradients_from_estimates(f.dim, zero, {});
  return subgradients_from_estimates(f.dim, zero, subderivative_table(f, dirs, cfg));
}

// ---------------------------------------------------------------------------
// Singular subgradients

inline PolyCone singular_subgradients(const FuncDesc& f, const LadderConfig& cfg = {}) {
  return singular_cone_slice(epigraph_cones(f, cfg).normal, f.dim);
}

// ---------------------------------------------------------------------------
// Lipschitz at infinity

enum class ConditionStatus { Pass, Fail, Inconclusive };

inline const char* to_string(ConditionStatus s) {
  switch (s) {
    case ConditionStatus::Pass: return "pass";
    case ConditionStatus::Fail: return "fail";
    case ConditionStatus::Inconclusive: return "inconclusive";
  }
  return "?";
}

struct ConditionResult {
  std::string id;  // "i", "iv", "v", "vi"
  ConditionStatus status = ConditionStatus::Inconclusive;
  std::string detail;
};

enum class LipschitzClass { LipschitzAtInfinity, NotLipschitz, Inconclusive };

inline const char* to_string(LipschitzClass c) {
  switch (c) {
    case LipschitzClass::LipschitzAtInfinity: return "lipschitz_at_infinity";
    case LipschitzClass::NotLipschitz: return "not_lipschitz";
    case LipschitzClass::Inconclusive: return "inconclusive";
  }
  return "?";
}

struct LipschitzVerdict {
  LipschitzClass verdict = LipschitzClass::Inconclusive;
  std::vector<ConditionResult> conditions;
  std::optional<double> constant;  // L
  std::optional<double> radius;    // R
  std::optional<std::pair<Vec, Vec>> witness;  // pair with the largest slope on the outermost shell
  std::vector<double> rung_slopes;
  std::optional<SubgradientSetAtInfinity> subgradients;
  bool coherent = true;

  [[nodiscard]] const ConditionResult* condition(const std::string& id) const {
    for (const auto& c : conditions) {
      if (c.id == id) return &c;
    }
    return nullptr;
  }
};

namespace detail {

inline ConditionResult lipschitz_condition_subgradients(const FuncDesc& f, const LadderConfig& cfg,
                                                        std::optional<SubgradientSetAtInfinity>& set_out) {
  ConditionResult r{"i", ConditionStatus::Inconclusive, {}};
  try {
    auto s = is_piecewise_affine(f) && f.dim + 1 <= kMaxExactDim ? subgradients_epigraph_polar(f, cfg)
                                                                   : subgradients_support_reconstruction(f, cfg);
    if (s.set.is_empty()) {
      r.status = ConditionStatus::Fail;
      r.detail = "subgradient set is empty";
    } else if (!s.set.is_bounded()) {
      r.status = s.diagnostics.inconclusive_directions ? ConditionStatus::Inconclusive : ConditionStatus::Fail;
      r.detail = "subgradient set is unbounded";
    } else {
      r.status = ConditionStatus::Pass;
      r.detail = "subgradient set is nonempty and compact";
    }
    r.detail += std::string(" (") + to_string(s.route) + ")";
    set_out = std::move(s);
  } catch (const EstimateUnavailable& e) {
    r.detail = e.what();
  }
  return r;
}

// Two-point slopes |f(y) - f(x)| / |y - x| with |y - x| in {1, 0.01} on every shell.
inline ConditionResult lipschitz_condition_slopes(const FuncDesc& f, const LadderConfig& cfg, LipschitzVerdict& v) {
  ConditionResult r{"iv", ConditionStatus::Inconclusive, {}};
  const std::size_t n = f.dim;
  const std::size_t K = cfg.radii.size();
  std::vector<long double> slopes;
  long double witness_slope = -1;
  for (std::size_t k = 0; k < K; ++k) {
    const auto pts = shell_points(n, IndexSet::all(n), cfg.radii[k], cfg.samples_per_shell, rung_seed(cfg.seed, 33, k));
    Rng rng(rung_seed(cfg.seed, 34, k));
    long double best = 0;
    for (const auto& x : pts) {
      Vec u(n);
      for (auto& t : u) t = rng.normal();
      u = normalized(u);
      for (double delta : {1.0, 0.01}) {
        const Vec y = axpy(x, delta, u);
        long double fx, fy;
        try {
          fx = eval_long(f, x);
          fy = eval_long(f, y);
        } catch (const UndefinedOperation&) {
          continue;
        }
        if (!std::isfinite(fx) || !std::isfinite(fy)) {
          best = kLongInf;
          continue;
        }
        const long double q = std::abs(fy - fx) / static_cast<long double>(distance(x, y));
        best = std::max(best, q);
        // Witness: the largest slope that can be checked in finite arithmetic.
        if (q >= witness_slope) {
          witness_slope = q;
          v.witness = std::pair{x, y};
        }
      }
    }
    slopes.push_back(best);
    v.rung_slopes.push_back(static_cast<double>(std::min<long double>(best, std::numeric_limits<double>::max())));
  }
  const long double a = slopes[K >= 3 ? K - 3 : 0], b = slopes[K >= 2 ? K - 2 : 0], c = slopes.back();
  if (detail::overflows(c) || (c > 10 * a && c >= b && b >= a && c > cfg.tol.abs_tol)) {
    r.status = ConditionStatus::Fail;
    r.detail = "two-point slopes grow along the ladder";
  } else if (c <= 1.1L * std::max(a, b) + cfg.tol.abs_tol) {
    r.status = ConditionStatus::Pass;
    v.constant = static_cast<double>(std::max({a, b, c}));
    v.radius = cfg.radii[K >= 3 ? K - 3 : 0];
    r.detail = "two-point slopes stable on the outer shells";
  } else {
    r.detail = "two-point slopes neither stable nor clearly growing";
  }
  return r;
}

inline ConditionResult lipschitz_condition_clarke(const FuncDesc& f, const LadderConfig& cfg) {
  ConditionResult r{"v", ConditionStatus::Pass, "Clarke derivative finite on +-e_i"};
  for (std::size_t i = 0; i < f.dim; ++i) {
    for (double s : {1.0, -1.0}) {
      LimitEstimate e;
      try {
        e = clarke_derivative_at_infinity(f, unit_axis(f.dim, i, s), cfg);
      } catch (const EstimateUnavailable&) {
      }
      if (e.value && !e.value->is_finite()) {
        r.status = ConditionStatus::Fail;
        r.detail = "Clarke derivative infinite along " + std::string(s > 0 ? "+" : "-") + "e" + std::to_string(i + 1);
        return r;
      }
      if (!e.value) {
        r.status = ConditionStatus::Inconclusive;
        r.detail = "Clarke derivative estimate inconclusive";
      }
    }
  }
  return r;
}

inline ConditionResult lipschitz_condition_singular(const FuncDesc& f, const LadderConfig& cfg) {
  ConditionResult r{"vi", ConditionStatus::Inconclusive, {}};
  try {
    const auto s = singular_subgradients(f, cfg);
    r.status = s.is_zero() ? ConditionStatus::Pass : ConditionStatus::Fail;
    r.detail = s.is_zero() ? "singular subgradients are {0}" : "nonzero singular subgradients";
  } catch (const std::exception& e) {
    r.detail = e.what();
  }
  return r;
}

}  // namespace detail

/**
 * @brief Aggregates four equivalent characterizations: a nonempty compact
 * subgradient set, stable two-point slopes, finite Clarke derivatives on the
 * axes and trivial singular subgradients.
 */
inline LipschitzVerdict classify_lipschitz_at_infinity(const FuncDesc& f, const LadderConfig& cfg = {}) {
  cfg.validate();
  LipschitzVerdict v;
  std::optional<SubgradientSetAtInfinity> set;
  v.conditions.push_back(detail::lipschitz_condition_subgradients(f, cfg, set));
  v.conditions.push_back(detail::lipschitz_condition_slopes(f, cfg, v));
  v.conditions.push_back(detail::lipschitz_condition_clarke(f, cfg));
  v.conditions.push_back(detail::lipschitz_condition_singular(f, cfg));
  std::size_t pass = 0, fail = 0;
  for (const auto& c : v.conditions) {
    pass += c.status == ConditionStatus::Pass;
    fail += c.status == ConditionStatus::Fail;
  }
  v.coherent = pass == 0 || fail == 0;
  if (pass >= 2 && fail == 0) {
    v.verdict = LipschitzClass::LipschitzAtInfinity;
  } else if (fail >= 2 && pass == 0) {
    v.verdict = LipschitzClass::NotLipschitz;
  }
  if (v.verdict != LipschitzClass::LipschitzAtInfinity) {
    v.constant.reset();
    v.radius.reset();
  }
  v.subgradients = std::move(set);
  return v;
}

/// Best available route: exact, then gradient sampling for Lipschitz f, then support reconstruction.
inline SubgradientSetAtInfinity subgradients_best(const FuncDesc& f, const LadderConfig& cfg = {},
                                                  const LipschitzVerdict* known = nullptr) {
  if (is_piecewise_affine(f) && f.dim + 1 <= kMaxExactDim) return subgradients_epigraph_polar(f, cfg);
  std::optional<LipschitzVerdict> local;
  if (!known) known = &local.emplace(classify_lipschitz_at_infinity(f, cfg));
  if (known->verdict == LipschitzClass::LipschitzAtInfinity) {
    try {
      return subgradients_gradient_sampling(f, cfg, true);
    } catch (const EstimateUnavailable&) {
    }
  }
  if (known->subgradients && known->subgradients->route == SubgradientRoute::SupportReconstruction) {
    return *known->subgradients;
  }
  return subgradients_support_reconstruction(f, cfg);
}

// ---------------------------------------------------------------------------
// Directional Lipschitz test

enum class TriState { Yes, No, Inconclusive };

inline const char* to_string(TriState t) {
  switch (t) {
    case TriState::Yes: return "yes";
    case TriState::No: return "no";
    case TriState::Inconclusive: return "inconclusive";
  }
  return "?";
}

struct DirectionalLipschitzResult {
  TriState verdict = TriState::Inconclusive;
  TriState primary = TriState::Inconclusive;  // dagger derivative finite
  TriState dual = TriState::Inconclusive;     // (v, r) interior to the epigraph tangent cone
  LimitEstimate dagger;
  InteriorTestResult interior;
  double r = 0;
  std::vector<std::string> notes;

  [[nodiscard]] bool channels_agree() const { return primary == dual && primary != TriState::Inconclusive; }
};

inline DirectionalLipschitzResult directionally_lipschitz_test(const FuncDesc& f, const Vec& v,
                                                               const LadderConfig& cfg = {}) {
  if (v.size() != f.dim) throw DimensionMismatch("directionally_lipschitz_test: dimension mismatch");
  DirectionalLipschitzResult out;
  if (!f.meta.lsc) out.notes.push_back("lower semicontinuity not declared; assumed");
  try {
    out.dagger = dagger_derivative(f, v, cfg);
  } catch (const EstimateUnavailable& e) {
    out.notes.push_back(e.what());
  }
  if (out.dagger.value) out.primary = out.dagger.is_pos_inf() ? TriState::No : TriState::Yes;

  if (out.dagger.is_finite()) {
    out.r = out.dagger.value->value() + 1.0;
  } else {
    out.r = out.dagger.is_pos_inf() ? 1e3 : 1.0;
  }
  Vec vr = v;
  vr.push_back(out.r);
  try {
    out.interior = interior_tangent_test(SampledSet::epigraph(f), vr, IndexSet::all(f.dim), cfg);
    if (out.interior.verdict == InteriorVerdict::Interior) out.dual = TriState::Yes;
    if (out.interior.verdict == InteriorVerdict::NotInterior) out.dual = TriState::No;
  } catch (const PreconditionError& e) {
    out.notes.push_back(e.what());
  }
  if (out.channels_agree()) {
    out.verdict = out.primary;
  } else if (out.primary != TriState::Inconclusive && out.dual != TriState::Inconclusive) {
    out.notes.push_back("primary and dual evidence disagree");
  }
  return out;
}

// ---------------------------------------------------------------------------
// Sum rule

struct SumRuleDirection {
  Vec direction;
  LimitEstimate f0, f1, f2;
  std::optional<bool> holds;  // nullopt when an estimate is inconclusive
};

struct SumRuleReport {
  bool qualification_witnessed = false;
  std::optional<Vec> qualification_direction;
  SubgradientSetAtInfinity sum_set, set1, set2;
  bool empty_branch = false;  // the sum has no subgradients, inclusion trivial
  bool inclusion_holds = false;
  double max_support_violation = 0;
  std::vector<SumRuleDirection> directions;
  std::vector<std::string> notes;

  [[nodiscard]] bool directional_holds() const {
    return std::all_of(directions.begin(), directions.end(), [](const auto& d) { return !d.holds || *d.holds; });
  }
  [[nodiscard]] bool holds() const { return inclusion_holds && directional_holds(); }
};

namespace detail {

struct SubderivativeTable {
  LimitEstimate zero;
  std::vector<DirectionEstimate> dirs;
};

inline SubderivativeTable make_table(const FuncDesc& f, const std::vector<Vec>& grid, const LadderConfig& cfg) {
  return {upper_subderivative(f, Vec(f.dim, 0.0), cfg), subderivative_table(f, grid, cfg)};
}

inline SubgradientSetAtInfinity set_from_table(const FuncDesc& f, const SubderivativeTable& t, const LadderConfig& cfg) {
  if (is_piecewise_affine(f) && f.dim + 1 <= kMaxExactDim) return subgradients_epigraph_polar(f, cfg);
  return subgradients_from_estimates(f.dim, t.zero, t.dirs);
}

inline double estimate_slack(const LimitEstimate& e) { return e.is_finite() ? support_slack(e) : 0.0; }

}  // namespace detail

/**
 * @brief Checks d(f1 + f2)(inf) within d f1(inf) + d f2(inf) by support
 * dominance, and f0^ <= f1^ + f2^ per grid direction.
 */
inline SumRuleReport sum_rule_check(const FuncDesc& f1, const FuncDesc& f2, const LadderConfig& cfg = {}) {
  if (f1.dim != f2.dim) throw DimensionMismatch("sum_rule_check: functions of different dimensions");
  const std::size_t n = f1.dim;
  const FuncDesc f0 = add_functions(f1, f2);
  const auto grid = reconstruction_grid(n);
  SumRuleReport rep;
  const auto t0 = detail::make_table(f0, grid, cfg);
  const auto t1 = detail::make_table(f1, grid, cfg);
  const auto t2 = detail::make_table(f2, grid, cfg);

  // Qualification: f1^ finite at v, f2^ finite on a small cross around v.
  std::vector<std::pair<Vec, std::pair<LimitEstimate, LimitEstimate>>> candidates;
  candidates.push_back({Vec(n, 0.0), {t1.zero, t2.zero}});
  for (std::size_t j = 0; j < grid.size(); ++j) candidates.push_back({grid[j], {t1.dirs[j].estimate, t2.dirs[j].estimate}});
  for (const auto& [v, est] : candidates) {
    if (!est.first.is_finite() || !est.second.is_finite()) continue;
    bool ok = true;
    for (std::size_t i = 0; i < n && ok; ++i) {
      for (double s : {0.25, -0.25}) {
        try {
          ok = ok && upper_subderivative(f2, axpy(v, s, unit_axis(n, i)), cfg).is_finite();
        } catch (const EstimateUnavailable&) {
          ok = false;
        }
      }
    }
    if (ok) {
      rep.qualification_witnessed = true;
      rep.qualification_direction = v;
      break;
    }
  }
  if (!rep.qualification_witnessed) rep.notes.push_back("hypothesis unverified: qualification not witnessed");

  rep.sum_set = detail::set_from_table(f0, t0, cfg);
  rep.set1 = detail::set_from_table(f1, t1, cfg);
  rep.set2 = detail::set_from_table(f2, t2, cfg);
  if (rep.sum_set.set.is_empty()) {
    rep.empty_branch = true;
    rep.inclusion_holds = true;
    rep.notes.push_back("sum has no subgradients at infinity: inclusion trivial");
  } else {
    const PolyConvexSet rhs = minkowski_sum(rep.set1.set, rep.set2.set);
    rep.inclusion_holds = !rhs.is_empty();
    for (const auto& u : direction_grid(n, n == 2 ? 16 : 0)) {
      if (!rep.inclusion_holds) break;
      const ExtendedReal h0 = support_function(rep.sum_set.set, u);
      const ExtendedReal h = support_function(rhs, u);
      if (h.is_pos_inf()) continue;
      if (h0.is_pos_inf()) {
        rep.inclusion_holds = false;
        break;
      }
      const double viol = h0.value() - h.value();
      rep.max_support_violation = std::max(rep.max_support_violation, viol);
      if (viol > 1e-3 * std::max(1.0, std::abs(h.value()))) rep.inclusion_holds = false;
    }
  }

  for (std::size_t j = 0; j < grid.size(); ++j) {
    SumRuleDirection d{grid[j], t0.dirs[j].estimate, t1.dirs[j].estimate, t2.dirs[j].estimate, std::nullopt};
    if (d.f0.value && d.f1.value && d.f2.value) {
      const ExtendedReal rhs = *d.f1.value + *d.f2.value;
      const double slack = detail::estimate_slack(d.f0) + detail::estimate_slack(d.f1) + detail::estimate_slack(d.f2) +
                           cfg.tol.abs_tol;
      d.holds = *d.f0.value <= rhs + ExtendedReal(slack);
    }
    rep.directions.push_back(std::move(d));
  }
  return rep;
}

// ---------------------------------------------------------------------------
// Distance function

/**
 * @brief co({0} + A), A the normalized perpendiculars x' - P(x') at far
 * nearest points. Cross-checked against gradient sampling of d_C.
 */
inline SubgradientSetAtInfinity distance_subgradients_at_infinity(const SetDesc& c, const LadderConfig& cfg = {}) {
  cfg.validate();
  const SampledSet sc(c);
  const std::size_t n = c.dim;
  const std::size_t K = cfg.radii.size();
  const std::size_t k0 = (K - 1) / 2;
  const IndexSet idx = IndexSet::all(n);
  const double theta = 1e3 * cfg.tol.cone_angle_tol;
  const std::size_t count = sc.exact_distance() ? cfg.samples_per_shell : std::min<std::size_t>(cfg.samples_per_shell, 64);

  SubgradientSetAtInfinity out;
  out.route = SubgradientRoute::PerpendicularLimits;
  auto& diag = out.diagnostics;

  struct Cluster {
    Vec dir;
    std::set<std::size_t> rungs;
  };
  std::vector<Cluster> clusters;
  bool far_points = false;
  std::set<std::size_t> contributing;
  for (std::size_t k = k0; k < K; ++k) {
    for (const auto& z : shell_points(n, idx, cfg.radii[k], count, rung_seed(cfg.seed, 41, k))) {
      const auto r = sc.distance(z);
      if (!r) continue;
      const Vec& p = r->nearest.front();
      if (idx.pi_norm(p) < cfg.radii[k] / 2) continue;
      far_points = true;
      if (r->distance <= 1e-9 * std::max(1.0, max_abs(z))) continue;
      const Vec u = normalized(sub(z, p));
      contributing.insert(k);
      auto it = std::find_if(clusters.begin(), clusters.end(), [&](const Cluster& cl) { return angle_between(cl.dir, u) <= theta; });
      if (it == clusters.end()) {
        clusters.push_back({u, {k}});
      } else {
        it->rungs.insert(k);
      }
    }
  }
  if (!far_points) throw PreconditionError("distance subgradients need an unbounded set");
  std::vector<Vec> pts{Vec(n, 0.0)};
  for (const auto& cl : clusters) {
    if (contributing.size() >= 2 && cl.rungs.size() < 2) {
      ++diag.clusters_dropped;
      continue;
    }
    pts.push_back(cl.dir);
  }
  if (pts.size() == 1) {
    diag.perpendiculars_found = false;
    diag.notes.push_back("A empty (sampled)");
  }
  out.set = convex_hull(pts);

  try {
    const auto gs = subgradients_gradient_sampling(DistanceGradientField{&sc}, cfg, idx, true);
    Tolerance loose{1e-3, 1e-3, 1e-2};
    diag.cross_check_agrees = set_eq(out.set, gs.set, loose);
    if (!*diag.cross_check_agrees) diag.notes.push_back("gradient sampling of d_C disagrees");
  } catch (const EstimateUnavailable& e) {
    diag.notes.push_back(std::string("cross-check unavailable: ") + e.what());
  }
  return out;
}

}  // namespace infcone
