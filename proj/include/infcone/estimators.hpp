#pragma once

// Ladder estimators for difference-quotient limits at infinity, and the
// set-level tangent tests built on sampled distances.

#include <algorithm>
#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "infcone/function.hpp"
#include "infcone/ladder.hpp"

namespace infcone {

namespace detail {

enum class BallMode { Inf, Sup, Point };

// Per-(ball radius, radius rung) maxima of the quotient [f(x+tw)-f(x)]/t,
// with w ranging over v + eps*G reduced by inf or sup (or w = v).
template <ScalarField F>
std::vector<LimitEstimate> quotient_ladder(const F& f, const Vec& v, const LadderConfig& cfg, const IndexSet& idx,
                                           BallMode mode, std::uint64_t stream) {
  cfg.validate();
  const std::size_t n = f.dim();
  if (v.size() != n) throw DimensionMismatch("quotient ladder: direction dimension mismatch");
  idx.validate(n);
  const std::vector<double> eps = mode == BallMode::Point ? std::vector<double>{0.0} : cfg.eps_ball;
  const auto grid = mode == BallMode::Point ? std::vector<Vec>{Vec(n, 0.0)} : unit_ball_grid(n);
  const std::size_t K = cfg.radii.size();
  std::vector<std::vector<std::optional<long double>>> stats(eps.size(), std::vector<std::optional<long double>>(K));

  Vec y(n);
  for (std::size_t k = 0; k < K; ++k) {
    const auto pts = shell_points(n, idx, cfg.radii[k], cfg.samples_per_shell, rung_seed(cfg.seed, stream, k));
    const auto steps = cfg.steps_for_rung(k);
    std::vector<long double> best(eps.size(), -kLongInf);
    bool valid = true;
    for (const auto& x : pts) {
      long double fx;
      try {
        fx = f.value(x);
      } catch (const UndefinedOperation&) {
        valid = false;
        break;
      }
      if (!std::isfinite(fx)) {
        valid = false;
        break;
      }
      for (double t0 : steps) {
        const double t = admissible_step(t0, x);
        for (std::size_t e = 0; e < eps.size(); ++e) {
          long double red = mode == BallMode::Sup ? -kLongInf : kLongInf;
          for (const auto& g : grid) {
            for (std::size_t i = 0; i < n; ++i) y[i] = x[i] + t * (v[i] + eps[e] * g[i]);
            long double q;
            try {
              q = (f.value(y) - fx) / t;
            } catch (const UndefinedOperation&) {
              q = std::numeric_limits<long double>::quiet_NaN();
            }
            if (std::isnan(q)) continue;
            red = mode == BallMode::Sup ? std::max(red, q) : std::min(red, q);
          }
          best[e] = std::max(best[e], red);
        }
      }
    }
    for (std::size_t e = 0; e < eps.size(); ++e) {
      if (valid) stats[e][k] = best[e];
    }
  }
  std::vector<LimitEstimate> out;
  for (std::size_t e = 0; e < eps.size(); ++e) out.push_back(classify_rungs(stats[e], cfg.radii, eps[e], cfg.tol));
  return out;
}

}  // namespace detail

/**
 * @brief Upper subderivative at infinity,
 * lim_{eps->0} limsup_{x->inf, t->0} inf_{w in B_eps(v)} [f(x+tw) - f(x)]/t.
 */
template <ScalarField F>
LimitEstimate upper_subderivative(const F& f, const Vec& v, const LadderConfig& cfg, const IndexSet& idx) {
  const auto per = detail::quotient_ladder(f, v, cfg, idx, detail::BallMode::Inf, 1);
  return combine_eps(per, cfg.eps_ball, cfg.tol);
}

inline LimitEstimate upper_subderivative(const FuncDesc& f, const Vec& v, const LadderConfig& cfg = {}) {
  return upper_subderivative(FunctionField{&f}, v, cfg, IndexSet::all(f.dim));
}

/// limsup_{x->inf, t->0, w->v} [f(x+tw) - f(x)]/t, as a limit over shrinking sup-balls.
template <ScalarField F>
LimitEstimate dagger_derivative(const F& f, const Vec& v, const LadderConfig& cfg, const IndexSet& idx) {
  const auto per = detail::quotient_ladder(f, v, cfg, idx, detail::BallMode::Sup, 2);
  return combine_eps(per, cfg.eps_ball, cfg.tol);
}

inline LimitEstimate dagger_derivative(const FuncDesc& f, const Vec& v, const LadderConfig& cfg = {}) {
  return dagger_derivative(FunctionField{&f}, v, cfg, IndexSet::all(f.dim));
}

/// limsup_{x->inf, t->0} [f(x+tv) - f(x)]/t.
template <ScalarField F>
LimitEstimate clarke_derivative_at_infinity(const F& f, const Vec& v, const LadderConfig& cfg, const IndexSet& idx) {
  return detail::quotient_ladder(f, v, cfg, idx, detail::BallMode::Point, 3).front();
}

inline LimitEstimate clarke_derivative_at_infinity(const FuncDesc& f, const Vec& v, const LadderConfig& cfg = {}) {
  return clarke_derivative_at_infinity(FunctionField{&f}, v, cfg, IndexSet::all(f.dim));
}

// ---------------------------------------------------------------------------
// Sets with sampled geometry

/**
 * @brief A SetDesc with the best distance oracle available for it.
 *
 * Polyhedral sets and sets whose constraints are piecewise-affine get exact
 * distances (the latter as a union of polyhedra); everything else uses local
 * projections and is flagged as such.
 */
class SampledSet {
 public:
  explicit SampledSet(SetDesc c) : set_(std::move(c)) {
    if (set_.kind == SetKind::Polyhedral) {
      pieces_.push_back(polyhedral_rows(set_));
      exact_ = true;
    } else if (auto u = polyhedral_pieces(set_)) {
      pieces_ = std::move(*u);
      exact_ = true;
    }
  }

  /// Epigraph of f in R^{n+1}; far points are generated directly from graph values.
  static SampledSet epigraph(const FuncDesc& f) {
    SampledSet s(epigraph_set(f));
    s.graph_ = f;
    return s;
  }

  [[nodiscard]] std::size_t dim() const { return set_.dim; }
  [[nodiscard]] const SetDesc& desc() const { return set_; }
  [[nodiscard]] bool exact_distance() const { return exact_; }
  [[nodiscard]] const std::optional<FuncDesc>& graph() const { return graph_; }

  [[nodiscard]] bool contains(const Vec& z, double tol = 1e-9) const { return set_.contains(z, tol); }

  /// Distance to the set; `hint` is a nearby feasible point used as an extra local start.
  [[nodiscard]] std::optional<DistanceResult> distance(const Vec& z, const Vec* hint = nullptr) const {
    if (exact_) {
      std::optional<DistanceResult> best;
      for (const auto& rows : pieces_) {
        auto r = detail::project_polyhedron(rows, z);
        if (r && (!best || r->distance < best->distance)) best = std::move(r);
      }
      return best;
    }
    if (set_.contains(z, 0.0)) return DistanceResult{0.0, {z}, true};
    std::vector<Vec> starts{z};
    if (hint) starts.push_back(*hint);
    if (graph_) {
      Vec g = z;
      const long double fz = eval_long(*graph_, Vec(z.begin(), z.end() - 1));
      if (std::isfinite(fz)) {
        g.back() = std::max(z.back(), static_cast<double>(fz));
        starts.push_back(std::move(g));
      }
    }
    std::optional<DistanceResult> best;
    for (const auto& s0 : starts) {
      auto y = local_projection(set_, z, s0);
      if (!y) continue;
      const double d = infcone::distance(z, *y);
      if (!best || d < best->distance) best = DistanceResult{d, {*y}, true};
    }
    if (!best && !hint && !graph_) {
      try {
        best = distance_function(set_, z);
      } catch (const std::invalid_argument&) {
      }
    }
    return best;
  }

  /// A far sample; for epigraphs, z = (x, f(x) + s) with f(x) kept in extended precision.
  struct FarPoint {
    Vec z;
    long double fx = 0;
    double s = 0;
    bool boundary = false;  // on the graph, or projected onto C from outside
    Vec origin;             // the shell point it came from
  };

  /**
   * @brief Points of the set with |pi(x)| >= R/2, obtained from a shell of radius R.
   *
   * For epigraphs the points are generated from graph values, and every
   * fourth one sits on the graph itself. With `resolvable_only`, graph points
   * whose height cannot be represented next to R in double are dropped.
   * `nonfinite` counts shell points skipped because f(x) is not finite.
   */
  [[nodiscard]] std::vector<FarPoint> far_samples(const IndexSet& idx, double radius, std::size_t count,
                                                  std::uint64_t seed, bool resolvable_only,
                                                  std::size_t* nonfinite = nullptr) const {
    std::vector<FarPoint> out;
    const auto shell = shell_points(dim(), idx, radius, count, seed);
    Rng rng(seed ^ 0xFA2);
    for (std::size_t k = 0; k < shell.size(); ++k) {
      FarPoint p{shell[k], 0, 0, false, shell[k]};
      if (graph_) {
        const Vec x(p.z.begin(), p.z.end() - 1);
        p.fx = eval_long(*graph_, x);
        const double u = rng.uniform();
        if (!std::isfinite(p.fx)) {
          if (nonfinite) ++*nonfinite;
          continue;
        }
        if (resolvable_only && std::abs(p.fx) > 1e12 * std::max(1.0, radius)) continue;
        p.s = k < 2 * idx.coords.size() || k % 4 == 0 ? 0.0 : radius * u * u;
        p.z.back() = static_cast<double>(p.fx + p.s);
        p.boundary = p.s == 0.0;
      } else if (!contains(p.z)) {
        auto d = distance(p.z);
        if (!d) continue;
        p.z = d->nearest.front();
        p.boundary = true;
      }
      if (idx.pi_norm(p.z) >= 0.5 * radius) out.push_back(std::move(p));
    }
    return out;
  }

  [[nodiscard]] std::vector<Vec> far_points(const IndexSet& idx, double radius, std::size_t count,
                                            std::uint64_t seed) const {
    std::vector<Vec> out;
    for (auto& p : far_samples(idx, radius, count, seed, true)) out.push_back(std::move(p.z));
    return out;
  }

  /// Magnitude that a step from p must resolve (graph heights excluded).
  [[nodiscard]] double step_scale(const FarPoint& p) const {
    return graph_ ? max_abs(std::span<const double>(p.z.data(), p.z.size() - 1)) : max_abs(p.z);
  }

  /// Whether p + t d lies in the set; epigraphs compare f(x + t d_x) - f(x) with s + t d_y.
  [[nodiscard]] bool step_contained(const FarPoint& p, double t, const Vec& d) const {
    if (!graph_) return contains(axpy(p.z, t, d), 1e-12);
    Vec x(p.z.begin(), p.z.end() - 1);
    for (std::size_t i = 0; i < x.size(); ++i) x[i] += t * d[i];
    const long double fy = eval_long(*graph_, x);
    const long double lhs = fy - p.fx;
    const long double rhs = static_cast<long double>(p.s) + static_cast<long double>(t) * d.back();
    return lhs <= rhs + 1e-15L * std::max(1.0L, std::abs(p.fx)) + 1e-12L * t;
  }

 private:
  SetDesc set_;
  std::vector<std::vector<Halfspace>> pieces_;
  bool exact_ = false;
  std::optional<FuncDesc> graph_;
};

enum class Membership { Member, Nonmember, Inconclusive };
enum class InteriorVerdict { Interior, NotInterior, Inconclusive };

inline const char* to_string(Membership m) {
  switch (m) {
    case Membership::Member: return "member";
    case Membership::Nonmember: return "nonmember";
    case Membership::Inconclusive: return "inconclusive";
  }
  return "?";
}

inline const char* to_string(InteriorVerdict m) {
  switch (m) {
    case InteriorVerdict::Interior: return "interior";
    case InteriorVerdict::NotInterior: return "not_interior";
    case InteriorVerdict::Inconclusive: return "inconclusive";
  }
  return "?";
}

struct TangentWitness {
  Vec x;
  double t = 0;
  double ratio = 0;  // d_C(x + t v) / t
  double radius = 0;
};

struct TangentTestResult {
  Membership verdict = Membership::Inconclusive;
  std::vector<double> rung_max_ratio;  // per radius rung; NaN when no far points were found
  std::optional<TangentWitness> witness;
  double failing_eps = 0;
  bool sampled = true;
  bool exact_distance = false;
};

namespace detail {

inline std::vector<std::vector<Vec>> far_point_ladder(const SampledSet& c, const IndexSet& idx, const LadderConfig& cfg,
                                                      std::size_t count, std::uint64_t stream) {
  std::vector<std::vector<Vec>> out;
  for (std::size_t k = 0; k < cfg.radii.size(); ++k) {
    out.push_back(c.far_points(idx, cfg.radii[k], count, rung_seed(cfg.seed, stream, k)));
  }
  if (out.back().empty()) {
    throw PreconditionError("pi(C) appears bounded: no feasible points on the outermost shell");
  }
  return out;
}

inline std::size_t set_sample_count(const SampledSet& c, const LadderConfig& cfg) {
  return c.exact_distance() ? cfg.samples_per_shell : std::min<std::size_t>(cfg.samples_per_shell, 32);
}

}  // namespace detail

/**
 * @brief Sampled tangent-cone-at-infinity membership.
 *
 * v is a member iff for every eps the ratio d_C(x + t v)/t eventually stays
 * below eps along far points x of C and small t. A nonmember witness is a
 * far point whose ratio exceeds eps on every rung.
 */
inline TangentTestResult tangent_membership(const SampledSet& c, const Vec& v, const IndexSet& idx,
                                            const LadderConfig& cfg = {}) {
  cfg.validate();
  if (v.size() != c.dim()) throw DimensionMismatch("tangent_membership: dimension mismatch");
  idx.validate(c.dim());
  TangentTestResult res;
  res.exact_distance = c.exact_distance();
  const auto ladder = detail::far_point_ladder(c, idx, cfg, detail::set_sample_count(c, cfg), 11);
  std::vector<std::optional<TangentWitness>> worst(ladder.size());
  for (std::size_t k = 0; k < ladder.size(); ++k) {
    double m = ladder[k].empty() ? std::numeric_limits<double>::quiet_NaN() : 0.0;
    for (const auto& x : ladder[k]) {
      for (double t0 : cfg.steps_for_rung(k)) {
        const double t = admissible_set_step(t0, x);
        const Vec z = axpy(x, t, v);
        const auto d = c.distance(z, &x);
        if (!d) continue;
        const double r = d->distance / t;
        if (!worst[k] || r > worst[k]->ratio) worst[k] = TangentWitness{x, t, r, cfg.radii[k]};
        m = std::max(m, r);
      }
    }
    res.rung_max_ratio.push_back(m);
  }
  // Rungs with samples, in order.
  std::vector<std::size_t> live;
  for (std::size_t k = 0; k < ladder.size(); ++k) {
    if (!std::isnan(res.rung_max_ratio[k])) live.push_back(k);
  }
  bool all_pass = true;
  for (double eps : cfg.eps_ball) {
    // Passing: some tail of rungs (at least two long, when available) stays below eps.
    std::size_t tail = 0;
    for (auto it = live.rbegin(); it != live.rend() && res.rung_max_ratio[*it] <= eps; ++it) ++tail;
    const bool pass = tail >= std::min<std::size_t>(2, live.size());
    bool fail_all = true;
    for (auto k : live) fail_all = fail_all && res.rung_max_ratio[k] > eps;
    if (fail_all && live.size() >= std::min<std::size_t>(3, ladder.size())) {
      res.verdict = Membership::Nonmember;
      res.failing_eps = eps;
      res.witness = worst[live.back()];
      return res;
    }
    all_pass = all_pass && pass;
  }
  res.verdict = all_pass ? Membership::Member : Membership::Inconclusive;
  if (!all_pass && !live.empty()) res.witness = worst[live.back()];
  return res;
}

inline TangentTestResult tangent_membership(const SetDesc& c, const Vec& v, const IndexSet& idx,
                                            const LadderConfig& cfg = {}) {
  return tangent_membership(SampledSet(c), v, idx, cfg);
}

struct InteriorTestResult {
  InteriorVerdict verdict = InteriorVerdict::Inconclusive;
  std::optional<double> eps;     // of the passing triple
  std::optional<double> radius;  // R of the passing triple
  std::optional<double> lambda;  // step bound of the passing triple
  std::optional<Vec> violation;  // a failing x + t v' from the smallest-eps, outermost scan
};

/**
 * @brief Sampled interior test: searches for (eps, R, lambda) such that
 * x + t v' stays in C for far x in C, t <= lambda and v' in B_eps(v).
 */
inline InteriorTestResult interior_tangent_test(const SampledSet& c, const Vec& v, const IndexSet& idx,
                                                const LadderConfig& cfg = {}) {
  cfg.validate();
  if (!c.desc().closed()) throw PreconditionError("interior_tangent_test: the set must be closed");
  if (v.size() != c.dim()) throw DimensionMismatch("interior_tangent_test: dimension mismatch");
  idx.validate(c.dim());
  const std::size_t K = cfg.radii.size();
  std::vector<std::vector<SampledSet::FarPoint>> ladder;
  // A shell where f(x) is not finite somewhere cannot vouch for the whole shell.
  std::vector<bool> usable(K, true);
  for (std::size_t k = 0; k < K; ++k) {
    std::size_t nonfinite = 0;
    ladder.push_back(c.far_samples(idx, cfg.radii[k], cfg.samples_per_shell, rung_seed(cfg.seed, 12, k), false,
                                   &nonfinite));
    usable[k] = nonfinite == 0;
  }
  if (ladder.back().empty() && usable.back()) {
    throw PreconditionError("pi(C) appears bounded: no feasible points on the outermost shell");
  }
  const auto grid = unit_ball_grid(c.dim());
  InteriorTestResult res;
  // ok[e][k]: every sample on shell k passes with ball radius eps[e].
  std::vector<std::vector<bool>> ok(cfg.eps_ball.size(), std::vector<bool>(K, true));
  Vec d(c.dim());
  for (std::size_t e = 0; e < cfg.eps_ball.size(); ++e) {
    for (std::size_t k = 0; k < K; ++k) {
      bool pass = true;
      for (const auto& p : ladder[k]) {
        for (double t0 : cfg.steps_for_rung(k)) {
          const double t = std::max(t0, 1e-9 * std::max(1.0, c.step_scale(p)));
          for (const auto& g : grid) {
            for (std::size_t i = 0; i < d.size(); ++i) d[i] = v[i] + cfg.eps_ball[e] * g[i];
            if (!c.step_contained(p, t, d)) {
              pass = false;
              if (e + 1 == cfg.eps_ball.size()) res.violation = axpy(p.z, t, d);
              break;
            }
          }
          if (!pass) break;
        }
        if (!pass) break;
      }
      ok[e][k] = pass;
    }
  }
  std::vector<std::size_t> live;
  for (std::size_t k = 0; k < K; ++k) {
    if (!ladder[k].empty() && usable[k]) live.push_back(k);
  }
  if (live.empty()) {
    res.verdict = InteriorVerdict::Inconclusive;
    return res;
  }
  bool only_last = false;
  for (std::size_t e = 0; e < cfg.eps_ball.size(); ++e) {
    // Length of the passing tail over shells that produced samples.
    std::size_t tail = 0;
    for (auto it = live.rbegin(); it != live.rend() && ok[e][*it]; ++it) ++tail;
    if (tail >= 2) {
      const std::size_t first = live[live.size() - tail];
      res.verdict = InteriorVerdict::Interior;
      res.eps = cfg.eps_ball[e];
      res.radius = cfg.radii[first];
      res.lambda = cfg.steps_for_rung(first).front();
      res.violation.reset();
      return res;
    }
    if (tail == 1) only_last = true;
  }
  res.verdict = only_last ? InteriorVerdict::Inconclusive : InteriorVerdict::NotInterior;
  return res;
}

inline InteriorTestResult interior_tangent_test(const SetDesc& c, const Vec& v, const IndexSet& idx,
                                                const LadderConfig& cfg = {}) {
  return interior_tangent_test(SampledSet(c), v, idx, cfg);
}

struct DistanceCharacterization {
  LimitEstimate gamma;
  bool zero = false;  // gamma(v) = 0, i.e. v is tangent at infinity
};

/**
 * @brief limsup over far x with d_C(x) -> 0 and t -> 0 of [d_C(x+tv) - d_C(x)]/t.
 *
 * x is a far point of C pushed off the set by a distance that shrinks with
 * the rung.
 */
inline DistanceCharacterization distance_characterization(const SampledSet& c, const Vec& v, const IndexSet& idx,
                                                          const LadderConfig& cfg = {}) {
  cfg.validate();
  if (v.size() != c.dim()) throw DimensionMismatch("distance_characterization: dimension mismatch");
  idx.validate(c.dim());
  const auto ladder = detail::far_point_ladder(c, idx, cfg, detail::set_sample_count(c, cfg), 13);
  std::vector<std::optional<long double>> stats(ladder.size());
  for (std::size_t k = 0; k < ladder.size(); ++k) {
    if (ladder[k].empty()) continue;
    Rng rng(rung_seed(cfg.seed, 14, k));
    const auto steps = cfg.steps_for_rung(k);
    const double delta = steps.back() * 1e-2;
    long double m = -kLongInf;
    for (std::size_t s = 0; s < ladder[k].size(); ++s) {
      const Vec& p = ladder[k][s];
      Vec u(c.dim());
      for (auto& ui : u) ui = rng.normal();
      // Even samples stay on C, odd ones are pushed off by delta.
      const Vec x = s % 2 == 0 ? p : axpy(p, delta, normalized(u));
      const auto dx = c.distance(x, &p);
      if (!dx) continue;
      for (double t0 : steps) {
        const double t = admissible_set_step(t0, x);
        const auto dz = c.distance(axpy(x, t, v), &dx->nearest.front());
        if (!dz) continue;
        m = std::max(m, static_cast<long double>((dz->distance - dx->distance) / t));
      }
    }
    if (std::isfinite(m)) stats[k] = m;
  }
  DistanceCharacterization out;
  out.gamma = classify_rungs(stats, cfg.radii, 0.0, cfg.tol);
  const double zero_tol = c.exact_distance() ? 1e-6 : 1e-3;
  out.zero = out.gamma.is_finite() && std::abs(out.gamma.value->value()) <= zero_tol;
  return out;
}

inline DistanceCharacterization distance_characterization(const SetDesc& c, const Vec& v,
                                                          const LadderConfig& cfg = {}) {
  return distance_characterization(SampledSet(c), v, IndexSet::all(c.dim), cfg);
}

}  // namespace infcone
