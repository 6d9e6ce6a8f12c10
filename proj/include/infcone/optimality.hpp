#pragma once

// Necessary optimality conditions at infinity: Fermat's rule for escaping
// minimizing sequences, and its set-constrained version.

#include <algorithm>
#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "infcone/subdiff.hpp"

namespace infcone {

/// Shell-by-shell search for a minimizing sequence.
struct MinimizingSequenceReport {
  std::vector<Vec> points;               // shell argmins, values nonincreasing
  std::vector<double> values;
  std::vector<double> shell_radii;       // rung radius of each point
  std::optional<Vec> inner_point;        // best point in the ball of radius radii[0]
  std::optional<double> inner_value;
  ExtendedReal inf_estimate = ExtendedReal::pos_inf();
  bool escapes_to_infinity = false;
  bool attained_flag = false;
  bool unbounded_below = false;
  std::vector<std::string> notes;
};

namespace detail {

/// Last three shell minima negative, each at least twice the previous in magnitude.
inline bool falls_without_bound(const std::vector<long double>& v) {
  if (v.size() < 3) return false;
  const long double a = v[v.size() - 3], b = v[v.size() - 2], c = v[v.size() - 1];
  return a < 0 && b <= 2 * a && c <= 2 * b;
}

struct SearchRegion {
  double rmin = 0;
  double rmax = 0;
  const SetDesc* set = nullptr;
};

inline Vec clamp_radius(Vec x, const SearchRegion& r) {
  const double nx = norm(x);
  if (nx > r.rmax) return scale(x, r.rmax / nx);
  if (nx < r.rmin && nx > 0) return scale(x, r.rmin / nx);
  return x;
}

inline bool admissible(const Vec& x, const SearchRegion& r) {
  const double nx = norm(x);
  if (nx > r.rmax * (1 + 1e-12) || nx < r.rmin * (1 - 1e-12)) return false;
  // Near-exact feasibility: a relative slack would let far shells undercut the true infimum.
  return !r.set || r.set->contains(x, 1e-15);
}

inline long double safe_value(const FuncDesc& f, const Vec& x) {
  try {
    const long double v = eval_long(f, x);
    return std::isnan(v) ? kLongInf : v;
  } catch (const UndefinedOperation&) {
    return kLongInf;
  }
}

// Compass search along +-e_i and the negative gradient, with radial clamping.
inline std::pair<Vec, long double> pattern_search(const FuncDesc& f, Vec x, const SearchRegion& r,
                                                  int max_iter = 200) {
  long double fx = safe_value(f, x);
  double h = 0.25 * std::max(1.0, r.rmax);
  const double h_min = 1e-12 * std::max(1.0, r.rmax);
  const std::size_t n = x.size();
  for (int it = 0; it < max_iter && h > h_min; ++it) {
    std::vector<Vec> dirs;
    const auto g = grad(f, x);
    if (g.gradient && norm(*g.gradient) > 0 && std::isfinite(norm(*g.gradient))) {
      dirs.push_back(scale(normalized(*g.gradient), -1.0));
    }
    for (std::size_t i = 0; i < n; ++i) {
      dirs.push_back(unit_axis(n, i, 1.0));
      dirs.push_back(unit_axis(n, i, -1.0));
    }
    bool improved = false;
    for (const auto& d : dirs) {
      const Vec y = clamp_radius(axpy(x, h, d), r);
      if (!admissible(y, r)) continue;
      const long double fy = safe_value(f, y);
      if (fy < fx) {
        x = y;
        fx = fy;
        improved = true;
        break;
      }
    }
    if (!improved) h *= 0.5;
  }
  return {x, fx};
}

// Feasible starting points: raw samples inside C, or their projections.
inline std::vector<Vec> feasible_starts(const std::vector<Vec>& pts, const SampledSet* c, const SearchRegion& r) {
  std::vector<Vec> out;
  for (const auto& p : pts) {
    Vec z = p;
    if (c && !c->contains(z)) {
      const auto d = c->distance(z);
      if (!d) continue;
      z = d->nearest.front();
    }
    z = clamp_radius(z, r);
    if (admissible(z, r)) out.push_back(std::move(z));
  }
  return out;
}

// Best point of a region: the 8 best samples are refined by compass search.
inline std::optional<std::pair<Vec, long double>> region_minimum(const FuncDesc& f, std::vector<Vec> starts,
                                                                 const SearchRegion& r) {
  if (starts.empty()) return std::nullopt;
  std::vector<std::pair<long double, std::size_t>> ranked;
  for (std::size_t i = 0; i < starts.size(); ++i) ranked.push_back({safe_value(f, starts[i]), i});
  std::stable_sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
  std::optional<std::pair<Vec, long double>> best;
  for (std::size_t j = 0; j < std::min<std::size_t>(8, ranked.size()); ++j) {
    auto res = pattern_search(f, starts[ranked[j].second], r);
    if (!best || res.second < best->second) best = std::move(res);
  }
  return best;
}

}  // namespace detail

/**
 * @brief Best values on the ball of radius radii[0] and on every shell [R, 1.25 R].
 *
 * The infimum is attained when the ball already reaches it within abs_tol.
 * It escapes when the outermost shell is at least as good as everything
 * inside (within abs_tol) and the argmin radius grows over the top three
 * rungs. Unbounded below is read off tenfold growth of -best or overflow.
 */
inline MinimizingSequenceReport find_minimizing_sequence(const FuncDesc& f, const SetDesc* c = nullptr,
                                                         const LadderConfig& cfg = {}) {
  cfg.validate();
  const std::size_t n = f.dim;
  if (c && c->dim != n) throw DimensionMismatch("find_minimizing_sequence: set and function dimensions differ");
  std::optional<SampledSet> sc;
  if (c) sc.emplace(*c);
  const SampledSet* scp = sc ? &*sc : nullptr;
  const std::size_t count =
      !sc || sc->exact_distance() ? cfg.samples_per_shell : std::min<std::size_t>(cfg.samples_per_shell, 64);
  const IndexSet all = IndexSet::all(n);
  MinimizingSequenceReport rep;

  // Inner ball.
  {
    const double r0 = cfg.radii.front();
    detail::SearchRegion region{0.0, r0, c};
    Rng rng(rung_seed(cfg.seed, 51, 0));
    std::vector<Vec> pts{Vec(n, 0.0)};
    for (std::size_t s = 0; s < count; ++s) {
      Vec u(n);
      for (auto& t : u) t = rng.normal();
      pts.push_back(scale(normalized(u), r0 * std::pow(rng.uniform(), 1.0 / static_cast<double>(n))));
    }
    if (auto best = detail::region_minimum(f, detail::feasible_starts(pts, scp, region), region)) {
      rep.inner_point = best->first;
      rep.inner_value = static_cast<double>(best->second);
    }
  }

  std::vector<long double> shell_best;
  std::vector<double> argmin_radius;
  std::vector<std::size_t> shell_rung;
  std::vector<Vec> shell_arg;
  for (std::size_t k = 0; k < cfg.radii.size(); ++k) {
    const double R = cfg.radii[k];
    detail::SearchRegion region{R, 1.25 * R, c};
    const auto pts = shell_points(n, all, R, count, rung_seed(cfg.seed, 52, k));
    const auto best = detail::region_minimum(f, detail::feasible_starts(pts, scp, region), region);
    if (!best) continue;
    shell_best.push_back(best->second);
    argmin_radius.push_back(norm(best->first));
    shell_rung.push_back(k);
    shell_arg.push_back(best->first);
  }
  if (shell_best.empty()) {
    rep.notes.push_back("no feasible points on any shell");
    if (rep.inner_value) {
      rep.inf_estimate = *rep.inner_value;
      rep.attained_flag = true;
    }
    return rep;
  }

  const long double last = shell_best.back();
  if (!std::isfinite(last) && last < 0) {
    rep.unbounded_below = true;
  } else if (detail::overflows(last) && last < 0) {
    rep.unbounded_below = true;
  } else if (detail::falls_without_bound(shell_best)) {
    rep.unbounded_below = true;
  }

  long double f_star = rep.inner_value ? static_cast<long double>(*rep.inner_value) : kLongInf;
  for (auto v : shell_best) f_star = std::min(f_star, v);
  const double tol = cfg.tol.abs_tol;
  if (rep.unbounded_below) {
    rep.inf_estimate = ExtendedReal::neg_inf();
    rep.notes.push_back("shell minima decrease without bound");
  } else {
    rep.inf_estimate = to_extended(f_star);
    rep.attained_flag = rep.inner_value && *rep.inner_value <= static_cast<double>(f_star) + tol;
    bool outer_best = true;
    if (rep.inner_value) outer_best = static_cast<double>(last) <= *rep.inner_value + tol;
    for (std::size_t j = 0; j + 1 < shell_best.size(); ++j) outer_best = outer_best && last <= shell_best[j] + tol;
    bool growing = argmin_radius.size() >= 3;
    for (std::size_t j = argmin_radius.size() >= 3 ? argmin_radius.size() - 3 : 0; j + 1 < argmin_radius.size(); ++j) {
      growing = growing && argmin_radius[j + 1] > argmin_radius[j];
    }
    rep.escapes_to_infinity = !rep.attained_flag && outer_best && growing;
    if (rep.attained_flag) rep.notes.push_back("infimum reached inside the inner ball");
  }

  // Sequence in nonincreasing value order (stable, so radius order breaks ties).
  std::vector<std::size_t> order(shell_best.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return shell_best[a] > shell_best[b]; });
  for (auto i : order) {
    rep.points.push_back(shell_arg[i]);
    rep.values.push_back(static_cast<double>(std::clamp<long double>(shell_best[i], -std::numeric_limits<double>::max(),
                                                                     std::numeric_limits<double>::max())));
    rep.shell_radii.push_back(cfg.radii[shell_rung[i]]);
  }
  return rep;
}

/// Residual accepted for 0 = xi + w; covers the slack of reconstructed sets.
inline constexpr double kCertificateTol = 1e-7;

enum class OptimalityCondition { FermatInfinity, ConstrainedInfinity };

inline const char* to_string(OptimalityCondition c) {
  return c == OptimalityCondition::FermatInfinity ? "fermat_infinity" : "constrained_infinity";
}

enum class CertificateStatus { Holds, Fails, NotApplicable, Inconclusive };

inline const char* to_string(CertificateStatus s) {
  switch (s) {
    case CertificateStatus::Holds: return "holds";
    case CertificateStatus::Fails: return "fails";
    case CertificateStatus::NotApplicable: return "not_applicable";
    case CertificateStatus::Inconclusive: return "inconclusive";
  }
  return "?";
}

struct DirectionalCheckRow {
  Vec direction;
  LimitEstimate estimate;
  bool ok = false;  // f^(inf; v) >= -error bar
};

struct OptimalityCertificate {
  OptimalityCondition condition = OptimalityCondition::FermatInfinity;
  CertificateStatus status = CertificateStatus::Inconclusive;
  std::string reason;
  MinimizingSequenceReport sequence;
  std::optional<SubgradientSetAtInfinity> subgradients;
  std::optional<ConePairAtInfinity> cones;
  std::optional<Vec> xi;  // element of the subgradient set
  std::optional<Vec> w;   // element of the normal cone
  double residual = 0;    // |xi + w|
  double margin = 0;      // min over the direction grid of the support of the (shifted) set
  std::vector<DirectionalCheckRow> directional_check;
  bool qualification_witnessed = false;
  std::optional<Vec> qualification_direction;
  std::vector<std::string> notes;

  [[nodiscard]] bool holds() const { return status == CertificateStatus::Holds; }
};

namespace detail {

// Filters the sequence report; returns false (with the reason set) when the condition does not apply.
inline bool applicable(OptimalityCertificate& cert) {
  const auto& s = cert.sequence;
  if (s.unbounded_below) {
    cert.status = CertificateStatus::NotApplicable;
    cert.reason = "unbounded below";
  } else if (s.attained_flag) {
    cert.status = CertificateStatus::NotApplicable;
    cert.reason = "infimum attained";
  } else if (!s.escapes_to_infinity) {
    cert.status = CertificateStatus::NotApplicable;
    cert.reason = "no escaping minimizing sequence found";
  } else {
    return true;
  }
  return false;
}

inline double support_margin(const PolyConvexSet& s) {
  double m = std::numeric_limits<double>::infinity();
  for (const auto& u : direction_grid(s.dim, s.dim == 2 ? 16 : 0)) {
    const auto h = support_function(s, u);
    if (h.is_finite()) m = std::min(m, h.value());
    if (h.is_neg_inf()) return -std::numeric_limits<double>::infinity();
  }
  return m;
}

/// Exact containment first; the tolerance only absorbs sampling noise when that fails.
inline MinkowskiCertificate contains_zero(const PolyConvexSet& s, const PolyCone& k) {
  auto m = minkowski_contains_zero(s, k);
  return m.contains_zero ? m : minkowski_contains_zero(s, k, kCertificateTol);
}

}  // namespace detail

/// 0 in d f(inf) whenever a minimizing sequence escapes with a finite infimum.
inline OptimalityCertificate fermat_at_infinity(const FuncDesc& f, const LadderConfig& cfg = {}) {
  OptimalityCertificate cert;
  cert.condition = OptimalityCondition::FermatInfinity;
  cert.sequence = find_minimizing_sequence(f, nullptr, cfg);
  if (!detail::applicable(cert)) return cert;
  try {
    cert.subgradients = subgradients_best(f, cfg);
  } catch (const EstimateUnavailable& e) {
    cert.status = CertificateStatus::Inconclusive;
    cert.reason = e.what();
    return cert;
  }
  const auto& set = cert.subgradients->set;
  const auto m = detail::contains_zero(set, PolyCone::zero(f.dim));
  cert.margin = detail::support_margin(set);
  if (m.contains_zero) {
    cert.status = CertificateStatus::Holds;
    cert.xi = m.xi;
    cert.residual = m.residual;
    cert.reason = std::string("0 lies in the subgradient set (") + to_string(cert.subgradients->route) + ")";
  } else {
    cert.status = CertificateStatus::Fails;
    cert.reason = "0 is not a subgradient at infinity";
  }
  return cert;
}

/**
 * @brief 0 in d f(inf) + N_C(inf) and f^(inf; v) >= 0 on T_C(inf), for
 * minimizing sequences of f on C that escape to infinity.
 */
inline OptimalityCertificate constrained_condition_at_infinity(const FuncDesc& f, const SetDesc& c,
                                                               const LadderConfig& cfg = {}) {
  if (c.dim != f.dim) throw DimensionMismatch("constrained_condition_at_infinity: dimension mismatch");
  const std::size_t n = f.dim;
  OptimalityCertificate cert;
  cert.condition = OptimalityCondition::ConstrainedInfinity;
  cert.sequence = find_minimizing_sequence(f, &c, cfg);
  if (!detail::applicable(cert)) return cert;
  try {
    cert.subgradients = subgradients_best(f, cfg);
    cert.cones = set_cones_at_infinity(c, IndexSet::all(n), cfg);
  } catch (const std::exception& e) {
    cert.status = CertificateStatus::Inconclusive;
    cert.reason = std::string("cone computation inconclusive: ") + e.what();
    return cert;
  }

  const auto m = detail::contains_zero(cert.subgradients->set, cert.cones->normal);
  if (m.contains_zero) {
    cert.xi = m.xi;
    cert.w = m.w;
    cert.residual = m.residual;
  }

  // Directions: generators of T_C(inf) and seeded conic combinations.
  const auto& t = cert.cones->tangent;
  std::vector<Vec> gens = t.rays;
  for (const auto& l : t.lineality) {
    gens.push_back(l);
    gens.push_back(scale(l, -1.0));
  }
  std::vector<Vec> dirs = gens;
  Rng rng(rung_seed(cfg.seed, 53, 0));
  for (int j = 0; j < 4 && gens.size() >= 2; ++j) {
    Vec v(n, 0.0);
    for (const auto& g : gens) v = axpy(v, rng.uniform(), g);
    if (norm(v) > 1e-9) dirs.push_back(normalized(v));
  }
  bool table_ok = true;
  for (const auto& v : dirs) {
    DirectionalCheckRow row{v, {}, false};
    try {
      row.estimate = upper_subderivative(f, v, cfg);
    } catch (const EstimateUnavailable&) {
    }
    if (row.estimate.value) {
      const double bar = std::max(row.estimate.error_bar, cfg.tol.abs_tol);
      row.ok = *row.estimate.value >= ExtendedReal(-bar);
    }
    table_ok = table_ok && row.ok;
    if (!cert.qualification_witnessed && row.estimate.is_finite() && cone_interior_contains(t, v)) {
      cert.qualification_witnessed = true;
      cert.qualification_direction = v;
    }
    cert.directional_check.push_back(std::move(row));
  }
  if (!cert.qualification_witnessed) cert.notes.push_back("hypothesis unverified: qualification not witnessed");

  if (m.contains_zero && table_ok) {
    cert.status = CertificateStatus::Holds;
    cert.reason = "0 = xi + w with xi a subgradient and w a normal at infinity";
  } else if (!m.contains_zero) {
    cert.status = CertificateStatus::Fails;
    cert.reason = "0 is not in the subgradient set plus the normal cone";
  } else {
    const bool any_missing = std::any_of(cert.directional_check.begin(), cert.directional_check.end(),
                                         [](const auto& r) { return !r.estimate.value; });
    cert.status = any_missing ? CertificateStatus::Inconclusive : CertificateStatus::Fails;
    cert.reason = "directional table has a negative upper subderivative on the tangent cone";
  }
  return cert;
}

}  // namespace infcone
