#pragma once

// JSON encoding of library values. Extended reals are numbers or the strings
// "+inf" / "-inf"; index sets are written 1-based to match x1..xn.

#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"

#include "infcone/optimality.hpp"

namespace infcone {

using json = nlohmann::json;

inline constexpr int kSchemaVersion = 1;

inline json to_json(const ExtendedReal& x) {
  if (x.is_pos_inf()) return "+inf";
  if (x.is_neg_inf()) return "-inf";
  return x.value();
}

/// Finite doubles as numbers, infinities as strings, NaN as null.
inline json number_or_inf(double x) {
  if (std::isnan(x)) return nullptr;
  return to_json(ExtendedReal(x));
}

inline json numbers_or_inf(const std::vector<double>& xs) {
  json a = json::array();
  for (double x : xs) a.push_back(number_or_inf(x));
  return a;
}

inline ExtendedReal extended_from_json(const json& j) {
  if (j.is_number()) return ExtendedReal(j.get<double>());
  if (j.is_string()) {
    const auto s = j.get<std::string>();
    if (s == "+inf" || s == "inf") return ExtendedReal::pos_inf();
    if (s == "-inf") return ExtendedReal::neg_inf();
  }
  throw std::invalid_argument("expected a number, \"+inf\" or \"-inf\"");
}

inline json to_json(const Vec& v) { return json(v); }

inline json to_json(const std::vector<Vec>& vs) {
  json a = json::array();
  for (const auto& v : vs) a.push_back(v);
  return a;
}

inline std::vector<Vec> vecs_from_json(const json& j) {
  std::vector<Vec> out;
  for (const auto& v : j) out.push_back(v.get<Vec>());
  return out;
}

inline json to_json(const PolyCone& k) {
  return {{"dim", k.dim}, {"rays", to_json(k.rays)}, {"lineality", to_json(k.lineality)}};
}

inline PolyCone cone_from_json(const json& j) {
  const std::size_t dim = j.at("dim").get<std::size_t>();
  return cone_from_generators(dim, vecs_from_json(j.value("rays", json::array())),
                              vecs_from_json(j.value("lineality", json::array())));
}

inline json to_json(const PolyConvexSet& s) {
  return {{"dim", s.dim}, {"empty", s.is_empty()}, {"vertices", to_json(s.vertices)}, {"rays", to_json(s.rays)}};
}

inline PolyConvexSet set_from_json(const json& j) {
  PolyConvexSet s{j.at("dim").get<std::size_t>(), vecs_from_json(j.value("vertices", json::array())),
                  vecs_from_json(j.value("rays", json::array()))};
  s.validate();
  return s;
}

inline json to_json(const IndexSet& idx) {
  json a = json::array();
  for (auto c : idx.coords) a.push_back(c + 1);
  return a;
}

inline IndexSet index_set_from_json(const json& j) {
  IndexSet idx;
  for (const auto& c : j) {
    const auto one_based = c.get<long long>();
    if (one_based < 1) throw std::invalid_argument("index sets are 1-based");
    idx.coords.push_back(static_cast<std::size_t>(one_based - 1));
  }
  return idx;
}

inline json to_json(const Tolerance& t) {
  return {{"abs_tol", t.abs_tol}, {"rel_tol", t.rel_tol}, {"cone_angle_tol", t.cone_angle_tol}};
}

inline json to_json(const LadderConfig& c) {
  return {{"radii", c.radii},   {"steps", c.steps}, {"eps", c.eps_ball}, {"samples", c.samples_per_shell},
          {"seed", c.seed},     {"tol", to_json(c.tol)}};
}

/// Overlays the fields present in j onto base.
inline LadderConfig config_from_json(const json& j, LadderConfig base = {}) {
  if (j.contains("radii")) base.radii = j["radii"].get<std::vector<double>>();
  if (j.contains("steps")) base.steps = j["steps"].get<std::vector<double>>();
  if (j.contains("eps")) base.eps_ball = j["eps"].get<std::vector<double>>();
  if (j.contains("samples")) base.samples_per_shell = j["samples"].get<std::size_t>();
  if (j.contains("seed")) base.seed = j["seed"].get<std::uint64_t>();
  if (j.contains("tol")) {
    const auto& t = j["tol"];
    if (t.is_number()) {
      base.tol.abs_tol = base.tol.rel_tol = t.get<double>();
    } else {
      base.tol.abs_tol = t.value("abs_tol", base.tol.abs_tol);
      base.tol.rel_tol = t.value("rel_tol", base.tol.rel_tol);
      base.tol.cone_angle_tol = t.value("cone_angle_tol", base.tol.cone_angle_tol);
    }
  }
  base.validate();
  return base;
}

inline json to_json(const LimitEstimate& e) {
  json rungs = json::array();
  for (const auto& r : e.rung_values) {
    json jr{{"radius", r.radius}, {"eps", r.eps}, {"valid", r.valid}};
    if (r.valid) jr["value"] = to_json(r.value);
    if (!r.note.empty()) jr["note"] = r.note;
    rungs.push_back(std::move(jr));
  }
  return {{"value", e.value ? to_json(*e.value) : json(nullptr)},
          {"trend", to_string(e.trend)},
          {"error_bar", number_or_inf(e.error_bar)},
          {"rungs", std::move(rungs)},
          {"notes", e.notes}};
}

inline json to_json(const ConePairAtInfinity& p) {
  json checks = json::array();
  for (const auto& c : p.cross_checks) {
    checks.push_back({{"direction", c.direction},
                      {"expected", to_string(c.expected)},
                      {"observed", to_string(c.observed)},
                      {"agrees", c.agrees()}});
  }
  json faces = json::array();
  for (const auto& f : p.faces) {
    json active = json::array();
    for (auto a : f.active) active.push_back(a);
    faces.push_back({{"id", f.face_id}, {"active", active}, {"point", f.point}, {"unbounded", f.unbounded}});
  }
  const auto pr = pointedness_check(p);
  return {{"tangent", to_json(p.tangent)},
          {"normal", to_json(p.normal)},
          {"method", to_string(p.method)},
          {"index_set", to_json(p.index_set)},
          {"cross_checks", std::move(checks)},
          {"cross_checks_agree", p.cross_checks_agree()},
          {"faces", std::move(faces)},
          {"pointed", pr.pointed},
          {"tangent_has_interior", pr.tangent_has_interior},
          {"notes", p.notes}};
}

inline json to_json(const SubgradientSetAtInfinity& s) {
  const auto& d = s.diagnostics;
  json diag{{"notes", d.notes},
            {"outer_approximation", d.outer_approximation},
            {"unvalidated_hypothesis", d.unvalidated_hypothesis}};
  switch (s.route) {
    case SubgradientRoute::EpigraphPolar:
      if (d.normal_cone) diag["normal_cone"] = to_json(*d.normal_cone);
      break;
    case SubgradientRoute::SupportReconstruction: {
      json dirs = json::array();
      for (const auto& e : d.directions) {
        dirs.push_back({{"direction", e.direction},
                        {"estimate", e.estimate.value ? to_json(*e.estimate.value) : json(nullptr)},
                        {"trend", to_string(e.estimate.trend)},
                        {"error_bar", number_or_inf(e.estimate.error_bar)}});
      }
      diag["directions"] = std::move(dirs);
      if (d.at_zero) diag["at_zero"] = d.at_zero->value ? to_json(*d.at_zero->value) : json(nullptr);
      diag["inconclusive_directions"] = d.inconclusive_directions;
      break;
    }
    case SubgradientRoute::GradientSampling: {
      diag["rung_gradient_norms"] = numbers_or_inf(d.rung_gradient_norms);
      diag["gradient_norms_diverge"] = d.gradient_norms_diverge;
      diag["gradients_used"] = d.gradients_used;
      diag["nondifferentiable_skipped"] = d.nondifferentiable_skipped;
      diag["clusters_dropped"] = d.clusters_dropped;
      break;
    }
    case SubgradientRoute::PerpendicularLimits:
      diag["perpendiculars_found"] = d.perpendiculars_found;
      diag["clusters_dropped"] = d.clusters_dropped;
      if (d.cross_check_agrees) diag["cross_check_agrees"] = *d.cross_check_agrees;
      break;
  }
  return {{"set", to_json(s.set)}, {"route", to_string(s.route)}, {"diagnostics", std::move(diag)}};
}

inline json to_json(const LipschitzVerdict& v) {
  json conds = json::array();
  for (const auto& c : v.conditions) conds.push_back({{"id", c.id}, {"status", to_string(c.status)}, {"detail", c.detail}});
  json out{{"verdict", to_string(v.verdict)}, {"conditions", std::move(conds)}, {"coherent", v.coherent},
           {"rung_slopes", numbers_or_inf(v.rung_slopes)}};
  out["constant"] = v.constant ? json(*v.constant) : json(nullptr);
  out["radius"] = v.radius ? json(*v.radius) : json(nullptr);
  if (v.witness) out["witness"] = {{"x", v.witness->first}, {"y", v.witness->second}};
  return out;
}

inline json to_json(const InteriorTestResult& r) {
  json out{{"verdict", to_string(r.verdict)}};
  if (r.eps) out["eps"] = *r.eps;
  if (r.radius) out["radius"] = *r.radius;
  if (r.lambda) out["lambda"] = *r.lambda;
  if (r.violation) out["violation"] = *r.violation;
  return out;
}

inline json to_json(const DirectionalLipschitzResult& r) {
  return {{"verdict", to_string(r.verdict)},
          {"primary", to_string(r.primary)},
          {"dual", to_string(r.dual)},
          {"channels_agree", r.channels_agree()},
          {"dagger", to_json(r.dagger)},
          {"r", r.r},
          {"interior", to_json(r.interior)},
          {"notes", r.notes}};
}

inline json to_json(const SumRuleReport& r) {
  json dirs = json::array();
  for (const auto& d : r.directions) {
    auto val = [](const LimitEstimate& e) { return e.value ? to_json(*e.value) : json(nullptr); };
    dirs.push_back({{"direction", d.direction},
                    {"f0", val(d.f0)},
                    {"f1", val(d.f1)},
                    {"f2", val(d.f2)},
                    {"holds", d.holds ? json(*d.holds) : json(nullptr)}});
  }
  json out{{"qualification_witnessed", r.qualification_witnessed},
           {"sum", to_json(r.sum_set)},
           {"f1", to_json(r.set1)},
           {"f2", to_json(r.set2)},
           {"empty_branch", r.empty_branch},
           {"inclusion_holds", r.inclusion_holds},
           {"max_support_violation", number_or_inf(r.max_support_violation)},
           {"directional_holds", r.directional_holds()},
           {"holds", r.holds()},
           {"directions", std::move(dirs)},
           {"notes", r.notes}};
  if (r.qualification_direction) out["qualification_direction"] = *r.qualification_direction;
  return out;
}

inline json to_json(const MinimizingSequenceReport& s) {
  json out{{"points", to_json(s.points)},
           {"values", s.values},
           {"shell_radii", s.shell_radii},
           {"inf_estimate", to_json(s.inf_estimate)},
           {"escapes_to_infinity", s.escapes_to_infinity},
           {"attained_flag", s.attained_flag},
           {"unbounded_below", s.unbounded_below},
           {"notes", s.notes}};
  if (s.inner_point) out["inner_point"] = *s.inner_point;
  if (s.inner_value) out["inner_value"] = *s.inner_value;
  return out;
}

inline json to_json(const OptimalityCertificate& c) {
  json table = json::array();
  for (const auto& row : c.directional_check) {
    table.push_back({{"direction", row.direction},
                     {"estimate", row.estimate.value ? to_json(*row.estimate.value) : json(nullptr)},
                     {"error_bar", number_or_inf(row.estimate.error_bar)},
                     {"ok", row.ok}});
  }
  json out{{"condition", to_string(c.condition)},
           {"status", to_string(c.status)},
           {"holds", c.holds()},
           {"reason", c.reason},
           {"sequence", to_json(c.sequence)},
           {"directional_check", std::move(table)},
           {"qualification_witnessed", c.qualification_witnessed},
           {"residual", number_or_inf(c.residual)},
           {"margin", number_or_inf(c.margin)},
           {"notes", c.notes}};
  if (c.subgradients) out["subgradients"] = to_json(*c.subgradients);
  if (c.cones) {
    out["tangent"] = to_json(c.cones->tangent);
    out["normal"] = to_json(c.cones->normal);
    out["cone_method"] = to_string(c.cones->method);
  }
  if (c.xi || c.w) {
    out["decomposition"] = {{"xi", c.xi ? json(*c.xi) : json(nullptr)}, {"w", c.w ? json(*c.w) : json(nullptr)}};
  }
  if (c.qualification_direction) out["qualification_direction"] = *c.qualification_direction;
  return out;
}

inline json to_json(const TangentTestResult& r) {
  json out{{"verdict", to_string(r.verdict)},
           {"rung_max_ratio", numbers_or_inf(r.rung_max_ratio)},
           {"sampled", r.sampled},
           {"exact_distance", r.exact_distance}};
  if (r.failing_eps > 0) out["failing_eps"] = r.failing_eps;
  if (r.witness) {
    out["witness"] = {{"x", r.witness->x}, {"t", r.witness->t}, {"ratio", r.witness->ratio}, {"radius", r.witness->radius}};
  }
  return out;
}

}  // namespace infcone
