// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit if any fails.

#include <chrono>
#include <cmath>
#include <algorithm>
#include <functional>
#include <iomanip>
#include <iostream>
#include <numbers>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <tuple>
#include <vector>

#include "infcone/infcone.hpp"

#ifndef INFCONE_CORPUS_DIR
#define INFCONE_CORPUS_DIR "corpus"
#endif

using namespace infcone;

namespace {

const char* kKinkDown = "piecewise(x1 <= 0: 0; else: -x1)";
const char* kSmoothedAbs = "piecewise(x1 >= 1: x1; x1 >= -1: x1^2/2 + 1/2; else: -x1)";
const char* kHyperbolic = "x1 >= 0; x2 >= 0; x1*x2 >= 1";

/// Accumulates failure messages for one criterion.
struct Check {
  std::vector<std::string> problems;

  void expect(bool ok, const std::string& what) {
    if (!ok) problems.push_back(what);
  }
  [[nodiscard]] bool ok() const { return problems.empty(); }
};

Tolerance exact_tol() { return Tolerance{1e-12, 1e-12, 1e-12}; }

bool is_compact_nonempty(const PolyConvexSet& s) { return !s.is_empty() && s.rays.empty(); }

// Shared corpus results, computed once.
struct CorpusRun {
  std::vector<GoldenCase> cases;
  CorpusSummary summary;
};

const CorpusRun& corpus_run() {
  static const CorpusRun run = [] {
    CorpusRun r;
    r.cases = load_corpus(INFCONE_CORPUS_DIR);
    r.summary = run_cases(r.cases);
    return r;
  }();
  return run;
}

/// Distinct (source, dim) functions referenced by corpus requests.
std::vector<FuncDesc> corpus_functions() {
  std::set<std::pair<std::string, std::size_t>> seen;
  std::vector<FuncDesc> out;
  for (const auto& c : corpus_run().cases) {
    const auto req = request_from_json(c.request);
    for (const auto* src : {&req.function, &req.function2}) {
      if (src->empty()) continue;
      auto f = parse_function(*src, req.dim);
      if (seen.insert({f.source, f.dim}).second) out.push_back(std::move(f));
    }
  }
  return out;
}

// --- criteria ---------------------------------------------------------------

Check subgradient_triple() {
  Check c;
  const LadderConfig cfg;
  const auto kink = subgradients_epigraph_polar(parse_function(kKinkDown), cfg);
  c.expect(set_eq(kink.set, convex_hull({{-1.0}, {0.0}}), exact_tol()), "kink set differs from [-1, 0]");

  const auto ex = subgradients_support_reconstruction(parse_function("exp(x1)"), cfg);
  const double h = hausdorff_in_box(ex.set, PolyConvexSet{1, {{0.0}}, {{1.0}}});
  c.expect(h < 1e-2, "exp set Hausdorff error " + std::to_string(h));

  const auto cube = subgradients_support_reconstruction(parse_function("x1^3"), cfg);
  c.expect(cube.set.is_empty(), "cube set is not empty");
  return c;
}

Check directional_lipschitz() {
  Check c;
  const auto f = parse_function("@lsc\nexp(x1) + x2");
  const std::vector<std::pair<Vec, TriState>> cases{{{-1, 0}, TriState::Yes},  {{-1, 1}, TriState::Yes},
                                                    {{-0.5, -2}, TriState::Yes}, {{1, 0}, TriState::No},
                                                    {{0, 1}, TriState::No}};
  for (const auto& [v, want] : cases) {
    const auto r = directionally_lipschitz_test(f, v, LadderConfig{});
    const std::string tag = "(" + std::to_string(v[0]) + ", " + std::to_string(v[1]) + ")";
    c.expect(r.verdict == want, tag + " verdict " + to_string(r.verdict));
    c.expect(r.channels_agree(), tag + " channels disagree");
  }
  return c;
}

/// Smallest angle between g and any generator in the list.
double nearest_angle(const Vec& g, const std::vector<Vec>& gens) {
  double best = std::numbers::pi;
  for (const auto& h : gens) best = std::min(best, std::acos(std::clamp(dot(g, h) / (norm(g) * norm(h)), -1.0, 1.0)));
  return best;
}

Check constrained_hyperbolic() {
  Check c;
  const LadderConfig cfg;
  const auto set = parse_set(kHyperbolic, 2);
  const auto pair = set_cones_at_infinity(set, IndexSet::all(2), cfg);
  const std::vector<Vec> oracle{{-1, 0}, {0, -1}};
  const auto normal = canonicalize(pair.normal);
  c.expect(normal.lineality.empty(), "normal cone has a lineality space");
  c.expect(normal.rays.size() == 2, "normal cone has " + std::to_string(normal.rays.size()) + " generators");
  for (const auto& g : normal.rays) c.expect(nearest_angle(g, oracle) < 1e-2, "stray normal generator");
  for (const auto& g : oracle) c.expect(nearest_angle(g, normal.rays) < 1e-2, "missing normal generator");

  const auto f = parse_function("x1", 2);
  const auto s = subgradients_best(f, cfg);
  c.expect(s.route == SubgradientRoute::EpigraphPolar, "subgradients not computed exactly");
  c.expect(set_eq(s.set, convex_hull({{1.0, 0.0}}), exact_tol()), "subgradient set differs from {(1, 0)}");

  const auto cert = constrained_condition_at_infinity(f, set, cfg);
  c.expect(cert.status == CertificateStatus::Holds, std::string("certificate ") + to_string(cert.status));
  c.expect(cert.residual < 1e-6, "decomposition residual " + std::to_string(cert.residual));
  return c;
}

Check lipschitz_suite() {
  Check c;
  const LadderConfig cfg;
  for (const char* src : {"-abs(x1)", kSmoothedAbs}) {
    const auto f = parse_function(src);
    const auto s = subgradients_gradient_sampling(f, cfg, true);
    const auto hi = support_function(s.set, {1.0});
    const auto lo = support_function(s.set, {-1.0});
    c.expect(hi.is_finite() && std::abs(hi.value() - 1.0) < 1e-3, std::string(src) + ": right endpoint");
    c.expect(lo.is_finite() && std::abs(lo.value() - 1.0) < 1e-3, std::string(src) + ": left endpoint");
    const auto v = classify_lipschitz_at_infinity(f, cfg);
    c.expect(v.verdict == LipschitzClass::LipschitzAtInfinity, std::string(src) + ": verdict " + to_string(v.verdict));
    c.expect(v.constant && *v.constant >= 1.0 && *v.constant <= 1.1, std::string(src) + ": constant out of [1, 1.1]");
  }
  const auto e = classify_lipschitz_at_infinity(parse_function("exp(x1)"), cfg);
  c.expect(e.verdict == LipschitzClass::NotLipschitz, std::string("exp verdict ") + to_string(e.verdict));
  const auto* iv = e.condition("iv");
  c.expect(iv && iv->status == ConditionStatus::Fail, "exp: slope condition not falsified");
  const auto* i = e.condition("i");
  c.expect(i && i->status == ConditionStatus::Fail, "exp: bounded-set condition not falsified");
  c.expect(e.subgradients && !e.subgradients->set.is_empty() && !e.subgradients->set.rays.empty(),
           "exp: subgradient set is not unbounded");
  c.expect(e.coherent, "exp: conditions are not coherent");
  return c;
}

Check duality_suite() {
  Check c;
  std::size_t checked = 0;
  for (const auto& f : corpus_functions()) {
    SubgradientSetAtInfinity s;
    try {
      s = subgradients_best(f, LadderConfig{});
    } catch (const EstimateUnavailable&) {
      continue;
    }
    if (!is_compact_nonempty(s.set)) continue;
    AnalysisRequest req;
    req.kind = RequestKind::Subdiff;
    req.function = f.source;
    req.dim = f.dim;
    const auto report = run_request(req);
    ++checked;
    for (const auto& row : report["result"]["duality_residuals"]) {
      c.expect(row["within_error_bar"].get<bool>(), f.source + ": residual " + row["residual"].dump() + " at angle " +
                                                      row["angle"].dump() + " exceeds " + row["combined_error_bar"].dump());
    }
  }
  c.expect(checked >= 5, "only " + std::to_string(checked) + " compact subgradient sets in the corpus");
  return c;
}

PolyCone random_cone(std::mt19937_64& rng) {
  std::uniform_int_distribution<int> dim_d(1, 3), count_d(0, 5), lin_d(0, 1);
  std::normal_distribution<double> g;
  const auto n = static_cast<std::size_t>(dim_d(rng));
  auto draw = [&] {
    Vec v(n);
    for (auto& x : v) x = g(rng);
    return v;
  };
  std::vector<Vec> rays, lin;
  for (int k = count_d(rng); k > 0; --k) rays.push_back(draw());
  if (n > 1 && lin_d(rng)) lin.push_back(draw());
  return cone_from_generators(n, rays, lin);
}

Check polar_and_routes() {
  Check c;
  std::mt19937_64 rng(20240601);
  for (int i = 0; i < 200; ++i) {
    const auto k = random_cone(rng);
    const auto p = polar_cone(k);
    // Definition check: every polar generator makes a nonpositive product with every generator of K.
    for (const auto& w : p.rays) {
      for (const auto& g : k.rays) c.expect(dot(w, g) <= 1e-9 * norm(w) * norm(g), "polar ray not in the polar");
      for (const auto& l : k.lineality) c.expect(std::abs(dot(w, l)) <= 1e-9 * norm(w) * norm(l), "polar ray vs lineality");
    }
    c.expect(set_eq(polar_cone(p), k, 1e-7), "polar involution fails on random cone #" + std::to_string(i));
  }
  const LadderConfig cfg;
  const Tolerance route_tol{1e-2, 1e-2, 1e-2};
  std::size_t compared = 0;
  for (const auto& f : corpus_functions()) {
    std::vector<SubgradientSetAtInfinity> routes;
    if (is_piecewise_affine(f)) routes.push_back(subgradients_epigraph_polar(f, cfg));
    if (classify_lipschitz_at_infinity(f, cfg).verdict == LipschitzClass::LipschitzAtInfinity) {
      routes.push_back(subgradients_gradient_sampling(f, cfg, true));
    }
    try {
      routes.push_back(subgradients_support_reconstruction(f, cfg));
    } catch (const EstimateUnavailable&) {
    }
    for (std::size_t a = 0; a + 1 < routes.size(); ++a) {
      ++compared;
      c.expect(set_eq(routes[a].set, routes[a + 1].set, route_tol),
               f.source + ": " + to_string(routes[a].route) + " and " + to_string(routes[a + 1].route) + " disagree");
    }
  }
  c.expect(compared >= 5, "only " + std::to_string(compared) + " route comparisons");
  return c;
}

Check sum_rule_suite() {
  Check c;
  const auto& run = corpus_run();
  std::size_t qualified = 0;
  bool saw_empty_branch = false;
  for (const auto& o : run.summary.cases) {
    if (o.report.is_null() || o.report.value("kind", "") != "sumrule") continue;
    const auto& r = o.report["result"];
    if (r["empty_branch"].get<bool>()) {
      saw_empty_branch = true;
      c.expect(r["holds"].get<bool>(), o.id + ": empty branch does not hold");
      continue;
    }
    if (!r["qualification_witnessed"].get<bool>()) continue;
    ++qualified;
    c.expect(r["inclusion_holds"].get<bool>(), o.id + ": inclusion fails");
    c.expect(r["directional_holds"].get<bool>(), o.id + ": directional inequality fails");
  }
  c.expect(qualified >= 10, "only " + std::to_string(qualified) + " qualified pairs");
  c.expect(saw_empty_branch, "no pair routed through the empty-set branch");

  const auto cube = sum_rule_check(parse_function("x1^3"), parse_function("@dim 1\n0"), LadderConfig{});
  c.expect(cube.empty_branch && cube.holds(), "cube + 0 not handled by the empty-set branch");
  return c;
}

Check fermat_suite() {
  Check c;
  const LadderConfig cfg;
  const auto decay = fermat_at_infinity(parse_function("exp(-x1)"), cfg);
  c.expect(decay.status == CertificateStatus::Holds, std::string("exp(-x): ") + to_string(decay.status));
  const auto hyp = constrained_condition_at_infinity(parse_function("x1", 2), parse_set(kHyperbolic, 2), cfg);
  c.expect(hyp.status == CertificateStatus::Holds, std::string("hyperbolic: ") + to_string(hyp.status));
  const auto sq = fermat_at_infinity(parse_function("x1^2"), cfg);
  c.expect(sq.status == CertificateStatus::NotApplicable && sq.reason == "infimum attained", "x^2: " + sq.reason);
  const auto lin = fermat_at_infinity(parse_function("3*x1 - 2*x2"), cfg);
  c.expect(lin.status == CertificateStatus::NotApplicable && lin.reason == "unbounded below", "<a,x>: " + lin.reason);
  return c;
}

// Independent model of the conventions: values are (kind, x) with kind -1, 0, +1.
struct Model {
  int kind;
  double x;
};

Model model_add(Model a, Model b) {
  if (a.kind == 1 || b.kind == 1) return {1, 0};
  if (a.kind == -1 || b.kind == -1) return {-1, 0};
  return {0, a.x + b.x};
}

bool same(const ExtendedReal& e, Model m) {
  if (m.kind == 1) return e.is_pos_inf();
  if (m.kind == -1) return e.is_neg_inf();
  return e.is_finite() && e.value() == m.x;
}

Check extended_real_table() {
  Check c;
  const std::vector<Model> values{{-1, 0}, {0, -2.5}, {0, 0.0}, {0, 3.0}, {1, 0}};
  auto make = [](Model m) {
    return m.kind == 1 ? ExtendedReal::pos_inf() : m.kind == -1 ? ExtendedReal::neg_inf() : ExtendedReal(m.x);
  };
  auto name = [](Model m) { return m.kind == 1 ? std::string("+inf") : m.kind == -1 ? "-inf" : std::to_string(m.x); };
  for (const auto& a : values) {
    for (const auto& b : values) {
      c.expect(same(make(a) + make(b), model_add(a, b)), name(a) + " + " + name(b));
      c.expect(same(make(a) - make(b), model_add(a, {-b.kind, -b.x})), name(a) + " - " + name(b));
      const bool a_inf = a.kind != 0, b_inf = b.kind != 0;
      if (!a_inf && !b_inf) {
        c.expect(same(make(a) * make(b), {0, a.x * b.x}), name(a) + " * " + name(b));
      } else {
        const double sa = a_inf ? a.kind : (a.x > 0) - (a.x < 0);
        const double sb = b_inf ? b.kind : (b.x > 0) - (b.x < 0);
        if (sa * sb == 0) {
          bool threw = false;
          try {
            (void)(make(a) * make(b));
          } catch (const UndefinedOperation&) {
            threw = true;
          }
          c.expect(threw, name(a) + " * " + name(b) + " should be undefined");
        } else {
          c.expect(same(make(a) * make(b), {sa * sb > 0 ? 1 : -1, 0}), name(a) + " * " + name(b));
        }
      }
      const bool less = a.kind != b.kind ? a.kind < b.kind : (a.kind == 0 && a.x < b.x);
      c.expect((make(a) < make(b)) == less, name(a) + " < " + name(b));
      const std::vector<ExtendedReal> pair{make(a), make(b)};
      c.expect(ext_inf(pair) == (less ? make(a) : make(b)), "inf{" + name(a) + ", " + name(b) + "}");
      c.expect(ext_sup(pair) == (less ? make(b) : make(a)), "sup{" + name(a) + ", " + name(b) + "}");
    }
  }
  const std::vector<ExtendedReal> none;
  c.expect(ext_inf(none).is_pos_inf(), "inf of the empty set");
  c.expect(ext_sup(none).is_neg_inf(), "sup of the empty set");
  return c;
}

Check determinism() {
  Check c;
  const auto& first = corpus_run();
  c.expect(first.summary.all_passed(), std::to_string(first.summary.failures()) + " corpus cases fail");
  for (const auto& o : first.summary.cases) {
    for (const auto& f : o.failures) c.expect(false, o.id + ": " + f);
  }
  const auto second = run_cases(first.cases, LadderConfig{}, 1);
  c.expect(second.cases.size() == first.summary.cases.size(), "case count changed");
  for (std::size_t i = 0; i < std::min(second.cases.size(), first.summary.cases.size()); ++i) {
    const auto& a = first.summary.cases[i];
    const auto& b = second.cases[i];
    c.expect(a.id == b.id, "case order changed at " + std::to_string(i));
    c.expect(without_timing(a.report).dump() == without_timing(b.report).dump(), a.id + ": report bytes differ");
  }
  return c;
}

}  // namespace

int main() {
  const std::vector<std::tuple<int, std::string, double, std::function<Check()>>> criteria{
      {1, "subgradient sets of the kink, exp and cube functions", 10.0, subgradient_triple},
      {2, "directional Lipschitz verdicts for exp(x1) + x2", 30.0, directional_lipschitz},
      {3, "normal cone, subgradients and certificate on the hyperbolic region", 0.0, constrained_hyperbolic},
      {4, "gradient sampling and the Lipschitz classifier", 0.0, lipschitz_suite},
      {5, "support/subderivative duality over the corpus", 0.0, duality_suite},
      {6, "polar involution and route agreement", 0.0, polar_and_routes},
      {7, "sum rule over qualified corpus pairs", 0.0, sum_rule_suite},
      {8, "Fermat and constrained optimality verdicts", 0.0, fermat_suite},
      {9, "extended-real convention table", 0.0, extended_real_table},
      {10, "corpus passes and reruns byte-identically", 0.0, determinism},
  };
  int failed = 0;
  for (const auto& [id, title, budget, run] : criteria) {
    const auto t0 = std::chrono::steady_clock::now();
    Check c;
    try {
      c = run();
    } catch (const std::exception& e) {
      c.problems.push_back(std::string("exception: ") + e.what());
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (budget > 0 && secs > budget) c.problems.push_back("took " + std::to_string(secs) + " s");
    std::ostringstream line;
    line << (c.ok() ? "PASS" : "FAIL") << " criterion " << id << ": " << title << " (" << std::fixed
         << std::setprecision(2) << secs << " s)";
    std::cout << line.str() << "\n";
    for (const auto& p : c.problems) std::cout << "    " << p << "\n";
    if (!c.ok()) ++failed;
  }
  std::cout << (10 - failed) << "/10 criteria passed\n";
  return failed == 0 ? 0 : 1;
}
