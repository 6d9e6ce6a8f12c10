#pragma once

// Request dispatch, golden-case corpus runner and plot-data emission.

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "infcone/json_io.hpp"

#ifndef INFCONE_VERSION
#define INFCONE_VERSION "0.0.0"
#endif

namespace infcone {

inline constexpr const char* kLibraryVersion = INFCONE_VERSION;

enum ExitCode : int {
  kExitOk = 0,
  kExitCheckFailed = 1,
  kExitParse = 2,
  kExitCapability = 3,
  kExitInconclusive = 4,
  kExitPrecondition = 5,
  kExitInternal = 6,
};

/// Failure during a request, tagged with the module that raised it.
class AnalysisError : public std::runtime_error {
 public:
  AnalysisError(std::string module, std::string type, const std::string& what, int exit_code)
      : std::runtime_error(what), module_(std::move(module)), type_(std::move(type)), exit_code_(exit_code) {}
  [[nodiscard]] const std::string& module() const { return module_; }
  [[nodiscard]] const std::string& type() const { return type_; }
  [[nodiscard]] int exit_code() const { return exit_code_; }

  [[nodiscard]] json to_json() const { return {{"module", module_}, {"type", type_}, {"message", what()}}; }

 private:
  std::string module_;
  std::string type_;
  int exit_code_;
};

enum class RequestKind { Cones, Subdiff, Lipschitz, Dirlip, Sumrule, Distance, Optcheck, TangentTest };

inline const char* to_string(RequestKind k) {
  switch (k) {
    case RequestKind::Cones: return "cones";
    case RequestKind::Subdiff: return "subdiff";
    case RequestKind::Lipschitz: return "lipschitz";
    case RequestKind::Dirlip: return "dirlip";
    case RequestKind::Sumrule: return "sumrule";
    case RequestKind::Distance: return "distance";
    case RequestKind::Optcheck: return "optcheck";
    case RequestKind::TangentTest: return "tangent-test";
  }
  return "?";
}

inline RequestKind request_kind_from_string(const std::string& s) {
  for (auto k : {RequestKind::Cones, RequestKind::Subdiff, RequestKind::Lipschitz, RequestKind::Dirlip,
                 RequestKind::Sumrule, RequestKind::Distance, RequestKind::Optcheck, RequestKind::TangentTest}) {
    if (s == to_string(k)) return k;
  }
  throw std::invalid_argument("unknown request kind '" + s + "'");
}

struct AnalysisRequest {
  RequestKind kind = RequestKind::Subdiff;
  std::string function;
  std::string function2;
  std::string set;
  std::optional<std::size_t> dim;
  std::optional<Vec> direction;
  std::optional<IndexSet> index_set;
  std::string route = "auto";  // subdiff only
  bool duality = true;         // subdiff only
  std::size_t grid = 16;       // directions in the duality table
  LadderConfig cfg;
  std::string output_path;

  void validate() const {
    auto need = [&](bool ok, const char* what) {
      if (!ok) throw std::invalid_argument(std::string(to_string(kind)) + " request needs " + what);
    };
    switch (kind) {
      case RequestKind::Cones: need(function.empty() != set.empty(), "exactly one of 'function' or 'set'"); break;
      case RequestKind::Subdiff:
      case RequestKind::Lipschitz: need(!function.empty(), "'function'"); break;
      case RequestKind::Dirlip: need(!function.empty() && direction.has_value(), "'function' and 'direction'"); break;
      case RequestKind::Sumrule: need(!function.empty() && !function2.empty(), "'function' and 'function2'"); break;
      case RequestKind::Distance: need(!set.empty(), "'set'"); break;
      case RequestKind::Optcheck: need(!function.empty(), "'function'"); break;
      case RequestKind::TangentTest: need(!set.empty() && direction.has_value(), "'set' and 'direction'"); break;
    }
    if (kind == RequestKind::Subdiff) {
      static const std::vector<std::string> routes{"auto", "epigraph_polar", "gradient_sampling", "support_reconstruction"};
      if (std::find(routes.begin(), routes.end(), route) == routes.end()) {
        throw std::invalid_argument("unknown subgradient route '" + route + "'");
      }
    }
    if (grid == 0) throw std::invalid_argument("grid must be positive");
    cfg.validate();
  }
};

inline json to_json(const AnalysisRequest& r) {
  json j{{"kind", to_string(r.kind)}, {"config", to_json(r.cfg)}};
  if (!r.function.empty()) j["function"] = r.function;
  if (!r.function2.empty()) j["function2"] = r.function2;
  if (!r.set.empty()) j["set"] = r.set;
  if (r.dim) j["dim"] = *r.dim;
  if (r.direction) j["direction"] = *r.direction;
  if (r.index_set) j["index_set"] = to_json(*r.index_set);
  if (r.kind == RequestKind::Subdiff) {
    j["route"] = r.route;
    j["duality"] = r.duality;
    j["grid"] = r.grid;
  }
  return j;
}

/// Reads a request object; `base` supplies defaults for any config field left out.
inline AnalysisRequest request_from_json(const json& j, const LadderConfig& base = {}) {
  AnalysisRequest r;
  r.kind = request_kind_from_string(j.at("kind").get<std::string>());
  r.function = j.value("function", "");
  r.function2 = j.value("function2", "");
  r.set = j.value("set", "");
  if (j.contains("dim")) r.dim = j["dim"].get<std::size_t>();
  if (j.contains("direction")) r.direction = j["direction"].get<Vec>();
  if (j.contains("index_set")) r.index_set = index_set_from_json(j["index_set"]);
  r.route = j.value("route", "auto");
  r.duality = j.value("duality", true);
  r.grid = j.value("grid", std::size_t{16});
  r.cfg = j.contains("config") ? config_from_json(j["config"], base) : base;
  r.output_path = j.value("out", "");
  return r;
}

/// Directions for the support/subderivative table. In one dimension v = cos(angle),
/// so the table sweeps [-1, 1]; in two dimensions v is the unit vector at that angle.
inline std::vector<std::pair<double, Vec>> duality_grid(std::size_t n, std::size_t count = 16) {
  std::vector<std::pair<double, Vec>> out;
  if (n <= 2) {
    for (std::size_t j = 0; j < count; ++j) {
      const double a = 2.0 * std::numbers::pi * static_cast<double>(j) / static_cast<double>(count);
      auto snap = [](double x) { return std::abs(x) < 1e-12 ? 0.0 : x; };
      out.emplace_back(a, n == 1 ? Vec{snap(std::cos(a))} : Vec{snap(std::cos(a)), snap(std::sin(a))});
    }
    return out;
  }
  auto dirs = direction_grid(n);
  if (dirs.size() > count) dirs.resize(count);
  for (auto& v : dirs) out.emplace_back(std::acos(std::clamp(v[0], -1.0, 1.0)), std::move(v));
  return out;
}

namespace detail {

/// Compares support and f-up values; both sides may be infinite.
inline json duality_row(double angle, const Vec& v, const PolyConvexSet& s, const LimitEstimate& e, bool exact_set,
                        const Tolerance& tol) {
  const ExtendedReal h = support_function(s, v);
  json row{{"angle", angle}, {"direction", v}, {"support", to_json(h)}, {"error_bar", number_or_inf(e.error_bar)}};
  row["estimate"] = e.value ? to_json(*e.value) : json(nullptr);
  double residual = std::numeric_limits<double>::quiet_NaN();
  double bar = std::numeric_limits<double>::quiet_NaN();
  if (e.value) {
    const ExtendedReal f = *e.value;
    if (h.is_finite() && f.is_finite()) {
      residual = std::abs(h.value() - f.value());
      bar = std::max(e.error_bar, tol.abs_tol) + (exact_set ? 0.0 : 1e-3 * std::max(1.0, std::abs(h.value())));
    } else {
      residual = h == f ? 0.0 : std::numeric_limits<double>::infinity();
      bar = 0.0;
    }
  }
  row["residual"] = number_or_inf(residual);
  row["combined_error_bar"] = number_or_inf(bar);
  row["within_error_bar"] = !std::isnan(residual) && residual <= bar;
  return row;
}

inline std::string utc_timestamp() {
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

inline const char* owning_module(RequestKind k) {
  switch (k) {
    case RequestKind::Cones: return "cones-at-infinity";
    case RequestKind::Optcheck: return "optimality";
    case RequestKind::TangentTest: return "asymptotic-estimators";
    default: return "subdiff-at-infinity";
  }
}

inline json subdiff_result(const AnalysisRequest& req, const FuncDesc& f) {
  const auto& cfg = req.cfg;
  const auto verdict = classify_lipschitz_at_infinity(f, cfg);
  SubgradientSetAtInfinity s;
  if (req.route == "auto") {
    s = subgradients_best(f, cfg, &verdict);
  } else if (req.route == "epigraph_polar") {
    s = subgradients_epigraph_polar(f, cfg);
  } else if (req.route == "gradient_sampling") {
    s = subgradients_gradient_sampling(f, cfg, verdict.verdict == LipschitzClass::LipschitzAtInfinity);
  } else {
    s = subgradients_support_reconstruction(f, cfg);
  }
  json out{{"subgradients", to_json(s)},
           {"route", to_string(s.route)},
           {"lipschitz", to_json(verdict)},
           {"singular", to_json(singular_subgradients(f, cfg))}};
  if (req.duality) {
    const bool exact = s.route == SubgradientRoute::EpigraphPolar;
    json rows = json::array();
    double worst = 0.0;
    bool all_within = true;
    for (const auto& [angle, v] : duality_grid(f.dim, req.grid)) {
      auto row = duality_row(angle, v, s.set, upper_subderivative(f, v, cfg), exact, cfg.tol);
      if (row["residual"].is_number()) worst = std::max(worst, row["residual"].get<double>());
      else if (row["residual"].is_string()) worst = std::numeric_limits<double>::infinity();
      all_within = all_within && row["within_error_bar"].get<bool>();
      rows.push_back(std::move(row));
    }
    out["duality_residuals"] = std::move(rows);
    out["max_duality_residual"] = number_or_inf(worst);
    out["duality_within_error_bars"] = all_within;
  }
  return out;
}

inline json dispatch(const AnalysisRequest& req, std::string& stage) {
  const auto& cfg = req.cfg;
  stage = "function-model";
  std::optional<FuncDesc> f, g;
  std::optional<SetDesc> c;
  if (!req.function.empty()) f = parse_function(req.function, req.dim);
  if (!req.function2.empty()) g = parse_function(req.function2, f ? std::optional(f->dim) : req.dim);
  if (!req.set.empty()) c = parse_set(req.set, f ? std::optional(f->dim) : req.dim);
  stage = owning_module(req.kind);
  switch (req.kind) {
    case RequestKind::Cones: {
      if (f) return to_json(epigraph_cones(*f, cfg, true));
      const auto idx = req.index_set.value_or(IndexSet::all(c->dim));
      idx.validate(c->dim);
      return to_json(set_cones_at_infinity(*c, idx, cfg, true));
    }
    case RequestKind::Subdiff: return subdiff_result(req, *f);
    case RequestKind::Lipschitz: {
      const auto verdict = classify_lipschitz_at_infinity(*f, cfg);
      json out{{"lipschitz", to_json(verdict)}, {"verdict", to_string(verdict.verdict)}};
      try {
        const auto s = subgradients_best(*f, cfg, &verdict);
        out["subgradients"] = to_json(s);
      } catch (const EstimateUnavailable& e) {
        out["subgradients"] = nullptr;
        out["notes"] = json::array({std::string("subgradient set unavailable: ") + e.what()});
      }
      return out;
    }
    case RequestKind::Dirlip: return to_json(directionally_lipschitz_test(*f, *req.direction, cfg));
    case RequestKind::Sumrule: return to_json(sum_rule_check(*f, *g, cfg));
    case RequestKind::Distance: return to_json(distance_subgradients_at_infinity(*c, cfg));
    case RequestKind::Optcheck:
      return to_json(c ? constrained_condition_at_infinity(*f, *c, cfg) : fermat_at_infinity(*f, cfg));
    case RequestKind::TangentTest: {
      const auto idx = req.index_set.value_or(IndexSet::all(c->dim));
      idx.validate(c->dim);
      json out{{"membership", to_json(tangent_membership(*c, *req.direction, idx, cfg))}};
      try {
        out["interior"] = to_json(interior_tangent_test(*c, *req.direction, idx, cfg));
      } catch (const PreconditionError& e) {
        out["interior"] = {{"verdict", "inconclusive"}, {"note", e.what()}};
      }
      return out;
    }
  }
  throw std::logic_error("unhandled request kind");
}

}  // namespace detail

/**
 * @brief Validates and runs one request.
 *
 * The report carries the schema version, library version, seed, request echo
 * and result. Wall time and timestamp live under "timing" so that reports can
 * be compared byte for byte with that key removed.
 * @throws AnalysisError with the failing module and a suggested exit code.
 */
inline json run_request(const AnalysisRequest& req) {
  std::string stage = "cli-report";
  const auto t0 = std::chrono::steady_clock::now();
  json result;
  try {
    req.validate();
    result = detail::dispatch(req, stage);
  } catch (const ParseError& e) {
    throw AnalysisError(stage, "parse_error", e.what(), kExitParse);
  } catch (const CapabilityError& e) {
    throw AnalysisError(stage, "capability_error", e.what(), kExitCapability);
  } catch (const EstimateUnavailable& e) {
    throw AnalysisError(stage, "inconclusive", e.what(), kExitInconclusive);
  } catch (const PreconditionError& e) {
    throw AnalysisError(stage, "precondition_error", e.what(), kExitPrecondition);
  } catch (const std::invalid_argument& e) {
    throw AnalysisError(stage, "invalid_request", e.what(), kExitPrecondition);
  } catch (const std::exception& e) {
    throw AnalysisError(stage, "internal_error", e.what(), kExitInternal);
  }
  const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return {{"schema", kSchemaVersion},
          {"version", kLibraryVersion},
          {"kind", to_string(req.kind)},
          {"seed", req.cfg.seed},
          {"request", to_json(req)},
          {"result", std::move(result)},
          {"timing", {{"wall_time_s", wall}, {"timestamp", detail::utc_timestamp()}}}};
}

/// Report with the timing block removed, for determinism comparisons.
inline json without_timing(json report) {
  report.erase("timing");
  return report;
}

/// Error report in the same envelope as a successful one.
inline json error_report(const AnalysisRequest& req, const AnalysisError& e) {
  return {{"schema", kSchemaVersion}, {"version", kLibraryVersion}, {"kind", to_string(req.kind)},
          {"seed", req.cfg.seed},     {"request", to_json(req)},       {"error", e.to_json()},
          {"exit_code", e.exit_code()}};
}

// ---------------------------------------------------------------------------
// Corpus

enum class Provenance { Paper, Trivial, DerivedOracle };

inline const char* to_string(Provenance p) {
  switch (p) {
    case Provenance::Paper: return "paper";
    case Provenance::Trivial: return "trivial";
    case Provenance::DerivedOracle: return "derived-oracle";
  }
  return "?";
}

inline std::optional<Provenance> provenance_from_string(const std::string& s) {
  if (s == "paper") return Provenance::Paper;
  if (s == "trivial") return Provenance::Trivial;
  if (s == "derived-oracle") return Provenance::DerivedOracle;
  return std::nullopt;
}

/**
 * @brief One golden case.
 *
 * `expected` maps JSON pointers into the report to expected values. Sets are
 * compared with set_eq, cones with cone set_eq under cone_angle_tol, numbers
 * and extended reals within abs_tol + rel_tol*|expected|, and {"range": [lo, hi]}
 * objects by inclusion.
 */
struct GoldenCase {
  std::string id;
  json request;
  std::optional<json> expected;
  Tolerance tolerance;
  std::optional<Provenance> provenance;
  std::string source_file;
};

inline GoldenCase golden_case_from_json(const json& j) {
  GoldenCase g;
  g.id = j.at("id").get<std::string>();
  g.request = j.at("request");
  if (j.contains("expected") && !j["expected"].is_null()) g.expected = j["expected"];
  if (j.contains("provenance") && j["provenance"].is_string()) g.provenance = provenance_from_string(j["provenance"]);
  if (j.contains("tolerance")) {
    const auto& t = j["tolerance"];
    g.tolerance.abs_tol = t.value("abs_tol", g.tolerance.abs_tol);
    g.tolerance.rel_tol = t.value("rel_tol", g.tolerance.rel_tol);
    g.tolerance.cone_angle_tol = t.value("cone_angle_tol", g.tolerance.cone_angle_tol);
    g.tolerance.validate();
  }
  return g;
}

namespace detail {

inline bool is_extended(const json& j) {
  return j.is_number() || (j.is_string() && (j == "+inf" || j == "-inf"));
}

inline void match_value(const json& actual, const json& expected, const Tolerance& tol, const std::string& path,
                        std::vector<std::string>& failures) {
  auto fail = [&](const std::string& why) { failures.push_back(path + ": " + why); };
  try {
    if (expected.is_object() && expected.contains("range")) {
      if (!is_extended(actual)) return fail("expected a number, got " + actual.dump());
      const auto x = extended_from_json(actual);
      const auto lo = extended_from_json(expected["range"].at(0));
      const auto hi = extended_from_json(expected["range"].at(1));
      const ExtendedReal slack(tol.abs_tol);
      if (x < lo - slack || x > hi + slack) fail(actual.dump() + " outside " + expected["range"].dump());
      return;
    }
    if (expected.is_object() && expected.contains("vertices")) {
      if (!set_eq(set_from_json(actual), set_from_json(expected), tol)) fail("set " + actual.dump() + " differs");
      return;
    }
    if (expected.is_object() && expected.contains("dim") && (expected.contains("rays") || expected.contains("lineality"))) {
      if (!set_eq(cone_from_json(actual), cone_from_json(expected), tol.cone_angle_tol)) {
        fail("cone " + actual.dump() + " differs");
      }
      return;
    }
    if (is_extended(expected) && is_extended(actual)) {
      const auto a = extended_from_json(actual);
      const auto e = extended_from_json(expected);
      const bool ok = a.is_finite() && e.is_finite() ? std::abs(a.value() - e.value()) <= tol.scaled(std::abs(e.value()))
                                                     : a == e;
      if (!ok) fail(actual.dump() + " != " + expected.dump());
      return;
    }
    if (expected.is_array() && actual.is_array()) {
      if (expected.size() != actual.size()) return fail("length " + std::to_string(actual.size()) + " != " +
                                                        std::to_string(expected.size()));
      for (std::size_t i = 0; i < expected.size(); ++i) {
        match_value(actual[i], expected[i], tol, path + "/" + std::to_string(i), failures);
      }
      return;
    }
    if (actual != expected) fail(actual.dump() + " != " + expected.dump());
  } catch (const std::exception& e) {
    fail(std::string("comparison failed: ") + e.what());
  }
}

}  // namespace detail

/// Failure messages for every expectation the report does not meet.
inline std::vector<std::string> compare_expected(const json& report, const json& expected, const Tolerance& tol) {
  std::vector<std::string> failures;
  for (const auto& [key, value] : expected.items()) {
    json::json_pointer ptr;
    try {
      ptr = json::json_pointer(key);
    } catch (const std::exception&) {
      failures.push_back(key + ": not a JSON pointer");
      continue;
    }
    if (!report.contains(ptr)) {
      failures.push_back(key + ": missing from report");
      continue;
    }
    detail::match_value(report.at(ptr), value, tol, key, failures);
  }
  return failures;
}

struct CaseOutcome {
  std::string id;
  std::string provenance;
  bool passed = false;
  bool refused = false;
  bool missing_expected = false;
  std::vector<std::string> failures;
  json report;  // null when the case was not run
  double seconds = 0.0;
};

struct CorpusSummary {
  std::vector<CaseOutcome> cases;  // ordered by id
  std::vector<std::string> warnings;
  std::vector<std::string> missing_expected;

  [[nodiscard]] std::size_t failures() const {
    return static_cast<std::size_t>(std::count_if(cases.begin(), cases.end(), [](const auto& c) { return !c.passed; }));
  }
  [[nodiscard]] bool all_passed() const { return failures() == 0; }
  [[nodiscard]] int exit_code() const { return all_passed() ? kExitOk : kExitCheckFailed; }

  [[nodiscard]] std::string junit_xml() const {
    auto esc = [](const std::string& s) {
      std::string o;
      for (char ch : s) {
        switch (ch) {
          case '&': o += "&amp;"; break;
          case '<': o += "&lt;"; break;
          case '>': o += "&gt;"; break;
          case '"': o += "&quot;"; break;
          default: o += ch;
        }
      }
      return o;
    };
    std::ostringstream os;
    os << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
    os << "<testsuite name=\"infcone-corpus\" tests=\"" << cases.size() << "\" failures=\"" << failures() << "\">\n";
    for (const auto& w : warnings) os << "  <!-- warning: " << esc(w) << " -->\n";
    for (const auto& c : cases) {
      char secs[32];
      std::snprintf(secs, sizeof secs, "%.3f", c.seconds);
      os << "  <testcase classname=\"" << esc(c.provenance.empty() ? "untagged" : c.provenance) << "\" name=\""
         << esc(c.id) << "\" time=\"" << secs << "\"";
      if (c.passed) {
        os << "/>\n";
        continue;
      }
      os << ">\n";
      for (const auto& f : c.failures) os << "    <failure message=\"" << esc(f) << "\"/>\n";
      os << "  </testcase>\n";
    }
    os << "</testsuite>\n";
    return os.str();
  }

  [[nodiscard]] json to_json() const {
    json cs = json::array();
    for (const auto& c : cases) {
      cs.push_back({{"id", c.id}, {"provenance", c.provenance}, {"passed", c.passed}, {"failures", c.failures}});
    }
    return {{"schema", kSchemaVersion}, {"cases", std::move(cs)}, {"failures", failures()},
            {"warnings", warnings},     {"missing_expected", missing_expected}};
  }
};

/// Runs one case against its expectations; never throws.
inline CaseOutcome run_golden_case(const GoldenCase& g, const LadderConfig& base = {}) {
  CaseOutcome out;
  out.id = g.id;
  if (!g.provenance) {
    out.refused = true;
    out.failures.push_back("refused: missing or unknown provenance tag");
    return out;
  }
  out.provenance = to_string(*g.provenance);
  const auto t0 = std::chrono::steady_clock::now();
  try {
    const auto req = request_from_json(g.request, base);
    out.report = run_request(req);
  } catch (const AnalysisError& e) {
    out.report = {{"error", e.to_json()}};
  } catch (const std::exception& e) {
    out.report = {{"error", {{"module", "cli-report"}, {"type", "invalid_request"}, {"message", e.what()}}}};
  }
  out.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  if (!g.expected) {
    out.missing_expected = true;
    out.failures.push_back("missing expected");
    return out;
  }
  out.failures = compare_expected(out.report, *g.expected, g.tolerance);
  if (out.report.contains("error") && !g.expected->contains("/error/type")) {
    out.failures.insert(out.failures.begin(), "request failed: " + out.report["error"].dump());
  }
  out.passed = out.failures.empty();
  return out;
}

/// Runs cases concurrently; outcomes are ordered by id.
inline CorpusSummary run_cases(std::vector<GoldenCase> cases, const LadderConfig& base = {}, unsigned jobs = 0) {
  std::sort(cases.begin(), cases.end(), [](const auto& a, const auto& b) { return a.id < b.id; });
  CorpusSummary summary;
  if (cases.empty()) {
    summary.warnings.push_back("corpus is empty");
    return summary;
  }
  summary.cases.resize(cases.size());
  if (jobs == 0) jobs = std::max(1U, std::thread::hardware_concurrency());
  jobs = std::min<unsigned>(jobs, static_cast<unsigned>(cases.size()));
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < cases.size(); i = next++) summary.cases[i] = run_golden_case(cases[i], base);
  };
  std::vector<std::thread> pool;
  for (unsigned t = 1; t < jobs; ++t) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
  for (std::size_t i = 0; i < cases.size(); ++i) {
    if (summary.cases[i].missing_expected) summary.missing_expected.push_back(cases[i].source_file);
  }
  return summary;
}

/// Loads every *.json file under `dir` as a golden case.
inline std::vector<GoldenCase> load_corpus(const std::filesystem::path& dir, std::vector<std::string>* problems = nullptr) {
  namespace fs = std::filesystem;
  if (!fs::is_directory(dir)) throw std::invalid_argument("corpus directory not found: " + dir.string());
  std::vector<fs::path> files;
  for (const auto& e : fs::directory_iterator(dir)) {
    if (e.is_regular_file() && e.path().extension() == ".json") files.push_back(e.path());
  }
  std::sort(files.begin(), files.end());
  std::vector<GoldenCase> out;
  for (const auto& p : files) {
    try {
      std::ifstream in(p);
      auto g = golden_case_from_json(json::parse(in));
      g.source_file = p.filename().string();
      out.push_back(std::move(g));
    } catch (const std::exception& e) {
      if (problems) problems->push_back(p.filename().string() + ": " + e.what());
    }
  }
  return out;
}

inline CorpusSummary run_corpus(const std::filesystem::path& dir, const LadderConfig& base = {}, unsigned jobs = 0) {
  std::vector<std::string> problems;
  auto summary = run_cases(load_corpus(dir, &problems), base, jobs);
  for (auto& p : problems) {
    CaseOutcome bad;
    bad.id = p.substr(0, p.find(':'));
    bad.failures.push_back("unreadable case: " + p);
    summary.cases.push_back(std::move(bad));
  }
  std::sort(summary.cases.begin(), summary.cases.end(), [](const auto& a, const auto& b) { return a.id < b.id; });
  return summary;
}

// ---------------------------------------------------------------------------
// Plot data

namespace detail {

inline std::string csv_cell(const json& j) {
  if (j.is_null()) return "nan";
  if (j.is_string()) return j.get<std::string>();
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.10g", j.get<double>());
  return buf;
}

}  // namespace detail

/**
 * @brief CSV of angle, f-up estimate, support value and residual.
 *
 * Accepts a full report or its "result" object; the duality table of a
 * subdiff report is the data source.
 * @throws std::invalid_argument when the report has no such table.
 */
inline std::string emit_plot_data(const json& report) {
  const json& result = report.contains("result") ? report["result"] : report;
  if (!result.contains("duality_residuals")) {
    throw std::invalid_argument("report has no support/subderivative table (run subdiff with duality enabled)");
  }
  std::ostringstream os;
  os << "angle,f_up,support,residual\n";
  for (const auto& row : result["duality_residuals"]) {
    os << detail::csv_cell(row["angle"]) << ',' << detail::csv_cell(row["estimate"]) << ','
       << detail::csv_cell(row["support"]) << ',' << detail::csv_cell(row["residual"]) << '\n';
  }
  return os.str();
}

}  // namespace infcone
