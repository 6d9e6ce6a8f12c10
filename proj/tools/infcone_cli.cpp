#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include "CLI11.hpp"
#include "infcone/infcone.hpp"

using namespace infcone;

namespace {

std::vector<double> parse_list(const std::string& text, const char* what) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t used = 0;
      out.push_back(std::stod(item, &used));
      if (item.find_first_not_of(" \t", used) != std::string::npos) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw CLI::ValidationError(what, "'" + item + "' is not a number");
    }
  }
  if (out.empty()) throw CLI::ValidationError(what, "empty list");
  return out;
}

// Shells rarely pass real newlines; accept "\n" and ';;' as line breaks for directives.
std::string unescape_source(std::string s) {
  for (const char* pat : {"\\n", ";;"}) {
    for (std::size_t pos; (pos = s.find(pat)) != std::string::npos;) s.replace(pos, 2, "\n");
  }
  return s;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read " + path);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

void write_output(const std::string& path, const std::string& text) {
  if (path.empty()) {
    std::cout << text;
    return;
  }
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << text;
}

struct Globals {
  std::uint64_t seed = LadderConfig{}.seed;
  bool seed_set = false;
  std::string config_path, out_path, radii, steps, eps;
  double tol = 0;
  std::size_t samples = 0;

  LadderConfig config() const {
    LadderConfig cfg;
    if (!config_path.empty()) cfg = config_from_json(json::parse(read_file(config_path)), cfg);
    if (seed_set) cfg.seed = seed;
    if (tol > 0) cfg.tol.abs_tol = cfg.tol.rel_tol = tol;
    if (!radii.empty()) cfg.radii = parse_list(radii, "--radii");
    if (!steps.empty()) cfg.steps = parse_list(steps, "--steps");
    if (!eps.empty()) cfg.eps_ball = parse_list(eps, "--eps");
    if (samples > 0) cfg.samples_per_shell = samples;
    cfg.validate();
    return cfg;
  }
};

struct RequestOptions {
  std::string function, function2, set, direction, index, route = "auto";
  std::size_t dim = 0;
  std::size_t grid = 16;
  bool no_duality = false;

  AnalysisRequest build(RequestKind kind, const LadderConfig& cfg, const std::string& out) const {
    AnalysisRequest r;
    r.kind = kind;
    r.function = unescape_source(function);
    r.function2 = unescape_source(function2);
    r.set = unescape_source(set);
    if (dim > 0) r.dim = dim;
    if (!direction.empty()) r.direction = parse_list(direction, "--direction");
    if (!index.empty()) {
      IndexSet idx;
      for (double c : parse_list(index, "--index")) {
        if (c < 1 || c != std::floor(c)) throw CLI::ValidationError("--index", "coordinates are 1-based integers");
        idx.coords.push_back(static_cast<std::size_t>(c) - 1);
      }
      r.index_set = idx;
    }
    r.route = route;
    r.duality = !no_duality;
    r.grid = grid;
    r.cfg = cfg;
    r.output_path = out;
    return r;
  }
};

int run_and_print(const AnalysisRequest& req, const std::string& out) {
  try {
    write_output(out, run_request(req).dump(2) + "\n");
    return kExitOk;
  } catch (const AnalysisError& e) {
    std::cerr << "infcone: " << e.module() << ": " << e.type() << ": " << e.what() << "\n";
    if (!out.empty()) write_output(out, error_report(req, e).dump(2) + "\n");
    return e.exit_code();
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Cones, subgradients and optimality conditions at infinity"};
  app.require_subcommand(1);
  app.fallthrough();
  app.set_version_flag("--version", std::string(kLibraryVersion));

  Globals g;
  app.add_option("--seed", g.seed, "RNG seed")->each([&](const std::string&) { g.seed_set = true; });
  app.add_option("--config", g.config_path, "JSON ladder configuration")->check(CLI::ExistingFile);
  app.add_option("--out", g.out_path, "write output here instead of stdout");
  app.add_option("--tol", g.tol, "absolute and relative tolerance")->check(CLI::PositiveNumber);
  app.add_option("--radii", g.radii, "comma-separated increasing radii");
  app.add_option("--steps", g.steps, "comma-separated decreasing steps");
  app.add_option("--eps", g.eps, "comma-separated decreasing ball radii");
  app.add_option("--samples", g.samples, "samples per shell")->check(CLI::PositiveNumber);

  RequestOptions ro;
  auto add_function = [&](CLI::App* sub, const char* flag, std::string& target, bool required) {
    auto* o = sub->add_option(flag, target, "function source (expression or piecewise form)");
    if (required) o->required();
  };
  auto add_set = [&](CLI::App* sub, bool required) {
    auto* o = sub->add_option("-s,--set", ro.set, "set source: semicolon-separated constraints");
    if (required) o->required();
  };
  auto add_dim = [&](CLI::App* sub) { sub->add_option("--dim", ro.dim, "ambient dimension"); };
  auto add_direction = [&](CLI::App* sub) {
    sub->add_option("-v,--direction", ro.direction, "comma-separated direction, e.g. --direction=-1,0")->required();
  };
  auto add_index = [&](CLI::App* sub) { sub->add_option("--index", ro.index, "1-based coordinate subset I"); };

  std::map<CLI::App*, RequestKind> kinds;
  auto* cones = app.add_subcommand("cones", "tangent and normal cones at infinity of a set or epigraph");
  add_function(cones, "-f,--function", ro.function, false);
  add_set(cones, false);
  add_dim(cones);
  add_index(cones);
  kinds[cones] = RequestKind::Cones;

  auto* subdiff = app.add_subcommand("subdiff", "subgradient set at infinity with duality table");
  add_function(subdiff, "-f,--function", ro.function, true);
  add_dim(subdiff);
  subdiff->add_option("--route", ro.route, "auto|epigraph_polar|gradient_sampling|support_reconstruction");
  subdiff->add_flag("--no-duality", ro.no_duality, "skip the support/subderivative table");
  subdiff->add_option("--grid", ro.grid, "directions in the duality table")->check(CLI::PositiveNumber);
  kinds[subdiff] = RequestKind::Subdiff;

  auto* lip = app.add_subcommand("lipschitz", "Lipschitz-at-infinity classification");
  add_function(lip, "-f,--function", ro.function, true);
  add_dim(lip);
  kinds[lip] = RequestKind::Lipschitz;

  auto* dirlip = app.add_subcommand("dirlip", "directional Lipschitz test");
  add_function(dirlip, "-f,--function", ro.function, true);
  add_direction(dirlip);
  add_dim(dirlip);
  kinds[dirlip] = RequestKind::Dirlip;

  auto* sumrule = app.add_subcommand("sumrule", "sum rule check for f + g");
  add_function(sumrule, "-f,--function", ro.function, true);
  add_function(sumrule, "-g,--function2", ro.function2, true);
  add_dim(sumrule);
  kinds[sumrule] = RequestKind::Sumrule;

  auto* distance = app.add_subcommand("distance", "subgradients at infinity of the distance function");
  add_set(distance, true);
  add_dim(distance);
  kinds[distance] = RequestKind::Distance;

  auto* optcheck = app.add_subcommand("optcheck", "optimality condition at infinity, optionally over a set");
  add_function(optcheck, "-f,--function", ro.function, true);
  add_set(optcheck, false);
  add_dim(optcheck);
  kinds[optcheck] = RequestKind::Optcheck;

  auto* tangent = app.add_subcommand("tangent-test", "tangent-cone membership of a direction");
  add_set(tangent, true);
  add_direction(tangent);
  add_index(tangent);
  add_dim(tangent);
  kinds[tangent] = RequestKind::TangentTest;

  std::string corpus_dir, junit_path;
  unsigned jobs = 0;
  auto* corpus = app.add_subcommand("corpus", "run a directory of golden cases");
  corpus->add_option("dir", corpus_dir, "corpus directory")->required();
  corpus->add_option("--junit", junit_path, "write the junit summary here");
  corpus->add_option("--jobs", jobs, "worker threads (0 = all cores)");

  std::string report_path;
  auto* plot = app.add_subcommand("plotdata", "CSV of angle, f-up estimate, support and residual");
  plot->add_option("--report", report_path, "existing subdiff report")->check(CLI::ExistingFile);
  add_function(plot, "-f,--function", ro.function, false);
  add_dim(plot);
  plot->add_option("--route", ro.route, "subgradient route when computing from -f");
  plot->add_option("--grid", ro.grid, "directions")->check(CLI::PositiveNumber);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitParse;
  }

  try {
    const LadderConfig cfg = g.config();

    if (corpus->parsed()) {
      const auto summary = run_corpus(corpus_dir, cfg, jobs);
      for (const auto& w : summary.warnings) std::cerr << "warning: " << w << "\n";
      for (const auto& m : summary.missing_expected) std::cerr << "missing expected: " << m << "\n";
      for (const auto& c : summary.cases) {
        std::cerr << (c.passed ? "PASS " : "FAIL ") << c.id << "\n";
        for (const auto& f : c.failures) std::cerr << "    " << f << "\n";
      }
      std::cerr << summary.cases.size() - summary.failures() << "/" << summary.cases.size() << " cases passed\n";
      if (!junit_path.empty()) write_output(junit_path, summary.junit_xml());
      write_output(g.out_path, summary.to_json().dump(2) + "\n");
      return summary.exit_code();
    }

    if (plot->parsed()) {
      json report;
      if (!report_path.empty()) {
        report = json::parse(read_file(report_path));
      } else if (!ro.function.empty()) {
        try {
          report = run_request(ro.build(RequestKind::Subdiff, cfg, ""));
        } catch (const AnalysisError& e) {
          std::cerr << "infcone: " << e.module() << ": " << e.type() << ": " << e.what() << "\n";
          return e.exit_code();
        }
      } else {
        std::cerr << "infcone: plotdata needs --report or --function\n";
        return kExitParse;
      }
      write_output(g.out_path, emit_plot_data(report));
      return kExitOk;
    }

    for (const auto& [sub, kind] : kinds) {
      if (sub->parsed()) return run_and_print(ro.build(kind, cfg, g.out_path), g.out_path);
    }
  } catch (const CLI::ValidationError& e) {
    std::cerr << "infcone: " << e.what() << "\n";
    return kExitParse;
  } catch (const std::exception& e) {
    std::cerr << "infcone: " << e.what() << "\n";
    return kExitPrecondition;
  }
  return kExitInternal;
}
