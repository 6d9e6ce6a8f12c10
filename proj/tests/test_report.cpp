#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "infcone/report.hpp"

using namespace infcone;
namespace fs = std::filesystem;

namespace {

const char* kKinkDown = "piecewise(x1 <= 0: 0; else: -x1)";

AnalysisRequest subdiff_request(const std::string& f) {
  AnalysisRequest r;
  r.kind = RequestKind::Subdiff;
  r.function = f;
  r.cfg.samples_per_shell = 64;
  return r;
}

std::vector<std::vector<std::string>> csv_rows(const std::string& csv) {
  std::vector<std::vector<std::string>> rows;
  std::istringstream in(csv);
  std::string line;
  while (std::getline(in, line)) {
    std::vector<std::string> cells;
    std::istringstream ls(line);
    std::string cell;
    while (std::getline(ls, cell, ',')) cells.push_back(cell);
    rows.push_back(cells);
  }
  return rows;
}

fs::path scratch_dir(const std::string& name) {
  auto dir = fs::temp_directory_path() / ("infcone_report_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

void write_case(const fs::path& dir, const json& c) {
  std::ofstream(dir / (c["id"].get<std::string>() + ".json")) << c.dump(2);
}

json affine_case(const std::string& id, double slope) {
  json set{{"dim", 1}, {"vertices", json::array({json::array({slope})})}, {"rays", json::array()}};
  json c;
  c["id"] = id;
  c["provenance"] = "trivial";
  c["request"] = {{"kind", "subdiff"}, {"function", "2*x1"}, {"duality", false}};
  c["expected"] = {{"/result/subgradients/set", set}};
  return c;
}

}  // namespace

TEST(JsonIo, ExtendedRealsRoundTrip) {
  for (const ExtendedReal x : {ExtendedReal(2.5), ExtendedReal::pos_inf(), ExtendedReal::neg_inf()}) {
    EXPECT_EQ(extended_from_json(json::parse(to_json(x).dump())), x);
  }
  EXPECT_EQ(to_json(ExtendedReal::pos_inf()), "+inf");
  EXPECT_THROW(extended_from_json("inf-ish"), std::invalid_argument);
  EXPECT_TRUE(number_or_inf(std::nan("")).is_null());
}

TEST(JsonIo, SetsAndConesRoundTrip) {
  const PolyConvexSet s{2, {{0, 0}, {1, 0}}, {{0, 1}}};
  EXPECT_TRUE(set_eq(set_from_json(to_json(s)), s));
  const auto k = cone_from_generators(3, {{1, 0, 0}}, {{0, 1, 0}});
  EXPECT_TRUE(set_eq(cone_from_json(to_json(k)), k));
  IndexSet idx;
  idx.coords = {0, 2};
  EXPECT_EQ(to_json(idx), json::array({1, 3}));
  EXPECT_EQ(index_set_from_json(to_json(idx)).coords, idx.coords);
}

TEST(JsonIo, ConfigOverlay) {
  const auto cfg = config_from_json(json::parse(R"({"samples": 32, "tol": 1e-4, "seed": 9})"));
  EXPECT_EQ(cfg.samples_per_shell, 32u);
  EXPECT_EQ(cfg.seed, 9u);
  EXPECT_DOUBLE_EQ(cfg.tol.abs_tol, 1e-4);
  EXPECT_EQ(cfg.radii, LadderConfig{}.radii);
  EXPECT_THROW(config_from_json(json::parse(R"({"radii": [10, 1]})")), std::invalid_argument);
}

TEST(RunRequest, GrowingExponential) {
  const auto report = run_request(subdiff_request("exp(x1)"));
  EXPECT_EQ(report["schema"], 1);
  EXPECT_EQ(report["version"], kLibraryVersion);
  EXPECT_EQ(report["request"]["function"], "exp(x1)");
  EXPECT_TRUE(report["timing"].contains("wall_time_s"));
  const auto s = set_from_json(report["result"]["subgradients"]["set"]);
  EXPECT_LT(hausdorff_in_box(s, PolyConvexSet{1, {{0.0}}, {{1.0}}}), 1e-2);
}

TEST(RunRequest, NegativeAbsoluteValueIsLipschitz) {
  AnalysisRequest r;
  r.kind = RequestKind::Lipschitz;
  r.function = "-abs(x1)";
  const auto report = run_request(r);
  EXPECT_EQ(report["result"]["verdict"], "lipschitz_at_infinity");
  EXPECT_TRUE(set_eq(set_from_json(report["result"]["subgradients"]["set"]), convex_hull({{-1.0}, {1.0}})));
}

TEST(RunRequest, MalformedExpressionIsASyntaxError) {
  try {
    run_request(subdiff_request("exp(x1"));
    FAIL() << "expected an AnalysisError";
  } catch (const AnalysisError& e) {
    EXPECT_EQ(e.exit_code(), 2);
    EXPECT_EQ(e.module(), "function-model");
    EXPECT_EQ(e.type(), "parse_error");
    EXPECT_NE(std::string(e.what()).find("1:7"), std::string::npos) << e.what();
  }
}

TEST(RunRequest, ValidationBeforeDispatch) {
  AnalysisRequest r;
  r.kind = RequestKind::Dirlip;
  r.function = "x1";
  try {
    run_request(r);
    FAIL() << "expected an AnalysisError";
  } catch (const AnalysisError& e) {
    EXPECT_EQ(e.module(), "cli-report");
    EXPECT_EQ(e.type(), "invalid_request");
  }
  r = subdiff_request("exp(x1)");
  r.route = "epigraph_polar";
  try {
    run_request(r);
    FAIL() << "expected an AnalysisError";
  } catch (const AnalysisError& e) {
    EXPECT_EQ(e.exit_code(), kExitCapability);
    EXPECT_EQ(e.module(), "subdiff-at-infinity");
  }
}

TEST(RunRequest, RequestJsonRoundTrip) {
  auto r = subdiff_request(kKinkDown);
  r.grid = 8;
  const auto back = request_from_json(to_json(r));
  EXPECT_EQ(to_json(back), to_json(r));
}

TEST(RunRequest, DeterministicUpToTiming) {
  const auto req = subdiff_request("-abs(x1)");
  const auto a = run_request(req);
  const auto b = run_request(req);
  EXPECT_EQ(without_timing(a).dump(), without_timing(b).dump());
}

TEST(PlotData, KinkDownTable) {
  const auto csv = emit_plot_data(run_request(subdiff_request(kKinkDown)));
  const auto rows = csv_rows(csv);
  ASSERT_EQ(rows.size(), 17u);
  EXPECT_EQ(rows[0], (std::vector<std::string>{"angle", "f_up", "support", "residual"}));
  for (std::size_t i = 1; i < rows.size(); ++i) {
    ASSERT_EQ(rows[i].size(), 4u);
    const double angle = std::stod(rows[i][0]);
    // Oracle: v = cos(angle), support of [-1, 0] is max(-v, 0).
    const double v = std::cos(angle);
    EXPECT_NEAR(std::stod(rows[i][2]), std::max(-v, 0.0), 1e-9);
    EXPECT_LT(std::stod(rows[i][3]), 1e-3);
  }
}

TEST(PlotData, EmptySetSupportIsMinusInfinity) {
  const auto rows = csv_rows(emit_plot_data(run_request(subdiff_request("x1^3"))));
  ASSERT_GT(rows.size(), 1u);
  for (std::size_t i = 1; i < rows.size(); ++i) EXPECT_EQ(rows[i][2], "-inf");
}

TEST(PlotData, ExponentialHasInfiniteSupportToTheRight) {
  const auto rows = csv_rows(emit_plot_data(run_request(subdiff_request("exp(x1)"))));
  int positive = 0;
  for (std::size_t i = 1; i < rows.size(); ++i) {
    if (std::cos(std::stod(rows[i][0])) > 1e-9) {
      ++positive;
      EXPECT_EQ(rows[i][2], "+inf");
    }
  }
  EXPECT_EQ(positive, 7);
}

TEST(PlotData, RequiresATable) {
  EXPECT_THROW(emit_plot_data(json{{"result", json::object()}}), std::invalid_argument);
}

TEST(Corpus, EmptyPassesWithWarning) {
  const auto summary = run_corpus(scratch_dir("empty"));
  EXPECT_TRUE(summary.all_passed());
  EXPECT_EQ(summary.exit_code(), 0);
  ASSERT_EQ(summary.warnings.size(), 1u);
}

TEST(Corpus, PerturbedExpectationFailsOnce) {
  const auto dir = scratch_dir("perturbed");
  write_case(dir, affine_case("a-good", 2.0));
  write_case(dir, affine_case("b-perturbed", 2.5));
  write_case(dir, affine_case("c-good", 2.0));
  const auto summary = run_corpus(dir);
  EXPECT_EQ(summary.failures(), 1u);
  ASSERT_EQ(summary.cases.size(), 3u);
  EXPECT_EQ(summary.cases[1].id, "b-perturbed");
  EXPECT_FALSE(summary.cases[1].passed);
  EXPECT_EQ(summary.exit_code(), kExitCheckFailed);
  const auto xml = summary.junit_xml();
  EXPECT_NE(xml.find("failures=\"1\""), std::string::npos);
  EXPECT_LT(xml.find("a-good"), xml.find("c-good"));
}

TEST(Corpus, UntaggedCasesAreRefused) {
  const auto dir = scratch_dir("untagged");
  auto c = affine_case("untagged", 2.0);
  c.erase("provenance");
  write_case(dir, c);
  auto d = affine_case("badly-tagged", 2.0);
  d["provenance"] = "folklore";
  write_case(dir, d);
  const auto summary = run_corpus(dir);
  ASSERT_EQ(summary.cases.size(), 2u);
  for (const auto& o : summary.cases) {
    EXPECT_TRUE(o.refused);
    EXPECT_TRUE(o.report.is_null());
  }
}

TEST(Corpus, MissingExpectationIsListedAndRunContinues) {
  const auto dir = scratch_dir("missing");
  auto c = affine_case("no-expected", 2.0);
  c.erase("expected");
  write_case(dir, c);
  write_case(dir, affine_case("ok", 2.0));
  const auto summary = run_corpus(dir);
  ASSERT_EQ(summary.missing_expected.size(), 1u);
  EXPECT_EQ(summary.missing_expected[0], "no-expected.json");
  EXPECT_EQ(summary.failures(), 1u);
  EXPECT_TRUE(summary.cases[1].passed);
}

TEST(Corpus, RangeAndExtendedComparisons) {
  const json report{{"a", 1.05}, {"b", "+inf"}, {"c", "-inf"}};
  const json expected{{"/a", {{"range", {1, 1.1}}}}, {"/b", "+inf"}, {"/c", -3.0}};
  const auto failures = compare_expected(report, expected, Tolerance{});
  ASSERT_EQ(failures.size(), 1u);
  EXPECT_EQ(failures[0].rfind("/c", 0), 0u);
}
