// SPDX-License-Identifier: Apache-2.0
#include "lorentz/scenario.hpp"
#include "lorentz/spacetimes.hpp"

#include <gtest/gtest.h>

#include <cstdlib>

using namespace lorentz;
namespace fs = std::filesystem;

namespace {

fs::path fresh_dir(const std::string& name) {
  const fs::path d = fs::temp_directory_path() / ("lorentz_catalog_test_" + name);
  fs::remove_all(d);
  fs::create_directories(d);
  return d;
}

std::string slurp(const fs::path& p) {
  std::ifstream is(p, std::ios::binary);
  return std::string(std::istreambuf_iterator<char>(is), {});
}

template <class F>
void expect_parse_error(F f, int line, int column) {
  try {
    f();
    ADD_FAILURE() << "no ParseError";
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), line) << e.what();
    EXPECT_EQ(e.column(), column) << e.what();
  }
}

RunResult run_text(const std::string& text) { return run_scenario(scenario_from_config(parse_config_text(text))); }

std::vector<Json> read_jsonl(const fs::path& p) {
  std::vector<Json> out;
  std::istringstream is(slurp(p));
  std::string line;
  while (std::getline(is, line)) out.push_back(Json::parse(line));
  return out;
}

}  // namespace

// --- config ------------------------------------------------------------------

TEST(Config, SectionsKeysAndComments) {
  const auto cfg = parse_config_text("# top\n[a]\nx = 1, 2 \n ; note\n  y=hello world\n[b]\nz =\n");
  ASSERT_TRUE(cfg.has("a", "x"));
  EXPECT_EQ(cfg.at("a", "x").text, "1, 2");
  EXPECT_EQ(cfg.at("a", "x").line, 3);
  EXPECT_EQ(cfg.at("a", "x").column, 5);
  EXPECT_EQ(cfg.at("a", "y").text, "hello world");
  EXPECT_EQ(cfg.at("a", "y").key_column, 3);
  EXPECT_EQ(cfg.at("b", "z").text, "");
  EXPECT_EQ(to_vec(cfg.at("a", "x")), make_vec({1, 2}));
  const auto tail = parse_config_text("[a]\nx = 0,0; 1,1   # two points\ny = a#b\n");
  EXPECT_EQ(tail.at("a", "x").text, "0,0; 1,1");
  EXPECT_EQ(tail.at("a", "y").text, "a#b");
}

TEST(Config, ErrorsCarryPositions) {
  expect_parse_error([] { parse_config_text("[a\n"); }, 1, 3);
  expect_parse_error([] { parse_config_text("[]\n"); }, 1, 2);
  expect_parse_error([] { parse_config_text("[a b]\n"); }, 1, 3);
  expect_parse_error([] { parse_config_text("[a]\n[a]\n"); }, 2, 1);
  expect_parse_error([] { parse_config_text("x = 1\n"); }, 1, 1);
  expect_parse_error([] { parse_config_text("[a]\n  x 1\n"); }, 2, 5);
  expect_parse_error([] { parse_config_text("[a]\nx = 1\nx = 2\n"); }, 3, 1);
  const auto cfg = parse_config_text("[a]\np = 0.5, 1e, 2\nn = 3.5\n");
  expect_parse_error([&] { to_vec(cfg.at("a", "p")); }, 2, 10);
  expect_parse_error([&] { to_long(cfg.at("a", "n")); }, 3, 5);
  expect_parse_error([&] { cfg.at("a", "missing"); }, 1, 1);
}

TEST(Config, PointLists) {
  const auto cfg = parse_config_text("[a]\npts = 0,0; 1,0.5;2,1\n");
  const auto pts = to_points(cfg.at("a", "pts"));
  ASSERT_EQ(pts.size(), 3U);
  EXPECT_EQ(pts[1], make_vec({1, 0.5}));
}

TEST(Json, SeventeenDigits) {
  Json j;
  j["a"] = 0.1;
  j["b"] = 2;
  j["c"] = kInf;
  j["d"] = Json::array({1.0 / 3.0});
  EXPECT_EQ(dump17(j), R"({"a":0.10000000000000001,"b":2,"c":"inf","d":[0.33333333333333331]})");
  EXPECT_EQ(std::strtod(fmt_double(1.0 / 3.0).c_str(), nullptr), 1.0 / 3.0);
}

// --- files -------------------------------------------------------------------

TEST(Output, AtomicWriteReplacesWholeFile) {
  const auto d = fresh_dir("atomic");
  const auto p = d / "sub" / "f.txt";
  write_atomic(p, "first version, longer\n");
  write_atomic(p, "second\n");
  EXPECT_EQ(slurp(p), "second\n");
  int files = 0;
  for (const auto& e : fs::directory_iterator(p.parent_path())) {
    (void)e;
    ++files;
  }
  EXPECT_EQ(files, 1);  // no temporaries left behind
}

TEST(Output, DirectoryFromEnvironment) {
  EXPECT_EQ(output_dir("explicit"), fs::path("explicit"));
  ::setenv("LORENTZ_OUT_DIR", "/tmp/somewhere", 1);
  EXPECT_EQ(output_dir(), fs::path("/tmp/somewhere"));
  ::unsetenv("LORENTZ_OUT_DIR");
  EXPECT_EQ(output_dir(), fs::path("."));
}

// --- metric grid files -------------------------------------------------------

TEST(MetricGrid, RoundTripIsExact) {
  const auto g = bubble_metric(make_chart(cube(2, -1.0, 1.0)));
  const auto mg = sample_metric_grid(g, {9, 17});
  std::stringstream ss;
  write_metric_grid(ss, mg);
  const auto back = read_metric_grid(ss);
  ASSERT_EQ(back.forms.size(), mg.forms.size());
  for (std::size_t k = 0; k < mg.forms.size(); ++k) EXPECT_EQ(back.forms[k], mg.forms[k]);
  EXPECT_EQ(back.nodes, mg.nodes);
  EXPECT_EQ(back.bounds.lo, mg.bounds.lo);
}

TEST(MetricGrid, InterpolatesNodesAndLinearFields) {
  // A constant form is reproduced everywhere; nodes are reproduced exactly.
  const auto flat = sample_metric_grid(minkowski(make_chart(cube(2, -1.0, 1.0))), {3, 3});
  const auto g = grid_metric(flat);
  EXPECT_EQ(g(make_vec({0.123, -0.77})), minkowski_form(2));
  EXPECT_EQ(g.time_orientation(make_vec({0.3, 0.3})), make_vec({1, 0}));

  const auto b = bubble_metric(make_chart(cube(2, -1.0, 1.0)));
  const auto mg = sample_metric_grid(b, {5, 9});
  const auto gi = grid_metric(mg);
  EXPECT_NEAR((gi(make_vec({0.5, 0.25})) - b(make_vec({0.5, 0.25}))).norm(), 0.0, 1e-15);
  // Midway between nodes the value is the average of the two.
  const Vec m = make_vec({0.5, 0.125});
  const Form avg = 0.5 * (b(make_vec({0.5, 0.0})) + b(make_vec({0.5, 0.25})));
  EXPECT_NEAR((gi(m) - avg).norm(), 0.0, 1e-15);
}

TEST(MetricGrid, ReadErrorsCarryPositions) {
  auto read = [](const std::string& s) {
    std::istringstream is(s);
    return read_metric_grid(is);
  };
  expect_parse_error([&] { read("metric dims=2x2 bounds=0,1;0,1\n-1,0,1\n-1,0,1\n-1,0,1\n"); }, 5, 1);
  expect_parse_error([&] { read("metric dims=2x2 bounds=0,1;0,1\n-1,0,1\n-1,0\n-1,0,1\n-1,0,1\n"); }, 3, 1);
  expect_parse_error([&] { read("metric dims=2x2 bounds=0,1;0,1\n-1,0,1\n-1,q,1\n-1,0,1\n-1,0,1\n"); }, 3, 4);
}

TEST(MetricGrid, GridSpacetimeMatchesSource) {
  const auto d = fresh_dir("grid");
  const auto b = make_spacetime("minkowski2d", {{"L", 1.0}}).metric;
  std::ostringstream os;
  write_metric_grid(os, sample_metric_grid(b, {5, 5}));
  write_atomic(d / "flat.metric", os.str());
  const auto r = run_text("[spacetime]\nid = grid\nfile = " + (d / "flat.metric").string() +
                          "\n[operation]\nname = tau\np = -0.5, 0\nq = 0.5, 0.5\nsegments = 8\nrestarts = 1\n"
                          "[output]\ndir = " + d.string() + "\n");
  EXPECT_EQ(r.exit, kExitPass);
  EXPECT_NEAR(r.lines.at(0)["tau"].get<double>(), std::sqrt(0.75), 1e-9);
}

// --- catalog -----------------------------------------------------------------

TEST(Catalog, EveryEntryBuildsALorentzianField) {
  for (const auto& e : catalog_list()) {
    if (e.takes_file) continue;
    SCOPED_TRACE(e.id);
    const Spacetime st = make_spacetime(e.id);
    EXPECT_NO_THROW(verify_signature(st.metric, chart_sampling(st.metric.chart(), 9).points()));
    EXPECT_FALSE(e.facts.empty());
    for (const auto& f : e.facts)
      EXPECT_TRUE(f.source == "closed-form" || f.source == "oracle" || f.source == "static") << f.name;
    for (const auto& p : st.strong_points) EXPECT_TRUE(st.metric.chart().in_domain(p));
  }
}

TEST(Catalog, ParameterChecks) {
  EXPECT_THROW(catalog_entry("nope"), InvalidArgument);
  EXPECT_THROW(make_spacetime("bubble_metric", {{"alpha", 1.5}}), InvalidArgument);
  EXPECT_THROW(make_spacetime("bubble_metric", {{"gamma", 0.5}}), InvalidArgument);
  EXPECT_THROW(make_spacetime("grid"), InvalidArgument);
  const auto v = resolve_params(catalog_entry("slit_minkowski"), {{"w", 0.25}});
  EXPECT_EQ(v.at("w"), 0.25);
  EXPECT_EQ(v.at("t_s"), 1.0);
}

TEST(Catalog, WidenedEntryHasTheStatedDelta) {
  const auto eta = make_spacetime("minkowski2d").metric;
  const auto w = make_spacetime("widened_minkowski", {{"eps", 0.2}}).metric;
  const auto d = metric_delta(eta, w, chart_sampling(eta.chart(), 5, 256));
  EXPECT_NEAR(d.lower, 0.2, 1e-9);
}

// --- scenarios ---------------------------------------------------------------

TEST(Scenario, ValidationPointsAtTheOffendingText) {
  expect_parse_error([] { scenario_from_config(parse_config_text("[operation]\nname = fly\n")); }, 2, 8);
  expect_parse_error(
      [] { scenario_from_config(parse_config_text("[spacetime]\nid = minkowski2d\n[operation]\nname = tau\n  segs = 4\n")); },
      5, 3);
  expect_parse_error([] { scenario_from_config(parse_config_text("[spacetime]\nid = nowhere\n[operation]\nname = tau\n")); },
                     2, 6);
  expect_parse_error(
      [] { scenario_from_config(parse_config_text("[spacetime]\nid = bubble_metric\nalpha = 2\n[operation]\nname = tau\n")); },
      3, 1);
  expect_parse_error([] { scenario_from_config(parse_config_text("[operation]\nname = catalog\n[extra]\n")); }, 3, 1);
  expect_parse_error([] { scenario_from_config(parse_config_text("[operation]\nname = catalog\n[grid]\ncells = 1\n")); },
                     4, 9);
  // Operation values are checked when the operation runs.
  const auto d = fresh_dir("validation");
  expect_parse_error(
      [&] { run_text("[spacetime]\nid = minkowski2d\n[operation]\nname = tau\np = 0,0,0\nq = 1,0\n[output]\ndir = " + d.string()); },
      5, 5);
}

TEST(Scenario, TauWritesCurveCertificateAndJsonLines) {
  const auto d = fresh_dir("tau");
  const auto r = run_text("[spacetime]\nid = minkowski2d\n[operation]\nname = tau\np = 0, 0\nq = 2, 1\n[output]\ndir = " +
                          d.string() + "\nprefix = t\n");
  EXPECT_EQ(r.exit, kExitPass);
  const auto lines = read_jsonl(d / "t.jsonl");
  ASSERT_EQ(lines.size(), 2U);
  EXPECT_NEAR(lines[0]["tau"].get<double>(), std::sqrt(3.0), 1e-9);
  EXPECT_EQ(lines[1]["certified"], true);
  std::ifstream is(d / "t.curve");
  const auto c = read_curve(is);
  EXPECT_NEAR(lorentz_length(c, make_spacetime("minkowski2d").metric), lines[0]["tau"].get<double>(), 1e-12);
  EXPECT_TRUE(fs::exists(d / "t_certificate.json"));
}

TEST(Scenario, CtcDiagnoseFailsWithAClosedWitness) {
  const auto d = fresh_dir("ctc");
  const auto r = run_text("[spacetime]\nid = ctc_cylinder\n[operation]\nname = diagnose\n[grid]\ncells = 32\n[output]\ndir = " +
                          d.string() + "\n");
  EXPECT_EQ(r.exit, kExitFail);
  const auto lines = read_jsonl(d / "diagnose.jsonl");
  ASSERT_FALSE(lines.empty());
  EXPECT_EQ(lines.front()["rung"], "causality");
  EXPECT_EQ(lines.front()["verdict"], "fail");
  const std::string file = lines.front()["witness"]["curves"][0].get<std::string>();
  std::ifstream is(d / file);
  const auto loop = read_curve(is);
  const auto g = make_spacetime("ctc_cylinder").metric;
  EXPECT_LT(g.chart().displacement(loop.front(), loop.back()).norm(), 1e-9);
  EXPECT_EQ(is_causal(loop, g, kNullTolerance, 16).kind, CausalKind::CausalFuture);
  EXPECT_EQ(lines.back()["verdict"], "fail");
}

TEST(Scenario, SlitDiamondIsNoncompact) {
  const auto d = fresh_dir("slit");
  const auto r = run_text(
      "[spacetime]\nid = slit_minkowski\n[operation]\nname = diamond\np = 0,0\nq = 2,0\n[output]\ndir = " + d.string() + "\n");
  EXPECT_EQ(r.exit, kExitFail);
  EXPECT_EQ(r.lines.at(0)["verdict"], "noncompact");
  EXPECT_GT(r.lines.at(0)["closure_defects"].get<int>(), 0);
  for (const char* f : {"diamond_over.reach", "diamond_under.reach", "diamond_over_boundary.csv", "diamond_defects.csv"})
    EXPECT_TRUE(fs::exists(d / f)) << f;
  std::ifstream is(d / "diamond_over.reach");
  const auto over = read_reach(is);
  EXPECT_EQ(static_cast<long>(over.count()), r.lines.at(0)["over_cells"].get<long>());
}

TEST(Scenario, OtherOperations) {
  const auto d = fresh_dir("ops");
  const std::string out = "[output]\ndir = " + d.string() + "\n";
  EXPECT_EQ(run_text("[spacetime]\nid = minkowski2d\n[operation]\nname = widen\neps = 1\nmode = narrow\n" + out).exit,
            kExitFail);
  const auto w = run_text("[spacetime]\nid = minkowski2d\n[operation]\nname = widen\neps = 0.1\n" + out);
  EXPECT_EQ(w.exit, kExitPass);
  EXPECT_NEAR(w.lines.at(0)["delta"].get<double>(), 0.1, 1e-9);
  EXPECT_EQ(w.lines.at(0)["relation"], to_string(ConeRelation::StrictlyPrecedes));
  const auto l = run_text("[spacetime]\nid = minkowski2d\n[operation]\nname = limit\nkmax = 64\n" + out);
  EXPECT_EQ(l.exit, kExitPass);
  EXPECT_TRUE(fs::exists(d / "limit_limit.curve"));
  const auto dev = run_text("[spacetime]\nid = minkowski2d\n[operation]\nname = develop\ns_lo = 0,-1\ns_hi = 0,1\n" + out);
  EXPECT_EQ(dev.exit, kExitPass);
  EXPECT_GT(dev.lines.at(0)["cells"].get<long>(), 0);
  const auto re = run_text("[spacetime]\nid = minkowski2d\n[operation]\nname = reach\np = 0,0\n" + out);
  EXPECT_EQ(re.exit, kExitPass);
  EXPECT_EQ(re.lines.back()["check"], "under-within-over");
  const auto cat = run_text("[operation]\nname = catalog\n" + out);
  EXPECT_EQ(cat.lines.size(), catalog_list().size());
}

TEST(Scenario, EnvironmentOutputDirectoryAndDeterminism) {
  const auto d = fresh_dir("env");
  ::setenv("LORENTZ_OUT_DIR", (d / "a").c_str(), 1);
  const std::string text = "[spacetime]\nid = bubble_metric\n[operation]\nname = tau\np = -1,-0.75\nq = 1,0.75\n"
                           "segments = 16\nrestarts = 3\nperturbations = 50\n[grid]\nseed = 7\n";
  run_text(text);
  ::setenv("LORENTZ_OUT_DIR", (d / "b").c_str(), 1);
  run_text(text);
  ::unsetenv("LORENTZ_OUT_DIR");
  for (const char* f : {"tau.jsonl", "tau.curve", "tau_certificate.json"}) {
    ASSERT_TRUE(fs::exists(d / "a" / f)) << f;
    EXPECT_EQ(slurp(d / "a" / f), slurp(d / "b" / f)) << f;
  }
}

TEST(Scenario, ExampleFilesLoad) {
  int n = 0;
  for (const auto& e : fs::directory_iterator(fs::path(LORENTZ_SOURCE_DIR) / "scenarios")) {
    if (e.path().extension() != ".ini") continue;
    SCOPED_TRACE(e.path().string());
    EXPECT_NO_THROW(load_scenario(e.path()));
    ++n;
  }
  EXPECT_GE(n, 5);
}
