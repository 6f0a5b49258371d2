// SPDX-License-Identifier: Apache-2.0
// Command-line front end. Each subcommand assembles a scenario and runs it;
// `run` takes a scenario file directly.
#include "lorentz/scenario.hpp"

#include <CLI11.hpp>

#include <iostream>

using namespace lorentz;

namespace {

struct Common {
  std::string spacetime = "minkowski2d";
  std::vector<std::string> params;  // name=value
  std::string file;
  std::string cells;
  int stencil = 0;
  long seed = -1;
  std::string out_dir;
  std::string prefix;
  bool quiet = false;
};

// INI text built from options, with the option that produced each line so
// parse errors can name it.
struct Assembled {
  std::string text;
  std::vector<std::string> origin{""};  // 1-based
  void add(const std::string& line, const std::string& from) {
    text += line + "\n";
    origin.push_back(from);
  }
};

Assembled assemble(const std::string& op, const Common& c, const std::map<std::string, std::string>& keys) {
  Assembled a;
  if (op != "catalog") {
    a.add("[spacetime]", "");
    a.add("id = " + c.spacetime, "--spacetime");
    if (!c.file.empty()) a.add("file = " + c.file, "--file");
    for (const auto& p : c.params) {
      const auto eq = p.find('=');
      if (eq == std::string::npos) throw ParseError("--param expects name=value, got '" + p + "'", 0, 1);
      a.add(p.substr(0, eq) + " = " + p.substr(eq + 1), "--param " + p);
    }
  }
  a.add("[operation]", "");
  a.add("name = " + op, "");
  for (const auto& [k, v] : keys) a.add(k + " = " + v, "--" + k);
  a.add("[grid]", "");
  if (!c.cells.empty()) a.add("cells = " + c.cells, "--cells");
  if (c.stencil > 0) a.add("stencil = " + std::to_string(c.stencil), "--stencil");
  if (c.seed >= 0) a.add("seed = " + std::to_string(c.seed), "--seed");
  a.add("[output]", "");
  if (!c.out_dir.empty()) a.add("dir = " + c.out_dir, "--out-dir");
  if (!c.prefix.empty()) a.add("prefix = " + c.prefix, "--prefix");
  return a;
}

int execute(const Scenario& sc, bool quiet) {
  const RunResult r = run_scenario(sc);
  for (const auto& l : r.lines) std::cout << dump17(l) << "\n";
  if (!quiet)
    for (const auto& s : r.summary) std::cerr << s << "\n";
  return r.exit;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"lorentz: causal structure of low-regularity spacetimes"};
  app.require_subcommand(1);
  app.set_version_flag("--version", "lorentz 0.1.0");

  Common common;
  std::map<std::string, std::map<std::string, std::string>> keys;
  std::string run_file;
  bool run_quiet = false;

  const std::map<std::string, std::string> about{
      {"reach", "causal future or past of a point, over- and under-approximated"},
      {"diamond", "causal diamond J+(p) n J-(q) and its compactness"},
      {"tau", "time separation by curve maximization, with a local certificate"},
      {"diagnose", "run the causal ladder"},
      {"limit", "extract a limit curve from a family"},
      {"widen", "widen or narrow a metric and compare cones"},
      {"develop", "Cauchy development of a coordinate box"},
      {"catalog", "list the built-in spacetimes"},
  };
  for (const auto& [op, keyset] : operation_keys()) {
    CLI::App* sub = app.add_subcommand(op, about.at(op));
    if (op != "catalog") {
      sub->add_option("-s,--spacetime", common.spacetime, "catalog id")->capture_default_str();
      sub->add_option("--param", common.params, "spacetime parameter, name=value (repeatable)");
      sub->add_option("--file", common.file, "metric grid file for the 'grid' spacetime");
      sub->add_option("--cells", common.cells, "grid cells per axis, e.g. 256 or 128x256");
      sub->add_option("--stencil", common.stencil, "stencil radius in cells");
      sub->add_option("--seed", common.seed, "random seed");
    }
    sub->add_option("-o,--out-dir", common.out_dir, "output directory (default $LORENTZ_OUT_DIR, then .)");
    sub->add_option("--prefix", common.prefix, "output file stem (default the subcommand name)");
    sub->add_flag("--quiet", common.quiet, "no summary on stderr");
    for (const auto& k : keyset) {
      sub->add_option_function<std::string>("--" + k, [&keys, op = op, k = k](const std::string& v) { keys[op][k] = v; },
                                            "operation key '" + k + "'");
    }
  }
  CLI::App* run = app.add_subcommand("run", "run a scenario file");
  run->add_option("scenario", run_file, "scenario .ini file")->required()->check(CLI::ExistingFile);
  run->add_option("-o,--out-dir", common.out_dir, "override the scenario's output directory");
  run->add_flag("--quiet", run_quiet, "no summary on stderr");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : kExitError;
  }

  Assembled a;
  try {
    if (run->parsed()) {
      Scenario sc = load_scenario(run_file);
      if (!common.out_dir.empty()) sc.out_dir = common.out_dir;
      return execute(sc, run_quiet);
    }
    const std::string op = app.get_subcommands().front()->get_name();
    a = assemble(op, common, keys[op]);
    return execute(scenario_from_config(parse_config_text(a.text)), common.quiet);
  } catch (const ParseError& e) {
    if (run->parsed()) {
      std::cerr << "lorentz: " << run_file << ":" << e.line() << ":" << e.column() << ": " << e.message() << "\n";
    } else {
      const int ln = e.line();
      const std::string from = ln > 0 && ln < static_cast<int>(a.origin.size()) ? a.origin[ln] : "";
      std::cerr << "lorentz: " << (from.empty() ? "" : from + ": ") << e.message() << "\n";
    }
  } catch (const std::exception& e) {
    std::cerr << "lorentz: " << e.what() << "\n";
  }
  return kExitError;
}
