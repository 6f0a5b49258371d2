// SPDX-License-Identifier: Apache-2.0
// Scenario files: which spacetime, which operation, where the results go.
#pragma once

#include "lorentz/catalog.hpp"
#include "lorentz/config.hpp"
#include "lorentz/maximal.hpp"

#include <iostream>
#include <set>

namespace lorentz {

/// Exit statuses of a scenario run.
enum ExitCode : int { kExitPass = 0, kExitError = 1, kExitFail = 2, kExitInconclusive = 3 };

inline int exit_code(Verdict v) {
  switch (v) {
    case Verdict::Pass: return kExitPass;
    case Verdict::Fail: return kExitFail;
    case Verdict::Inconclusive: return kExitInconclusive;
  }
  return kExitError;
}

struct Scenario {
  std::string spacetime;
  ParamValues params;
  std::string metric_file;
  std::string operation;
  Config::Section op;  ///< operation keys, positions kept for error reports
  GridSpec grid = GridSpec::uniform(64);
  std::uint64_t seed = 1;
  std::string out_dir;  ///< empty: $LORENTZ_OUT_DIR or "."
  std::string prefix;   ///< file name stem, default the operation name
};

inline const std::map<std::string, std::set<std::string>>& operation_keys() {
  static const std::map<std::string, std::set<std::string>> keys{
      {"reach", {"p", "direction", "mode", "horizon"}},
      {"diamond", {"p", "q"}},
      {"tau", {"p", "q", "segments", "restarts", "radius", "perturbations", "certify_tol"}},
      {"diagnose",
       {"pair_samples", "simplicity_trials", "curve_samples", "cauchy_level", "cauchy", "strong_points", "radii"}},
      {"limit", {"family", "files", "kmax", "p", "q", "depth", "tol"}},
      {"widen", {"eps", "mode", "points", "directions"}},
      {"develop", {"s_lo", "s_hi", "side"}},
      {"catalog", {}},
  };
  return keys;
}

/// Validates and converts a parsed config. Every complaint points at the
/// offending line and column.
inline Scenario scenario_from_config(const Config& cfg) {
  static const std::set<std::string> sections{"spacetime", "operation", "grid", "output"};
  for (const auto& s : cfg.section_names())
    if (!sections.count(s)) throw ParseError("unknown section [" + s + "]", cfg.section_line(s), 1);

  Scenario sc;
  const ConfigValue& opname = cfg.at("operation", "name");
  sc.operation = opname.text;
  const auto ops = operation_keys();
  if (!ops.count(sc.operation)) throw ParseError("unknown operation '" + sc.operation + "'", opname.line, opname.column);
  for (const auto& [k, v] : cfg.section("operation")) {
    if (k == "name") continue;
    if (!ops.at(sc.operation).count(k))
      throw ParseError("operation '" + sc.operation + "' has no key '" + k + "'", v.line, v.key_column);
    sc.op[k] = v;
  }

  if (sc.operation != "catalog") {
    const ConfigValue& id = cfg.at("spacetime", "id");
    sc.spacetime = id.text;
    const CatalogEntry* entry = nullptr;
    try {
      entry = &catalog_entry(id.text);
    } catch (const InvalidArgument& e) {
      throw ParseError(e.what(), id.line, id.column);
    }
    for (const auto& [k, v] : cfg.section("spacetime")) {
      if (k == "id") continue;
      if (k == "file") {
        if (!entry->takes_file) throw ParseError("'" + id.text + "' takes no file", v.line, v.key_column);
        sc.metric_file = v.text;
        continue;
      }
      ParamValues one{{k, to_double(v)}};
      try {
        resolve_params(*entry, one);
      } catch (const InvalidArgument& e) {
        throw ParseError(e.what(), v.line, v.key_column);
      }
      sc.params[k] = one[k];
    }
    if (entry->takes_file && sc.metric_file.empty())
      throw ParseError("'" + id.text + "' needs a file key", cfg.at("spacetime", "id").line, 1);
  }

  for (const auto& [k, v] : cfg.section("grid")) {
    if (k == "cells") {
      sc.grid.cells.clear();
      for (const auto& tok : detail::split(v.text, 'x')) {
        const long c = to_long(ConfigValue{tok, v.line, v.column, v.key_column});
        if (c < 2 || c > 4096) throw ParseError("cells must lie in [2,4096]", v.line, v.column);
        sc.grid.cells.push_back(static_cast<int>(c));
      }
    } else if (k == "stencil") {
      const long s = to_long(v);
      if (s < 1 || s > 8) throw ParseError("stencil must lie in [1,8]", v.line, v.column);
      sc.grid.stencil = static_cast<int>(s);
    } else if (k == "seed") {
      const long s = to_long(v);
      if (s < 0) throw ParseError("seed must be non-negative", v.line, v.column);
      sc.seed = static_cast<std::uint64_t>(s);
    } else {
      throw ParseError("unknown grid key '" + k + "'", v.line, v.key_column);
    }
  }
  for (const auto& [k, v] : cfg.section("output")) {
    if (k == "dir") sc.out_dir = v.text;
    else if (k == "prefix") sc.prefix = v.text;
    else throw ParseError("unknown output key '" + k + "'", v.line, v.key_column);
  }
  if (sc.prefix.empty()) sc.prefix = sc.operation;
  if (sc.prefix.find('/') != std::string::npos) throw ParseError("prefix must be a plain file name", 1, 1);
  return sc;
}

inline Scenario load_scenario(const std::filesystem::path& path) { return scenario_from_config(load_config(path)); }

struct RunResult {
  int exit = kExitPass;
  std::vector<Json> lines;                      ///< JSON-lines records, also written to <prefix>.jsonl
  std::vector<std::filesystem::path> artifacts;
  std::vector<std::string> summary;             ///< human-readable lines
};

namespace detail {

/// Typed operation parameters with defaults.
class OpArgs {
 public:
  explicit OpArgs(const Config::Section& s) : s_(s) {}
  bool has(const std::string& k) const { return s_.count(k) != 0; }
  const ConfigValue& raw(const std::string& k) const {
    if (!has(k)) throw ParseError("missing operation key '" + k + "'", 1, 1);
    return s_.at(k);
  }
  double num(const std::string& k, double def) const { return has(k) ? to_double(s_.at(k)) : def; }
  double num(const std::string& k) const { return to_double(raw(k)); }
  long integer(const std::string& k, long def, long lo, long hi) const {
    if (!has(k)) return def;
    const long v = to_long(s_.at(k));
    if (v < lo || v > hi)
      throw ParseError(k + " must lie in [" + std::to_string(lo) + "," + std::to_string(hi) + "]", s_.at(k).line,
                       s_.at(k).column);
    return v;
  }
  Vec point(const std::string& k, int dim) const {
    const Vec v = to_vec(raw(k));
    if (v.size() != dim)
      throw ParseError(k + " needs " + std::to_string(dim) + " coordinates", s_.at(k).line, s_.at(k).column);
    return v;
  }
  std::string word(const std::string& k, const std::string& def, std::initializer_list<const char*> allowed) const {
    if (!has(k)) return def;
    const auto& v = s_.at(k);
    for (const char* a : allowed)
      if (v.text == a) return v.text;
    throw ParseError("unexpected value '" + v.text + "' for " + k, v.line, v.column);
  }

 private:
  const Config::Section& s_;
};

class Outputs {
 public:
  Outputs(std::filesystem::path dir, std::string prefix, RunResult& r)
      : dir_(std::move(dir)), prefix_(std::move(prefix)), r_(r) {}

  std::string put(const std::string& suffix, const std::string& contents) {
    const auto path = dir_ / (prefix_ + suffix);
    write_atomic(path, contents);
    r_.artifacts.push_back(path);
    return path.filename().string();
  }
  std::string curve(const std::string& suffix, const CausalCurve& c) {
    std::ostringstream os;
    write_curve(os, c);
    return put(suffix, os.str());
  }
  std::string reach(const std::string& suffix, const ReachSet& s) {
    std::ostringstream os, csv;
    write_reach(os, s);
    write_boundary_csv(csv, s);
    put(suffix + "_boundary.csv", csv.str());
    return put(suffix + ".reach", os.str());
  }
  std::string points_csv(const std::string& suffix, const std::vector<Vec>& pts, int dim) {
    std::ostringstream os;
    for (int a = 0; a < dim; ++a) os << (a ? "," : "") << "x" << a;
    os << "\n";
    for (const auto& p : pts) os << fmt_vec(p) << "\n";
    return put(suffix, os.str());
  }

 private:
  std::filesystem::path dir_;
  std::string prefix_;
  RunResult& r_;
};

inline Json points_json(const std::vector<Vec>& pts) {
  Json a = Json::array();
  for (const auto& p : pts) a.push_back(to_json(p));
  return a;
}

/// Alternating single bumps of size 1/k around the chord p -> q, k = 2..kmax.
inline std::vector<CausalCurve> zigzag_family(const Vec& p, const Vec& q, int kmax) {
  const Vec d = q - p;
  Vec nrm = Vec::Zero(d.size());
  nrm[0] = d[1];
  nrm[1] = -d[0];
  nrm.normalize();
  std::vector<CausalCurve> fam;
  for (int k = 2; k <= kmax; ++k) {
    const double a = (k % 2 ? 1.0 : -1.0) / k;
    fam.push_back(canonicalize(CausalCurve::polyline({p, p + 0.5 * d + a * nrm, q})));
  }
  return fam;
}

inline Json rung_json(const RungResult& r) {
  Json j;
  j["op"] = "diagnose";
  j["rung"] = r.rung;
  j["verdict"] = to_string(r.verdict);
  Json params = Json::object();
  for (const auto& [k, v] : r.params) params[k] = v;
  j["params"] = params;
  j["detail"] = r.detail;
  return j;
}

// --- operations -----------------------------------------------------------

inline void run_reach(const Scenario& sc, const Spacetime& st, Outputs& out, RunResult& res) {
  const OpArgs a(sc.op);
  const MetricField& g = st.metric;
  const Vec p = a.point("p", g.dim());
  const std::string dir = a.word("direction", "future", {"future", "past"});
  const std::string mode = a.word("mode", "both", {"over", "under", "both"});
  const double horizon = a.num("horizon", kInf);
  const TimeDirection td = dir == "future" ? TimeDirection::Future : TimeDirection::Past;
  const CausalGrid cg(g, sc.grid);
  std::map<std::string, ReachSet> sets;
  for (const char* m : {"over", "under"}) {
    if (mode != "both" && mode != m) continue;
    ReachSet r = reach(cg, point_region(p), std::string(m) == "over" ? ReachMode::Over : ReachMode::Under, td, horizon);
    Json j;
    j["op"] = "reach";
    j["mode"] = m;
    j["direction"] = dir;
    j["cells"] = r.count();
    j["boundary_cells"] = r.boundary().size();
    j["file"] = out.reach(std::string("_") + m, r);
    res.lines.push_back(j);
    res.summary.push_back(std::string(m) + " " + dir + " reach: " + std::to_string(r.count()) + " cells");
    sets.emplace(m, std::move(r));
  }
  if (sets.size() == 2) {
    const auto& over = sets.at("over");
    const auto& under = sets.at("under");
    std::vector<Vec> bad;
    for (std::size_t k = 0; k < under.cells.size(); ++k)
      if (under.cells[k] && !over.cells[k]) bad.push_back(under.grid.center(k));
    Json j;
    j["op"] = "reach";
    j["check"] = "under-within-over";
    j["verdict"] = bad.empty() ? "pass-at-scale" : "fail";
    if (!bad.empty()) j["witness"] = out.points_csv("_sandwich_witness.csv", bad, g.dim());
    res.lines.push_back(j);
    res.exit = bad.empty() ? kExitPass : kExitFail;
  }
}

inline void run_diamond(const Scenario& sc, const Spacetime& st, Outputs& out, RunResult& res) {
  const OpArgs a(sc.op);
  const MetricField& g = st.metric;
  const Vec p = a.point("p", g.dim()), q = a.point("q", g.dim());
  const DiamondReport d = causal_diamond(p, q, g, sc.grid);
  Json j;
  j["op"] = "diamond";
  j["p"] = to_json(p);
  j["q"] = to_json(q);
  j["verdict"] = to_string(d.verdict);
  j["bounded"] = d.bounded;
  j["over_cells"] = d.over.count();
  j["under_cells"] = d.under.count();
  j["over_file"] = out.reach("_over", d.over);
  j["under_file"] = out.reach("_under", d.under);
  j["closure_defects"] = d.closure_defect.size();
  j["defect_file"] = out.points_csv("_defects.csv", d.closure_defect, g.dim());
  j["defects"] = points_json(d.closure_defect);
  res.lines.push_back(j);
  res.summary.push_back(std::string("diamond: ") + to_string(d.verdict) + ", " +
                        std::to_string(d.closure_defect.size()) + " closure defects");
  res.exit = d.verdict == DiamondVerdict::CompactAtScale ? kExitPass
             : d.verdict == DiamondVerdict::Noncompact   ? kExitFail
                                                         : kExitInconclusive;
}

inline void run_tau(const Scenario& sc, const Spacetime& st, Outputs& out, RunResult& res) {
  const OpArgs a(sc.op);
  const MetricField& g = st.metric;
  const Vec p = a.point("p", g.dim()), q = a.point("q", g.dim());
  const int segments = static_cast<int>(a.integer("segments", 64, 2, 4096));
  const int restarts = static_cast<int>(a.integer("restarts", 8, 1, 1000));
  const double radius = a.num("radius", 0.05);
  const int perturbations = static_cast<int>(a.integer("perturbations", 200, 0, 1000000));
  const double certify_tol = a.num("certify_tol", 1e-6);
  SolverOptions so;
  so.grid = sc.grid;
  so.record_trace = false;
  const TimeSeparation ts = time_separation(p, q, g, segments, restarts, sc.seed, so);
  const MaximalityCertificate cert = maximality_certificate(ts.curve, g, radius, perturbations, sc.seed);

  Json c;
  c["op"] = "certificate";
  c["radius"] = cert.radius;
  c["perturbations"] = cert.perturbations;
  c["length"] = cert.length;
  c["best_rival_length"] = cert.best_rival_length;
  c["margin"] = cert.margin;
  c["degenerate"] = cert.degenerate;
  const bool refuted = !cert.degenerate && cert.margin < -certify_tol;
  c["certified"] = !refuted && !cert.degenerate;

  Json j;
  j["op"] = "tau";
  j["p"] = to_json(p);
  j["q"] = to_json(q);
  j["tau"] = ts.tau;
  j["segments"] = ts.curve.segments();
  j["converged"] = ts.converged;
  j["start"] = ts.start;
  j["winning_seed"] = ts.winning_seed;
  Json levels = Json::array();
  for (const auto& l : ts.levels) levels.push_back(Json{{"segments", l.segments}, {"tau", l.tau}, {"sweeps", l.sweeps}});
  j["levels"] = levels;
  j["curve"] = out.curve(".curve", ts.curve);
  j["certificate"] = out.put("_certificate.json", dump17(c) + "\n");
  res.lines.push_back(j);
  res.lines.push_back(c);
  res.summary.push_back("tau = " + fmt_double(ts.tau) + " (" + std::to_string(ts.curve.segments()) + " segments, " +
                        (ts.converged ? "converged" : "refinement budget exhausted") + ")");
  res.summary.push_back("certificate margin " + fmt_double(cert.margin) + " over " +
                        std::to_string(cert.perturbations) + " rivals");
  res.exit = (!ts.converged || refuted) ? kExitInconclusive : kExitPass;
}

inline void run_diagnose(const Scenario& sc, const Spacetime& st, Outputs& out, RunResult& res) {
  const OpArgs a(sc.op);
  const MetricField& g = st.metric;
  DiagnoseOptions opt;
  opt.grid = sc.grid;
  opt.seed = sc.seed;
  opt.pair_samples = static_cast<int>(a.integer("pair_samples", opt.pair_samples, 1, 100000));
  opt.simplicity_trials = static_cast<int>(a.integer("simplicity_trials", opt.simplicity_trials, 1, 100000));
  opt.curve_samples = static_cast<int>(a.integer("curve_samples", opt.curve_samples, 1, 100000));
  opt.cauchy = st.cauchy;
  if (a.word("cauchy", "on", {"on", "off"}) == "off") opt.cauchy.reset();
  if (a.has("cauchy_level")) opt.cauchy = time_level(a.num("cauchy_level"));
  opt.strong_points = st.strong_points;
  if (a.has("strong_points")) {
    opt.strong_points.clear();
    if (a.raw("strong_points").text != "none")
      for (const auto& p : to_points(a.raw("strong_points"))) {
        if (p.size() != g.dim()) throw ParseError("strong point dimension", a.raw("strong_points").line, a.raw("strong_points").column);
        opt.strong_points.push_back(p);
      }
  }
  if (a.has("radii")) {
    const Vec r = to_vec(a.raw("radii"));
    opt.radii.assign(r.data(), r.data() + r.size());
  }
  const LadderReport rep = diagnose(g, opt);
  std::map<std::string, int> seen;
  for (const auto& r : rep.rungs) {
    Json j = rung_json(r);
    std::string stem = "_" + r.rung;
    if (seen[r.rung]++) stem += "_" + std::to_string(seen[r.rung]);
    if (r.witness) {
      Json w;
      w["kind"] = r.witness->kind;
      w["note"] = r.witness->note;
      Json curves = Json::array();
      for (std::size_t k = 0; k < r.witness->curves.size(); ++k)
        curves.push_back(out.curve(stem + "_witness_" + std::to_string(k) + ".curve", r.witness->curves[k]));
      w["curves"] = curves;
      w["points"] = points_json(r.witness->points);
      if (!r.witness->cells.empty()) w["cells"] = out.points_csv(stem + "_cells.csv", r.witness->cells, g.dim());
      j["witness"] = w;
    }
    res.lines.push_back(j);
    res.summary.push_back(r.rung + ": " + to_string(r.verdict) + (r.detail.empty() ? "" : " (" + r.detail + ")"));
  }
  Json s;
  s["op"] = "diagnose";
  s["spacetime"] = g.id();
  s["grid"] = describe_grid(sc.grid);
  s["verdict"] = to_string(rep.verdict());
  res.lines.push_back(s);
  res.exit = exit_code(rep.verdict());
}

inline void run_limit(const Scenario& sc, const Spacetime& st, Outputs& out, RunResult& res) {
  const OpArgs a(sc.op);
  const MetricField& g = st.metric;
  const std::string family = a.word("family", "zigzag", {"zigzag", "files"});
  std::vector<CausalCurve> fam;
  if (family == "zigzag") {
    const Vec p = a.has("p") ? a.point("p", 2) : make_vec({0.0, 0.0});
    const Vec q = a.has("q") ? a.point("q", 2) : make_vec({1.0, 1.0});
    if (g.dim() != 2) throw InvalidArgument("zigzag families are two dimensional");
    fam = zigzag_family(p, q, static_cast<int>(a.integer("kmax", 64, 2, 100000)));
  } else {
    const ConfigValue& v = a.raw("files");
    for (const auto& f : detail::split(v.text, ';')) {
      std::ifstream is(f);
      if (!is) throw ParseError("cannot open curve file '" + f + "'", v.line, v.column);
      fam.push_back(read_curve(is, g.chart().background()));
    }
  }
  double lip = 0.0;
  for (const auto& c : fam) lip = std::max(lip, c.lipschitz());
  LimitOptions lo;
  lo.metric = &g;
  lo.depth = static_cast<int>(a.integer("depth", lo.depth, 1, 20));
  LimitResult lr;
  try {
    lr = extract_limit_curve(fam, LimitMode::FixedInterval, lip, a.num("tol", 1e-9), lo);
  } catch (const NoAccumulation& e) {
    Json j;
    j["op"] = "limit";
    j["verdict"] = "inconclusive";
    j["detail"] = e.what();
    res.lines.push_back(j);
    res.summary.push_back(std::string("no accumulation: ") + e.what());
    res.exit = kExitInconclusive;
    return;
  }
  for (std::size_t i = 0; i < lr.subsequence.size(); ++i)
    res.lines.push_back(Json{{"op", "limit"}, {"member", lr.subsequence[i]}, {"gap", lr.sup_gaps[i]}});
  Json j;
  j["op"] = "limit";
  j["members"] = fam.size();
  j["subsequence_length"] = lr.subsequence.size();
  j["final_gap"] = lr.sup_gaps.empty() ? 0.0 : lr.sup_gaps.back();
  Json causal = Json::array();
  for (const auto& [eps, kind] : lr.causality) causal.push_back(Json{{"eps", eps}, {"kind", to_string(kind)}});
  j["causality"] = causal;
  j["limit"] = out.curve("_limit.curve", lr.limit);
  j["length"] = lorentz_length(lr.limit, g);
  j["verdict"] = lr.limit_causal() ? "pass-at-scale" : "fail";
  res.lines.push_back(j);
  res.summary.push_back("limit of " + std::to_string(fam.size()) + " curves, " +
                        (lr.limit_causal() ? "causal on the widening ladder" : "not causal on the widening ladder"));
  res.exit = lr.limit_causal() ? kExitPass : kExitFail;
}

inline void run_widen(const Scenario& sc, const Spacetime& st, Outputs&, RunResult& res) {
  const OpArgs a(sc.op);
  const MetricField& g = st.metric;
  const double eps = a.num("eps");
  const std::string mode = a.word("mode", "widen", {"widen", "narrow"});
  const SamplingSpec k = chart_sampling(g.chart(), static_cast<int>(a.integer("points", 17, 1, 1000)),
                                        static_cast<int>(a.integer("directions", 64, kMinConeDirections, 100000)));
  Json j;
  j["op"] = mode;
  j["eps"] = eps;
  std::optional<MetricField> other;
  if (mode == "widen") {
    other = widen(g, eps);
  } else {
    try {
      other = narrow(g, eps, k);
    } catch (const SignatureCollapse& e) {
      j["verdict"] = "fail";
      j["signature_collapse"] = to_json(e.witness());
      res.lines.push_back(j);
      res.summary.push_back(std::string("narrowing collapses the signature: ") + e.what());
      res.exit = kExitFail;
      return;
    }
  }
  const DeltaEstimate d = metric_delta(g, *other, k);
  const ConeOrderResult c = mode == "widen" ? cone_precedes(g, *other, k) : cone_precedes(*other, g, k);
  j["delta"] = d.lower;
  j["delta_upper"] = d.upper;
  j["relation"] = to_string(c.relation);
  j["margin"] = c.margin;
  if (c.relation != ConeRelation::StrictlyPrecedes) {
    j["point"] = to_json(c.point);
    j["direction"] = to_json(c.direction);
  }
  j["verdict"] = c.relation == ConeRelation::StrictlyPrecedes ? "pass-at-scale" : "fail";
  res.lines.push_back(j);
  res.summary.push_back(mode + " by " + fmt_double(eps) + ": Delta = " + fmt_double(d.lower) + ", " +
                        to_string(c.relation));
  res.exit = c.relation == ConeRelation::StrictlyPrecedes ? kExitPass : kExitFail;
}

inline void run_develop(const Scenario& sc, const Spacetime& st, Outputs& out, RunResult& res) {
  const OpArgs a(sc.op);
  const MetricField& g = st.metric;
  const Box s(a.point("s_lo", g.dim()), a.point("s_hi", g.dim()));
  const std::string side = a.word("side", "future", {"future", "past", "both"});
  const DevelopmentSide ds = side == "future" ? DevelopmentSide::Future
                             : side == "past" ? DevelopmentSide::Past
                                              : DevelopmentSide::Both;
  const ReachSet d = cauchy_development(Region(s), g, sc.grid, ds);
  Json j;
  j["op"] = "develop";
  j["side"] = side;
  j["cells"] = d.count();
  j["file"] = out.reach("_development", d);
  res.lines.push_back(j);
  res.summary.push_back(side + " development: " + std::to_string(d.count()) + " cells");
}

inline Json catalog_json(const CatalogEntry& e) {
  Json j;
  j["id"] = e.id;
  j["description"] = e.description;
  Json ps = Json::array();
  for (const auto& p : e.params)
    ps.push_back(Json{{"name", p.name}, {"default", p.value}, {"min", p.lo}, {"max", p.hi}, {"help", p.help}});
  j["params"] = ps;
  Json fs = Json::array();
  for (const auto& f : e.facts) fs.push_back(Json{{"name", f.name}, {"value", f.value}, {"source", f.source}});
  j["facts"] = fs;
  if (e.takes_file) j["file"] = true;
  return j;
}

}  // namespace detail

/// Runs the operation, writes `<prefix>.jsonl` plus the operation's
/// artifacts into the output directory, and returns the exit status.
/// Errors propagate as exceptions (exit status 1 at the command line).
inline RunResult run_scenario(const Scenario& sc) {
  RunResult res;
  const auto dir = output_dir(sc.out_dir);
  detail::Outputs out(dir, sc.prefix, res);
  if (sc.operation == "catalog") {
    for (const auto& e : catalog_list()) res.lines.push_back(detail::catalog_json(e));
    for (const auto& e : catalog_list()) res.summary.push_back(e.id + ": " + e.description);
  } else {
    const Spacetime st = make_spacetime(sc.spacetime, sc.params, sc.metric_file);
    if (sc.operation == "reach") detail::run_reach(sc, st, out, res);
    else if (sc.operation == "diamond") detail::run_diamond(sc, st, out, res);
    else if (sc.operation == "tau") detail::run_tau(sc, st, out, res);
    else if (sc.operation == "diagnose") detail::run_diagnose(sc, st, out, res);
    else if (sc.operation == "limit") detail::run_limit(sc, st, out, res);
    else if (sc.operation == "widen") detail::run_widen(sc, st, out, res);
    else if (sc.operation == "develop") detail::run_develop(sc, st, out, res);
    else throw InvalidArgument("unknown operation '" + sc.operation + "'");
  }
  std::string jsonl;
  for (const auto& l : res.lines) jsonl += dump17(l) + "\n";
  const auto path = dir / (sc.prefix + ".jsonl");
  write_atomic(path, jsonl);
  res.artifacts.push_back(path);
  return res;
}

}  // namespace lorentz
