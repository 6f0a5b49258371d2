// SPDX-License-Identifier: Apache-2.0
// Example spacetimes with their known facts, plus metrics sampled on grids.
#pragma once

#include "lorentz/ladder.hpp"
#include "lorentz/spacetimes.hpp"

#include <Eigen/Eigenvalues>

#include <fstream>
#include <map>
#include <numbers>
#include <sstream>

namespace lorentz {

// ---------------------------------------------------------------------------
// Metrics given on a node grid, interpolated multilinearly.
//
// File: header `metric dims=<n0>x<n1>.. bounds=lo,hi;lo,hi.. periodic=0,1..`
// then one line per node (row-major, last axis fastest) holding the
// n(n+1)/2 upper-triangle entries g00,g01,..,g11,.. separated by commas.

struct MetricGrid {
  Box bounds;
  std::vector<int> nodes;
  std::vector<bool> periodic;
  std::vector<Form> forms;  ///< row-major, last axis fastest
};

namespace detail {

inline std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t k = s.find(sep, start);
    out.push_back(s.substr(start, k == std::string::npos ? std::string::npos : k - start));
    if (k == std::string::npos) return out;
    start = k + 1;
  }
}

/// Time orientation of a Lorentzian form: the eigenvector of its negative
/// eigenvalue, oriented along +t.
inline Vec negative_eigenvector(const Form& g) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(g);
  Vec t = es.eigenvectors().col(0);
  if (t[0] < 0.0) t = -t;
  return t;
}

}  // namespace detail

inline MetricGrid read_metric_grid(std::istream& is) {
  std::string line;
  int ln = 1;
  if (!std::getline(is, line)) throw ParseError("empty metric grid file", 1, 1);
  const auto hdr = detail::parse_header(line, "metric", 1);
  for (const char* key : {"dims", "bounds"})
    if (!hdr.count(key)) throw ParseError(std::string("missing ") + key + " in metric header", 1, 1);
  MetricGrid mg;
  const auto& [dims, dcol] = hdr.at("dims");
  for (const auto& d : detail::split(dims, 'x')) {
    const double v = detail::parse_number(d, 1, dcol);
    if (v < 2 || v != std::floor(v)) throw ParseError("each axis needs at least two nodes", 1, dcol);
    mg.nodes.push_back(static_cast<int>(v));
  }
  const int n = static_cast<int>(mg.nodes.size());
  if (n < 2 || n > kMaxDim) throw ParseError("unsupported dimension", 1, dcol);
  const auto& [bnds, bcol] = hdr.at("bounds");
  const auto axes = detail::split(bnds, ';');
  if (static_cast<int>(axes.size()) != n) throw ParseError("bounds do not match dims", 1, bcol);
  Vec lo(n), hi(n);
  for (int a = 0; a < n; ++a) {
    const auto lh = detail::split(axes[a], ',');
    if (lh.size() != 2) throw ParseError("bounds need lo,hi per axis", 1, bcol);
    lo[a] = detail::parse_number(lh[0], 1, bcol);
    hi[a] = detail::parse_number(lh[1], 1, bcol);
    if (!(hi[a] > lo[a])) throw ParseError("empty bounds interval", 1, bcol);
  }
  mg.bounds = Box(lo, hi);
  mg.periodic.assign(n, false);
  if (hdr.count("periodic")) {
    const auto& [per, pcol] = hdr.at("periodic");
    const auto flags = detail::split(per, ',');
    if (static_cast<int>(flags.size()) != n) throw ParseError("periodic flags do not match dims", 1, pcol);
    for (int a = 0; a < n; ++a) {
      if (flags[a] != "0" && flags[a] != "1") throw ParseError("periodic flags must be 0 or 1", 1, pcol);
      mg.periodic[a] = flags[a] == "1";
    }
  }
  std::size_t total = 1;
  for (int c : mg.nodes) total *= static_cast<std::size_t>(c);
  const std::size_t entries = static_cast<std::size_t>(n * (n + 1) / 2);
  while (mg.forms.size() < total) {
    if (!std::getline(is, line)) throw ParseError("expected " + std::to_string(total) + " nodes", ln + 1, 1);
    ++ln;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    const auto toks = detail::split(line, ',');
    if (toks.size() != entries)
      throw ParseError("expected " + std::to_string(entries) + " entries per node", ln, 1);
    Form g(n, n);
    std::size_t k = 0;
    int col = 1;
    for (int i = 0; i < n; ++i)
      for (int j = i; j < n; ++j) {
        g(i, j) = g(j, i) = detail::parse_number(toks[k], ln, col);
        col += static_cast<int>(toks[k].size()) + 1;
        ++k;
      }
    mg.forms.push_back(g);
  }
  while (std::getline(is, line)) {
    ++ln;
    if (line.find_first_not_of(" \t\r") != std::string::npos) throw ParseError("trailing data after the nodes", ln, 1);
  }
  return mg;
}

inline void write_metric_grid(std::ostream& os, const MetricGrid& mg) {
  const int n = mg.bounds.dim();
  os << "metric dims=";
  for (int a = 0; a < n; ++a) os << (a ? "x" : "") << mg.nodes[a];
  os << " bounds=";
  for (int a = 0; a < n; ++a) os << (a ? ";" : "") << fmt_double(mg.bounds.lo[a]) << "," << fmt_double(mg.bounds.hi[a]);
  os << " periodic=";
  for (int a = 0; a < n; ++a) os << (a ? "," : "") << (mg.periodic[a] ? 1 : 0);
  os << "\n";
  for (const auto& g : mg.forms) {
    bool first = true;
    for (int i = 0; i < n; ++i)
      for (int j = i; j < n; ++j) {
        os << (first ? "" : ",") << fmt_double(g(i, j));
        first = false;
      }
    os << "\n";
  }
}

/// Samples a field on `nodes` points per axis over its chart bounds.
inline MetricGrid sample_metric_grid(const MetricField& g, const std::vector<int>& nodes) {
  const ChartDomain& chart = g.chart();
  MetricGrid mg;
  mg.bounds = chart.bounds();
  mg.nodes = nodes;
  mg.periodic = chart.periodic();
  const int n = chart.dim();
  if (static_cast<int>(nodes.size()) != n) throw InvalidArgument("one node count per axis required");
  std::vector<int> i(n, 0);
  while (true) {
    Vec x(n);
    for (int a = 0; a < n; ++a) {
      if (nodes[a] < 2) throw InvalidArgument("each axis needs at least two nodes");
      x[a] = mg.bounds.lo[a] + (mg.bounds.hi[a] - mg.bounds.lo[a]) * i[a] / (nodes[a] - 1);
    }
    mg.forms.push_back(g(x));
    int a = n - 1;
    while (a >= 0 && ++i[a] == nodes[a]) i[a--] = 0;
    if (a < 0) break;
  }
  return mg;
}

/// Multilinear interpolation of the node forms; the time orientation is the
/// negative eigenvector of the interpolated form. The modulus is Lipschitz
/// with the largest Frobenius difference between neighbor nodes per unit
/// spacing, times sqrt(n).
inline MetricField grid_metric(const MetricGrid& mg, std::string id = "grid") {
  const int n = mg.bounds.dim();
  std::size_t total = 1;
  for (int c : mg.nodes) total *= static_cast<std::size_t>(c);
  if (mg.forms.size() != total) throw InvalidArgument("node count does not match dims");
  std::vector<std::size_t> stride(n, 1);
  for (int a = n - 2; a >= 0; --a) stride[a] = stride[a + 1] * static_cast<std::size_t>(mg.nodes[a + 1]);
  double lip = 0.0;
  for (std::size_t k = 0; k < total; ++k)
    for (int a = 0; a < n; ++a) {
      const std::size_t ia = (k / stride[a]) % static_cast<std::size_t>(mg.nodes[a]);
      if (ia + 1 >= static_cast<std::size_t>(mg.nodes[a])) continue;
      const double h = (mg.bounds.hi[a] - mg.bounds.lo[a]) / (mg.nodes[a] - 1);
      lip = std::max(lip, (mg.forms[k + stride[a]] - mg.forms[k]).norm() / h);
    }
  auto data = std::make_shared<const MetricGrid>(mg);
  auto eval = [data, stride, n](const Vec& x) -> Form {
    const MetricGrid& m = *data;
    std::vector<std::size_t> base(n);
    std::vector<double> frac(n);
    for (int a = 0; a < n; ++a) {
      const double h = (m.bounds.hi[a] - m.bounds.lo[a]) / (m.nodes[a] - 1);
      double u = (x[a] - m.bounds.lo[a]) / h;
      u = std::clamp(u, 0.0, static_cast<double>(m.nodes[a] - 1));
      std::size_t b = static_cast<std::size_t>(std::floor(u));
      if (b + 1 >= static_cast<std::size_t>(m.nodes[a])) b = static_cast<std::size_t>(m.nodes[a]) - 2;
      base[a] = b;
      frac[a] = u - static_cast<double>(b);
    }
    Form g = Form::Zero(n, n);
    for (int corner = 0; corner < (1 << n); ++corner) {
      double w = 1.0;
      std::size_t k = 0;
      for (int a = 0; a < n; ++a) {
        const bool up = (corner >> a) & 1;
        w *= up ? frac[a] : 1.0 - frac[a];
        k += (base[a] + (up ? 1 : 0)) * stride[a];
      }
      if (w != 0.0) g += w * m.forms[k];
    }
    return g;
  };
  auto chart = make_chart(mg.bounds, mg.periodic);
  return MetricField(
      std::move(chart), eval, [eval](const Vec& x) { return detail::negative_eigenvector(eval(x)); },
      Modulus::lipschitz(lip * std::sqrt(static_cast<double>(n))), std::move(id));
}

inline MetricField load_grid_metric(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw Error("cannot open " + path);
  auto mg = read_metric_grid(is);
  auto g = grid_metric(mg, "grid(" + path + ")");
  verify_signature(g, chart_sampling(g.chart(), 9).points());
  return g;
}

// ---------------------------------------------------------------------------
// Catalog.

struct ParamSpec {
  std::string name;
  double value = 0.0;  ///< default
  double lo = -kInf, hi = kInf;
  std::string help;
};

/// A known property of an entry. `source` says how it is known:
/// "closed-form" (exact formula), "oracle" (independent fine computation)
/// or "static" (by construction).
struct Fact {
  std::string name;
  std::string value;
  std::string source;
};

using ParamValues = std::map<std::string, double>;

struct Spacetime {
  MetricField metric;
  std::optional<CauchySurfaceSpec> cauchy;  ///< surface used by diagnose
  std::vector<Vec> strong_points;           ///< points for the strong-causality rung
};

struct CatalogEntry {
  std::string id;
  std::string description;
  std::vector<ParamSpec> params;
  std::vector<Fact> facts;
  bool takes_file = false;  ///< reads a metric grid file
  std::function<Spacetime(const ParamValues&, const std::string& file)> build;
};

namespace detail {

inline CauchySurfaceSpec time_level(double level) {
  return CauchySurfaceSpec{[](const Vec& x) { return x[0]; }, level, "t = " + fmt_double(level)};
}

inline Box square(double t0, double t1, double x0, double x1) { return Box(make_vec({t0, x0}), make_vec({t1, x1})); }

inline std::vector<CatalogEntry> build_catalog() {
  std::vector<CatalogEntry> c;

  c.push_back({"minkowski2d",
               "-dt^2 + dx^2 on [-L,L]^2",
               {{"L", 3.0, 0.5, 1e3, "half width of the chart"}},
               {{"future", "J+(p) = {t - t_p >= |x - x_p|}", "closed-form"},
                {"tau", "tau((0,0),(2,1)) = sqrt(3), the chord is the unique maximizer", "closed-form"},
                {"imprisonment", "longest causal curve in [0,1]x[-1,1] has h-length sqrt(2)", "closed-form"},
                {"ladder", "every rung passes", "static"}},
               false,
               [](const ParamValues& v, const std::string&) {
                 const double L = v.at("L");
                 return Spacetime{minkowski(make_chart(cube(2, -L, L)), "minkowski2d"), time_level(0.0),
                                  {make_vec({0.0, 0.0})}};
               }});

  c.push_back({"minkowski3d",
               "-dt^2 + dx^2 + dy^2 on [-L,L]^3",
               {{"L", 2.0, 0.5, 1e3, "half width of the chart"}},
               {{"future", "J+(p) = {t - t_p >= |x - x_p|}", "closed-form"}, {"ladder", "every rung passes", "static"}},
               false,
               [](const ParamValues& v, const std::string&) {
                 const double L = v.at("L");
                 return Spacetime{minkowski(make_chart(cube(3, -L, L)), "minkowski3d"), time_level(0.0), {}};
               }});

  c.push_back({"ctc_cylinder",
               "-dt^2 + dx^2 with t periodic in [0,period], x in [-X,X]",
               {{"period", 1.0, 0.05, 1e3, "length of the time circle"}, {"X", 1.0, 0.1, 1e3, "spatial half width"}},
               {{"causality", "fails: t -> (t, x0) is a closed timelike curve", "closed-form"},
                {"imprisonment", "unbounded: the closed curve winds forever in any compact band", "closed-form"}},
               false,
               [](const ParamValues& v, const std::string&) {
                 return Spacetime{minkowski(make_chart(square(0.0, v.at("period"), -v.at("X"), v.at("X")), {true, false}),
                                            "ctc_cylinder"),
                                  std::nullopt,
                                  {}};
               }});

  c.push_back({"causal_cylinder",
               "-dt^2 + dx^2 with x periodic in [-period/2,period/2], t in [-T,T]",
               {{"period", 2.0, 0.1, 1e3, "length of the space circle"}, {"T", 2.0, 0.1, 1e3, "time half height"}},
               {{"causality", "passes: t increases along every causal curve", "closed-form"},
                {"strong-causality", "passes everywhere", "closed-form"},
                {"cauchy", "{t = 0} is a Cauchy surface", "closed-form"}},
               false,
               [](const ParamValues& v, const std::string&) {
                 const double P = v.at("period");
                 return Spacetime{
                     minkowski(make_chart(square(-v.at("T"), v.at("T"), -P / 2, P / 2), {false, true}), "causal_cylinder"),
                     time_level(0.0),
                     {make_vec({0.0, 0.0})}};
               }});

  c.push_back({"punctured_minkowski",
               "-dt^2 + dx^2 on [-L,L]^2 with the box of half width r around (t0,x0) removed",
               {{"L", 3.0, 0.5, 1e3, "half width of the chart"},
                {"t0", 1.0, -1e3, 1e3, "puncture time"},
                {"x0", 0.0, -1e3, 1e3, "puncture position"},
                {"r", 0.03, 1e-4, 1.0, "puncture half width"}},
               {{"cauchy", "{t = 0} fails: past-inextendible curves from just above the puncture never meet it",
                 "closed-form"},
                {"causality", "passes", "closed-form"}},
               false,
               [](const ParamValues& v, const std::string&) {
                 const double L = v.at("L");
                 const Box hole = Box::around(make_vec({v.at("t0"), v.at("x0")}), v.at("r"));
                 return Spacetime{minkowski(make_chart(cube(2, -L, L), {}, {hole}), "punctured_minkowski"),
                                  time_level(0.0),
                                  {}};
               }});

  c.push_back({"slit_minkowski",
               "-dt^2 + dx^2 on [-1,3]x[-2,2] with the segment {t = t_s, |x| <= w} removed",
               {{"t_s", 1.0, -0.5, 2.5, "slit time"}, {"w", 0.5, 0.05, 1.5, "slit half width"}},
               {{"causal-simplicity", "fails: J+(p) is not closed behind the slit tips", "closed-form"},
                {"diamond", "J((0,0),(2,0)) is not closed", "closed-form"},
                {"causality", "passes", "closed-form"}},
               false,
               [](const ParamValues& v, const std::string&) {
                 const Box slit(make_vec({v.at("t_s"), -v.at("w")}), make_vec({v.at("t_s"), v.at("w")}));
                 return Spacetime{minkowski(make_chart(square(-1.0, 3.0, -2.0, 2.0), {}, {slit}), "slit_minkowski"),
                                  std::nullopt,
                                  {}};
               }});

  c.push_back(
      {"bubble_metric",
       "-dt^2 + dx^2/c(x)^2, c = 1 + beta |x|^alpha, on [-T,T]x[-X,X]: Hoelder cones opening away from x = 0",
       {{"alpha", 0.5, 0.05, 0.95, "Hoelder exponent"},
        {"beta", 0.5, 0.01, 5.0, "amplitude"},
        {"T", 2.0, 0.1, 1e3, "time half height"},
        {"X", 2.0, 0.1, 1e3, "spatial half width"}},
       {{"future", "the null boundary from (0,0) reaches x at t = integral_0^|x| ds / c(s)", "closed-form"},
        {"tau", "tau((-1,-0.75),(1,0.75)) = 1.6203 at alpha = beta = 0.5 (longest path, 512 rows)", "oracle"},
        {"ladder", "every rung passes", "oracle"}},
       false,
       [](const ParamValues& v, const std::string&) {
         return Spacetime{
             bubble_metric(make_chart(square(-v.at("T"), v.at("T"), -v.at("X"), v.at("X"))), v.at("alpha"), v.at("beta")),
             time_level(0.0),
             {make_vec({0.0, 0.0})}};
       }});

  c.push_back({"conformal_scaled",
               "(1 + a sin(x) cos(t)) (-dt^2 + dx^2) on [-L,L]^2: the cones of Minkowski space",
               {{"a", 0.5, -0.95, 0.95, "conformal amplitude"}, {"L", 3.0, 0.5, 1e3, "half width of the chart"}},
               {{"cone-order", "cones equal Minkowski's: weakly ordered both ways, strictly in neither", "closed-form"},
                {"future", "J+(p) = {t - t_p >= |x - x_p|}", "closed-form"}},
               false,
               [](const ParamValues& v, const std::string&) {
                 const double L = v.at("L");
                 return Spacetime{conformal_scaled(make_chart(cube(2, -L, L)), v.at("a")), time_level(0.0), {}};
               }});

  c.push_back({"tilted_cylinder",
               "Minkowski cones rotated by theta(t) in a band around t = 0, x periodic in [-1,1], t in [-1,1]",
               {{"theta", 1.2, 0.0, 1.5, "largest tilt angle"},
                {"band", 0.25, 0.0, 0.5, "half height of the fully tilted band"},
                {"ramp", 0.25, 0.05, 0.5, "height of the transition"}},
               {{"causality", "fails for theta > pi/4: the x circle inside the band is timelike", "closed-form"}},
               false,
               [](const ParamValues& v, const std::string&) {
                 return Spacetime{tilted_cones(make_chart(cube(2, -1.0, 1.0), {false, true}), v.at("theta"), v.at("band"),
                                               v.at("ramp")),
                                  std::nullopt,
                                  {}};
               }});

  c.push_back({"widened_minkowski",
               "widen(eta, eps) = eta - eps h on [-L,L]^2",
               {{"eps", 0.1, 1e-6, 0.99, "widening amount"}, {"L", 3.0, 0.5, 1e3, "half width of the chart"}},
               {{"delta", "Delta(eta, widen(eta, eps)) = eps", "closed-form"},
                {"cone", "null slope |dx/dt| = sqrt((1 + eps)/(1 - eps))", "closed-form"}},
               false,
               [](const ParamValues& v, const std::string&) {
                 const double L = v.at("L");
                 return Spacetime{widen(minkowski(make_chart(cube(2, -L, L))), v.at("eps")), time_level(0.0), {}};
               }});

  c.push_back({"widened_bubble",
               "widen(bubble_metric, eps) on [-2,2]^2",
               {{"eps", 0.1, 1e-6, 0.5, "widening amount"},
                {"alpha", 0.5, 0.05, 0.95, "Hoelder exponent"},
                {"beta", 0.5, 0.01, 5.0, "amplitude"}},
               {{"delta", "Delta(g, widen(g, eps)) = eps", "closed-form"}},
               false,
               [](const ParamValues& v, const std::string&) {
                 return Spacetime{
                     widen(bubble_metric(make_chart(cube(2, -2.0, 2.0)), v.at("alpha"), v.at("beta")), v.at("eps")),
                     time_level(0.0),
                     {}};
               }});

  c.push_back({"grid",
               "metric read from a node grid file, interpolated multilinearly",
               {},
               {},
               true,
               [](const ParamValues&, const std::string& file) {
                 if (file.empty()) throw InvalidArgument("the grid spacetime needs a file");
                 return Spacetime{load_grid_metric(file), std::nullopt, {}};
               }});
  return c;
}

}  // namespace detail

inline const std::vector<CatalogEntry>& catalog_list() {
  static const std::vector<CatalogEntry> entries = detail::build_catalog();
  return entries;
}

inline const CatalogEntry& catalog_entry(const std::string& id) {
  for (const auto& e : catalog_list())
    if (e.id == id) return e;
  throw InvalidArgument("unknown spacetime '" + id + "'");
}

/// Defaults overlaid with `given`; unknown names and out-of-range values
/// raise InvalidArgument naming the parameter.
inline ParamValues resolve_params(const CatalogEntry& e, const ParamValues& given) {
  ParamValues v;
  for (const auto& p : e.params) v[p.name] = p.value;
  for (const auto& [k, x] : given) {
    auto it = std::find_if(e.params.begin(), e.params.end(), [&](const ParamSpec& p) { return p.name == k; });
    if (it == e.params.end()) throw InvalidArgument("'" + e.id + "' has no parameter '" + k + "'");
    if (!(x >= it->lo && x <= it->hi))
      throw InvalidArgument("parameter '" + k + "' = " + fmt_double(x) + " outside [" + fmt_double(it->lo) + ", " +
                            fmt_double(it->hi) + "]");
    v[k] = x;
  }
  return v;
}

inline Spacetime make_spacetime(const std::string& id, const ParamValues& given = {}, const std::string& file = "") {
  const CatalogEntry& e = catalog_entry(id);
  return e.build(resolve_params(e, given), file);
}

}  // namespace lorentz
