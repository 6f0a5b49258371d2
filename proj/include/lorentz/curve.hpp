// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "lorentz/metric.hpp"

#include <cctype>
#include <istream>
#include <iterator>
#include <map>
#include <mutex>
#include <ostream>

namespace lorentz {

enum class Param { Generic, Arclength, Proportional };
enum class Orientation { Future, Past };

inline const char* to_string(Param p) {
  switch (p) {
    case Param::Generic: return "generic";
    case Param::Arclength: return "arclength";
    case Param::Proportional: return "proportional";
  }
  return "?";
}

inline const char* to_string(Orientation o) { return o == Orientation::Future ? "future" : "past"; }

/// Piecewise-linear curve. Vertices are stored in lifted coordinates, so a
/// curve that winds around a periodic axis keeps increasing along it.
class CausalCurve {
 public:
  CausalCurve() = default;

  CausalCurve(std::vector<Vec> vertices, std::vector<double> params, Param param,
              Orientation orient = Orientation::Future, const RiemannianBackground& h = {})
      : vertices_(std::move(vertices)), params_(std::move(params)), param_(param), orient_(orient) {
    if (vertices_.size() < 2) throw InvalidArgument("a curve needs at least two vertices");
    if (params_.size() != vertices_.size()) throw InvalidArgument("one parameter value per vertex required");
    const Eigen::Index n = vertices_[0].size();
    for (std::size_t i = 0; i < vertices_.size(); ++i) {
      if (vertices_[i].size() != n) throw InvalidArgument("vertex dimension mismatch");
      if (!vertices_[i].allFinite()) throw InvalidArgument("non-finite vertex " + std::to_string(i));
    }
    h_length_ = 0.0;
    lip_ = 0.0;
    for (std::size_t i = 0; i + 1 < vertices_.size(); ++i) {
      if (vertices_[i] == vertices_[i + 1]) throw InvalidArgument("repeated vertex " + std::to_string(i + 1));
      const double ds = params_[i + 1] - params_[i];
      if (!(ds > 0.0)) throw InvalidArgument("parameter values must increase strictly");
      const double len = h.segment_length(vertices_[i], vertices_[i + 1]);
      h_length_ += len;
      lip_ = std::max(lip_, len / ds);
    }
  }

  /// Generic parametrization by vertex index.
  static CausalCurve polyline(std::vector<Vec> vertices, Orientation orient = Orientation::Future,
                              const RiemannianBackground& h = {}) {
    std::vector<double> s(vertices.size());
    for (std::size_t i = 0; i < s.size(); ++i) s[i] = static_cast<double>(i);
    return CausalCurve(std::move(vertices), std::move(s), Param::Generic, orient, h);
  }

  int dim() const { return static_cast<int>(vertices_.front().size()); }
  std::size_t size() const { return vertices_.size(); }
  std::size_t segments() const { return vertices_.size() - 1; }
  const std::vector<Vec>& vertices() const { return vertices_; }
  const std::vector<double>& params() const { return params_; }
  const Vec& vertex(std::size_t i) const { return vertices_[i]; }
  const Vec& front() const { return vertices_.front(); }
  const Vec& back() const { return vertices_.back(); }
  Param param() const { return param_; }
  Orientation orientation() const { return orient_; }
  double h_length() const { return h_length_; }
  double lipschitz() const { return lip_; }
  double param_begin() const { return params_.front(); }
  double param_end() const { return params_.back(); }

  /// Point at parameter s (clamped to the domain).
  Vec at(double s) const {
    if (s <= params_.front()) return vertices_.front();
    if (s >= params_.back()) return vertices_.back();
    const auto it = std::upper_bound(params_.begin(), params_.end(), s);
    const std::size_t j = static_cast<std::size_t>(it - params_.begin()) - 1;
    const double u = (s - params_[j]) / (params_[j + 1] - params_[j]);
    return vertices_[j] + u * (vertices_[j + 1] - vertices_[j]);
  }

  bool operator==(const CausalCurve& o) const {
    return param_ == o.param_ && orient_ == o.orient_ && params_ == o.params_ && vertices_ == o.vertices_;
  }

 private:
  std::vector<Vec> vertices_;
  std::vector<double> params_;
  Param param_ = Param::Generic;
  Orientation orient_ = Orientation::Future;
  double h_length_ = 0.0;
  double lip_ = 0.0;
};

/// Endpoints plus members in proportional parametrization.
struct CurveEnsemble {
  Vec p, q;
  std::vector<CausalCurve> members;
  std::vector<bool> canonical;  ///< constant h-speed members
};

// ---------------------------------------------------------------------------
// Reparametrization.

inline CausalCurve h_arclength_reparam(const CausalCurve& c, const RiemannianBackground& h = {}) {
  if (c.size() < 2) throw InvalidArgument("zero-length curve");
  std::vector<double> s(c.size());
  s[0] = 0.0;
  for (std::size_t i = 1; i < c.size(); ++i) s[i] = s[i - 1] + h.segment_length(c.vertex(i - 1), c.vertex(i));
  if (!(s.back() > 0.0)) throw InvalidArgument("zero-length curve");
  return CausalCurve(c.vertices(), std::move(s), Param::Arclength, c.orientation(), h);
}

/// Arclength parametrization rescaled to [0,1]; the representative of the
/// curve's equivalence class with constant h-speed.
inline CausalCurve canonicalize(const CausalCurve& c, const RiemannianBackground& h = {}) {
  if (c.size() < 2) throw InvalidArgument("zero-length curve");
  std::vector<double> s(c.size());
  s[0] = 0.0;
  for (std::size_t i = 1; i < c.size(); ++i) s[i] = s[i - 1] + h.segment_length(c.vertex(i - 1), c.vertex(i));
  const double total = s.back();
  if (!(total > 0.0)) throw InvalidArgument("zero-length curve");
  for (auto& x : s) x /= total;
  s.back() = 1.0;
  return CausalCurve(c.vertices(), std::move(s), Param::Proportional, c.orientation(), h);
}

inline CausalCurve reversed(const CausalCurve& c, const RiemannianBackground& h = {}) {
  std::vector<Vec> v(c.vertices().rbegin(), c.vertices().rend());
  std::vector<double> s(c.size());
  const double b = c.param_end();
  for (std::size_t i = 0; i < s.size(); ++i) s[i] = b - c.params()[c.size() - 1 - i] + c.param_begin();
  const Orientation o = c.orientation() == Orientation::Future ? Orientation::Past : Orientation::Future;
  return CausalCurve(std::move(v), std::move(s), c.param(), o, h);
}

/// Concatenation in generic parametrization; a shared joint vertex is merged.
inline CausalCurve concatenate(const CausalCurve& a, const CausalCurve& b, const RiemannianBackground& h = {}) {
  std::vector<Vec> v = a.vertices();
  for (std::size_t i = 0; i < b.size(); ++i)
    if (i > 0 || b.vertex(0) != v.back()) v.push_back(b.vertex(i));
  return CausalCurve::polyline(std::move(v), a.orientation(), h);
}

// ---------------------------------------------------------------------------
// Causality.

enum class CausalKind { CausalFuture, CausalPast, Violation };

inline const char* to_string(CausalKind k) {
  switch (k) {
    case CausalKind::CausalFuture: return "causal-future";
    case CausalKind::CausalPast: return "causal-past";
    case CausalKind::Violation: return "violation";
  }
  return "?";
}

struct CausalityResult {
  CausalKind kind = CausalKind::CausalFuture;
  Vec point;                ///< worst sample point
  Vec direction;            ///< h-unit tangent there
  double worst = -kInf;     ///< largest g(v,v) seen on h-unit tangents
  double violating_fraction = 0.0;

  bool causal() const { return kind != CausalKind::Violation; }
};

/// Midpoint-sample check of the tangent condition. The null tolerance is
/// scaled by g(v,T)^2 (h-unit v and T, floored at 1) so null curves pass
/// exactly in constant metrics.
inline CausalityResult is_causal(const CausalCurve& c, const MetricField& g, double tol = kNullTolerance,
                                 int checks_per_segment = 1, double tol_measure = 0.0) {
  if (checks_per_segment < 1) throw InvalidArgument("checks_per_segment must be positive");
  const ChartDomain& chart = g.chart();
  for (std::size_t i = 0; i < c.size(); ++i)
    if (!chart.in_bounds(c.vertex(i))) throw DomainError("curve exits the chart at vertex " + std::to_string(i), c.vertex(i));

  CausalityResult res;
  std::size_t total = 0, bad_future = 0, bad_past = 0;
  const RiemannianBackground& h = chart.background();
  for (std::size_t i = 0; i + 1 < c.size(); ++i) {
    const Vec& a = c.vertex(i);
    const Vec d = c.vertex(i + 1) - a;
    for (int j = 0; j < checks_per_segment; ++j) {
      const Vec x = a + ((j + 0.5) / checks_per_segment) * d;
      const Vec v = d / h.norm(x, d);
      const Form gx = g(x);
      Vec t = g.time_orientation(x);
      t /= h.norm(x, t);
      const double q = quadratic(gx, v);
      const double pair = bilinear(gx, v, t);
      const double thr = tol * std::max(1.0, pair * pair);
      const bool causal = q <= thr;
      ++total;
      if (!causal || !(pair < 0.0)) ++bad_future;
      if (!causal || !(pair > 0.0)) ++bad_past;
      if (q > res.worst) {
        res.worst = q;
        res.point = x;
        res.direction = v;
      }
    }
  }
  const double ff = static_cast<double>(bad_future) / total;
  const double fp = static_cast<double>(bad_past) / total;
  if (ff <= tol_measure) res.kind = CausalKind::CausalFuture;
  else if (fp <= tol_measure) res.kind = CausalKind::CausalPast;
  else res.kind = CausalKind::Violation;
  res.violating_fraction = std::min(ff, fp);
  return res;
}

// ---------------------------------------------------------------------------
// Length functionals.

struct GaussRule {
  std::vector<double> nodes;    ///< on [0,1]
  std::vector<double> weights;  ///< summing to 1
};

/// Gauss-Legendre rule of the given order mapped to [0,1] (Newton on P_n).
inline const GaussRule& gauss_legendre(int order) {
  static std::mutex mu;
  static std::map<int, GaussRule> cache;
  std::lock_guard<std::mutex> lock(mu);
  auto it = cache.find(order);
  if (it != cache.end()) return it->second;
  GaussRule r;
  for (int i = 1; i <= order; ++i) {
    double x = std::cos(std::numbers::pi * (i - 0.25) / (order + 0.5));
    double dp = 0.0;
    for (int iter = 0; iter < 100; ++iter) {
      double p0 = 1.0, p1 = x;
      for (int k = 2; k <= order; ++k) {
        const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      dp = order * (x * p1 - p0) / (x * x - 1.0);
      const double dx = p1 / dp;
      x -= dx;
      if (std::abs(dx) < 1e-16) break;
    }
    r.nodes.push_back(0.5 * (1.0 - x));
    r.weights.push_back(1.0 / ((1.0 - x * x) * dp * dp));
  }
  return cache.emplace(order, std::move(r)).first->second;
}

namespace detail {
inline double gl_segment(const MetricField& g, const Vec& a, const Vec& d, double u0, double u1, const GaussRule& r) {
  double s = 0.0;
  for (std::size_t k = 0; k < r.nodes.size(); ++k) {
    const Vec x = a + (u0 + (u1 - u0) * r.nodes[k]) * d;
    s += r.weights[k] * std::sqrt(std::max(0.0, -quadratic(g(x), d)));
  }
  return s * (u1 - u0);
}

inline double adaptive_segment(const MetricField& g, const Vec& a, const Vec& d, double u0, double u1,
                               const GaussRule& r, double whole, int depth) {
  const double um = 0.5 * (u0 + u1);
  const double left = gl_segment(g, a, d, u0, um, r);
  const double right = gl_segment(g, a, d, um, u1, r);
  if (depth <= 0 || std::abs(left + right - whole) <= 1e-13 * std::max(1.0, std::abs(whole))) return left + right;
  return adaptive_segment(g, a, d, u0, um, r, left, depth - 1) + adaptive_segment(g, a, d, um, u1, r, right, depth - 1);
}
}  // namespace detail

/// Integral of sqrt(max(0, -g(c', c'))) by per-segment Gauss-Legendre
/// quadrature with adaptive halving, which resolves both null crossings and
/// kinks of the metric. Constant metrics take one evaluation per segment.
/// Parametrization independent.
inline double lorentz_length(const CausalCurve& c, const MetricField& g, int order = 8) {
  const GaussRule& r = gauss_legendre(order);
  const bool constant = g.modulus().known() && g.modulus()(1.0) == 0.0;
  double total = 0.0;
  for (std::size_t i = 0; i + 1 < c.size(); ++i) {
    const Vec& a = c.vertex(i);
    const Vec d = c.vertex(i + 1) - a;
    if (constant) {
      total += std::sqrt(std::max(0.0, -quadratic(g(a + 0.5 * d), d)));
      continue;
    }
    total += detail::adaptive_segment(g, a, d, 0.0, 1.0, r, detail::gl_segment(g, a, d, 0.0, 1.0, r), 30);
  }
  return total;
}

// ---------------------------------------------------------------------------
// Curve-space distances. Both use the coordinate (Euclidean) distance,
// which is d^h for the identity background.

/// rho(a, b) = sup_s |a(s) - b(s)| for curves on [0,1]. Exact: on the common refinement of the
/// breakpoints the difference is affine, so the sup sits at a breakpoint.
inline double sup_distance(const CausalCurve& a, const CausalCurve& b) {
  auto unit_domain = [](const CausalCurve& c) { return c.param_begin() == 0.0 && c.param_end() == 1.0; };
  if (!unit_domain(a) || !unit_domain(b)) throw InvalidArgument("sup distance needs curves parametrized on [0,1]");
  std::vector<double> s;
  s.reserve(a.size() + b.size());
  std::merge(a.params().begin(), a.params().end(), b.params().begin(), b.params().end(), std::back_inserter(s));
  double best = 0.0;
  for (double x : s) best = std::max(best, (a.at(x) - b.at(x)).norm());
  return best;
}

inline double point_segment_distance(const Vec& x, const Vec& a, const Vec& b) {
  if (x == a || x == b) return 0.0;
  const Vec d = b - a;
  const double dd = d.squaredNorm();
  double u = dd > 0.0 ? (x - a).dot(d) / dd : 0.0;
  u = std::clamp(u, 0.0, 1.0);
  return (a + u * d - x).norm();
}

inline double point_polyline_distance(const Vec& x, const CausalCurve& c) {
  double best = kInf;
  for (std::size_t j = 0; j + 1 < c.size(); ++j)
    best = std::min(best, point_segment_distance(x, c.vertex(j), c.vertex(j + 1)));
  return best;
}

/// sup over a's image of the distance to b's image. The distance function
/// is 1-Lipschitz along a segment, so branch and bound on (f0 + f1 + len)/2
/// converges to the sup; every returned value is an attained distance.
inline double directed_hausdorff(const CausalCurve& a, const CausalCurve& b, double tol = 1e-12) {
  double best = 0.0;
  for (const auto& v : a.vertices()) best = std::max(best, point_polyline_distance(v, b));
  struct Piece {
    Vec x0, x1;
    double f0, f1;
  };
  std::vector<Piece> stack;
  for (std::size_t i = 0; i + 1 < a.size(); ++i)
    stack.push_back({a.vertex(i), a.vertex(i + 1), point_polyline_distance(a.vertex(i), b),
                     point_polyline_distance(a.vertex(i + 1), b)});
  std::size_t budget = 200000;
  while (!stack.empty() && budget-- > 0) {
    Piece p = std::move(stack.back());
    stack.pop_back();
    const double len = (p.x1 - p.x0).norm();
    if (0.5 * (p.f0 + p.f1 + len) <= best + tol) continue;
    const Vec m = 0.5 * (p.x0 + p.x1);
    const double fm = point_polyline_distance(m, b);
    best = std::max(best, fm);
    stack.push_back({p.x0, m, p.f0, fm});
    stack.push_back({m, p.x1, fm, p.f1});
  }
  return best;
}

inline double hausdorff_distance(const CausalCurve& a, const CausalCurve& b, double tol = 1e-12) {
  if (a.vertices() == b.vertices()) return 0.0;
  return std::max(directed_hausdorff(a, b, tol), directed_hausdorff(b, a, tol));
}

/// Does the whole image lie in U (and, when a chart is given, avoid its
/// obstacles)? Each segment is clipped against every box and the covered
/// parameter intervals must exhaust [0,1].
inline bool image_in_region(const CausalCurve& c, const Region& u, const ChartDomain* chart = nullptr) {
  for (std::size_t i = 0; i + 1 < c.size(); ++i) {
    const Vec& a = c.vertex(i);
    const Vec& b = c.vertex(i + 1);
    std::vector<std::pair<double, double>> iv;
    for (const auto& box : u.boxes)
      if (auto r = box.clip(a, b)) iv.push_back(*r);
    std::sort(iv.begin(), iv.end());
    double reach = 0.0;
    for (const auto& [s0, s1] : iv) {
      if (s0 > reach + 1e-15) break;
      reach = std::max(reach, s1);
    }
    if (reach < 1.0 - 1e-15) return false;
    if (chart && chart->segment_blocked(a, b)) return false;
  }
  return true;
}

// ---------------------------------------------------------------------------
// Curve files.

inline void write_curve(std::ostream& os, const CausalCurve& c) {
  os << "curve n=" << c.size() << " param=" << to_string(c.param()) << " orient=" << to_string(c.orientation())
     << "\n";
  for (std::size_t i = 0; i < c.size(); ++i) os << fmt_double(c.params()[i]) << " " << fmt_vec(c.vertex(i), " ") << "\n";
}

namespace detail {
inline std::map<std::string, std::pair<std::string, int>> parse_header(const std::string& line, const std::string& tag,
                                                                       int lineno) {
  std::istringstream is(line);
  std::string word;
  is >> word;
  if (word != tag) throw ParseError("expected '" + tag + "' header", lineno, 1);
  std::map<std::string, std::pair<std::string, int>> kv;
  while (is >> word) {
    const int col = static_cast<int>(line.find(word)) + 1;
    const auto eq = word.find('=');
    if (eq == std::string::npos) throw ParseError("expected key=value, got '" + word + "'", lineno, col);
    kv[word.substr(0, eq)] = {word.substr(eq + 1), col};
  }
  return kv;
}

inline double parse_number(const std::string& tok, int line, int col) {
  try {
    std::size_t used = 0;
    const double v = std::stod(tok, &used);
    if (used != tok.size()) throw std::invalid_argument(tok);
    return v;
  } catch (const std::exception&) {
    throw ParseError("not a number: '" + tok + "'", line, col);
  }
}

/// Whitespace tokens of a line with 1-based columns.
inline std::vector<std::pair<std::string, int>> tokens(const std::string& line) {
  std::vector<std::pair<std::string, int>> out;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && std::isspace(static_cast<unsigned char>(line[i]))) ++i;
    if (i >= line.size()) break;
    const std::size_t j = i;
    while (i < line.size() && !std::isspace(static_cast<unsigned char>(line[i]))) ++i;
    out.emplace_back(line.substr(j, i - j), static_cast<int>(j) + 1);
  }
  return out;
}
}  // namespace detail

inline CausalCurve read_curve(std::istream& is, const RiemannianBackground& h = {}) {
  std::string line;
  int lineno = 1;
  if (!std::getline(is, line)) throw ParseError("empty curve file", 1, 1);
  auto kv = detail::parse_header(line, "curve", lineno);
  for (const char* k : {"n", "param", "orient"})
    if (!kv.count(k)) throw ParseError(std::string("missing header key '") + k + "'", 1, static_cast<int>(line.size()) + 1);
  const int n = static_cast<int>(detail::parse_number(kv["n"].first, 1, kv["n"].second));
  if (n < 2) throw ParseError("a curve needs at least two vertices", 1, kv["n"].second);
  Param param;
  const std::string& ps = kv["param"].first;
  if (ps == "generic") param = Param::Generic;
  else if (ps == "arclength") param = Param::Arclength;
  else if (ps == "proportional") param = Param::Proportional;
  else throw ParseError("unknown param '" + ps + "'", 1, kv["param"].second);
  const std::string& os = kv["orient"].first;
  if (os != "future" && os != "past") throw ParseError("unknown orientation '" + os + "'", 1, kv["orient"].second);
  const Orientation orient = os == "future" ? Orientation::Future : Orientation::Past;

  std::vector<Vec> verts;
  std::vector<double> params;
  int dim = -1;
  while (static_cast<int>(verts.size()) < n) {
    if (!std::getline(is, line)) throw ParseError("expected " + std::to_string(n) + " vertex lines", lineno + 1, 1);
    ++lineno;
    const auto toks = detail::tokens(line);
    if (toks.empty()) continue;
    if (dim < 0) dim = static_cast<int>(toks.size()) - 1;
    if (dim < 1 || dim > kMaxDim || static_cast<int>(toks.size()) != dim + 1)
      throw ParseError("wrong number of coordinates", lineno, 1);
    params.push_back(detail::parse_number(toks[0].first, lineno, toks[0].second));
    Vec v(dim);
    for (int i = 0; i < dim; ++i) v[i] = detail::parse_number(toks[i + 1].first, lineno, toks[i + 1].second);
    verts.push_back(v);
  }
  try {
    return CausalCurve(std::move(verts), std::move(params), param, orient, h);
  } catch (const InvalidArgument& e) {
    throw ParseError(e.what(), lineno, 1);
  }
}

}  // namespace lorentz
