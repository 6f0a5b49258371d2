// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "lorentz/ladder.hpp"

namespace lorentz {

struct SolverOptions {
  double gain_tol = 1e-4;      ///< stop refining once a doubling gains less (relative)
  int max_segments = 1024;     ///< refinement budget
  int max_sweeps = 400;        ///< coordinate-ascent sweeps per level
  double step_tol = 1e-10;     ///< smallest vertex move, relative to the chart diameter
  double jitter = 0.25;        ///< restart jitter, fraction of the local segment length
  int checks_per_segment = 5;  ///< cone samples per segment, ends included
  GridSpec grid = GridSpec::uniform(64);  ///< reach check and lattice initialization
  bool record_trace = true;
};

struct SolverLevel {
  int segments = 0;
  double tau = 0.0;
  int sweeps = 0;
};

struct TimeSeparation {
  double tau = 0.0;
  CausalCurve curve;               ///< canonical maximizer
  std::vector<SolverLevel> levels;  ///< winning restart, coarse to fine
  std::vector<CausalCurve> trace;   ///< canonical iterates of the winning restart
  std::uint64_t winning_seed = 0;
  std::string start;  ///< "chord" or "lattice"
  bool converged = true;
};

namespace detail {

/// Cone test on a straight segment with the tolerance convention of
/// is_causal, sampled at both ends and interior points, plus obstacle
/// clearance and chart bounds.
class SegmentTest {
 public:
  SegmentTest(const MetricField& g, int checks, double tol = kNullTolerance)
      : g_(g), checks_(std::max(2, checks)), tol_(tol) {
    constant_ = g.modulus().known() && g.modulus()(1.0) == 0.0;
  }

  bool operator()(const Vec& a, const Vec& b) const {
    const ChartDomain& chart = g_.chart();
    const Vec d = b - a;
    if (d.norm() == 0.0) return true;
    if (!chart.in_bounds(a) || !chart.in_bounds(b)) return false;
    if (!chart.obstacles().empty() && !segment_clear(chart, a, b)) return false;
    const int n = constant_ ? 1 : checks_;
    for (int j = 0; j < n; ++j) {
      // Midpoint first, it fails most often.
      const double s = n == 1 ? 0.5 : (j == 0 ? 0.5 : double(j - 1) / (n - 2));
      const Vec x = a + s * d;
      const Form gx = g_(x);
      const RiemannianBackground& h = chart.background();
      const Vec v = d / h.norm(x, d);
      Vec t = g_.time_orientation(x);
      t /= h.norm(x, t);
      const double pair = bilinear(gx, v, t);
      if (!(pair < 0.0)) return false;
      if (quadratic(gx, v) > tol_ * std::max(1.0, pair * pair)) return false;
    }
    return true;
  }

 private:
  const MetricField& g_;
  int checks_;
  double tol_;
  bool constant_ = false;
};

/// Lorentzian length of one straight segment.
class SegmentLength {
 public:
  explicit SegmentLength(const MetricField& g) : g_(g), rule_(gauss_legendre(8)) {
    constant_ = g.modulus().known() && g.modulus()(1.0) == 0.0;
  }
  double operator()(const Vec& a, const Vec& b) const {
    const Vec d = b - a;
    if (constant_) return std::sqrt(std::max(0.0, -quadratic(g_(a + 0.5 * d), d)));
    // Adaptive, so kinks of the metric cannot be exploited as quadrature error.
    return adaptive_segment(g_, a, d, 0.0, 1.0, rule_, gl_segment(g_, a, d, 0.0, 1.0, rule_), 12);
  }

 private:
  const MetricField& g_;
  const GaussRule& rule_;
  bool constant_ = false;
};

/// Splits the longest segment until the polyline has n segments.
inline std::vector<Vec> split_to(std::vector<Vec> v, std::size_t n) {
  while (v.size() < n + 1) {
    std::size_t best = 0;
    double len = -1.0;
    for (std::size_t i = 0; i + 1 < v.size(); ++i)
      if ((v[i + 1] - v[i]).norm() > len) {
        len = (v[i + 1] - v[i]).norm();
        best = i;
      }
    v.insert(v.begin() + static_cast<long>(best) + 1, 0.5 * (v[best] + v[best + 1]));
  }
  return v;
}

inline std::vector<Vec> midpoints_doubled(const std::vector<Vec>& v) {
  std::vector<Vec> out{v.front()};
  for (std::size_t i = 0; i + 1 < v.size(); ++i) {
    out.push_back(0.5 * (v[i] + v[i + 1]));
    out.push_back(v[i + 1]);
  }
  return out;
}

/// Largest fraction s in [0,1] (40 bisection steps) for which moving v[i]
/// by s*dv keeps both adjacent segments causal; 0 when none does.
inline double feasible_fraction(const SegmentTest& ok, const std::vector<Vec>& v, std::size_t i, const Vec& dv) {
  auto fits = [&](double s) {
    const Vec w = v[i] + s * dv;
    return ok(v[i - 1], w) && ok(w, v[i + 1]);
  };
  if (fits(1.0)) return 1.0;
  double lo = 0.0, hi = 1.0;
  for (int k = 0; k < 40; ++k) {
    const double m = 0.5 * (lo + hi);
    (fits(m) ? lo : hi) = m;
  }
  return lo;
}

inline double chain_length(const SegmentLength& len, const std::vector<Vec>& v) {
  double s = 0.0;
  for (std::size_t i = 0; i + 1 < v.size(); ++i) s += len(v[i], v[i + 1]);
  return s;
}

inline CausalCurve canonical_chain(const std::vector<Vec>& v, const MetricField& g) {
  std::vector<Vec> w;
  for (const auto& x : v)
    if (w.empty() || (x - w.back()).norm() > 0.0) w.push_back(x);
  if (w.size() < 2) throw InvalidArgument("endpoints coincide");
  return canonicalize(CausalCurve::polyline(std::move(w), Orientation::Future, g.chart().background()),
                      g.chart().background());
}

/// Orthonormal move directions adapted to the chain: the local tangent
/// first, then the axes with the tangent projected out. Axis moves alone
/// zigzag along the ridge of maximizers.
inline std::vector<Vec> move_basis(const Vec& tangent) {
  const int n = static_cast<int>(tangent.size());
  std::vector<Vec> b;
  if (tangent.norm() > 0.0) b.push_back(tangent.normalized());
  for (int a = 0; a < n && static_cast<int>(b.size()) < n; ++a) {
    Vec e = unit_vec(n, a);
    for (const auto& f : b) e -= e.dot(f) * f;
    if (e.norm() > 1e-3) b.push_back(e.normalized());
  }
  return b;
}

/// Gauss-Seidel pattern search over interior vertices: moves along the
/// local tangent and its complement, each direction with its own step that
/// grows on success and halves on failure, clipped back into the cone by
/// bisection. Returns the sweep count.
inline int ascend(std::vector<Vec>& v, const SegmentTest& ok, const SegmentLength& len, double min_step,
                  int max_sweeps, const std::function<void()>& on_sweep) {
  const std::size_t n = static_cast<std::size_t>(v.front().size());
  std::vector<double> step(v.size() * n, 0.0);
  for (std::size_t i = 1; i + 1 < v.size(); ++i)
    for (std::size_t a = 0; a < n; ++a) step[i * n + a] = 0.1 * std::max((v[i + 1] - v[i - 1]).norm(), min_step);
  int sweeps = 0, flat = 0;
  double total = chain_length(len, v);
  for (; sweeps < max_sweeps; ++sweeps) {
    bool moved = false, active = false;
    for (std::size_t i = 1; i + 1 < v.size(); ++i) {
      const auto basis = move_basis(v[i + 1] - v[i - 1]);
      double here = len(v[i - 1], v[i]) + len(v[i], v[i + 1]);
      for (std::size_t a = 0; a < basis.size(); ++a) {
        double& st = step[i * n + a];
        if (st < min_step) continue;
        active = true;
        bool improved = false;
        for (double sgn : {1.0, -1.0}) {
          const Vec dv = sgn * st * basis[a];
          const double f = feasible_fraction(ok, v, i, dv);
          if (f == 0.0) continue;
          const Vec w = v[i] + f * dv;
          const double there = len(v[i - 1], w) + len(w, v[i + 1]);
          if (there > here * (1.0 + 1e-14) + 1e-300) {
            v[i] = w;
            here = there;
            improved = true;
            break;
          }
        }
        st *= improved ? 1.5 : 0.5;
        moved = moved || improved;
      }
    }
    if (on_sweep && moved) on_sweep();
    if (!active) break;
    const double now = chain_length(len, v);
    // Only sweeps that moved count as stagnant; idle ones are still shrinking steps.
    if (moved) flat = now - total <= 1e-9 * std::abs(total) ? flat + 1 : 0;
    total = now;
    if (flat >= 3) break;
  }
  return sweeps;
}

/// Moves each interior vertex by a random offset of up to `frac` of its
/// neighbor spacing, clipped into the cone.
inline void jitter_chain(std::vector<Vec>& v, const SegmentTest& ok, double frac, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  const int n = static_cast<int>(v.front().size());
  for (std::size_t i = 1; i + 1 < v.size(); ++i) {
    Vec dv(n);
    for (int a = 0; a < n; ++a) dv[a] = u(rng);
    dv *= frac * 0.5 * (v[i + 1] - v[i - 1]).norm();
    v[i] += feasible_fraction(ok, v, i, dv) * dv;
  }
}

}  // namespace detail

/// Supremum of the Lorentzian length over causal polylines from p to q by
/// multistart coordinate ascent with nested refinement. The chord starts
/// the search when it is causal, otherwise a certified lattice path.
inline TimeSeparation time_separation(const Vec& p, const Vec& q, const MetricField& g, int segments, int restarts,
                                      std::uint64_t seed, const SolverOptions& opt = {}) {
  if (segments < 2) throw InvalidArgument("at least two segments required");
  if (restarts < 1) throw InvalidArgument("at least one restart required");
  const ChartDomain& chart = g.chart();
  if (!chart.in_domain(p)) throw DomainError("start point outside the domain", p);
  if (!chart.in_domain(q)) throw DomainError("end point outside the domain", q);
  const Vec ql = p + chart.displacement(p, q);
  if ((ql - p).norm() == 0.0) throw InvalidArgument("endpoints coincide");

  // Moves must stay inside the closed cone exactly; the start path only
  // within the null tolerance, so null chords qualify.
  const detail::SegmentTest ok(g, opt.checks_per_segment, 0.0);
  const detail::SegmentTest start_ok(g, opt.checks_per_segment);
  const detail::SegmentLength len(g);

  TimeSeparation out;
  std::vector<Vec> init;
  if (start_ok(p, ql)) {
    init = {p, ql};
    out.start = "chord";
  } else {
    const CausalGrid cg(g, opt.grid);
    if (!future_reach(p, cg, ReachMode::Over).contains_point(q))
      throw NotCausallyRelated("(" + fmt_vec(q) + ") is outside the over-approximated future of (" + fmt_vec(p) + ")");
    detail::Certifier cert(cg, p);
    auto path = cert(q);
    if (!path) throw NotCausallyRelated("no causal polyline from (" + fmt_vec(p) + ") to (" + fmt_vec(q) + ") found");
    init = path->vertices();
    out.start = "lattice";
    for (std::size_t i = 0; i + 1 < init.size(); ++i)
      if (!start_ok(init[i], init[i + 1])) throw NotCausallyRelated("certified path fails the solver's cone test");
  }

  // Coarse levels first: the solver halves `segments` down to at most 4.
  int coarse = segments;
  while (coarse % 2 == 0 && coarse > 4) coarse /= 2;
  if (static_cast<int>(init.size()) - 1 > coarse) coarse = static_cast<int>(init.size()) - 1;
  const double min_step = opt.step_tol * std::max(1.0, chart.diameter());

  bool have = false;
  for (int r = 0; r < restarts; ++r) {
    const std::uint64_t s = seed + static_cast<std::uint64_t>(r);
    std::mt19937_64 rng(s);
    std::vector<Vec> v = detail::split_to(init, static_cast<std::size_t>(coarse));
    if (r > 0) detail::jitter_chain(v, ok, opt.jitter, rng);

    std::vector<SolverLevel> levels;
    std::vector<CausalCurve> trace;
    auto snap = [&] {
      if (opt.record_trace) trace.push_back(detail::canonical_chain(v, g));
    };
    bool converged = false;
    double prev = -1.0;
    for (int n = coarse;; n *= 2) {
      if (n != coarse) v = detail::midpoints_doubled(v);
      SolverLevel lv;
      lv.segments = n;
      lv.sweeps = detail::ascend(v, ok, len, min_step, opt.max_sweeps, snap);
      lv.tau = detail::chain_length(len, v);
      levels.push_back(lv);
      if (n >= segments && prev >= 0.0 && lv.tau - prev <= opt.gain_tol * std::max(std::abs(prev), 1e-300)) {
        converged = true;
        break;
      }
      if (n >= segments) prev = lv.tau;
      if (2 * n > std::max(opt.max_segments, segments)) break;
    }
    const double tau = lorentz_length(detail::canonical_chain(v, g), g);
    if (!have || tau > out.tau) {
      have = true;
      out.tau = tau;
      out.curve = detail::canonical_chain(v, g);
      out.levels = std::move(levels);
      out.trace = std::move(trace);
      out.winning_seed = s;
      out.converged = converged;
    }
  }
  // Off a null chord the only moves left are rounding: q = -1e-17 already
  // gives a length of 3e-9.
  if (out.tau <= 1e-7 * out.curve.h_length()) out.tau = 0.0;
  if (out.trace.empty() || !(out.trace.back() == out.curve)) out.trace.push_back(out.curve);
  return out;
}

// ---------------------------------------------------------------------------
// Maximality certificates.

struct MaximalityCertificate {
  CausalCurve curve;
  double radius = 0.0;
  int perturbations = 0;  ///< causal rivals inside the ball actually compared
  double length = 0.0;
  double best_rival_length = -kInf;
  double margin = kInf;  ///< length - best_rival_length
  std::optional<CausalCurve> best_rival;
  bool degenerate = false;  ///< no causal rival found

  bool certified(double tol) const { return !degenerate && margin >= -tol; }
};

/// Compares the curve with causal rivals in its rho-ball: jittered
/// vertices, single-vertex moves, cut corners and shortcuts, endpoints
/// pinned, each rival checked with is_causal before it counts. Extra
/// rivals (for instance from an independent oracle) join the pool when
/// they qualify.
inline MaximalityCertificate maximality_certificate(const CausalCurve& curve, const MetricField& g, double radius,
                                                    int perturbations, std::uint64_t seed,
                                                    const std::vector<CausalCurve>& extra = {}) {
  if (!(radius > 0.0)) throw InvalidArgument("radius must be positive");
  if (perturbations < 0) throw InvalidArgument("perturbation count must be non-negative");
  if (is_causal(curve, g, kNullTolerance, 4).kind != CausalKind::CausalFuture)
    throw InvalidArgument("curve is not future causal");
  const RiemannianBackground& h = g.chart().background();
  const CausalCurve base = canonicalize(curve, h);
  const detail::SegmentTest ok(g, 5, 0.0);

  MaximalityCertificate cert;
  cert.curve = base;
  cert.radius = radius;
  cert.length = lorentz_length(base, g);

  auto consider = [&](const std::vector<Vec>& v) {
    if (v.front() != base.front() || v.back() != base.back()) return;
    std::optional<CausalCurve> c;
    try {
      c = detail::canonical_chain(v, g);
    } catch (const InvalidArgument&) {
      return;
    }
    try {
      if (is_causal(*c, g, kNullTolerance, 4).kind != CausalKind::CausalFuture) return;
    } catch (const DomainError&) {
      return;
    }
    const double rho = sup_distance(*c, base);
    if (rho > radius || rho <= 1e-12) return;
    ++cert.perturbations;
    const double l = lorentz_length(*c, g);
    if (l > cert.best_rival_length) {
      cert.best_rival_length = l;
      cert.best_rival = c;
    }
  };

  const std::vector<Vec> v0 = detail::split_to(base.vertices(), std::max<std::size_t>(16, base.segments()));
  const std::size_t m = v0.size();
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const int n = g.dim();
  auto ball = [&](double r) {
    Vec d(n);
    do {
      for (int a = 0; a < n; ++a) d[a] = 2.0 * u(rng) - 1.0;
    } while (d.norm() > 1.0 || d.norm() == 0.0);
    return r * d;
  };

  for (int k = 0; k < perturbations; ++k) {
    std::vector<Vec> v = v0;
    const double r = radius * u(rng);
    switch (k % 4) {
      case 0:  // every interior vertex
        for (std::size_t i = 1; i + 1 < m; ++i) {
          const Vec dv = ball(r);
          v[i] += detail::feasible_fraction(ok, v, i, dv) * dv;
        }
        break;
      case 1: {  // one vertex
        const std::size_t i = 1 + static_cast<std::size_t>(u(rng) * (m - 2));
        const Vec dv = ball(r);
        v[i] += detail::feasible_fraction(ok, v, i, dv) * dv;
        break;
      }
      case 2: {  // cut a corner towards the neighbors' midpoint
        const std::size_t i = 1 + static_cast<std::size_t>(u(rng) * (m - 2));
        Vec dv = 0.5 * (v[i - 1] + v[i + 1]) - v[i];
        if (dv.norm() > r) dv *= r / dv.norm();
        v[i] += dv;
        break;
      }
      default: {  // shortcut between two vertices
        std::size_t i = static_cast<std::size_t>(u(rng) * (m - 1));
        std::size_t j = static_cast<std::size_t>(u(rng) * (m - 1));
        if (i > j) std::swap(i, j);
        j = std::min(j + 1, m - 1);
        for (std::size_t l = i + 1; l < j; ++l) v[l] = v[i] + (double(l - i) / double(j - i)) * (v[j] - v[i]);
        break;
      }
    }
    consider(v);
  }
  for (const auto& c : extra) {
    if (c.front() != base.front() || c.back() != base.back()) continue;
    consider(c.vertices());
  }

  cert.degenerate = cert.perturbations == 0;
  if (!cert.degenerate) cert.margin = cert.length - cert.best_rival_length;
  return cert;
}

// ---------------------------------------------------------------------------
// Limits of widened maximizers.

struct LimitMaximizerRow {
  double delta = 0.0;
  double length_alpha = 0.0;          ///< L_g(alpha)
  double widened_alpha = 0.0;         ///< L_{widen(g,delta)}(alpha)
  double bound = 0.0;                 ///< widened_alpha + sqrt(delta) Lip(alpha)
  double widened_maximizer = 0.0;     ///< L_{widen(g,delta)}(gamma_delta)
  bool first_holds = false;           ///< length_alpha <= bound
  bool second_holds = false;          ///< widened_alpha <= widened_maximizer
  CausalCurve maximizer;
};

struct LimitMaximizerReport {
  std::vector<LimitMaximizerRow> rows;
  std::optional<LimitResult> limit;  ///< limit of the widened maximizers
  double limit_length = 0.0;         ///< L_g of that limit
  double direct_tau = 0.0;           ///< time_separation under g
  CausalCurve direct;
  std::string note;

  bool holds() const {
    return std::all_of(rows.begin(), rows.end(), [](const auto& r) { return r.first_holds && r.second_holds; });
  }
};

struct LimitMaximizerOptions {
  int segments = 32;
  int restarts = 2;
  std::uint64_t seed = 1;
  double tol = 1e-9;  ///< absolute slack on both inequalities, plus quadrature error
  SolverOptions solver;
};

inline LimitMaximizerReport limit_maximizer_check(const MetricField& g, const std::vector<double>& delta_ladder,
                                                  const Vec& p, const Vec& q, const CausalCurve& alpha,
                                                  const LimitMaximizerOptions& opt = {}) {
  if (delta_ladder.empty()) throw InvalidArgument("empty delta ladder");
  for (std::size_t i = 0; i < delta_ladder.size(); ++i) {
    if (!(delta_ladder[i] > 0.0)) throw InvalidArgument("ladder entries must be positive");
    if (i && !(delta_ladder[i] < delta_ladder[i - 1])) throw InvalidArgument("ladder must decrease");
  }
  const ChartDomain& chart = g.chart();
  if ((alpha.front() - p).norm() > 1e-12 || (chart.displacement(p, q) - (alpha.back() - alpha.front())).norm() > 1e-9)
    throw InvalidArgument("alpha does not run from p to q");
  if (is_causal(alpha, g, kNullTolerance, 4).kind != CausalKind::CausalFuture)
    throw InvalidArgument("alpha is not future causal");

  LimitMaximizerReport rep;
  const double l_alpha = lorentz_length(alpha, g);
  const double lip = alpha.lipschitz();
  std::vector<CausalCurve> family;
  for (double d : delta_ladder) {
    const MetricField gw = widen(g, d);
    LimitMaximizerRow row;
    row.delta = d;
    row.length_alpha = l_alpha;
    row.widened_alpha = lorentz_length(alpha, gw);
    row.bound = row.widened_alpha + std::sqrt(d) * lip;
    const auto ts = time_separation(p, q, gw, opt.segments, opt.restarts, opt.seed, opt.solver);
    row.maximizer = ts.curve;
    row.widened_maximizer = ts.tau;
    const double slack = opt.tol + quadrature_error(alpha, gw) + quadrature_error(ts.curve, gw);
    row.first_holds = row.length_alpha <= row.bound + slack;
    row.second_holds = row.widened_alpha <= row.widened_maximizer + slack;
    family.push_back(ts.curve);
    rep.rows.push_back(std::move(row));
  }

  const auto direct = time_separation(p, q, g, opt.segments, opt.restarts, opt.seed, opt.solver);
  rep.direct_tau = direct.tau;
  rep.direct = direct.curve;
  double lip_bound = 0.0;
  for (const auto& c : family) lip_bound = std::max(lip_bound, c.lipschitz());
  try {
    LimitOptions lo;
    lo.metric = &g;
    rep.limit = extract_limit_curve(family, LimitMode::FixedInterval, lip_bound, 1e-9, lo);
    rep.limit_length = lorentz_length(rep.limit->limit, g);
  } catch (const Error& e) {
    rep.note = std::string("limit extraction failed: ") + e.what();
  }
  return rep;
}

}  // namespace lorentz
