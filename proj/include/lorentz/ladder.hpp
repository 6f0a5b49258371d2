// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "lorentz/limit.hpp"
#include "lorentz/reach.hpp"

#include <functional>
#include <map>
#include <random>

namespace lorentz {

/// Evidence attached to a failing rung. Curves re-verify with is_causal,
/// points and cells with the reach routines.
struct Witness {
  std::string kind;
  std::vector<CausalCurve> curves;
  std::vector<Vec> points;
  std::vector<Vec> cells;
  std::string note;
};

struct RungResult {
  std::string rung;
  Verdict verdict = Verdict::Pass;
  std::optional<Witness> witness;
  std::map<std::string, std::string> params;
  std::string detail;
};

struct LadderReport {
  std::vector<RungResult> rungs;

  const RungResult* find(const std::string& name) const {
    for (const auto& r : rungs)
      if (r.rung == name) return &r;
    return nullptr;
  }

  /// Fail if any rung fails, inconclusive if any is, else pass.
  Verdict verdict() const {
    Verdict v = Verdict::Pass;
    for (const auto& r : rungs) {
      if (r.verdict == Verdict::Fail) return Verdict::Fail;
      if (r.verdict == Verdict::Inconclusive) v = Verdict::Inconclusive;
    }
    return v;
  }

  void append(const LadderReport& o) { rungs.insert(rungs.end(), o.rungs.begin(), o.rungs.end()); }
};

inline std::string describe_grid(const GridSpec& s) {
  std::string c;
  for (std::size_t i = 0; i < s.cells.size(); ++i) c += (i ? "x" : "") + std::to_string(s.cells[i]);
  return c + " stencil=" + std::to_string(s.stencil);
}

namespace detail {

inline GridGeometry grid_geometry(const ChartDomain& chart, const GridSpec& spec) {
  GridGeometry geo;
  geo.bounds = spec.bounds ? *spec.bounds : chart.bounds();
  const int n = chart.dim();
  if (spec.cells.size() == 1) geo.cells.assign(n, spec.cells[0]);
  else geo.cells = spec.cells;
  geo.periodic = chart.periodic();
  return geo;
}

/// Offsets by whole periods that bring obstacle images next to a wrapped
/// segment (zero plus one period either way on periodic axes).
inline std::vector<Vec> periodic_shifts(const ChartDomain& chart) {
  std::vector<Vec> shifts{Vec::Zero(chart.dim())};
  for (int i = 0; i < chart.dim(); ++i) {
    if (!chart.periodic(i)) continue;
    const std::size_t m = shifts.size();
    for (std::size_t k = 0; k < m; ++k)
      for (double s : {-1.0, 1.0}) {
        Vec t = shifts[k];
        t[i] += s * chart.period(i);
        shifts.push_back(t);
      }
  }
  return shifts;
}

inline bool segment_clear(const ChartDomain& chart, const Vec& a, const Vec& b) {
  return !chart.segment_blocked(a, b, ObstacleRule::Strict, kObstacleClearance);
}

/// Future causal straight segment that keeps clear of the obstacles.
inline bool causal_segment(const MetricField& g, const Vec& a, const Vec& b) {
  const ChartDomain& chart = g.chart();
  if (!chart.in_bounds(a) || !chart.in_bounds(b)) return false;
  if ((b - a).norm() == 0.0) return true;
  if (!segment_clear(chart, a, b)) return false;
  return is_causal(CausalCurve::polyline({a, b}), g, kNullTolerance, 8).kind == CausalKind::CausalFuture;
}

inline std::optional<CausalCurve> causal_polyline(const MetricField& g, const std::vector<Vec>& verts) {
  std::vector<Vec> v;
  for (const auto& x : verts)
    if (v.empty() || (x - v.back()).norm() > 0.0) v.push_back(x);
  if (v.size() < 2) return std::nullopt;
  for (std::size_t i = 0; i + 1 < v.size(); ++i)
    if (!causal_segment(g, v[i], v[i + 1])) return std::nullopt;
  return CausalCurve::polyline(std::move(v), Orientation::Future, g.chart().background());
}

/// Positive s with g(T + s w) null; infinite when T + s w never leaves the cone.
inline double null_scale(const Form& g, const Vec& t, const Vec& w) {
  const double a = quadratic(g, t), b = bilinear(g, t, w), c = quadratic(g, w);
  if (!(c > 0.0)) return kInf;
  return (-b + std::sqrt(std::max(b * b - a * c, 0.0))) / c;
}

inline Vec random_spatial(int n, std::mt19937_64& rng) {
  Vec w = Vec::Zero(n);
  if (n == 2) {
    w[1] = (rng() & 1U) ? 1.0 : -1.0;
    return w;
  }
  std::normal_distribution<double> nd;
  while (w.norm() < 1e-6)
    for (int a = 1; a < n; ++a) w[a] = nd(rng);
  return w.normalized();
}

/// h-unit future causal direction at x, tilted from T towards a random
/// spatial direction by a uniform fraction in [0, max_frac] of the way to
/// the cone.
inline Vec random_causal_direction(const MetricField& g, const Vec& x, std::mt19937_64& rng, double max_frac) {
  const Form gx = g(x);
  const Vec t = g.time_orientation(x);
  const Vec w = random_spatial(g.dim(), rng);
  double s = null_scale(gx, t, w);
  if (s == kInf) s = 4.0 * t.norm();
  const double f = std::uniform_real_distribution<double>(0.0, max_frac)(rng);
  const Vec v = t + f * s * w;
  return v / g.chart().background().norm(x, v);
}

inline Vec unit_time(const MetricField& g, const Vec& x) {
  const Vec t = g.time_orientation(x);
  return t / g.chart().background().norm(x, t);
}

inline Vec random_domain_point(const ChartDomain& chart, const Box& box, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int tries = 0; tries < 10000; ++tries) {
    Vec x(chart.dim());
    for (int a = 0; a < chart.dim(); ++a) x[a] = box.lo[a] + u(rng) * (box.hi[a] - box.lo[a]);
    if (chart.in_domain(x)) return x;
  }
  throw Error("could not sample a point of the domain");
}

/// Breadth-first tree of under-mode lattice paths from p.
struct LatticeTree {
  std::vector<long> parent;  ///< -1 unreached, -2 seed
  std::vector<int> via;
};

inline LatticeTree lattice_tree(const CausalGrid& cg, const Vec& p) {
  LatticeTree t;
  t.parent.assign(cg.size(), -1);
  t.via.assign(cg.size(), -1);
  std::vector<std::size_t> frontier;
  for (std::size_t k : seed_nodes(cg, point_region(p), ReachMode::Under, TimeDirection::Future))
    if (t.parent[k] == -1) {
      t.parent[k] = -2;
      frontier.push_back(k);
    }
  while (!frontier.empty()) {
    std::vector<std::size_t> next;
    for (std::size_t u : frontier)
      for (std::size_t j = 0; j < cg.offsets().size(); ++j) {
        if (!cg.accepts(u, j, ReachMode::Under)) continue;
        const auto w = cg.target(u, j);
        if (!w || cg.blocked(*w) || t.parent[*w] != -1) continue;
        t.parent[*w] = static_cast<long>(u);
        t.via[*w] = static_cast<int>(j);
        next.push_back(*w);
      }
    frontier = std::move(next);
  }
  return t;
}

/// Certifies p <= x with an explicit causal polyline: the straight segment,
/// a detour past one or two offset obstacle corners, or an under-mode
/// lattice path finished by a straight hop.
class Certifier {
 public:
  Certifier(const CausalGrid& cg, Vec p) : cg_(cg), p_(std::move(p)) {}

  std::optional<CausalCurve> operator()(const Vec& x) {
    const MetricField& g = cg_.metric();
    const ChartDomain& chart = g.chart();
    const Vec xl = p_ + chart.displacement(p_, x);
    if (auto c = causal_polyline(g, {p_, xl})) return c;
    for (const auto& o : chart.obstacles())
      for (double eta : {1e-2, 1e-3, 1e-4, 1e-5, 1e-6, 1e-7}) {
        const auto corners = offset_corners(o, eta);
        for (const auto& c : corners)
          if (auto r = causal_polyline(g, {p_, lift(c), xl})) return r;
        // Past a whole side: corners that differ in time only.
        for (const auto& a : corners)
          for (const auto& b : corners) {
            if (!(b[0] > a[0])) continue;
            if ((a.tail(a.size() - 1) - b.tail(b.size() - 1)).norm() > 0.0) continue;
            if (auto r = causal_polyline(g, {p_, lift(a), lift(b), xl})) return r;
          }
      }
    return lattice(x);
  }

 private:
  Vec lift(const Vec& c) const { return p_ + cg_.metric().chart().displacement(p_, c); }

  static std::vector<Vec> offset_corners(const Box& o, double eta) {
    const int n = o.dim();
    std::vector<Vec> out;
    for (int mask = 0; mask < (1 << n); ++mask) {
      Vec c(n);
      for (int a = 0; a < n; ++a) {
        const bool hi = (mask >> a) & 1;
        const double w = o.hi[a] - o.lo[a];
        c[a] = hi ? o.hi[a] + (w > 0.0 ? eta : 0.0) : o.lo[a] - (w > 0.0 ? eta : 0.0);
        if (w == 0.0 && hi) c[a] = o.hi[a];
      }
      if (std::none_of(out.begin(), out.end(), [&](const Vec& v) { return v == c; })) out.push_back(c);
    }
    return out;
  }

  std::optional<CausalCurve> lattice(const Vec& x) {
    if (!tree_) tree_ = lattice_tree(cg_, p_);
    const MetricField& g = cg_.metric();
    const ChartDomain& chart = g.chart();
    const auto& geo = cg_.geometry();
    for (std::size_t k : nodes_near(cg_, point_region(x), cg_.spec().stencil)) {
      if (tree_->parent[k] == -1) continue;
      std::vector<std::size_t> chain{k};
      while (tree_->parent[chain.back()] != -2) chain.push_back(static_cast<std::size_t>(tree_->parent[chain.back()]));
      std::vector<Vec> v{p_};
      v.push_back(p_ + chart.displacement(p_, geo.center(chain.back())));
      for (auto it = chain.rbegin() + 1; it != chain.rend(); ++it) v.push_back(v.back() + cg_.offsets()[tree_->via[*it]].disp);
      v.push_back(v.back() + chart.displacement(v.back(), x));
      if (auto c = causal_polyline(g, v)) return c;
    }
    return std::nullopt;
  }

  const CausalGrid& cg_;
  Vec p_;
  std::optional<LatticeTree> tree_;
};

/// Pointwise sampled cone order at explicit points, as cone_precedes.
inline ConeOrderResult cone_order_at(const MetricField& g1, const MetricField& g2, const std::vector<Vec>& points,
                                     int directions = kMinConeDirections, double tol = kNullTolerance) {
  ConeOrderResult res;
  bool strict = true;
  for (const auto& x : points) {
    const Form b = g2(x);
    for (const auto& s : sample_cone(g1, x, directions, tol).samples) {
      if (s.cls == ConeClass::Spacelike) continue;
      const double q2 = quadratic(b, s.direction);
      if (q2 > tol) return ConeOrderResult{ConeRelation::Fails, x, s.direction, -q2};
      if (-q2 < res.margin) res = ConeOrderResult{res.relation, x, s.direction, -q2};
      if (!(q2 < -tol)) strict = false;
    }
  }
  res.relation = strict ? ConeRelation::StrictlyPrecedes : ConeRelation::WeaklyPrecedes;
  return res;
}

inline Box shrunk_bounds(const ChartDomain& chart, double f) {
  Box b = chart.bounds();
  const Vec c = b.center();
  for (int a = 0; a < chart.dim(); ++a) {
    if (chart.periodic(a)) continue;
    b.lo[a] = c[a] - f * (c[a] - b.lo[a]);
    b.hi[a] = c[a] + f * (b.hi[a] - c[a]);
  }
  return b;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Causality.

inline RungResult check_causality(const CausalGrid& cg) {
  RungResult r;
  r.rung = "causality";
  r.params["grid"] = describe_grid(cg.spec());
  std::vector<std::uint8_t> allowed(cg.size());
  for (std::size_t k = 0; k < cg.size(); ++k) allowed[k] = !cg.blocked(k);
  const auto cyc = detail::find_cycle(cg, ReachMode::Under, allowed);
  if (cyc.empty()) {
    r.detail = "under-mode step graph is acyclic";
    return r;
  }
  const CausalCurve loop = detail::loop_curve(cg, cyc);
  const auto chk = is_causal(loop, cg.metric(), kNullTolerance, 4);
  r.witness = Witness{"closed-causal-curve", {loop}, {loop.front()}, {}, std::to_string(cyc.size()) + " steps"};
  if (chk.kind == CausalKind::CausalFuture) {
    r.verdict = Verdict::Fail;
    r.detail = "closed future causal polyline through (" + fmt_vec(loop.front()) + ")";
  } else {
    r.verdict = Verdict::Inconclusive;
    r.detail = "lattice cycle does not re-verify as causal";
  }
  return r;
}

inline RungResult check_causality(const MetricField& g, const GridSpec& spec) { return check_causality(CausalGrid(g, spec)); }

// ---------------------------------------------------------------------------
// Causal simplicity.

/// One sampled convergent pair of sequences: p_n -> p, q_n -> q.
struct SimplicityTrial {
  Vec p, q;
  std::vector<std::pair<Vec, Vec>> tail;
  bool premise = false;    ///< p_n <= q_n certified along the whole tail
  bool related = false;    ///< p <= q certified
  bool violation = false;  ///< premise holds, q is a confirmed closure defect of J+(p)
  bool resolved = true;
};

/// Sequences approach (p, q) along -T and +T. Obstacle-aligned trials put p
/// and q on a null line through an obstacle corner. A trial violates closedness
/// when every tail pair is certified causally related by an explicit
/// polyline, p <= q is not, and a closure defect of J+(p), confirmed at
/// twice the resolution, lies within one cell of q.
inline RungResult check_causal_simplicity(const MetricField& g, const GridSpec& spec, int trials,
                                          std::uint64_t seed = 1, std::vector<SimplicityTrial>* log = nullptr) {
  if (trials < 1) throw InvalidArgument("trials must be positive");
  const ChartDomain& chart = g.chart();
  const CausalGrid cg(g, spec);
  std::optional<CausalGrid> fine;
  const auto& geo = cg.geometry();
  double cell = 0.0;
  for (int a = 0; a < geo.dim(); ++a) cell = std::max(cell, geo.cell(a));
  const double r0 = 4.0 * cell;
  const int tail_len = 12;
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const Box& B = chart.bounds();
  double span = kInf;
  for (int a = 0; a < chart.dim(); ++a) span = std::min(span, B.hi[a] - B.lo[a]);

  RungResult r;
  r.rung = "causal-simplicity";
  r.params["grid"] = describe_grid(cg.spec());
  r.params["trials"] = std::to_string(trials);
  r.params["tail"] = std::to_string(tail_len);
  r.params["r0"] = fmt_double(r0);
  int violations = 0, unresolved = 0, aligned = 0;

  auto make_tail = [&](const Vec& p, const Vec& q) {
    std::vector<std::pair<Vec, Vec>> t;
    for (int n = 1; n <= tail_len; ++n) {
      const double e = std::ldexp(r0, -n);
      const Vec pn = p - e * detail::unit_time(g, p), qn = q + e * detail::unit_time(g, q);
      if (!chart.in_domain(pn) || !chart.in_domain(qn)) return std::optional<decltype(t)>{};
      t.emplace_back(pn, qn);
    }
    return std::optional<decltype(t)>{t};
  };

  for (int i = 0; i < trials; ++i) {
    SimplicityTrial tr;
    std::optional<std::vector<std::pair<Vec, Vec>>> tail;
    const int kind = chart.obstacles().empty() ? 1 + i % 2 : i % 3;
    for (int attempt = 0; attempt < 200 && !tail; ++attempt) {
      if (kind == 0 && attempt < 100) {
        const auto& o = chart.obstacles()[rng() % chart.obstacles().size()];
        Vec c(chart.dim());
        for (int a = 0; a < chart.dim(); ++a) c[a] = (rng() & 1U) ? o.hi[a] : o.lo[a];
        const Form gc = g(c);
        const Vec t = g.time_orientation(c), w = detail::random_spatial(chart.dim(), rng);
        const double s = detail::null_scale(gc, t, w);
        if (s == kInf) continue;
        Vec k = t + s * w;
        k /= chart.background().norm(c, k);
        tr.p = c - (0.05 + 0.3 * u(rng)) * span * k;
        tr.q = c + (0.05 + 0.3 * u(rng)) * span * k;
      } else {
        tr.p = detail::random_domain_point(chart, B, rng);
        if (kind == 1) tr.q = tr.p + (0.05 + 0.3 * u(rng)) * span * detail::random_causal_direction(g, tr.p, rng, 1.0);
        else tr.q = detail::random_domain_point(chart, B, rng);
      }
      if (!chart.in_domain(tr.p) || !chart.in_domain(tr.q)) continue;
      tail = make_tail(tr.p, tr.q);
    }
    if (!tail) throw Error("could not sample a convergent pair inside the domain");
    tr.tail = *tail;
    if (kind == 0) ++aligned;

    tr.premise = true;
    std::optional<CausalCurve> last_cert;
    for (const auto& [pn, qn] : tr.tail) {
      detail::Certifier cert(cg, pn);
      last_cert = cert(qn);
      if (!last_cert) {
        tr.premise = false;
        break;
      }
    }
    if (tr.premise) {
      detail::Certifier cert(cg, tr.p);
      tr.related = cert(tr.q).has_value();
      if (!tr.related) {
        std::vector<Vec> defects;
        const auto coarse = detail::graze_only_cells(cg, tr.p, std::nullopt);
        if (!coarse.empty()) {
          if (!fine) fine.emplace(g, detail::refined(cg.spec()));
          defects = detail::confirm_defects(cg, coarse, *fine, detail::graze_only_cells(*fine, tr.p, std::nullopt));
        }
        for (const auto& d : defects) {
          const Vec dd = chart.displacement(tr.q, d);
          bool near = true;
          for (int a = 0; a < geo.dim(); ++a) near = near && std::abs(dd[a]) <= 1.5 * geo.cell(a);
          if (near) tr.violation = true;
        }
        tr.resolved = tr.violation;
      }
    }
    if (tr.violation) {
      ++violations;
      if (!r.witness) {
        Witness w;
        w.kind = "non-closed-relation";
        w.points = {tr.p, tr.q};
        for (const auto& [pn, qn] : tr.tail) {
          w.points.push_back(pn);
          w.points.push_back(qn);
        }
        w.curves.push_back(*last_cert);
        w.note = "p_n <= q_n certified for the tail; q is a closure defect of J+(p)";
        r.witness = w;
      }
    }
    if (!tr.resolved) ++unresolved;
    if (log) log->push_back(std::move(tr));
  }
  r.params["aligned"] = std::to_string(aligned);
  r.params["violations"] = std::to_string(violations);
  r.params["unresolved"] = std::to_string(unresolved);
  if (violations) {
    r.verdict = Verdict::Fail;
    r.detail = std::to_string(violations) + " of " + std::to_string(trials) + " trials violate closedness of J+";
  } else if (unresolved) {
    r.verdict = Verdict::Inconclusive;
    r.detail = std::to_string(unresolved) + " trials with related sequences and an unresolved limit pair";
  } else {
    r.detail = "every certified convergent pair has a certified limit";
  }
  return r;
}

// ---------------------------------------------------------------------------
// Global hyperbolicity.

/// Imprisonment on nested boxes (half, three quarters and all of the chart
/// along non-periodic axes), compactness of sampled diamonds, and limit
/// extraction on jittered curve families between a sampled related pair.
inline LadderReport check_global_hyperbolicity(const MetricField& g, const GridSpec& spec, int pair_samples,
                                               std::uint64_t seed = 1) {
  if (pair_samples < 1) throw InvalidArgument("pair_samples must be positive");
  const ChartDomain& chart = g.chart();
  const CausalGrid cg(g, spec);
  const std::string grid = describe_grid(cg.spec());
  LadderReport rep;

  RungResult imp;
  imp.rung = "imprisonment";
  imp.params["grid"] = grid;
  for (double f : {0.5, 0.75, 1.0}) {
    const Box k = detail::shrunk_bounds(chart, f);
    const auto res = imprisonment_bound(k, cg);
    imp.params["C(" + fmt_double(f) + ")"] = res.kind == ImprisonmentKind::Bounded ? fmt_double(res.bound) : to_string(res.kind);
    if (res.kind == ImprisonmentKind::EvidenceUnbounded) {
      imp.verdict = Verdict::Fail;
      imp.witness = Witness{"unbounded-length-cycle", {*res.witness}, {}, {}, "closed causal loop inside K"};
      imp.detail = "causal loop confined to the box [" + fmt_vec(k.lo) + ";" + fmt_vec(k.hi) + "]";
      break;
    }
    if (res.kind == ImprisonmentKind::Inconclusive) {
      imp.verdict = Verdict::Inconclusive;
      imp.detail = "over-mode cycle without an under-mode one";
    }
  }
  if (imp.verdict == Verdict::Pass) imp.detail = "h-lengths bounded on every box";
  rep.rungs.push_back(imp);

  // Diamond pairs: one straddling each obstacle, then random related pairs.
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<std::pair<Vec, Vec>> pairs;
  for (const auto& o : chart.obstacles()) {
    const Vec c = o.center();
    double reach = 0.0;
    for (int a = 0; a < chart.dim(); ++a) reach += 0.5 * (o.hi[a] - o.lo[a]);
    const double d = 1.6 * reach + 2.0 * cg.geometry().cell(0);
    const Vec t = detail::unit_time(g, c);
    if (chart.in_domain(c - d * t) && chart.in_domain(c + d * t)) pairs.emplace_back(c - d * t, c + d * t);
  }
  double span = kInf;
  for (int a = 0; a < chart.dim(); ++a) span = std::min(span, chart.bounds().hi[a] - chart.bounds().lo[a]);
  const Box middle = detail::shrunk_bounds(chart, 0.6);
  for (int i = 0, tries = 0; i < pair_samples && tries < 100 * pair_samples; ++tries) {
    const Vec p = detail::random_domain_point(chart, middle, rng);
    const Vec q = p + (0.1 + 0.2 * u(rng)) * span * detail::random_causal_direction(g, p, rng, 0.8);
    if (!chart.in_domain(q)) continue;
    pairs.emplace_back(p, q);
    ++i;
  }

  RungResult dia;
  dia.rung = "diamonds";
  dia.params["grid"] = grid;
  dia.params["pairs"] = std::to_string(pairs.size());
  std::optional<CausalGrid> fine;
  if (!chart.obstacles().empty()) fine.emplace(g, detail::refined(cg.spec()));
  int checked = 0;
  std::optional<std::pair<Vec, Vec>> related;
  for (const auto& [p, q] : pairs) {
    const auto d = causal_diamond(p, q, cg, fine ? &*fine : nullptr);
    if (d.verdict == DiamondVerdict::Inconclusive) continue;
    ++checked;
    if (d.verdict == DiamondVerdict::Noncompact) {
      dia.verdict = Verdict::Fail;
      dia.witness = Witness{"closure-defect", {}, {p, q}, d.closure_defect, "limit points of J(p,q) outside it"};
      dia.detail = std::to_string(d.closure_defect.size()) + " confirmed closure defects";
      break;
    }
    if (!related && detail::causal_segment(g, p, q)) related = std::make_pair(p, q);
  }
  dia.params["checked"] = std::to_string(checked);
  if (dia.verdict == Verdict::Pass) {
    if (checked == 0) {
      dia.verdict = Verdict::Inconclusive;
      dia.detail = "every sampled diamond reaches the grid boundary";
    } else {
      dia.detail = "sampled diamonds bounded without closure defects";
    }
  }
  rep.rungs.push_back(dia);

  RungResult lim;
  lim.rung = "limit-extraction";
  if (!related) {
    lim.verdict = Verdict::Inconclusive;
    lim.detail = "no sampled pair joined by a straight causal segment";
  } else {
    const auto [p, q] = *related;
    const Vec m = 0.5 * (p + q), w = detail::random_spatial(chart.dim(), rng);
    const double amp = 0.25 * (q - p).norm();
    std::vector<CausalCurve> fam;
    double lip = 0.0;
    for (int k = 1; k <= 48; ++k) {
      const auto c = detail::causal_polyline(g, {p, m + (amp / k) * w, q});
      if (!c) continue;
      fam.push_back(canonicalize(*c, chart.background()));
      lip = std::max(lip, fam.back().lipschitz());
    }
    lim.params["members"] = std::to_string(fam.size());
    if (fam.size() < 8) {
      lim.verdict = Verdict::Inconclusive;
      lim.detail = "too few causal family members";
    } else {
      try {
        LimitOptions opt;
        opt.metric = &g;
        const auto res = extract_limit_curve(fam, LimitMode::FixedInterval, lip * (1.0 + 1e-9), 1e-6, opt);
        const auto chord = canonicalize(CausalCurve::polyline({p, q}), chart.background());
        lim.params["rho_to_chord"] = fmt_double(sup_distance(res.limit, chord));
        if (res.limit_causal()) {
          lim.detail = "limit extracted and causal on the widening ladder";
        } else {
          lim.verdict = Verdict::Inconclusive;
          lim.detail = "extracted limit is not causal";
        }
      } catch (const Error& e) {
        lim.verdict = Verdict::Inconclusive;
        lim.detail = std::string("extraction failed: ") + e.what();
      }
    }
  }
  rep.rungs.push_back(lim);
  return rep;
}

// ---------------------------------------------------------------------------
// Cauchy surfaces.

struct CauchySurfaceSpec {
  std::function<double(const Vec&)> time_function;
  double level = 0.0;
  std::string description;
};

namespace detail {

enum class TraceEnd { TimeBoundary, SpatialBoundary, Obstacle, Horizon };

/// Random causal polyline from x towards the future (sign +1) or the past,
/// stopped at the chart boundary, just short of an obstacle, or after
/// max_steps.
inline std::pair<std::vector<Vec>, TraceEnd> trace_curve(const MetricField& g, Vec x, int sign, double step,
                                                         int max_steps, std::mt19937_64& rng, double max_frac) {
  const ChartDomain& chart = g.chart();
  std::vector<Vec> v{x};
  const auto shifts = periodic_shifts(chart);
  for (int i = 0; i < max_steps; ++i) {
    const Vec d = sign * step * random_causal_direction(g, x, rng, max_frac);
    double s = 1.0;
    int axis = -1;
    for (int a = 0; a < chart.dim(); ++a) {
      if (chart.periodic(a) || d[a] == 0.0) continue;
      const double lim = d[a] > 0 ? chart.bounds().hi[a] : chart.bounds().lo[a];
      const double f = (lim - x[a]) / d[a];
      if (f < s) {
        s = std::max(f, 0.0);
        axis = a;
      }
    }
    double hit = kInf;
    const Vec x0 = chart.wrap(x);
    for (const auto& o : chart.obstacles())
      for (const auto& sh : shifts)
        if (auto c = o.clip(x0 - sh, x0 - sh + d)) hit = std::min(hit, c->first);
    if (hit <= s) {
      const double back = 1e-9 / d.norm();
      if (hit - back > 0.0) v.push_back(x + (hit - back) * d);
      return {v, TraceEnd::Obstacle};
    }
    x = x + s * d;
    if (s > 0.0) v.push_back(x);
    if (axis >= 0) return {v, axis == 0 ? TraceEnd::TimeBoundary : TraceEnd::SpatialBoundary};
  }
  return {v, TraceEnd::Horizon};
}

inline int count_crossings(const std::vector<Vec>& v, const ChartDomain& chart, const CauchySurfaceSpec& s) {
  int n = 0;
  bool prev = false;
  for (std::size_t i = 0; i < v.size(); ++i) {
    const bool above = s.time_function(chart.wrap(v[i])) > s.level;
    if (i && above != prev) ++n;
    prev = above;
  }
  return n;
}

/// Point of the level set on the axis-0 line through x, by scanning and
/// bisection.
inline std::optional<Vec> level_point(const ChartDomain& chart, const CauchySurfaceSpec& s, Vec x) {
  const double lo = chart.bounds().lo[0], hi = chart.bounds().hi[0];
  auto phi = [&](double t) {
    x[0] = t;
    return s.time_function(chart.wrap(x)) - s.level;
  };
  const int m = 64;
  double a = lo, fa = phi(lo);
  for (int i = 1; i <= m; ++i) {
    const double b = lo + (hi - lo) * i / m, fb = phi(b);
    if ((fa <= 0.0) != (fb <= 0.0)) {
      double l = a, r = b;
      const bool neg = fa <= 0.0;
      for (int it = 0; it < 60; ++it) {
        const double c = 0.5 * (l + r);
        ((phi(c) <= 0.0) == neg ? l : r) = c;
      }
      x[0] = 0.5 * (l + r);
      return x;
    }
    a = b;
    fa = fb;
  }
  return std::nullopt;
}

}  // namespace detail

/// Crossing counts of random inextendible causal polylines (curves ending on
/// a spatial side of the chart without crossing are censored; curves ending
/// at an obstacle are inextendible there), acausality of sampled segments
/// between points of S, and the open future/past partition of grid nodes
/// away from S.
inline RungResult check_cauchy_surface(const CauchySurfaceSpec& s, const MetricField& g, int curve_samples,
                                       const GridSpec& spec, std::uint64_t seed = 1) {
  if (curve_samples < 1) throw InvalidArgument("curve_samples must be positive");
  if (!s.time_function) throw InvalidArgument("missing time function");
  const ChartDomain& chart = g.chart();
  const GridGeometry geo = detail::grid_geometry(chart, spec);
  const std::size_t N = geo.size();
  std::vector<std::uint8_t> above(N), inside(N);
  bool any_above = false, any_below = false;
  for (std::size_t k = 0; k < N; ++k) {
    const Vec x = geo.center(k);
    inside[k] = chart.in_domain(x);
    if (!inside[k]) continue;
    const double f = s.time_function(x) - s.level;
    if (!std::isfinite(f)) throw DomainError("time function is not finite", x);
    above[k] = f > 0.0;
    (above[k] ? any_above : any_below) = true;
  }
  if (!any_above || !any_below) throw DomainError("level set is empty in the domain", chart.bounds().center());

  RungResult r;
  r.rung = "cauchy-surface";
  r.params["surface"] = s.description.empty() ? "level " + fmt_double(s.level) : s.description;
  r.params["curve_samples"] = std::to_string(curve_samples);
  r.params["grid"] = describe_grid(spec);
  std::mt19937_64 rng(seed);
  const double step = 0.01 * chart.diameter();
  const int max_steps = 400;

  // Inextendible curves.
  const int n_obs = chart.obstacles().empty() ? 0 : std::max(1, curve_samples / 4);
  int censored = 0, counted = 0;
  std::vector<std::pair<std::vector<Vec>, int>> bad;
  for (int i = 0; i < curve_samples; ++i) {
    std::vector<Vec> v;
    bool spatial = false;
    const double frac = i % 4 == 3 ? 1.0 : 0.9;
    if (i < curve_samples - n_obs) {
      const Vec x0 = detail::random_domain_point(chart, chart.bounds(), rng);
      auto [fwd, fe] = detail::trace_curve(g, x0, 1, step, max_steps, rng, frac);
      auto [bwd, be] = detail::trace_curve(g, x0, -1, step, max_steps, rng, frac);
      v.assign(bwd.rbegin(), bwd.rend());
      v.insert(v.end(), fwd.begin() + 1, fwd.end());
      spatial = fe == detail::TraceEnd::SpatialBoundary || be == detail::TraceEnd::SpatialBoundary;
    } else {
      // Start on a time face of an obstacle; the obstacle is the other end.
      const auto& o = chart.obstacles()[i % chart.obstacles().size()];
      const bool future = (i / static_cast<int>(chart.obstacles().size())) % 2 == 0;
      std::uniform_real_distribution<double> u(0.0, 1.0);
      Vec x0(chart.dim());
      for (int a = 1; a < chart.dim(); ++a) x0[a] = o.lo[a] + u(rng) * (o.hi[a] - o.lo[a]);
      x0[0] = future ? o.hi[0] + 1e-7 * (1.0 + std::abs(o.hi[0])) : o.lo[0] - 1e-7 * (1.0 + std::abs(o.lo[0]));
      if (!chart.in_domain(x0)) continue;
      auto [tr, te] = detail::trace_curve(g, x0, future ? 1 : -1, step, max_steps, rng, frac);
      if (future) v = tr;
      else v.assign(tr.rbegin(), tr.rend());
      spatial = te == detail::TraceEnd::SpatialBoundary;
    }
    if (v.size() < 2) continue;
    const int c = detail::count_crossings(v, chart, s);
    if (c == 1) {
      ++counted;
    } else if (c == 0 && spatial) {
      ++censored;
    } else {
      ++counted;
      bad.emplace_back(std::move(v), c);
    }
  }
  r.params["censored"] = std::to_string(censored);
  r.params["counted"] = std::to_string(counted);
  if (!bad.empty()) {
    auto& [v, c] = bad.front();
    r.verdict = Verdict::Fail;
    r.witness = Witness{"crossing-count", {CausalCurve::polyline(v, Orientation::Future, chart.background())}, {}, {},
                        "inextendible causal curve crossing S " + std::to_string(c) + " times"};
    r.detail = std::to_string(bad.size()) + " sampled inextendible curves do not cross S exactly once";
    return r;
  }

  // Acausality: straight segments between sampled points of S.
  std::vector<Vec> on_s;
  for (int tries = 0; tries < 400 && on_s.size() < 32; ++tries) {
    const Vec x = detail::random_domain_point(chart, chart.bounds(), rng);
    if (auto y = detail::level_point(chart, s, x); y && chart.in_domain(*y)) on_s.push_back(*y);
  }
  for (std::size_t i = 0; i < on_s.size(); ++i)
    for (std::size_t j = 0; j < on_s.size(); ++j) {
      if (i == j) continue;
      const Vec a = on_s[i], b = a + chart.displacement(a, on_s[j]);
      if ((b - a).norm() < 1e-12) continue;
      if (auto c = detail::causal_polyline(g, {a, b})) {
        r.verdict = Verdict::Fail;
        r.witness = Witness{"causal-chord-in-S", {*c}, {a, b}, {}, "two points of S joined by a causal segment"};
        r.detail = "S is not acausal";
        return r;
      }
    }
  r.params["acausal_pairs"] = std::to_string(on_s.size() * (on_s.size() - 1));

  // Partition of the grid away from S.
  std::vector<Box> s_cells;
  std::vector<std::uint8_t> near(N, 0);
  for (std::size_t k = 0; k < N; ++k) {
    if (!inside[k]) continue;
    const auto i = geo.multi(k);
    bool edge = false;
    for (int a = 0; a < geo.dim() && !edge; ++a)
      for (int sg : {-1, 1}) {
        std::vector<int> o(geo.dim(), 0);
        o[a] = sg;
        if (auto j = geo.shift(i, o); j && inside[geo.index(*j)] && above[geo.index(*j)] != above[k]) edge = true;
      }
    if (!edge) continue;
    Vec h(geo.dim());
    for (int a = 0; a < geo.dim(); ++a) h[a] = 0.5 * geo.cell(a);
    const Vec c = geo.center(k);
    s_cells.emplace_back(c - h, c + h);
  }
  // Nodes within two cells of S or of an obstacle are left out.
  for (std::size_t k = 0; k < N; ++k) {
    const auto i = geo.multi(k);
    std::vector<int> o(geo.dim(), -2);
    bool done = false;
    while (!done) {
      if (auto j = geo.shift(i, o)) {
        const std::size_t m = geo.index(*j);
        if (!inside[m]) near[k] = 1;
        else {
          for (int a = 0; a < geo.dim(); ++a) {
            std::vector<int> e(geo.dim(), 0);
            e[a] = 1;
            if (auto n2 = geo.shift(*j, e); n2 && inside[geo.index(*n2)] && above[geo.index(*n2)] != above[m]) near[k] = 1;
          }
        }
      }
      int a = 0;
      while (a < geo.dim() && ++o[a] > 2) o[a++] = -2;
      done = a == geo.dim() || near[k];
    }
  }
  const std::vector<double> ladder{0.05, 0.01};
  const Region sr(s_cells);
  const ReachSet fut = open_past_future(sr, g, ladder, spec, TimeDirection::Future);
  const ReachSet past = open_past_future(sr, g, ladder, spec, TimeDirection::Past);
  std::vector<Vec> misplaced;
  std::size_t tested = 0;
  for (std::size_t k = 0; k < N; ++k) {
    if (!inside[k] || near[k]) continue;
    ++tested;
    if (fut.cells[k] + past.cells[k] != 1) misplaced.push_back(geo.center(k));
  }
  r.params["partition_nodes"] = std::to_string(tested);
  if (!misplaced.empty()) {
    r.verdict = Verdict::Fail;
    r.witness = Witness{"partition", {}, {}, misplaced, "nodes in neither or both of the open future and past of S"};
    r.detail = std::to_string(misplaced.size()) + " grid nodes violate the partition";
    return r;
  }
  if (counted == 0) {
    r.verdict = Verdict::Inconclusive;
    r.detail = "every sampled curve was censored";
    return r;
  }
  r.detail = "sampled curves cross once; S acausal; partition holds";
  return r;
}

// ---------------------------------------------------------------------------
// Stability constructions.

/// Weight of a convex combination with its Lipschitz constant.
struct BlendWeight {
  std::function<double(const Vec&)> f;
  double lipschitz = 0.0;

  static BlendWeight constant(double c) { return {[c](const Vec&) { return c; }, 0.0}; }
};

/// chi g1 + (1 - chi) g2. The pair must be cone ordered (either way) where
/// chi lies strictly between 0 and 1; the narrower metric supplies the time
/// orientation.
inline MetricField convex_combine(const MetricField& g1, const MetricField& g2, const BlendWeight& chi,
                                  std::optional<SamplingSpec> samples = std::nullopt) {
  if (g1.dim() != g2.dim()) throw InvalidArgument("metrics live on charts of different dimension");
  if (!chi.f) throw InvalidArgument("missing blend weight");
  const SamplingSpec k = samples ? *samples : chart_sampling(g1.chart());
  const auto pts = k.points();
  std::vector<Vec> mid;
  bool all_one = true, all_zero = true;
  for (const auto& x : pts) {
    const double c = chi.f(g1.chart().wrap(x));
    if (!(c >= -1e-12 && c <= 1.0 + 1e-12)) throw InvalidArgument("blend weight leaves [0,1] at (" + fmt_vec(x) + ")");
    all_one = all_one && c >= 1.0;
    all_zero = all_zero && c <= 0.0;
    if (c > 0.0 && c < 1.0) mid.push_back(x);
  }
  if (all_one) return g1;
  if (all_zero) return g2;
  if (mid.empty()) mid = pts;

  const auto fwd = detail::cone_order_at(g1, g2, mid, k.directions);
  bool g1_narrow = true;
  if (fwd.relation == ConeRelation::Fails) {
    if (detail::cone_order_at(g2, g1, mid, k.directions).relation == ConeRelation::Fails)
      throw ConeOrderViolation(fwd.point, fwd.direction);
    g1_narrow = false;
  }
  double diff = 0.0;
  for (const auto& x : pts) diff = std::max(diff, relative_operator_norm(g1(x) - g2(x), g1.h(x)));
  const MetricField narrow_g = g1_narrow ? g1 : g2, wide_g = g1_narrow ? g2 : g1;
  auto f = chi.f;
  const MetricField out(
      g1.chart_ptr(),
      [g1, g2, f](const Vec& x) -> Form {
        const double c = std::clamp(f(x), 0.0, 1.0);
        return c * g1(x) + (1.0 - c) * g2(x);
      },
      [narrow_g](const Vec& x) { return narrow_g.time_orientation(x); },
      g1.modulus() + g2.modulus() + Modulus::lipschitz(chi.lipschitz * diff),
      "combine(" + g1.id() + "," + g2.id() + ")");
  verify_signature(out, pts);
  for (const auto& [a, b] : {std::pair{narrow_g, out}, std::pair{out, wide_g}}) {
    const auto res = detail::cone_order_at(a, b, pts, k.directions);
    if (res.relation == ConeRelation::Fails) throw ConeOrderViolation(res.point, res.direction);
  }
  return out;
}

/// Bump functions over an exhaustion by concentric boxes. r is the
/// Chebyshev radius normalized to 1 on the chart boundary (periodic axes do
/// not count); shell n covers r in [(n-1)/S, n/S]. chi_n ramps by a cubic
/// smoothstep of width w around r = n/S, so consecutive chi overlap and
/// chi_i chi_j = 0 for |i - j| >= 2.
class PartitionOfUnity {
 public:
  PartitionOfUnity(Box bounds, std::vector<bool> periodic, int shells, double width_fraction = 0.4)
      : bounds_(std::move(bounds)), periodic_(std::move(periodic)), shells_(shells) {
    if (shells < 2) throw InvalidArgument("need at least two shells");
    if (!(width_fraction > 0.0 && width_fraction < 1.0)) throw InvalidArgument("ramp width must lie in (0,1)");
    if (std::all_of(periodic_.begin(), periodic_.end(), [](bool p) { return p; }))
      throw InvalidArgument("exhaustion needs a non-periodic axis");
    width_ = width_fraction / shells;
  }

  int shells() const { return shells_; }
  double width() const { return width_; }

  double radius(const Vec& x) const {
    double r = 0.0;
    const Vec c = bounds_.center();
    for (int a = 0; a < bounds_.dim(); ++a)
      if (!periodic_[a]) r = std::max(r, std::abs(x[a] - c[a]) / (0.5 * (bounds_.hi[a] - bounds_.lo[a])));
    return r;
  }

  /// chi_n(x), n = 1..S.
  double chi(int n, const Vec& x) const {
    const double r = radius(x);
    const double lo = n == 1 ? 1.0 : step(n - 1, r);
    const double hi = n == shells_ ? 0.0 : step(n, r);
    return lo - hi;
  }

  /// Radial support [a, b] of chi_n.
  std::pair<double, double> support(int n) const {
    return {n == 1 ? 0.0 : ramp(n - 1) - 0.5 * width_, n == shells_ ? kInf : ramp(n) + 0.5 * width_};
  }

  /// Radial extent of N_n: the part of the chart where only chi_n and
  /// chi_{n+1} are nonzero.
  std::pair<double, double> shell(int n) const {
    return {n == 1 ? 0.0 : ramp(n - 1) + 0.5 * width_, n == shells_ ? kInf : ramp(n) + 0.5 * width_};
  }

  /// Radius of the exhaustion box M_n.
  double exhaustion(int n) const { return static_cast<double>(n) / shells_; }

 private:
  double ramp(int n) const { return static_cast<double>(n) / shells_; }
  double step(int n, double r) const {
    const double s = std::clamp((r - (ramp(n) - 0.5 * width_)) / width_, 0.0, 1.0);
    return s * s * (3.0 - 2.0 * s);
  }

  Box bounds_;
  std::vector<bool> periodic_;
  int shells_;
  double width_ = 0.0;
};

struct StableWidening {
  MetricField metric;
  PartitionOfUnity partition;
  std::vector<double> deltas;  ///< the ladder plus one extra rung delta_S / 2
  double base_margin = 0.0;    ///< min margin of g < g'' over the samples
  std::vector<double> shell_margins;  ///< min margin of g'' < g'_n on N_n
};

struct WideningOptions {
  int points_per_axis = 17;
  int directions = 64;
  double ramp_width = 0.4;
};

/// g'' = sum_n chi_n widen(g, delta_{n+1}) = g - delta(x) h with
/// delta(x) = sum_n chi_n(x) delta_{n+1}. Verifies g < g'' at every sample
/// and g'' < widen(g, delta_n) on each shell N_n.
inline StableWidening build_stable_widening(const MetricField& g, int shells, const std::vector<double>& delta_ladder,
                                            const WideningOptions& opt = {}) {
  if (shells < 2) throw InvalidArgument("need at least two shells");
  if (static_cast<int>(delta_ladder.size()) != shells) throw InvalidArgument("one widening amount per shell required");
  for (std::size_t i = 0; i < delta_ladder.size(); ++i) {
    if (!(delta_ladder[i] > 0.0)) throw InvalidArgument("widening amounts must be positive");
    if (i && !(delta_ladder[i] < delta_ladder[i - 1])) throw InvalidArgument("widening ladder must decrease strictly");
  }
  const ChartDomain& chart = g.chart();
  PartitionOfUnity pou(chart.bounds(), chart.periodic(), shells, opt.ramp_width);
  std::vector<double> d = delta_ladder;
  d.push_back(0.5 * delta_ladder.back());

  const auto pts = chart_sampling(chart, opt.points_per_axis, opt.directions).points();
  std::vector<std::vector<Vec>> on_shell(shells);
  for (const auto& x : pts) {
    double sum = 0.0;
    for (int n = 1; n <= shells; ++n) {
      const double c = pou.chi(n, x);
      const auto [a, b] = pou.support(n);
      const double r = pou.radius(x);
      if (c != 0.0 && (r < a || r > b)) throw Error("bump function leaks out of its shell");
      sum += c;
    }
    if (std::abs(sum - 1.0) > 1e-9) throw Error("partition of unity sums to " + fmt_double(sum));
    for (int n = 1; n <= shells; ++n) {
      const auto [a, b] = pou.shell(n);
      const double r = pou.radius(x);
      if (r >= a && r <= b) on_shell[n - 1].push_back(x);
    }
  }
  for (int n = 1; n <= shells; ++n)
    if (on_shell[n - 1].empty()) throw Error("shell " + std::to_string(n) + " is thinner than the sampling");

  auto delta = [pou, d](const Vec& x) {
    double s = 0.0;
    for (int n = 1; n <= pou.shells(); ++n) s += pou.chi(n, x) * d[n];
    return s;
  };
  const double slope = 1.5 / pou.width() * d.front();
  double half = kInf;
  for (int a = 0; a < chart.dim(); ++a)
    if (!chart.periodic(a)) half = std::min(half, 0.5 * (chart.bounds().hi[a] - chart.bounds().lo[a]));
  const MetricField base = g;
  MetricField out(
      g.chart_ptr(), [base, delta](const Vec& x) -> Form { return base(x) - delta(x) * base.h(x); },
      [base](const Vec& x) { return base.time_orientation(x); }, g.modulus() + Modulus::lipschitz(slope / half),
      "stable_widening(" + g.id() + ",shells=" + std::to_string(shells) + ")");
  verify_signature(out, pts);

  StableWidening res{out, pou, d, 0.0, {}};
  const auto lower = detail::cone_order_at(g, out, pts, opt.directions);
  if (lower.relation != ConeRelation::StrictlyPrecedes)
    throw Error("widened metric does not strictly contain the cones of g at (" + fmt_vec(lower.point) + ")");
  res.base_margin = lower.margin;
  for (int n = 1; n <= shells; ++n) {
    const auto up = detail::cone_order_at(out, widen(g, d[n - 1]), on_shell[n - 1], opt.directions);
    if (up.relation != ConeRelation::StrictlyPrecedes)
      throw Error("widened metric is not inside widen(g, delta_" + std::to_string(n) + ") on its shell");
    res.shell_margins.push_back(up.margin);
  }
  return res;
}

// ---------------------------------------------------------------------------
// Strong causality.

namespace detail {

/// Lattice path from a node inside V that leaves U and returns to V, as a
/// lifted polyline; nullopt when none exists in the given mode.
inline std::optional<CausalCurve> return_path(const CausalGrid& cg, const Vec& p, double ru, double rv, ReachMode m) {
  const auto& geo = cg.geometry();
  const ChartDomain& chart = cg.metric().chart();
  auto within = [&](std::size_t k, double rad) {
    const Vec d = chart.displacement(p, geo.center(k));
    return d.cwiseAbs().maxCoeff() <= rad;
  };
  const std::size_t N = cg.size();
  std::vector<long> parent(2 * N, -1);
  std::vector<int> via(2 * N, -1);
  std::vector<std::size_t> frontier;
  for (std::size_t k = 0; k < N; ++k)
    if (!cg.blocked(k) && within(k, rv)) {
      parent[k] = -2;
      frontier.push_back(k);
    }
  std::optional<std::size_t> goal;
  while (!frontier.empty() && !goal) {
    std::vector<std::size_t> next;
    for (std::size_t s : frontier) {
      const std::size_t u = s % N;
      const bool out = s >= N;
      for (std::size_t j = 0; j < cg.offsets().size() && !goal; ++j) {
        if (!cg.accepts(u, j, m)) continue;
        const auto w = cg.target(u, j);
        if (!w || cg.blocked(*w)) continue;
        const std::size_t t = *w + ((out || !within(*w, ru)) ? N : 0);
        if (parent[t] != -1) continue;
        parent[t] = static_cast<long>(s);
        via[t] = static_cast<int>(j);
        if (t >= N && within(*w, rv)) goal = t;
        next.push_back(t);
      }
    }
    frontier = std::move(next);
  }
  if (!goal) return std::nullopt;
  std::vector<std::size_t> chain{*goal};
  while (parent[chain.back()] != -2) chain.push_back(static_cast<std::size_t>(parent[chain.back()]));
  std::vector<Vec> v{geo.center(chain.back() % N)};
  for (auto it = chain.rbegin() + 1; it != chain.rend(); ++it) v.push_back(v.back() + cg.offsets()[via[*it]].disp);
  return CausalCurve::polyline(std::move(v), Orientation::Future, chart.background());
}

}  // namespace detail

/// U is the box of the largest radius around p. For each smaller radius, a
/// box V passes when not even the over-mode graph has a path from V that
/// leaves U and comes back to V. Fails when every V has such an under-mode
/// path (the witness is the path for the smallest V).
inline RungResult check_strong_causality_at(const Vec& p, const MetricField& g, const std::vector<double>& radii,
                                            const GridSpec& spec) {
  if (radii.size() < 2) throw InvalidArgument("need an outer radius and at least one inner radius");
  for (std::size_t i = 0; i < radii.size(); ++i) {
    if (!(radii[i] > 0.0)) throw InvalidArgument("radii must be positive");
    if (i && !(radii[i] < radii[i - 1])) throw InvalidArgument("radii must decrease strictly");
  }
  if (!g.chart().in_domain(p)) throw DomainError("point outside the domain", p);
  const CausalGrid cg(g, spec);
  RungResult r;
  r.rung = "strong-causality";
  r.params["point"] = fmt_vec(p);
  r.params["grid"] = describe_grid(cg.spec());
  r.params["U"] = fmt_double(radii[0]);
  std::optional<CausalCurve> last;
  for (std::size_t i = 1; i < radii.size(); ++i) {
    if (!detail::return_path(cg, p, radii[0], radii[i], ReachMode::Over)) {
      r.params["V"] = fmt_double(radii[i]);
      r.detail = "no causal path from V leaves U and returns";
      return r;
    }
    last = detail::return_path(cg, p, radii[0], radii[i], ReachMode::Under);
    if (!last) break;
  }
  if (last && is_causal(*last, g, kNullTolerance, 4).kind == CausalKind::CausalFuture) {
    r.verdict = Verdict::Fail;
    r.witness = Witness{"exit-and-return", {*last}, {p}, {}, "causal curve from V that leaves U and returns to V"};
    r.detail = "every V in the ladder admits a causal path leaving U and returning";
  } else {
    r.verdict = Verdict::Inconclusive;
    r.detail = "over-mode return paths without under-mode ones";
  }
  return r;
}

// ---------------------------------------------------------------------------

struct DiagnoseOptions {
  GridSpec grid = GridSpec::uniform(64);
  int pair_samples = 12;
  int simplicity_trials = 60;
  int curve_samples = 200;
  std::optional<CauchySurfaceSpec> cauchy;
  std::vector<Vec> strong_points;
  std::vector<double> radii{0.5, 0.2, 0.1};
  std::uint64_t seed = 1;
};

/// Runs the rungs in sequence: causality, global hyperbolicity (imprisonment,
/// diamonds, limit extraction), causal simplicity, then the optional Cauchy
/// surface and strong-causality checks.
inline LadderReport diagnose(const MetricField& g, const DiagnoseOptions& opt = {}) {
  LadderReport rep;
  rep.rungs.push_back(check_causality(g, opt.grid));
  rep.append(check_global_hyperbolicity(g, opt.grid, opt.pair_samples, opt.seed));
  rep.rungs.push_back(check_causal_simplicity(g, opt.grid, opt.simplicity_trials, opt.seed));
  if (opt.cauchy) rep.rungs.push_back(check_cauchy_surface(*opt.cauchy, g, opt.curve_samples, opt.grid, opt.seed));
  for (const auto& p : opt.strong_points) rep.rungs.push_back(check_strong_causality_at(p, g, opt.radii, opt.grid));
  return rep;
}

}  // namespace lorentz
