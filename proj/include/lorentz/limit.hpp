// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "lorentz/curve.hpp"

namespace lorentz {

enum class LimitMode { FixedInterval, Inextendible };

struct LimitOptions {
  int depth = 12;               ///< dyadic sample grid 2^depth + 1 points
  double tail_fraction = 0.25;  ///< part of the subsequence that defines the limit
  int rounds = 4;               ///< extraction rounds
  const MetricField* metric = nullptr;  ///< when set, the limit is checked on the widening ladder
  std::vector<double> eps_ladder{0.1, 0.01, 0.001};
  double horizon = 0.0;  ///< inextendible mode: h-length horizon (0: 10x chart diameter)
};

struct LimitResult {
  std::vector<std::size_t> subsequence;
  CausalCurve limit;
  std::vector<double> sup_gaps;  ///< rho(member, limit) along the subsequence
  std::vector<std::pair<double, CausalKind>> causality;  ///< per widening eps
  double truncation_length = 0.0;  ///< inextendible mode: common h-length

  bool limit_causal() const {
    return std::all_of(causality.begin(), causality.end(),
                       [](const auto& e) { return e.second != CausalKind::Violation; });
  }
};

namespace detail {

/// Values of a curve at the sorted parameters `grid`, in one sweep.
inline std::vector<Vec> sample_at(const CausalCurve& c, const std::vector<double>& grid) {
  std::vector<Vec> out(grid.size());
  std::size_t seg = 0;
  const auto& p = c.params();
  for (std::size_t j = 0; j < grid.size(); ++j) {
    const double s = grid[j];
    while (seg + 2 < p.size() && p[seg + 1] <= s) ++seg;
    const double u = std::clamp((s - p[seg]) / (p[seg + 1] - p[seg]), 0.0, 1.0);
    out[j] = c.vertex(seg) + u * (c.vertex(seg + 1) - c.vertex(seg));
  }
  return out;
}

/// Pointwise center of the coordinate bounding box of the given samples:
/// the point minimizing the worst-case coordinate distance to all of them.
inline CausalCurve midrange_curve(const std::vector<const std::vector<Vec>*>& samples, const std::vector<double>& grid,
                                  Orientation orient) {
  std::vector<Vec> verts;
  std::vector<double> params;
  for (std::size_t j = 0; j < grid.size(); ++j) {
    Vec lo = (*samples[0])[j], hi = lo;
    for (const auto* s : samples) {
      lo = lo.cwiseMin((*s)[j]);
      hi = hi.cwiseMax((*s)[j]);
    }
    const Vec c = 0.5 * (lo + hi);
    if (!verts.empty() && c == verts.back()) continue;
    verts.push_back(c);
    params.push_back(grid[j]);
  }
  if (verts.size() < 2) throw NoAccumulation("family collapses to a point");
  params.front() = 0.0;
  params.back() = 1.0;
  return CausalCurve(std::move(verts), std::move(params), Param::Generic, orient);
}

/// Running-minimum records of the gaps: indices whose gap does not exceed
/// every earlier selected gap. Lowest index wins ties.
inline std::vector<std::size_t> record_subsequence(const std::vector<double>& gaps) {
  std::vector<std::size_t> out;
  double best = kInf;
  for (std::size_t i = 0; i < gaps.size(); ++i)
    if (gaps[i] <= best) {
      out.push_back(i);
      best = gaps[i];
    }
  return out;
}

/// Initial piece of h-length L of a curve, as a new curve.
inline CausalCurve truncate_h_length(const CausalCurve& c, double len, const RiemannianBackground& h) {
  std::vector<Vec> v{c.front()};
  double acc = 0.0;
  for (std::size_t i = 0; i + 1 < c.size(); ++i) {
    const double l = h.segment_length(c.vertex(i), c.vertex(i + 1));
    if (acc + l >= len) {
      const double u = (len - acc) / l;
      const Vec x = c.vertex(i) + u * (c.vertex(i + 1) - c.vertex(i));
      if (x != v.back()) v.push_back(x);
      break;
    }
    acc += l;
    v.push_back(c.vertex(i + 1));
  }
  return CausalCurve::polyline(std::move(v), c.orientation(), h);
}

}  // namespace detail

/// Arzela-Ascoli extraction at finite resolution. Members are sampled on a
/// dyadic grid refined by their breakpoints; the limit is the pointwise
/// bounding-box center of the tail of the current subsequence, and the
/// subsequence is the set of running gap minima. Rounds repeat until the subsequence stabilizes.
inline LimitResult extract_limit_curve(const std::vector<CausalCurve>& family, LimitMode mode, double lip_bound,
                                       double tol, const LimitOptions& opt = {}) {
  if (family.empty()) throw InvalidArgument("empty curve family");
  if (opt.depth < 1 || opt.depth > 20) throw InvalidArgument("depth must lie in [1,20]");
  const RiemannianBackground h = opt.metric ? opt.metric->chart().background() : RiemannianBackground{};

  std::vector<CausalCurve> work;
  LimitResult res;
  if (mode == LimitMode::FixedInterval) {
    for (std::size_t i = 0; i < family.size(); ++i) {
      const auto& c = family[i];
      if (c.param_begin() != 0.0 || c.param_end() != 1.0)
        throw InvalidArgument("fixed-interval mode needs curves parametrized on [0,1]");
      if (c.lipschitz() > lip_bound * (1.0 + 1e-12)) throw LipschitzUnbounded(i, c.lipschitz(), lip_bound);
    }
    work = family;
  } else {
    double horizon = opt.horizon;
    if (!(horizon > 0.0) && opt.metric) horizon = 10.0 * opt.metric->chart().diameter();
    double common = kInf;
    for (std::size_t i = 0; i < family.size(); ++i) {
      const auto& c = family[i];
      bool reached = c.h_length() >= horizon && horizon > 0.0;
      if (opt.metric) {
        const ChartDomain& chart = opt.metric->chart();
        const Vec& e = c.back();
        for (int a = 0; a < chart.dim() && !reached; ++a)
          if (!chart.periodic(a))
            reached = std::abs(e[a] - chart.bounds().lo[a]) <= tol || std::abs(e[a] - chart.bounds().hi[a]) <= tol;
        for (const auto& o : chart.obstacles()) reached = reached || o.distance(chart.wrap(e)) <= tol;
      } else {
        reached = true;
      }
      if (!reached) throw InvalidArgument("curve " + std::to_string(i) + " stops short of the horizon");
      common = std::min(common, c.h_length());
    }
    res.truncation_length = common;
    for (const auto& c : family) work.push_back(canonicalize(detail::truncate_h_length(c, common, h), h));
    // Equal h-length after truncation: the canonical speed is the common
    // length, which bounds the Lipschitz constants uniformly.
    lip_bound = std::max(lip_bound, common);
  }

  // Dyadic grid plus every member breakpoint, so a family of equal curves
  // reproduces its member exactly.
  const int m = 1 << opt.depth;
  std::vector<double> grid;
  for (int j = 0; j <= m; ++j) grid.push_back(static_cast<double>(j) / m);
  std::size_t breakpoints = 0;
  for (const auto& c : work) breakpoints += c.size();
  if (breakpoints <= 200000)
    for (const auto& c : work) grid.insert(grid.end(), c.params().begin(), c.params().end());
  std::sort(grid.begin(), grid.end());
  // Near-coincident parameters would make tiny limit segments whose
  // direction is pure rounding noise.
  grid.erase(std::unique(grid.begin(), grid.end(), [](double a, double b) { return b - a < 1e-9; }), grid.end());
  grid.back() = 1.0;
  std::vector<std::vector<Vec>> samples(work.size());
  for (std::size_t i = 0; i < work.size(); ++i) samples[i] = detail::sample_at(work[i], grid);

  std::vector<std::size_t> sub(work.size());
  for (std::size_t i = 0; i < sub.size(); ++i) sub[i] = i;
  std::vector<double> gaps;
  CausalCurve limit;
  for (int round = 0; round < std::max(1, opt.rounds); ++round) {
    const std::size_t k = std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(opt.tail_fraction * sub.size())));
    std::vector<const std::vector<Vec>*> tail;
    double spread = 0.0;
    for (std::size_t i = sub.size() - k; i < sub.size(); ++i) {
      tail.push_back(&samples[sub[i]]);
      spread = std::max(spread, (samples[sub[i]][0] - samples[sub.back()][0]).norm());
    }
    if (spread > tol)
      throw NoAccumulation("start points of the family tail spread over " + fmt_double(spread) + " > " +
                           fmt_double(tol));
    limit = detail::midrange_curve(tail, grid, work.front().orientation());
    gaps.assign(work.size(), 0.0);
    for (std::size_t i = 0; i < work.size(); ++i) gaps[i] = sup_distance(work[i], limit);
    auto next = detail::record_subsequence(gaps);
    if (next == sub) break;
    sub = std::move(next);
  }

  res.subsequence = sub;
  for (std::size_t i : sub) res.sup_gaps.push_back(gaps[i]);
  res.limit = limit;
  if (opt.metric)
    for (double eps : opt.eps_ladder) res.causality.emplace_back(eps, is_causal(limit, widen(*opt.metric, eps)).kind);
  return res;
}

// ---------------------------------------------------------------------------

struct UscOptions {
  double tail_fraction = 0.25;
  double convergence_tol = 0.05;  ///< tail members must lie this close to the limit
  std::vector<double> delta_ladder{0.1, 0.01, 0.001};
  int quadrature_order = 8;
};

struct UscReport {
  bool holds = false;
  double margin = 0.0;        ///< L(limit) + tol - limsup
  double limsup = 0.0;        ///< tail max of L(member)
  double limit_length = 0.0;  ///< L(limit)
  std::size_t witness = 0;    ///< member attaining the limsup
  std::vector<std::pair<double, double>> chain;  ///< (delta, L_widen(limit) + Lip sqrt(delta))
  bool chain_dominates = true;
};

/// Crude quadrature error estimate: difference between order 8 and 16.
inline double quadrature_error(const CausalCurve& c, const MetricField& g) {
  return std::abs(lorentz_length(c, g, 8) - lorentz_length(c, g, 16));
}

/// Upper semicontinuity check: limsup of the family's lengths (tail max)
/// against the length of the limit. Members need only be causal for the
/// widest metric of the ladder, matching families that are causal for a
/// sequence of widened metrics.
inline UscReport verify_usc(const MetricField& g, const std::vector<CausalCurve>& family, const CausalCurve& limit,
                            double tol, const UscOptions& opt = {}) {
  if (family.empty()) throw InvalidArgument("empty curve family");
  const std::size_t k =
      std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(opt.tail_fraction * family.size())));
  const std::size_t first = family.size() - k;
  const double widest = opt.delta_ladder.empty()
                            ? 0.0
                            : *std::max_element(opt.delta_ladder.begin(), opt.delta_ladder.end());
  const MetricField loose = widest > 0.0 ? widen(g, widest) : g;
  for (std::size_t i = 0; i < family.size(); ++i)
    if (!is_causal(family[i], loose).causal())
      throw InvalidArgument("member " + std::to_string(i) + " is not causal");

  auto on_unit = [](const CausalCurve& c) { return c.param_begin() == 0.0 && c.param_end() == 1.0; };
  if (!on_unit(limit)) throw InvalidArgument("limit must be parametrized on [0,1]");
  for (std::size_t i = first; i < family.size(); ++i) {
    if (!on_unit(family[i])) throw InvalidArgument("members must be parametrized on [0,1]");
    const double gap = sup_distance(family[i], limit);
    if (gap > opt.convergence_tol)
      throw NotConvergent("member " + std::to_string(i) + " lies " + fmt_double(gap) + " from the limit");
  }

  UscReport r;
  r.limit_length = lorentz_length(limit, g, opt.quadrature_order);
  r.limsup = -kInf;
  for (std::size_t i = first; i < family.size(); ++i) {
    const double l = lorentz_length(family[i], g, opt.quadrature_order);
    if (l > r.limsup) {
      r.limsup = l;
      r.witness = i;
    }
  }
  r.margin = r.limit_length + tol - r.limsup;
  r.holds = r.margin >= 0.0;
  for (double d : opt.delta_ladder) {
    const double v = lorentz_length(limit, widen(g, d), opt.quadrature_order) + limit.lipschitz() * std::sqrt(d);
    r.chain.emplace_back(d, v);
    if (v < r.limit_length - 1e-12) r.chain_dominates = false;
  }
  return r;
}

}  // namespace lorentz
