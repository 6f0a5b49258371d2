// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "lorentz/curve.hpp"

#include <cstdint>
#include <numeric>
#include <queue>

namespace lorentz {

enum class ReachMode { Over, Under };

inline constexpr double kObstacleClearance = 1e-9;
enum class TimeDirection { Future, Past };

inline const char* to_string(ReachMode m) { return m == ReachMode::Over ? "over" : "under"; }
inline const char* to_string(TimeDirection d) { return d == TimeDirection::Future ? "future" : "past"; }

/// Cell-centered lattice over a box. Nodes are cell centers; periodic axes
/// wrap and must span the chart period.
struct GridGeometry {
  Box bounds;
  std::vector<int> cells;
  std::vector<bool> periodic;

  int dim() const { return bounds.dim(); }
  double cell(int a) const { return (bounds.hi[a] - bounds.lo[a]) / cells[a]; }
  std::size_t size() const {
    std::size_t s = 1;
    for (int c : cells) s *= static_cast<std::size_t>(c);
    return s;
  }

  /// Row-major with the last axis fastest.
  std::size_t index(const std::vector<int>& i) const {
    std::size_t k = 0;
    for (int a = 0; a < dim(); ++a) k = k * cells[a] + i[a];
    return k;
  }
  std::vector<int> multi(std::size_t k) const {
    std::vector<int> i(dim());
    for (int a = dim() - 1; a >= 0; --a) {
      i[a] = static_cast<int>(k % cells[a]);
      k /= cells[a];
    }
    return i;
  }
  Vec center(const std::vector<int>& i) const {
    Vec x(dim());
    for (int a = 0; a < dim(); ++a) x[a] = bounds.lo[a] + (i[a] + 0.5) * cell(a);
    return x;
  }
  Vec center(std::size_t k) const { return center(multi(k)); }

  /// Index of the cell containing x (clamped; periodic axes wrapped).
  std::vector<int> locate(const Vec& x) const {
    std::vector<int> i(dim());
    for (int a = 0; a < dim(); ++a) {
      int c = static_cast<int>(std::floor((x[a] - bounds.lo[a]) / cell(a)));
      if (periodic[a]) c = ((c % cells[a]) + cells[a]) % cells[a];
      i[a] = std::clamp(c, 0, cells[a] - 1);
    }
    return i;
  }

  /// i + o with wrapping; nullopt when it leaves a non-periodic axis.
  std::optional<std::vector<int>> shift(const std::vector<int>& i, const std::vector<int>& o) const {
    std::vector<int> j(dim());
    for (int a = 0; a < dim(); ++a) {
      int c = i[a] + o[a];
      if (periodic[a]) c = ((c % cells[a]) + cells[a]) % cells[a];
      else if (c < 0 || c >= cells[a]) return std::nullopt;
      j[a] = c;
    }
    return j;
  }

  bool on_boundary(const std::vector<int>& i) const {
    for (int a = 0; a < dim(); ++a)
      if (!periodic[a] && (i[a] == 0 || i[a] == cells[a] - 1)) return true;
    return false;
  }

  bool operator==(const GridGeometry& o) const {
    return bounds.lo == o.bounds.lo && bounds.hi == o.bounds.hi && cells == o.cells && periodic == o.periodic;
  }
};

/// Parameters of the cone-step graph.
struct GridSpec {
  std::vector<int> cells;    ///< per axis; a single entry applies to every axis
  std::optional<Box> bounds;  ///< defaults to the chart bounds
  int stencil = 0;            ///< Chebyshev radius of the step stencil; 0 picks by dimension
  double kappa = 1.0;         ///< weight of the local metric variation
  double slack = 0.02;        ///< over-mode aperture slack on g(v,v), h-unit v
  double tol = kNullTolerance;

  static GridSpec uniform(int n, int stencil = 0) {
    GridSpec s;
    s.cells = {n};
    s.stencil = stencil;
    return s;
  }
};

/// Membership flags on a grid, with the grid and mode that produced them.
struct ReachSet {
  GridGeometry grid;
  std::vector<std::uint8_t> cells;
  ReachMode mode = ReachMode::Over;
  TimeDirection direction = TimeDirection::Future;
  std::string seed;
  std::string metric_id;

  std::size_t count() const { return static_cast<std::size_t>(std::count(cells.begin(), cells.end(), 1)); }
  bool empty() const { return count() == 0; }
  bool contains(std::size_t k) const { return cells[k] != 0; }
  bool contains(const std::vector<int>& i) const { return cells[grid.index(i)] != 0; }
  /// Membership of the cell containing x.
  bool contains_point(const Vec& x) const { return contains(grid.locate(x)); }

  bool subset_of(const ReachSet& o) const {
    for (std::size_t k = 0; k < cells.size(); ++k)
      if (cells[k] && !o.cells[k]) return false;
    return true;
  }

  std::vector<std::size_t> members() const {
    std::vector<std::size_t> out;
    for (std::size_t k = 0; k < cells.size(); ++k)
      if (cells[k]) out.push_back(k);
    return out;
  }

  /// Member cells with a non-member axis neighbor inside the grid.
  std::vector<std::size_t> boundary() const {
    std::vector<std::size_t> out;
    for (std::size_t k = 0; k < cells.size(); ++k) {
      if (!cells[k]) continue;
      const auto i = grid.multi(k);
      bool edge = false;
      for (int a = 0; a < grid.dim() && !edge; ++a)
        for (int s : {-1, 1}) {
          std::vector<int> o(grid.dim(), 0);
          o[a] = s;
          if (auto j = grid.shift(i, o); j && !contains(*j)) edge = true;
        }
      if (edge) out.push_back(k);
    }
    return out;
  }

  bool operator==(const ReachSet& o) const {
    return grid == o.grid && cells == o.cells && mode == o.mode && direction == o.direction;
  }
};

inline ReachSet intersect(const ReachSet& a, const ReachSet& b) {
  if (!(a.grid == b.grid)) throw InvalidArgument("reach sets live on different grids");
  ReachSet r = a;
  for (std::size_t k = 0; k < r.cells.size(); ++k) r.cells[k] = a.cells[k] && b.cells[k];
  r.seed = "(" + a.seed + ")&(" + b.seed + ")";
  return r;
}

inline ReachSet unite(const ReachSet& a, const ReachSet& b) {
  if (!(a.grid == b.grid)) throw InvalidArgument("reach sets live on different grids");
  ReachSet r = a;
  for (std::size_t k = 0; k < r.cells.size(); ++k) r.cells[k] = a.cells[k] || b.cells[k];
  r.seed = "(" + a.seed + ")|(" + b.seed + ")";
  return r;
}

// ---------------------------------------------------------------------------

namespace detail {

// Symmetric forms stored as their upper triangle, row by row.
inline double packed_quad(const double* p, const double* v, int n) {
  double s = 0.0;
  for (int i = 0; i < n; ++i) {
    s += *p++ * v[i] * v[i];
    for (int j = i + 1; j < n; ++j) s += 2.0 * *p++ * v[i] * v[j];
  }
  return s;
}

inline double packed_bil(const double* p, const double* v, const double* w, int n) {
  double s = 0.0;
  for (int i = 0; i < n; ++i) {
    s += *p++ * v[i] * w[i];
    for (int j = i + 1; j < n; ++j) s += *p++ * (v[i] * w[j] + v[j] * w[i]);
  }
  return s;
}

inline double packed_frob_diff(const double* p, const double* q, int n) {
  double s = 0.0;
  for (int i = 0; i < n; ++i) {
    const double d = *p++ - *q++;
    s += d * d;
    for (int j = i + 1; j < n; ++j) {
      const double e = *p++ - *q++;
      s += 2.0 * e * e;
    }
  }
  return std::sqrt(s);
}

}  // namespace detail

/// The cone-step graph of a metric on a grid. A step joins a node to the
/// node at a primitive stencil offset; it is accepted in under mode when the
/// step direction is causal at both ends and the midpoint with a margin of
/// kappa times the local metric variation, and in over mode when it is
/// within that margin plus the aperture slack of the cone at one of them.
/// Forms are cached on the half-integer lattice, which holds every node and
/// every step midpoint.
class CausalGrid {
 public:
  struct Offset {
    std::vector<int> idx;
    Vec disp;
    double h_length;
  };

  CausalGrid(MetricField g, const GridSpec& spec) : g_(std::move(g)), spec_(spec) {
    const ChartDomain& chart = g_.chart();
    const int n = chart.dim();
    geo_.bounds = spec.bounds ? *spec.bounds : chart.bounds();
    if (geo_.bounds.dim() != n) throw InvalidArgument("grid bounds dimension mismatch");
    if (spec.cells.size() == 1) geo_.cells.assign(n, spec.cells[0]);
    else geo_.cells = spec.cells;
    if (static_cast<int>(geo_.cells.size()) != n) throw InvalidArgument("grid cell counts do not match dimension");
    for (int c : geo_.cells)
      if (c < 2) throw InvalidArgument("grid needs at least two cells per axis");
    if (spec.stencil < 0) throw InvalidArgument("stencil radius must be non-negative");
    if (spec_.stencil == 0) spec_.stencil = n == 2 ? 5 : n == 3 ? 2 : 1;
    geo_.periodic.assign(n, false);
    for (int a = 0; a < n; ++a) {
      if (!chart.periodic(a)) continue;
      if (geo_.bounds.lo[a] != chart.bounds().lo[a] || geo_.bounds.hi[a] != chart.bounds().hi[a])
        throw InvalidArgument("grid must span periodic axis " + std::to_string(a));
      geo_.periodic[a] = true;
    }
    build_offsets();
    build_cache();
    build_node_flags();
  }

  const GridGeometry& geometry() const { return geo_; }
  const MetricField& metric() const { return g_; }
  const GridSpec& spec() const { return spec_; }
  const std::vector<Offset>& offsets() const { return offsets_; }
  std::size_t size() const { return geo_.size(); }
  bool blocked(std::size_t k) const { return blocked_[k] != 0; }

  /// Is the future step node -> node + offsets()[j] accepted?
  bool accepts(std::size_t node, std::size_t j, ReachMode m) const {
    const auto& mask = masks(m);
    return (mask[node * words_ + j / 64] >> (j % 64)) & 1U;
  }

  /// Cone part of the step test from the cached forms, ignoring obstacles.
  /// The target must lie on the grid (or across a periodic seam).
  bool cone_ok(std::size_t node, std::size_t j, ReachMode m) const {
    const int n = geo_.dim();
    std::array<int, kMaxDim> i{};
    node_multi(node, i);
    const auto& o = offsets_[j].idx;
    std::size_t ha = 0, hm = 0, hb = 0;
    for (int a = 0; a < n; ++a) {
      const int H = half_dims_[a];
      int c0 = 2 * i[a] + 1, cm = c0 + o[a], cb = c0 + 2 * o[a];
      if (geo_.periodic[a]) {
        cm = ((cm % H) + H) % H;
        cb = ((cb % H) + H) % H;
      } else if (cb < 0 || cb >= H) {
        return false;
      }
      ha = ha * H + c0;
      hm = hm * H + cm;
      hb = hb * H + cb;
    }
    const double* pm = &cache_[hm * stride_];
    std::array<double, kMaxDim> v{};
    if (hcache_.empty()) {
      for (int a = 0; a < n; ++a) v[a] = units_[j][a];
    } else {
      const double len = std::sqrt(detail::packed_quad(&hcache_[hm * (stride_ - n)], offsets_[j].disp.data(), n));
      for (int a = 0; a < n; ++a) v[a] = offsets_[j].disp[a] / len;
    }
    return cone_packed(&cache_[ha * stride_], pm, &cache_[hb * stride_], v.data(), j, m);
  }

  /// cone_ok for the step from an arbitrary point along offset j, with the
  /// metric evaluated directly (steps that leave the grid).
  bool cone_ok_at(const Vec& a, std::size_t j, ReachMode m) const {
    const int n = geo_.dim();
    const Vec& d = offsets_[j].disp;
    std::array<double, 3 * (kMaxDim * (kMaxDim + 1) / 2 + kMaxDim)> buf{};
    const Vec pts[3] = {a, a + 0.5 * d, a + d};
    for (int s = 0; s < 3; ++s) {
      const Form f = g_(pts[s]);
      const Vec t = g_.time_orientation(pts[s]);
      double* p = &buf[s * stride_];
      for (int r = 0; r < n; ++r)
        for (int c = r; c < n; ++c) *p++ = f(r, c);
      for (int r = 0; r < n; ++r) *p++ = t[r];
    }
    const double len = std::sqrt(quadratic(g_.h(pts[1]), d));
    std::array<double, kMaxDim> v{};
    for (int r = 0; r < n; ++r) v[r] = d[r] / len;
    return cone_packed(&buf[0], &buf[stride_], &buf[2 * stride_], v.data(), j, m);
  }

  /// Target of a step; nullopt when it leaves the grid.
  std::optional<std::size_t> target(std::size_t node, std::size_t j, int sign = 1) const {
    const int n = geo_.dim();
    std::array<int, kMaxDim> i{};
    node_multi(node, i);
    std::size_t k = 0;
    for (int a = 0; a < n; ++a) {
      int c = i[a] + sign * offsets_[j].idx[a];
      const int N = geo_.cells[a];
      if (geo_.periodic[a]) c = ((c % N) + N) % N;
      else if (c < 0 || c >= N) return std::nullopt;
      k = k * N + c;
    }
    return k;
  }

  /// Step test between arbitrary points (used for seeding hops).
  bool hop_ok(const Vec& a, const Vec& b, ReachMode m, TimeDirection dir) const {
    const Vec from = dir == TimeDirection::Future ? a : b;
    const Vec to = dir == TimeDirection::Future ? b : a;
    if ((to - from).norm() == 0.0) return true;
    const Vec mid = 0.5 * (from + to);
    const Form ga = g_(from), gm = g_(mid), gb = g_(to);
    if (!step_test(ga, gm, gb, g_.time_orientation(mid), to - from, g_.h(mid), m)) return false;
    const ObstacleRule rule = m == ReachMode::Under ? ObstacleRule::Strict : ObstacleRule::Graze;
    return !g_.chart().segment_blocked(from, to, rule, clearance(m));
  }

  /// Under-mode steps keep this distance from obstacles so rounding never
  /// lets a step slip past a corner it only touches.
  static double clearance(ReachMode m) { return m == ReachMode::Under ? kObstacleClearance : 0.0; }

  /// Core acceptance rule on explicit forms.
  bool step_test(const Form& ga, const Form& gm, const Form& gb, const Vec& tm, const Vec& d, const Form& hm,
                 ReachMode m) const {
    const double len = std::sqrt(quadratic(hm, d));
    const Vec v = d / len;
    if (!(bilinear(gm, v, tm) < 0.0)) return false;
    const double var = std::max((ga - gm).norm(), (gb - gm).norm());
    const double qa = quadratic(ga, v), qm = quadratic(gm, v), qb = quadratic(gb, v);
    if (m == ReachMode::Under) return std::max({qa, qm, qb}) + spec_.kappa * var <= spec_.tol;
    return std::min({qa, qm, qb}) - spec_.kappa * var - spec_.slack <= spec_.tol;
  }

 private:
  void node_multi(std::size_t k, std::array<int, kMaxDim>& i) const {
    for (int a = geo_.dim() - 1; a >= 0; --a) {
      i[a] = static_cast<int>(k % geo_.cells[a]);
      k /= geo_.cells[a];
    }
  }

  bool cone_packed(const double* pa, const double* pm, const double* pb, const double* v, std::size_t j,
                   ReachMode m) const {
    const int n = geo_.dim();
    const double* tm = pm + (stride_ - n);
    if (!(detail::packed_bil(pm, v, tm, n) < 0.0)) return false;
    const double var = std::max(detail::packed_frob_diff(pa, pm, n), detail::packed_frob_diff(pb, pm, n));
    const double qa = detail::packed_quad(pa, v, n), qm = detail::packed_quad(pm, v, n),
                 qb = detail::packed_quad(pb, v, n);
    if (m == ReachMode::Under) return std::max({qa, qm, qb}) + spec_.kappa * var <= spec_.tol;
    if (std::min({qa, qm, qb}) - spec_.kappa * var - spec_.slack <= spec_.tol) return true;
    // The cone reaches past an angular neighbor towards this direction, so
    // the conic hull of accepted directions needs it.
    for (const Vec& d : past_dirs_[j]) {
      if (!(detail::packed_bil(pm, d.data(), tm, n) < 0.0)) continue;
      if (std::min({detail::packed_quad(pa, d.data(), n), detail::packed_quad(pm, d.data(), n),
                    detail::packed_quad(pb, d.data(), n)}) < 0.0)
        return true;
    }
    return false;
  }

  void build_offsets() {
    const int n = geo_.dim(), r = spec_.stencil;
    std::vector<int> o(n, -r);
    while (true) {
      int g = 0;
      bool zero = true;
      for (int v : o) {
        g = std::gcd(g, std::abs(v));
        zero = zero && v == 0;
      }
      if (!zero && g == 1) {
        Offset off;
        off.idx = o;
        off.disp = Vec(n);
        for (int a = 0; a < n; ++a) off.disp[a] = o[a] * geo_.cell(a);
        off.h_length = off.disp.norm();
        offsets_.push_back(off);
      }
      int a = 0;
      while (a < n && ++o[a] > r) o[a++] = -r;
      if (a == n) break;
    }
    words_ = (offsets_.size() + 63) / 64;
    // Relative-neighborhood graph of the stencil directions on the sphere:
    // j and k are neighbors when no direction is closer to both.
    const std::size_t M = offsets_.size();
    for (const auto& o : offsets_) units_.push_back(o.disp.normalized());
    std::vector<double> ang(M * M);
    for (std::size_t a = 0; a < M; ++a)
      for (std::size_t b = 0; b < M; ++b) ang[a * M + b] = std::acos(std::clamp(units_[a].dot(units_[b]), -1.0, 1.0));
    past_dirs_.assign(M, {});
    for (std::size_t a = 0; a < M; ++a)
      for (std::size_t b = 0; b < M; ++b) {
        if (a == b) continue;
        const double ab = ang[a * M + b];
        bool ok = true;
        for (std::size_t c = 0; c < M && ok; ++c)
          if (c != a && c != b && std::max(ang[a * M + c], ang[b * M + c]) < ab - 1e-12) ok = false;
        if (ok) past_dirs_[a].push_back((units_[b] + 1e-4 * (units_[a] - units_[b])).normalized());
      }
  }

  void build_cache() {
    const int n = geo_.dim();
    half_dims_.resize(n);
    std::size_t total = 1;
    for (int a = 0; a < n; ++a) {
      half_dims_[a] = geo_.periodic[a] ? 2 * geo_.cells[a] : 2 * geo_.cells[a] + 1;
      total *= half_dims_[a];
    }
    stride_ = n * (n + 1) / 2 + n;
    const bool flat_h = g_.chart().background().is_identity();
    cache_.resize(total * stride_);
    if (!flat_h) hcache_.resize(total * n * (n + 1) / 2);
    std::vector<int> c(n, 0);
    for (std::size_t k = 0; k < total; ++k) {
      Vec x(n);
      for (int a = 0; a < n; ++a) x[a] = geo_.bounds.lo[a] + 0.5 * c[a] * geo_.cell(a);
      const Form f = g_(x);
      if (!f.allFinite()) throw Error("non-finite metric entries at (" + fmt_vec(x) + ")");
      const Vec t = g_.time_orientation(x);
      double* p = &cache_[k * stride_];
      for (int i = 0; i < n; ++i)
        for (int j = i; j < n; ++j) *p++ = f(i, j);
      for (int i = 0; i < n; ++i) *p++ = t[i];
      if (!flat_h) {
        const Form h = g_.h(x);
        double* q = &hcache_[k * n * (n + 1) / 2];
        for (int i = 0; i < n; ++i)
          for (int j = i; j < n; ++j) *q++ = h(i, j);
      }
      int a = n - 1;
      while (a >= 0 && ++c[a] == half_dims_[a]) c[a--] = 0;
    }
  }

  void build_node_flags() {
    const std::size_t N = size();
    blocked_.assign(N, 0);
    near_obstacle_.assign(N, 0);
    const ChartDomain& chart = g_.chart();
    if (chart.obstacles().empty()) return;
    double reach = 0.0;
    for (int a = 0; a < geo_.dim(); ++a) reach += std::pow((spec_.stencil + 1) * geo_.cell(a), 2);
    reach = std::sqrt(reach);
    for (std::size_t k = 0; k < N; ++k) {
      const Vec x = geo_.center(k);
      if (chart.in_obstacle(x)) blocked_[k] = 1;
      for (const auto& o : chart.obstacles()) {
        Vec w = chart.wrap(x);
        // Nearest periodic image of the obstacle.
        for (int a = 0; a < geo_.dim(); ++a)
          if (geo_.periodic[a]) {
            const double p = chart.period(a), c = o.center()[a];
            w[a] = c + std::remainder(w[a] - c, p);
          }
        if (o.distance(w) <= reach) near_obstacle_[k] = 1;
      }
    }
  }

  const std::vector<std::uint64_t>& masks(ReachMode m) const {
    const int mi = m == ReachMode::Over ? 0 : 1;
    std::call_once(mask_once_[mi], [&] { build_masks(m, masks_[mi]); });
    return masks_[mi];
  }

  void build_masks(ReachMode m, std::vector<std::uint64_t>& out) const {
    const std::size_t N = size();
    out.assign(N * words_, 0);
    const ChartDomain& chart = g_.chart();
    const ObstacleRule rule = m == ReachMode::Under ? ObstacleRule::Strict : ObstacleRule::Graze;
    for (std::size_t k = 0; k < N; ++k) {
      if (blocked_[k]) continue;
      for (std::size_t j = 0; j < offsets_.size(); ++j) {
        const auto t = target(k, j);
        if (!t || blocked_[*t]) continue;
        if (!cone_ok(k, j, m)) continue;
        if (near_obstacle_[k]) {
          const Vec a = geo_.center(k);
          if (chart.segment_blocked(a, a + offsets_[j].disp, rule, clearance(m))) continue;
        }
        out[k * words_ + j / 64] |= std::uint64_t{1} << (j % 64);
      }
    }
  }

  MetricField g_;
  GridSpec spec_;
  GridGeometry geo_;
  std::vector<Offset> offsets_;
  std::vector<Vec> units_;
  std::vector<std::vector<Vec>> past_dirs_;  ///< just past each angular neighbor, towards j
  std::size_t words_ = 1;
  std::vector<int> half_dims_;
  std::size_t stride_ = 0;
  std::vector<double> cache_, hcache_;
  std::vector<std::uint8_t> blocked_, near_obstacle_;
  mutable std::once_flag mask_once_[2];
  mutable std::vector<std::uint64_t> masks_[2];
};

// ---------------------------------------------------------------------------
// Seeding and propagation.

namespace detail {

inline double box_axis_gap(const Box& b, const Vec& x, int a) {
  return std::max({b.lo[a] - x[a], x[a] - b.hi[a], 0.0});
}

/// Nodes within `cells_away` cells (per axis) of the region's bounding boxes.
inline std::vector<std::size_t> nodes_near(const CausalGrid& cg, const Region& seed, double cells_away) {
  const GridGeometry& geo = cg.geometry();
  const ChartDomain& chart = cg.metric().chart();
  std::vector<std::size_t> out;
  for (const auto& b : seed.boxes) {
    // Index window around the box.
    std::vector<int> lo(geo.dim()), hi(geo.dim());
    for (int a = 0; a < geo.dim(); ++a) {
      lo[a] = static_cast<int>(std::floor((b.lo[a] - geo.bounds.lo[a]) / geo.cell(a) - cells_away - 1));
      hi[a] = static_cast<int>(std::ceil((b.hi[a] - geo.bounds.lo[a]) / geo.cell(a) + cells_away + 1));
      if (!geo.periodic[a]) {
        lo[a] = std::max(lo[a], 0);
        hi[a] = std::min(hi[a], geo.cells[a] - 1);
      } else if (hi[a] - lo[a] + 1 > geo.cells[a]) {
        lo[a] = 0;
        hi[a] = geo.cells[a] - 1;
      }
      if (lo[a] > hi[a]) return out;
    }
    std::vector<int> i = lo;
    while (true) {
      std::vector<int> w = i;
      for (int a = 0; a < geo.dim(); ++a)
        if (geo.periodic[a]) w[a] = ((w[a] % geo.cells[a]) + geo.cells[a]) % geo.cells[a];
      const Vec x = geo.center(w);
      bool ok = true;
      for (int a = 0; a < geo.dim() && ok; ++a) {
        double gap;
        if (geo.periodic[a]) {
          const double p = chart.period(a);
          const double c = 0.5 * (b.lo[a] + b.hi[a]);
          const double xx = c + std::remainder(x[a] - c, p);
          gap = std::max({b.lo[a] - xx, xx - b.hi[a], 0.0});
        } else {
          gap = box_axis_gap(b, x, a);
        }
        ok = gap <= cells_away * geo.cell(a) * (1.0 + 1e-12);
      }
      if (ok) out.push_back(geo.index(w));
      int a = geo.dim() - 1;
      for (; a >= 0 && ++i[a] > hi[a]; --a) i[a] = lo[a];
      if (a < 0) break;
    }
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

inline std::string describe(const Region& r) {
  std::string s;
  for (const auto& b : r.boxes) {
    if (!s.empty()) s += "+";
    s += "[" + fmt_vec(b.lo) + ";" + fmt_vec(b.hi) + "]";
  }
  return s;
}

}  // namespace detail

/// Seed nodes of a reach computation. Over mode: every node within one cell
/// (per axis) of the seed. Under mode: nodes inside the seed plus nodes
/// reached from the seed's closest point by one accepted straight hop.
inline std::vector<std::size_t> seed_nodes(const CausalGrid& cg, const Region& seed, ReachMode m, TimeDirection dir) {
  std::vector<std::size_t> out;
  if (m == ReachMode::Over) {
    for (std::size_t k : detail::nodes_near(cg, seed, 1.0))
      if (!cg.blocked(k)) out.push_back(k);
    return out;
  }
  const auto& geo = cg.geometry();
  const ChartDomain& chart = cg.metric().chart();
  for (std::size_t k : detail::nodes_near(cg, seed, cg.spec().stencil)) {
    if (cg.blocked(k)) continue;
    const Vec x = geo.center(k);
    if (seed.contains(x)) {
      out.push_back(k);
      continue;
    }
    for (const auto& b : seed.boxes) {
      Vec c = b.clamp(x);
      // Closest point on the minimal-image copy of the node.
      Vec xl = x;
      for (int a = 0; a < geo.dim(); ++a)
        if (geo.periodic[a]) {
          const double mid = 0.5 * (b.lo[a] + b.hi[a]);
          xl[a] = mid + std::remainder(x[a] - mid, chart.period(a));
          c[a] = std::clamp(xl[a], b.lo[a], b.hi[a]);
        }
      if (!chart.in_domain(c)) continue;
      if (cg.hop_ok(c, xl, m, dir)) {
        out.push_back(k);
        break;
      }
    }
  }
  return out;
}

/// Fixed point of frontier propagation from the seeds along accepted steps
/// (reversed for the past). With a finite horizon, Dijkstra on step h-length
/// caps path length. `allowed` restricts the node set when non-null.
inline ReachSet propagate(const CausalGrid& cg, const std::vector<std::size_t>& seeds, ReachMode m, TimeDirection dir,
                          double horizon = kInf, const std::vector<std::uint8_t>* allowed = nullptr,
                          const std::vector<double>* seed_dist = nullptr) {
  if (!(horizon > 0.0)) throw InvalidArgument("horizon must be positive");
  ReachSet r;
  r.grid = cg.geometry();
  r.mode = m;
  r.direction = dir;
  r.metric_id = cg.metric().id();
  const std::size_t N = cg.size();
  r.cells.assign(N, 0);
  const auto& offs = cg.offsets();
  auto ok = [&](std::size_t k) { return !cg.blocked(k) && (!allowed || (*allowed)[k]); };
  const int sign = dir == TimeDirection::Future ? 1 : -1;
  auto for_each_step = [&](std::size_t u, auto&& fn) {
    for (std::size_t j = 0; j < offs.size(); ++j) {
      const auto w = cg.target(u, j, sign);
      if (!w || !ok(*w)) continue;
      // Past steps are future steps read backwards: w -> u must be accepted.
      const bool acc = dir == TimeDirection::Future ? cg.accepts(u, j, m) : cg.accepts(*w, j, m);
      if (acc) fn(*w, offs[j].h_length);
    }
  };

  if (horizon == kInf) {
    std::vector<std::size_t> frontier;
    for (std::size_t s : seeds)
      if (ok(s) && !r.cells[s]) {
        r.cells[s] = 1;
        frontier.push_back(s);
      }
    while (!frontier.empty()) {
      std::vector<std::size_t> next;
      for (std::size_t u : frontier)
        for_each_step(u, [&](std::size_t w, double) {
          if (!r.cells[w]) {
            r.cells[w] = 1;
            next.push_back(w);
          }
        });
      frontier = std::move(next);
    }
    return r;
  }
  std::vector<double> dist(N, kInf);
  using Item = std::pair<double, std::size_t>;
  std::priority_queue<Item, std::vector<Item>, std::greater<>> pq;
  for (std::size_t i = 0; i < seeds.size(); ++i) {
    const std::size_t s = seeds[i];
    const double d0 = seed_dist ? (*seed_dist)[i] : 0.0;
    if (ok(s) && d0 <= horizon && d0 < dist[s]) {
      dist[s] = d0;
      pq.push({d0, s});
    }
  }
  while (!pq.empty()) {
    const auto [d, u] = pq.top();
    pq.pop();
    if (d > dist[u]) continue;
    r.cells[u] = 1;
    for_each_step(u, [&](std::size_t w, double len) {
      const double nd = d + len;
      if (nd <= horizon && nd < dist[w]) {
        dist[w] = nd;
        pq.push({nd, w});
      }
    });
  }
  return r;
}

inline void check_seed(const ChartDomain& chart, const Region& seed) {
  if (seed.empty()) throw InvalidArgument("empty seed region");
  for (const auto& b : seed.boxes) {
    if (b.lo == b.hi && chart.in_obstacle(b.lo)) throw DomainError("seed inside obstacle", b.lo);
    if (!chart.in_bounds(b.center())) throw DomainError("seed outside the chart", b.center());
  }
}

inline ReachSet reach(const CausalGrid& cg, const Region& seed, ReachMode m, TimeDirection dir, double horizon = kInf) {
  const ChartDomain& chart = cg.metric().chart();
  check_seed(chart, seed);
  const auto seeds = seed_nodes(cg, seed, m, dir);
  std::vector<double> d0;
  if (horizon < kInf) {
    // Hop length from the seed; over mode may start at distance zero.
    for (std::size_t k : seeds) {
      const Vec x = cg.geometry().center(k);
      const Vec c = seed.closest_point(x);
      d0.push_back(m == ReachMode::Over ? 0.0 : chart.background().segment_length(c, c + chart.displacement(c, x)));
    }
  }
  ReachSet r = propagate(cg, seeds, m, dir, horizon, nullptr, horizon < kInf ? &d0 : nullptr);
  r.seed = detail::describe(seed);
  return r;
}

inline Region point_region(const Vec& p) { return Region(Box(p, p)); }

inline ReachSet future_reach(const Vec& p, const CausalGrid& cg, ReachMode m, double horizon = kInf) {
  return reach(cg, point_region(p), m, TimeDirection::Future, horizon);
}

inline ReachSet past_reach(const Vec& p, const CausalGrid& cg, ReachMode m, double horizon = kInf) {
  return reach(cg, point_region(p), m, TimeDirection::Past, horizon);
}

inline ReachSet future_reach(const Vec& p, const MetricField& g, const GridSpec& grid, ReachMode m,
                             double horizon = kInf) {
  return future_reach(p, CausalGrid(g, grid), m, horizon);
}

// ---------------------------------------------------------------------------
// Causal diamonds.

enum class DiamondVerdict { CompactAtScale, Noncompact, Inconclusive };

inline const char* to_string(DiamondVerdict v) {
  switch (v) {
    case DiamondVerdict::CompactAtScale: return "compact-at-scale";
    case DiamondVerdict::Noncompact: return "noncompact";
    case DiamondVerdict::Inconclusive: return "inconclusive";
  }
  return "?";
}

struct DiamondReport {
  ReachSet over, under;
  bool bounded = true;
  std::vector<Vec> closure_defect;  ///< cell centers, confirmed under refinement
  DiamondVerdict verdict = DiamondVerdict::CompactAtScale;
};

namespace detail {

/// Cells of the under-mode diamond when obstacles are shrunk by half a cell
/// (paths may pass arbitrarily close to them) that the strict diamond lacks:
/// limit points of J(p,q) outside it. Without q, the same for J+(p).
inline std::vector<std::size_t> graze_only_cells(const CausalGrid& cg, const Vec& p, const std::optional<Vec>& q) {
  const ChartDomain& chart = cg.metric().chart();
  if (chart.obstacles().empty()) return {};
  const auto& geo = cg.geometry();
  std::vector<Box> shrunk;
  for (const auto& o : chart.obstacles()) {
    Box b = o;
    for (int a = 0; a < geo.dim(); ++a) {
      const double s = std::min(0.5 * geo.cell(a), 0.5 * (o.hi[a] - o.lo[a]));
      b.lo[a] += s;
      b.hi[a] -= s;
    }
    shrunk.push_back(b);
  }
  const std::size_t N = cg.size();
  const auto& offs = cg.offsets();
  auto bfs = [&](const Vec& s, TimeDirection dir) {
    std::vector<std::uint8_t> mem(N, 0);
    std::vector<std::size_t> frontier;
    for (std::size_t k : seed_nodes(cg, point_region(s), ReachMode::Under, dir))
      if (!mem[k]) {
        mem[k] = 1;
        frontier.push_back(k);
      }
    const int sign = dir == TimeDirection::Future ? 1 : -1;
    while (!frontier.empty()) {
      std::vector<std::size_t> next;
      for (std::size_t u : frontier)
        for (std::size_t j = 0; j < offs.size(); ++j) {
          const auto w = cg.target(u, j, sign);
          if (!w || mem[*w] || cg.blocked(*w)) continue;
          const std::size_t from = sign > 0 ? u : *w;
          if (!cg.cone_ok(from, j, ReachMode::Under)) continue;
          const Vec a = geo.center(from), b = a + offs[j].disp;
          bool hit = false;
          for (const auto& o : shrunk) hit = hit || o.meets_segment(a, b);
          if (hit) continue;
          mem[*w] = 1;
          next.push_back(*w);
        }
      frontier = std::move(next);
    }
    return mem;
  };
  ReachSet strict = future_reach(p, cg, ReachMode::Under);
  if (q) strict = intersect(strict, past_reach(*q, cg, ReachMode::Under));
  const auto f = bfs(p, TimeDirection::Future);
  const auto b = q ? bfs(*q, TimeDirection::Past) : std::vector<std::uint8_t>(N, 1);
  std::vector<std::size_t> out;
  for (std::size_t k = 0; k < N; ++k)
    if (f[k] && b[k] && !strict.cells[k]) out.push_back(k);
  return out;
}

/// Centers of coarse defect cells that have a fine defect within one
/// coarse cell.
inline std::vector<Vec> confirm_defects(const CausalGrid& cg, const std::vector<std::size_t>& coarse,
                                        const CausalGrid& fg, const std::vector<std::size_t>& fine) {
  const auto& geo = cg.geometry();
  std::vector<std::uint8_t> hit(cg.size(), 0);
  for (std::size_t k : fine) hit[geo.index(geo.locate(fg.geometry().center(k)))] = 1;
  std::vector<Vec> out;
  for (std::size_t k : coarse) {
    const auto i = geo.multi(k);
    bool confirmed = false;
    std::vector<int> o(geo.dim(), -1);
    while (!confirmed) {
      if (auto j = geo.shift(i, o); j && hit[geo.index(*j)]) confirmed = true;
      int a = 0;
      while (a < geo.dim() && ++o[a] > 1) o[a++] = -1;
      if (a == geo.dim()) break;
    }
    if (confirmed) out.push_back(geo.center(k));
  }
  return out;
}

inline GridSpec refined(GridSpec s) {
  for (auto& c : s.cells) c *= 2;
  return s;
}

}  // namespace detail

/// J(p,q) in both modes. Closure defects are cells reachable only along
/// paths that pass within half a cell of an excluded set, kept when a defect
/// persists within one coarse cell at twice the resolution. `fine` is the
/// refined grid; it is built on demand when null.
inline DiamondReport causal_diamond(const Vec& p, const Vec& q, const CausalGrid& cg, const CausalGrid* fine = nullptr) {
  const ChartDomain& chart = cg.metric().chart();
  for (const Vec& x : {p, q})
    if (!chart.in_domain(x)) throw DomainError("diamond endpoint outside the domain", x);
  DiamondReport r;
  r.over = intersect(future_reach(p, cg, ReachMode::Over), past_reach(q, cg, ReachMode::Over));
  r.under = intersect(future_reach(p, cg, ReachMode::Under), past_reach(q, cg, ReachMode::Under));
  const auto& geo = cg.geometry();
  for (std::size_t k : r.over.members())
    if (geo.on_boundary(geo.multi(k))) r.bounded = false;

  const auto coarse = detail::graze_only_cells(cg, p, q);
  if (!coarse.empty()) {
    std::optional<CausalGrid> own;
    if (!fine) fine = &own.emplace(cg.metric(), detail::refined(cg.spec()));
    r.closure_defect = detail::confirm_defects(cg, coarse, *fine, detail::graze_only_cells(*fine, p, q));
  }
  if (!r.bounded) r.verdict = DiamondVerdict::Inconclusive;
  else if (!r.closure_defect.empty()) r.verdict = DiamondVerdict::Noncompact;
  return r;
}

inline DiamondReport causal_diamond(const Vec& p, const Vec& q, const MetricField& g, const GridSpec& spec) {
  for (const Vec& x : {p, q})
    if (!g.chart().in_domain(x)) throw DomainError("diamond endpoint outside the domain", x);
  return causal_diamond(p, q, CausalGrid(g, spec));
}

// ---------------------------------------------------------------------------

/// Removes member cells with a non-member axis neighbor (open at scale).
inline ReachSet erode(const ReachSet& s) {
  ReachSet r = s;
  for (std::size_t k : s.boundary()) r.cells[k] = 0;
  return r;
}

/// Union over the ladder of under-mode reach sets of the narrowed metrics,
/// eroded by one cell.
inline ReachSet open_past_future(const Region& a, const MetricField& g, const std::vector<double>& eps_ladder,
                                 const GridSpec& spec, TimeDirection dir = TimeDirection::Future) {
  if (eps_ladder.empty()) throw InvalidArgument("empty narrowing ladder");
  for (std::size_t i = 0; i < eps_ladder.size(); ++i) {
    if (!(eps_ladder[i] > 0.0)) throw InvalidArgument("narrowing amounts must be positive");
    if (i && !(eps_ladder[i] < eps_ladder[i - 1])) throw InvalidArgument("narrowing ladder must decrease strictly");
  }
  std::optional<ReachSet> acc;
  const SamplingSpec sig{spec.bounds ? *spec.bounds : g.chart().bounds(), 17, 64};
  for (double eps : eps_ladder) {
    const CausalGrid cg(narrow(g, eps, sig), spec);
    ReachSet r = reach(cg, a, ReachMode::Under, dir);
    acc = acc ? unite(*acc, r) : r;
  }
  ReachSet out = erode(*acc);
  out.seed = detail::describe(a);
  out.metric_id = "open(" + g.id() + ")";
  return out;
}

// ---------------------------------------------------------------------------
// Imprisonment.

enum class ImprisonmentKind { Bounded, EvidenceUnbounded, Inconclusive };

inline const char* to_string(ImprisonmentKind k) {
  switch (k) {
    case ImprisonmentKind::Bounded: return "bounded";
    case ImprisonmentKind::EvidenceUnbounded: return "evidence-unbounded";
    case ImprisonmentKind::Inconclusive: return "inconclusive";
  }
  return "?";
}

struct ImprisonmentResult {
  ImprisonmentKind kind = ImprisonmentKind::Bounded;
  double bound = 0.0;         ///< C: longest lattice path plus one cell diagonal
  double lattice_length = 0.0;
  std::optional<CausalCurve> witness;  ///< closed loop (lifted) or the longest path
};

namespace detail {

/// Nodes of a directed cycle in the accepted-step graph restricted to
/// `allowed`, as a list of (node, offset) steps; empty when acyclic.
inline std::vector<std::pair<std::size_t, std::size_t>> find_cycle(const CausalGrid& cg, ReachMode m,
                                                                   const std::vector<std::uint8_t>& allowed) {
  const std::size_t N = cg.size();
  const auto& offs = cg.offsets();
  std::vector<int> indeg(N, 0);
  auto each = [&](std::size_t u, auto&& fn) {
    for (std::size_t j = 0; j < offs.size(); ++j) {
      if (!cg.accepts(u, j, m)) continue;
      const auto w = cg.target(u, j);
      if (w && allowed[*w]) fn(*w, j);
    }
  };
  for (std::size_t u = 0; u < N; ++u)
    if (allowed[u]) each(u, [&](std::size_t w, std::size_t) { ++indeg[w]; });
  std::vector<std::size_t> stack;
  for (std::size_t u = 0; u < N; ++u)
    if (allowed[u] && indeg[u] == 0) stack.push_back(u);
  std::vector<std::uint8_t> done(N, 0);
  while (!stack.empty()) {
    const std::size_t u = stack.back();
    stack.pop_back();
    done[u] = 1;
    each(u, [&](std::size_t w, std::size_t) {
      if (--indeg[w] == 0) stack.push_back(w);
    });
  }
  // Every remaining node has a remaining predecessor; walking predecessors
  // therefore revisits a node. Walk successors within the remainder instead.
  std::size_t start = N;
  for (std::size_t u = 0; u < N; ++u)
    if (allowed[u] && !done[u]) {
      start = u;
      break;
    }
  if (start == N) return {};
  // Restrict to nodes that can still reach the remainder's cycles: follow a
  // successor that is itself unfinished until a node repeats.
  std::vector<long> seen(N, -1);
  std::vector<std::pair<std::size_t, std::size_t>> path;
  std::size_t u = start;
  while (seen[u] < 0) {
    seen[u] = static_cast<long>(path.size());
    std::optional<std::pair<std::size_t, std::size_t>> nxt;
    each(u, [&](std::size_t w, std::size_t j) {
      if (!nxt && !done[w]) nxt = {w, j};
    });
    if (!nxt) return {};  // unreachable: Kahn leaves only nodes on or behind cycles
    path.emplace_back(u, nxt->second);
    u = nxt->first;
  }
  return {path.begin() + seen[u], path.end()};
}

inline CausalCurve loop_curve(const CausalGrid& cg, const std::vector<std::pair<std::size_t, std::size_t>>& steps) {
  std::vector<Vec> v{cg.geometry().center(steps.front().first)};
  for (const auto& [u, j] : steps) v.push_back(v.back() + cg.offsets()[j].disp);
  return CausalCurve::polyline(std::move(v), Orientation::Future, cg.metric().chart().background());
}

}  // namespace detail

/// Longest h-length of causal lattice paths confined to K. Cycles of the
/// under-mode graph are evidence of unbounded length (the witness is the
/// closed loop); otherwise the over-mode graph, which admits more steps,
/// bounds the length by DAG dynamic programming. A cycle that only the over
/// graph has makes the result inconclusive.
inline ImprisonmentResult imprisonment_bound(const Box& k, const CausalGrid& cg) {
  const auto& geo = cg.geometry();
  const std::size_t N = cg.size();
  std::vector<std::uint8_t> allowed(N, 0);
  for (std::size_t u = 0; u < N; ++u) allowed[u] = !cg.blocked(u) && k.contains(geo.center(u));
  ImprisonmentResult res;
  if (auto cyc = detail::find_cycle(cg, ReachMode::Under, allowed); !cyc.empty()) {
    res.kind = ImprisonmentKind::EvidenceUnbounded;
    res.bound = kInf;
    res.witness = detail::loop_curve(cg, cyc);
    return res;
  }
  if (auto cyc = detail::find_cycle(cg, ReachMode::Over, allowed); !cyc.empty()) {
    res.kind = ImprisonmentKind::Inconclusive;
    res.bound = kInf;
    res.witness = detail::loop_curve(cg, cyc);
    return res;
  }
  // Kahn order on the over graph, then longest path.
  const auto& offs = cg.offsets();
  std::vector<int> indeg(N, 0);
  for (std::size_t u = 0; u < N; ++u) {
    if (!allowed[u]) continue;
    for (std::size_t j = 0; j < offs.size(); ++j)
      if (cg.accepts(u, j, ReachMode::Over))
        if (auto w = cg.target(u, j); w && allowed[*w]) ++indeg[*w];
  }
  std::vector<std::size_t> order, stack;
  for (std::size_t u = 0; u < N; ++u)
    if (allowed[u] && indeg[u] == 0) stack.push_back(u);
  while (!stack.empty()) {
    const std::size_t u = stack.back();
    stack.pop_back();
    order.push_back(u);
    for (std::size_t j = 0; j < offs.size(); ++j)
      if (cg.accepts(u, j, ReachMode::Over))
        if (auto w = cg.target(u, j); w && allowed[*w] && --indeg[*w] == 0) stack.push_back(*w);
  }
  std::vector<double> best(N, 0.0);
  std::vector<std::pair<long, std::size_t>> pred(N, {-1, 0});
  std::size_t arg = order.empty() ? 0 : order.front();
  for (std::size_t u : order) {
    if (best[u] > best[arg]) arg = u;
    for (std::size_t j = 0; j < offs.size(); ++j)
      if (cg.accepts(u, j, ReachMode::Over))
        if (auto w = cg.target(u, j); w && allowed[*w] && best[u] + offs[j].h_length > best[*w]) {
          best[*w] = best[u] + offs[j].h_length;
          pred[*w] = {static_cast<long>(u), j};
          if (best[*w] > best[arg]) arg = *w;
        }
  }
  res.lattice_length = order.empty() ? 0.0 : best[arg];
  double diag = 0.0;
  for (int a = 0; a < geo.dim(); ++a) diag += geo.cell(a) * geo.cell(a);
  // A curve in K can run half a cell past the extreme nodes at either end.
  res.bound = res.lattice_length + std::sqrt(diag);
  std::vector<std::size_t> chain{arg};
  std::vector<std::size_t> steps;
  while (pred[chain.back()].first >= 0) {
    steps.push_back(pred[chain.back()].second);
    chain.push_back(static_cast<std::size_t>(pred[chain.back()].first));
  }
  if (chain.size() >= 2) {
    std::vector<Vec> v{geo.center(chain.back())};
    for (auto it = steps.rbegin(); it != steps.rend(); ++it) v.push_back(v.back() + offs[*it].disp);
    res.witness = CausalCurve::polyline(std::move(v), Orientation::Future, cg.metric().chart().background());
  }
  return res;
}

inline ImprisonmentResult imprisonment_bound(const Box& k, const MetricField& g, const GridSpec& spec) {
  return imprisonment_bound(k, CausalGrid(g, spec));
}

// ---------------------------------------------------------------------------
// Cauchy developments.

enum class DevelopmentSide { Future, Past, Both };

/// D+(S): least fixed point of "every over-mode past step from the cell
/// either crosses S or lands in D+(S)". Steps that leave the grid or touch an
/// obstacle end the curve outside S, so cells with such a step never join.
/// The least fixed point also excludes cells on closed causal loops.
inline ReachSet cauchy_development(const Region& s, const CausalGrid& cg, DevelopmentSide side) {
  if (s.empty()) throw InvalidArgument("empty initial set");
  const auto& geo = cg.geometry();
  const ChartDomain& chart = cg.metric().chart();
  const std::size_t N = cg.size();
  const auto& offs = cg.offsets();

  auto one_side = [&](TimeDirection dir) {
    // For D+ we follow past steps; for D- future steps.
    const int sign = dir == TimeDirection::Future ? -1 : 1;
    std::vector<int> pending(N, 0);
    std::vector<std::uint8_t> bad(N, 0), in(N, 0);
    std::vector<std::vector<std::size_t>> waiters(N);
    std::vector<std::size_t> queue;
    for (std::size_t u = 0; u < N; ++u) {
      if (cg.blocked(u)) {
        bad[u] = 1;
        continue;
      }
      const Vec x = geo.center(u);
      if (s.contains(x)) {
        in[u] = 1;
        queue.push_back(u);
        continue;
      }
      for (std::size_t j = 0; j < offs.size() && !bad[u]; ++j) {
        // Step u -> w in the followed direction; obstacles are judged
        // separately below, so only the cone test decides acceptance.
        const Vec a = x, b = x + sign * offs[j].disp;
        const auto w = cg.target(u, j, sign);
        const bool acc = w ? cg.cone_ok(sign > 0 ? u : *w, j, ReachMode::Over)
                           : cg.cone_ok_at(sign > 0 ? a : b, j, ReachMode::Over);
        if (!acc) continue;
        bool meets = false;
        for (const auto& box : s.boxes) meets = meets || box.meets_segment(a, b);
        if (meets && !chart.segment_blocked(a, b, ObstacleRule::Strict)) continue;
        if (!w || cg.blocked(*w) || chart.segment_blocked(a, b, ObstacleRule::Strict)) {
          bad[u] = 1;
          break;
        }
        ++pending[u];
        waiters[*w].push_back(u);
      }
      if (!bad[u] && pending[u] == 0) {
        in[u] = 1;
        queue.push_back(u);
      }
    }
    while (!queue.empty()) {
      const std::size_t w = queue.back();
      queue.pop_back();
      for (std::size_t u : waiters[w])
        if (!bad[u] && !in[u] && --pending[u] == 0) {
          in[u] = 1;
          queue.push_back(u);
        }
    }
    return in;
  };

  ReachSet r;
  r.grid = geo;
  r.mode = ReachMode::Under;
  r.direction = side == DevelopmentSide::Past ? TimeDirection::Past : TimeDirection::Future;
  r.seed = detail::describe(s);
  r.metric_id = "development(" + cg.metric().id() + ")";
  r.cells.assign(N, 0);
  if (side != DevelopmentSide::Past) {
    const auto f = one_side(TimeDirection::Future);
    for (std::size_t k = 0; k < N; ++k) r.cells[k] |= f[k];
  }
  if (side != DevelopmentSide::Future) {
    const auto p = one_side(TimeDirection::Past);
    for (std::size_t k = 0; k < N; ++k) r.cells[k] |= p[k];
  }
  return r;
}

inline ReachSet cauchy_development(const Region& s, const MetricField& g, const GridSpec& spec, DevelopmentSide side) {
  return cauchy_development(s, CausalGrid(g, spec), side);
}

// ---------------------------------------------------------------------------
// Reach files.

inline void write_reach(std::ostream& os, const ReachSet& r) {
  const auto& geo = r.grid;
  os << "reach dims=";
  for (int a = 0; a < geo.dim(); ++a) os << (a ? "x" : "") << geo.cells[a];
  os << " bounds=";
  for (int a = 0; a < geo.dim(); ++a)
    os << (a ? ";" : "") << fmt_double(geo.bounds.lo[a]) << "," << fmt_double(geo.bounds.hi[a]);
  os << " mode=" << to_string(r.mode) << " direction=" << to_string(r.direction) << " periodic=";
  for (int a = 0; a < geo.dim(); ++a) os << (a ? "," : "") << (geo.periodic[a] ? 1 : 0);
  os << "\n";
  // Run-length encoding, row-major: count:flag tokens, 16 per line.
  std::size_t i = 0, tokens = 0;
  while (i < r.cells.size()) {
    std::size_t j = i;
    while (j < r.cells.size() && r.cells[j] == r.cells[i]) ++j;
    os << (j - i) << ":" << int(r.cells[i]) << (++tokens % 16 == 0 ? "\n" : " ");
    i = j;
  }
  os << "\n";
}

inline ReachSet read_reach(std::istream& is) {
  std::string line;
  if (!std::getline(is, line)) throw ParseError("empty reach file", 1, 1);
  auto kv = detail::parse_header(line, "reach", 1);
  for (const char* k : {"dims", "bounds", "mode"})
    if (!kv.count(k)) throw ParseError(std::string("missing header key '") + k + "'", 1, static_cast<int>(line.size()) + 1);
  ReachSet r;
  auto split = [](const std::string& s, char sep) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : s) {
      if (c == sep) {
        out.push_back(cur);
        cur.clear();
      } else {
        cur += c;
      }
    }
    out.push_back(cur);
    return out;
  };
  for (const auto& d : split(kv["dims"].first, 'x'))
    r.grid.cells.push_back(static_cast<int>(detail::parse_number(d, 1, kv["dims"].second)));
  const int n = static_cast<int>(r.grid.cells.size());
  const auto bs = split(kv["bounds"].first, ';');
  if (static_cast<int>(bs.size()) != n) throw ParseError("bounds do not match dims", 1, kv["bounds"].second);
  Vec lo(n), hi(n);
  for (int a = 0; a < n; ++a) {
    const auto lh = split(bs[a], ',');
    if (lh.size() != 2) throw ParseError("bounds need lo,hi per axis", 1, kv["bounds"].second);
    lo[a] = detail::parse_number(lh[0], 1, kv["bounds"].second);
    hi[a] = detail::parse_number(lh[1], 1, kv["bounds"].second);
  }
  r.grid.bounds = Box(lo, hi);
  const std::string& m = kv["mode"].first;
  if (m != "over" && m != "under") throw ParseError("unknown mode '" + m + "'", 1, kv["mode"].second);
  r.mode = m == "over" ? ReachMode::Over : ReachMode::Under;
  r.direction = kv.count("direction") && kv["direction"].first == "past" ? TimeDirection::Past : TimeDirection::Future;
  r.grid.periodic.assign(n, false);
  if (kv.count("periodic")) {
    const auto ps = split(kv["periodic"].first, ',');
    for (int a = 0; a < n && a < static_cast<int>(ps.size()); ++a) r.grid.periodic[a] = ps[a] == "1";
  }
  const std::size_t total = r.grid.size();
  r.cells.reserve(total);
  int lineno = 1;
  while (r.cells.size() < total && std::getline(is, line)) {
    ++lineno;
    for (const auto& [tok, col] : detail::tokens(line)) {
      const auto c = tok.find(':');
      if (c == std::string::npos) throw ParseError("expected count:flag", lineno, col);
      const double cnt = detail::parse_number(tok.substr(0, c), lineno, col);
      const std::string flag = tok.substr(c + 1);
      if (flag != "0" && flag != "1") throw ParseError("flag must be 0 or 1", lineno, col + static_cast<int>(c) + 1);
      if (cnt < 1 || r.cells.size() + static_cast<std::size_t>(cnt) > total)
        throw ParseError("run overflows the grid", lineno, col);
      r.cells.insert(r.cells.end(), static_cast<std::size_t>(cnt), flag == "1" ? 1 : 0);
    }
  }
  if (r.cells.size() != total) throw ParseError("run-length data ends early", lineno, 1);
  return r;
}

/// Plot-ready CSV of boundary cell centers.
inline void write_boundary_csv(std::ostream& os, const ReachSet& r) {
  for (int a = 0; a < r.grid.dim(); ++a) os << (a ? "," : "") << "x" << a;
  os << "\n";
  for (std::size_t k : r.boundary()) os << fmt_vec(r.grid.center(k)) << "\n";
}

}  // namespace lorentz
