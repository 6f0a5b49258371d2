// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "lorentz/core.hpp"

#include <algorithm>
#include <functional>
#include <memory>
#include <optional>

namespace lorentz {

/// Closed axis-aligned box. Degenerate axes (lo == hi) model slits and
/// deleted points.
struct Box {
  Vec lo, hi;

  Box() = default;
  Box(Vec lo_, Vec hi_) : lo(std::move(lo_)), hi(std::move(hi_)) {
    if (lo.size() != hi.size()) throw InvalidArgument("box corners differ in dimension");
    for (Eigen::Index i = 0; i < lo.size(); ++i)
      if (!(lo[i] <= hi[i])) throw InvalidArgument("box has an empty interval on axis " + std::to_string(i));
  }

  static Box around(const Vec& center, double half_width) {
    return Box(center.array() - half_width, center.array() + half_width);
  }

  int dim() const { return static_cast<int>(lo.size()); }
  Vec center() const { return 0.5 * (lo + hi); }
  Vec extent() const { return hi - lo; }

  bool contains(const Vec& x, double tol = 0.0) const {
    for (Eigen::Index i = 0; i < lo.size(); ++i)
      if (x[i] < lo[i] - tol || x[i] > hi[i] + tol) return false;
    return true;
  }

  bool contains(const Box& other) const { return contains(other.lo) && contains(other.hi); }

  Vec clamp(const Vec& x) const { return x.cwiseMax(lo).cwiseMin(hi); }

  /// Parameter interval [s0, s1] of the part of the segment a + s (b - a),
  /// s in [0,1], inside the box, or nullopt when they do not meet.
  std::optional<std::pair<double, double>> clip(const Vec& a, const Vec& b) const {
    double s0 = 0.0, s1 = 1.0;
    for (Eigen::Index i = 0; i < lo.size(); ++i) {
      const double d = b[i] - a[i];
      if (d == 0.0) {
        if (a[i] < lo[i] || a[i] > hi[i]) return std::nullopt;
        continue;
      }
      double t0 = (lo[i] - a[i]) / d, t1 = (hi[i] - a[i]) / d;
      if (t0 > t1) std::swap(t0, t1);
      s0 = std::max(s0, t0);
      s1 = std::min(s1, t1);
      if (s0 > s1) return std::nullopt;
    }
    return std::make_pair(s0, s1);
  }

  bool meets_segment(const Vec& a, const Vec& b) const { return clip(a, b).has_value(); }

  /// True when the segment meets the relative interior of the box: open on
  /// nondegenerate axes, the hyperplane itself on degenerate ones. A segment
  /// that only grazes a corner or the tip of a slit does not.
  bool meets_segment_interior(const Vec& a, const Vec& b) const {
    Vec lo2 = lo, hi2 = hi;
    for (Eigen::Index i = 0; i < lo.size(); ++i) {
      const double w = hi[i] - lo[i];
      if (w > 0.0) {
        const double shrink = 1e-9 * std::max(w, 1.0);
        lo2[i] += shrink;
        hi2[i] -= shrink;
      }
    }
    // A degenerate box is its own relative interior only in its nondegenerate
    // directions; shrinking them excludes the boundary (tips, corners).
    Box inner;
    inner.lo = lo2;
    inner.hi = hi2;
    return inner.meets_segment(a, b);
  }

  double distance(const Vec& x) const { return (x - clamp(x)).norm(); }
};

/// Background complete Riemannian metric h. Identity unless a form field is
/// supplied.
class RiemannianBackground {
 public:
  using FormFn = std::function<Form(const Vec&)>;

  RiemannianBackground() = default;
  explicit RiemannianBackground(FormFn f) : form_(std::move(f)) {}

  bool is_identity() const { return !form_; }

  Form form(const Vec& x) const {
    if (!form_) return Form::Identity(x.size(), x.size());
    return form_(x);
  }

  double norm(const Vec& x, const Vec& v) const {
    if (!form_) return v.norm();
    return std::sqrt(std::max(0.0, quadratic(form_(x), v)));
  }

  /// h-length of the straight segment a -> b, midpoint rule (exact for
  /// constant h).
  double segment_length(const Vec& a, const Vec& b) const {
    const Vec d = b - a;
    if (!form_) return d.norm();
    return norm(0.5 * (a + b), d);
  }

  /// Smallest eigenvalue of h(x); used to turn Frobenius bounds into
  /// h-relative bounds.
  double min_eigenvalue(const Vec& x) const {
    if (!form_) return 1.0;
    Eigen::SelfAdjointEigenSolver<Form> es(form_(x), Eigen::EigenvaluesOnly);
    return es.eigenvalues()[0];
  }

 private:
  FormFn form_;
};

/// How segments interact with excluded obstacle sets.
enum class ObstacleRule {
  Strict,  ///< any contact with the closed obstacle blocks the segment
  Graze,   ///< only contact with the relative interior blocks it
};

/// The coordinate chart standing in for the manifold: a box with optional
/// periodic axes and excluded closed obstacles. Axis 0 is conventionally the
/// time coordinate.
class ChartDomain {
 public:
  ChartDomain(Box bounds, std::vector<bool> periodic = {}, std::vector<Box> obstacles = {},
              RiemannianBackground background = {})
      : bounds_(std::move(bounds)),
        periodic_(std::move(periodic)),
        obstacles_(std::move(obstacles)),
        background_(std::move(background)) {
    const int n = bounds_.dim();
    if (n < 2) throw InvalidArgument("chart dimension must be at least 2");
    if (n > kMaxDim) throw InvalidArgument("chart dimension exceeds " + std::to_string(kMaxDim));
    if (periodic_.empty()) periodic_.assign(n, false);
    if (static_cast<int>(periodic_.size()) != n) throw InvalidArgument("periodic flags do not match dimension");
    for (int i = 0; i < n; ++i)
      if (!(bounds_.hi[i] > bounds_.lo[i])) throw InvalidArgument("chart bounds must be nonempty intervals");
    for (const auto& o : obstacles_) {
      if (o.dim() != n) throw InvalidArgument("obstacle dimension mismatch");
      if (!bounds_.contains(o)) throw InvalidArgument("obstacle not contained in chart bounds");
    }
  }

  int dim() const { return bounds_.dim(); }
  const Box& bounds() const { return bounds_; }
  const std::vector<bool>& periodic() const { return periodic_; }
  bool periodic(int axis) const { return periodic_[axis]; }
  bool any_periodic() const { return std::find(periodic_.begin(), periodic_.end(), true) != periodic_.end(); }
  const std::vector<Box>& obstacles() const { return obstacles_; }
  const RiemannianBackground& background() const { return background_; }
  double period(int axis) const { return bounds_.hi[axis] - bounds_.lo[axis]; }

  /// Maps periodic coordinates into [lo, hi).
  Vec wrap(const Vec& x) const {
    Vec y = x;
    for (int i = 0; i < dim(); ++i) {
      if (!periodic_[i]) continue;
      const double p = period(i);
      double r = std::fmod(y[i] - bounds_.lo[i], p);
      if (r < 0) r += p;
      y[i] = bounds_.lo[i] + r;
    }
    return y;
  }

  /// Minimal-image displacement y - x.
  Vec displacement(const Vec& x, const Vec& y) const {
    Vec d = y - x;
    for (int i = 0; i < dim(); ++i) {
      if (!periodic_[i]) continue;
      const double p = period(i);
      d[i] -= p * std::round(d[i] / p);
    }
    return d;
  }

  double distance(const Vec& x, const Vec& y) const {
    const Vec d = displacement(x, y);
    return background_.norm(x + 0.5 * d, d);
  }

  bool in_bounds(const Vec& x, double tol = 1e-12) const {
    for (int i = 0; i < dim(); ++i) {
      if (periodic_[i]) continue;
      if (x[i] < bounds_.lo[i] - tol || x[i] > bounds_.hi[i] + tol) return false;
    }
    return true;
  }

  bool in_obstacle(const Vec& x) const {
    const Vec w = wrap(x);
    for (const auto& o : obstacles_)
      if (o.contains(w)) return true;
    return false;
  }

  bool in_domain(const Vec& x) const { return in_bounds(x) && !in_obstacle(x); }

  /// Does the straight segment a -> b (lifted coordinates) touch an obstacle?
  /// A positive clearance inflates the obstacles under the strict rule.
  bool segment_blocked(const Vec& a, const Vec& b, ObstacleRule rule = ObstacleRule::Strict,
                       double clearance = 0.0) const {
    if (obstacles_.empty()) return false;
    // Shift the segment so its start lies in the fundamental domain, then test
    // against obstacle images one period either side on periodic axes.
    const Vec a0 = wrap(a);
    const Vec b0 = a0 + (b - a);
    std::vector<Vec> shifts{Vec::Zero(dim())};
    for (int i = 0; i < dim(); ++i) {
      if (!periodic_[i]) continue;
      const std::size_t m = shifts.size();
      for (std::size_t k = 0; k < m; ++k)
        for (double s : {-1.0, 1.0}) {
          Vec t = shifts[k];
          t[i] += s * period(i);
          shifts.push_back(t);
        }
    }
    for (const auto& ob : obstacles_) {
      const Box o = rule == ObstacleRule::Strict && clearance > 0.0
                        ? Box((ob.lo.array() - clearance).matrix(), (ob.hi.array() + clearance).matrix())
                        : ob;
      for (const auto& s : shifts) {
        const Vec pa = a0 - s, pb = b0 - s;
        const bool hit = rule == ObstacleRule::Strict ? o.meets_segment(pa, pb) : o.meets_segment_interior(pa, pb);
        if (hit) return true;
      }
    }
    return false;
  }

  /// Diameter of the chart in the background metric (straight diagonal).
  double diameter() const {
    Vec lo = bounds_.lo, hi = bounds_.hi;
    for (int i = 0; i < dim(); ++i)
      if (periodic_[i]) hi[i] = lo[i] + 0.5 * period(i);
    return background_.segment_length(lo, hi);
  }

 private:
  Box bounds_;
  std::vector<bool> periodic_;
  std::vector<Box> obstacles_;
  RiemannianBackground background_;
};

/// A finite union of closed boxes (degenerate boxes allowed), optionally
/// minus the chart obstacles.
struct Region {
  std::vector<Box> boxes;

  Region() = default;
  explicit Region(Box b) { boxes.push_back(std::move(b)); }
  explicit Region(std::vector<Box> bs) : boxes(std::move(bs)) {}

  bool empty() const { return boxes.empty(); }

  bool contains(const Vec& x, double tol = 0.0) const {
    return std::any_of(boxes.begin(), boxes.end(), [&](const Box& b) { return b.contains(x, tol); });
  }

  /// Closest point of the region to x (Euclidean in coordinates).
  Vec closest_point(const Vec& x) const {
    Vec best;
    double bd = kInf;
    for (const auto& b : boxes) {
      Vec c = b.clamp(x);
      const double d = (c - x).squaredNorm();
      if (d < bd) {
        bd = d;
        best = c;
      }
    }
    return best;
  }

  double distance(const Vec& x) const {
    double d = kInf;
    for (const auto& b : boxes) d = std::min(d, b.distance(x));
    return d;
  }
};

/// A regular sampling of a box: points_per_axis^n points including the
/// corners (a single point samples the center), plus a direction count per
/// point for routines that sample unit vectors.
struct SamplingSpec {
  Box region;
  int points_per_axis = 9;
  int directions = 64;

  std::vector<Vec> points() const {
    const int n = region.dim();
    const int m = std::max(1, points_per_axis);
    std::vector<Vec> out;
    std::vector<int> idx(n, 0);
    while (true) {
      Vec x(n);
      for (int i = 0; i < n; ++i) {
        const double f = m == 1 ? 0.5 : static_cast<double>(idx[i]) / (m - 1);
        x[i] = region.lo[i] + f * (region.hi[i] - region.lo[i]);
      }
      out.push_back(x);
      int k = 0;
      while (k < n && ++idx[k] == m) idx[k++] = 0;
      if (k == n) break;
    }
    return out;
  }

  /// Spacing between neighboring sample points (largest over axes).
  double spacing() const {
    const int m = std::max(1, points_per_axis);
    if (m == 1) return region.extent().maxCoeff();
    return region.extent().maxCoeff() / (m - 1);
  }
};

}  // namespace lorentz
