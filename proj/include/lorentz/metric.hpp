// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "lorentz/chart.hpp"

#include <numbers>
#include <random>

namespace lorentz {

/// Modulus of continuity as a sum of power terms: omega(r) = sum_i C_i r^a_i.
/// A Lipschitz field has a single term with exponent 1; a Hoelder field one
/// with exponent in (0,1). An unknown modulus bounds nothing.
class Modulus {
 public:
  struct Term {
    double constant;
    double exponent;
  };

  static Modulus lipschitz(double constant) { return Modulus({{constant, 1.0}}); }
  static Modulus holder(double constant, double exponent) {
    if (!(exponent > 0.0 && exponent <= 1.0)) throw InvalidArgument("Hoelder exponent must lie in (0,1]");
    return Modulus({{constant, exponent}});
  }
  static Modulus unknown() {
    Modulus m;
    m.known_ = false;
    return m;
  }

  Modulus() = default;
  explicit Modulus(std::vector<Term> terms) : terms_(std::move(terms)) {}

  bool known() const { return known_; }
  const std::vector<Term>& terms() const { return terms_; }

  double operator()(double r) const {
    if (!known_) return kInf;
    double s = 0.0;
    for (const auto& t : terms_) s += t.constant * std::pow(std::max(r, 0.0), t.exponent);
    return s;
  }

  Modulus operator+(const Modulus& o) const {
    if (!known_ || !o.known_) return unknown();
    Modulus m(terms_);
    for (const auto& t : o.terms_) {
      auto it = std::find_if(m.terms_.begin(), m.terms_.end(), [&](const Term& u) { return u.exponent == t.exponent; });
      if (it != m.terms_.end()) it->constant += t.constant;
      else m.terms_.push_back(t);
    }
    return m;
  }

  Modulus scaled(double f) const {
    if (!known_) return *this;
    Modulus m(terms_);
    for (auto& t : m.terms_) t.constant *= std::abs(f);
    return m;
  }

  std::string describe() const {
    if (!known_) return "unknown";
    if (terms_.empty()) return "constant";
    std::string s;
    for (const auto& t : terms_) {
      if (!s.empty()) s += " + ";
      s += fmt_double(t.constant) + "*r^" + fmt_double(t.exponent);
    }
    return s;
  }

 private:
  std::vector<Term> terms_;
  bool known_ = true;
};

// ---------------------------------------------------------------------------
// Pointwise linear algebra relative to the background metric.

/// Eigenvalues of g relative to h (ascending), i.e. of h^{-1/2} g h^{-1/2}.
inline Vec relative_eigenvalues(const Form& g, const Form& h) {
  const Eigen::LLT<Form> llt(h);
  const Form linv = llt.matrixL().solve(Form::Identity(h.rows(), h.cols()));
  const Form m = linv * g * linv.transpose();
  Eigen::SelfAdjointEigenSolver<Form> es(0.5 * (m + m.transpose()), Eigen::EigenvaluesOnly);
  return es.eigenvalues();
}

inline Vec eigenvalues(const Form& g) {
  Eigen::SelfAdjointEigenSolver<Form> es(0.5 * (g + g.transpose()), Eigen::EigenvaluesOnly);
  return es.eigenvalues();
}

/// Operator norm sup |D(X,Y)| over h-unit X, Y; equals the largest
/// eigenvalue magnitude for symmetric D.
inline double relative_operator_norm(const Form& d, const Form& h) {
  const Vec ev = relative_eigenvalues(d, h);
  return std::max(std::abs(ev[0]), std::abs(ev[ev.size() - 1]));
}

inline bool is_lorentzian(const Vec& sorted_eigenvalues, double tol = 1e-12) {
  return sorted_eigenvalues[0] < -tol && (sorted_eigenvalues.size() < 2 || sorted_eigenvalues[1] > tol);
}

/// A g-timelike vector close to `hint`: the hint itself when timelike,
/// otherwise the eigenvector of the negative eigenvalue oriented along it.
inline Vec timelike_direction(const Form& g, const Vec& hint) {
  if (quadratic(g, hint) < 0.0) return hint;
  Eigen::SelfAdjointEigenSolver<Form> es(0.5 * (g + g.transpose()));
  Vec e = es.eigenvectors().col(0);
  if (e.dot(hint) < 0.0) e = -e;
  return e;
}

// ---------------------------------------------------------------------------

/// A continuous Lorentzian metric on a chart together with its time
/// orientation and declared modulus of continuity. Evaluators must be safe
/// for concurrent read-only use; copies share the underlying closures.
class MetricField {
 public:
  using EvalFn = std::function<Form(const Vec&)>;
  using VecFn = std::function<Vec(const Vec&)>;

  MetricField(std::shared_ptr<const ChartDomain> chart, EvalFn eval, VecFn time_orientation, Modulus modulus,
              std::string id)
      : chart_(std::move(chart)),
        eval_(std::move(eval)),
        orient_(std::move(time_orientation)),
        modulus_(std::move(modulus)),
        id_(std::move(id)) {
    if (!chart_) throw InvalidArgument("metric field needs a chart");
  }

  Form operator()(const Vec& x) const { return eval_(chart_->wrap(x)); }
  Vec time_orientation(const Vec& x) const { return orient_(chart_->wrap(x)); }

  const ChartDomain& chart() const { return *chart_; }
  const std::shared_ptr<const ChartDomain>& chart_ptr() const { return chart_; }
  const Modulus& modulus() const { return modulus_; }
  const std::string& id() const { return id_; }
  int dim() const { return chart_->dim(); }

  Form h(const Vec& x) const { return chart_->background().form(chart_->wrap(x)); }

  MetricField with_id(std::string id) const {
    MetricField m = *this;
    m.id_ = std::move(id);
    return m;
  }

  /// Sign of g(v,T): negative for future-directed causal v.
  double time_pairing(const Vec& x, const Vec& v) const { return bilinear((*this)(x), v, time_orientation(x)); }

 private:
  std::shared_ptr<const ChartDomain> chart_;
  EvalFn eval_;
  VecFn orient_;
  Modulus modulus_;
  std::string id_;
};

/// Constant-coefficient metric with constant time orientation.
inline MetricField constant_metric(std::shared_ptr<const ChartDomain> chart, Form g, Vec t, std::string id) {
  return MetricField(
      std::move(chart), [g](const Vec&) { return g; }, [t](const Vec&) { return t; }, Modulus::lipschitz(0.0),
      std::move(id));
}

/// Lorentzian check over a sample of points; throws SignatureCollapse with
/// the first offending point.
inline void verify_signature(const MetricField& g, const std::vector<Vec>& points) {
  for (const auto& x : points) {
    const Form gx = g(x);
    if (!gx.allFinite()) throw Error("non-finite metric entries at (" + fmt_vec(x) + ")");
    if (!is_lorentzian(relative_eigenvalues(gx, g.h(x)))) throw SignatureCollapse(x);
    const Vec t = g.time_orientation(x);
    if (!(quadratic(gx, t) < 0.0)) throw SignatureCollapse(x);
  }
}

/// Smallest |negative eigenvalue| of g relative to h over the samples.
inline double signature_margin(const MetricField& g, const std::vector<Vec>& points) {
  double m = kInf;
  for (const auto& x : points) m = std::min(m, -relative_eigenvalues(g(x), g.h(x))[0]);
  return m;
}

inline SamplingSpec chart_sampling(const ChartDomain& chart, int points_per_axis = 17, int directions = 64) {
  return SamplingSpec{chart.bounds(), points_per_axis, directions};
}

/// g - eps h: strictly wider cones.
inline MetricField widen(const MetricField& g, double eps) {
  if (!(eps > 0.0)) throw InvalidArgument("widening amount must be positive");
  auto base = g;
  return MetricField(
      g.chart_ptr(), [base, eps](const Vec& x) -> Form { return base(x) - eps * base.h(x); },
      [base](const Vec& x) { return base.time_orientation(x); }, g.modulus(),
      "widen(" + g.id() + "," + fmt_double(eps) + ")");
}

namespace detail {
inline MetricField shift_cones(const MetricField& g, double eps, std::string id) {
  auto base = g;
  return MetricField(
      g.chart_ptr(), [base, eps](const Vec& x) -> Form { return base(x) + eps * base.h(x); },
      [base, eps](const Vec& x) {
        const Vec t = base.time_orientation(x);
        return timelike_direction(base(x) + eps * base.h(x), t);
      },
      g.modulus(), std::move(id));
}
}  // namespace detail

/// g + eps h: strictly narrower cones. Verifies the signature on `grid`.
inline MetricField narrow(const MetricField& g, double eps, const SamplingSpec& grid) {
  if (!(eps > 0.0)) throw InvalidArgument("narrowing amount must be positive");
  MetricField out = detail::shift_cones(g, eps, "narrow(" + g.id() + "," + fmt_double(eps) + ")");
  verify_signature(out, grid.points());
  return out;
}

inline MetricField narrow(const MetricField& g, double eps) { return narrow(g, eps, chart_sampling(g.chart())); }

/// Result of a sampled Delta estimate: the supremum over sample points of the
/// pointwise operator norm (a lower estimate of the true sup) and an upper
/// bound inflated by the declared moduli over the sampling gap.
struct DeltaEstimate {
  double lower = 0.0;
  double upper = 0.0;
  Vec argmax;
};

inline DeltaEstimate metric_delta(const MetricField& g1, const MetricField& g2, const SamplingSpec& samples) {
  const ChartDomain& chart = g1.chart();
  for (int i = 0; i < chart.dim(); ++i) {
    if (chart.periodic(i)) continue;
    if (samples.region.lo[i] < chart.bounds().lo[i] - 1e-12 || samples.region.hi[i] > chart.bounds().hi[i] + 1e-12)
      throw DomainError("Delta region outside the chart", samples.region.center());
  }
  DeltaEstimate est;
  est.argmax = samples.region.center();
  for (const auto& x : samples.points()) {
    const Form a = g1(x), b = g2(x);
    if (!a.allFinite() || !b.allFinite()) throw Error("non-finite metric entries at (" + fmt_vec(x) + ")");
    const double d = relative_operator_norm(a - b, g1.h(x));
    if (d > est.lower) {
      est.lower = d;
      est.argmax = x;
    }
  }
  const double gap = 0.5 * samples.spacing() * std::sqrt(static_cast<double>(chart.dim()));
  est.upper = est.lower + g1.modulus()(gap) + g2.modulus()(gap);
  return est;
}

inline DeltaEstimate metric_delta(const MetricField& g1, const MetricField& g2) {
  return metric_delta(g1, g2, chart_sampling(g1.chart()));
}

// ---------------------------------------------------------------------------
// Cone sampling and the cone order.

/// Deterministic unit directions (Euclidean) covering the sphere: evenly
/// spaced on the circle in 2D, a Fibonacci lattice in 3D, seeded Gaussian
/// samples above. Coordinate axes are always included.
inline std::vector<Vec> unit_directions(int n, int count) {
  std::vector<Vec> out;
  for (int i = 0; i < n; ++i) out.push_back(unit_vec(n, i));
  if (n == 2) {
    for (int k = 0; k < count; ++k) {
      const double a = 2.0 * std::numbers::pi * k / count;
      out.push_back(make_vec({std::cos(a), std::sin(a)}));
    }
  } else if (n == 3) {
    const double golden = std::numbers::pi * (3.0 - std::sqrt(5.0));
    for (int k = 0; k < count; ++k) {
      const double z = 1.0 - 2.0 * (k + 0.5) / count;
      const double r = std::sqrt(std::max(0.0, 1.0 - z * z));
      const double phi = golden * k;
      out.push_back(make_vec({z, r * std::cos(phi), r * std::sin(phi)}));
    }
  } else {
    std::mt19937_64 rng(0x5eedULL + static_cast<unsigned>(n));
    std::normal_distribution<double> nd;
    for (int k = 0; k < count; ++k) {
      Vec v(n);
      for (int i = 0; i < n; ++i) v[i] = nd(rng);
      out.push_back(v.normalized());
    }
  }
  return out;
}

enum class ConeClass { Timelike, Null, Spacelike };

/// Discretized lightcone of g at one base point: h-unit directions with
/// their classification and time orientation.
struct ConeSampleSet {
  struct Sample {
    Vec direction;
    ConeClass cls;
    bool future;
    double norm;  // g(v,v)
  };
  Vec base;
  std::vector<Sample> samples;
};

inline ConeClass classify(double gvv, double tol = kNullTolerance) {
  if (gvv < -tol) return ConeClass::Timelike;
  if (gvv <= tol) return ConeClass::Null;
  return ConeClass::Spacelike;
}

namespace detail {
/// Null directions of g in span{T, w} for each sampled w: the roots of
/// g(T + s u, T + s u) = 0. Sampling these exactly is what lets a finite
/// direction set see the boundary of the cone.
inline void append_null_directions(const Form& g, const Vec& t, const std::vector<Vec>& ws, std::vector<Vec>& out) {
  const double a = quadratic(g, t);
  if (!(a < 0.0)) return;
  for (const auto& w : ws) {
    const double b = bilinear(g, t, w);
    const double c = quadratic(g, w);
    if (!(c > 0.0)) continue;
    const double disc = b * b - a * c;
    if (disc < 0.0) continue;
    const double sq = std::sqrt(disc);
    for (double s : {(-b + sq) / c, (-b - sq) / c}) out.push_back(t + s * w);
  }
}
}  // namespace detail

inline ConeSampleSet sample_cone(const MetricField& g, const Vec& x, int directions, double tol = kNullTolerance) {
  const int n = g.dim();
  const Form gx = g(x);
  const Vec t = g.time_orientation(x);
  const RiemannianBackground& h = g.chart().background();
  std::vector<Vec> dirs = unit_directions(n, directions);
  std::vector<Vec> nulls;
  detail::append_null_directions(gx, t, dirs, nulls);
  dirs.insert(dirs.end(), nulls.begin(), nulls.end());
  ConeSampleSet set;
  set.base = x;
  for (const auto& d : dirs) {
    const double len = h.norm(x, d);
    if (!(len > 0.0)) continue;
    for (double sgn : {1.0, -1.0}) {
      const Vec v = sgn * d / len;
      const double q = quadratic(gx, v);
      set.samples.push_back({v, classify(q, tol), bilinear(gx, v, t) < 0.0, q});
    }
  }
  return set;
}

enum class ConeRelation { StrictlyPrecedes, WeaklyPrecedes, Fails };

inline const char* to_string(ConeRelation r) {
  switch (r) {
    case ConeRelation::StrictlyPrecedes: return "strictly-precedes";
    case ConeRelation::WeaklyPrecedes: return "weakly-precedes";
    case ConeRelation::Fails: return "fails";
  }
  return "?";
}

struct ConeOrderResult {
  ConeRelation relation = ConeRelation::StrictlyPrecedes;
  Vec point;      ///< witness base point (Fails) or the tightest point
  Vec direction;  ///< witness g1-causal direction
  double margin = kInf;  ///< min over g1-causal samples of -g2(v,v)
};

inline constexpr int kMinConeDirections = 64;

/// Sampled cone order: g1 < g2 when every g1-causal direction is g2-timelike
/// with margin above tol; g1 <= g2 when g1-causal implies g2-causal within tol.
inline ConeOrderResult cone_precedes(const MetricField& g1, const MetricField& g2, const SamplingSpec& k,
                                     double tol = kNullTolerance, int min_directions = kMinConeDirections) {
  if (k.directions < min_directions)
    throw InvalidArgument("cone comparison needs at least " + std::to_string(min_directions) + " directions");
  const auto points = k.points();
  if (points.empty()) throw InvalidArgument("empty sample set");
  ConeOrderResult res;
  bool strict = true;
  for (const auto& x : points) {
    const Form b = g2(x);
    const ConeSampleSet cone = sample_cone(g1, x, k.directions, tol);
    for (const auto& s : cone.samples) {
      if (s.cls == ConeClass::Spacelike) continue;
      const double q2 = quadratic(b, s.direction);
      if (q2 > tol) {
        res.relation = ConeRelation::Fails;
        res.point = x;
        res.direction = s.direction;
        res.margin = -q2;
        return res;
      }
      if (-q2 < res.margin) {
        res.margin = -q2;
        res.point = x;
        res.direction = s.direction;
      }
      if (!(q2 < -tol)) strict = false;
    }
  }
  res.relation = strict ? ConeRelation::StrictlyPrecedes : ConeRelation::WeaklyPrecedes;
  return res;
}

/// Smallest n0 <= n_max such that family(n) < target on K for every tested
/// n in [n0, n_max]; nullopt when even n_max fails.
template <class Family>
std::optional<int> first_preceding_index(const Family& family, const MetricField& target, const SamplingSpec& k,
                                         int n_max, double tol = kNullTolerance) {
  std::optional<int> n0;
  for (int n = n_max; n >= 1; --n) {
    if (cone_precedes(family(n), target, k, tol).relation != ConeRelation::StrictlyPrecedes) break;
    n0 = n;
  }
  return n0;
}

// ---------------------------------------------------------------------------

namespace detail {
inline Vec clamp_to_chart(const ChartDomain& chart, const Vec& x) {
  Vec y = x;
  for (int i = 0; i < chart.dim(); ++i)
    if (!chart.periodic(i)) y[i] = std::clamp(y[i], chart.bounds().lo[i], chart.bounds().hi[i]);
  return y;
}
}  // namespace detail

/// Grid-kernel average of the form entries: a normalized (1 - |o|^2/r^2)^2
/// kernel over lattice offsets of the grid spacing within `radius`.
/// Verifies the signature on the grid nodes and the sampled Delta against
/// the declared modulus at `radius`.
inline MetricField mollify(const MetricField& g, double radius, const SamplingSpec& grid) {
  const double s = grid.spacing();
  if (!(radius >= s * (1.0 - 1e-12))) throw InvalidArgument("mollification radius below one grid cell");
  const int n = g.dim();
  const int m = static_cast<int>(std::floor(radius / s + 1e-9));
  std::vector<Vec> offsets;
  std::vector<double> weights;
  std::vector<int> idx(n, -m);
  double total = 0.0;
  while (true) {
    Vec o(n);
    for (int i = 0; i < n; ++i) o[i] = idx[i] * s;
    const double q = o.squaredNorm() / (radius * radius);
    if (q < 1.0) {
      const double w = (1.0 - q) * (1.0 - q);
      offsets.push_back(o);
      weights.push_back(w);
      total += w;
    }
    int k = 0;
    while (k < n && ++idx[k] > m) idx[k++] = -m;
    if (k == n) break;
  }
  for (auto& w : weights) w /= total;

  auto base = g;
  auto chart = g.chart_ptr();
  MetricField out(
      g.chart_ptr(),
      [base, chart, offsets, weights](const Vec& x) -> Form {
        Form acc = Form::Zero(x.size(), x.size());
        for (std::size_t k = 0; k < offsets.size(); ++k)
          acc += weights[k] * base(detail::clamp_to_chart(*chart, x + offsets[k]));
        return acc;
      },
      [base](const Vec& x) { return base.time_orientation(x); }, g.modulus(),
      "mollify(" + g.id() + "," + fmt_double(radius) + ")");

  verify_signature(out, grid.points());
  const DeltaEstimate d = metric_delta(g, out, grid);
  const double bound = g.modulus()(radius);
  if (d.lower > bound * (1.0 + 1e-9) + 1e-12)
    throw Error("mollified field deviates by " + fmt_double(d.lower) + " beyond the declared modulus bound " +
                fmt_double(bound) + "; the modulus of " + g.id() + " is wrong");
  return out;
}

}  // namespace lorentz
