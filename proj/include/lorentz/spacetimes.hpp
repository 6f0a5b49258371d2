// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "lorentz/metric.hpp"

namespace lorentz {

inline std::shared_ptr<const ChartDomain> make_chart(Box bounds, std::vector<bool> periodic = {},
                                                     std::vector<Box> obstacles = {}) {
  return std::make_shared<const ChartDomain>(std::move(bounds), std::move(periodic), std::move(obstacles));
}

inline Box cube(int n, double lo, double hi) { return Box(Vec::Constant(n, lo), Vec::Constant(n, hi)); }

inline Form minkowski_form(int n) {
  Form g = Form::Identity(n, n);
  g(0, 0) = -1.0;
  return g;
}

/// eta = -dt^2 + sum dx_i^2 on the given chart, T = d/dt.
inline MetricField minkowski(std::shared_ptr<const ChartDomain> chart, std::string id = "minkowski") {
  const int n = chart->dim();
  return constant_metric(std::move(chart), minkowski_form(n), unit_vec(n, 0), std::move(id));
}

/// -dt^2 + sum dx_i^2 / c(x)^2 with c = 1 + beta |x|^alpha: coordinate cone
/// speed c opens up away from the axis with a Hoelder (not Lipschitz) kink
/// at x = 0 for alpha < 1.
inline MetricField bubble_metric(std::shared_ptr<const ChartDomain> chart, double alpha = 0.5, double beta = 0.5) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw InvalidArgument("bubble exponent must lie in (0,1)");
  if (!(beta > 0.0)) throw InvalidArgument("bubble amplitude must be positive");
  const int n = chart->dim();
  auto eval = [n, alpha, beta](const Vec& x) -> Form {
    const double r = x.tail(n - 1).norm();
    const double c = 1.0 + beta * std::pow(r, alpha);
    Form g = Form::Identity(n, n) / (c * c);
    g(0, 0) = -1.0;
    return g;
  };
  // |1/c(x)^2 - 1/c(y)^2| <= 2 |c(x) - c(y)| <= 2 beta |x - y|^alpha.
  return MetricField(
      std::move(chart), eval, [n](const Vec&) { return unit_vec(n, 0); }, Modulus::holder(2.0 * beta, alpha),
      "bubble_metric(alpha=" + fmt_double(alpha) + ",beta=" + fmt_double(beta) + ")");
}

/// Omega^2 eta with Omega^2 = 1 + a sin(x_1) cos(t): the cones of eta.
inline MetricField conformal_scaled(std::shared_ptr<const ChartDomain> chart, double a = 0.5) {
  if (!(std::abs(a) < 1.0)) throw InvalidArgument("conformal amplitude must be below 1");
  const int n = chart->dim();
  const Form eta = minkowski_form(n);
  return MetricField(
      std::move(chart), [eta, a](const Vec& x) -> Form { return (1.0 + a * std::sin(x[1]) * std::cos(x[0])) * eta; },
      [n](const Vec&) { return unit_vec(n, 0); }, Modulus::lipschitz(std::abs(a) * std::sqrt(2.0)),
      "conformal_scaled(a=" + fmt_double(a) + ")");
}

/// 2D Minkowski rotated by theta(t) = theta_max * s(t), s a C^1 bump equal
/// to 1 on |t| <= band and 0 beyond band + ramp. For theta > pi/4 the x
/// direction is timelike inside the band.
inline MetricField tilted_cones(std::shared_ptr<const ChartDomain> chart, double theta_max, double band = 0.25,
                                double ramp = 0.25) {
  if (chart->dim() != 2) throw InvalidArgument("tilted cones are two dimensional");
  auto theta = [=](double t) {
    const double u = std::abs(t);
    if (u <= band) return theta_max;
    if (u >= band + ramp) return 0.0;
    const double s = (band + ramp - u) / ramp;
    return theta_max * s * s * (3.0 - 2.0 * s);
  };
  auto eval = [theta](const Vec& x) -> Form {
    const double th = theta(x[0]);
    Form g(2, 2);
    g << -std::cos(2 * th), -std::sin(2 * th), -std::sin(2 * th), std::cos(2 * th);
    return g;
  };
  auto orient = [theta](const Vec& x) {
    const double th = theta(x[0]);
    return make_vec({std::cos(th), std::sin(th)});
  };
  // d/dtheta of the form has operator norm 2; max |theta'| = 1.5 theta_max / ramp.
  return MetricField(std::move(chart), eval, orient, Modulus::lipschitz(3.0 * std::abs(theta_max) / ramp),
                     "tilted_cones(theta=" + fmt_double(theta_max) + ")");
}

}  // namespace lorentz
