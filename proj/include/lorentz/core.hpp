// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace lorentz {

// Charts are low dimensional; fixed maximum storage keeps Eigen off the heap
// in the inner loops of the grid sweeps.
inline constexpr int kMaxDim = 4;

using Vec = Eigen::Matrix<double, Eigen::Dynamic, 1, 0, kMaxDim, 1>;
using Form = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, 0, kMaxDim, kMaxDim>;

inline constexpr double kInf = std::numeric_limits<double>::infinity();

/// Default absolute tolerance on g(v,v) for h-unit vectors.
inline constexpr double kNullTolerance = 1e-9;

inline Vec make_vec(std::initializer_list<double> xs) {
  Vec v(static_cast<Eigen::Index>(xs.size()));
  Eigen::Index i = 0;
  for (double x : xs) v[i++] = x;
  return v;
}

inline Vec zero_vec(int n) { return Vec::Zero(n); }

inline Vec unit_vec(int n, int axis) {
  Vec v = Vec::Zero(n);
  v[axis] = 1.0;
  return v;
}

inline double bilinear(const Form& g, const Vec& x, const Vec& y) { return x.dot(g * y); }
inline double quadratic(const Form& g, const Vec& x) { return x.dot(g * x); }

/// ASCII decimal with 17 significant digits; round-trips every double.
inline std::string fmt_double(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

inline std::string fmt_vec(const Vec& v, const char* sep = ",") {
  std::string out;
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    if (i) out += sep;
    out += fmt_double(v[i]);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Errors. Every failure mode named by an operation contract has its own type
// so callers can branch on it; witnesses travel with the exception.

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InvalidArgument : public Error {
 public:
  using Error::Error;
};

class DomainError : public Error {
 public:
  DomainError(const std::string& what, Vec where) : Error(what), where_(std::move(where)) {}
  const Vec& where() const { return where_; }

 private:
  Vec where_;
};

class SignatureCollapse : public Error {
 public:
  explicit SignatureCollapse(Vec witness)
      : Error("metric lost Lorentzian signature at (" + fmt_vec(witness) + ")"),
        witness_(std::move(witness)) {}
  const Vec& witness() const { return witness_; }

 private:
  Vec witness_;
};

class ConeOrderViolation : public Error {
 public:
  ConeOrderViolation(Vec point, Vec direction)
      : Error("metrics are not cone ordered at (" + fmt_vec(point) + ") along (" +
              fmt_vec(direction) + ")"),
        point_(std::move(point)),
        direction_(std::move(direction)) {}
  const Vec& point() const { return point_; }
  const Vec& direction() const { return direction_; }

 private:
  Vec point_, direction_;
};

class NotCausallyRelated : public Error {
 public:
  using Error::Error;
};

class NoAccumulation : public Error {
 public:
  using Error::Error;
};

class NotConvergent : public Error {
 public:
  using Error::Error;
};

class LipschitzUnbounded : public Error {
 public:
  LipschitzUnbounded(std::size_t index, double lip, double bound)
      : Error("curve " + std::to_string(index) + " has Lipschitz constant " + fmt_double(lip) +
              " above the bound " + fmt_double(bound)),
        index_(index) {}
  std::size_t index() const { return index_; }

 private:
  std::size_t index_;
};

class ParseError : public Error {
 public:
  ParseError(const std::string& what, int line, int column)
      : Error("line " + std::to_string(line) + ", column " + std::to_string(column) + ": " + what),
        message_(what),
        line_(line),
        column_(column) {}
  int line() const { return line_; }
  int column() const { return column_; }
  /// The complaint without the position prefix.
  const std::string& message() const { return message_; }

 private:
  std::string message_;
  int line_, column_;
};

/// Three-way outcome used by the ladder diagnostics. A pass is evidence at
/// the given resolution; a fail always carries a re-checkable witness.
enum class Verdict { Pass, Fail, Inconclusive };

inline const char* to_string(Verdict v) {
  switch (v) {
    case Verdict::Pass: return "pass-at-scale";
    case Verdict::Fail: return "fail";
    case Verdict::Inconclusive: return "inconclusive";
  }
  return "?";
}

}  // namespace lorentz
