#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <vector>

namespace infcone {

using Vec = std::vector<double>;

/// Raised when operand dimensions disagree.
class DimensionMismatch : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Raised when an exact engine is asked for something beyond its supported range.
class CapabilityError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Numeric tolerances shared by the geometric and sampling engines.
struct Tolerance {
  double abs_tol = 1e-6;
  double rel_tol = 1e-6;
  double cone_angle_tol = 1e-6;  // radians

  void validate() const {
    if (!(abs_tol > 0 && rel_tol > 0 && cone_angle_tol > 0)) {
      throw std::invalid_argument("Tolerance: all tolerances must be strictly positive");
    }
  }
  [[nodiscard]] double scaled(double magnitude) const {
    return std::max(abs_tol, rel_tol * std::abs(magnitude));
  }
};

inline double dot(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw DimensionMismatch("dot: dimension mismatch");
  double s = 0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

inline double norm(std::span<const double> a) { return std::sqrt(dot(a, a)); }

inline Vec add(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw DimensionMismatch("add: dimension mismatch");
  Vec r(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) r[i] = a[i] + b[i];
  return r;
}

inline Vec sub(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw DimensionMismatch("sub: dimension mismatch");
  Vec r(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) r[i] = a[i] - b[i];
  return r;
}

inline Vec scale(std::span<const double> a, double s) {
  Vec r(a.begin(), a.end());
  for (auto& x : r) x *= s;
  return r;
}

/// a + s * b
inline Vec axpy(std::span<const double> a, double s, std::span<const double> b) {
  if (a.size() != b.size()) throw DimensionMismatch("axpy: dimension mismatch");
  Vec r(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) r[i] = a[i] + s * b[i];
  return r;
}

inline double distance(std::span<const double> a, std::span<const double> b) {
  return norm(sub(a, b));
}

inline double max_abs(std::span<const double> a) {
  double m = 0;
  for (double x : a) m = std::max(m, std::abs(x));
  return m;
}

/// Unit vector, or the zero vector unchanged when the norm is below `eps`.
inline Vec normalized(std::span<const double> a, double eps = 1e-300) {
  const double n = norm(a);
  if (n <= eps) return Vec(a.size(), 0.0);
  return scale(a, 1.0 / n);
}

inline Vec unit_axis(std::size_t dim, std::size_t i, double sign = 1.0) {
  Vec e(dim, 0.0);
  e[i] = sign;
  return e;
}

/// Angle between two nonzero vectors, in radians.
inline double angle_between(std::span<const double> a, std::span<const double> b) {
  const double na = norm(a);
  const double nb = norm(b);
  if (na == 0 || nb == 0) return 0.0;
  // acos is ill-conditioned near 1; the half-chord form is not.
  const Vec ua = scale(a, 1.0 / na);
  const Vec ub = scale(b, 1.0 / nb);
  const double s = norm(sub(ua, ub));
  const double t = norm(add(ua, ub));
  return 2.0 * std::atan2(s, t);
}

/// Lexicographic comparison with a tolerance on each coordinate.
inline bool lex_less(std::span<const double> a, std::span<const double> b, double tol = 1e-12) {
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a[i] < b[i] - tol) return true;
    if (a[i] > b[i] + tol) return false;
  }
  return false;
}

}  // namespace infcone
