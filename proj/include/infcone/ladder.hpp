#pragma once

// Deterministic radius/step/ball ladders that discretize the limits
// "x -> infinity, t -> 0, eps -> 0", and the rung classifier that turns a
// ladder of values into a LimitEstimate.

#include <algorithm>
#include <cmath>
#include <concepts>
#include <cstdint>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "infcone/extended_real.hpp"
#include "infcone/function.hpp"
#include "infcone/vec.hpp"

namespace infcone {

/// Raised when every rung of a ladder is invalid.
class EstimateUnavailable : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Raised when a sampled hypothesis (such as unboundedness of pi(C)) fails.
class PreconditionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

struct LadderConfig {
  std::vector<double> radii{1e1, 1e2, 1e3, 1e4, 1e5, 1e6};
  std::vector<double> steps{1e-1, 1e-2, 1e-3, 1e-4, 1e-5, 1e-6};
  std::vector<double> eps_ball{1.0, 0.3, 0.1, 0.03};
  std::size_t samples_per_shell = 256;
  std::uint64_t seed = 1;
  Tolerance tol;

  void validate() const {
    auto fail = [](const char* m) { throw std::invalid_argument(std::string("LadderConfig: ") + m); };
    if (radii.empty() || steps.empty() || eps_ball.empty()) fail("radii, steps and eps lists must be nonempty");
    for (std::size_t i = 0; i < radii.size(); ++i) {
      if (!(radii[i] > 0)) fail("radii must be positive");
      if (i && !(radii[i] > radii[i - 1])) fail("radii must be strictly increasing");
    }
    for (std::size_t i = 0; i < steps.size(); ++i) {
      if (!(steps[i] > 0)) fail("steps must be positive");
      if (i && !(steps[i] < steps[i - 1])) fail("steps must be strictly decreasing");
    }
    for (std::size_t i = 0; i < eps_ball.size(); ++i) {
      if (!(eps_ball[i] > 0)) fail("eps values must be positive");
      if (i && !(eps_ball[i] < eps_ball[i - 1])) fail("eps values must be strictly decreasing");
    }
    if (samples_per_shell == 0) fail("samples_per_shell must be positive");
    tol.validate();
  }

  /// Steps used with radius rung k: steps[k..k+2], clamped to the list.
  [[nodiscard]] std::vector<double> steps_for_rung(std::size_t k) const {
    std::vector<double> out;
    const std::size_t lo = std::min(k, steps.size() - 1);
    for (std::size_t j = lo; j < std::min(lo + 3, steps.size()); ++j) out.push_back(steps[j]);
    return out;
  }
};

enum class Trend { Converged, DivergingUp, DivergingDown, Oscillating };

inline const char* to_string(Trend t) {
  switch (t) {
    case Trend::Converged: return "converged";
    case Trend::DivergingUp: return "diverging_up";
    case Trend::DivergingDown: return "diverging_down";
    case Trend::Oscillating: return "oscillating";
  }
  return "?";
}

struct RungEntry {
  double radius = 0;
  double eps = 0;  // 0 when the rung has no ball parameter
  bool valid = true;
  ExtendedReal value = 0.0;
  std::string note;
};

/**
 * @brief Result of a ladder estimate.
 *
 * value is withheld when the trend is oscillating. A finite value always
 * comes with a converged trend whose last two rung values agree within
 * max(abs_tol, rel_tol |value|); an infinite value needs monotone growth by
 * a factor of at least 10 over three rungs, or overflow.
 */
struct LimitEstimate {
  std::optional<ExtendedReal> value;
  Trend trend = Trend::Oscillating;
  std::vector<RungEntry> rung_values;
  double error_bar = 0;
  std::vector<std::string> notes;

  [[nodiscard]] bool is_finite() const { return value && value->is_finite(); }
  [[nodiscard]] bool is_pos_inf() const { return value && value->is_pos_inf(); }
  [[nodiscard]] bool is_neg_inf() const { return value && value->is_neg_inf(); }
};

inline constexpr long double kLongInf = std::numeric_limits<long double>::infinity();

namespace detail {

inline bool overflows(long double v) { return std::abs(v) > static_cast<long double>(std::numeric_limits<double>::max()); }

// Monotone growth by >= 10x with a fixed sign over the last three values.
inline int growth_sign(const std::vector<long double>& v) {
  if (v.size() < 3) return 0;
  const long double a = v[v.size() - 3], b = v[v.size() - 2], c = v[v.size() - 1];
  for (int s : {1, -1}) {
    if (s * a > 0 && s * b >= 10 * s * a && s * c >= 10 * s * b) return s;
  }
  return 0;
}

}  // namespace detail

/**
 * @brief Classifies a ladder of rung values (nullopt = invalid rung).
 */
inline LimitEstimate classify_rungs(const std::vector<std::optional<long double>>& values,
                                    const std::vector<double>& radii, double eps, const Tolerance& tol) {
  LimitEstimate est;
  std::vector<long double> valid;
  for (std::size_t k = 0; k < values.size(); ++k) {
    RungEntry e;
    e.radius = k < radii.size() ? radii[k] : 0.0;
    e.eps = eps;
    if (!values[k]) {
      e.valid = false;
      e.note = "invalid: non-finite function value on the shell";
    } else {
      e.value = to_extended(*values[k]);
      valid.push_back(*values[k]);
    }
    est.rung_values.push_back(std::move(e));
  }
  if (valid.empty()) throw EstimateUnavailable("every rung of the ladder is invalid");
  const std::size_t invalid = values.size() - valid.size();
  if (invalid) est.notes.push_back(std::to_string(invalid) + " rung(s) skipped as invalid");

  const long double last = valid.back();
  // Already infinite (or beyond double range) and not receding.
  if (detail::overflows(last)) {
    const int s = last > 0 ? 1 : -1;
    bool monotone = true;
    for (std::size_t i = valid.size() >= 3 ? valid.size() - 3 : 0; i + 1 < valid.size(); ++i) {
      if (s * valid[i + 1] < s * valid[i]) monotone = false;
    }
    if (monotone) {
      est.value = s > 0 ? ExtendedReal::pos_inf() : ExtendedReal::neg_inf();
      est.trend = s > 0 ? Trend::DivergingUp : Trend::DivergingDown;
      return est;
    }
  }
  if (const int s = detail::growth_sign(valid)) {
    est.value = s > 0 ? ExtendedReal::pos_inf() : ExtendedReal::neg_inf();
    est.trend = s > 0 ? Trend::DivergingUp : Trend::DivergingDown;
    return est;
  }
  if (valid.size() >= 2 && !detail::overflows(valid[valid.size() - 2])) {
    const long double prev = valid[valid.size() - 2];
    const double diff = static_cast<double>(std::abs(last - prev));
    est.error_bar = diff;
    if (diff < tol.scaled(static_cast<double>(last))) {
      est.value = ExtendedReal(static_cast<double>(last));
      est.trend = Trend::Converged;
      return est;
    }
  } else if (valid.size() < 2) {
    est.notes.push_back("a single valid rung cannot establish convergence");
  }
  est.trend = Trend::Oscillating;
  return est;
}

/**
 * @brief Outer limit eps -> 0 over per-eps estimates (eps decreasing).
 *
 * A trailing infinite estimate is taken as the value. Otherwise finite
 * values are extrapolated linearly to eps = 0 from consecutive pairs, and the
 * last two extrapolations must agree under the usual tolerance.
 */
inline LimitEstimate combine_eps(const std::vector<LimitEstimate>& per_eps, const std::vector<double>& eps,
                                 const Tolerance& tol) {
  LimitEstimate out;
  for (const auto& e : per_eps) out.rung_values.insert(out.rung_values.end(), e.rung_values.begin(), e.rung_values.end());
  const auto& tail = per_eps.back();
  if (tail.value && !tail.value->is_finite()) {
    out.value = tail.value;
    out.trend = tail.trend;
    out.notes.push_back("smallest eps rung is infinite");
    return out;
  }
  std::vector<double> vals, es;
  double inner_bar = 0;
  for (std::size_t i = 0; i < per_eps.size(); ++i) {
    if (per_eps[i].is_finite()) {
      vals.push_back(per_eps[i].value->value());
      es.push_back(eps[i]);
      inner_bar = std::max(inner_bar, per_eps[i].error_bar);
    } else {
      vals.clear();
      es.clear();
    }
  }
  if (vals.size() < 2 || !per_eps.back().is_finite()) {
    out.trend = Trend::Oscillating;
    out.notes.push_back("fewer than two converged eps rungs at the tail");
    return out;
  }
  std::vector<double> extrap;
  for (std::size_t i = 0; i + 1 < vals.size(); ++i) {
    const double e1 = es[i], e2 = es[i + 1];
    extrap.push_back(vals[i + 1] + (vals[i + 1] - vals[i]) * e2 / (e1 - e2));
  }
  const double v = extrap.back();
  if (extrap.size() >= 2) {
    const double diff = std::abs(extrap.back() - extrap[extrap.size() - 2]);
    out.error_bar = std::max(diff, inner_bar);
    if (diff >= tol.scaled(v) + inner_bar) {
      out.trend = Trend::Oscillating;
      out.notes.push_back("eps extrapolations disagree");
      return out;
    }
  } else {
    out.error_bar = std::max(std::abs(v - vals.back()), inner_bar);
  }
  out.value = ExtendedReal(v);
  out.trend = Trend::Converged;
  return out;
}

// ---------------------------------------------------------------------------
// Sampling

/// Coordinates (0-based) that are sent to infinity.
struct IndexSet {
  std::vector<std::size_t> coords;

  static IndexSet all(std::size_t n) {
    IndexSet s;
    for (std::size_t i = 0; i < n; ++i) s.coords.push_back(i);
    return s;
  }
  void validate(std::size_t n) const {
    if (coords.empty()) throw std::invalid_argument("IndexSet: must be nonempty");
    for (std::size_t i = 0; i < coords.size(); ++i) {
      if (coords[i] >= n) throw std::invalid_argument("IndexSet: coordinate out of range");
      for (std::size_t j = 0; j < i; ++j) {
        if (coords[j] == coords[i]) throw std::invalid_argument("IndexSet: repeated coordinate");
      }
    }
  }
  [[nodiscard]] Vec project(const Vec& x) const {
    Vec p;
    for (auto c : coords) p.push_back(x[c]);
    return p;
  }
  [[nodiscard]] double pi_norm(const Vec& x) const { return norm(project(x)); }
};

/// Portable uniform/normal draws (std distributions are implementation-defined).
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(seed ^ 0x9E3779B97F4A7C15ULL) { next(); }

  std::uint64_t next() {
    // splitmix64
    std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ULL);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }
  double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }
  double uniform(double a, double b) { return a + (b - a) * uniform(); }
  double normal() {
    const double u1 = std::max(uniform(), 1e-300);
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * 3.14159265358979323846 * u2);
  }

 private:
  std::uint64_t state_;
};

inline std::uint64_t rung_seed(std::uint64_t seed, std::uint64_t stream, std::uint64_t rung) {
  return seed * 0x100000001B3ULL + stream * 0x9E3779B97F4A7C15ULL + rung * 0xD1B54A32D192ED03ULL;
}

/// Unit directions on S^{m-1}: the 2m axis points, then seeded Gaussian directions.
inline std::vector<Vec> shell_directions(std::size_t m, std::size_t count, std::uint64_t seed) {
  std::vector<Vec> out;
  for (std::size_t i = 0; i < m; ++i) {
    out.push_back(unit_axis(m, i, 1.0));
    out.push_back(unit_axis(m, i, -1.0));
  }
  if (m == 1) return out;
  Rng rng(seed);
  if (m == 2) {
    // Golden-angle sequence with a seeded offset.
    const double off = rng.uniform() * 2 * 3.14159265358979323846;
    for (std::size_t k = 0; k < count; ++k) {
      const double a = off + static_cast<double>(k) * 2.39996322972865332;
      out.push_back({std::cos(a), std::sin(a)});
    }
    return out;
  }
  for (std::size_t k = 0; k < count; ++k) {
    Vec u(m);
    for (auto& v : u) v = rng.normal();
    out.push_back(normalized(u));
  }
  return out;
}

/**
 * @brief Points with |pi(x)| in [R, 1.25 R]; coordinates outside I drawn in [-R, R].
 *
 * Thick shells keep the one-dimensional case from collapsing to two points.
 */
inline std::vector<Vec> shell_points(std::size_t n, const IndexSet& idx, double radius, std::size_t count,
                                     std::uint64_t seed) {
  const auto dirs = shell_directions(idx.coords.size(), count, seed);
  Rng rng(seed + 0x51ED);
  std::vector<Vec> out;
  const std::size_t total = std::max(count, dirs.size());
  for (std::size_t k = 0; k < total; ++k) {
    const Vec& u = dirs[k % dirs.size()];
    // Axis points sit exactly on the shell; the rest are spread through its thickness.
    const double r = k < 2 * idx.coords.size() ? radius : radius * (1.0 + 0.25 * rng.uniform());
    Vec x(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) x[i] = rng.uniform(-radius, radius);
    for (std::size_t j = 0; j < idx.coords.size(); ++j) x[idx.coords[j]] = r * u[j];
    out.push_back(std::move(x));
  }
  return out;
}

/// Fixed grid in the closed unit ball: 0, +-e_i, sphere points and half-radius points.
inline std::vector<Vec> unit_ball_grid(std::size_t n) {
  std::vector<Vec> g{Vec(n, 0.0)};
  for (std::size_t i = 0; i < n; ++i) {
    g.push_back(unit_axis(n, i, 1.0));
    g.push_back(unit_axis(n, i, -1.0));
  }
  std::vector<Vec> sphere;
  if (n == 2) {
    for (int k = 0; k < 16; ++k) {
      const double a = (k + 0.5) * 2 * 3.14159265358979323846 / 16;
      sphere.push_back({std::cos(a), std::sin(a)});
    }
  } else if (n >= 3) {
    sphere = shell_directions(n, 24, 77);
    sphere.erase(sphere.begin(), sphere.begin() + static_cast<std::ptrdiff_t>(2 * n));
  }
  for (const auto& s : sphere) g.push_back(s);
  for (std::size_t i = 0; i < n; ++i) {
    g.push_back(unit_axis(n, i, 0.5));
    g.push_back(unit_axis(n, i, -0.5));
  }
  for (const auto& s : sphere) g.push_back(scale(s, 0.5));
  return g;
}

/// Smallest admissible step at x: keeps x + t w resolvable in double precision.
inline double admissible_step(double t, const Vec& x) { return std::max(t, 1e-9 * std::max(1.0, max_abs(x))); }

/// Coarser floor for quotients of projected distances, whose absolute error grows with |x|.
inline double admissible_set_step(double t, const Vec& x) { return std::max(t, 1e-7 * std::max(1.0, max_abs(x))); }

// ---------------------------------------------------------------------------
// Scalar fields

/// Anything with a dimension and an extended-precision value.
template <class F>
concept ScalarField = requires(const F& f, const Vec& x) {
  { f.dim() } -> std::convertible_to<std::size_t>;
  { f.value(x) } -> std::convertible_to<long double>;
};

/// FuncDesc viewed as a scalar field.
struct FunctionField {
  const FuncDesc* f;
  [[nodiscard]] std::size_t dim() const { return f->dim; }
  [[nodiscard]] long double value(const Vec& x) const { return eval_long(*f, x); }
};

}  // namespace infcone
