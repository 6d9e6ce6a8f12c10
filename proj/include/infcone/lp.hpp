#pragma once

// Dense two-phase simplex for the small LPs the geometry engines need
// (a few dozen variables and constraints at most). Bland's rule is used
// throughout so degenerate cones and hulls cannot cycle.

#include <cmath>
#include <cstddef>
#include <limits>
#include <vector>

#include "infcone/vec.hpp"

namespace infcone::lp {

enum class Relation { Le, Ge, Eq };
enum class Status { Optimal, Infeasible, Unbounded };

struct Constraint {
  Vec coeffs;
  Relation rel;
  double rhs;
};

/// minimize c.x subject to constraints; variables are >= 0 unless marked free.
struct Problem {
  std::size_t num_vars = 0;
  Vec objective;  // empty means a pure feasibility problem
  std::vector<Constraint> constraints;
  std::vector<bool> free_var;  // empty means all nonnegative

  explicit Problem(std::size_t n) : num_vars(n), objective(n, 0.0), free_var(n, false) {}

  void add(Vec coeffs, Relation rel, double rhs) {
    if (coeffs.size() != num_vars) throw DimensionMismatch("lp::Problem::add: wrong row length");
    constraints.push_back({std::move(coeffs), rel, rhs});
  }
};

struct Result {
  Status status = Status::Infeasible;
  Vec x;
  double objective = 0.0;
};

namespace detail {

class Tableau {
 public:
  Tableau(std::size_t rows, std::size_t cols) : rows_(rows), cols_(cols), a_((rows + 1) * (cols + 1), 0.0) {}

  double& at(std::size_t r, std::size_t c) { return a_[r * (cols_ + 1) + c]; }
  [[nodiscard]] double at(std::size_t r, std::size_t c) const { return a_[r * (cols_ + 1) + c]; }
  // Column `cols_` holds the right-hand side; row `rows_` holds reduced costs.
  double& rhs(std::size_t r) { return at(r, cols_); }
  double& cost(std::size_t c) { return at(rows_, c); }

  void pivot(std::size_t pr, std::size_t pc) {
    const double p = at(pr, pc);
    for (std::size_t c = 0; c <= cols_; ++c) at(pr, c) /= p;
    for (std::size_t r = 0; r <= rows_; ++r) {
      if (r == pr) continue;
      const double f = at(r, pc);
      if (f == 0.0) continue;
      for (std::size_t c = 0; c <= cols_; ++c) at(r, c) -= f * at(pr, c);
    }
  }

  [[nodiscard]] std::size_t rows() const { return rows_; }
  [[nodiscard]] std::size_t cols() const { return cols_; }

 private:
  std::size_t rows_, cols_;
  std::vector<double> a_;
};

// Runs simplex iterations on the current cost row. Columns with
// allowed[c] == false never enter. Returns false when unbounded.
inline bool run_simplex(Tableau& t, std::vector<std::size_t>& basis, const std::vector<bool>& allowed,
                        double eps) {
  for (int iter = 0; iter < 50000; ++iter) {
    std::size_t enter = t.cols();
    for (std::size_t c = 0; c < t.cols(); ++c) {
      if (allowed[c] && t.cost(c) < -eps) {
        enter = c;
        break;
      }
    }
    if (enter == t.cols()) return true;
    std::size_t leave = t.rows();
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t r = 0; r < t.rows(); ++r) {
      const double a = t.at(r, enter);
      if (a > eps) {
        const double ratio = t.rhs(r) / a;
        if (ratio < best - eps || (ratio <= best + eps && leave < t.rows() && basis[r] < basis[leave])) {
          best = ratio;
          leave = r;
        }
      }
    }
    if (leave == t.rows()) return false;
    t.pivot(leave, enter);
    basis[leave] = enter;
  }
  return true;
}

}  // namespace detail

inline Result solve(const Problem& prob, double eps = 1e-10) {
  const std::size_t n = prob.num_vars;
  const std::size_t m = prob.constraints.size();

  // Column layout: [split variables][slack/surplus][artificials]
  std::vector<std::size_t> pos_col(n), neg_col(n, SIZE_MAX);
  std::size_t ncols = 0;
  for (std::size_t j = 0; j < n; ++j) {
    pos_col[j] = ncols++;
    if (!prob.free_var.empty() && prob.free_var[j]) neg_col[j] = ncols++;
  }
  const std::size_t first_slack = ncols;
  std::size_t nslack = 0;
  for (const auto& c : prob.constraints) nslack += c.rel != Relation::Eq;
  const std::size_t first_art = first_slack + nslack;
  const std::size_t total = first_art + m;

  detail::Tableau t(m, total);
  std::vector<std::size_t> basis(m);
  std::vector<bool> is_art(total, false);

  std::size_t slack = first_slack;
  for (std::size_t i = 0; i < m; ++i) {
    const auto& con = prob.constraints[i];
    const double sgn = con.rhs < 0 ? -1.0 : 1.0;
    for (std::size_t j = 0; j < n; ++j) {
      t.at(i, pos_col[j]) = sgn * con.coeffs[j];
      if (neg_col[j] != SIZE_MAX) t.at(i, neg_col[j]) = -sgn * con.coeffs[j];
    }
    if (con.rel != Relation::Eq) {
      const double s = (con.rel == Relation::Le ? 1.0 : -1.0) * sgn;
      t.at(i, slack++) = s;
    }
    t.rhs(i) = sgn * con.rhs;
    t.at(i, first_art + i) = 1.0;
    is_art[first_art + i] = true;
    basis[i] = first_art + i;
  }

  // Phase 1: minimize the sum of artificials.
  for (std::size_t c = 0; c <= total; ++c) t.cost(c) = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t c = 0; c < total; ++c) {
      if (!is_art[c]) t.cost(c) -= t.at(i, c);
    }
    t.cost(total) -= t.rhs(i);
  }
  std::vector<bool> allowed(total, true);
  detail::run_simplex(t, basis, allowed, eps);

  double scale_rhs = 1.0;
  for (const auto& c : prob.constraints) scale_rhs = std::max(scale_rhs, std::abs(c.rhs));
  Result res;
  if (-t.cost(total) > 1e-8 * scale_rhs) {
    res.status = Status::Infeasible;
    return res;
  }
  // Drive remaining artificials out of the basis where possible.
  for (std::size_t r = 0; r < m; ++r) {
    if (!is_art[basis[r]]) continue;
    for (std::size_t c = 0; c < first_art; ++c) {
      if (std::abs(t.at(r, c)) > 1e-9) {
        t.pivot(r, c);
        basis[r] = c;
        break;
      }
    }
  }
  for (std::size_t c = first_art; c < total; ++c) allowed[c] = false;

  // Phase 2.
  std::vector<double> cost(total, 0.0);
  if (!prob.objective.empty()) {
    for (std::size_t j = 0; j < n; ++j) {
      cost[pos_col[j]] = prob.objective[j];
      if (neg_col[j] != SIZE_MAX) cost[neg_col[j]] = -prob.objective[j];
    }
  }
  for (std::size_t c = 0; c < total; ++c) t.cost(c) = cost[c];
  t.cost(total) = 0.0;
  for (std::size_t r = 0; r < m; ++r) {
    const double cb = cost[basis[r]];
    if (cb == 0.0) continue;
    for (std::size_t c = 0; c <= total; ++c) t.cost(c) -= cb * t.at(r, c);
  }
  if (!detail::run_simplex(t, basis, allowed, eps)) {
    res.status = Status::Unbounded;
    return res;
  }

  std::vector<double> col_value(total, 0.0);
  for (std::size_t r = 0; r < m; ++r) col_value[basis[r]] = t.rhs(r);
  res.x.assign(n, 0.0);
  for (std::size_t j = 0; j < n; ++j) {
    res.x[j] = col_value[pos_col[j]];
    if (neg_col[j] != SIZE_MAX) res.x[j] -= col_value[neg_col[j]];
  }
  res.objective = 0.0;
  if (!prob.objective.empty()) {
    for (std::size_t j = 0; j < n; ++j) res.objective += prob.objective[j] * res.x[j];
  }
  res.status = Status::Optimal;
  return res;
}

}  // namespace infcone::lp
