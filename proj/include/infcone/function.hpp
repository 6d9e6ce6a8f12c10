#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "infcone/expression.hpp"
#include "infcone/lp.hpp"
#include "infcone/linalg.hpp"
#include "infcone/poly_cone.hpp"
#include "infcone/vec.hpp"

namespace infcone {

/// Declared properties of a function, set by `@` directives in the source.
struct FuncMetadata {
  bool lsc = false;
  bool continuous = false;
  bool finite_valued = false;
};

/**
 * @brief Scalar function over R^n given by an expression.
 *
 * Source grammar: infix arithmetic over x1..xn with + - * / ^ (integer
 * exponent), exp, log, sqrt, sin, cos, abs, min, max, the constant inf and
 * piecewise(cond: expr; ...; else: expr). Conditions are comparisons joined
 * by `and`. Lines starting with `@` are directives: `@dim N`, `@lsc`,
 * `@continuous`, `@finite`. `#` starts a comment.
 */
struct FuncDesc {
  std::size_t dim = 0;
  Expression body;
  FuncMetadata meta;
  std::string source;
};

/// Gradient of the active branch, or no gradient when the point sits at a kink.
struct GradResult {
  Vec point;
  std::optional<Vec> gradient;
  std::string branch_id;

  [[nodiscard]] bool differentiable() const { return gradient.has_value(); }
};

namespace detail {

struct Directives {
  std::optional<std::size_t> dim;
  FuncMetadata meta;
};

// Strips directive lines, keeping line numbering intact.
inline std::string take_directives(const std::string& src, Directives& out) {
  std::istringstream in(src);
  std::string line, body;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto first = line.find_first_not_of(" \t");
    if (first != std::string::npos && line[first] == '@') {
      std::istringstream ls(line.substr(first + 1));
      std::string word;
      ls >> word;
      if (word == "dim") {
        long long d = 0;
        if (!(ls >> d) || d <= 0) throw ParseError("@dim expects a positive integer", lineno, static_cast<int>(first) + 1);
        out.dim = static_cast<std::size_t>(d);
      } else if (word == "lsc") {
        out.meta.lsc = true;
      } else if (word == "continuous") {
        out.meta.continuous = true;
        out.meta.lsc = true;
      } else if (word == "finite") {
        out.meta.finite_valued = true;
      } else {
        throw ParseError("unknown directive '@" + word + "'", lineno, static_cast<int>(first) + 1);
      }
      line.clear();
    }
    if (lineno > 1) body += '\n';
    body += line;
  }
  return body;
}

}  // namespace detail

inline FuncDesc parse_function(const std::string& source, std::optional<std::size_t> dim = std::nullopt) {
  detail::Directives dir;
  const std::string body = detail::take_directives(source, dir);
  if (dim && dir.dim && *dim != *dir.dim) {
    throw ParseError("@dim " + std::to_string(*dir.dim) + " conflicts with requested dimension " + std::to_string(*dim), 1, 1);
  }
  if (!dim) dim = dir.dim;
  FuncDesc f;
  f.body = parse_expression(body, dim);
  f.dim = f.body.dim();
  f.meta = dir.meta;
  f.source = source;
  return f;
}

inline ExtendedReal eval(const FuncDesc& f, const Vec& x) { return eval(f.body, x); }
inline long double eval_long(const FuncDesc& f, const Vec& x) { return eval_long(f.body, x); }

inline GradResult grad(const FuncDesc& f, const Vec& x, double kink_tol = 1e-6) {
  auto g = gradient(f.body, x, kink_tol);
  return GradResult{x, std::move(g.gradient), std::move(g.branch_path)};
}

inline std::optional<double> directional_derivative(const FuncDesc& f, const Vec& x, const Vec& v) {
  return directional_derivative(f.body, x, v);
}

/// Piecewise-affine cells of f, or nullopt when some piece or guard is nonlinear.
inline std::optional<std::vector<AffineCell>> affine_cells(const FuncDesc& f) { return affine_cells(f.body); }

inline bool is_piecewise_affine(const FuncDesc& f) {
  try {
    return affine_cells(f).has_value();
  } catch (const CapabilityError&) {
    return false;
  }
}

namespace detail {

inline FuncDesc combine_functions(const FuncDesc& f1, const FuncDesc* f2, Op op, const std::string& source) {
  if (f2 && f1.dim != f2->dim) throw DimensionMismatch("function dimensions differ");
  Expression e;
  e.set_dim(f1.dim);
  const int a = e.absorb(f1.body);
  Node n;
  n.op = op;
  n.a = a;
  if (f2) n.b = e.absorb(f2->body);
  e.set_root(e.push(std::move(n)));
  FuncDesc out;
  out.dim = f1.dim;
  out.body = std::move(e);
  out.source = source;
  return out;
}

}  // namespace detail

/// f1 + f2
inline FuncDesc add_functions(const FuncDesc& f1, const FuncDesc& f2) {
  auto out = detail::combine_functions(f1, &f2, Op::Add, "(" + to_source(f1.body) + ") + (" + to_source(f2.body) + ")");
  out.meta.lsc = f1.meta.lsc && f2.meta.lsc;
  out.meta.continuous = f1.meta.continuous && f2.meta.continuous;
  out.meta.finite_valued = f1.meta.finite_valued && f2.meta.finite_valued;
  return out;
}

/// -f
inline FuncDesc negate_function(const FuncDesc& f) {
  auto out = detail::combine_functions(f, nullptr, Op::Neg, "-(" + to_source(f.body) + ")");
  out.meta.continuous = f.meta.continuous;
  out.meta.finite_valued = f.meta.finite_valued;
  out.meta.lsc = f.meta.continuous;
  return out;
}

/// <a,x> + b as a function.
inline FuncDesc affine_function(const Vec& a, double b = 0.0) {
  std::ostringstream os;
  os.precision(17);
  os << b;
  for (std::size_t i = 0; i < a.size(); ++i) os << " + (" << a[i] << ")*x" << (i + 1);
  auto f = parse_function(os.str(), a.size());
  f.meta = {true, true, true};
  return f;
}

// ---------------------------------------------------------------------------
// Sets

enum class SetKind { Polyhedral, Smooth, Mixed };

inline const char* to_string(SetKind k) {
  switch (k) {
    case SetKind::Polyhedral: return "polyhedral";
    case SetKind::Smooth: return "smooth";
    case SetKind::Mixed: return "mixed";
  }
  return "?";
}

/// One constraint expr rel constant.
struct SetConstraint {
  Expression expr;
  Rel rel = Rel::Le;
  double constant = 0;
};

/**
 * @brief Conjunction of constraints over R^n.
 *
 * Source grammar: semicolon-separated `expr <= c`, `expr >= c`, `expr == c`
 * (strict `<`, `>` are accepted and make the set non-closed). The empty
 * source denotes R^n and needs `@dim`.
 */
struct SetDesc {
  std::size_t dim = 0;
  std::vector<SetConstraint> constraints;
  SetKind kind = SetKind::Polyhedral;
  std::string source;

  [[nodiscard]] bool closed() const {
    return std::all_of(constraints.begin(), constraints.end(),
                       [](const SetConstraint& c) { return c.rel == Rel::Le || c.rel == Rel::Ge || c.rel == Rel::Eq; });
  }

  /// Signed violation of constraint i at x (<= 0 means satisfied, up to equality handling).
  [[nodiscard]] double violation(std::size_t i, const Vec& x) const {
    const auto& c = constraints[i];
    const long double v = eval_long(c.expr, x) - c.constant;
    double out = 0;
    switch (c.rel) {
      case Rel::Le:
      case Rel::Lt: out = static_cast<double>(v); break;
      case Rel::Ge:
      case Rel::Gt: out = static_cast<double>(-v); break;
      case Rel::Eq: out = static_cast<double>(std::abs(v)); break;
    }
    return std::isnan(out) ? std::numeric_limits<double>::infinity() : out;
  }

  /// Membership with an absolute slack scaled by max(1, |x|).
  [[nodiscard]] bool contains(const Vec& x, double tol = 1e-9) const {
    if (x.size() != dim) throw DimensionMismatch("SetDesc::contains: dimension mismatch");
    const double slack = tol * std::max(1.0, max_abs(x));
    for (std::size_t i = 0; i < constraints.size(); ++i) {
      const double v = violation(i, x);
      const auto rel = constraints[i].rel;
      if (rel == Rel::Lt || rel == Rel::Gt) {
        if (v >= 0 && tol == 0) return false;
        if (v > slack) return false;
      } else if (v > slack) {
        return false;
      }
    }
    return true;
  }
};

namespace detail {

inline SetKind classify_set(const std::vector<SetConstraint>& cs) {
  bool all_affine = true, any_piecewise = false;
  for (const auto& c : cs) {
    all_affine = all_affine && is_affine(c.expr);
    any_piecewise = any_piecewise || has_piecewise(c.expr);
  }
  if (all_affine) return SetKind::Polyhedral;
  return any_piecewise ? SetKind::Mixed : SetKind::Smooth;
}

}  // namespace detail

inline SetDesc make_set(std::size_t dim, std::vector<SetConstraint> cs, std::string source = {}) {
  SetDesc s;
  s.dim = dim;
  for (auto& c : cs) {
    if (c.expr.dim() != dim) throw DimensionMismatch("make_set: constraint dimension mismatch");
  }
  s.constraints = std::move(cs);
  s.kind = detail::classify_set(s.constraints);
  s.source = std::move(source);
  return s;
}

inline SetDesc parse_set(const std::string& source, std::optional<std::size_t> dim = std::nullopt) {
  detail::Directives dir;
  const std::string body = detail::take_directives(source, dir);
  if (!dim) dim = dir.dim;
  detail::Parser p(detail::Lexer(body).run(), dim);
  std::vector<detail::Parser::Comparison> parsed;
  while (p.peek().kind != detail::Tok::End) {
    parsed.push_back(p.parse_constraint());
    if (p.at_sym(";")) {
      p.next();
    } else if (p.peek().kind != detail::Tok::End) {
      throw detail::Parser::err("expected ';' between constraints, got '" + p.peek().text + "'", p.peek());
    }
  }
  const std::size_t d = dim ? *dim : p.max_var();
  if (d == 0) throw ParseError("cannot infer the dimension of an empty set description; add @dim", 1, 1);
  Expression& arena = p.expr();
  std::vector<SetConstraint> cs;
  std::vector<int> roots;
  for (const auto& cmp : parsed) {
    SetConstraint c;
    c.rel = cmp.rel;
    const Node& r = arena.node(cmp.rhs);
    int root = cmp.lhs;
    if (r.op == Op::Const && std::isfinite(r.c)) {
      c.constant = static_cast<double>(r.c);
    } else {
      detail::Token t;
      t.line = r.line;
      t.col = r.col;
      root = p.make_sub(cmp.lhs, cmp.rhs, t);
    }
    roots.push_back(root);
    cs.push_back(std::move(c));
  }
  for (std::size_t i = 0; i < cs.size(); ++i) cs[i].expr = Expression(arena.nodes(), roots[i], d);
  return make_set(d, std::move(cs), source);
}

/// The whole space R^n.
inline SetDesc whole_space(std::size_t dim) { return make_set(dim, {}, "@dim " + std::to_string(dim)); }

/// Rows of a polyhedral set as halfspaces <a,x> <= b (equalities contribute two rows).
inline std::vector<Halfspace> polyhedral_rows(const SetDesc& c) {
  if (c.kind != SetKind::Polyhedral) throw CapabilityError("set is not polyhedral");
  std::vector<Halfspace> rows;
  for (const auto& k : c.constraints) {
    const auto a = affine_form(k.expr, k.expr.root());
    const double rhs = k.constant - a->b;
    if (k.rel == Rel::Le || k.rel == Rel::Lt || k.rel == Rel::Eq) rows.push_back({a->a, rhs});
    if (k.rel == Rel::Ge || k.rel == Rel::Gt || k.rel == Rel::Eq) rows.push_back({scale(a->a, -1.0), -rhs});
  }
  return rows;
}

inline bool rows_feasible(const std::vector<Halfspace>& rows, std::size_t dim) {
  lp::Problem p(dim);
  p.objective.clear();
  p.free_var.assign(dim, true);
  for (const auto& h : rows) p.add(h.a, lp::Relation::Le, h.b);
  return lp::solve(p).status != lp::Status::Infeasible;
}

/**
 * @brief The set as a finite union of polyhedra, when every constraint is piecewise-affine.
 *
 * Each piece is a list of rows <a,x> <= b; infeasible pieces are dropped.
 */
inline std::optional<std::vector<std::vector<Halfspace>>> polyhedral_pieces(const SetDesc& c) {
  std::vector<std::vector<Halfspace>> acc{{}};
  for (const auto& k : c.constraints) {
    std::optional<std::vector<AffineCell>> cells;
    try {
      cells = affine_cells(k.expr);
    } catch (const CapabilityError&) {
      return std::nullopt;
    }
    if (!cells) return std::nullopt;
    const bool le = k.rel == Rel::Le || k.rel == Rel::Lt || k.rel == Rel::Eq;
    const bool ge = k.rel == Rel::Ge || k.rel == Rel::Gt || k.rel == Rel::Eq;
    std::vector<std::vector<Halfspace>> opts;
    for (const auto& cell : *cells) {
      if (cell.plus_inf) {
        if (!le) opts.push_back(cell.constraints);
        continue;
      }
      auto rows = cell.constraints;
      if (le) rows.push_back({cell.value.a, k.constant - cell.value.b});
      if (ge) rows.push_back({scale(cell.value.a, -1.0), cell.value.b - k.constant});
      opts.push_back(std::move(rows));
    }
    std::vector<std::vector<Halfspace>> next;
    for (const auto& a : acc) {
      for (const auto& o : opts) {
        auto rows = a;
        rows.insert(rows.end(), o.begin(), o.end());
        if (!rows_feasible(rows, c.dim)) continue;
        next.push_back(std::move(rows));
        if (next.size() > detail::kMaxCells) return std::nullopt;
      }
    }
    acc = std::move(next);
  }
  return acc;
}

/// Epigraph {(x, y) : f(x) <= y} as a set in R^{n+1}.
inline SetDesc epigraph_set(const FuncDesc& f) {
  Expression e;
  const std::size_t d = f.dim + 1;
  e.set_dim(d);
  const int fx = e.absorb(f.body);
  Node y;
  y.op = Op::Var;
  y.var = static_cast<int>(f.dim);
  const int yi = e.push(y);
  Node s;
  s.op = Op::Sub;
  s.a = fx;
  s.b = yi;
  e.set_root(e.push(s));
  return make_set(d, {SetConstraint{std::move(e), Rel::Le, 0.0}}, "epi(" + to_source(f.body) + ")");
}

/// Indicator of C: 0 on C, +inf elsewhere.
inline FuncDesc lift_indicator(const SetDesc& c) {
  Expression e;
  e.set_dim(c.dim);
  Branch br;
  for (const auto& k : c.constraints) {
    int g = e.absorb(k.expr);
    if (k.constant != 0) {
      Node cn;
      cn.op = Op::Const;
      cn.c = k.constant;
      const int ci = e.push(cn);
      Node s;
      s.op = Op::Sub;
      s.a = g;
      s.b = ci;
      g = e.push(s);
    }
    br.atoms.push_back(Atom{g, k.rel});
  }
  Node zero;
  zero.op = Op::Const;
  br.value = e.push(zero);
  if (br.atoms.empty()) {
    e.set_root(br.value);
  } else {
    Node pw;
    pw.op = Op::Piecewise;
    pw.branches.push_back(std::move(br));
    e.set_root(e.push(std::move(pw)));
  }
  FuncDesc f;
  f.dim = c.dim;
  f.body = std::move(e);
  f.meta.lsc = c.closed();
  f.source = "indicator(" + c.source + ")";
  return f;
}

// ---------------------------------------------------------------------------
// Distance

struct DistanceResult {
  double distance = 0;
  std::vector<Vec> nearest;
  bool local_only = false;  // true when the projection is a best-of-local-searches value
};

namespace detail {

// Exact Euclidean projection onto {y : <a_i,y> <= b_i} by active-set enumeration.
inline std::optional<DistanceResult> project_polyhedron(const std::vector<Halfspace>& rows, const Vec& x) {
  const std::size_t n = x.size();
  auto feasible = [&](const Vec& y) {
    for (const auto& h : rows) {
      if (dot(h.a, y) > h.b + 1e-14 * std::max({1.0, std::abs(h.b), max_abs(y)})) return false;
    }
    return true;
  };
  if (feasible(x)) return DistanceResult{0.0, {x}, false};
  const std::size_t m = rows.size();
  std::optional<DistanceResult> best;
  auto consider = [&](const Vec& y) {
    if (!feasible(y)) return;
    const double dist = distance(x, y);
    if (!best || dist < best->distance - 1e-12 * std::max(1.0, dist)) {
      best = DistanceResult{dist, {y}, false};
    } else if (dist <= best->distance + 1e-12 * std::max(1.0, dist)) {
      for (const auto& q : best->nearest) {
        if (distance(q, y) < 1e-9 * std::max(1.0, norm(y))) return;
      }
      best->nearest.push_back(y);
    }
  };
  std::size_t budget = 0;
  for (std::size_t k = 1; k <= std::min(n, m); ++k) {
    detail::for_each_subset(m, k, [&](const std::vector<std::size_t>& idx) {
      if (++budget > 200000) throw CapabilityError("polyhedral projection exceeds the active-set budget");
      std::vector<Vec> a;
      Vec b;
      for (auto i : idx) {
        a.push_back(rows[i].a);
        b.push_back(rows[i].b);
      }
      if (linalg::rank(a, n) < a.size()) return;
      if (auto y = linalg::project_affine(a, b, x)) consider(*y);
    });
  }
  return best;
}

}  // namespace detail

/// Local projection onto a smooth or mixed set by repeated linearized projections.
inline std::optional<Vec> local_projection(const SetDesc& c, const Vec& x, const Vec& start, int max_iter = 200) {
  Vec y = start;
  // Exact-penalty merit for the backtracking line search.
  const double mu = 10.0 * (1.0 + distance(x, start));
  auto merit = [&](const Vec& z) {
    double m = distance(x, z);
    for (std::size_t i = 0; i < c.constraints.size(); ++i) m += mu * std::max(0.0, c.violation(i, z));
    return m;
  };
  for (int it = 0; it < max_iter; ++it) {
    // Linearize every constraint; retry with only violated ones when the model is infeasible.
    std::optional<DistanceResult> proj;
    for (bool only_violated : {false, true}) {
      std::vector<Halfspace> lin;
      bool ok = true;
      for (std::size_t i = 0; i < c.constraints.size() && ok; ++i) {
        const auto& k = c.constraints[i];
        if (only_violated && c.violation(i, y) <= 0) continue;
        const auto g = gradient(k.expr, y, 0.0);
        if (!g.gradient || !std::isfinite(g.value)) return std::nullopt;
        const double gv = static_cast<double>(g.value) - k.constant;
        const Vec& gr = *g.gradient;
        if (norm(gr) < 1e-14) {
          ok = c.violation(i, y) <= 0;
          continue;
        }
        // g(y) + <gr, z - y> rel c
        const double rhs = dot(gr, y) - gv;
        if (k.rel == Rel::Le || k.rel == Rel::Lt || k.rel == Rel::Eq) lin.push_back({gr, rhs});
        if (k.rel == Rel::Ge || k.rel == Rel::Gt || k.rel == Rel::Eq) lin.push_back({scale(gr, -1.0), -rhs});
      }
      if (ok) proj = detail::project_polyhedron(lin, x);
      if (proj) break;
    }
    if (!proj) return std::nullopt;
    const Vec d = sub(proj->nearest.front(), y);
    const double step = norm(d);
    if (step < 1e-12 * std::max(1.0, norm(y))) break;
    const double m0 = merit(y);
    double alpha = 1.0;
    Vec cand = axpy(y, alpha, d);
    while (merit(cand) >= m0 && alpha > 1e-10) {
      alpha *= 0.5;
      cand = axpy(y, alpha, d);
    }
    if (alpha <= 1e-10) break;
    y = std::move(cand);
  }
  if (!c.contains(y, 1e-7)) return std::nullopt;
  return y;
}

inline DistanceResult distance_function(const SetDesc& c, const Vec& x) {
  if (x.size() != c.dim) throw DimensionMismatch("distance_function: dimension mismatch");
  if (c.kind == SetKind::Polyhedral) {
    const auto rows = polyhedral_rows(c);
    if (!rows_feasible(rows, c.dim)) throw std::invalid_argument("distance_function: the set is empty");
    auto r = detail::project_polyhedron(rows, x);
    if (!r) throw std::invalid_argument("distance_function: no feasible projection found");
    return *r;
  }
  if (c.contains(x, 0.0)) return DistanceResult{0.0, {x}, true};
  // 16 deterministic starts: x itself and points on spheres around x.
  std::vector<Vec> starts{x};
  const double base = std::max(1.0, norm(x));
  std::mt19937_64 rng(0x5eed);
  std::normal_distribution<double> g(0.0, 1.0);
  for (int s = 1; s < 16; ++s) {
    Vec u(c.dim);
    for (auto& v : u) v = g(rng);
    const double radius = base * 0.5 * std::pow(2.0, 0.5 * (s - 1));
    starts.push_back(axpy(x, radius / std::max(1e-12, norm(u)), u));
  }
  std::optional<DistanceResult> best;
  for (const auto& s0 : starts) {
    auto y = local_projection(c, x, s0);
    if (!y) continue;
    const double d = distance(x, *y);
    if (!best || d < best->distance) best = DistanceResult{d, {*y}, true};
  }
  if (!best) throw std::invalid_argument("distance_function: no feasible point found from any start");
  return *best;
}

/// d_C as a scalar field (for the asymptotic estimators).
struct DistanceField {
  SetDesc set;

  [[nodiscard]] std::size_t dim() const { return set.dim; }
  [[nodiscard]] long double value(const Vec& x) const { return distance_function(set, x).distance; }
};

// ---------------------------------------------------------------------------
// Continuity validation

struct ContinuityReport {
  bool consistent = true;
  std::size_t boundary_points = 0;
  std::vector<Vec> violations;
};

/// Samples points on guard boundaries and compares f on both sides.
inline ContinuityReport check_continuity(const FuncDesc& f, std::size_t samples_per_guard = 32, unsigned seed = 1,
                                         double box = 10.0) {
  ContinuityReport rep;
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-box, box);
  const auto& nodes = f.body.nodes();
  for (const auto& n : nodes) {
    if (n.op != Op::Piecewise) continue;
    for (const auto& br : n.branches) {
      for (const auto& at : br.atoms) {
        const Expression g(nodes, at.node, f.dim);
        for (std::size_t s = 0; s < samples_per_guard; ++s) {
          Vec x(f.dim);
          for (auto& v : x) v = u(rng);
          bool on = false;
          for (int it = 0; it < 50; ++it) {
            const auto gr = gradient(g, x, 0.0);
            if (!gr.gradient || norm(*gr.gradient) < 1e-12) break;
            const double gv = static_cast<double>(gr.value);
            if (std::abs(gv) < 1e-12 * std::max(1.0, max_abs(x))) {
              on = true;
              break;
            }
            x = axpy(x, -gv / dot(*gr.gradient, *gr.gradient), *gr.gradient);
          }
          if (!on) continue;
          const auto gr = gradient(g, x, 0.0);
          if (!gr.gradient) continue;
          const Vec nrm = normalized(*gr.gradient);
          const double h = 1e-7 * std::max(1.0, max_abs(x));
          const long double fp = eval_long(f, axpy(x, h, nrm));
          const long double fm = eval_long(f, axpy(x, -h, nrm));
          ++rep.boundary_points;
          if (!std::isfinite(fp) || !std::isfinite(fm)) continue;
          if (std::abs(fp - fm) > 1e-4 * std::max<long double>(1, std::abs(fp))) {
            rep.consistent = false;
            rep.violations.push_back(x);
          }
        }
      }
    }
  }
  return rep;
}

}  // namespace infcone
