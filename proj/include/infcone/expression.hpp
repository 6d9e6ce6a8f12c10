#pragma once

// Expression trees for scalar functions over R^n: a recursive-descent
// parser, an extended-real evaluator, forward-mode derivatives and the
// extraction of piecewise-affine cells used by the exact cone engines.

#include <cctype>
#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "infcone/extended_real.hpp"
#include "infcone/lp.hpp"
#include "infcone/vec.hpp"

namespace infcone {

/// Syntax or semantic error in a function or set source, with 1-based position.
class ParseError : public std::invalid_argument {
 public:
  ParseError(const std::string& msg, int line, int col)
      : std::invalid_argument(std::to_string(line) + ":" + std::to_string(col) + ": " + msg), line_(line), col_(col) {}
  [[nodiscard]] int line() const { return line_; }
  [[nodiscard]] int column() const { return col_; }

 private:
  int line_, col_;
};

enum class Rel { Le, Lt, Ge, Gt, Eq };

inline const char* rel_symbol(Rel r) {
  switch (r) {
    case Rel::Le: return "<=";
    case Rel::Lt: return "<";
    case Rel::Ge: return ">=";
    case Rel::Gt: return ">";
    case Rel::Eq: return "==";
  }
  return "?";
}

enum class Op { Const, Var, Add, Sub, Mul, Div, Neg, Pow, Exp, Log, Sqrt, Sin, Cos, Piecewise };

/// Guard atom: (node value) rel 0.
struct Atom {
  int node = -1;
  Rel rel = Rel::Le;
};

/// A piecewise branch; an empty atom list is the `else` branch.
struct Branch {
  std::vector<Atom> atoms;
  int value = -1;
};

struct Node {
  Op op = Op::Const;
  long double c = 0;  // Const
  int var = -1;       // Var, 0-based
  int k = 0;          // Pow exponent
  int a = -1, b = -1;
  std::vector<Branch> branches;
  int line = 1, col = 1;
};

/// Affine map x -> <a,x> + b.
struct Affine {
  Vec a;
  double b = 0;
};

/// Closed halfspace <a,x> <= b.
struct Halfspace {
  Vec a;
  double b = 0;
};

/// Polyhedral cell of a piecewise-affine function with its affine value.
struct AffineCell {
  std::vector<Halfspace> constraints;
  Affine value;
  bool plus_inf = false;  // the function is +inf on this cell
};

/// Immutable expression over x1..x_dim stored as a node arena.
class Expression {
 public:
  Expression() = default;
  Expression(std::vector<Node> nodes, int root, std::size_t dim) : nodes_(std::move(nodes)), root_(root), dim_(dim) {}

  [[nodiscard]] std::size_t dim() const { return dim_; }
  [[nodiscard]] int root() const { return root_; }
  [[nodiscard]] const std::vector<Node>& nodes() const { return nodes_; }
  [[nodiscard]] const Node& node(int i) const { return nodes_[static_cast<std::size_t>(i)]; }
  Node& mutable_node(int i) { return nodes_[static_cast<std::size_t>(i)]; }
  [[nodiscard]] bool empty() const { return root_ < 0; }

  /// Copies `other` into this arena and returns the new index of its root.
  int absorb(const Expression& other) {
    const int off = static_cast<int>(nodes_.size());
    for (Node n : other.nodes_) {
      if (n.a >= 0) n.a += off;
      if (n.b >= 0) n.b += off;
      for (auto& br : n.branches) {
        br.value += off;
        for (auto& at : br.atoms) at.node += off;
      }
      nodes_.push_back(std::move(n));
    }
    return other.root_ + off;
  }

  int push(Node n) {
    nodes_.push_back(std::move(n));
    return static_cast<int>(nodes_.size()) - 1;
  }
  void set_root(int r) { root_ = r; }
  void set_dim(std::size_t d) { dim_ = d; }

 private:
  std::vector<Node> nodes_;
  int root_ = -1;
  std::size_t dim_ = 0;
};

// ---------------------------------------------------------------------------
// Parser

namespace detail {

enum class Tok { Num, Ident, Sym, End };

struct Token {
  Tok kind = Tok::End;
  std::string text;
  long double num = 0;
  int line = 1, col = 1;
};

class Lexer {
 public:
  explicit Lexer(const std::string& src) : src_(src) {}

  std::vector<Token> run() {
    std::vector<Token> out;
    while (true) {
      skip_space();
      Token t;
      t.line = line_;
      t.col = col_;
      if (pos_ >= src_.size()) {
        t.kind = Tok::End;
        out.push_back(t);
        return out;
      }
      const char ch = src_[pos_];
      if (std::isdigit(static_cast<unsigned char>(ch)) || (ch == '.' && pos_ + 1 < src_.size() &&
                                                           std::isdigit(static_cast<unsigned char>(src_[pos_ + 1])))) {
        std::size_t end = pos_;
        while (end < src_.size() && (std::isdigit(static_cast<unsigned char>(src_[end])) || src_[end] == '.')) ++end;
        if (end < src_.size() && (src_[end] == 'e' || src_[end] == 'E')) {
          std::size_t e = end + 1;
          if (e < src_.size() && (src_[e] == '+' || src_[e] == '-')) ++e;
          if (e < src_.size() && std::isdigit(static_cast<unsigned char>(src_[e]))) {
            end = e;
            while (end < src_.size() && std::isdigit(static_cast<unsigned char>(src_[end]))) ++end;
          }
        }
        t.kind = Tok::Num;
        t.text = src_.substr(pos_, end - pos_);
        try {
          t.num = std::stold(t.text);
        } catch (const std::exception&) {
          throw ParseError("malformed number '" + t.text + "'", line_, col_);
        }
        advance(end - pos_);
      } else if (std::isalpha(static_cast<unsigned char>(ch)) || ch == '_') {
        std::size_t end = pos_;
        while (end < src_.size() && (std::isalnum(static_cast<unsigned char>(src_[end])) || src_[end] == '_')) ++end;
        t.kind = Tok::Ident;
        t.text = src_.substr(pos_, end - pos_);
        advance(end - pos_);
      } else {
        static const char* two[] = {"<=", ">=", "==", "&&"};
        t.kind = Tok::Sym;
        for (const char* s : two) {
          if (src_.compare(pos_, 2, s) == 0) t.text = s;
        }
        if (t.text.empty()) {
          if (std::string("+-*/^(),;:<>=").find(ch) == std::string::npos) {
            throw ParseError(std::string("unexpected character '") + ch + "'", line_, col_);
          }
          t.text = std::string(1, ch);
        }
        advance(t.text.size());
        if (t.text == "=") t.text = "==";
      }
      out.push_back(t);
    }
  }

 private:
  void advance(std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) {
      if (src_[pos_] == '\n') {
        ++line_;
        col_ = 1;
      } else {
        ++col_;
      }
      ++pos_;
    }
  }
  void skip_space() {
    while (pos_ < src_.size()) {
      const char ch = src_[pos_];
      if (ch == '#') {
        while (pos_ < src_.size() && src_[pos_] != '\n') advance(1);
      } else if (std::isspace(static_cast<unsigned char>(ch))) {
        advance(1);
      } else {
        return;
      }
    }
  }

  const std::string& src_;
  std::size_t pos_ = 0;
  int line_ = 1, col_ = 1;
};

class Parser {
 public:
  Parser(std::vector<Token> toks, std::optional<std::size_t> declared_dim)
      : toks_(std::move(toks)), declared_(declared_dim) {}

  Expression& expr() { return e_; }
  std::size_t max_var() const { return max_var_; }

  int parse_expression() { return parse_sum(); }

  // Parses `lhs rel rhs`, returning the node for lhs - rhs (or lhs when rhs is literal 0).
  std::pair<int, Rel> parse_comparison() {
    const int lhs = parse_sum();
    const Token& t = peek();
    Rel rel;
    if (t.kind != Tok::Sym) throw err("expected comparison operator", t);
    if (t.text == "<=") rel = Rel::Le;
    else if (t.text == "<") rel = Rel::Lt;
    else if (t.text == ">=") rel = Rel::Ge;
    else if (t.text == ">") rel = Rel::Gt;
    else if (t.text == "==") rel = Rel::Eq;
    else throw err("expected comparison operator, got '" + t.text + "'", t);
    next();
    const int rhs = parse_sum();
    const Node& r = e_.node(rhs);
    if (r.op == Op::Const && r.c == 0) return {lhs, rel};
    return {binary(Op::Sub, lhs, rhs, t), rel};
  }

  struct Comparison {
    int lhs, rhs;
    Rel rel;
  };
  // Parses `lhs rel rhs` without combining the sides.
  Comparison parse_constraint() {
    const int lhs = parse_sum();
    const Token t = peek();
    Rel rel;
    if (t.kind == Tok::Sym && t.text == "<=") rel = Rel::Le;
    else if (t.kind == Tok::Sym && t.text == "<") rel = Rel::Lt;
    else if (t.kind == Tok::Sym && t.text == ">=") rel = Rel::Ge;
    else if (t.kind == Tok::Sym && t.text == ">") rel = Rel::Gt;
    else if (t.kind == Tok::Sym && t.text == "==") rel = Rel::Eq;
    else throw err(t.kind == Tok::End ? "expected comparison operator before end of input" : "expected comparison operator, got '" + t.text + "'", t);
    next();
    return {lhs, parse_sum(), rel};
  }
  int make_sub(int a, int b, const Token& t) { return binary(Op::Sub, a, b, t); }

  const Token& peek() const { return toks_[pos_]; }
  const Token& next() { return toks_[pos_++]; }
  bool at_sym(const char* s) const { return peek().kind == Tok::Sym && peek().text == s; }
  bool at_ident(const char* s) const { return peek().kind == Tok::Ident && peek().text == s; }

  void expect_sym(const char* s) {
    if (!at_sym(s)) {
      throw err(std::string("expected '") + s + "'" + (peek().kind == Tok::End ? " before end of input" : ", got '" + peek().text + "'"), peek());
    }
    next();
  }

  static ParseError err(const std::string& msg, const Token& t) { return ParseError(msg, t.line, t.col); }

 private:
  int make(Op op, const Token& t) {
    Node n;
    n.op = op;
    n.line = t.line;
    n.col = t.col;
    return e_.push(std::move(n));
  }
  int binary(Op op, int a, int b, const Token& t) {
    const int i = make(op, t);
    auto& n = e_.mutable_node(i);
    n.a = a;
    n.b = b;
    return i;
  }
  int unary(Op op, int a, const Token& t) {
    const int i = make(op, t);
    e_.mutable_node(i).a = a;
    return i;
  }
  int constant(long double c, const Token& t) {
    const int i = make(Op::Const, t);
    e_.mutable_node(i).c = c;
    return i;
  }

  int parse_sum() {
    int lhs = parse_product();
    while (at_sym("+") || at_sym("-")) {
      const Token t = next();
      const int rhs = parse_product();
      lhs = binary(t.text == "+" ? Op::Add : Op::Sub, lhs, rhs, t);
    }
    return lhs;
  }

  int parse_product() {
    int lhs = parse_unary();
    while (at_sym("*") || at_sym("/")) {
      const Token t = next();
      const int rhs = parse_unary();
      lhs = binary(t.text == "*" ? Op::Mul : Op::Div, lhs, rhs, t);
    }
    return lhs;
  }

  int parse_unary() {
    if (at_sym("-")) {
      const Token t = next();
      return unary(Op::Neg, parse_unary(), t);
    }
    if (at_sym("+")) {
      next();
      return parse_unary();
    }
    return parse_power();
  }

  int parse_power() {
    const int base = parse_primary();
    if (!at_sym("^")) return base;
    const Token t = next();
    bool neg = false;
    if (at_sym("-")) {
      next();
      neg = true;
    } else if (at_sym("+")) {
      next();
    }
    const Token& et = peek();
    if (et.kind != Tok::Num || et.num != std::floor(et.num) || std::abs(et.num) > 1000) {
      throw err("exponent must be an integer literal", et);
    }
    next();
    const int i = make(Op::Pow, t);
    auto& n = e_.mutable_node(i);
    n.a = base;
    n.k = static_cast<int>(neg ? -et.num : et.num);
    return i;
  }

  std::vector<int> parse_args(const Token& fn) {
    expect_sym("(");
    std::vector<int> args;
    if (!at_sym(")")) {
      args.push_back(parse_sum());
      while (at_sym(",")) {
        next();
        args.push_back(parse_sum());
      }
    }
    expect_sym(")");
    (void)fn;
    return args;
  }

  // Lowers abs/min/max to piecewise form.
  int piecewise2(int cond_node, Rel rel, int then_node, int else_node, const Token& t) {
    const int i = make(Op::Piecewise, t);
    auto& n = e_.mutable_node(i);
    n.branches.push_back(Branch{{Atom{cond_node, rel}}, then_node});
    n.branches.push_back(Branch{{}, else_node});
    return i;
  }

  int parse_piecewise(const Token& t) {
    expect_sym("(");
    std::vector<Branch> branches;
    bool saw_else = false;
    while (true) {
      Branch br;
      if (at_ident("else")) {
        next();
        saw_else = true;
      } else {
        while (true) {
          auto [g, rel] = parse_comparison();
          br.atoms.push_back(Atom{g, rel});
          if (at_sym("&&") || at_ident("and")) {
            next();
            continue;
          }
          break;
        }
      }
      expect_sym(":");
      br.value = parse_sum();
      branches.push_back(std::move(br));
      if (saw_else) break;
      if (at_sym(";")) {
        next();
        continue;
      }
      break;
    }
    if (at_sym(";")) next();
    expect_sym(")");
    const int i = make(Op::Piecewise, t);
    e_.mutable_node(i).branches = std::move(branches);
    return i;
  }

  int parse_primary() {
    const Token t = peek();
    if (t.kind == Tok::Num) {
      next();
      return constant(t.num, t);
    }
    if (t.kind == Tok::Sym && t.text == "(") {
      next();
      const int inner = parse_sum();
      expect_sym(")");
      return inner;
    }
    if (t.kind != Tok::Ident) {
      throw err(t.kind == Tok::End ? "unexpected end of input" : "unexpected '" + t.text + "'", t);
    }
    next();
    const std::string& id = t.text;
    if (id == "inf") return constant(std::numeric_limits<long double>::infinity(), t);
    if (id == "pi") return constant(3.14159265358979323846264338327950288L, t);
    if (id == "piecewise") return parse_piecewise(t);
    if (id == "x" || (id.size() >= 2 && id[0] == 'x' && id.find_first_not_of("0123456789", 1) == std::string::npos)) {
      std::size_t k = 1;
      if (id != "x") {
        k = std::stoul(id.substr(1));
        if (k == 0) throw err("variables are numbered from x1", t);
      }
      if (declared_ && k > *declared_) {
        throw err("variable '" + id + "' exceeds declared dimension " + std::to_string(*declared_), t);
      }
      max_var_ = std::max(max_var_, k);
      const int i = make(Op::Var, t);
      e_.mutable_node(i).var = static_cast<int>(k - 1);
      return i;
    }
    static const std::pair<const char*, Op> unary_fns[] = {
        {"exp", Op::Exp}, {"log", Op::Log}, {"sqrt", Op::Sqrt}, {"sin", Op::Sin}, {"cos", Op::Cos}};
    for (const auto& [name, op] : unary_fns) {
      if (id == name) {
        const auto args = parse_args(t);
        if (args.size() != 1) throw err(id + " expects 1 argument, got " + std::to_string(args.size()), t);
        return unary(op, args[0], t);
      }
    }
    if (id == "abs") {
      const auto args = parse_args(t);
      if (args.size() != 1) throw err("abs expects 1 argument, got " + std::to_string(args.size()), t);
      return piecewise2(args[0], Rel::Ge, args[0], unary(Op::Neg, args[0], t), t);
    }
    if (id == "min" || id == "max") {
      const auto args = parse_args(t);
      if (args.size() < 2) throw err(id + " expects at least 2 arguments, got " + std::to_string(args.size()), t);
      int acc = args[0];
      for (std::size_t i = 1; i < args.size(); ++i) {
        const int diff = binary(Op::Sub, acc, args[i], t);
        acc = piecewise2(diff, id == "min" ? Rel::Le : Rel::Ge, acc, args[i], t);
      }
      return acc;
    }
    throw err("unknown identifier '" + id + "'", t);
  }

  std::vector<Token> toks_;
  std::size_t pos_ = 0;
  std::optional<std::size_t> declared_;
  std::size_t max_var_ = 0;
  Expression e_;
};

}  // namespace detail

/// Parses a single expression. Dimension defaults to the largest variable index.
inline Expression parse_expression(const std::string& src, std::optional<std::size_t> dim = std::nullopt) {
  detail::Parser p(detail::Lexer(src).run(), dim);
  const int root = p.parse_expression();
  if (p.peek().kind != detail::Tok::End) throw detail::Parser::err("unexpected '" + p.peek().text + "'", p.peek());
  Expression e = std::move(p.expr());
  e.set_root(root);
  e.set_dim(dim ? *dim : std::max<std::size_t>(1, p.max_var()));
  return e;
}

// ---------------------------------------------------------------------------
// Evaluation

namespace detail {

inline constexpr long double kInf = std::numeric_limits<long double>::infinity();

[[noreturn]] inline void undefined(const char* what, const Node& n) {
  throw UndefinedOperation(std::string(what) + " in subexpression at " + std::to_string(n.line) + ":" +
                           std::to_string(n.col));
}

inline long double ext_plus(long double a, long double b) {
  if (a == kInf || b == kInf) return kInf;
  return a + b;
}

inline long double ext_times(long double a, long double b, const Node& n) {
  if ((a == 0 && std::isinf(b)) || (b == 0 && std::isinf(a))) undefined("0*inf", n);
  return a * b;
}

inline long double ext_div(long double a, long double b, const Node& n) {
  if (b == 0) {
    if (a == 0) undefined("0/0", n);
    return a > 0 ? kInf : -kInf;
  }
  if (std::isinf(a) && std::isinf(b)) undefined("inf/inf", n);
  return a / b;
}

inline long double ext_ipow(long double x, int k, const Node& n) {
  if (k == 0) return 1;
  long double r = 1;
  for (int i = 0; i < std::abs(k); ++i) r = ext_times(r, x, n);
  return k > 0 ? r : ext_div(1, r, n);
}

inline bool rel_holds(long double g, Rel rel) {
  switch (rel) {
    case Rel::Le: return g <= 0;
    case Rel::Lt: return g < 0;
    case Rel::Ge: return g >= 0;
    case Rel::Gt: return g > 0;
    case Rel::Eq: return g == 0;
  }
  return false;
}

class Evaluator {
 public:
  Evaluator(const Expression& e, const Vec& x) : e_(e), x_(x) {}

  long double eval(int i) {
    const Node& n = e_.node(i);
    switch (n.op) {
      case Op::Const: return n.c;
      case Op::Var: return x_[static_cast<std::size_t>(n.var)];
      case Op::Add: return ext_plus(eval(n.a), eval(n.b));
      case Op::Sub: return ext_plus(eval(n.a), -eval(n.b));
      case Op::Mul: return ext_times(eval(n.a), eval(n.b), n);
      case Op::Div: return ext_div(eval(n.a), eval(n.b), n);
      case Op::Neg: return -eval(n.a);
      case Op::Pow: return ext_ipow(eval(n.a), n.k, n);
      case Op::Exp: return std::exp(eval(n.a));
      case Op::Log: {
        const long double v = eval(n.a);
        return v <= 0 ? -kInf : std::log(v);
      }
      case Op::Sqrt: {
        const long double v = eval(n.a);
        return v < 0 ? kInf : std::sqrt(v);
      }
      case Op::Sin:
      case Op::Cos: {
        const long double v = eval(n.a);
        if (std::isinf(v)) undefined("trigonometric function of an infinite value", n);
        return n.op == Op::Sin ? std::sin(v) : std::cos(v);
      }
      case Op::Piecewise:
        for (const auto& br : n.branches) {
          bool ok = true;
          for (const auto& at : br.atoms) {
            if (!rel_holds(eval(at.node), at.rel)) {
              ok = false;
              break;
            }
          }
          if (ok) return eval(br.value);
        }
        return kInf;  // no branch applies: outside the domain
    }
    return 0;
  }

 private:
  const Expression& e_;
  const Vec& x_;
};

}  // namespace detail

/// Value in extended precision; values beyond double range stay finite here.
inline long double eval_long(const Expression& e, const Vec& x) {
  if (x.size() != e.dim()) throw DimensionMismatch("eval: point dimension does not match function dimension");
  return detail::Evaluator(e, x).eval(e.root());
}

inline ExtendedReal to_extended(long double v) {
  if (v > static_cast<long double>(std::numeric_limits<double>::max())) return ExtendedReal::pos_inf();
  if (v < -static_cast<long double>(std::numeric_limits<double>::max())) return ExtendedReal::neg_inf();
  return ExtendedReal(static_cast<double>(v));
}

inline ExtendedReal eval(const Expression& e, const Vec& x) { return to_extended(eval_long(e, x)); }

// ---------------------------------------------------------------------------
// Forward-mode derivatives

/// Value with tangent components.
struct Dual {
  long double v = 0;
  std::vector<long double> d;
};

namespace detail {

class DualEvaluator {
 public:
  // Seeds: one tangent per column of `seeds` (each a vector in R^dim).
  DualEvaluator(const Expression& e, const Vec& x, const std::vector<Vec>& seeds, double kink_tol, bool one_sided)
      : e_(e), x_(x), seeds_(seeds), m_(seeds.size()), kink_tol_(kink_tol), one_sided_(one_sided) {}

  bool nondifferentiable = false;
  std::string branch_path;

  Dual eval(int i) {
    const Node& n = e_.node(i);
    Dual r;
    r.d.assign(m_, 0.0L);
    switch (n.op) {
      case Op::Const:
        r.v = n.c;
        return r;
      case Op::Var:
        r.v = x_[static_cast<std::size_t>(n.var)];
        for (std::size_t j = 0; j < m_; ++j) r.d[j] = seeds_[j][static_cast<std::size_t>(n.var)];
        return r;
      case Op::Add:
      case Op::Sub: {
        const Dual a = eval(n.a);
        const Dual b = eval(n.b);
        const long double s = n.op == Op::Add ? 1 : -1;
        r.v = ext_plus(a.v, s * b.v);
        for (std::size_t j = 0; j < m_; ++j) r.d[j] = a.d[j] + s * b.d[j];
        return r;
      }
      case Op::Mul: {
        const Dual a = eval(n.a);
        const Dual b = eval(n.b);
        r.v = ext_times(a.v, b.v, n);
        for (std::size_t j = 0; j < m_; ++j) r.d[j] = a.d[j] * b.v + a.v * b.d[j];
        return r;
      }
      case Op::Div: {
        const Dual a = eval(n.a);
        const Dual b = eval(n.b);
        r.v = ext_div(a.v, b.v, n);
        if (b.v == 0) nondifferentiable = true;
        for (std::size_t j = 0; j < m_; ++j) r.d[j] = (a.d[j] * b.v - a.v * b.d[j]) / (b.v * b.v);
        return r;
      }
      case Op::Neg: {
        Dual a = eval(n.a);
        a.v = -a.v;
        for (auto& t : a.d) t = -t;
        return a;
      }
      case Op::Pow: {
        const Dual a = eval(n.a);
        r.v = ext_ipow(a.v, n.k, n);
        const long double dv = n.k == 0 ? 0 : n.k * ext_ipow(a.v, n.k - 1, n);
        if (n.k < 0 && a.v == 0) nondifferentiable = true;
        for (std::size_t j = 0; j < m_; ++j) r.d[j] = dv * a.d[j];
        return r;
      }
      case Op::Exp: {
        const Dual a = eval(n.a);
        r.v = std::exp(a.v);
        for (std::size_t j = 0; j < m_; ++j) r.d[j] = r.v * a.d[j];
        return r;
      }
      case Op::Log: {
        const Dual a = eval(n.a);
        r.v = a.v <= 0 ? -kInf : std::log(a.v);
        if (a.v <= kink_tol_) nondifferentiable = true;
        for (std::size_t j = 0; j < m_; ++j) r.d[j] = a.d[j] / a.v;
        return r;
      }
      case Op::Sqrt: {
        const Dual a = eval(n.a);
        r.v = a.v < 0 ? kInf : std::sqrt(a.v);
        if (a.v <= kink_tol_) nondifferentiable = true;
        for (std::size_t j = 0; j < m_; ++j) r.d[j] = a.d[j] / (2 * r.v);
        return r;
      }
      case Op::Sin:
      case Op::Cos: {
        const Dual a = eval(n.a);
        if (std::isinf(a.v)) undefined("trigonometric function of an infinite value", n);
        r.v = n.op == Op::Sin ? std::sin(a.v) : std::cos(a.v);
        const long double dv = n.op == Op::Sin ? std::cos(a.v) : -std::sin(a.v);
        for (std::size_t j = 0; j < m_; ++j) r.d[j] = dv * a.d[j];
        return r;
      }
      case Op::Piecewise: {
        for (std::size_t bi = 0; bi < n.branches.size(); ++bi) {
          const auto& br = n.branches[bi];
          bool ok = true;
          for (const auto& at : br.atoms) {
            const Dual g = eval(at.node);
            if (!atom_holds(g, at.rel)) {
              ok = false;
              break;
            }
          }
          if (ok) {
            if (!branch_path.empty()) branch_path += '/';
            branch_path += std::to_string(bi);
            return eval(br.value);
          }
        }
        r.v = kInf;
        nondifferentiable = true;
        return r;
      }
    }
    return r;
  }

 private:
  bool atom_holds(const Dual& g, Rel rel) {
    const long double scale = std::max<long double>(1, std::abs(g.v));
    if (std::abs(g.v) <= kink_tol_ * scale) {
      if (!one_sided_) {
        nondifferentiable = true;
      } else if (g.v == 0 && m_ == 1 && g.d[0] != 0) {
        // Exactly on the boundary: the branch entered by moving along the seed.
        return rel_holds(g.d[0], rel == Rel::Eq ? Rel::Eq : rel);
      }
    }
    return rel_holds(g.v, rel);
  }

  const Expression& e_;
  const Vec& x_;
  std::vector<Vec> seeds_;
  std::size_t m_;
  double kink_tol_;
  bool one_sided_;
};

}  // namespace detail

/// Gradient of the active branch, or nullopt when the point is within `kink_tol` of a kink.
struct ExprGradient {
  std::optional<Vec> gradient;
  long double value = 0;
  std::string branch_path;
};

inline ExprGradient gradient(const Expression& e, const Vec& x, double kink_tol = 1e-6) {
  if (x.size() != e.dim()) throw DimensionMismatch("grad: point dimension does not match function dimension");
  std::vector<Vec> seeds;
  for (std::size_t i = 0; i < e.dim(); ++i) seeds.push_back(unit_axis(e.dim(), i));
  detail::DualEvaluator ev(e, x, seeds, kink_tol, false);
  const Dual r = ev.eval(e.root());
  ExprGradient out;
  out.value = r.v;
  out.branch_path = ev.branch_path.empty() ? "0" : ev.branch_path;
  bool finite = std::isfinite(r.v);
  for (auto t : r.d) finite = finite && std::isfinite(t);
  if (!ev.nondifferentiable && finite) out.gradient = Vec(r.d.begin(), r.d.end());
  return out;
}

/// One-sided directional derivative along v, taking the branch entered by x + tv for small t > 0.
inline std::optional<double> directional_derivative(const Expression& e, const Vec& x, const Vec& v) {
  if (x.size() != e.dim() || v.size() != e.dim()) throw DimensionMismatch("directional_derivative: dimension mismatch");
  detail::DualEvaluator ev(e, x, {v}, 0.0, true);
  const Dual r = ev.eval(e.root());
  if (!std::isfinite(r.v) || !std::isfinite(r.d[0])) return std::nullopt;
  return static_cast<double>(r.d[0]);
}

// ---------------------------------------------------------------------------
// Structural analysis

/// Affine form of a piecewise-free subtree, or nullopt.
inline std::optional<Affine> affine_form(const Expression& e, int i) {
  const Node& n = e.node(i);
  const std::size_t d = e.dim();
  switch (n.op) {
    case Op::Const:
      if (!std::isfinite(n.c)) return std::nullopt;
      return Affine{Vec(d, 0.0), static_cast<double>(n.c)};
    case Op::Var: return Affine{unit_axis(d, static_cast<std::size_t>(n.var)), 0.0};
    case Op::Add:
    case Op::Sub: {
      auto a = affine_form(e, n.a);
      auto b = affine_form(e, n.b);
      if (!a || !b) return std::nullopt;
      const double s = n.op == Op::Add ? 1.0 : -1.0;
      return Affine{axpy(a->a, s, b->a), a->b + s * b->b};
    }
    case Op::Neg: {
      auto a = affine_form(e, n.a);
      if (!a) return std::nullopt;
      return Affine{scale(a->a, -1.0), -a->b};
    }
    case Op::Mul: {
      auto a = affine_form(e, n.a);
      auto b = affine_form(e, n.b);
      if (!a || !b) return std::nullopt;
      if (max_abs(a->a) == 0) return Affine{scale(b->a, a->b), a->b * b->b};
      if (max_abs(b->a) == 0) return Affine{scale(a->a, b->b), a->b * b->b};
      return std::nullopt;
    }
    case Op::Div: {
      auto a = affine_form(e, n.a);
      auto b = affine_form(e, n.b);
      if (!a || !b || max_abs(b->a) != 0 || b->b == 0) return std::nullopt;
      return Affine{scale(a->a, 1.0 / b->b), a->b / b->b};
    }
    case Op::Pow: {
      auto a = affine_form(e, n.a);
      if (!a) return std::nullopt;
      if (n.k == 1) return a;
      if (n.k == 0) return Affine{Vec(d, 0.0), 1.0};
      if (max_abs(a->a) == 0) return Affine{Vec(d, 0.0), std::pow(a->b, n.k)};
      return std::nullopt;
    }
    default: return std::nullopt;
  }
}

inline bool is_affine(const Expression& e) { return !e.empty() && affine_form(e, e.root()).has_value(); }

namespace detail {

inline constexpr std::size_t kMaxCells = 512;

inline bool cell_feasible(const std::vector<Halfspace>& cons, std::size_t dim) {
  if (cons.empty()) return true;
  lp::Problem p(dim);
  p.objective.clear();
  p.free_var.assign(dim, true);
  for (const auto& h : cons) p.add(h.a, lp::Relation::Le, h.b);
  return lp::solve(p).status != lp::Status::Infeasible;
}

inline std::optional<std::vector<AffineCell>> cells_of(const Expression& e, int i);

// Closed halfspace alternatives for `g rel 0` (negate=false) or its closed
// complement (negate=true). The guard g may itself be piecewise-affine.
inline std::optional<std::vector<std::vector<Halfspace>>> atom_halfspaces(const Expression& e, const Atom& at,
                                                                          bool negate) {
  auto gcells = cells_of(e, at.node);
  if (!gcells) return std::nullopt;
  const bool is_le = at.rel == Rel::Le || at.rel == Rel::Lt;
  const bool is_ge = at.rel == Rel::Ge || at.rel == Rel::Gt;
  std::vector<std::vector<Halfspace>> out;
  for (const auto& gc : *gcells) {
    if (gc.plus_inf) return std::nullopt;
    const Affine& g = gc.value;
    const Halfspace le{g.a, -g.b};              // g <= 0
    const Halfspace ge{scale(g.a, -1.0), g.b};  // g >= 0
    std::vector<std::vector<Halfspace>> alts;
    if (!negate) {
      if (is_le) alts = {{le}};
      else if (is_ge) alts = {{ge}};
      else alts = {{le, ge}};
    } else {
      if (is_le) alts = {{ge}};
      else if (is_ge) alts = {{le}};
      else alts = {{le}, {ge}};
    }
    for (auto& alt : alts) {
      alt.insert(alt.begin(), gc.constraints.begin(), gc.constraints.end());
      if (cell_feasible(alt, e.dim())) out.push_back(std::move(alt));
    }
  }
  return out;
}



inline std::optional<std::vector<AffineCell>> combine(const std::vector<AffineCell>& xs, const std::vector<AffineCell>& ys,
                                                      std::size_t dim, double sy) {
  std::vector<AffineCell> out;
  for (const auto& x : xs) {
    for (const auto& y : ys) {
      AffineCell c;
      c.constraints = x.constraints;
      c.constraints.insert(c.constraints.end(), y.constraints.begin(), y.constraints.end());
      if (!cell_feasible(c.constraints, dim)) continue;
      if (y.plus_inf && sy < 0) return std::nullopt;  // would produce -inf
      c.plus_inf = x.plus_inf || y.plus_inf;
      if (!c.plus_inf) c.value = Affine{axpy(x.value.a, sy, y.value.a), x.value.b + sy * y.value.b};
      else c.value = Affine{Vec(dim, 0.0), 0.0};
      out.push_back(std::move(c));
      if (out.size() > kMaxCells) throw CapabilityError("piecewise-affine analysis exceeds the cell budget");
    }
  }
  return out;
}

inline std::optional<std::vector<AffineCell>> scale_cells(std::vector<AffineCell> cs, double s) {
  for (auto& c : cs) {
    if (c.plus_inf) {
      if (s <= 0) return std::nullopt;
      continue;
    }
    c.value.a = scale(c.value.a, s);
    c.value.b *= s;
  }
  return cs;
}

inline std::optional<double> constant_value(const Expression& e, int i) {
  auto a = affine_form(e, i);
  if (!a || max_abs(a->a) != 0) return std::nullopt;
  return a->b;
}

inline std::optional<std::vector<AffineCell>> cells_of(const Expression& e, int i) {
  const Node& n = e.node(i);
  const std::size_t d = e.dim();
  switch (n.op) {
    case Op::Const:
      if (n.c == kInf) return std::vector<AffineCell>{AffineCell{{}, Affine{Vec(d, 0.0), 0.0}, true}};
      if (!std::isfinite(n.c)) return std::nullopt;
      [[fallthrough]];
    case Op::Var: {
      auto a = affine_form(e, i);
      return std::vector<AffineCell>{AffineCell{{}, *a, false}};
    }
    case Op::Add:
    case Op::Sub: {
      auto a = cells_of(e, n.a);
      auto b = cells_of(e, n.b);
      if (!a || !b) return std::nullopt;
      return combine(*a, *b, d, n.op == Op::Add ? 1.0 : -1.0);
    }
    case Op::Neg: {
      auto a = cells_of(e, n.a);
      if (!a) return std::nullopt;
      return scale_cells(*a, -1.0);
    }
    case Op::Mul: {
      if (auto c = constant_value(e, n.a)) {
        auto b = cells_of(e, n.b);
        return b ? scale_cells(*b, *c) : std::nullopt;
      }
      if (auto c = constant_value(e, n.b)) {
        auto a = cells_of(e, n.a);
        return a ? scale_cells(*a, *c) : std::nullopt;
      }
      return std::nullopt;
    }
    case Op::Div: {
      auto c = constant_value(e, n.b);
      if (!c || *c == 0) return std::nullopt;
      auto a = cells_of(e, n.a);
      return a ? scale_cells(*a, 1.0 / *c) : std::nullopt;
    }
    case Op::Pow: {
      if (n.k == 1) return cells_of(e, n.a);
      auto a = affine_form(e, i);
      if (!a) return std::nullopt;
      return std::vector<AffineCell>{AffineCell{{}, *a, false}};
    }
    case Op::Piecewise: {
      std::vector<AffineCell> out;
      // Constraint alternatives for "all earlier branches failed".
      std::vector<std::vector<Halfspace>> failed_prefix{{}};
      for (const auto& br : n.branches) {
        // Alternatives for "this branch's conjunction holds".
        std::vector<std::vector<Halfspace>> own{{}};
        for (const auto& at : br.atoms) {
          auto hs = atom_halfspaces(e, at, false);
          if (!hs) return std::nullopt;
          std::vector<std::vector<Halfspace>> next;
          for (const auto& o : own) {
            for (const auto& alt : *hs) {
              auto g = o;
              g.insert(g.end(), alt.begin(), alt.end());
              if (cell_feasible(g, d)) next.push_back(std::move(g));
            }
          }
          own = std::move(next);
        }
        auto vals = cells_of(e, br.value);
        if (!vals) return std::nullopt;
        std::vector<std::vector<Halfspace>> guards;
        for (const auto& pre : failed_prefix) {
          for (const auto& o : own) {
            std::vector<Halfspace> guard = pre;
            guard.insert(guard.end(), o.begin(), o.end());
            if (cell_feasible(guard, d)) guards.push_back(std::move(guard));
          }
        }
        for (const auto& guard : guards) {
          for (const auto& v : *vals) {
            AffineCell c = v;
            c.constraints.insert(c.constraints.begin(), guard.begin(), guard.end());
            if (!cell_feasible(c.constraints, d)) continue;
            out.push_back(std::move(c));
            if (out.size() > kMaxCells) throw CapabilityError("piecewise-affine analysis exceeds the cell budget");
          }
        }
        if (br.atoms.empty()) return out;  // else branch: nothing follows
        // Extend the failure prefix by the negation of this branch's conjunction.
        std::vector<std::vector<Halfspace>> next;
        for (const auto& pre : failed_prefix) {
          for (const auto& at : br.atoms) {
            auto neg = atom_halfspaces(e, at, true);
            if (!neg) return std::nullopt;
            for (const auto& alt : *neg) {
              std::vector<Halfspace> g = pre;
              g.insert(g.end(), alt.begin(), alt.end());
              if (cell_feasible(g, d)) next.push_back(std::move(g));
            }
          }
        }
        failed_prefix = std::move(next);
        if (failed_prefix.size() > kMaxCells) throw CapabilityError("piecewise-affine analysis exceeds the cell budget");
      }
      // Points failing every guard lie outside the domain.
      for (auto& pre : failed_prefix) out.push_back(AffineCell{std::move(pre), Affine{Vec(d, 0.0), 0.0}, true});
      return out;
    }
    default: return std::nullopt;
  }
}

}  // namespace detail

/// Cells covering R^dim on which the expression is affine (or +inf), or nullopt
/// when some branch or guard is not affine.
inline std::optional<std::vector<AffineCell>> affine_cells(const Expression& e) {
  if (e.empty()) return std::nullopt;
  return detail::cells_of(e, e.root());
}

/// Whether any piecewise node occurs in the tree.
inline bool has_piecewise(const Expression& e) {
  for (const auto& n : e.nodes()) {
    if (n.op == Op::Piecewise) return true;
  }
  return false;
}

/// Renders the tree back to source form.
inline std::string to_source(const Expression& e, int i) {
  const Node& n = e.node(i);
  auto num = [](long double c) {
    if (c == detail::kInf) return std::string("inf");
    if (c == -detail::kInf) return std::string("(-inf)");
    std::ostringstream os;
    os.precision(17);
    os << static_cast<double>(c);
    std::string s = os.str();
    return c < 0 ? "(" + s + ")" : s;
  };
  switch (n.op) {
    case Op::Const: return num(n.c);
    case Op::Var: return "x" + std::to_string(n.var + 1);
    case Op::Add: return "(" + to_source(e, n.a) + " + " + to_source(e, n.b) + ")";
    case Op::Sub: return "(" + to_source(e, n.a) + " - " + to_source(e, n.b) + ")";
    case Op::Mul: return "(" + to_source(e, n.a) + " * " + to_source(e, n.b) + ")";
    case Op::Div: return "(" + to_source(e, n.a) + " / " + to_source(e, n.b) + ")";
    case Op::Neg: return "(-" + to_source(e, n.a) + ")";
    case Op::Pow: return "(" + to_source(e, n.a) + "^" + (n.k < 0 ? "(" + std::to_string(n.k) + ")" : std::to_string(n.k)) + ")";
    case Op::Exp: return "exp(" + to_source(e, n.a) + ")";
    case Op::Log: return "log(" + to_source(e, n.a) + ")";
    case Op::Sqrt: return "sqrt(" + to_source(e, n.a) + ")";
    case Op::Sin: return "sin(" + to_source(e, n.a) + ")";
    case Op::Cos: return "cos(" + to_source(e, n.a) + ")";
    case Op::Piecewise: {
      std::string s = "piecewise(";
      for (std::size_t b = 0; b < n.branches.size(); ++b) {
        const auto& br = n.branches[b];
        if (b) s += "; ";
        if (br.atoms.empty()) {
          s += "else";
        } else {
          for (std::size_t k = 0; k < br.atoms.size(); ++k) {
            if (k) s += " and ";
            s += to_source(e, br.atoms[k].node) + " " + rel_symbol(br.atoms[k].rel) + " 0";
          }
        }
        s += ": " + to_source(e, br.value);
      }
      return s + ")";
    }
  }
  return "";
}

inline std::string to_source(const Expression& e) { return to_source(e, e.root()); }

}  // namespace infcone
