#pragma once

// Expression trees for the maps f and g. Leaves read the state segment (point lookups
// x[i](-tau) and distributed terms integral(w(s) * x[i](s), s, lo, hi)); interior nodes are
// arithmetic and a small set of smooth functions.

#include <cmath>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "sontagdde/errors.hpp"
#include "sontagdde/history.hpp"

namespace sontagdde {

enum class Op {
  Constant,
  Var,       // integration variable s
  StateRef,  // x[index](number) or x[index](s)
  Integral,  // integral(args[0], s, number, upper)
  Neg,
  Sin,
  Cos,
  Tanh,
  Exp,
  Abs,
  Pow,  // args[0] ^ index, index >= 0
  Add,
  Sub,
  Mul,
  Div,
};

/// Divisors with magnitude below this raise EvalError.
inline constexpr double kDivisionGuard = 1e-12;

class Expr;

struct ExprNode {
  Op op = Op::Constant;
  double number = 0.0;  // constant value, state-ref argument, or integral lower bound
  double upper = 0.0;   // integral upper bound
  int index = 0;        // state component or power exponent
  bool at_var = false;  // state ref evaluated at s
  std::vector<Expr> args;
};

/// Immutable, shareable expression handle with structural equality.
class Expr {
 public:
  Expr() : node_(std::make_shared<const ExprNode>()) {}
  explicit Expr(ExprNode node) : node_(std::make_shared<const ExprNode>(std::move(node))) {}

  static Expr constant(double v) { return Expr(ExprNode{Op::Constant, v, 0.0, 0, false, {}}); }
  static Expr var() { return Expr(ExprNode{Op::Var, 0.0, 0.0, 0, false, {}}); }
  static Expr state(int i, double arg) { return Expr(ExprNode{Op::StateRef, arg, 0.0, i, false, {}}); }
  static Expr state_at_var(int i) { return Expr(ExprNode{Op::StateRef, 0.0, 0.0, i, true, {}}); }
  static Expr integral(Expr integrand, double lo, double hi) {
    return Expr(ExprNode{Op::Integral, lo, hi, 0, false, {std::move(integrand)}});
  }
  static Expr unary(Op op, Expr a) { return Expr(ExprNode{op, 0.0, 0.0, 0, false, {std::move(a)}}); }
  static Expr pow(Expr a, int k) { return Expr(ExprNode{Op::Pow, 0.0, 0.0, k, false, {std::move(a)}}); }
  static Expr binary(Op op, Expr a, Expr b) {
    return Expr(ExprNode{op, 0.0, 0.0, 0, false, {std::move(a), std::move(b)}});
  }

  [[nodiscard]] const ExprNode& node() const noexcept { return *node_; }
  [[nodiscard]] Op op() const noexcept { return node_->op; }
  [[nodiscard]] const Expr& arg(std::size_t k) const { return node_->args.at(k); }

  friend bool operator==(const Expr& a, const Expr& b) {
    if (a.node_ == b.node_) return true;
    const ExprNode& x = *a.node_;
    const ExprNode& y = *b.node_;
    return x.op == y.op && x.number == y.number && x.upper == y.upper && x.index == y.index &&
           x.at_var == y.at_var && x.args == y.args;
  }

 private:
  std::shared_ptr<const ExprNode> node_;
};

[[nodiscard]] inline const char* function_name(Op op) {
  switch (op) {
    case Op::Sin: return "sin";
    case Op::Cos: return "cos";
    case Op::Tanh: return "tanh";
    case Op::Exp: return "exp";
    case Op::Abs: return "abs";
    case Op::Pow: return "pow";
    default: return "";
  }
}

namespace detail {

inline int precedence(const Expr& e) {
  switch (e.op()) {
    case Op::Add:
    case Op::Sub: return 1;
    case Op::Mul:
    case Op::Div: return 2;
    case Op::Constant: return e.node().number < 0.0 || std::signbit(e.node().number) ? 2 : 3;
    default: return 3;
  }
}

inline void print_to(const Expr& e, std::string& out);

inline void print_operand(const Expr& e, bool parens, std::string& out) {
  if (parens) out += "(";
  print_to(e, out);
  if (parens) out += ")";
}

inline void print_to(const Expr& e, std::string& out) {
  const ExprNode& n = e.node();
  switch (n.op) {
    case Op::Constant: out += format_number(n.number); return;
    case Op::Var: out += "s"; return;
    case Op::StateRef:
      out += "x[" + std::to_string(n.index) + "](" + (n.at_var ? std::string("s") : format_number(n.number)) + ")";
      return;
    case Op::Integral:
      out += "integral(";
      print_to(n.args[0], out);
      out += ", s, " + format_number(n.number) + ", " + format_number(n.upper) + ")";
      return;
    case Op::Neg:
      out += "-";
      // "-2.0" would reparse as a folded negative literal
      print_operand(n.args[0], precedence(n.args[0]) < 3 || n.args[0].op() == Op::Constant, out);
      return;
    case Op::Pow:
      out += "pow(";
      print_to(n.args[0], out);
      out += ", " + std::to_string(n.index) + ")";
      return;
    case Op::Sin:
    case Op::Cos:
    case Op::Tanh:
    case Op::Exp:
    case Op::Abs:
      out += function_name(n.op);
      out += "(";
      print_to(n.args[0], out);
      out += ")";
      return;
    case Op::Add:
    case Op::Sub:
    case Op::Mul:
    case Op::Div: {
      const int p = precedence(e);
      print_operand(n.args[0], precedence(n.args[0]) < p, out);
      out += n.op == Op::Add ? " + " : n.op == Op::Sub ? " - " : n.op == Op::Mul ? "*" : "/";
      print_operand(n.args[1], precedence(n.args[1]) <= p, out);
      return;
    }
  }
}

}  // namespace detail

/// Canonical text; parsing it back yields an equal tree.
[[nodiscard]] inline std::string to_string(const Expr& e) {
  std::string out;
  detail::print_to(e, out);
  return out;
}

namespace detail {

inline double checked(double v, const Expr& e) {
  if (!std::isfinite(v)) throw EvalError("non-finite value in '" + to_string(e) + "'");
  return v;
}

}  // namespace detail

/// Evaluates e on a segment; s is the integration variable (only meaningful inside integrals).
template <Segment S>
[[nodiscard]] double evaluate(const Expr& e, const S& seg, double s = 0.0) {
  const ExprNode& n = e.node();
  switch (n.op) {
    case Op::Constant: return n.number;
    case Op::Var: return s;
    case Op::StateRef: return seg.value(static_cast<std::size_t>(n.index), n.at_var ? s : n.number);
    case Op::Integral: {
      const Expr& body = n.args[0];
      return detail::checked(trapezoid(seg, n.number, n.upper, [&](double t) { return evaluate(body, seg, t); }), e);
    }
    case Op::Neg: return -evaluate(n.args[0], seg, s);
    case Op::Sin: return std::sin(evaluate(n.args[0], seg, s));
    case Op::Cos: return std::cos(evaluate(n.args[0], seg, s));
    case Op::Tanh: return std::tanh(evaluate(n.args[0], seg, s));
    case Op::Exp: return detail::checked(std::exp(evaluate(n.args[0], seg, s)), e);
    case Op::Abs: return std::abs(evaluate(n.args[0], seg, s));
    case Op::Pow: {
      const double base = evaluate(n.args[0], seg, s);
      double acc = 1.0;
      for (int k = 0; k < n.index; ++k) acc *= base;
      return detail::checked(acc, e);
    }
    case Op::Add: return detail::checked(evaluate(n.args[0], seg, s) + evaluate(n.args[1], seg, s), e);
    case Op::Sub: return detail::checked(evaluate(n.args[0], seg, s) - evaluate(n.args[1], seg, s), e);
    case Op::Mul: return detail::checked(evaluate(n.args[0], seg, s) * evaluate(n.args[1], seg, s), e);
    case Op::Div: {
      const double den = evaluate(n.args[1], seg, s);
      if (std::abs(den) < kDivisionGuard) {
        throw EvalError("division by near-zero value " + format_number(den) + " in '" + to_string(e) + "'");
      }
      return detail::checked(evaluate(n.args[0], seg, s) / den, e);
    }
  }
  return 0.0;
}

/// Placeholder segment for expressions that may only use s (initial histories, weights).
struct NoSegment {
  [[nodiscard]] std::size_t dim() const noexcept { return 0; }
  [[nodiscard]] double delta() const noexcept { return 0.0; }
  [[nodiscard]] double step() const noexcept { return 0.0; }
  [[noreturn]] double value(std::size_t, double) const { throw EvalError("expression reads the state"); }
  [[noreturn]] std::vector<double> nodes(double, double) const { throw EvalError("expression reads the state"); }
};

/// Polynomial degree in s and degree in state references, as far as the integrand
/// restrictions care. ok == false for anything outside "polynomial weight times linear state".
struct IntegrandShape {
  bool ok = true;
  int s_degree = 0;
  int state_degree = 0;
};

[[nodiscard]] inline IntegrandShape integrand_shape(const Expr& e) {
  const ExprNode& n = e.node();
  switch (n.op) {
    case Op::Constant: return {};
    case Op::Var: return {true, 1, 0};
    case Op::StateRef: return {true, 0, n.at_var ? 1 : 0};
    case Op::Integral: return {false, 0, 0};
    case Op::Neg: return integrand_shape(n.args[0]);
    case Op::Pow: {
      auto a = integrand_shape(n.args[0]);
      return {a.ok, a.s_degree * n.index, a.state_degree * n.index};
    }
    case Op::Sin:
    case Op::Cos:
    case Op::Tanh:
    case Op::Exp:
    case Op::Abs: {
      auto a = integrand_shape(n.args[0]);
      return {a.ok && a.s_degree == 0 && a.state_degree == 0, 0, 0};
    }
    case Op::Add:
    case Op::Sub: {
      auto a = integrand_shape(n.args[0]);
      auto b = integrand_shape(n.args[1]);
      return {a.ok && b.ok, std::max(a.s_degree, b.s_degree), std::max(a.state_degree, b.state_degree)};
    }
    case Op::Mul: {
      auto a = integrand_shape(n.args[0]);
      auto b = integrand_shape(n.args[1]);
      return {a.ok && b.ok, a.s_degree + b.s_degree, a.state_degree + b.state_degree};
    }
    case Op::Div: {
      auto a = integrand_shape(n.args[0]);
      auto b = integrand_shape(n.args[1]);
      return {a.ok && b.ok && b.s_degree == 0 && b.state_degree == 0, a.s_degree, a.state_degree};
    }
  }
  return {false, 0, 0};
}

/// Visits every node depth first.
template <class F>
void visit(const Expr& e, F&& fn) {
  fn(e);
  for (const auto& a : e.node().args) visit(a, fn);
}

}  // namespace sontagdde
