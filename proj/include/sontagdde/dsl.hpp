#pragma once

// Lexer and recursive-descent parser for the model description language:
//
//   system { n = 1  m = 1  delta = 1.0
//            f = -x[0](0) + 0.5*x[0](-1.0)
//            g = 1.0 }
//
// Expressions: + - * / unary minus, sin cos tanh exp abs pow(e, k), state lookups
// x[i](-tau), and integral(w(s)*x[i](s), s, lo, hi) with a polynomial weight of degree <= 4.
// '#' starts a comment that runs to the end of the line.

#include <cctype>
#include <charconv>
#include <cmath>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "sontagdde/errors.hpp"
#include "sontagdde/expr.hpp"
#include "sontagdde/model.hpp"

namespace sontagdde {

enum class TokenKind { Number, Ident, String, Punct, End };

struct Token {
  TokenKind kind = TokenKind::End;
  std::string text;
  double number = 0.0;
  int line = 1;
  int column = 1;
};

[[nodiscard]] inline std::vector<Token> tokenize(std::string_view src) {
  std::vector<Token> out;
  int line = 1;
  int col = 1;
  std::size_t k = 0;
  auto advance_char = [&] {
    if (src[k] == '\n') {
      ++line;
      col = 1;
    } else {
      ++col;
    }
    ++k;
  };
  while (k < src.size()) {
    const char c = src[k];
    if (std::isspace(static_cast<unsigned char>(c))) {
      advance_char();
      continue;
    }
    if (c == '#') {
      while (k < src.size() && src[k] != '\n') advance_char();
      continue;
    }
    Token t;
    t.line = line;
    t.column = col;
    if (std::isdigit(static_cast<unsigned char>(c)) || (c == '.' && k + 1 < src.size() &&
                                                        std::isdigit(static_cast<unsigned char>(src[k + 1])))) {
      const std::size_t start = k;
      while (k < src.size() && (std::isdigit(static_cast<unsigned char>(src[k])) || src[k] == '.')) advance_char();
      if (k < src.size() && (src[k] == 'e' || src[k] == 'E')) {
        std::size_t look = k + 1;
        if (look < src.size() && (src[look] == '+' || src[look] == '-')) ++look;
        if (look < src.size() && std::isdigit(static_cast<unsigned char>(src[look]))) {
          while (k < look) advance_char();
          while (k < src.size() && std::isdigit(static_cast<unsigned char>(src[k]))) advance_char();
        }
      }
      t.kind = TokenKind::Number;
      t.text = std::string(src.substr(start, k - start));
      auto [ptr, ec] = std::from_chars(t.text.data(), t.text.data() + t.text.size(), t.number);
      if (ec != std::errc{} || ptr != t.text.data() + t.text.size()) {
        throw ParseError({{t.line, t.column, "malformed number '" + t.text + "'"}});
      }
    } else if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
      const std::size_t start = k;
      while (k < src.size() && (std::isalnum(static_cast<unsigned char>(src[k])) || src[k] == '_')) advance_char();
      t.kind = TokenKind::Ident;
      t.text = std::string(src.substr(start, k - start));
    } else if (c == '"') {
      advance_char();
      const std::size_t start = k;
      while (k < src.size() && src[k] != '"' && src[k] != '\n') advance_char();
      if (k >= src.size() || src[k] != '"') throw ParseError({{t.line, t.column, "unterminated string"}});
      t.kind = TokenKind::String;
      t.text = std::string(src.substr(start, k - start));
      advance_char();
    } else if (std::string_view("{}[](),=+-*/").find(c) != std::string_view::npos) {
      t.kind = TokenKind::Punct;
      t.text = std::string(1, c);
      advance_char();
    } else {
      throw ParseError({{line, col, std::string("unexpected character '") + c + "'"}});
    }
    out.push_back(std::move(t));
  }
  Token end;
  end.line = line;
  end.column = col;
  out.push_back(end);
  return out;
}

/// Shared token-stream machinery and the expression grammar; block parsers build on it.
class DslParser {
 public:
  explicit DslParser(std::string_view text) : tokens_(tokenize(text)) {}

  struct StateSite {
    int index;
    double arg;
    bool at_var;
    int line;
    int column;
  };
  struct IntegralSite {
    Expr node;
    int line;
    int column;
  };

  [[nodiscard]] const Token& peek(std::size_t ahead = 0) const {
    return tokens_[std::min(pos_ + ahead, tokens_.size() - 1)];
  }
  const Token& take() {
    const Token& t = tokens_[pos_];
    if (pos_ + 1 < tokens_.size()) ++pos_;
    return t;
  }
  [[nodiscard]] bool at_end() const { return peek().kind == TokenKind::End; }
  [[nodiscard]] bool is_punct(char c, std::size_t ahead = 0) const {
    return peek(ahead).kind == TokenKind::Punct && peek(ahead).text[0] == c;
  }
  [[nodiscard]] bool is_ident(std::string_view name, std::size_t ahead = 0) const {
    return peek(ahead).kind == TokenKind::Ident && peek(ahead).text == name;
  }

  [[noreturn]] void fail(const Token& at, const std::string& msg) const {
    throw ParseError({{at.line, at.column, msg}});
  }

  static std::string describe(const Token& t) {
    switch (t.kind) {
      case TokenKind::End: return "end of input";
      case TokenKind::String: return "string \"" + t.text + "\"";
      default: return "'" + t.text + "'";
    }
  }

  void expect_punct(char c) {
    if (!is_punct(c)) fail(peek(), std::string("expected '") + c + "' but found " + describe(peek()));
    take();
  }

  const Token& expect_ident() {
    if (peek().kind != TokenKind::Ident) fail(peek(), "expected identifier but found " + describe(peek()));
    return take();
  }

  void expect_keyword(std::string_view word) {
    if (!is_ident(word)) fail(peek(), "expected '" + std::string(word) + "' but found " + describe(peek()));
    take();
  }

  /// Optionally signed numeric literal.
  double parse_number() {
    bool negative = false;
    if (is_punct('-')) {
      take();
      negative = true;
    } else if (is_punct('+')) {
      take();
    }
    if (peek().kind != TokenKind::Number) fail(peek(), "expected number but found " + describe(peek()));
    const double v = take().number;
    return negative ? -v : v;
  }

  long parse_integer() {
    const Token& at = peek();
    const double v = parse_number();
    if (v != std::floor(v) || std::abs(v) > 9.0e15) fail(at, "expected integer but found " + format_number(v));
    return static_cast<long>(v);
  }

  /// "[" number ("," number)* "]" or a bare number.
  std::vector<double> parse_number_list() {
    std::vector<double> out;
    if (!is_punct('[')) {
      out.push_back(parse_number());
      return out;
    }
    take();
    if (!is_punct(']')) {
      out.push_back(parse_number());
      while (is_punct(',')) {
        take();
        out.push_back(parse_number());
      }
    }
    expect_punct(']');
    return out;
  }

  /// expr | "[" expr ("," expr)* "]"
  std::vector<Expr> parse_expr_list(bool allow_var, bool allow_state) {
    std::vector<Expr> out;
    if (!is_punct('[')) {
      out.push_back(parse_expr(allow_var, allow_state));
      return out;
    }
    take();
    out.push_back(parse_expr(allow_var, allow_state));
    while (is_punct(',')) {
      take();
      out.push_back(parse_expr(allow_var, allow_state));
    }
    expect_punct(']');
    return out;
  }

  Expr parse_expr(bool allow_var, bool allow_state) {
    const bool saved_var = allow_var_;
    const bool saved_state = allow_state_;
    allow_var_ = allow_var;
    allow_state_ = allow_state;
    Expr e = expr();
    allow_var_ = saved_var;
    allow_state_ = saved_state;
    return e;
  }

  std::vector<StateSite>& state_sites() { return state_sites_; }
  std::vector<IntegralSite>& integral_sites() { return integral_sites_; }

  /// Skips a balanced "{ ... }" group starting at the current '{'.
  void skip_braced() {
    expect_punct('{');
    int depth = 1;
    while (depth > 0) {
      if (at_end()) fail(peek(), "unbalanced '{'");
      if (is_punct('{')) ++depth;
      if (is_punct('}')) --depth;
      take();
    }
  }

 private:
  Expr expr() {
    Expr lhs = term();
    while (is_punct('+') || is_punct('-')) {
      const Op op = take().text[0] == '+' ? Op::Add : Op::Sub;
      lhs = Expr::binary(op, std::move(lhs), term());
    }
    return lhs;
  }

  Expr term() {
    Expr lhs = factor();
    while (is_punct('*') || is_punct('/')) {
      const Op op = take().text[0] == '*' ? Op::Mul : Op::Div;
      lhs = Expr::binary(op, std::move(lhs), factor());
    }
    return lhs;
  }

  Expr factor() {
    const Token& t = peek();
    if (t.kind == TokenKind::Number) return Expr::constant(take().number);
    if (is_punct('-')) {
      take();
      if (peek().kind == TokenKind::Number) return Expr::constant(-take().number);
      return Expr::unary(Op::Neg, factor());
    }
    if (is_punct('(')) {
      take();
      Expr inner = expr();
      expect_punct(')');
      return inner;
    }
    if (t.kind != TokenKind::Ident) fail(t, "expected expression but found " + describe(t));
    const std::string name = t.text;
    if (name == "x") return state_ref();
    if (name == "s") {
      if (!allow_var_) fail(t, "'s' is only defined inside integral(...)");
      take();
      return Expr::var();
    }
    if (name == "integral") return integral();
    if (name == "pow") {
      take();
      expect_punct('(');
      Expr base = expr();
      expect_punct(',');
      const Token& at = peek();
      const long k = parse_integer();
      if (k < 0 || k > 16) fail(at, "pow exponent must be an integer in [0, 16]");
      expect_punct(')');
      return Expr::pow(std::move(base), static_cast<int>(k));
    }
    static constexpr std::pair<std::string_view, Op> kFunctions[] = {
        {"sin", Op::Sin}, {"cos", Op::Cos}, {"tanh", Op::Tanh}, {"exp", Op::Exp}, {"abs", Op::Abs}};
    for (const auto& [fname, op] : kFunctions) {
      if (name == fname) {
        take();
        expect_punct('(');
        Expr arg = expr();
        expect_punct(')');
        return Expr::unary(op, std::move(arg));
      }
    }
    fail(t, "unknown identifier '" + name + "'");
  }

  Expr state_ref() {
    const Token& at = take();
    if (!allow_state_) fail(at, "state references are not allowed here");
    expect_punct('[');
    const Token& idx_tok = peek();
    if (idx_tok.kind != TokenKind::Number || idx_tok.number != std::floor(idx_tok.number)) {
      fail(idx_tok, "state index must be a non-negative integer");
    }
    const int index = static_cast<int>(take().number);
    expect_punct(']');
    expect_punct('(');
    if (is_ident("s")) {
      const Token& s_tok = take();
      if (!allow_var_) fail(s_tok, "'s' is only defined inside integral(...)");
      expect_punct(')');
      state_sites_.push_back({index, 0.0, true, at.line, at.column});
      return Expr::state_at_var(index);
    }
    const double arg = parse_number();
    expect_punct(')');
    state_sites_.push_back({index, arg, false, at.line, at.column});
    return Expr::state(index, arg);
  }

  Expr integral() {
    const Token& at = take();
    if (allow_var_) fail(at, "nested integrals are not supported");
    expect_punct('(');
    allow_var_ = true;
    Expr body = expr();
    allow_var_ = false;
    expect_punct(',');
    expect_keyword("s");
    expect_punct(',');
    const double lo = parse_number();
    expect_punct(',');
    const double hi = parse_number();
    expect_punct(')');
    Expr node = Expr::integral(std::move(body), lo, hi);
    integral_sites_.push_back({node, at.line, at.column});
    return node;
  }

  std::vector<Token> tokens_;
  std::size_t pos_ = 0;
  bool allow_var_ = false;
  bool allow_state_ = true;
  std::vector<StateSite> state_sites_;
  std::vector<IntegralSite> integral_sites_;
};

/// Parses the body of a "system { ... }" block (parser positioned at the keyword).
inline SystemModel parse_system_block(DslParser& p) {
  const Token start = p.peek();
  p.expect_keyword("system");
  p.expect_punct('{');
  p.state_sites().clear();
  p.integral_sites().clear();

  std::optional<long> n, m;
  std::optional<double> delta;
  std::optional<std::vector<Expr>> f, g;
  Token f_tok, g_tok;
  std::vector<Diagnostic> diags;

  while (!p.is_punct('}')) {
    const Token key = p.expect_ident();
    p.expect_punct('=');
    auto dup = [&](bool seen) {
      if (seen) diags.push_back({key.line, key.column, "duplicate declaration of '" + key.text + "'"});
    };
    if (key.text == "n" || key.text == "m") {
      const Token at = p.peek();
      const long v = p.parse_integer();
      if (v <= 0) diags.push_back({at.line, at.column, key.text + " must be a positive integer"});
      auto& slot = key.text == "n" ? n : m;
      dup(slot.has_value());
      slot = v;
    } else if (key.text == "delta") {
      const Token at = p.peek();
      const double v = p.parse_number();
      if (!(v > 0.0)) diags.push_back({at.line, at.column, "delta must be positive"});
      dup(delta.has_value());
      delta = v;
    } else if (key.text == "f") {
      dup(f.has_value());
      f_tok = key;
      f = p.parse_expr_list(false, true);
    } else if (key.text == "g") {
      dup(g.has_value());
      g_tok = key;
      g = p.parse_expr_list(false, true);
    } else {
      p.fail(key, "unknown system field '" + key.text + "'");
    }
  }
  p.expect_punct('}');

  for (const char* name : {"n", "m", "delta", "f", "g"}) {
    const bool present = (name[0] == 'n' && n) || (name[0] == 'm' && m) || (name[0] == 'd' && delta) ||
                         (name[0] == 'f' && f) || (name[0] == 'g' && g);
    if (!present) diags.push_back({start.line, start.column, std::string("system block is missing '") + name + "'"});
  }
  if (!diags.empty()) throw ParseError(std::move(diags));

  SystemModel model;
  model.n = static_cast<std::size_t>(*n);
  model.m = static_cast<std::size_t>(*m);
  model.delta = *delta;
  model.f = std::move(*f);
  model.g = std::move(*g);

  if (model.f.size() != model.n) {
    diags.push_back({f_tok.line, f_tok.column,
                     "f has " + std::to_string(model.f.size()) + " entries, expected n=" + std::to_string(model.n)});
  }
  if (model.g.size() != model.n * model.m) {
    diags.push_back({g_tok.line, g_tok.column,
                     "g has " + std::to_string(model.g.size()) + " entries, expected n*m=" +
                         std::to_string(model.n * model.m)});
  }
  const double tol = kGridTolerance * std::max(1.0, model.delta);
  for (const auto& site : p.state_sites()) {
    if (site.index < 0 || static_cast<std::size_t>(site.index) >= model.n) {
      diags.push_back({site.line, site.column,
                       "state index " + std::to_string(site.index) + " out of range for n=" + std::to_string(model.n)});
    }
    if (site.at_var) continue;
    if (site.arg > tol) {
      diags.push_back({site.line, site.column, "state argument " + format_number(site.arg) + " lies in the future"});
    } else if (-site.arg > model.delta + tol) {
      diags.push_back({site.line, site.column,
                       "delay " + format_number(-site.arg) + " exceeds delta " + format_number(model.delta)});
    }
  }
  for (const auto& site : p.integral_sites()) {
    const ExprNode& node = site.node.node();
    if (!(node.number < node.upper)) {
      diags.push_back({site.line, site.column, "integral bounds must satisfy lo < hi"});
    }
    if (node.number < -model.delta - tol || node.upper > tol) {
      diags.push_back({site.line, site.column,
                       "integral bounds [" + format_number(node.number) + ", " + format_number(node.upper) +
                           "] must lie within [-" + format_number(model.delta) + ", 0]"});
    }
    const IntegrandShape shape = integrand_shape(node.args[0]);
    if (!shape.ok || shape.state_degree > 1) {
      diags.push_back({site.line, site.column, "integrand must be a polynomial in s times a linear state term"});
    } else if (shape.s_degree > 4) {
      diags.push_back({site.line, site.column,
                       "integral weight degree " + std::to_string(shape.s_degree) + " exceeds 4"});
    }
  }
  if (!diags.empty()) throw ParseError(std::move(diags));

  index_expressions(model);
  return model;
}

/// Parses the system block of a description; other top-level blocks are skipped.
[[nodiscard]] inline SystemModel parse_model(std::string_view text) {
  DslParser p(text);
  std::optional<SystemModel> model;
  while (!p.at_end()) {
    if (p.is_ident("system")) {
      if (model) p.fail(p.peek(), "duplicate system block");
      model = parse_system_block(p);
    } else {
      p.expect_ident();
      p.skip_braced();
    }
  }
  if (!model) throw ParseError({{1, 1, "no system block found"}});
  return *std::move(model);
}

}  // namespace sontagdde
