#pragma once

// Experiment files: one document carrying the model, the functional and the run settings.
//
//   system { ... }
//   clkf { P = [1.0] term(tau=1.0, mu=0.25, Q=[1.0])
//          alpha1 = pow(0.4, 2) alpha2 = pow(1.5, 2) alpha3 = pow(0.1, 2) r = 0.5 p = 1.0 }
//   experiment { mode = kr-plus-iss q = 10 step = 0.001 horizon = 50 settle = 0.5
//                record_every = 10 disturbance = sin(amp=[0.5], freq=1.0, phase=0.0)
//                initial = [1.0] sweep = [1, 10, 100] seed = 7 samples = 1000 out = "run.csv" }

#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "sontagdde/clkf.hpp"
#include "sontagdde/controller.hpp"
#include "sontagdde/disturbance.hpp"
#include "sontagdde/dsl.hpp"
#include "sontagdde/errors.hpp"
#include "sontagdde/history.hpp"
#include "sontagdde/model.hpp"

namespace sontagdde {

struct ExperimentSettings {
  ControlMode mode = ControlMode::KrPlusIss;
  double q = 1.0;
  double step = 1e-3;
  double horizon = 10.0;
  double settle = 0.5;
  std::size_t record_every = 1;
  DisturbanceSpec disturbance = DisturbanceSpec::zero(1);
  std::vector<Expr> initial;  // one expression in s per state component
  std::vector<double> sweep;
  std::uint64_t seed = 1;
  std::size_t samples = 1000;
  std::string out = "trajectory.csv";

  friend bool operator==(const ExperimentSettings&, const ExperimentSettings&) = default;
};

struct ExperimentConfig {
  SystemModel model;
  std::optional<ClkfSpec> clkf;
  ExperimentSettings experiment;

  friend bool operator==(const ExperimentConfig&, const ExperimentConfig&) = default;
};

namespace detail {

inline Matrix square_matrix(DslParser& p, const Token& at, std::size_t& dim_out) {
  const std::vector<double> xs = p.parse_number_list();
  const auto n = static_cast<std::size_t>(std::llround(std::sqrt(static_cast<double>(xs.size()))));
  if (n == 0 || n * n != xs.size()) p.fail(at, "matrix needs a square number of entries (row-major)");
  Matrix M(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) M(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = xs[i * n + j];
  }
  dim_out = n;
  return M;
}

inline KInfFn parse_kinf(DslParser& p) {
  p.expect_keyword("pow");
  p.expect_punct('(');
  KInfFn k;
  k.coefficient = p.parse_number();
  p.expect_punct(',');
  k.exponent = p.parse_number();
  p.expect_punct(')');
  return k;
}

inline Vector to_vector(const std::vector<double>& xs) {
  Vector v(static_cast<Eigen::Index>(xs.size()));
  for (std::size_t i = 0; i < xs.size(); ++i) v[static_cast<Eigen::Index>(i)] = xs[i];
  return v;
}

}  // namespace detail

inline ClkfSpec parse_clkf_block(DslParser& p) {
  const Token start = p.peek();
  p.expect_keyword("clkf");
  p.expect_punct('{');
  ClkfSpec c;
  bool has_p = false, has_a1 = false, has_a2 = false, has_a3 = false, has_r = false, has_pp = false;
  while (!p.is_punct('}')) {
    const Token key = p.expect_ident();
    if (key.text == "term") {
      p.expect_punct('(');
      IntegralTerm t;
      bool has_tau = false, has_mu = false, has_q = false;
      while (!p.is_punct(')')) {
        const Token field = p.expect_ident();
        p.expect_punct('=');
        if (field.text == "tau") {
          t.tau = p.parse_number();
          has_tau = true;
        } else if (field.text == "mu") {
          t.mu = p.parse_number();
          has_mu = true;
        } else if (field.text == "Q") {
          std::size_t dim = 0;
          t.Q = detail::square_matrix(p, field, dim);
          has_q = true;
        } else {
          p.fail(field, "unknown term field '" + field.text + "'");
        }
        if (p.is_punct(',')) p.take();
      }
      p.expect_punct(')');
      if (!(has_tau && has_mu && has_q)) p.fail(key, "term needs tau, mu and Q");
      c.terms.push_back(std::move(t));
      continue;
    }
    p.expect_punct('=');
    if (key.text == "P") {
      std::size_t dim = 0;
      c.P = detail::square_matrix(p, key, dim);
      has_p = true;
    } else if (key.text == "alpha1") {
      c.alpha1 = detail::parse_kinf(p);
      has_a1 = true;
    } else if (key.text == "alpha2") {
      c.alpha2 = detail::parse_kinf(p);
      has_a2 = true;
    } else if (key.text == "alpha3") {
      c.alpha3 = detail::parse_kinf(p);
      has_a3 = true;
    } else if (key.text == "r") {
      c.r = p.parse_number();
      has_r = true;
    } else if (key.text == "p") {
      c.p = p.parse_number();
      has_pp = true;
    } else {
      p.fail(key, "unknown clkf field '" + key.text + "'");
    }
  }
  p.expect_punct('}');
  std::vector<Diagnostic> diags;
  const std::pair<const char*, bool> required[] = {{"P", has_p},           {"alpha1", has_a1}, {"alpha2", has_a2},
                                                   {"alpha3", has_a3},     {"r", has_r},       {"p", has_pp}};
  for (const auto& [name, ok] : required) {
    if (!ok) diags.push_back({start.line, start.column, std::string("clkf block is missing '") + name + "'"});
  }
  if (!diags.empty()) throw ParseError(std::move(diags));
  return c;
}

inline DisturbanceSpec parse_disturbance(DslParser& p) {
  const Token kind = p.expect_ident();
  if (kind.text == "zero") {
    std::size_t m = 0;
    if (p.is_punct('(')) {
      p.take();
      m = static_cast<std::size_t>(p.parse_integer());
      p.expect_punct(')');
    }
    auto d = DisturbanceSpec::zero(m);
    return d;
  }
  if (kind.text == "const") {
    p.expect_punct('(');
    const auto v = p.parse_number_list();
    p.expect_punct(')');
    return DisturbanceSpec::constant(detail::to_vector(v));
  }
  if (kind.text == "sin") {
    p.expect_punct('(');
    std::vector<double> amp;
    double freq = 1.0, phase = 0.0;
    while (!p.is_punct(')')) {
      const Token field = p.expect_ident();
      p.expect_punct('=');
      if (field.text == "amp") {
        amp = p.parse_number_list();
      } else if (field.text == "freq") {
        freq = p.parse_number();
      } else if (field.text == "phase") {
        phase = p.parse_number();
      } else {
        p.fail(field, "unknown sin field '" + field.text + "'");
      }
      if (p.is_punct(',')) p.take();
    }
    p.expect_punct(')');
    if (amp.empty()) p.fail(kind, "sin disturbance needs amp=[...]");
    return DisturbanceSpec::sinusoid(detail::to_vector(amp), freq, phase);
  }
  if (kind.text == "uniform") {
    p.expect_punct('(');
    double bound = 0.0;
    std::uint64_t seed = 0;
    std::size_t m = 0;
    while (!p.is_punct(')')) {
      const Token field = p.expect_ident();
      p.expect_punct('=');
      if (field.text == "bound") {
        bound = p.parse_number();
      } else if (field.text == "seed") {
        seed = static_cast<std::uint64_t>(p.parse_integer());
      } else if (field.text == "m") {
        m = static_cast<std::size_t>(p.parse_integer());
      } else {
        p.fail(field, "unknown uniform field '" + field.text + "'");
      }
      if (p.is_punct(',')) p.take();
    }
    p.expect_punct(')');
    if (!(bound >= 0.0)) p.fail(kind, "uniform bound must be nonnegative");
    return DisturbanceSpec::uniform(m, bound, seed);
  }
  p.fail(kind, "unknown disturbance '" + kind.text + "' (zero, const, sin, uniform)");
}

inline ExperimentSettings parse_experiment_block(DslParser& p) {
  p.expect_keyword("experiment");
  p.expect_punct('{');
  ExperimentSettings s;
  std::vector<Diagnostic> diags;
  while (!p.is_punct('}')) {
    const Token key = p.expect_ident();
    p.expect_punct('=');
    const Token at = p.peek();
    if (key.text == "mode") {
      std::string name = p.expect_ident().text;
      while (p.is_punct('-') && p.peek(1).kind == TokenKind::Ident) {
        p.take();
        name += "-" + p.take().text;
      }
      auto mode = parse_mode(name);
      if (!mode) p.fail(at, "unknown mode '" + name + "' (sontag-k, sontag-kr, kr-plus-iss, open-loop)");
      s.mode = *mode;
    } else if (key.text == "q") {
      s.q = p.parse_number();
    } else if (key.text == "step") {
      s.step = p.parse_number();
    } else if (key.text == "horizon") {
      s.horizon = p.parse_number();
    } else if (key.text == "settle") {
      s.settle = p.parse_number();
    } else if (key.text == "record_every") {
      const long v = p.parse_integer();
      if (v < 1) diags.push_back({at.line, at.column, "record_every must be >= 1"});
      s.record_every = static_cast<std::size_t>(std::max(1L, v));
    } else if (key.text == "disturbance") {
      s.disturbance = parse_disturbance(p);
    } else if (key.text == "initial") {
      s.initial = p.parse_expr_list(true, false);
    } else if (key.text == "sweep") {
      s.sweep = p.parse_number_list();
    } else if (key.text == "seed") {
      const long v = p.parse_integer();
      if (v < 0) diags.push_back({at.line, at.column, "seed must be nonnegative"});
      s.seed = static_cast<std::uint64_t>(std::max(0L, v));
    } else if (key.text == "samples") {
      const long v = p.parse_integer();
      if (v < 1) diags.push_back({at.line, at.column, "samples must be >= 1"});
      s.samples = static_cast<std::size_t>(std::max(1L, v));
    } else if (key.text == "out") {
      if (p.peek().kind != TokenKind::String) p.fail(at, "out needs a quoted path");
      s.out = p.take().text;
    } else {
      p.fail(key, "unknown experiment field '" + key.text + "'");
    }
  }
  p.expect_punct('}');
  if (!(s.step > 0.0)) diags.push_back({1, 1, "experiment step must be positive"});
  if (!(s.horizon > 0.0)) diags.push_back({1, 1, "experiment horizon must be positive"});
  if (!(s.settle > 0.0 && s.settle < 1.0)) diags.push_back({1, 1, "settle must lie in (0, 1)"});
  if (!(s.q > 0.0)) diags.push_back({1, 1, "q must be positive"});
  for (std::size_t k = 1; k < s.sweep.size(); ++k) {
    if (!(s.sweep[k] > s.sweep[k - 1])) {
      diags.push_back({1, 1, "sweep values must be strictly increasing"});
      break;
    }
  }
  for (double q : s.sweep) {
    if (!(q > 0.0)) {
      diags.push_back({1, 1, "sweep values must be positive"});
      break;
    }
  }
  if (!diags.empty()) throw ParseError(std::move(diags));
  return s;
}

/// Parses a full experiment document. The system block is mandatory; clkf and experiment are optional.
[[nodiscard]] inline ExperimentConfig read_config(std::string_view text) {
  DslParser p(text);
  std::optional<SystemModel> model;
  std::optional<ClkfSpec> clkf;
  std::optional<ExperimentSettings> exp;
  while (!p.at_end()) {
    const Token at = p.peek();
    if (p.is_ident("system")) {
      if (model) p.fail(at, "duplicate system block");
      model = parse_system_block(p);
    } else if (p.is_ident("clkf")) {
      if (clkf) p.fail(at, "duplicate clkf block");
      clkf = parse_clkf_block(p);
    } else if (p.is_ident("experiment")) {
      if (exp) p.fail(at, "duplicate experiment block");
      exp = parse_experiment_block(p);
    } else {
      p.fail(at, "expected 'system', 'clkf' or 'experiment' but found " + DslParser::describe(at));
    }
  }
  if (!model) throw ParseError({{1, 1, "no system block found"}});

  ExperimentConfig cfg;
  cfg.model = *std::move(model);
  cfg.clkf = std::move(clkf);
  cfg.experiment = exp.value_or(ExperimentSettings{});
  auto& e = cfg.experiment;
  const std::size_t n = cfg.model.n;
  const std::size_t m = cfg.model.m;

  std::vector<Diagnostic> diags;
  if (e.disturbance.m == 0) {
    const auto kept = e.disturbance;
    e.disturbance = kept.kind == DisturbanceSpec::Kind::Zero ? DisturbanceSpec::zero(m)
                                                             : DisturbanceSpec::uniform(m, kept.bound, kept.seed);
  }
  if (e.disturbance.m != m) {
    diags.push_back({1, 1, "disturbance has " + std::to_string(e.disturbance.m) + " components, expected m=" +
                               std::to_string(m)});
  }
  if (e.initial.empty()) e.initial.assign(n, Expr::constant(1.0));
  if (e.initial.size() != n) {
    diags.push_back({1, 1, "initial history has " + std::to_string(e.initial.size()) + " components, expected n=" +
                               std::to_string(n)});
  }
  if (cfg.clkf) {
    for (const auto& msg : check_clkf(*cfg.clkf, n, cfg.model.delta)) diags.push_back({1, 1, "clkf: " + msg});
  }
  if (!diags.empty()) throw ParseError(std::move(diags));
  return cfg;
}

[[nodiscard]] inline std::string to_text(const ExperimentSettings& s) {
  std::string out = "experiment {\n";
  out += "  mode = " + std::string(to_string(s.mode)) + "\n";
  out += "  q = " + format_number(s.q) + "\n";
  out += "  step = " + format_number(s.step) + "\n";
  out += "  horizon = " + format_number(s.horizon) + "\n";
  out += "  settle = " + format_number(s.settle) + "\n";
  out += "  record_every = " + std::to_string(s.record_every) + "\n";
  out += "  disturbance = " + s.disturbance.to_text() + "\n";
  out += "  initial = [";
  for (std::size_t k = 0; k < s.initial.size(); ++k) out += (k ? ", " : "") + to_string(s.initial[k]);
  out += "]\n";
  if (!s.sweep.empty()) {
    out += "  sweep = [";
    for (std::size_t k = 0; k < s.sweep.size(); ++k) out += (k ? ", " : "") + format_number(s.sweep[k]);
    out += "]\n";
  }
  out += "  seed = " + std::to_string(s.seed) + "\n";
  out += "  samples = " + std::to_string(s.samples) + "\n";
  out += "  out = \"" + s.out + "\"\n";
  out += "}\n";
  return out;
}

[[nodiscard]] inline std::string to_text(const ExperimentConfig& cfg) {
  std::string out = to_text(cfg.model);
  if (cfg.clkf) out += to_text(*cfg.clkf);
  out += to_text(cfg.experiment);
  return out;
}

/// Samples the configured initial expressions on the integration grid.
[[nodiscard]] inline HistorySegment initial_history(const ExperimentConfig& cfg, double step) {
  const auto n = cfg.model.n;
  return HistorySegment::from_function(n, cfg.model.delta, step, [&](double s) {
    Vector v(static_cast<Eigen::Index>(n));
    for (std::size_t i = 0; i < n; ++i) v[static_cast<Eigen::Index>(i)] = evaluate(cfg.experiment.initial[i], NoSegment{}, s);
    return v;
  });
}

}  // namespace sontagdde
