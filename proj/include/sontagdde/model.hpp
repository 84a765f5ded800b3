#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "sontagdde/errors.hpp"
#include "sontagdde/expr.hpp"
#include "sontagdde/history.hpp"

namespace sontagdde {

/// x'(t) = f(x_t) + g(x_t) (u(t) + d(t)) with x in R^n, u in R^m and maximum delay delta.
struct SystemModel {
  std::size_t n = 1;
  std::size_t m = 1;
  double delta = 1.0;
  std::vector<double> discrete_delays;  // sorted lags tau >= 0 of every x[i](-tau)
  std::vector<Expr> f;                  // n entries
  std::vector<Expr> g;                  // n*m entries, row-major
  std::vector<std::string> division_sites;

  friend bool operator==(const SystemModel&, const SystemModel&) = default;
};

/// Recomputes the derived fields (delay set and division sites) from f and g.
inline void index_expressions(SystemModel& model) {
  std::vector<double> delays;
  std::vector<std::string> divisions;
  auto scan = [&](const Expr& root) {
    visit(root, [&](const Expr& e) {
      if (e.op() == Op::StateRef && !e.node().at_var) delays.push_back(e.node().number == 0.0 ? 0.0 : -e.node().number);
      if (e.op() == Op::Div) divisions.push_back(to_string(e));
    });
  };
  for (const auto& e : model.f) scan(e);
  for (const auto& e : model.g) scan(e);
  std::sort(delays.begin(), delays.end());
  delays.erase(std::unique(delays.begin(), delays.end()), delays.end());
  model.discrete_delays = std::move(delays);
  model.division_sites = std::move(divisions);
}

/// Grid-alignment report: one message per violation, empty when step is usable.
[[nodiscard]] inline std::vector<std::string> validate(const SystemModel& model, double grid_step) {
  std::vector<std::string> out;
  if (!(grid_step > 0.0)) {
    out.push_back("grid step " + format_number(grid_step) + " must be positive");
    return out;
  }
  if (!grid_multiple(model.delta, grid_step)) {
    out.push_back("grid step " + format_number(grid_step) + " does not divide delta " + format_number(model.delta));
  }
  for (double d : model.discrete_delays) {
    if (!grid_multiple(d, grid_step)) {
      out.push_back("delay " + format_number(d) + " is not a multiple of grid step " + format_number(grid_step));
    }
  }
  return out;
}

namespace detail {

template <Segment S>
void check_compatible(const SystemModel& model, const S& seg) {
  if (seg.dim() != model.n) {
    throw ConfigError("segment dimension " + std::to_string(seg.dim()) + " does not match n=" + std::to_string(model.n));
  }
  if (std::abs(seg.delta() - model.delta) > kGridTolerance * std::max(1.0, model.delta)) {
    throw ConfigError("segment delta " + format_number(seg.delta()) + " does not match model delta " +
                      format_number(model.delta));
  }
  for (double d : model.discrete_delays) {
    if (!grid_multiple(d, seg.step())) {
      throw ConfigError("delay " + format_number(d) + " is not a multiple of grid step " + format_number(seg.step()));
    }
  }
}

}  // namespace detail

template <Segment S>
[[nodiscard]] Vector eval_f(const SystemModel& model, const S& seg) {
  detail::check_compatible(model, seg);
  Vector out(static_cast<Eigen::Index>(model.n));
  for (std::size_t i = 0; i < model.n; ++i) out[static_cast<Eigen::Index>(i)] = evaluate(model.f[i], seg);
  return out;
}

template <Segment S>
[[nodiscard]] Matrix eval_g(const SystemModel& model, const S& seg) {
  detail::check_compatible(model, seg);
  Matrix out(static_cast<Eigen::Index>(model.n), static_cast<Eigen::Index>(model.m));
  for (std::size_t i = 0; i < model.n; ++i) {
    for (std::size_t j = 0; j < model.m; ++j) {
      out(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = evaluate(model.g[i * model.m + j], seg);
    }
  }
  return out;
}

/// True when f and g are independent of the state; used to skip re-evaluation of g per stage.
[[nodiscard]] inline bool is_state_free(const Expr& root) {
  bool free = true;
  visit(root, [&](const Expr& e) {
    if (e.op() == Op::StateRef) free = false;
  });
  return free;
}

namespace detail {

inline std::string print_list(const std::vector<Expr>& xs) {
  if (xs.size() == 1) return to_string(xs.front());
  std::string out = "[";
  for (std::size_t k = 0; k < xs.size(); ++k) {
    if (k) out += ", ";
    out += to_string(xs[k]);
  }
  return out + "]";
}

}  // namespace detail

/// Canonical "system { ... }" block.
[[nodiscard]] inline std::string to_text(const SystemModel& model) {
  std::string out = "system {\n";
  out += "  n = " + std::to_string(model.n) + "\n";
  out += "  m = " + std::to_string(model.m) + "\n";
  out += "  delta = " + format_number(model.delta) + "\n";
  out += "  f = " + detail::print_list(model.f) + "\n";
  out += "  g = " + detail::print_list(model.g) + "\n";
  out += "}\n";
  return out;
}

}  // namespace sontagdde
