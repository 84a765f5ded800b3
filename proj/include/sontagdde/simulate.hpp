#pragma once

// Method-of-steps integration of x'(t) = f(x_t) + g(x_t)(u(t) + d(t)) with classic RK4.
// The control is sampled from x_t at every step start and held over the step; delayed
// lookups inside a step read the stored history (interpolated at half steps).

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <vector>

#include "sontagdde/clkf.hpp"
#include "sontagdde/controller.hpp"
#include "sontagdde/disturbance.hpp"
#include "sontagdde/errors.hpp"
#include "sontagdde/history.hpp"
#include "sontagdde/model.hpp"

namespace sontagdde {

/// States with any component beyond this magnitude abort the run.
inline constexpr double kDivergenceThreshold = 1e12;

struct SimConfig {
  double step = 1e-3;
  double horizon = 10.0;
  HistorySegment initial_history = HistorySegment::constant(1.0, 1e-3, Vector::Ones(1));
  DisturbanceSpec disturbance = DisturbanceSpec::zero(1);
  std::size_t record_every = 1;
  double start_time = 0.0;  // grid multiple; lets a run continue another one
};

struct Trajectory {
  std::size_t n = 1;
  std::size_t m = 1;
  std::vector<double> times;
  std::vector<Vector> states;
  std::vector<Vector> inputs;
  std::vector<Vector> disturbances;
  std::vector<double> V;
  std::vector<double> a;
  std::vector<double> b_norm;
  std::vector<double> rate;      // a + b (u + d) at the record point
  std::vector<double> residual;  // |centered dV/dt - rate|, NaN at the two ends
  std::optional<HistorySegment> terminal;

  [[nodiscard]] std::size_t size() const noexcept { return times.size(); }
};

namespace detail {

inline void check_sim_config(const SystemModel& model, const ClkfSpec* clkf, const ControlConfig& ctrl,
                             const SimConfig& sim) {
  std::vector<std::string> issues = validate(model, sim.step);
  if (clkf != nullptr) {
    for (auto& s : check_clkf(*clkf, model.n, model.delta)) issues.push_back(std::move(s));
    for (auto& s : validate(*clkf, sim.step)) issues.push_back(std::move(s));
  } else if (ctrl.mode != ControlMode::OpenLoop) {
    issues.push_back(std::string(to_string(ctrl.mode)) + " needs a clkf");
  }
  for (double d : model.discrete_delays) {
    if (d > 0.0 && sim.step > d * (1.0 + kGridTolerance)) {
      issues.push_back("step " + format_number(sim.step) + " exceeds the smallest positive delay " + format_number(d));
      break;
    }
  }
  const HistorySegment& h0 = sim.initial_history;
  if (h0.dim() != model.n) issues.push_back("initial history dimension does not match n");
  if (std::abs(h0.delta() - model.delta) > kGridTolerance * std::max(1.0, model.delta)) {
    issues.push_back("initial history delta does not match model delta");
  }
  if (std::abs(h0.step() - sim.step) > kGridTolerance * sim.step) {
    issues.push_back("initial history grid differs from the integration step");
  }
  if (!(sim.horizon >= sim.step)) issues.push_back("horizon must be at least one step");
  if (sim.record_every == 0) issues.push_back("record_every must be positive");
  if (sim.disturbance.m != model.m) issues.push_back("disturbance dimension does not match m");
  if (!grid_multiple(sim.start_time, sim.step)) issues.push_back("start time must be a nonnegative grid multiple");
  if (!issues.empty()) {
    std::string msg = "invalid simulation setup:";
    for (const auto& s : issues) msg += "\n  " + s;
    throw ConfigError(msg);
  }
  check_control(ctrl);
}

template <Segment S>
Vector closed_loop_rhs(const SystemModel& model, const S& seg, const Vector& input) {
  return eval_f(model, seg) + eval_g(model, seg) * input;
}

}  // namespace detail

/// Fills residual[] from V[] and rate[] by centered differences over the record spacing.
inline void compute_residuals(Trajectory& traj) {
  const std::size_t count = traj.size();
  traj.residual.assign(count, std::numeric_limits<double>::quiet_NaN());
  for (std::size_t k = 1; k + 1 < count; ++k) {
    const double slope = (traj.V[k + 1] - traj.V[k - 1]) / (traj.times[k + 1] - traj.times[k - 1]);
    traj.residual[k] = std::abs(slope - traj.rate[k]);
  }
}

[[nodiscard]] inline Trajectory integrate(const SystemModel& model, const ClkfSpec* clkf, const ControlConfig& ctrl,
                                          const SimConfig& sim) {
  detail::check_sim_config(model, clkf, ctrl, sim);
  const std::size_t n = model.n;
  const double h = sim.step;
  const std::size_t window = sim.initial_history.size();
  const auto first_step = static_cast<std::int64_t>(*grid_multiple(sim.start_time, h));
  const auto steps = static_cast<std::size_t>(std::floor(sim.horizon / h + kGridTolerance));

  std::vector<double> buffer;
  buffer.reserve((window + steps) * n);
  buffer.insert(buffer.end(), sim.initial_history.raw().begin(), sim.initial_history.raw().end());

  Trajectory traj;
  traj.n = n;
  traj.m = model.m;
  const std::size_t records = steps / sim.record_every + 1;
  traj.times.reserve(records);

  const double nan = std::numeric_limits<double>::quiet_NaN();
  for (std::size_t k = 0;; ++k) {
    const SegmentRef seg(std::span<const double>(buffer.data() + k * n, window * n), n, model.delta, h);
    const std::int64_t index = first_step + static_cast<std::int64_t>(k);
    const double t = static_cast<double>(index) * h;
    const Vector x = seg.head();

    double a = nan;
    double V = nan;
    Vector b = Vector::Constant(static_cast<Eigen::Index>(model.m), nan);
    Vector u = Vector::Zero(static_cast<Eigen::Index>(model.m));
    if (clkf != nullptr) {
      a = eval_a(*clkf, model, seg);
      b = eval_b(*clkf, model, seg);
      V = eval_V(*clkf, x, seg);
      u = control_law(a, b, ctrl);
    }
    const Vector d0 = sim.disturbance.value(t, index);

    if (k % sim.record_every == 0) {
      traj.times.push_back(t);
      traj.states.push_back(x);
      traj.inputs.push_back(u);
      traj.disturbances.push_back(d0);
      traj.V.push_back(V);
      traj.a.push_back(a);
      traj.b_norm.push_back(b.norm());
      traj.rate.push_back(clkf != nullptr ? dissipation_rate(a, b, u, d0) : nan);
    }
    if (k == steps) break;

    const Vector d_half = sim.disturbance.value(t + 0.5 * h, index);
    const Vector d_full = sim.disturbance.value(t + h, index);
    const Vector k1 = detail::closed_loop_rhs(model, seg, Vector(u + d0));
    const Vector x2 = x + 0.5 * h * k1;
    const Vector k2 = detail::closed_loop_rhs(model, StageSegment(seg, 0.5 * h, x2), Vector(u + d_half));
    const Vector x3 = x + 0.5 * h * k2;
    const Vector k3 = detail::closed_loop_rhs(model, StageSegment(seg, 0.5 * h, x3), Vector(u + d_half));
    const Vector x4 = x + h * k3;
    const Vector k4 = detail::closed_loop_rhs(model, StageSegment(seg, h, x4), Vector(u + d_full));
    const Vector next = x + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);

    if (!next.allFinite() || next.cwiseAbs().maxCoeff() > kDivergenceThreshold) {
      throw DivergenceError(static_cast<double>(index + 1) * h);
    }
    buffer.insert(buffer.end(), next.data(), next.data() + n);
  }

  traj.terminal = HistorySegment(
      n, model.delta, h,
      std::vector<double>(buffer.end() - static_cast<std::ptrdiff_t>(window * n), buffer.end()));
  compute_residuals(traj);
  return traj;
}

[[nodiscard]] inline Trajectory integrate(const SystemModel& model, const ClkfSpec& clkf, const ControlConfig& ctrl,
                                          const SimConfig& sim) {
  return integrate(model, &clkf, ctrl, sim);
}

/// Largest |centered dV/dt - (a + b(u + d))| over interior record points.
[[nodiscard]] inline double dissipation_residual(const Trajectory& traj) {
  double worst = 0.0;
  for (std::size_t k = 1; k + 1 < traj.residual.size(); ++k) {
    if (!std::isnan(traj.residual[k])) worst = std::max(worst, traj.residual[k]);
  }
  return worst;
}

/// max |x(t)| over the trailing (1 - settle_fraction) part of the recorded horizon.
[[nodiscard]] inline double residual_radius(const Trajectory& traj, double settle_fraction = 0.5) {
  if (!(settle_fraction > 0.0 && settle_fraction < 1.0)) throw DomainError("settle_fraction must lie in (0, 1)");
  if (traj.times.empty()) return 0.0;
  const double t0 = traj.times.front();
  const double cutoff = t0 + settle_fraction * (traj.times.back() - t0);
  const double slack = 1e-9 * std::max(1.0, std::abs(traj.times.back()));
  double worst = 0.0;
  for (std::size_t k = 0; k < traj.size(); ++k) {
    if (traj.times[k] >= cutoff - slack) worst = std::max(worst, traj.states[k].norm());
  }
  return worst;
}

}  // namespace sontagdde
