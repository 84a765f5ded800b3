#pragma once

// Quick built-in sanity checks for the command line `selftest` subcommand.

#include <cmath>
#include <random>
#include <string>
#include <vector>

#include "sontagdde/config.hpp"
#include "sontagdde/controller.hpp"
#include "sontagdde/hypothesis.hpp"
#include "sontagdde/simulate.hpp"

namespace sontagdde {

struct SelfCheck {
  std::string name;
  bool passed = false;
  std::string detail;
};

namespace detail {

inline constexpr const char* kSelftestDemo = R"(
system { n=1 m=1 delta=1.0 f = -x[0](0) + 0.5*x[0](-1.0) g = 1.0 }
clkf { P = [1.0] term(tau=1.0, mu=0.25, Q=[1.0]) alpha1 = pow(0.4, 2) alpha2 = pow(1.5, 2) alpha3 = pow(0.1, 2) r = 0.5 p = 1.0 }
experiment { mode = kr-plus-iss q = 10 step = 0.01 horizon = 20 disturbance = sin(amp=[0.5], freq=1.0, phase=0.0) }
)";

}  // namespace detail

[[nodiscard]] inline std::vector<SelfCheck> run_selftest() {
  std::vector<SelfCheck> out;

  {
    std::mt19937_64 rng(2024);
    std::uniform_real_distribution<double> ua(-1e3, 1e3), ub(-1e3, 1e3);
    double worst = 0.0;
    for (int k = 0; k < 1000; ++k) {
      const double a = ua(rng);
      Vector b(2);
      b << ub(rng), ub(rng);
      if (b.norm() < 1e-6) continue;
      const double err = std::abs(a + b.dot(sontag_k(a, b)) + std::hypot(a, b.squaredNorm()));
      worst = std::max(worst, err / (1.0 + std::abs(a) + b.squaredNorm()));
    }
    out.push_back({"sontag identity a + b k = -sqrt(a^2 + |b|^4)", worst <= 1e-9, "worst scaled error " + format_number(worst)});
  }

  {
    const SystemModel model = parse_model("system { n=1 m=1 delta=1.0 f = -x[0](-1.0) g = 0.0 }");
    SimConfig sim;
    sim.step = 1e-3;
    sim.horizon = 2.0;
    sim.initial_history = HistorySegment::constant(1.0, 1e-3, Vector::Ones(1));
    sim.record_every = 1000;
    ControlConfig ctrl;
    ctrl.mode = ControlMode::OpenLoop;
    const Trajectory traj = integrate(model, nullptr, ctrl, sim);
    const double e1 = std::abs(traj.states[1][0]);
    const double e2 = std::abs(traj.states[2][0] + 0.5);
    out.push_back({"method of steps x' = -x(t-1): x(1) = 0, x(2) = -1/2", e1 <= 1e-9 && e2 <= 1e-9,
                   "errors " + format_number(e1) + ", " + format_number(e2)});
  }

  {
    const SystemModel model = parse_model("system { n=1 m=1 delta=1.0 f = x[0](-1.0) g = 0.0 }");
    ClkfSpec c;
    c.P = Matrix::Identity(1, 1);
    c.alpha1 = {0.4, 2};
    c.alpha2 = {1.5, 2};
    c.alpha3 = {0.1, 2};
    SamplerConfig s;
    s.samples = 200;
    const HypothesisReport rep = check_hypothesis(c, model, s);
    const auto& res = rep[Condition::ZeroB];
    const bool ok = res.falsified && reverify(c, model, Condition::ZeroB, res.witnesses.front());
    out.push_back({"falsifier finds b = 0, a > 0 without actuation", ok,
                   ok ? "witness at sample " + std::to_string(res.witnesses.front().sample_index) : "no witness"});
  }

  {
    const ExperimentConfig cfg = read_config(detail::kSelftestDemo);
    const ExperimentConfig again = read_config(to_text(cfg));
    out.push_back({"experiment file print/parse round trip", cfg == again, ""});
  }
  return out;
}

}  // namespace sontagdde
