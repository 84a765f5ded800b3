#pragma once

#include <cmath>
#include <future>
#include <limits>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "sontagdde/clkf.hpp"
#include "sontagdde/config.hpp"
#include "sontagdde/controller.hpp"
#include "sontagdde/csv.hpp"
#include "sontagdde/hypothesis.hpp"
#include "sontagdde/simulate.hpp"

namespace sontagdde {

/// gamma(sqrt(2/q) |d|_inf) + gamma(sqrt(2/q) (2p + r)).
[[nodiscard]] inline double theoretical_bound(const ClkfSpec& c, double q, double d_sup) {
  const double scale = std::sqrt(2.0 / q);
  return gamma_gain(c, scale * d_sup) + gamma_gain(c, scale * (2.0 * c.p + c.r));
}

[[nodiscard]] inline ControlConfig control_config(const ExperimentConfig& cfg, std::optional<double> q = {}) {
  ControlConfig ctrl;
  ctrl.mode = cfg.experiment.mode;
  ctrl.q = q.value_or(cfg.experiment.q);
  ctrl.r = cfg.clkf ? cfg.clkf->r : 0.0;
  return ctrl;
}

[[nodiscard]] inline SimConfig sim_config(const ExperimentConfig& cfg) {
  const auto& e = cfg.experiment;
  return SimConfig{e.step, e.horizon, initial_history(cfg, e.step), e.disturbance, e.record_every, 0.0};
}

struct RunOutcome {
  double q = 0.0;
  Trajectory trajectory;
  bool diverged = false;
  double divergence_time = std::numeric_limits<double>::quiet_NaN();
  double residual_radius = std::numeric_limits<double>::quiet_NaN();
  std::optional<double> bound;  // only for kr-plus-iss with a clkf

  [[nodiscard]] bool bound_ok() const { return !diverged && (!bound || residual_radius <= *bound); }
};

[[nodiscard]] inline RunOutcome run_experiment(const ExperimentConfig& cfg, std::optional<double> q = {}) {
  RunOutcome out;
  const ControlConfig ctrl = control_config(cfg, q);
  out.q = ctrl.q;
  const SimConfig sim = sim_config(cfg);
  if (cfg.clkf && ctrl.mode == ControlMode::KrPlusIss) {
    out.bound = theoretical_bound(*cfg.clkf, ctrl.q, sim.disturbance.sup_bound());
  }
  try {
    out.trajectory = integrate(cfg.model, cfg.clkf ? &*cfg.clkf : nullptr, ctrl, sim);
    out.residual_radius = residual_radius(out.trajectory, cfg.experiment.settle);
  } catch (const DivergenceError& e) {
    out.diverged = true;
    out.divergence_time = e.time();
  }
  return out;
}

[[nodiscard]] inline std::string summary_line(const RunOutcome& r) {
  std::ostringstream os;
  if (r.diverged) {
    os << "diverged at t=" << format_number(r.divergence_time) << " (|x| > 1e12)";
    return os.str();
  }
  os << "residual_radius=" << csv_number(r.residual_radius);
  if (r.bound) {
    os << " bound=" << csv_number(*r.bound) << " bound_satisfied=" << (r.bound_ok() ? "yes" : "no");
  } else {
    os << " bound=n/a";
  }
  return os.str();
}

struct SweepRow {
  double q = 0.0;
  double residual_radius = std::numeric_limits<double>::quiet_NaN();
  double bound = std::numeric_limits<double>::quiet_NaN();
  bool diverged = false;
  double divergence_time = std::numeric_limits<double>::quiet_NaN();
};

/// One independent run per q; rows come back in the order of the q list.
[[nodiscard]] inline std::vector<SweepRow> sweep_q(const ExperimentConfig& cfg) {
  const auto& qs = cfg.experiment.sweep;
  if (qs.size() < 2) throw ConfigError("sweep needs >= 2 values");
  if (!cfg.clkf) throw ConfigError("sweep-q needs a clkf block");
  if (cfg.experiment.mode != ControlMode::KrPlusIss) throw ConfigError("sweep-q needs mode kr-plus-iss");
  std::vector<std::future<RunOutcome>> jobs;
  jobs.reserve(qs.size());
  for (double q : qs) jobs.push_back(std::async(std::launch::async, [&cfg, q] { return run_experiment(cfg, q); }));
  std::vector<SweepRow> rows;
  for (auto& job : jobs) {
    const RunOutcome r = job.get();
    rows.push_back({r.q, r.residual_radius, r.bound.value_or(std::numeric_limits<double>::quiet_NaN()), r.diverged,
                    r.divergence_time});
  }
  return rows;
}

[[nodiscard]] inline std::string sweep_csv(const std::vector<SweepRow>& rows) {
  std::string out = "q,residual_radius,theoretical_bound,status\n";
  for (const auto& r : rows) {
    out += csv_number(r.q) + "," + csv_number(r.residual_radius) + "," + csv_number(r.bound) + ",";
    if (r.diverged) {
      out += "diverged at t=" + format_number(r.divergence_time);
    } else {
      out += r.residual_radius <= r.bound ? "ok" : "bound violated";
    }
    out += "\n";
  }
  return out;
}

[[nodiscard]] inline SamplerConfig sampler_config(const ExperimentConfig& cfg) {
  SamplerConfig s;
  s.seed = cfg.experiment.seed;
  s.samples = cfg.experiment.samples;
  s.step = cfg.experiment.step;
  return s;
}

[[nodiscard]] inline HypothesisReport falsify(const ExperimentConfig& cfg) {
  if (!cfg.clkf) throw ConfigError("falsify needs a clkf block");
  return check_hypothesis(*cfg.clkf, cfg.model, sampler_config(cfg));
}

[[nodiscard]] inline std::string render_report(const HypothesisReport& rep, const ClkfSpec& c) {
  std::ostringstream os;
  os << "samples: " << rep.samples << "\n";
  os << "families: " << rep.family_description << "\n";
  for (std::size_t k = 0; k < 4; ++k) {
    const auto& res = rep.conditions[k];
    os << condition_label(static_cast<Condition>(k)) << ": "
       << (res.falsified ? "FALSIFIED" : "pass-on-samples") << " (tested " << res.tested << ")";
    if (res.falsified) {
      const auto& w = res.witnesses.front();
      os << " first witness: sample " << w.sample_index << " [" << family_name(w.family) << "] "
         << csv_number(w.lhs) << " vs " << csv_number(w.rhs);
    }
    os << "\n";
  }
  os << "observed sup a/|b| on 0 < |b| <= r=" << format_number(c.r) << ": ";
  if (rep.ratio_samples == 0) {
    os << "no samples in region";
  } else {
    os << csv_number(rep.observed_p) << " over " << rep.ratio_samples << " samples";
  }
  os << " (declared p=" << format_number(c.p) << ")\n";
  os << "note: passing on samples is not a proof\n";
  return os.str();
}

[[nodiscard]] inline std::string witnesses_csv(const HypothesisReport& rep) {
  std::string out = "condition,sample,family,lhs,rhs,head_norm,sup_norm,m2_norm\n";
  static constexpr const char* kTags[] = {"i", "ii", "iii", "iv"};
  for (std::size_t k = 0; k < 4; ++k) {
    for (const auto& w : rep.conditions[k].witnesses) {
      const SegmentRef ref = w.segment.ref();
      out += std::string(kTags[k]) + "," + std::to_string(w.sample_index) + "," + family_name(w.family) + "," +
             csv_number(w.lhs) + "," + csv_number(w.rhs) + "," + csv_number(ref.head().norm()) + "," +
             csv_number(sup_norm(ref)) + "," + csv_number(m2_norm(ref)) + "\n";
    }
  }
  return out;
}

}  // namespace sontagdde
