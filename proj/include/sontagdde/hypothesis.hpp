#pragma once

// Sampling falsifier for the four CLKF conditions:
//   (i)   alpha1(|phi(0)|) <= V(phi) <= alpha2(M(phi))
//   (ii)  b(phi) = 0  =>  a(phi) <= 0
//   (iii) a(phi)^2 + |b(phi)|^4 >= alpha3(M(phi))^2
//   (iv)  sup over {0 < |b| <= r} of a/|b| <= p
// with M the M2 norm. Passing only means no counterexample was sampled.

#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "sontagdde/clkf.hpp"
#include "sontagdde/history.hpp"
#include "sontagdde/model.hpp"

namespace sontagdde {

struct SamplerConfig {
  std::uint64_t seed = 1;
  std::size_t samples = 1000;
  double step = 0.01;          // grid of the sampled segments
  double max_amplitude = 10.0; // amplitudes are log-uniform in [1e-2, max_amplitude]
  std::size_t max_witnesses = 5;
};

enum class Condition : std::size_t { Sandwich = 0, ZeroB = 1, Dissipation = 2, RatioBound = 3 };

[[nodiscard]] inline const char* condition_label(Condition c) {
  switch (c) {
    case Condition::Sandwich: return "(i) alpha1(|phi(0)|) <= V <= alpha2(M2)";
    case Condition::ZeroB: return "(ii) b = 0 => a <= 0";
    case Condition::Dissipation: return "(iii) a^2 + |b|^4 >= alpha3(M2)^2";
    case Condition::RatioBound: return "(iv) a/|b| <= p on 0 < |b| <= r";
  }
  return "";
}

enum class SampleFamily { Constant, Polynomial, Trigonometric, Spike, ZeroHead };

[[nodiscard]] inline const char* family_name(SampleFamily f) {
  switch (f) {
    case SampleFamily::Constant: return "constant";
    case SampleFamily::Polynomial: return "polynomial";
    case SampleFamily::Trigonometric: return "trigonometric";
    case SampleFamily::Spike: return "spike";
    case SampleFamily::ZeroHead: return "zero-head";
  }
  return "";
}

struct Witness {
  std::size_t sample_index = 0;
  SampleFamily family = SampleFamily::Constant;
  HistorySegment segment;
  double lhs = 0.0;  // the side that should be smaller
  double rhs = 0.0;
};

struct ConditionResult {
  bool falsified = false;
  std::size_t tested = 0;
  std::vector<Witness> witnesses;
};

struct HypothesisReport {
  std::array<ConditionResult, 4> conditions;
  std::size_t samples = 0;
  std::string family_description;
  double observed_p = -std::numeric_limits<double>::infinity();  // sup a/|b| on 0 < |b| <= r
  std::size_t ratio_samples = 0;

  [[nodiscard]] const ConditionResult& operator[](Condition c) const { return conditions[static_cast<std::size_t>(c)]; }
  [[nodiscard]] bool any_falsified() const {
    for (const auto& c : conditions) {
      if (c.falsified) return true;
    }
    return false;
  }
};

/// Values of the four conditions on one segment.
struct ConditionValues {
  double head_norm = 0.0;
  double V = 0.0;
  double m2 = 0.0;
  double a = 0.0;
  double b_norm = 0.0;
};

[[nodiscard]] inline ConditionValues condition_values(const ClkfSpec& c, const SystemModel& model,
                                                      const HistorySegment& seg) {
  const SegmentRef ref = seg.ref();
  return {ref.head().norm(), eval_V(c, ref), m2_norm(ref), eval_a(c, model, ref), eval_b(c, model, ref).norm()};
}

/// Threshold below which |b| counts as zero for condition (ii).
inline constexpr double kZeroB = 1e-12;

namespace detail {

inline double slack(double v) { return 1e-12 * std::max(1.0, std::abs(v)); }

// Returns (lhs, rhs) when the condition is violated on these values.
inline std::optional<std::pair<double, double>> violation(Condition cond, const ClkfSpec& c, const ConditionValues& v,
                                                          bool zero_head) {
  switch (cond) {
    case Condition::Sandwich: {
      const double lower = c.alpha1(v.head_norm);
      const double upper = c.alpha2(v.m2);
      if (lower > v.V + slack(v.V)) return std::pair{lower, v.V};
      if (v.V > upper + slack(upper)) return std::pair{v.V, upper};
      return std::nullopt;
    }
    case Condition::ZeroB:
      if ((zero_head || v.b_norm < kZeroB) && v.a > slack(0.0)) return std::pair{v.a, 0.0};
      return std::nullopt;
    case Condition::Dissipation: {
      const double lhs = v.a * v.a + std::pow(v.b_norm, 4);
      const double rhs = std::pow(c.alpha3(v.m2), 2);
      if (lhs < rhs - slack(rhs)) return std::pair{lhs, rhs};
      return std::nullopt;
    }
    case Condition::RatioBound:
      if (v.b_norm > 0.0 && v.b_norm <= c.r) {
        const double ratio = v.a / v.b_norm;
        if (ratio > c.p + slack(c.p)) return std::pair{c.p, ratio};
      }
      return std::nullopt;
  }
  return std::nullopt;
}

inline double log_uniform(std::mt19937_64& rng, double lo, double hi) {
  std::uniform_real_distribution<double> u(std::log(lo), std::log(hi));
  return std::exp(u(rng));
}

}  // namespace detail

/// Deterministic sample number `index` of the segment families.
[[nodiscard]] inline std::pair<SampleFamily, HistorySegment> sample_segment(const SamplerConfig& cfg,
                                                                            const SystemModel& model,
                                                                            const ClkfSpec& clkf,
                                                                            std::size_t index) {
  const std::size_t n = model.n;
  const double delta = model.delta;
  const auto N = static_cast<Eigen::Index>(n);

  // The unit constants come first: they are the classic counterexamples.
  if (index < n) {
    Vector e = Vector::Zero(N);
    e[static_cast<Eigen::Index>(index)] = 1.0;
    return {SampleFamily::Constant, HistorySegment::constant(delta, cfg.step, e)};
  }

  std::mt19937_64 rng(cfg.seed * 0xD1B54A32D192ED03ULL + index);
  std::uniform_real_distribution<double> coeff(-1.0, 1.0);
  const auto family = static_cast<SampleFamily>(index % 5);
  const double amp = detail::log_uniform(rng, 1e-2, cfg.max_amplitude);
  auto random_vec = [&] {
    Vector v(N);
    for (Eigen::Index i = 0; i < N; ++i) v[i] = coeff(rng);
    return v;
  };

  std::function<Vector(double)> fn;
  switch (family) {
    case SampleFamily::Constant: {
      const Vector c = amp * random_vec();
      fn = [c](double) { return c; };
      break;
    }
    case SampleFamily::Polynomial:
    case SampleFamily::ZeroHead: {
      std::array<Vector, 4> cs{random_vec(), random_vec(), random_vec(), random_vec()};
      fn = [cs, amp, delta](double s) {
        const double z = s / delta;
        return Vector(amp * (cs[0] + z * (cs[1] + z * (cs[2] + z * cs[3]))));
      };
      if (family == SampleFamily::ZeroHead) {
        // Half of the zero-head samples are trigonometric.
        if (rng() % 2 == 0) {
          std::array<Vector, 3> sn{random_vec(), random_vec(), random_vec()};
          std::array<Vector, 3> cn{random_vec(), random_vec(), random_vec()};
          fn = [sn, cn, amp, delta](double s) {
            Vector v = Vector::Zero(sn[0].size());
            for (int k = 1; k <= 3; ++k) {
              const double w = k * std::numbers::pi * s / delta;
              v += sn[k - 1] * std::sin(w) + cn[k - 1] * std::cos(w) / k;
            }
            return Vector(amp * v);
          };
        }
        const Vector head = fn(0.0);
        fn = [inner = fn, head](double s) { return Vector(inner(s) - head); };
      }
      break;
    }
    case SampleFamily::Trigonometric: {
      std::array<Vector, 3> sn{random_vec(), random_vec(), random_vec()};
      std::array<Vector, 3> cn{random_vec(), random_vec(), random_vec()};
      const Vector offset = random_vec();
      fn = [sn, cn, offset, amp, delta](double s) {
        Vector v = offset;
        for (int k = 1; k <= 3; ++k) {
          const double w = k * std::numbers::pi * s / delta;
          v += sn[k - 1] * std::sin(w) + cn[k - 1] * std::cos(w) / k;
        }
        return Vector(amp * v);
      };
      break;
    }
    case SampleFamily::Spike: {
      // Hat function near one of the clkf or model delays, on a small background.
      std::vector<double> centers;
      for (const auto& t : clkf.terms) centers.push_back(-t.tau);
      for (double d : model.discrete_delays) centers.push_back(-d);
      centers.push_back(-0.5 * delta);
      std::uniform_int_distribution<std::size_t> pick(0, centers.size() - 1);
      std::uniform_real_distribution<double> jitter(-2.0, 2.0);
      std::uniform_int_distribution<int> width_cells(1, 8);
      const double center = std::clamp(centers[pick(rng)] + jitter(rng) * cfg.step, -delta, 0.0);
      const double width = width_cells(rng) * cfg.step;
      const Vector peak = amp * random_vec();
      const Vector background = 0.05 * amp * random_vec();
      fn = [=](double s) {
        const double w = std::max(0.0, 1.0 - std::abs(s - center) / width);
        return Vector(background + w * peak);
      };
      break;
    }
  }
  return {family, HistorySegment::from_function(n, delta, cfg.step, fn)};
}

/// Re-evaluates one condition on a witness; true when the violation reproduces.
[[nodiscard]] inline bool reverify(const ClkfSpec& c, const SystemModel& model, Condition cond, const Witness& w) {
  const ConditionValues v = condition_values(c, model, w.segment);
  return detail::violation(cond, c, v, w.segment.head().norm() == 0.0).has_value();
}

[[nodiscard]] inline HypothesisReport check_hypothesis(const ClkfSpec& c, const SystemModel& model,
                                                       const SamplerConfig& cfg) {
  std::vector<std::string> issues = validate(model, cfg.step);
  for (auto& s : validate(c, cfg.step)) issues.push_back(std::move(s));
  for (auto& s : check_clkf(c, model.n, model.delta)) issues.push_back(std::move(s));
  if (!issues.empty()) {
    std::string msg = "invalid falsifier setup:";
    for (const auto& s : issues) msg += "\n  " + s;
    throw ConfigError(msg);
  }

  HypothesisReport report;
  report.samples = cfg.samples;
  report.family_description =
      "unit constants, then round robin over random constants, cubic polynomials, trigonometric modes (k <= 3), "
      "hat spikes near the delays, and zero-head segments (phi(0) = 0); amplitudes log-uniform in [0.01, " +
      format_number(cfg.max_amplitude) + "], grid step " + format_number(cfg.step) + ", seed " +
      std::to_string(cfg.seed);

  for (std::size_t k = 0; k < cfg.samples; ++k) {
    auto [family, seg] = sample_segment(cfg, model, c, k);
    const ConditionValues v = condition_values(c, model, seg);
    const bool zero_head = v.head_norm == 0.0;
    if (v.b_norm > 0.0 && v.b_norm <= c.r) {
      report.observed_p = std::max(report.observed_p, v.a / v.b_norm);
      ++report.ratio_samples;
    }
    for (std::size_t ci = 0; ci < 4; ++ci) {
      const auto cond = static_cast<Condition>(ci);
      auto& res = report.conditions[ci];
      if (cond == Condition::ZeroB && !(zero_head || v.b_norm < kZeroB)) continue;
      if (cond == Condition::RatioBound && !(v.b_norm > 0.0 && v.b_norm <= c.r)) continue;
      ++res.tested;
      if (auto bad = detail::violation(cond, c, v, zero_head)) {
        res.falsified = true;
        if (res.witnesses.size() < cfg.max_witnesses) {
          res.witnesses.push_back({k, family, seg, bad->first, bad->second});
        }
      }
    }
  }
  return report;
}

}  // namespace sontagdde
