#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <string>

#include "sontagdde/errors.hpp"
#include "sontagdde/history.hpp"

namespace sontagdde {

/// Actuator disturbance d(t) in R^m.
struct DisturbanceSpec {
  enum class Kind { Zero, Constant, Sinusoid, Uniform };

  Kind kind = Kind::Zero;
  Vector vector;            // constant value or sinusoid amplitude
  double frequency = 0.0;   // rad per time unit
  double phase = 0.0;
  double bound = 0.0;       // uniform: per-component amplitude
  std::uint64_t seed = 0;   // uniform
  std::size_t m = 1;

  static DisturbanceSpec zero(std::size_t m) { return {Kind::Zero, Vector::Zero(static_cast<Eigen::Index>(m)), 0, 0, 0, 0, m}; }
  static DisturbanceSpec constant(const Vector& c) {
    return {Kind::Constant, c, 0, 0, 0, 0, static_cast<std::size_t>(c.size())};
  }
  static DisturbanceSpec sinusoid(const Vector& amplitude, double frequency, double phase) {
    return {Kind::Sinusoid, amplitude, frequency, phase, 0, 0, static_cast<std::size_t>(amplitude.size())};
  }
  static DisturbanceSpec uniform(std::size_t m, double bound, std::uint64_t seed) {
    return {Kind::Uniform, Vector::Zero(static_cast<Eigen::Index>(m)), 0, 0, bound, seed, m};
  }

  /// d at time t; the uniform variant is piecewise constant and keyed on the step index.
  [[nodiscard]] Vector value(double t, std::int64_t step_index) const {
    switch (kind) {
      case Kind::Zero: return Vector::Zero(static_cast<Eigen::Index>(m));
      case Kind::Constant: return vector;
      case Kind::Sinusoid: return vector * std::sin(frequency * t + phase);
      case Kind::Uniform: {
        std::mt19937_64 rng(seed ^ (static_cast<std::uint64_t>(step_index) * 0x9E3779B97F4A7C15ULL));
        std::uniform_real_distribution<double> dist(-bound, bound);
        Vector d(static_cast<Eigen::Index>(m));
        for (Eigen::Index i = 0; i < d.size(); ++i) d[i] = dist(rng);
        return d;
      }
    }
    return Vector::Zero(static_cast<Eigen::Index>(m));
  }

  /// Closed-form essential bound of |d(t)| over t >= 0.
  [[nodiscard]] double sup_bound() const {
    switch (kind) {
      case Kind::Zero: return 0.0;
      case Kind::Constant:
      case Kind::Sinusoid: return vector.norm();
      case Kind::Uniform: return bound * std::sqrt(static_cast<double>(m));
    }
    return 0.0;
  }

  [[nodiscard]] std::string to_text() const {
    auto vec = [](const Vector& v) {
      std::string out = "[";
      for (Eigen::Index i = 0; i < v.size(); ++i) {
        if (i) out += ", ";
        out += format_number(v[i]);
      }
      return out + "]";
    };
    switch (kind) {
      case Kind::Zero: return "zero(" + std::to_string(m) + ")";
      case Kind::Constant: return "const(" + vec(vector) + ")";
      case Kind::Sinusoid:
        return "sin(amp=" + vec(vector) + ", freq=" + format_number(frequency) + ", phase=" + format_number(phase) + ")";
      case Kind::Uniform:
        return "uniform(m=" + std::to_string(m) + ", bound=" + format_number(bound) + ", seed=" + std::to_string(seed) + ")";
    }
    return "zero(" + std::to_string(m) + ")";
  }

  friend bool operator==(const DisturbanceSpec& a, const DisturbanceSpec& b) {
    return a.kind == b.kind && a.vector.size() == b.vector.size() && (a.vector.size() == 0 || a.vector == b.vector) &&
           a.frequency == b.frequency && a.phase == b.phase && a.bound == b.bound && a.seed == b.seed && a.m == b.m;
  }
};

}  // namespace sontagdde
