#pragma once

#include <cmath>
#include <optional>
#include <string>
#include <string_view>

#include "sontagdde/clkf.hpp"
#include "sontagdde/errors.hpp"
#include "sontagdde/history.hpp"
#include "sontagdde/model.hpp"

namespace sontagdde {

enum class ControlMode { SontagK, SontagKr, KrPlusIss, OpenLoop };

[[nodiscard]] inline std::string_view to_string(ControlMode mode) {
  switch (mode) {
    case ControlMode::SontagK: return "sontag-k";
    case ControlMode::SontagKr: return "sontag-kr";
    case ControlMode::KrPlusIss: return "kr-plus-iss";
    case ControlMode::OpenLoop: return "open-loop";
  }
  return "open-loop";
}

[[nodiscard]] inline std::optional<ControlMode> parse_mode(std::string_view s) {
  for (auto m : {ControlMode::SontagK, ControlMode::SontagKr, ControlMode::KrPlusIss, ControlMode::OpenLoop}) {
    if (to_string(m) == s) return m;
  }
  return std::nullopt;
}

struct ControlConfig {
  ControlMode mode = ControlMode::KrPlusIss;
  double q = 1.0;
  double r = 0.5;

  friend bool operator==(const ControlConfig&, const ControlConfig&) = default;
};

inline void check_control(const ControlConfig& cfg) {
  if (cfg.mode == ControlMode::KrPlusIss && !(cfg.q > 0.0)) throw ConfigError("kr-plus-iss needs q > 0");
  if ((cfg.mode == ControlMode::KrPlusIss || cfg.mode == ControlMode::SontagKr) && !(cfg.r > 0.0)) {
    throw ConfigError(std::string(to_string(cfg.mode)) + " needs r > 0");
  }
}

namespace detail {

// a + sqrt(a^2 + |b|^4) without cancellation for a < 0 and without overflow of a^2.
inline double sontag_numerator(double a, double b_sq) {
  const double root = std::hypot(a, b_sq);
  if (a >= 0.0) return a + root;
  const double gap = root - a;
  return gap > 0.0 ? b_sq * (b_sq / gap) : 0.0;
}

// -(numerator / denominator) b', shared by both Sontag maps so that they agree bit for bit.
inline Vector sontag_scaled(double a, const Vector& b, double b_sq, double denominator) {
  return -(sontag_numerator(a, b_sq) / denominator) * b;
}

}  // namespace detail

/// Sontag's universal formula; zero exactly when b == 0.
[[nodiscard]] inline Vector sontag_k(double a, const Vector& b) {
  const double b_sq = b.squaredNorm();
  if (b_sq == 0.0) return Vector::Zero(b.size());
  return detail::sontag_scaled(a, b, b_sq, b_sq);
}

/// Sontag's formula with the denominator frozen at r^2 once |b| <= r.
[[nodiscard]] inline Vector sontag_kr(double a, const Vector& b, double r) {
  if (!(r > 0.0)) throw DomainError("sontag_kr needs r > 0");
  const double b_sq = b.squaredNorm();
  if (std::sqrt(b_sq) > r) return detail::sontag_scaled(a, b, b_sq, b_sq);
  return detail::sontag_scaled(a, b, b_sq, r * r);
}

/// Driver-form derivative of V along the disturbed closed loop: a + b (u + d).
[[nodiscard]] inline double dissipation_rate(double a, const Vector& b, const Vector& u, const Vector& d) {
  return a + b.dot(u + d);
}

/// Feedback from already evaluated a(phi), b(phi).
[[nodiscard]] inline Vector control_law(double a, const Vector& b, const ControlConfig& cfg) {
  switch (cfg.mode) {
    case ControlMode::OpenLoop: return Vector::Zero(b.size());
    case ControlMode::SontagK: return sontag_k(a, b);
    case ControlMode::SontagKr: return sontag_kr(a, b, cfg.r);
    case ControlMode::KrPlusIss: return sontag_kr(a, b, cfg.r) - cfg.q * b;
  }
  return Vector::Zero(b.size());
}

/// u = k(x_t), k_r(x_t) or k_r(x_t) - q b'(x_t) depending on the mode; zero in open loop.
template <Segment S>
[[nodiscard]] Vector control_input(const ClkfSpec* clkf, const SystemModel& model, const S& seg,
                                   const ControlConfig& cfg) {
  if (cfg.mode == ControlMode::OpenLoop) return Vector::Zero(static_cast<Eigen::Index>(model.m));
  if (clkf == nullptr) throw ConfigError(std::string(to_string(cfg.mode)) + " needs a clkf block");
  check_control(cfg);
  const double a = eval_a(*clkf, model, seg);
  const Vector b = eval_b(*clkf, model, seg);
  return control_law(a, b, cfg);
}

template <Segment S>
[[nodiscard]] Vector control_input(const ClkfSpec& clkf, const SystemModel& model, const S& seg,
                                   const ControlConfig& cfg) {
  return control_input(&clkf, model, seg, cfg);
}

}  // namespace sontagdde
