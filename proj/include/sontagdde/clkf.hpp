#pragma once

// Control Liapunov-Krasovskii functionals of the quadratic-plus-integral family
//
//   V(x, phi) = 1/2 x' P x + sum_j mu_j int_{-tau_j}^0 phi(s)' Q_j phi(s) ds
//
// whose Driver-form derivative components have closed forms:
//
//   a(phi) = phi(0)' P f(phi) + sum_j mu_j (phi(0)' Q_j phi(0) - phi(-tau_j)' Q_j phi(-tau_j))
//   b(phi) = phi(0)' P g(phi)

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>

#include <cmath>
#include <string>
#include <vector>

#include "sontagdde/errors.hpp"
#include "sontagdde/history.hpp"
#include "sontagdde/model.hpp"

namespace sontagdde {

/// s -> coefficient * s^exponent.
struct KInfFn {
  double coefficient = 1.0;
  double exponent = 1.0;

  [[nodiscard]] double operator()(double s) const { return coefficient * std::pow(s, exponent); }
  [[nodiscard]] double inverse(double v) const { return std::pow(v / coefficient, 1.0 / exponent); }
  [[nodiscard]] bool valid() const { return coefficient > 0.0 && exponent > 0.0 && std::isfinite(coefficient) && std::isfinite(exponent); }

  friend bool operator==(const KInfFn&, const KInfFn&) = default;
};

struct IntegralTerm {
  double tau = 1.0;
  double mu = 1.0;
  Matrix Q;
};

struct ClkfSpec {
  Matrix P;
  std::vector<IntegralTerm> terms;
  KInfFn alpha1;
  KInfFn alpha2;
  KInfFn alpha3;
  double r = 1.0;
  double p = 0.0;

  [[nodiscard]] std::size_t dim() const { return static_cast<std::size_t>(P.rows()); }
};

namespace detail {

inline bool same_matrix(const Matrix& a, const Matrix& b) {
  return a.rows() == b.rows() && a.cols() == b.cols() && (a.size() == 0 || a == b);
}

}  // namespace detail

inline bool operator==(const IntegralTerm& a, const IntegralTerm& b) {
  return a.tau == b.tau && a.mu == b.mu && detail::same_matrix(a.Q, b.Q);
}

inline bool operator==(const ClkfSpec& a, const ClkfSpec& b) {
  return detail::same_matrix(a.P, b.P) && a.terms == b.terms && a.alpha1 == b.alpha1 && a.alpha2 == b.alpha2 &&
         a.alpha3 == b.alpha3 && a.r == b.r && a.p == b.p;
}

/// Structural checks: P symmetric positive definite, Q_j symmetric positive semidefinite,
/// mu_j > 0, 0 < tau_j <= delta (delta <= 0 skips that check). Returns one message per problem.
[[nodiscard]] inline std::vector<std::string> check_clkf(const ClkfSpec& c, std::size_t n, double delta) {
  std::vector<std::string> out;
  const auto N = static_cast<Eigen::Index>(n);
  auto symmetric = [](const Matrix& m) { return (m - m.transpose()).norm() <= 1e-12 * std::max(1.0, m.norm()); };
  if (c.P.rows() != N || c.P.cols() != N) {
    out.push_back("P must be " + std::to_string(n) + "x" + std::to_string(n));
  } else if (!symmetric(c.P)) {
    out.push_back("P must be symmetric");
  } else if (Eigen::LLT<Matrix>(c.P).info() != Eigen::Success) {
    out.push_back("P must be positive definite");
  }
  for (std::size_t j = 0; j < c.terms.size(); ++j) {
    const auto& t = c.terms[j];
    const std::string tag = "term " + std::to_string(j + 1) + ": ";
    if (!(t.mu > 0.0)) out.push_back(tag + "mu must be positive");
    if (!(t.tau > 0.0)) out.push_back(tag + "tau must be positive");
    if (delta > 0.0 && t.tau > delta * (1.0 + kGridTolerance)) {
      out.push_back(tag + "tau " + format_number(t.tau) + " exceeds delta " + format_number(delta));
    }
    if (t.Q.rows() != N || t.Q.cols() != N) {
      out.push_back(tag + "Q must be " + std::to_string(n) + "x" + std::to_string(n));
    } else if (!symmetric(t.Q)) {
      out.push_back(tag + "Q must be symmetric");
    } else {
      Eigen::SelfAdjointEigenSolver<Matrix> es(t.Q, Eigen::EigenvaluesOnly);
      if (es.eigenvalues().minCoeff() < -1e-12 * std::max(1.0, t.Q.norm())) {
        out.push_back(tag + "Q must be positive semidefinite");
      }
    }
  }
  for (const auto& [name, fn] : {std::pair{"alpha1", c.alpha1}, {"alpha2", c.alpha2}, {"alpha3", c.alpha3}}) {
    if (!fn.valid()) out.push_back(std::string(name) + " needs positive coefficient and exponent");
  }
  if (!(c.r > 0.0)) out.push_back("r must be positive");
  if (!(c.p >= 0.0)) out.push_back("p must be nonnegative");
  return out;
}

/// Grid-alignment messages for the term delays.
[[nodiscard]] inline std::vector<std::string> validate(const ClkfSpec& c, double grid_step) {
  std::vector<std::string> out;
  for (const auto& t : c.terms) {
    if (!grid_multiple(t.tau, grid_step)) {
      out.push_back("clkf tau " + format_number(t.tau) + " is not a multiple of grid step " + format_number(grid_step));
    }
  }
  return out;
}

/// V(x, phi) with the current value x supplied separately from the history.
template <Segment S>
[[nodiscard]] double eval_V(const ClkfSpec& c, const Vector& x, const S& seg) {
  double v = 0.5 * x.dot(c.P * x);
  for (const auto& t : c.terms) {
    const double integral = trapezoid(seg, -t.tau, 0.0, [&](double s) {
      const Vector y = eval_at(seg, s);
      return y.dot(t.Q * y);
    });
    v += t.mu * integral;
  }
  return v;
}

template <Segment S>
[[nodiscard]] double eval_V(const ClkfSpec& c, const S& seg) {
  return eval_V(c, eval_at(seg, 0.0), seg);
}

/// Closed-form right-hand derivative of h -> V(phi(0), phi^h) at h = 0.
template <Segment S>
[[nodiscard]] double invariant_derivative(const ClkfSpec& c, const S& seg) {
  const Vector x0 = eval_at(seg, 0.0);
  double d = 0.0;
  for (const auto& t : c.terms) {
    const Vector xt = eval_at(seg, -t.tau);
    d += t.mu * (x0.dot(t.Q * x0) - xt.dot(t.Q * xt));
  }
  return d;
}

/// Forward difference (V(phi(0), phi^h) - V(phi(0), phi)) / h through shift_freeze.
[[nodiscard]] inline double invariant_derivative_fd(const ClkfSpec& c, const HistorySegment& seg, double h) {
  if (!(h > 0.0)) throw DomainError("finite-difference step must be positive");
  const Vector x0 = seg.head();
  const HistorySegment shifted = shift_freeze(seg, h);
  return (eval_V(c, x0, shifted.ref()) - eval_V(c, x0, seg.ref())) / h;
}

/// phi(0)' P f(phi) + invariant derivative.
template <Segment S>
[[nodiscard]] double eval_a(const ClkfSpec& c, const SystemModel& model, const S& seg) {
  const Vector x0 = eval_at(seg, 0.0);
  return x0.dot(c.P * eval_f(model, seg)) + invariant_derivative(c, seg);
}

/// Row vector phi(0)' P g(phi), stored as an m-vector.
template <Segment S>
[[nodiscard]] Vector eval_b(const ClkfSpec& c, const SystemModel& model, const S& seg) {
  const Vector x0 = eval_at(seg, 0.0);
  return eval_g(model, seg).transpose() * (c.P * x0);
}

/// gamma(s) = alpha1^{-1}(alpha2(alpha3^{-1}(s^2))).
[[nodiscard]] inline double gamma_gain(const ClkfSpec& c, double s) {
  if (!(s >= 0.0)) throw DomainError("gamma_gain needs s >= 0");
  return c.alpha1.inverse(c.alpha2(c.alpha3.inverse(s * s)));
}

[[nodiscard]] inline std::string to_text(const ClkfSpec& c) {
  auto matrix = [](const Matrix& m) {
    std::string out = "[";
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
      for (Eigen::Index j = 0; j < m.cols(); ++j) {
        if (i || j) out += ", ";
        out += format_number(m(i, j));
      }
    }
    return out + "]";
  };
  auto kinf = [](const KInfFn& k) {
    return "pow(" + format_number(k.coefficient) + ", " + format_number(k.exponent) + ")";
  };
  std::string out = "clkf {\n";
  out += "  P = " + matrix(c.P) + "\n";
  for (const auto& t : c.terms) {
    out += "  term(tau=" + format_number(t.tau) + ", mu=" + format_number(t.mu) + ", Q=" + matrix(t.Q) + ")\n";
  }
  out += "  alpha1 = " + kinf(c.alpha1) + "\n";
  out += "  alpha2 = " + kinf(c.alpha2) + "\n";
  out += "  alpha3 = " + kinf(c.alpha3) + "\n";
  out += "  r = " + format_number(c.r) + "\n";
  out += "  p = " + format_number(c.p) + "\n";
  out += "}\n";
  return out;
}

}  // namespace sontagdde
