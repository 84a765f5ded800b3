#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>

#include "sontagdde/controller.hpp"
#include "sontagdde/dsl.hpp"

using namespace sontagdde;
using Catch::Approx;

namespace {

Vector v1(double x) { return Vector::Constant(1, x); }

ClkfSpec demo_clkf() {
  ClkfSpec c;
  c.P = Matrix::Identity(1, 1);
  c.terms.push_back({1.0, 0.25, Matrix::Identity(1, 1)});
  c.alpha1 = {0.4, 2};
  c.alpha2 = {1.5, 2};
  c.alpha3 = {0.1, 2};
  c.r = 0.5;
  c.p = 1.0;
  return c;
}

SystemModel demo_model() { return parse_model("system { n=1 m=1 delta=1.0 f = -x[0](0) + 0.5*x[0](-1.0) g = 1.0 }"); }

}  // namespace

TEST_CASE("sontag_k", "[controller]") {
  CHECK(sontag_k(3.0, v1(0.0))[0] == 0.0);
  CHECK(sontag_k(-3.0, Vector::Zero(2)).norm() == 0.0);
  CHECK(sontag_k(1.0, v1(1.0))[0] == Approx(-(1.0 + std::sqrt(2.0))));
  CHECK(sontag_k(1.0, v1(1.0))[0] == Approx(-2.4142136).margin(5e-8));
  CHECK(sontag_k(-1.0, v1(1.0))[0] == Approx(-0.4142136).margin(5e-8));
}

TEST_CASE("sontag_kr", "[controller]") {
  CHECK(sontag_kr(1.0, v1(0.0), 0.5)[0] == 0.0);
  CHECK(sontag_kr(1.0, v1(1.0), 0.5)[0] == sontag_k(1.0, v1(1.0))[0]);
  // (1 + sqrt(1 + 0.25^4)) * 0.25 / 0.5^2
  CHECK(sontag_kr(1.0, v1(0.25), 0.5)[0] == Approx(-(1.0 + std::sqrt(1.00390625))));
  CHECK(sontag_kr(1.0, v1(0.25), 0.5)[0] == Approx(-2.0019512).epsilon(1e-7));
  CHECK_THROWS_AS(sontag_kr(1.0, v1(0.25), 0.0), DomainError);
}

TEST_CASE("dissipation_rate", "[controller]") {
  CHECK(dissipation_rate(1.0, v1(1.0), sontag_k(1.0, v1(1.0)), v1(0.0)) == Approx(-std::sqrt(2.0)));
  CHECK(dissipation_rate(0.7, v1(0.0), v1(5.0), v1(-3.0)) == 0.7);
  CHECK(sontag_k(0.0, v1(1.0))[0] == Approx(-1.0));
  CHECK(dissipation_rate(0.0, v1(1.0), v1(-1.0), v1(0.0)) == -1.0);
}

TEST_CASE("control_input on the demo", "[controller]") {
  const auto c = demo_clkf();
  const auto model = demo_model();
  const auto ones = HistorySegment::constant(1.0, 0.01, v1(1.0));
  const auto zeros = HistorySegment::constant(1.0, 0.01, v1(0.0));

  for (auto mode : {ControlMode::SontagK, ControlMode::SontagKr, ControlMode::KrPlusIss, ControlMode::OpenLoop}) {
    CHECK(control_input(c, model, zeros, ControlConfig{mode, 1.0, 0.5})[0] == 0.0);
  }
  const double u = control_input(c, model, ones, ControlConfig{ControlMode::KrPlusIss, 1.0, 0.5})[0];
  CHECK(u == Approx(-1.6180340).epsilon(1e-7));
  CHECK(u == Approx(0.5 - std::sqrt(1.25) - 1.0));
  CHECK(control_input(c, model, ones, ControlConfig{ControlMode::OpenLoop, 1.0, 0.5})[0] == 0.0);

  CHECK_THROWS_AS(control_input(nullptr, model, ones, ControlConfig{ControlMode::SontagK, 1.0, 0.5}), ConfigError);
  CHECK_THROWS_AS(control_input(c, model, ones, ControlConfig{ControlMode::KrPlusIss, 0.0, 0.5}), ConfigError);
  CHECK_THROWS_AS(control_input(c, model, ones, ControlConfig{ControlMode::SontagKr, 1.0, -1.0}), ConfigError);
}

TEST_CASE("mode names round trip", "[controller]") {
  for (auto mode : {ControlMode::SontagK, ControlMode::SontagKr, ControlMode::KrPlusIss, ControlMode::OpenLoop}) {
    CHECK(parse_mode(to_string(mode)) == mode);
  }
  CHECK_FALSE(parse_mode("sontag").has_value());
}

TEST_CASE("Sontag identity holds on random draws", "[controller][property]") {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> ua(-1e3, 1e3), lb(-6.0, 3.0), dir(-1.0, 1.0);
  for (int k = 0; k < 2000; ++k) {
    const double a = ua(rng);
    Vector b(3);
    b << dir(rng), dir(rng), dir(rng);
    b *= std::pow(10.0, lb(rng)) / b.norm();
    const double lhs = a + b.dot(sontag_k(a, b)) + std::sqrt(a * a + std::pow(b.squaredNorm(), 2));
    CHECK(std::abs(lhs) <= 1e-9 * (1.0 + std::abs(a) + b.squaredNorm()));
  }
}

TEST_CASE("sontag maps stay finite for large arguments", "[controller][property]") {
  std::mt19937_64 rng(12);
  std::uniform_real_distribution<double> u(-1e6, 1e6);
  for (int k = 0; k < 1000; ++k) {
    const double a = u(rng);
    const Vector b = v1(u(rng));
    CHECK(std::isfinite(sontag_k(a, b)[0]));
    CHECK(std::isfinite(sontag_kr(a, b, 0.5)[0]));
  }
  CHECK(std::isfinite(sontag_k(-1e6, v1(1e-6))[0]));
}

TEST_CASE("kr modification stays within (2p + r)|b| when a <= p|b|", "[controller][property]") {
  std::mt19937_64 rng(13);
  const double r = 0.5, p = 1.0;
  std::uniform_real_distribution<double> ub(1e-9, r), ua(-50.0, 1.0);
  for (int k = 0; k < 2000; ++k) {
    const double bn = ub(rng);
    const Vector b = v1(k % 2 ? bn : -bn);
    const double a = std::min(ua(rng), p * bn);
    const Vector kr = sontag_kr(a, b, r);
    CHECK(b.dot(kr) <= 1e-12);
    CHECK(std::abs(b.dot(kr - sontag_k(a, b))) <= (2 * p + r) * bn + 1e-9);
  }
}

TEST_CASE("cheap control: the numerator is nonnegative and kr never exceeds k in size", "[controller][property]") {
  std::mt19937_64 rng(14);
  std::uniform_real_distribution<double> ua(-10.0, 10.0), ub(-2.0, 2.0);
  for (int k = 0; k < 1000; ++k) {
    const double a = ua(rng);
    const Vector b = v1(ub(rng));
    CHECK(sontag_kr(a, b, 0.5).norm() <= sontag_k(a, b).norm() * (1 + 1e-15) + 1e-300);
    CHECK(b.dot(sontag_k(a, b)) <= 0.0);
  }
}
