#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <numbers>
#include <random>

#include "sontagdde/history.hpp"

using namespace sontagdde;
using Catch::Approx;

namespace {

Vector vec1(double v) { return Vector::Constant(1, v); }

HistorySegment scalar(double delta, double step, double (*fn)(double)) {
  return HistorySegment::from_function(1, delta, step, [fn](double s) { return vec1(fn(s)); });
}

HistorySegment random_segment(std::mt19937_64& rng, std::size_t n, double delta, double step) {
  std::normal_distribution<double> nd;
  Matrix c(static_cast<Eigen::Index>(n), 4);
  for (Eigen::Index i = 0; i < c.size(); ++i) c.data()[i] = nd(rng);
  return HistorySegment::from_function(n, delta, step, [&](double s) {
    Vector v = c.col(0) + c.col(1) * s + c.col(2) * std::sin(3.0 * s) + c.col(3) * std::cos(5.0 * s);
    return v;
  });
}

}  // namespace

TEST_CASE("eval interpolates between grid samples", "[history][eval]") {
  const auto one = HistorySegment::constant(1.0, 0.1, vec1(1.0));
  CHECK(eval(one, -0.3)[0] == Approx(1.0));

  const auto lin = scalar(1.0, 0.25, [](double s) { return s; });
  CHECK(eval(lin, -0.125)[0] == Approx(-0.125).margin(1e-15));

  // s^2 on grid 0.5: halfway between 0.25 at -0.5 and 0 at 0.
  const auto quad = scalar(1.0, 0.5, [](double s) { return s * s; });
  CHECK(eval(quad, -0.25)[0] == Approx(0.125).margin(1e-15));
}

TEST_CASE("eval reproduces stored samples at grid points", "[history][eval]") {
  const auto seg = scalar(2.0, 0.125, [](double s) { return std::exp(s) * std::sin(4 * s); });
  for (std::size_t j = 0; j < seg.size(); ++j) {
    const double tau = -2.0 + 0.125 * static_cast<double>(j);
    CHECK(eval(seg, tau)[0] == seg.sample(j)[0]);
  }
}

TEST_CASE("eval rejects tau outside [-delta, 0]", "[history][eval][errors]") {
  const auto seg = HistorySegment::constant(1.0, 0.1, vec1(1.0));
  CHECK_THROWS_AS(eval(seg, 0.1), DomainError);
  CHECK_THROWS_AS(eval(seg, -1.2), DomainError);
  CHECK_NOTHROW(eval(seg, -1.0));
  CHECK_NOTHROW(eval(seg, 0.0));
}

TEST_CASE("segment construction validates the grid", "[history][errors]") {
  CHECK_THROWS_AS(HistorySegment(1, 1.0, 0.3, std::vector<double>(4, 0.0)), DomainError);
  CHECK_THROWS_AS(HistorySegment(1, 1.0, 0.25, std::vector<double>(4, 0.0)), DomainError);
  CHECK_THROWS_AS(HistorySegment(0, 1.0, 0.25, {}), DomainError);
  const HistorySegment ok(2, 1.0, 0.25, std::vector<double>(10, 0.0));
  CHECK(ok.size() == 5);
  CHECK(ok.intervals() == 4);
}

TEST_CASE("sup_norm", "[history][norms]") {
  CHECK(sup_norm(HistorySegment::constant(1.0, 0.1, Vector::Zero(2))) == 0.0);
  CHECK(sup_norm(scalar(1.0, 0.01, [](double s) { return s; })) == Approx(1.0));
  // max of |sin 3s| on [-1, 0] is 1 at 3s = -pi/2; the 1e-3 grid misses the peak by < 5e-6.
  const double grid_max = sup_norm(scalar(1.0, 1e-3, [](double s) { return std::sin(3 * s); }));
  CHECK(std::abs(grid_max - 1.0) <= 5e-6);
}

TEST_CASE("m2_norm", "[history][norms]") {
  CHECK(m2_norm(HistorySegment::constant(1.0, 0.1, Vector::Zero(1))) == 0.0);
  Vector c(2);
  c << 3.0, -4.0;
  CHECK(m2_norm(HistorySegment::constant(1.0, 0.1, c)) == Approx(5.0 * std::sqrt(2.0)));
  // (0 + int_{-1}^0 s^2 ds)^{1/2} = sqrt(1/3)
  CHECK(std::abs(m2_norm(scalar(1.0, 1e-3, [](double s) { return s; })) - std::sqrt(1.0 / 3.0)) <= 1e-6);
}

TEST_CASE("shift_freeze", "[history][shift]") {
  const auto lin = scalar(1.0, 0.25, [](double s) { return s; });
  CHECK(shift_freeze(lin, 0.0) == lin);

  const auto shifted = shift_freeze(lin, 0.5);
  CHECK(eval(shifted, -1.0)[0] == Approx(-0.5));
  CHECK(eval(shifted, -0.75)[0] == Approx(-0.25));
  CHECK(eval(shifted, -0.5)[0] == 0.0);
  CHECK(eval(shifted, -0.25)[0] == 0.0);
  CHECK(eval(shifted, 0.0)[0] == 0.0);

  Vector c(2);
  c << 2.0, -1.0;
  const auto cst = HistorySegment::constant(1.0, 0.25, c);
  for (double h : {0.25, 0.5, 0.75}) CHECK(shift_freeze(cst, h) == cst);

  CHECK_THROWS_AS(shift_freeze(lin, 1.0), DomainError);
  CHECK_THROWS_AS(shift_freeze(lin, -0.25), DomainError);
  CHECK_THROWS_AS(shift_freeze(lin, 0.3), DomainError);
}

TEST_CASE("advance slides the window", "[history][advance]") {
  const auto lin = scalar(1.0, 0.5, [](double s) { return s; });
  const auto moved = advance(lin, {vec1(0.5), vec1(1.0)});
  CHECK(moved.sample(0)[0] == 0.0);
  CHECK(moved.sample(1)[0] == 0.5);
  CHECK(moved.sample(2)[0] == 1.0);
  CHECK(moved.delta() == lin.delta());
  CHECK(moved.step() == lin.step());

  const auto ones = HistorySegment::constant(1.0, 0.25, vec1(1.0));
  CHECK(advance(ones, {vec1(1.0)}) == ones);

  const std::vector<Vector> zeros(ones.size(), vec1(0.0));
  CHECK(advance(ones, zeros) == HistorySegment::constant(1.0, 0.25, vec1(0.0)));

  CHECK_THROWS_AS(advance(ones, {Vector::Zero(2)}), DomainError);
  CHECK_THROWS_AS(advance(ones, {}), DomainError);
  CHECK_THROWS_AS(advance(ones, std::vector<Vector>(ones.size() + 1, vec1(0.0))), DomainError);
}

TEST_CASE("norm sandwich and homogeneity on random segments", "[history][property]") {
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> scale(-5.0, 5.0);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n = 1 + trial % 3;
    const double delta = trial % 2 ? 1.0 : 0.5;
    const auto seg = random_segment(rng, n, delta, delta / 40.0);
    const double head = seg.head().norm();
    const double sup = sup_norm(seg);
    const double m2 = m2_norm(seg);
    CHECK(head <= m2 * (1 + 1e-14));
    CHECK(m2 <= sup * std::sqrt(1.0 + delta) * (1 + 1e-14));
    CHECK(sup >= head);

    const double c = scale(rng);
    const auto scaled = seg.scaled(c);
    CHECK(sup_norm(scaled) == Approx(std::abs(c) * sup).epsilon(1e-13));
    CHECK(m2_norm(scaled) == Approx(std::abs(c) * m2).epsilon(1e-13));

    CHECK(shift_freeze(seg, 0.0) == seg);
  }
}

TEST_CASE("eval is Lipschitz with the largest sample slope", "[history][property]") {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> tau(-1.0, 0.0);
  for (int trial = 0; trial < 50; ++trial) {
    const auto seg = random_segment(rng, 2, 1.0, 0.05);
    double L = 0.0;
    for (std::size_t j = 0; j + 1 < seg.size(); ++j) {
      L = std::max(L, (seg.sample(j + 1) - seg.sample(j)).norm() / seg.step());
    }
    for (int k = 0; k < 50; ++k) {
      const double t1 = tau(rng), t2 = tau(rng);
      CHECK((eval(seg, t1) - eval(seg, t2)).norm() <= L * std::abs(t1 - t2) * (1 + 1e-12) + 1e-15);
    }
  }
}

TEST_CASE("stage segment joins history and stage value", "[history][stage]") {
  const auto seg = scalar(1.0, 0.1, [](double s) { return 1.0 + s; });
  Vector end = vec1(3.0);
  const StageSegment half(seg.ref(), 0.05, end);
  CHECK(half.value(0, 0.0) == 3.0);
  CHECK(half.value(0, -0.05) == Approx(1.0));
  CHECK(half.value(0, -0.025) == Approx(2.0));  // halfway between x(t) = 1 and the stage value
  CHECK(half.value(0, -1.0) == Approx(0.05));   // history at -0.95
  CHECK(half.value(0, -0.55) == Approx(0.5));

  const auto ts = half.nodes(-1.0, 0.0);
  CHECK(ts.front() == -1.0);
  CHECK(ts.back() == 0.0);
  CHECK(std::find_if(ts.begin(), ts.end(), [](double t) { return std::abs(t + 0.05) < 1e-12; }) != ts.end());
  for (std::size_t k = 1; k < ts.size(); ++k) CHECK(ts[k] > ts[k - 1]);

  // int of a linear function is exact under the trapezoid rule on any node set.
  const double integral = trapezoid(half, -1.0, -0.05, [&](double t) { return half.value(0, t); });
  CHECK(integral == Approx(0.5 * (0.05 + 1.0) * 0.95));
}

TEST_CASE("grid quadrature nodes handle bounds off the grid", "[history][quadrature]") {
  const auto seg = scalar(1.0, 0.25, [](double s) { return s; });
  const auto ts = seg.nodes(-0.6, -0.1);
  REQUIRE(ts.size() == 4);
  CHECK(ts[0] == -0.6);
  CHECK(ts[1] == Approx(-0.5));
  CHECK(ts[2] == Approx(-0.25));
  CHECK(ts[3] == -0.1);
  // int_{-0.6}^{-0.1} s ds = (0.01 - 0.36)/2
  CHECK(trapezoid(seg, -0.6, -0.1, [&](double t) { return seg.value(0, t); }) == Approx(-0.175));
}
