#pragma once

// History segments: continuous maps phi: [-delta, 0] -> R^n stored on a uniform grid
// and read back by piecewise linear interpolation. A segment is the state x_t of a
// retarded system; the integrator slides it forward one grid step at a time.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <concepts>
#include <cstddef>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "sontagdde/errors.hpp"

namespace sontagdde {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// Relative tolerance used for every "is this a grid multiple" decision.
inline constexpr double kGridTolerance = 1e-9;

/// Returns k when value == k * step up to kGridTolerance (relative to max(1, value/step)).
[[nodiscard]] inline std::optional<std::size_t> grid_multiple(double value, double step) {
  if (!(step > 0.0) || !(value >= 0.0) || !std::isfinite(value)) return std::nullopt;
  const double ratio = value / step;
  const double k = std::round(ratio);
  if (std::abs(ratio - k) > kGridTolerance * std::max(1.0, ratio)) return std::nullopt;
  return static_cast<std::size_t>(k);
}

/// Anything the expression evaluator and the functional can read a state segment from.
template <class S>
concept Segment = requires(const S& s, std::size_t i, double tau, double lo, double hi) {
  { s.dim() } -> std::convertible_to<std::size_t>;
  { s.delta() } -> std::convertible_to<double>;
  { s.step() } -> std::convertible_to<double>;
  { s.value(i, tau) } -> std::convertible_to<double>;
  { s.nodes(lo, hi) } -> std::convertible_to<std::vector<double>>;
};

/// Non-owning view of grid samples at tau_j = -(N - j) * step, j = 0..N.
class SegmentRef {
 public:
  SegmentRef(std::span<const double> samples, std::size_t dim, double delta, double step)
      : data_(samples), dim_(dim), delta_(delta), step_(step), intervals_(samples.size() / dim - 1) {}

  [[nodiscard]] std::size_t dim() const noexcept { return dim_; }
  [[nodiscard]] double delta() const noexcept { return delta_; }
  [[nodiscard]] double step() const noexcept { return step_; }
  [[nodiscard]] std::size_t intervals() const noexcept { return intervals_; }
  [[nodiscard]] std::size_t size() const noexcept { return intervals_ + 1; }
  [[nodiscard]] std::span<const double> raw() const noexcept { return data_; }

  [[nodiscard]] double grid_time(std::size_t j) const noexcept {
    return -static_cast<double>(intervals_ - j) * step_;
  }
  [[nodiscard]] double sample(std::size_t j, std::size_t i) const { return data_[j * dim_ + i]; }
  [[nodiscard]] Vector sample(std::size_t j) const {
    return Eigen::Map<const Vector>(data_.data() + j * dim_, static_cast<Eigen::Index>(dim_));
  }
  [[nodiscard]] Vector head() const { return sample(intervals_); }

  /// Component i at tau; exact at grid points, linear in between.
  [[nodiscard]] double value(std::size_t i, double tau) const {
    const auto [j, w] = locate(tau);
    if (w == 0.0) return sample(j, i);
    return (1.0 - w) * sample(j, i) + w * sample(j + 1, i);
  }

  [[nodiscard]] Vector at(double tau) const {
    const auto [j, w] = locate(tau);
    if (w == 0.0) return sample(j);
    return (1.0 - w) * sample(j) + w * sample(j + 1);
  }

  /// Quadrature nodes on [lo, hi]: the bounds plus every grid point strictly inside.
  [[nodiscard]] std::vector<double> nodes(double lo, double hi) const {
    std::vector<double> out;
    out.push_back(lo);
    const double first = std::ceil((lo + delta_) / step_ - kGridTolerance);
    for (auto j = static_cast<std::ptrdiff_t>(std::max(0.0, first));
         j <= static_cast<std::ptrdiff_t>(intervals_); ++j) {
      const double t = grid_time(static_cast<std::size_t>(j));
      if (t >= hi - kGridTolerance * step_) break;
      if (t > lo + kGridTolerance * step_) out.push_back(t);
    }
    if (hi > lo) out.push_back(hi);
    return out;
  }

 private:
  // Bracketing index and weight toward j + 1; snaps to a grid point when within tolerance.
  [[nodiscard]] std::pair<std::size_t, double> locate(double tau) const {
    const double tol = kGridTolerance * std::max(1.0, delta_);
    if (!(tau >= -delta_ - tol && tau <= tol)) {
      throw DomainError("tau=" + format_number(tau) + " outside [-" + format_number(delta_) + ", 0]");
    }
    const double pos = static_cast<double>(intervals_) + tau / step_;
    if (pos <= 0.0) return {0, 0.0};
    if (pos >= static_cast<double>(intervals_)) return {intervals_, 0.0};
    const double base = std::floor(pos);
    const double frac = pos - base;
    auto j = static_cast<std::size_t>(base);
    if (frac < kGridTolerance) return {j, 0.0};
    if (frac > 1.0 - kGridTolerance) return {j + 1, 0.0};
    return {j, frac};
  }

  std::span<const double> data_;
  std::size_t dim_;
  double delta_;
  double step_;
  std::size_t intervals_;
};

/// Owning, immutable history segment.
class HistorySegment {
 public:
  /// samples holds (delta/step + 1) row vectors of length dim, oldest first, flattened.
  HistorySegment(std::size_t dim, double delta, double step, std::vector<double> samples)
      : dim_(dim), delta_(delta), step_(step), data_(std::move(samples)) {
    if (dim == 0) throw DomainError("segment dimension must be positive");
    if (!(delta > 0.0) || !(step > 0.0)) throw DomainError("segment delta and step must be positive");
    const auto k = grid_multiple(delta, step);
    if (!k || *k == 0) {
      throw DomainError("grid step " + format_number(step) + " does not divide delta " + format_number(delta));
    }
    intervals_ = *k;
    if (data_.size() != (intervals_ + 1) * dim_) {
      throw DomainError("segment needs " + std::to_string((intervals_ + 1) * dim_) + " values, got " +
                        std::to_string(data_.size()));
    }
  }

  static HistorySegment constant(double delta, double step, const Vector& c) {
    return from_function(static_cast<std::size_t>(c.size()), delta, step, [&](double) { return c; });
  }

  /// Samples fn(tau) on the grid.
  static HistorySegment from_function(std::size_t dim, double delta, double step,
                                      const std::function<Vector(double)>& fn) {
    const auto k = grid_multiple(delta, step);
    if (!k || *k == 0) {
      throw DomainError("grid step " + format_number(step) + " does not divide delta " + format_number(delta));
    }
    std::vector<double> data;
    data.reserve((*k + 1) * dim);
    for (std::size_t j = 0; j <= *k; ++j) {
      const Vector v = fn(-static_cast<double>(*k - j) * step);
      if (static_cast<std::size_t>(v.size()) != dim) throw DomainError("sample dimension mismatch");
      data.insert(data.end(), v.data(), v.data() + dim);
    }
    return HistorySegment(dim, delta, step, std::move(data));
  }

  [[nodiscard]] SegmentRef ref() const { return SegmentRef(data_, dim_, delta_, step_); }
  operator SegmentRef() const { return ref(); }  // NOLINT(google-explicit-constructor)

  [[nodiscard]] std::size_t dim() const noexcept { return dim_; }
  [[nodiscard]] double delta() const noexcept { return delta_; }
  [[nodiscard]] double step() const noexcept { return step_; }
  [[nodiscard]] std::size_t intervals() const noexcept { return intervals_; }
  [[nodiscard]] std::size_t size() const noexcept { return intervals_ + 1; }
  [[nodiscard]] const std::vector<double>& raw() const noexcept { return data_; }

  [[nodiscard]] double value(std::size_t i, double tau) const { return ref().value(i, tau); }
  [[nodiscard]] Vector at(double tau) const { return ref().at(tau); }
  [[nodiscard]] Vector sample(std::size_t j) const { return ref().sample(j); }
  [[nodiscard]] Vector head() const { return ref().head(); }
  [[nodiscard]] std::vector<double> nodes(double lo, double hi) const { return ref().nodes(lo, hi); }

  [[nodiscard]] HistorySegment scaled(double c) const {
    std::vector<double> d = data_;
    for (auto& v : d) v *= c;
    return HistorySegment(dim_, delta_, step_, std::move(d));
  }

  friend bool operator==(const HistorySegment&, const HistorySegment&) = default;

 private:
  std::size_t dim_;
  double delta_;
  double step_;
  std::vector<double> data_;
  std::size_t intervals_ = 0;
};

/// x_{t+theta} for 0 < theta <= step during a Runge-Kutta stage: the stored history shifted by
/// theta, with the not-yet-stored piece (t, t+theta] interpolated linearly between x(t) and the
/// stage value.
class StageSegment {
 public:
  StageSegment(SegmentRef base, double theta, const Vector& stage_value)
      : base_(base), theta_(theta), start_(base.head()), end_(stage_value) {}

  [[nodiscard]] std::size_t dim() const noexcept { return base_.dim(); }
  [[nodiscard]] double delta() const noexcept { return base_.delta(); }
  [[nodiscard]] double step() const noexcept { return base_.step(); }

  [[nodiscard]] double value(std::size_t i, double tau) const {
    const double u = tau + theta_;
    if (u <= kGridTolerance * base_.step()) return base_.value(i, std::min(u, 0.0));
    const double w = std::min(u / theta_, 1.0);
    return (1.0 - w) * start_[static_cast<Eigen::Index>(i)] + w * end_[static_cast<Eigen::Index>(i)];
  }

  [[nodiscard]] std::vector<double> nodes(double lo, double hi) const {
    std::vector<double> out = base_.nodes(lo + theta_, std::min(hi + theta_, 0.0));
    for (auto& t : out) t -= theta_;
    out.push_back(lo);
    out.push_back(hi);
    if (-theta_ > lo && -theta_ < hi) out.push_back(-theta_);
    std::sort(out.begin(), out.end());
    std::vector<double> clean;
    for (double t : out) {
      if (t < lo || t > hi) continue;
      if (!clean.empty() && t - clean.back() <= kGridTolerance * base_.step()) continue;
      clean.push_back(t);
    }
    return clean;
  }

 private:
  SegmentRef base_;
  double theta_;
  Vector start_;
  Vector end_;
};

/// Reads an n-vector from any segment type at tau.
template <Segment S>
[[nodiscard]] Vector eval_at(const S& seg, double tau) {
  Vector v(static_cast<Eigen::Index>(seg.dim()));
  for (std::size_t i = 0; i < seg.dim(); ++i) v[static_cast<Eigen::Index>(i)] = seg.value(i, tau);
  return v;
}

/// Trapezoid rule for tau -> integrand(tau) over the segment's quadrature nodes on [lo, hi].
template <Segment S, class F>
[[nodiscard]] double trapezoid(const S& seg, double lo, double hi, F&& integrand) {
  const std::vector<double> ts = seg.nodes(lo, hi);
  if (ts.size() < 2) return 0.0;
  double sum = 0.0;
  double prev_t = ts.front();
  double prev_v = integrand(prev_t);
  for (std::size_t k = 1; k < ts.size(); ++k) {
    const double v = integrand(ts[k]);
    sum += 0.5 * (ts[k] - prev_t) * (prev_v + v);
    prev_t = ts[k];
    prev_v = v;
  }
  return sum;
}

/// phi(tau) with a domain check.
[[nodiscard]] inline Vector eval(SegmentRef seg, double tau) { return seg.at(tau); }

/// max over grid samples of |phi(tau_j)|; exact for piecewise linear data.
[[nodiscard]] inline double sup_norm(SegmentRef seg) {
  double best = 0.0;
  for (std::size_t j = 0; j < seg.size(); ++j) best = std::max(best, seg.sample(j).norm());
  return best;
}

/// (|phi(0)|^2 + int_{-delta}^0 |phi|^2)^{1/2}, integral by the grid trapezoid rule.
[[nodiscard]] inline double m2_norm(SegmentRef seg) {
  double integral = 0.0;
  double prev = seg.sample(0).squaredNorm();
  for (std::size_t j = 1; j < seg.size(); ++j) {
    const double cur = seg.sample(j).squaredNorm();
    integral += 0.5 * seg.step() * (prev + cur);
    prev = cur;
  }
  return std::sqrt(seg.head().squaredNorm() + integral);
}

struct NormReport {
  double sup_norm = 0.0;
  double m2_norm = 0.0;
};

[[nodiscard]] inline NormReport norms(SegmentRef seg) { return {sup_norm(seg), m2_norm(seg)}; }

/// phi^h: phi(s + h) for s < -h, frozen at phi(0) on [-h, 0]. h must be a grid multiple in [0, delta).
[[nodiscard]] inline HistorySegment shift_freeze(const HistorySegment& seg, double h) {
  if (!(h >= 0.0) || !(h < seg.delta() * (1.0 - kGridTolerance))) {
    throw DomainError("shift h=" + format_number(h) + " outside [0, " + format_number(seg.delta()) + ")");
  }
  const auto k = grid_multiple(h, seg.step());
  if (!k) throw DomainError("shift h=" + format_number(h) + " is not a multiple of the grid step");
  if (*k == 0) return seg;
  const std::size_t n = seg.dim();
  const std::size_t last = seg.intervals();
  std::vector<double> out(seg.raw().size());
  for (std::size_t j = 0; j <= last; ++j) {
    const std::size_t src = std::min(j + *k, last);
    std::copy_n(seg.raw().begin() + static_cast<std::ptrdiff_t>(src * n), n,
                out.begin() + static_cast<std::ptrdiff_t>(j * n));
  }
  return HistorySegment(n, seg.delta(), seg.step(), std::move(out));
}

/// Slides the window forward by new_samples.size() grid steps (1 <= count <= number of samples).
[[nodiscard]] inline HistorySegment advance(const HistorySegment& seg, const std::vector<Vector>& new_samples) {
  const std::size_t n = seg.dim();
  if (new_samples.empty() || new_samples.size() > seg.size()) {
    throw DomainError("advance needs between 1 and " + std::to_string(seg.size()) + " samples");
  }
  for (const auto& v : new_samples) {
    if (static_cast<std::size_t>(v.size()) != n) throw DomainError("advance: sample dimension mismatch");
  }
  const std::size_t keep = seg.size() - new_samples.size();
  std::vector<double> out;
  out.reserve(seg.raw().size());
  out.insert(out.end(), seg.raw().end() - static_cast<std::ptrdiff_t>(keep * n), seg.raw().end());
  for (const auto& v : new_samples) out.insert(out.end(), v.data(), v.data() + n);
  return HistorySegment(n, seg.delta(), seg.step(), std::move(out));
}

}  // namespace sontagdde
