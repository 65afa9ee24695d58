#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "pdmp/model.hpp"

namespace pdmp::testing {

// One-mode models on a line. x[0] moves at unit speed, x[1] is unused.
// Jumps leave the state in place, so only their times matter.

/// Intensity rate0 + slope * x[0]; exit when the running time reaches `horizon`.
class LineModel final : public PdmpModel {
 public:
  LineModel(double rate0, double slope, double horizon)
      : rate0_(rate0), slope_(slope), horizon_(horizon) {}

  HybridState initial_state() const override { return {0, {0.0, 0.0}, 0.0}; }
  std::size_t mode_count() const override { return 1; }
  StateBox state_box() const override { return {{0.0, 0.0}, {horizon_, 1.0}, horizon_}; }

  HybridState flow(const HybridState& s, double u) const override {
    return {s.mode, {s.x[0] + u, s.x[1]}, s.t + u};
  }
  double boundary_time(const HybridState& s) const override {
    return std::max(0.0, horizon_ - s.t);
  }
  double intensity(const HybridState& s) const override { return rate0_ + slope_ * s.x[0]; }
  double intensity_bound(ModeId) const override { return rate0_ + slope_ * horizon_; }
  double segment_intensity_bound(const HybridState& s, double span) const override {
    return rate0_ + slope_ * (s.x[0] + span);
  }
  HybridState kernel(const HybridState& at, JumpKind, RandomStream&) const override {
    return at;
  }
  TerminalCause absorption(const HybridState& s) const override {
    return s.t >= horizon_ ? TerminalCause::Horizon : TerminalCause::None;
  }

 private:
  double rate0_, slope_, horizon_;
};

/// Declares a bound below its true intensity; the sampler must notice.
class LyingBoundModel final : public PdmpModel {
 public:
  HybridState initial_state() const override { return {0, {0.0, 0.0}, 0.0}; }
  std::size_t mode_count() const override { return 1; }
  StateBox state_box() const override { return {{0.0, 0.0}, {100.0, 1.0}, 100.0}; }
  HybridState flow(const HybridState& s, double u) const override {
    return {s.mode, {s.x[0] + u, s.x[1]}, s.t + u};
  }
  double boundary_time(const HybridState& s) const override { return 100.0 - s.t; }
  double intensity(const HybridState&) const override { return 2.0; }
  double intensity_bound(ModeId) const override { return 1.0; }
  HybridState kernel(const HybridState& at, JumpKind, RandomStream&) const override {
    return at;
  }
  TerminalCause absorption(const HybridState& s) const override {
    return s.t >= 100.0 ? TerminalCause::Horizon : TerminalCause::None;
  }
};

/// Survival function of the first jump of LineModel from x = 0.
inline double line_survival(double rate0, double slope, double s) {
  return std::exp(-(rate0 * s + 0.5 * slope * s * s));
}

/// Inverse-transform draw of the same first jump time from a uniform u.
inline double line_inverse(double rate0, double slope, double u) {
  const double e = -std::log1p(-u);
  if (slope == 0.0) return e / rate0;
  return (-rate0 + std::sqrt(rate0 * rate0 + 2.0 * slope * e)) / slope;
}

/// Kolmogorov-Smirnov statistic of sorted samples against a CDF.
template <class Cdf>
double ks_statistic(const std::vector<double>& sorted, Cdf cdf) {
  const double n = static_cast<double>(sorted.size());
  double d = 0.0;
  for (std::size_t i = 0; i < sorted.size(); ++i) {
    const double f = cdf(sorted[i]);
    d = std::max({d, f - static_cast<double>(i) / n, static_cast<double>(i + 1) / n - f});
  }
  return d;
}

}  // namespace pdmp::testing
