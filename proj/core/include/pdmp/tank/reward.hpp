#pragma once

#include "pdmp/model.hpp"
#include "pdmp/tank/params.hpp"

namespace pdmp::tank {

/// Reward g(h, theta, t) = f(h, theta) * t^alpha.
///
/// f is the product of two piecewise-affine ramps: in h it is 0 at h_dry,
/// 1 on [h_low, h_high] and 0 at h_over; in theta it is 1 up to
/// theta_normal and 0 at theta_hot. Values outside the box clamp to 0.
class TankReward {
 public:
  explicit TankReward(const TankParams& params) noexcept;

  [[nodiscard]] double level_factor(double h) const noexcept;
  [[nodiscard]] double temperature_factor(double theta) const noexcept;
  [[nodiscard]] double shape(double h, double theta) const noexcept;
  [[nodiscard]] double operator()(double h, double theta, double t) const noexcept;
  [[nodiscard]] double operator()(const HybridState& s) const noexcept {
    return (*this)(s.x[0], s.x[1], s.t);
  }

  /// Multiplies every reward value by `c` (used to check homogeneity).
  [[nodiscard]] TankReward scaled(double c) const noexcept;

 private:
  double h_dry_, h_low_, h_high_, h_over_;
  double theta_normal_, theta_hot_;
  double alpha_;
  double scale_ = 1.0;
};

}  // namespace pdmp::tank
