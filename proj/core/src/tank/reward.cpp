#include "pdmp/tank/reward.hpp"

#include <algorithm>
#include <cmath>

namespace pdmp::tank {

TankReward::TankReward(const TankParams& p) noexcept
    : h_dry_(p.h_dry),
      h_low_(p.h_low),
      h_high_(p.h_high),
      h_over_(p.h_over),
      theta_normal_(p.theta_normal),
      theta_hot_(p.theta_hot),
      alpha_(p.alpha) {}

double TankReward::level_factor(double h) const noexcept {
  if (h <= h_dry_ || h >= h_over_) return 0.0;
  if (h < h_low_) return (h - h_dry_) / (h_low_ - h_dry_);
  if (h > h_high_) return (h_over_ - h) / (h_over_ - h_high_);
  return 1.0;
}

double TankReward::temperature_factor(double theta) const noexcept {
  if (theta >= theta_hot_) return 0.0;
  if (theta <= theta_normal_) return 1.0;
  return (theta_hot_ - theta) / (theta_hot_ - theta_normal_);
}

double TankReward::shape(double h, double theta) const noexcept {
  return level_factor(h) * temperature_factor(theta);
}

double TankReward::operator()(double h, double theta, double t) const noexcept {
  if (t <= 0.0) return 0.0;
  const double f = shape(h, theta);
  if (f == 0.0) return 0.0;
  return scale_ * f * std::pow(t, alpha_);
}

TankReward TankReward::scaled(double c) const noexcept {
  TankReward out = *this;
  out.scale_ *= c;
  return out;
}

}  // namespace pdmp::tank
