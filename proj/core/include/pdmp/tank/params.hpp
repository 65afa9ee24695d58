#pragma once

#include <array>
#include <cstdint>

namespace pdmp::tank {

/// Heated hold-up tank parameters. Defaults are the literature values of
/// the benchmark (failure-rate law, flows, heating) plus the maintenance
/// problem settings.
struct TankParams {
  // Failure-rate modulation a(theta).
  double b1 = 3.0295;
  double b2 = 0.7578;
  double bc = 0.05756;  // 1/degC
  double bd = 0.2301;   // 1/degC
  double theta_ref = 20.0;

  double theta_in = 15.0;                              // degC
  std::array<double, 3> l{2.2831e-3, 2.8571e-3, 1.5625e-3};  // 1/h
  double G = 1.5;                                      // m/h
  double K = 23.88915;                                 // m degC / h

  double p_control = 0.8;
  /// Probability that a failing unit ends StuckOn (otherwise StuckOff).
  double stuck_on_prob = 0.5;

  double h0 = 7.0;
  double theta0 = 30.9261;

  double h_dry = 4.0;
  double h_low = 6.0;
  double h_high = 8.0;
  double h_over = 10.0;
  double theta_hot = 100.0;
  double horizon = 1000.0;  // T_f, hours

  // Reward g(h, theta, t) = f(h, theta) t^alpha.
  double alpha = 1.01;
  double theta_normal = 50.0;  // f = 1 below this temperature

  /// Throws std::invalid_argument describing the first bad field.
  void validate() const;

  /// Fingerprint of everything that shapes the dynamics (not the reward).
  [[nodiscard]] std::uint64_t dynamics_hash() const noexcept;
  /// Fingerprint of the reward parameters.
  [[nodiscard]] std::uint64_t reward_hash() const noexcept;
};

}  // namespace pdmp::tank
