#pragma once

#include "pdmp/model.hpp"
#include "pdmp/tank/mode.hpp"
#include "pdmp/tank/params.hpp"

namespace pdmp::tank {

/// Temperature modulation of the failure rates; equals 1 at theta_ref.
[[nodiscard]] double temperature_factor(const TankParams& p, double theta) noexcept;

/// Failure intensity of unit i (0-based) at temperature theta; zero once stuck.
[[nodiscard]] double unit_intensity(const TankParams& p, const TankMode& mode, int unit,
                                    double theta) noexcept;

/// Sum of the base rates l_i over units that can still fail.
[[nodiscard]] double live_rate_sum(const TankParams& p, const TankMode& mode) noexcept;

enum class ThetaSolver {
  ClosedForm,  // exact solution of the linear temperature equation
  Adaptive,    // embedded Runge-Kutta with step control, rtol 1e-9
};

struct LevelTemperature {
  double h = 0.0;
  double theta = 0.0;
};

/// Level and temperature after `u` hours in `mode`. The level is affine in
/// time; the temperature follows the heating/mixing balance along it.
[[nodiscard]] LevelTemperature tank_flow(const TankParams& p, const TankMode& mode, double h,
                                         double theta, double u,
                                         ThetaSolver solver = ThetaSolver::ClosedForm);

enum class Boundary : std::uint8_t { Dry, Low, High, Overflow, Hot, Horizon };

struct BoundaryHit {
  double time = 0.0;
  Boundary which = Boundary::Horizon;
};

/// First boundary reached by the flow. Level thresholds are direction
/// dependent: h_low only when falling and h_high only when rising, both only
/// while the controller works, and only crossings strictly in the future
/// count. The hot-temperature crossing is located by bisection to 1e-9 h.
[[nodiscard]] BoundaryHit next_boundary(const TankParams& p, const HybridState& s,
                                        ThetaSolver solver = ThetaSolver::ClosedForm);

enum class TopEvent : std::uint8_t { None, DryOut, Overflow, Hot };

[[nodiscard]] TopEvent top_event(const TankParams& p, const HybridState& s) noexcept;

/// The heated hold-up tank as a PDMP. State x = (h [m], theta [degC]).
class TankModel final : public PdmpModel {
 public:
  explicit TankModel(TankParams params = {}, ThetaSolver solver = ThetaSolver::ClosedForm);

  [[nodiscard]] const TankParams& params() const noexcept { return params_; }
  [[nodiscard]] ThetaSolver solver() const noexcept { return solver_; }

  [[nodiscard]] HybridState initial_state() const override;
  [[nodiscard]] std::size_t mode_count() const override { return kModeCount; }
  [[nodiscard]] StateBox state_box() const override;

  [[nodiscard]] HybridState flow(const HybridState& s, double u) const override;
  [[nodiscard]] double boundary_time(const HybridState& s) const override;
  [[nodiscard]] HybridState boundary_state(const HybridState& s, double tstar) const override;
  [[nodiscard]] double intensity(const HybridState& s) const override;
  [[nodiscard]] double intensity_bound(ModeId mode) const override;
  [[nodiscard]] double segment_intensity_bound(const HybridState& s,
                                               double span) const override;
  [[nodiscard]] HybridState kernel(const HybridState& at, JumpKind kind,
                                   RandomStream& rng) const override;
  [[nodiscard]] TerminalCause absorption(const HybridState& s) const override;

 private:
  TankParams params_;
  ThetaSolver solver_;
};

}  // namespace pdmp::tank
