#pragma once

#include <array>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include "pdmp/random.hpp"

namespace pdmp {

using ModeId = std::uint32_t;

/// Physical coordinates of the Euclidean state; the running time is kept
/// separately in HybridState::t.
inline constexpr std::size_t kStateDim = 2;
using StateVector = std::array<double, kStateDim>;

inline constexpr double kInfinity = std::numeric_limits<double>::infinity();

/// Full PDMP state: discrete mode, physical coordinates and running time.
struct HybridState {
  ModeId mode = 0;
  StateVector x{};
  double t = 0.0;

  friend bool operator==(const HybridState&, const HybridState&) = default;
};

enum class JumpKind : std::uint8_t { Start, Random, Boundary };

enum class TerminalCause : std::uint8_t {
  None,        // still running
  TopEvent,    // absorbing failure of the system
  Horizon,     // running time reached the end of the mission
  JumpBudget,  // maximum number of jumps simulated
};

/// One step (Z_n, S_n) of the embedded chain.
struct JumpSample {
  HybridState z;
  double s = 0.0;  // inter-jump time, hours
  int jump_index = 0;
  JumpKind kind = JumpKind::Start;

  friend bool operator==(const JumpSample&, const JumpSample&) = default;
};

struct Trajectory {
  std::vector<JumpSample> jumps;  // jumps[0] is the start, s = 0
  HybridState terminal;           // absorbing state, or last post-jump state
  double terminal_s = 0.0;        // time from the last jump to `terminal`
  TerminalCause cause = TerminalCause::None;

  [[nodiscard]] int jump_count() const noexcept {
    return static_cast<int>(jumps.size()) - 1;
  }

  friend bool operator==(const Trajectory&, const Trajectory&) = default;
};

/// Box used to normalize physical coordinates to [0, 1].
struct StateBox {
  StateVector lower{};
  StateVector upper{};
  double horizon = 0.0;  // running time and inter-jump times span [0, horizon]
};

// Errors -------------------------------------------------------------------

/// Flow or intensity produced a non-finite value.
class ModelEvaluationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// The model broke its own contract (e.g. intensity above its bound).
class ModelContractViolation : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

/// Flow requested past the exit time of the domain.
class DomainExitError : public std::out_of_range {
 public:
  using std::out_of_range::out_of_range;
};

/// Local characteristics (flow, intensity, kernel, exit time) of a PDMP.
///
/// Implementations must be pure: all randomness comes through the stream
/// passed to kernel(), so one model instance may be shared between threads.
class PdmpModel {
 public:
  virtual ~PdmpModel() = default;

  [[nodiscard]] virtual HybridState initial_state() const = 0;
  [[nodiscard]] virtual std::size_t mode_count() const = 0;
  [[nodiscard]] virtual StateBox state_box() const = 0;

  /// Deterministic motion Phi(m, x, u); the running time advances by u and
  /// the mode is unchanged.
  [[nodiscard]] virtual HybridState flow(const HybridState& s, double u) const = 0;

  /// t*(m, x): time until the flow reaches the boundary of the mode's domain.
  [[nodiscard]] virtual double boundary_time(const HybridState& s) const = 0;

  /// State reached at the boundary. The default evaluates the flow at t*;
  /// models may snap the crossing coordinate onto the exact threshold.
  [[nodiscard]] virtual HybridState boundary_state(const HybridState& s,
                                                   double tstar) const {
    return flow(s, tstar);
  }

  /// Jump intensity lambda(m, x) in 1/h.
  [[nodiscard]] virtual double intensity(const HybridState& s) const = 0;

  /// Constant dominating the intensity along any flow in mode m.
  [[nodiscard]] virtual double intensity_bound(ModeId mode) const = 0;

  /// Constant dominating the intensity on the segment Phi(s, [0, span]).
  /// Defaults to the per-mode bound.
  [[nodiscard]] virtual double segment_intensity_bound(const HybridState& s,
                                                       double /*span*/) const {
    return intensity_bound(s.mode);
  }

  /// Post-jump state drawn from Q at the pre-jump location `at`.
  [[nodiscard]] virtual HybridState kernel(const HybridState& at, JumpKind kind,
                                           RandomStream& rng) const = 0;

  /// Absorption status of a state (None for states inside the domain).
  [[nodiscard]] virtual TerminalCause absorption(const HybridState& s) const = 0;

  [[nodiscard]] bool is_absorbing(const HybridState& s) const {
    return absorption(s) != TerminalCause::None;
  }
};

}  // namespace pdmp
