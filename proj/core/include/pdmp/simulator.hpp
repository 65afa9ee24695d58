#pragma once

#include "pdmp/model.hpp"

namespace pdmp {

struct SimulationOptions {
  int max_jumps = 26;
  /// Thin against the segment bound instead of the per-mode bound. Both
  /// dominate the intensity, so the law of the jump time is the same.
  bool segment_bound = true;
  /// Multiplies the dominating rate (>= 1). Only useful in tests.
  double bound_inflation = 1.0;
};

/// Result of one step of the embedded chain.
struct NextJump {
  /// Post-jump state, inter-jump time and jump kind. When `absorbed` is set
  /// the boundary was absorbing: `sample.z` is the boundary state and no
  /// kernel draw was made.
  JumpSample sample;
  TerminalCause absorbed = TerminalCause::None;
  /// Location just before the jump (Phi(start, S)).
  HybridState pre_jump;
};

/// Draws the next jump from `start` by thinning against a dominating rate.
/// Throws ModelEvaluationError or ModelContractViolation when the model
/// misbehaves; never clamps.
NextJump sample_next_jump(const PdmpModel& model, const HybridState& start,
                          RandomStream& rng, const SimulationOptions& options = {},
                          int next_index = 1);

/// Chains sample_next_jump until absorption or `options.max_jumps` jumps.
Trajectory simulate_trajectory(const PdmpModel& model, const HybridState& start,
                               RandomStream& rng, const SimulationOptions& options = {});

/// Phi(state, u) with the domain check 0 <= u <= t*(state).
HybridState flow_between(const PdmpModel& model, const HybridState& state, double u);

/// Throws ModelEvaluationError when any coordinate is not finite.
void require_finite(const HybridState& s, const char* what);

}  // namespace pdmp
