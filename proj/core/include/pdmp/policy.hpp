#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <stdexcept>

#include "pdmp/model.hpp"
#include "pdmp/quantizer.hpp"
#include "pdmp/simulator.hpp"
#include "pdmp/value_engine.hpp"

namespace pdmp {

/// Grids and value table do not belong together.
class ArtifactMismatch : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct PolicyDecision {
  enum class Kind : std::uint8_t {
    StopAt,       // maintain `offset` hours after the current jump unless a jump comes first
    WaitForJump,  // run until the next jump, then decide again
    StopNow,      // maintain at the current jump
  };
  Kind kind = Kind::WaitForJump;
  double offset = 0.0;
  std::optional<std::uint32_t> point;  // grid point the state projected to
  bool forced = false;                 // last jump index reached
  bool fallback = false;               // state fell in a stratum with no grid point
};

enum class StopReason : std::uint8_t {
  Maintenance,  // the policy chose the date
  JumpBudget,   // forced at the last jump index
  Horizon,      // forced at the end of the mission
  TopEvent,     // the system failed first
  Fallback,     // unseen stratum, maintained immediately
};

struct PolicyOutcome {
  double tau = 0.0;
  HybridState stopped;
  double reward = 0.0;
  StopReason reason = StopReason::Maintenance;
  int jump_index = 0;  // last jump observed before stopping
};

/// Stopping rule read off the maximizers of the value recursion.
///
/// At jump n with state (Z_n, S_n) the state is projected onto grid n. If
/// the operator applied there chose the stop branch, maintenance is planned
/// u* hours after the jump; otherwise the rule waits for the next jump. The
/// decision only sees the history up to the current jump.
class StoppingPolicy {
 public:
  /// Throws ArtifactMismatch when `values` was not computed from `grids`.
  StoppingPolicy(const PdmpModel& model, const GridSet& grids, const ValueTable& values,
                 RewardFn reward);

  [[nodiscard]] PolicyDecision decide(int n, const HybridState& z, double s) const;

  /// Applies the rule along a recorded trajectory.
  [[nodiscard]] PolicyOutcome replay(const Trajectory& traj) const;

  /// Simulates one trajectory and applies the rule to it.
  [[nodiscard]] PolicyOutcome run(RandomStream& rng, const SimulationOptions& sim = {}) const;

  [[nodiscard]] int last_index() const noexcept { return grids_.last_index(); }
  [[nodiscard]] const PdmpModel& model() const noexcept { return model_; }
  [[nodiscard]] double reward(const HybridState& s) const { return reward_(s); }

 private:
  PolicyOutcome stop_at(const HybridState& s, int n, StopReason why) const;

  const PdmpModel& model_;
  const GridSet& grids_;
  const ValueTable& values_;
  RewardFn reward_;
  Normalizer norm_;
};

/// Line protocol for driving the policy from an external simulator.
///
/// Input: one CSV record per jump, `t,mode,h,theta` (the first record is
/// the start state; lines starting with '#' and a header line are skipped).
/// Output: one record per input, `n,t,action,maintain_at` where action is
/// `maintain_at` (absolute date in the last field), `wait`, `maintain_now`,
/// `forced` (last jump index) or `terminal` (absorbing state received).
/// Returns the number of records processed; malformed records throw
/// std::invalid_argument.
std::size_t run_policy_stream(const StoppingPolicy& policy, std::istream& in, std::ostream& out);

}  // namespace pdmp
