#include "pdmp/simulator.hpp"

#include <cmath>
#include <string>

namespace pdmp {
namespace {

// Relative slack allowed between the intensity and its bound before the
// model is declared broken (round-off in the flow).
constexpr double kBoundSlack = 1e-9;

}  // namespace

void require_finite(const HybridState& s, const char* what) {
  bool ok = std::isfinite(s.t);
  for (double v : s.x) ok = ok && std::isfinite(v);
  if (!ok) {
    throw ModelEvaluationError(std::string("non-finite state from ") + what);
  }
}

HybridState flow_between(const PdmpModel& model, const HybridState& state, double u) {
  if (!(u >= 0.0)) throw DomainExitError("flow_between: negative duration");
  const double tstar = model.boundary_time(state);
  if (u > tstar) {
    throw DomainExitError("flow_between: duration " + std::to_string(u) +
                          " exceeds exit time " + std::to_string(tstar));
  }
  if (u == 0.0) return state;
  HybridState out = model.flow(state, u);
  require_finite(out, "flow");
  return out;
}

NextJump sample_next_jump(const PdmpModel& model, const HybridState& start,
                          RandomStream& rng, const SimulationOptions& options,
                          int next_index) {
  const double tstar = model.boundary_time(start);
  if (!(tstar >= 0.0)) throw ModelEvaluationError("boundary_time is negative or NaN");

  double bound = options.segment_bound ? model.segment_intensity_bound(start, tstar)
                                       : model.intensity_bound(start.mode);
  bound *= options.bound_inflation;
  if (!(bound >= 0.0) || !std::isfinite(bound)) {
    throw ModelContractViolation("intensity bound is not a finite nonnegative rate");
  }
  if (bound == 0.0 && std::isinf(tstar)) {
    throw ModelContractViolation("process can never jump: zero intensity and no boundary");
  }

  NextJump out;
  out.sample.jump_index = next_index;

  double tau = 0.0;
  if (bound > 0.0) {
    for (;;) {
      tau += rng.exponential(bound);
      if (tau >= tstar) break;
      const HybridState candidate = model.flow(start, tau);
      require_finite(candidate, "flow");
      const double rate = model.intensity(candidate);
      if (!std::isfinite(rate) || rate < 0.0) {
        throw ModelEvaluationError("intensity is not a finite nonnegative rate");
      }
      if (rate > bound * (1.0 + kBoundSlack)) {
        throw ModelContractViolation("intensity " + std::to_string(rate) +
                                     " exceeds its bound " + std::to_string(bound));
      }
      if (rng.uniform() * bound < rate) {
        out.pre_jump = candidate;
        out.sample.s = tau;
        out.sample.kind = JumpKind::Random;
        out.sample.z = model.kernel(candidate, JumpKind::Random, rng);
        if (out.sample.z.t != candidate.t) {
          throw ModelContractViolation("kernel modified the running time");
        }
        return out;
      }
    }
  }

  const HybridState at = model.boundary_state(start, tstar);
  require_finite(at, "boundary_state");
  out.pre_jump = at;
  out.sample.s = tstar;
  out.sample.kind = JumpKind::Boundary;
  out.absorbed = model.absorption(at);
  if (out.absorbed != TerminalCause::None) {
    out.sample.z = at;
    return out;
  }
  out.sample.z = model.kernel(at, JumpKind::Boundary, rng);
  if (out.sample.z.t != at.t) {
    throw ModelContractViolation("kernel modified the running time");
  }
  return out;
}

Trajectory simulate_trajectory(const PdmpModel& model, const HybridState& start,
                               RandomStream& rng, const SimulationOptions& options) {
  if (options.max_jumps < 1) throw std::invalid_argument("max_jumps must be >= 1");

  Trajectory traj;
  traj.jumps.reserve(8);
  traj.jumps.push_back(JumpSample{start, 0.0, 0, JumpKind::Start});

  if (const TerminalCause c = model.absorption(start); c != TerminalCause::None) {
    traj.terminal = start;
    traj.cause = c;
    return traj;
  }

  HybridState state = start;
  for (int n = 1;; ++n) {
    NextJump next = sample_next_jump(model, state, rng, options, n);
    if (next.absorbed != TerminalCause::None) {
      traj.terminal = next.sample.z;
      traj.terminal_s = next.sample.s;
      traj.cause = next.absorbed;
      return traj;
    }
    state = next.sample.z;
    traj.jumps.push_back(next.sample);
    if (n == options.max_jumps) {
      traj.terminal = state;
      traj.terminal_s = 0.0;
      traj.cause = TerminalCause::JumpBudget;
      return traj;
    }
  }
}

}  // namespace pdmp
