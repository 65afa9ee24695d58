#include <doctest.h>

#include <sstream>

#include "pdmp/evaluator.hpp"
#include "pdmp/policy.hpp"
#include "pdmp/tank/model.hpp"
#include "pdmp/tank/reward.hpp"

using namespace pdmp;
using namespace pdmp::tank;

namespace {

GridProvenance provenance(const TankParams& p, int points, std::size_t runs) {
  GridProvenance prov;
  prov.dynamics_hash = p.dynamics_hash();
  prov.seed = 2012;
  prov.max_jumps = 26;
  prov.options.points = points;
  prov.options.train_runs = runs;
  prov.options.frozen_runs = runs;
  return prov;
}

RewardFn reward_fn(const TankReward& g) {
  return [g](const HybridState& z) { return g(z); };
}

struct Fixture {
  TankModel model;
  TankReward reward{model.params()};
  GridSet grids = build_grids(model, provenance(model.params(), 60, 40000));
  ValueTable values = backward_solve(model, grids, reward_fn(reward));
  StoppingPolicy policy{model, grids, values, reward_fn(reward)};
};

const Fixture& fixture() {
  static const Fixture f;
  return f;
}

TankMode make_mode(UnitState a, UnitState b, UnitState c, Controller ctl) {
  TankMode m;
  m.units = {a, b, c};
  m.controller = ctl;
  return m;
}

}  // namespace

TEST_CASE("policy refuses a value table from other grids") {
  const Fixture& f = fixture();
  ValueTable other = f.values;
  other.grid_hash ^= 1;
  CHECK_THROWS_AS(StoppingPolicy(f.model, f.grids, other, reward_fn(f.reward)), ArtifactMismatch);
  ValueTable short_table = f.values;
  short_table.by_index.pop_back();
  short_table.grid_hash = f.values.grid_hash;
  CHECK_THROWS_AS(StoppingPolicy(f.model, f.grids, short_table, reward_fn(f.reward)),
                  ArtifactMismatch);
}

TEST_CASE("decisions: stored maximizer, forced stop and fallback") {
  const Fixture& f = fixture();
  const HybridState z0 = f.model.initial_state();

  const PolicyDecision d0 = f.policy.decide(0, z0, 0.0);
  REQUIRE(d0.point.has_value());
  const ValueEntry& e = f.values.by_index[0][*d0.point];
  if (e.branch == Branch::Continue) {
    CHECK(d0.kind == PolicyDecision::Kind::WaitForJump);
  } else {
    CHECK(d0.offset == e.u_star);
  }

  const PolicyDecision last = f.policy.decide(f.policy.last_index(), z0, 0.0);
  CHECK(last.kind == PolicyDecision::Kind::StopNow);
  CHECK(last.forced);

  // All three units stuck cannot occur after one jump.
  const HybridState odd{make_mode(UnitState::StuckOn, UnitState::StuckOn, UnitState::StuckOn,
                                  Controller::Failed).encode(),
                        {7.0, 31.0}, 5.0};
  const PolicyDecision fb = f.policy.decide(1, odd, 5.0);
  CHECK(fb.kind == PolicyDecision::Kind::StopNow);
  CHECK(fb.fallback);

  CHECK_THROWS((void)f.policy.decide(f.policy.last_index() + 1, z0, 0.0));
}

TEST_CASE("runs are genuine stopping times and replay deterministically") {
  const Fixture& f = fixture();
  SimulationOptions sim;
  sim.max_jumps = f.policy.last_index();
  for (std::uint64_t i = 0; i < 3000; ++i) {
    RandomStream rng = campaign_stream(5, StreamPurpose::Policy, i);
    RandomStream again = rng;
    const PolicyOutcome out = f.policy.run(rng, sim);
    const Trajectory traj = simulate_trajectory(f.model, f.model.initial_state(), again, sim);
    const PolicyOutcome replayed = f.policy.replay(traj);
    REQUIRE(replayed.tau == out.tau);
    REQUIRE(replayed.reason == out.reason);
    CHECK(out.tau <= f.model.params().horizon);
    CHECK(out.reward == f.reward(out.stopped));
    // Never later than the last observed jump's successor.
    const int n = out.jump_index;
    if (n < traj.jump_count()) CHECK(out.tau <= traj.jumps[n + 1].z.t);
    CHECK(out.tau >= traj.jumps[n].z.t);
  }
}

TEST_CASE("without failures the rule runs to the horizon") {
  TankParams p;
  p.l = {0.0, 0.0, 0.0};
  const TankModel model(p);
  const TankReward reward(p);
  GridProvenance prov = provenance(p, 5, 100);
  prov.max_jumps = 2;
  const GridSet grids = build_grids(model, prov);
  const ValueTable values = backward_solve(model, grids, reward_fn(reward));
  const StoppingPolicy policy(model, grids, values, reward_fn(reward));
  RandomStream rng(1, 0);
  const PolicyOutcome out = policy.run(rng);
  CHECK(out.tau == doctest::Approx(p.horizon));
  CHECK(out.reason == StopReason::Horizon);
  CHECK(out.reward == doctest::Approx(std::pow(1000.0, 1.01)));
}

TEST_CASE("overflow-bound trajectory with a dead controller is maintained in time") {
  const Fixture& f = fixture();
  const TankModel& m = f.model;
  // Unit 1 sticks OFF, the level falls to 6 m, the fill command succeeds,
  // then at 8 m the drain command fails and the level heads for overflow.
  Trajectory traj;
  HybridState z = m.initial_state();
  traj.jumps.push_back({z, 0.0, 0, JumpKind::Start});
  z.t = 120.0;
  z.x = m.flow(m.initial_state(), 120.0).x;
  z.mode = make_mode(UnitState::StuckOff, UnitState::Off, UnitState::On, Controller::Working).encode();
  traj.jumps.push_back({z, 120.0, 1, JumpKind::Random});
  const double down = m.boundary_time(z);
  z = m.boundary_state(z, down);
  z.mode = make_mode(UnitState::StuckOff, UnitState::On, UnitState::Off, Controller::Working).encode();
  traj.jumps.push_back({z, down, 2, JumpKind::Boundary});
  const double up = m.boundary_time(z);
  z = m.boundary_state(z, up);
  z.mode = make_mode(UnitState::StuckOff, UnitState::On, UnitState::Off, Controller::Failed).encode();
  traj.jumps.push_back({z, up, 3, JumpKind::Boundary});
  const double over = m.boundary_time(z);
  traj.terminal = m.boundary_state(z, over);
  traj.terminal_s = over;
  traj.cause = TerminalCause::TopEvent;
  REQUIRE(m.absorption(traj.terminal) == TerminalCause::TopEvent);

  const PolicyOutcome out = f.policy.replay(traj);
  CHECK(out.reason != StopReason::TopEvent);
  CHECK(out.reward > 0.0);
  CHECK(out.tau < traj.terminal.t);
}

TEST_CASE("stream protocol") {
  const Fixture& f = fixture();
  const HybridState z0 = f.model.initial_state();

  SUBCASE("absorbing record ends the run") {
    if (f.policy.decide(0, z0, 0.0).kind == PolicyDecision::Kind::StopNow) return;
    std::istringstream in("t,mode,h,theta\n0,9,7,30.9261\n# comment\n3.5,9,10,31\n");
    std::ostringstream out;
    const std::size_t n = run_policy_stream(f.policy, in, out);
    const std::string text = out.str();
    CHECK(text.rfind("n,t,action,maintain_at\n", 0) == 0);
    CHECK(n == 2);
    CHECK(text.find("terminal") != std::string::npos);
  }
  SUBCASE("malformed input is rejected") {
    std::ostringstream out;
    std::istringstream bad("0,9,7\n");
    CHECK_THROWS_AS(run_policy_stream(f.policy, bad, out), std::invalid_argument);
    std::istringstream back("0,9,7,30.9\n-1,9,7,30.9\n");
    CHECK_THROWS_AS(run_policy_stream(f.policy, back, out), std::invalid_argument);
  }
  SUBCASE("stream decisions match decide()") {
    const PolicyDecision d = f.policy.decide(0, z0, 0.0);
    std::istringstream in("0,9,7,30.9261\n");
    std::ostringstream out;
    run_policy_stream(f.policy, in, out);
    const std::string text = out.str();
    switch (d.kind) {
      case PolicyDecision::Kind::WaitForJump: CHECK(text.find(",wait,") != std::string::npos); break;
      case PolicyDecision::Kind::StopNow: CHECK(text.find("maintain_now") != std::string::npos); break;
      case PolicyDecision::Kind::StopAt: CHECK(text.find("maintain_at") != std::string::npos); break;
    }
  }
}
