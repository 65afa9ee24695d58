#include <doctest.h>

#include <cmath>

#include "pdmp/tank/model.hpp"
#include "pdmp/tank/reward.hpp"
#include "pdmp/value_engine.hpp"
#include "support/toy_models.hpp"

using namespace pdmp;

namespace {

// Line model on [0, 10]; grid 0 holds the start, grid 1 three successors:
// jumps after 2 h and 5 h and the horizon exit at 10 h.
GridSet toy_grids() {
  GridSet set;
  set.grids.resize(2);
  QuantizationGrid& g0 = set.grids[0];
  g0.points = {GridPoint{0, PointStatus::Live, {0.0, 0.0, 0.0, 0.0}, 1.0}};
  g0.transition.offsets = {0, 3};
  g0.transition.cols = {0, 1, 2};
  g0.transition.probs = {0.3, 0.5, 0.2};
  g0.reindex();

  QuantizationGrid& g1 = set.grids[1];
  g1.index = 1;
  g1.points = {GridPoint{0, PointStatus::Live, {0.2, 0.0, 0.2, 0.2}, 0.3},
               GridPoint{0, PointStatus::Live, {0.5, 0.0, 0.5, 0.5}, 0.5},
               GridPoint{0, PointStatus::Horizon, {1.0, 0.0, 1.0, 1.0}, 0.2}};
  g1.reindex();
  return set;
}

// g(t) = t (10 - t)
double hump(const HybridState& z) { return z.t * (10.0 - z.t); }

GridSet small_tank_grids() {
  GridProvenance prov;
  prov.dynamics_hash = tank::TankParams{}.dynamics_hash();
  prov.seed = 77;
  prov.max_jumps = 5;
  prov.options.points = 25;
  prov.options.train_runs = 3000;
  prov.options.frozen_runs = 3000;
  return build_grids(tank::TankModel{}, prov);
}

RewardFn reward_fn(const tank::TankReward& g) {
  return [g](const HybridState& z) { return g(z); };
}

}  // namespace

TEST_CASE("time grid") {
  const TimeGrid g = build_time_grid(10.0, 4);
  CHECK(g.nodes == 4);
  CHECK(g.step == 2.5);
  CHECK(g.node(0) == 0.0);
  CHECK(g.last() == 7.5);
  const TimeGrid absorbed = build_time_grid(0.0, 50);
  CHECK(absorbed.nodes == 1);
  CHECK(absorbed.last() == 0.0);
  CHECK_THROWS_AS((void)build_time_grid(10.0, 0), std::invalid_argument);
  CHECK_THROWS_AS((void)build_time_grid(-1.0, 5), std::invalid_argument);
}

TEST_CASE("one operator step on a hand-built chain") {
  const testing::LineModel model(0.1, 0.0, 10.0);
  const GridSet set = toy_grids();

  SUBCASE("stop branch") {
    // u = 5: 0.3*10 + g(5) * 0.7 = 20.5 beats every other node and the
    // continuation 0.3*10 + 0.5*20 = 13.
    const std::vector<double> w{10.0, 20.0, 0.0};
    const ValueEntry e = apply_L_hat(model, set, 1, 0, w, hump, 10);
    CHECK(e.branch == Branch::Stop);
    CHECK(e.u_star == 5.0);
    CHECK(e.value == doctest::Approx(20.5).epsilon(1e-14));
    CHECK(e.continuation == doctest::Approx(13.0).epsilon(1e-14));
  }
  SUBCASE("continuation branch") {
    // Best stop term is u = 6: 0.8*40 + g(6) * 0.2 = 36.8 < 40.
    const std::vector<double> w{40.0, 40.0, 40.0};
    const ValueEntry e = apply_L_hat(model, set, 1, 0, w, hump, 10);
    CHECK(e.branch == Branch::Continue);
    CHECK(e.value == doctest::Approx(40.0).epsilon(1e-14));
    CHECK(e.stop_value == doctest::Approx(36.8).epsilon(1e-14));
    CHECK(e.u_star == 6.0);
  }
  SUBCASE("ties go to the earliest date and then to continuation") {
    const std::vector<double> w{0.0, 0.0, 0.0};
    const ValueEntry e =
        apply_L_hat(model, set, 1, 0, w, [](const HybridState&) { return 0.0; }, 10);
    CHECK(e.u_star == 0.0);
    CHECK(e.branch == Branch::Continue);
  }
  SUBCASE("backward recursion uses v_N = g") {
    // v_1 = g(2, 5, 10) = (16, 25, 0); stop at u = 5 gives 4.8 + 25 * 0.7 = 22.3.
    const ValueTable t = backward_solve(model, set, hump, ValueOptions{10, 1});
    CHECK(t.by_index[1][0].value == 16.0);
    CHECK(t.by_index[1][2].branch == Branch::Stop);
    CHECK(t.initial_value() == doctest::Approx(22.3).epsilon(1e-14));
    CHECK(t.by_index[0][0].u_star == 5.0);
    CHECK(t.grid_hash == content_hash(set));
  }
}

TEST_CASE("jump-free tank: backward value equals a dense scan along the flow") {
  tank::TankParams p;
  p.l = {0.0, 0.0, 0.0};
  p.K = 150.0;  // stationary temperature above theta_hot: the run ends hot
  const tank::TankModel model(p);
  const tank::TankReward g(p);

  GridProvenance prov;
  prov.dynamics_hash = p.dynamics_hash();
  prov.max_jumps = 1;
  prov.options.points = 5;
  prov.options.train_runs = 50;
  prov.options.frozen_runs = 50;
  const GridSet set = build_grids(model, prov);
  REQUIRE(set.grids[0].points.size() == 1);
  const ValueTable t = backward_solve(model, set, reward_fn(g), ValueOptions{20000, 1});

  const HybridState z0 = model.initial_state();
  const double tstar = model.boundary_time(z0);
  REQUIRE(tstar < 10.0);
  double best = 0.0;
  constexpr int dense = 1'000'000;
  for (int i = 0; i <= dense; ++i) best = std::max(best, g(model.flow(z0, tstar * i / dense)));
  CHECK(best > 1.0);
  CHECK(std::abs(t.initial_value() - best) / best < 1e-3);
  CHECK(t.by_index[0][0].branch == Branch::Stop);
}

TEST_CASE("value table properties on small tank grids") {
  const tank::TankModel model;
  const GridSet set = small_tank_grids();
  const tank::TankReward g(model.params());
  const ValueTable t = backward_solve(model, set, reward_fn(g), ValueOptions{50, 1});

  SUBCASE("v dominates g and the continuation") {
    for (std::size_t n = 0; n < set.grids.size(); ++n) {
      for (std::size_t i = 0; i < set.grids[n].points.size(); ++i) {
        const ValueEntry& e = t.by_index[n][i];
        CHECK(e.value >= g(point_state(model, set.grids[n].points[i])));
        CHECK(e.value >= e.continuation);
      }
    }
  }
  SUBCASE("positive homogeneity") {
    const ValueTable t2 = backward_solve(model, set, reward_fn(g.scaled(2.0)), ValueOptions{50, 1});
    for (std::size_t n = 0; n < set.grids.size(); ++n) {
      for (std::size_t i = 0; i < set.grids[n].points.size(); ++i) {
        CHECK(t2.by_index[n][i].value == 2.0 * t.by_index[n][i].value);
        CHECK(t2.by_index[n][i].u_star == t.by_index[n][i].u_star);
        CHECK(t2.by_index[n][i].branch == t.by_index[n][i].branch);
      }
    }
  }
  SUBCASE("bit-identical across thread counts") {
    const ValueTable t3 = backward_solve(model, set, reward_fn(g), ValueOptions{50, 3});
    for (std::size_t n = 0; n < set.grids.size(); ++n) {
      for (std::size_t i = 0; i < set.grids[n].points.size(); ++i) {
        CHECK(t3.by_index[n][i].value == t.by_index[n][i].value);
        CHECK(t3.by_index[n][i].u_star == t.by_index[n][i].u_star);
      }
    }
  }
}
