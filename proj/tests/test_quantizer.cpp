#include <doctest.h>

#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>

#include "pdmp/quantizer.hpp"
#include "pdmp/tank/model.hpp"

using namespace pdmp;

namespace {

Calibration::Stratum stratum(std::uint64_t count, int distinct) {
  Calibration::Stratum s;
  s.count = count;
  for (int i = 0; i < distinct; ++i) {
    s.reservoir.push_back({static_cast<std::uint64_t>(i), Coords{0.01 * i, 0.0, 0.0, 0.0}});
  }
  return s;
}

GridProvenance small_provenance(int points, int threads) {
  GridProvenance prov;
  prov.dynamics_hash = tank::TankParams{}.dynamics_hash();
  prov.seed = 31;
  prov.max_jumps = 6;
  prov.options.points = points;
  prov.options.train_runs = 4000;
  prov.options.frozen_runs = 4000;
  prov.options.threads = threads;
  return prov;
}

double lattice_distortion(const QuantizationGrid& grid, const std::vector<Coords>& samples) {
  double sum = 0.0;
  for (const Coords& c : samples) {
    const std::uint32_t i = grid.project(stratum_key(0, PointStatus::Live), c);
    sum += squared_distance(grid.points[i].coords, c);
  }
  return sum / static_cast<double>(samples.size());
}

std::vector<Coords> normal_samples(std::uint64_t seed, int n) {
  RandomStream rng(seed, 0);
  std::vector<Coords> out(n);
  for (Coords& c : out) {
    const double r = std::sqrt(-2.0 * std::log1p(-rng.uniform()));
    const double phi = 2.0 * std::numbers::pi * rng.uniform();
    c = {r * std::cos(phi), r * std::sin(phi), 0.0, 0.0};
  }
  return out;
}

}  // namespace

TEST_CASE("normalization round-trips through the state box") {
  const StateBox box{{4.0, 15.0}, {10.0, 100.0}, 1000.0};
  const Normalizer norm(box);
  const HybridState z{42, {7.5, 61.0}, 250.0};
  const Coords c = norm.normalize(z, 12.5);
  CHECK(c[0] == doctest::Approx(3.5 / 6.0));
  CHECK(c[1] == doctest::Approx(46.0 / 85.0));
  CHECK(c[2] == doctest::Approx(0.25));
  CHECK(c[3] == doctest::Approx(0.0125));
  const HybridState back = norm.state(42, c);
  CHECK(back.mode == 42);
  CHECK(back.x[0] == doctest::Approx(7.5));
  CHECK(back.x[1] == doctest::Approx(61.0));
  CHECK(back.t == doctest::Approx(250.0));
  CHECK(norm.sojourn(c) == doctest::Approx(12.5));
}

TEST_CASE("status and stratum keys") {
  CHECK(status_of(TerminalCause::TopEvent) == PointStatus::TopEvent);
  CHECK(status_of(TerminalCause::Horizon) == PointStatus::Horizon);
  CHECK(status_of(TerminalCause::JumpBudget) == PointStatus::Live);
  CHECK(stratum_key(5, PointStatus::Live) != stratum_key(5, PointStatus::TopEvent));
  CHECK(stratum_key(5, PointStatus::Horizon) != stratum_key(6, PointStatus::Live));
}

TEST_CASE("absorbed chains repeat their last state with zero sojourn") {
  Trajectory traj;
  traj.jumps.push_back({{5, {7.0, 30.0}, 0.0}, 0.0, 0, JumpKind::Start});
  traj.jumps.push_back({{7, {7.0, 31.0}, 3.0}, 3.0, 1, JumpKind::Random});
  traj.terminal = {7, {10.0, 40.0}, 5.0};
  traj.terminal_s = 2.0;
  traj.cause = TerminalCause::TopEvent;

  std::vector<ChainSample> out(5);
  chain_samples(traj, out);
  CHECK(out[1].status == PointStatus::Live);
  CHECK(out[1].s == 3.0);
  CHECK(out[2].status == PointStatus::TopEvent);
  CHECK(out[2].s == 2.0);
  CHECK(out[2].z == traj.terminal);
  CHECK(out[4].s == 0.0);
  CHECK(out[4].z == traj.terminal);

  traj.cause = TerminalCause::JumpBudget;
  CHECK_THROWS((chain_samples(traj, out)));
}

TEST_CASE("projection equals an exhaustive nearest-neighbour scan") {
  RandomStream rng(12, 0);
  QuantizationGrid grid;
  for (int i = 0; i < 600; ++i) {
    GridPoint p;
    p.mode = static_cast<ModeId>(rng.next_u32() % 5);
    p.status = static_cast<PointStatus>(rng.next_u32() % 3);
    for (double& x : p.coords) x = rng.uniform();
    grid.points.push_back(p);
  }
  grid.reindex();
  for (int q = 0; q < 2000; ++q) {
    const ModeId mode = rng.next_u32() % 6;
    const auto status = static_cast<PointStatus>(rng.next_u32() % 3);
    Coords c;
    for (double& x : c) x = rng.uniform();
    const std::uint32_t key = stratum_key(mode, status);

    std::optional<std::uint32_t> best;
    double best_d = std::numeric_limits<double>::infinity();
    for (std::uint32_t i = 0; i < grid.points.size(); ++i) {
      if (grid.points[i].key() != key) continue;
      const double d = squared_distance(grid.points[i].coords, c);
      if (d < best_d) {
        best_d = d;
        best = i;
      }
    }
    REQUIRE(grid.nearest(key, c) == best);
    if (!best) CHECK_THROWS_AS((void)grid.project(key, c), ProjectionError);
  }
}

TEST_CASE("projection breaks ties toward the lowest index") {
  QuantizationGrid grid;
  grid.points = {GridPoint{1, PointStatus::Live, {0.0, 0.0, 0.0, 0.0}, 0.0},
                 GridPoint{1, PointStatus::Live, {1.0, 0.0, 0.0, 0.0}, 0.0},
                 GridPoint{1, PointStatus::Live, {1.0, 0.0, 0.0, 0.0}, 0.0}};
  grid.reindex();
  CHECK(grid.nearest(stratum_key(1, PointStatus::Live), {0.5, 0.0, 0.0, 0.0}) == 0u);
  CHECK(grid.nearest(stratum_key(1, PointStatus::Live), {0.9, 0.0, 0.0, 0.0}) == 1u);
}

TEST_CASE("learning rate reaches its final value after the planned steps") {
  const LearningRate r = LearningRate::reaching(0.5, 1e-3, 12345.0);
  CHECK(r.at(0) == 0.5);
  CHECK(r.at(12345) == doctest::Approx(1e-3).epsilon(1e-12));
  CHECK(r.at(100) > r.at(101));
}

TEST_CASE("point allocation: rare strata, largest remainder and reservoir caps") {
  std::unordered_map<std::uint32_t, Calibration::Stratum> strata{
      {0, stratum(1, 0)}, {4, stratum(60, 10)}, {8, stratum(39, 10)}};
  auto alloc = allocate_points(strata, 100, 10);
  // 9 points split 60:39 -> quotas 5.45 and 3.55, the larger remainder wins.
  CHECK(alloc.at(0) == 1);
  CHECK(alloc.at(4) == 5);
  CHECK(alloc.at(8) == 4);

  strata.at(8) = stratum(39, 2);
  alloc = allocate_points(strata, 100, 10);
  CHECK(alloc.at(8) == 2);
}

TEST_CASE("competitive learning beats the best uniform lattice on a 2-D normal") {
  const auto train = normal_samples(1, 400000);
  const auto test = normal_samples(2, 100000);

  // Best 4x4 square lattice for N(0, I): spacing 0.9957 per axis.
  QuantizationGrid lattice;
  for (int i = 0; i < 4; ++i) {
    for (int j = 0; j < 4; ++j) {
      lattice.points.push_back(
          GridPoint{0, PointStatus::Live, {0.9957 * (i - 1.5), 0.9957 * (j - 1.5), 0.0, 0.0}, 0.0});
    }
  }
  lattice.reindex();

  QuantizationGrid grid;
  for (int i = 0; i < 16; ++i) grid.points.push_back(GridPoint{0, PointStatus::Live, train[i], 0.0});
  grid.reindex();
  const LearningRate rate = LearningRate::reaching(0.5, 1e-4, static_cast<double>(train.size()));
  const std::uint32_t key = stratum_key(0, PointStatus::Live);
  for (std::size_t i = 16; i < train.size(); ++i) {
    grid.attract(grid.project(key, train[i]), train[i], rate.at(i - 16));
  }

  const double lattice_d = lattice_distortion(lattice, test);
  const double clvq_d = lattice_distortion(grid, test);
  CHECK(lattice_d == doctest::Approx(2 * 0.1188).epsilon(0.02));
  CHECK(clvq_d <= lattice_d);
}

TEST_CASE("small tank grids: weights, transitions and coverage") {
  const tank::TankModel model;
  const GridProvenance prov = small_provenance(30, 1);
  const GridSet set = build_grids(model, prov);
  REQUIRE(set.last_index() == prov.max_jumps);
  CHECK(set.grids[0].points.size() == 1);  // deterministic start

  for (const QuantizationGrid& g : set.grids) {
    const double w = std::accumulate(g.points.begin(), g.points.end(), 0.0,
                                     [](double s, const GridPoint& p) { return s + p.weight; });
    CHECK(w == doctest::Approx(1.0).epsilon(1e-12));
    const auto hits = std::accumulate(g.visits.begin(), g.visits.end(), std::uint64_t{0});
    CHECK(hits == prov.options.frozen_runs);
    CHECK(g.distortion <= g.distortion_initial + 1e-12);
    for (const GridPoint& p : g.points) {
      for (double x : p.coords) CHECK((x >= -1e-12 && x <= 1.0 + 1e-12));
    }
  }
  for (int n = 0; n < set.last_index(); ++n) {
    const QuantizationGrid& g = set.grids[n];
    REQUIRE(g.transition.rows() == g.points.size());
    for (std::size_t r = 0; r < g.points.size(); ++r) {
      const auto probs = g.transition.row_probs(r);
      REQUIRE(!probs.empty());
      CHECK(std::accumulate(probs.begin(), probs.end(), 0.0) == doctest::Approx(1.0));
      // Absorbed points only move to absorbed points of the same stratum.
      if (g.points[r].status != PointStatus::Live) {
        for (std::uint32_t c : g.transition.row_cols(r)) {
          CHECK(set.grids[n + 1].points[c].key() == g.points[r].key());
        }
      }
    }
  }
  CHECK(set.grids.back().transition.rows() == 0);
}

TEST_CASE("grid construction does not depend on the thread count") {
  const tank::TankModel model;
  const GridSet one = build_grids(model, small_provenance(25, 1));
  const GridSet three = build_grids(model, small_provenance(25, 3));
  CHECK(content_hash(one) == content_hash(three));
  for (std::size_t n = 0; n < one.grids.size(); ++n) {
    REQUIRE(one.grids[n].points.size() == three.grids[n].points.size());
    for (std::size_t i = 0; i < one.grids[n].points.size(); ++i) {
      CHECK(one.grids[n].points[i].coords == three.grids[n].points[i].coords);
    }
  }
}
