#include <benchmark/benchmark.h>

#include <algorithm>

#include "pdmp/quantizer.hpp"
#include "pdmp/simulator.hpp"
#include "pdmp/tank/model.hpp"
#include "pdmp/tank/reward.hpp"
#include "pdmp/value_engine.hpp"

using namespace pdmp;

namespace {

struct Shared {
  tank::TankModel model;
  tank::TankReward reward{model.params()};
  GridSet grids;
  ValueTable values;

  Shared() {
    GridProvenance prov;
    prov.dynamics_hash = model.params().dynamics_hash();
    prov.seed = 2012;
    prov.max_jumps = 8;
    prov.options.points = 200;
    prov.options.train_runs = 20000;
    prov.options.frozen_runs = 20000;
    grids = build_grids(model, prov);
    values = backward_solve(model, grids, [this](const HybridState& z) { return reward(z); });
  }
};

const Shared& shared() {
  static const Shared s;
  return s;
}

void BM_TankFlow(benchmark::State& state) {
  const tank::TankModel model;
  const HybridState z0 = model.initial_state();
  double u = 0.0;
  for (auto _ : state) {
    u = u < 50.0 ? u + 0.37 : 0.0;
    benchmark::DoNotOptimize(model.flow(z0, u));
  }
}
BENCHMARK(BM_TankFlow);

void BM_SampleNextJump(benchmark::State& state) {
  const tank::TankModel model;
  const HybridState z0 = model.initial_state();
  RandomStream rng(1, 0);
  for (auto _ : state) benchmark::DoNotOptimize(sample_next_jump(model, z0, rng));
}
BENCHMARK(BM_SampleNextJump);

void BM_SimulateTrajectory(benchmark::State& state) {
  const tank::TankModel model;
  std::uint64_t i = 0;
  for (auto _ : state) {
    RandomStream rng = RandomStream::for_item(3, StreamPurpose::Test, i++);
    benchmark::DoNotOptimize(simulate_trajectory(model, model.initial_state(), rng));
  }
}
BENCHMARK(BM_SimulateTrajectory);

void BM_Projection(benchmark::State& state) {
  const Shared& s = shared();
  // Largest stratum of grid 1 so the scan does real work.
  const QuantizationGrid& g = s.grids.grids[1];
  std::uint32_t key = g.points[0].key();
  for (const auto& p : g.points)
    if (g.stratum(p.key()).size() > g.stratum(key).size()) key = p.key();
  const auto members = g.stratum(key);
  std::size_t k = 0;
  for (auto _ : state) {
    Coords c = g.points[members[k % members.size()]].coords;
    c[0] += 1e-3;
    ++k;
    benchmark::DoNotOptimize(g.nearest(key, c));
  }
  state.counters["stratum"] = static_cast<double>(members.size());
}
BENCHMARK(BM_Projection);

void BM_ApplyLHat(benchmark::State& state) {
  const Shared& s = shared();
  const int n = 2;
  std::vector<double> w;
  for (const auto& e : s.values.by_index[n]) w.push_back(e.value);
  const RewardFn g = [&s](const HybridState& z) { return s.reward(z); };
  const auto points = static_cast<std::uint32_t>(s.grids.grids[n - 1].points.size());
  std::uint32_t i = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(apply_L_hat(s.model, s.grids, n, i, w, g,
                                         static_cast<int>(state.range(0))));
    i = (i + 1) % points;
  }
}
BENCHMARK(BM_ApplyLHat)->Arg(50)->Arg(100);

}  // namespace

BENCHMARK_MAIN();
