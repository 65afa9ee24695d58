#include "pdmp/value_engine.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

#include "pdmp/parallel.hpp"

namespace pdmp {

TimeGrid build_time_grid(double tstar, int n_nodes) {
  if (n_nodes < 1) throw std::invalid_argument("time grid needs at least one node");
  if (!(tstar >= 0.0) || !std::isfinite(tstar)) {
    throw std::invalid_argument("time grid needs a finite nonnegative exit time");
  }
  if (tstar == 0.0) return TimeGrid{0.0, 0.0, 1};
  return TimeGrid{tstar, tstar / n_nodes, n_nodes};
}

HybridState point_state(const PdmpModel& model, const GridPoint& p) {
  return Normalizer(model.state_box()).state(p.mode, p.coords);
}

ValueEntry apply_L_hat(const PdmpModel& model, const GridSet& grids, int n, std::uint32_t i,
                       std::span<const double> w, const RewardFn& g, int time_nodes) {
  if (n < 1 || n > grids.last_index()) throw std::out_of_range("apply_L_hat: bad jump index");
  const QuantizationGrid& from = grids.grids[static_cast<std::size_t>(n - 1)];
  const QuantizationGrid& to = grids.grids[static_cast<std::size_t>(n)];
  if (from.transition.rows() != from.points.size()) {
    throw std::runtime_error("apply_L_hat: grid " + std::to_string(n - 1) +
                             " has no transition rows");
  }
  if (w.size() != to.points.size()) throw std::invalid_argument("apply_L_hat: w has wrong size");

  const GridPoint& p = from.points.at(i);
  const HybridState z = point_state(model, p);
  const double tstar = p.status == PointStatus::Live ? model.boundary_time(z) : 0.0;
  const TimeGrid grid = build_time_grid(tstar, time_nodes);

  // Next-step mass sorted by quantized sojourn time.
  const auto cols = from.transition.row_cols(i);
  const auto probs = from.transition.row_probs(i);
  if (cols.empty()) {
    throw std::runtime_error("apply_L_hat: missing transition row for point " +
                             std::to_string(i) + " of grid " + std::to_string(n - 1));
  }
  struct Mass {
    double s, p, w;
  };
  std::vector<Mass> mass;
  mass.reserve(cols.size());
  const StateBox box = model.state_box();
  double continuation = 0.0;
  for (std::size_t k = 0; k < cols.size(); ++k) {
    const double s = to.points[cols[k]].coords[3] * box.horizon;
    mass.push_back({s, probs[k], w[cols[k]]});
    continuation += probs[k] * w[cols[k]];
  }
  std::stable_sort(mass.begin(), mass.end(),
                   [](const Mass& a, const Mass& b) { return a.s < b.s; });

  ValueEntry best;
  best.stop_value = -std::numeric_limits<double>::infinity();
  std::size_t k = 0;
  double jumped_value = 0.0;  // sum of p*w over s < u
  double jumped_prob = 0.0;
  for (int node = 0; node < grid.nodes; ++node) {
    const double u = grid.node(node);
    while (k < mass.size() && mass[k].s < u) {
      jumped_value += mass[k].p * mass[k].w;
      jumped_prob += mass[k].p;
      ++k;
    }
    const double survive = std::max(0.0, 1.0 - jumped_prob);
    const double reward = u == 0.0 ? g(z) : g(model.flow(z, u));
    const double term = jumped_value + reward * survive;
    if (term > best.stop_value) {
      best.stop_value = term;
      best.u_star = u;
    }
  }
  best.continuation = continuation;
  if (continuation >= best.stop_value) {
    best.value = continuation;
    best.branch = Branch::Continue;
  } else {
    best.value = best.stop_value;
    best.branch = Branch::Stop;
  }
  return best;
}

ValueTable backward_solve(const PdmpModel& model, const GridSet& grids, const RewardFn& g,
                          const ValueOptions& options) {
  if (grids.grids.empty()) throw std::invalid_argument("backward_solve: no grids");
  ValueTable table;
  table.time_nodes = options.time_nodes;
  table.grid_hash = content_hash(grids);
  const int last = grids.last_index();
  table.by_index.resize(grids.grids.size());

  auto& terminal = table.by_index[static_cast<std::size_t>(last)];
  for (const GridPoint& p : grids.grids.back().points) {
    const double v = g(point_state(model, p));
    terminal.push_back(ValueEntry{v, 0.0, Branch::Stop, v, 0.0});
  }

  std::vector<double> w;
  for (int n = last; n >= 1; --n) {
    const auto& next = table.by_index[static_cast<std::size_t>(n)];
    w.resize(next.size());
    for (std::size_t j = 0; j < next.size(); ++j) w[j] = next[j].value;

    const QuantizationGrid& from = grids.grids[static_cast<std::size_t>(n - 1)];
    auto& out = table.by_index[static_cast<std::size_t>(n - 1)];
    out.assign(from.points.size(), ValueEntry{});
    parallel_chunks(ChunkPlan{from.points.size(), 16}, options.threads,
                    [&](std::size_t, std::size_t b, std::size_t e) {
      for (std::size_t i = b; i < e; ++i) {
        out[i] = apply_L_hat(model, grids, n, static_cast<std::uint32_t>(i), w, g,
                             options.time_nodes);
      }
    });
  }
  return table;
}

}  // namespace pdmp
