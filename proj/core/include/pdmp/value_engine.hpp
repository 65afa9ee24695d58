#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "pdmp/model.hpp"
#include "pdmp/quantizer.hpp"

namespace pdmp {

/// Reward g evaluated at a hybrid state.
using RewardFn = std::function<double(const HybridState&)>;

/// Regular grid {0, step, ..., t* - step} on [0, t* - step]; a single node
/// at 0 when t* is zero (absorbed points).
struct TimeGrid {
  double tstar = 0.0;
  double step = 0.0;
  int nodes = 1;

  [[nodiscard]] double node(int i) const noexcept { return step * i; }
  [[nodiscard]] double last() const noexcept { return node(nodes - 1); }
};

[[nodiscard]] TimeGrid build_time_grid(double tstar, int n_nodes);

enum class Branch : std::uint8_t { Stop = 0, Continue = 1 };

struct ValueEntry {
  double value = 0.0;
  double u_star = 0.0;  // maximizing time offset of the stop branch
  Branch branch = Branch::Stop;
  double stop_value = 0.0;    // best stop-branch term over the time grid
  double continuation = 0.0;  // E[w(next)]
};

struct ValueOptions {
  int time_nodes = 50;
  int threads = 1;
};

/// One application of the discretized operator at point `i` of grid n-1,
/// with `w` the values on grid n. Ties go to the smallest u, and
/// continuation wins an exact tie with the stop branch.
[[nodiscard]] ValueEntry apply_L_hat(const PdmpModel& model, const GridSet& grids, int n,
                                     std::uint32_t i, std::span<const double> w,
                                     const RewardFn& g, int time_nodes);

struct ValueTable {
  /// by_index[n][i]: value of point i of grid n and the maximizer of the
  /// operator applied there (grid N holds v = g with a stop decision).
  std::vector<std::vector<ValueEntry>> by_index;
  std::uint64_t grid_hash = 0;
  std::uint64_t reward_hash = 0;
  int time_nodes = 50;

  [[nodiscard]] double initial_value() const { return by_index.at(0).at(0).value; }
};

/// v_N = g and v_{n-1} = L_n(v_n, g) down to n = 1.
[[nodiscard]] ValueTable backward_solve(const PdmpModel& model, const GridSet& grids,
                                        const RewardFn& g, const ValueOptions& options = {});

/// Physical state of a grid point.
[[nodiscard]] HybridState point_state(const PdmpModel& model, const GridPoint& p);

}  // namespace pdmp
