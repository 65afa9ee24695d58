#pragma once

#include <cstddef>
#include <vector>

#include "pdmp/model.hpp"
#include "pdmp/tank/params.hpp"

namespace pdmp::tank {

struct ReachabilityReport {
  /// Sorted distinct modes occupied right after jump n, n = 0..max_depth.
  std::vector<std::vector<ModeId>> by_depth;
  /// Sorted union over all depths.
  std::vector<ModeId> all;
  /// Distinct unit configurations in `all`, ignoring controller health.
  std::size_t unit_configurations = 0;

  [[nodiscard]] std::vector<std::size_t> depth_counts() const;
};

/// Breadth-first search over the jump graph from the initial mode.
///
/// The level is abstracted to its position relative to the control
/// thresholds (below h_low, at h_low, between, at h_high, above h_high);
/// a random failure may strike at any position the flow sweeps before its
/// next boundary. Top events, the hot-temperature exit and the horizon are
/// absorbing and are not counted as jumps. Temperature never blocks a level
/// position here: a failure can always occur before theta_hot is reached.
[[nodiscard]] ReachabilityReport enumerate_reachable_modes(const TankParams& params,
                                                           int max_depth = 26);

}  // namespace pdmp::tank
