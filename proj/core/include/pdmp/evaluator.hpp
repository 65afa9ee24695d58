#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <vector>

#include "pdmp/policy.hpp"
#include "pdmp/simulator.hpp"
#include "pdmp/tank/model.hpp"
#include "pdmp/tank/reward.hpp"

namespace pdmp {

/// Fixed-edge histogram on [lo, lo + width * bins]; the right edge is
/// folded into the last bin, values outside are counted apart.
struct Histogram {
  double lo = 0.0;
  double width = 1.0;
  std::vector<std::uint64_t> counts;
  std::uint64_t outside = 0;

  Histogram() = default;
  Histogram(double lo_, double hi, double width_);

  void add(double x) noexcept;
  void merge(const Histogram& other);
  [[nodiscard]] double edge(std::size_t i) const noexcept { return lo + width * i; }
  [[nodiscard]] std::uint64_t total() const noexcept;
};

/// Outcome of one run in a campaign: when it stopped, where, and why.
struct RunRecord {
  double tau = 0.0;
  HybridState state;
  double reward = 0.0;
  StopReason reason = StopReason::Maintenance;
};

struct CampaignStats {
  std::uint64_t runs = 0;
  double reward_sum = 0.0;
  double reward_sumsq = 0.0;

  std::uint64_t null_gain = 0;      // reward exactly 0
  std::uint64_t level_normal = 0;   // h in [h_low, h_high] at stop
  std::uint64_t temp_normal = 0;    // theta <= theta_normal at stop
  std::uint64_t top_dry = 0;        // h = 4
  std::uint64_t top_overflow = 0;   // h = 10
  std::uint64_t top_hot = 0;        // theta = 100
  std::uint64_t horizon = 0;        // stopped at the end of the mission
  std::uint64_t jump_budget = 0;    // stopped at the last jump index
  std::uint64_t maintenance = 0;    // stopped by the policy's own date
  std::uint64_t fallback = 0;       // policy met an unseen stratum
  std::array<std::uint64_t, 3> near_level{};  // |h - {6, 7, 8}| <= 0.15 at stop

  Histogram time{0.0, 1000.0, 10.0};
  Histogram level{4.0, 10.0, 0.1};
  Histogram temperature{15.0, 100.0, 1.0};

  void add(const tank::TankParams& p, const RunRecord& r);
  void merge(const CampaignStats& other);

  [[nodiscard]] double mean() const noexcept;
  [[nodiscard]] double stderr_mean() const noexcept;
  [[nodiscard]] double fraction(std::uint64_t count) const noexcept {
    return runs == 0 ? 0.0 : static_cast<double>(count) / static_cast<double>(runs);
  }
  [[nodiscard]] std::uint64_t top_events() const noexcept {
    return top_dry + top_overflow + top_hot;
  }
};

inline constexpr std::array<double, 3> kNearLevels{6.0, 7.0, 8.0};
inline constexpr double kNearLevelTolerance = 0.15;

struct CampaignOptions {
  std::size_t runs = 100'000;
  std::uint64_t seed = 0;
  int threads = 1;
  SimulationOptions simulation;
};

/// No maintenance: each run goes to a top event, the horizon or the jump
/// budget and earns g at its terminal state.
[[nodiscard]] CampaignStats baseline_campaign(const tank::TankModel& model,
                                              const tank::TankReward& reward,
                                              const CampaignOptions& opts);

/// Runs under the stopping policy. Jump budget is the policy's last index.
[[nodiscard]] CampaignStats policy_campaign(const tank::TankModel& model,
                                            const StoppingPolicy& policy,
                                            const CampaignOptions& opts);

/// Live modes observed right after jump n, n = 0..max_jumps.
struct ModeCensus {
  std::size_t runs = 0;
  std::vector<std::vector<std::uint64_t>> counts;  // [n][mode]

  [[nodiscard]] std::size_t distinct(std::size_t n) const;
  [[nodiscard]] std::vector<std::size_t> distinct_counts() const;
};

[[nodiscard]] ModeCensus mode_census(const tank::TankModel& model, const CampaignOptions& opts);

/// Stream of run i of each campaign type.
[[nodiscard]] RandomStream campaign_stream(std::uint64_t seed, StreamPurpose purpose,
                                           std::size_t i) noexcept;

}  // namespace pdmp
