#pragma once

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <string_view>

#include "pdmp/evaluator.hpp"
#include "pdmp/quantizer.hpp"
#include "pdmp/simulator.hpp"
#include "pdmp/tank/model.hpp"
#include "pdmp/tank/params.hpp"
#include "pdmp/value_engine.hpp"

namespace pdmp::tank {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Resolved settings of every pipeline stage. The JSON file mirrors the
/// sections below; every key is optional and unknown keys are rejected.
///
///   {
///     "seed": 2012, "threads": 1,
///     "tank":       { "b1": .., "l": [l1, l2, l3], "stuck_on_prob": .., "theta_solver": "closed_form" | "adaptive", .. },
///     "reward":     { "alpha": 1.01, "theta_normal": 50 },
///     "simulation": { "max_jumps": 26, "segment_bound": true },
///     "quantizer":  { "points": 200, "calibration_runs": 0, "train_runs": .., "frozen_runs": .., "gamma0": .., "final_gamma": .. },
///     "value":      { "time_nodes": 50 },
///     "evaluator":  { "runs": 100000, "census_runs": 1000000 }
///   }
struct PipelineConfig {
  TankParams tank;
  ThetaSolver solver = ThetaSolver::ClosedForm;
  SimulationOptions simulation;
  QuantizerOptions quantizer;
  ValueOptions value;
  std::size_t evaluation_runs = 100'000;
  std::size_t census_runs = 1'000'000;
  std::uint64_t seed = 2012;
  int threads = 1;

  /// Throws ConfigError on the first inconsistent setting.
  void validate() const;

  /// Sets the thread count of every stage.
  void set_threads(int n);

  [[nodiscard]] std::uint64_t dynamics_hash() const noexcept;
  [[nodiscard]] GridProvenance grid_provenance() const;
  [[nodiscard]] CampaignOptions campaign(std::size_t runs) const;
};

[[nodiscard]] PipelineConfig parse_config(std::string_view json_text);
[[nodiscard]] PipelineConfig load_config(const std::filesystem::path& path);
/// Fully resolved configuration, suitable for parse_config().
[[nodiscard]] std::string to_json(const PipelineConfig& config);

}  // namespace pdmp::tank
