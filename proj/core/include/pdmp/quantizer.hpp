#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <unordered_map>
#include <vector>

#include "pdmp/model.hpp"
#include "pdmp/simulator.hpp"

namespace pdmp {

/// Normalized coordinates (h, theta, t, s), each mapped affinely to [0, 1].
inline constexpr std::size_t kCoordDim = 4;
using Coords = std::array<double, kCoordDim>;

/// Whether a chain state is still running or has been absorbed. Absorbed
/// states are quantized in their own strata so a top event is never merged
/// with a live state of the same mode.
enum class PointStatus : std::uint8_t { Live = 0, TopEvent = 1, Horizon = 2 };

[[nodiscard]] PointStatus status_of(TerminalCause cause) noexcept;

/// Stratum key: points only compete with points of the same mode and status.
[[nodiscard]] constexpr std::uint32_t stratum_key(ModeId mode, PointStatus status) noexcept {
  return mode * 4u + static_cast<std::uint32_t>(status);
}

/// Fixed affine maps between physical and normalized coordinates.
class Normalizer {
 public:
  explicit Normalizer(const StateBox& box) noexcept : box_(box) {}

  [[nodiscard]] Coords normalize(const HybridState& z, double s) const noexcept;
  [[nodiscard]] HybridState state(ModeId mode, const Coords& c) const noexcept;
  [[nodiscard]] double sojourn(const Coords& c) const noexcept;
  [[nodiscard]] const StateBox& box() const noexcept { return box_; }

 private:
  StateBox box_;
};

[[nodiscard]] double squared_distance(const Coords& a, const Coords& b) noexcept;

/// One element (Z_n, S_n) of the embedded chain.
struct ChainSample {
  HybridState z;
  double s = 0.0;
  PointStatus status = PointStatus::Live;
};

/// Writes (Z_n, S_n) for n = 0..out.size()-1. After absorption the chain
/// stays put: the absorbed state repeats with S = 0. Throws if the
/// trajectory stops (jump budget) before the last requested index.
void chain_samples(const Trajectory& traj, std::span<ChainSample> out);

struct GridPoint {
  ModeId mode = 0;
  PointStatus status = PointStatus::Live;
  Coords coords{};
  double weight = 0.0;

  [[nodiscard]] std::uint32_t key() const noexcept { return stratum_key(mode, status); }
};

/// Sparse row-stochastic matrix in compressed-row form.
struct TransitionMatrix {
  std::vector<std::uint32_t> offsets{0};
  std::vector<std::uint32_t> cols;
  std::vector<double> probs;

  [[nodiscard]] std::size_t rows() const noexcept { return offsets.size() - 1; }
  [[nodiscard]] std::span<const std::uint32_t> row_cols(std::size_t r) const {
    return {cols.data() + offsets[r], offsets[r + 1] - offsets[r]};
  }
  [[nodiscard]] std::span<const double> row_probs(std::size_t r) const {
    return {probs.data() + offsets[r], offsets[r + 1] - offsets[r]};
  }
};

/// A sample fell in a stratum that has no grid point.
class ProjectionError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Codebook for one jump index plus the estimated law of the next step.
class QuantizationGrid {
 public:
  int index = 0;
  std::vector<GridPoint> points;
  TransitionMatrix transition;         // to grid index+1; empty on the last grid
  std::vector<std::uint64_t> visits;   // frozen-pass hits per point
  double distortion_initial = 0.0;     // mean squared error of the initial codebook
  double distortion = 0.0;             // mean squared error after training

  /// Rebuilds the stratum lookup; call after editing `points`.
  void reindex();

  [[nodiscard]] bool has_stratum(std::uint32_t key) const noexcept {
    return strata_.contains(key);
  }
  [[nodiscard]] std::span<const std::uint32_t> stratum(std::uint32_t key) const;

  /// Nearest point of the same stratum, lowest index on ties; nullopt when
  /// the stratum is absent.
  [[nodiscard]] std::optional<std::uint32_t> nearest(std::uint32_t key,
                                                     const Coords& c) const noexcept;
  /// As nearest() but throws ProjectionError on an absent stratum.
  [[nodiscard]] std::uint32_t project(std::uint32_t key, const Coords& c) const;

  /// Competitive-learning move of point i toward a sample.
  void attract(std::uint32_t i, const Coords& sample, double gamma) noexcept;

 private:
  std::unordered_map<std::uint32_t, std::vector<std::uint32_t>> strata_;
};

/// gamma_i = gamma0 / (1 + gamma0 * decay * i), with decay set so that the
/// step after `steps` updates equals `final_gamma`.
struct LearningRate {
  double gamma0 = 0.5;
  double decay = 0.0;

  static LearningRate reaching(double gamma0, double final_gamma, double steps) noexcept;
  [[nodiscard]] double at(std::uint64_t i) const noexcept {
    return gamma0 / (1.0 + gamma0 * decay * static_cast<double>(i));
  }
};

struct QuantizerOptions {
  int points = 200;  // k, target points per grid
  /// Trajectories used to estimate stratum frequencies. Always at least
  /// train_runs + frozen_runs: calibration covers exactly the trajectories
  /// later used for training and for the frozen pass, so no stratum can
  /// appear there without having received a point.
  std::size_t calibration_runs = 0;
  std::size_t train_runs = 1'000'000;
  std::size_t frozen_runs = 1'000'000;
  double gamma0 = 0.5;
  double final_gamma = 1e-3;
  int threads = 1;

  [[nodiscard]] std::size_t effective_calibration_runs() const noexcept;
  void validate() const;
};

/// Everything a grid file depends on.
struct GridProvenance {
  std::uint64_t dynamics_hash = 0;
  std::uint64_t seed = 0;
  int max_jumps = 26;
  bool segment_bound = true;
  QuantizerOptions options;

  [[nodiscard]] std::uint64_t input_hash() const noexcept;
  [[nodiscard]] SimulationOptions simulation() const noexcept {
    return SimulationOptions{max_jumps, segment_bound, 1.0};
  }
};

struct GridSet {
  GridProvenance provenance;
  std::vector<QuantizationGrid> grids;  // indices 0..max_jumps

  [[nodiscard]] int last_index() const noexcept { return static_cast<int>(grids.size()) - 1; }
};

/// Stratum frequencies and uniform reservoirs of calibration samples.
struct Calibration {
  struct Stratum {
    std::uint64_t count = 0;
    /// Up to `capacity` samples with the smallest priority keys, i.e. a
    /// uniform random subset that does not depend on the thread count.
    std::vector<std::pair<std::uint64_t, Coords>> reservoir;
  };
  std::size_t runs = 0;
  std::size_t capacity = 0;
  std::vector<std::unordered_map<std::uint32_t, Stratum>> by_index;
};

[[nodiscard]] Calibration calibrate(const PdmpModel& model, const GridProvenance& prov);

/// Points per stratum: one for every stratum with frequency below 1/k, the
/// rest split proportionally by largest remainder (at least one each),
/// then capped by the number of distinct reservoir samples.
[[nodiscard]] std::unordered_map<std::uint32_t, int> allocate_points(
    const std::unordered_map<std::uint32_t, Calibration::Stratum>& strata, std::size_t runs,
    int k);

/// Initial codebooks drawn from the calibration reservoirs.
[[nodiscard]] GridSet stratified_init(const Calibration& calibration, const GridProvenance& prov);

/// Competitive learning over trajectories [0, train_runs) of the
/// calibration stream.
void clvq_train(GridSet& grids, const PdmpModel& model, const Calibration& calibration);

/// Weights, transitions and distortion from trajectories
/// [train_runs, train_runs + frozen_runs). When `initial` is given its
/// distortion is measured on the same samples.
void estimate_transitions(GridSet& grids, const PdmpModel& model,
                          const GridSet* initial = nullptr);

/// calibrate + stratified_init + clvq_train + estimate_transitions.
[[nodiscard]] GridSet build_grids(const PdmpModel& model, const GridProvenance& prov);

/// Fingerprint of the grid contents (points, weights, transitions) and
/// their provenance; value tables record it to detect stale inputs.
[[nodiscard]] std::uint64_t content_hash(const GridSet& grids) noexcept;

/// Stream of trajectory i used by the quantizer.
[[nodiscard]] RandomStream quantizer_stream(std::uint64_t seed, std::size_t i) noexcept;

}  // namespace pdmp
