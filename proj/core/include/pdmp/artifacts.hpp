#pragma once

#include <filesystem>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>

#include "pdmp/evaluator.hpp"
#include "pdmp/quantizer.hpp"
#include "pdmp/value_engine.hpp"

namespace pdmp {

/// Unreadable, truncated or corrupted artifact file.
class ArtifactError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Binary files are little-endian with an 8-byte magic and a format version.
// The grid file records its provenance and a content hash that is checked
// on load; it holds no reward data. The value file records the content hash
// of the grids it was solved on and the reward fingerprint.

inline constexpr std::uint32_t kGridFormatVersion = 1;
inline constexpr std::uint32_t kValueFormatVersion = 1;

void save_grids(const GridSet& grids, const std::filesystem::path& path);
[[nodiscard]] GridSet load_grids(const std::filesystem::path& path);

void save_values(const ValueTable& values, const std::filesystem::path& path);
[[nodiscard]] ValueTable load_values(const std::filesystem::path& path);

/// Header fields of a grid file without loading the grids.
[[nodiscard]] GridProvenance peek_grid_provenance(const std::filesystem::path& path);

/// n, point, mode, status, h, theta, t, s, weight
void export_grids_csv(const GridSet& grids, const PdmpModel& model,
                      const std::filesystem::path& path);
/// n, point, value, u_star, branch, stop_value, continuation
void export_values_csv(const ValueTable& values, const std::filesystem::path& path);
/// One row per campaign.
void write_campaign_summary_csv(const std::filesystem::path& path,
                                std::span<const std::pair<std::string, CampaignStats>> rows);
/// bin_lo, bin_hi, count for each of the three histograms, in one file per histogram.
void write_histograms_csv(const CampaignStats& stats, const std::filesystem::path& dir,
                          const std::string& prefix);
/// n, theoretical, observed and per-mode counts.
void write_census_csv(const ModeCensus& census, std::span<const std::size_t> theoretical,
                      const std::filesystem::path& path);

}  // namespace pdmp
