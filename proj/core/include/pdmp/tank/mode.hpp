#pragma once

#include <array>
#include <cstdint>
#include <string>

#include "pdmp/model.hpp"

namespace pdmp::tank {

enum class UnitState : std::uint8_t { On = 0, Off = 1, StuckOn = 2, StuckOff = 3 };
enum class Controller : std::uint8_t { Failed = 0, Working = 1 };

inline constexpr int kUnits = 3;
inline constexpr std::size_t kModeCount = 128;

[[nodiscard]] constexpr bool is_stuck(UnitState u) noexcept {
  return u == UnitState::StuckOn || u == UnitState::StuckOff;
}

/// 1 when the unit lets fluid through (On or StuckOn).
[[nodiscard]] constexpr int is_open(UnitState u) noexcept {
  return (u == UnitState::On || u == UnitState::StuckOn) ? 1 : 0;
}

/// Unit positions (pumps 1 and 2, outlet valve 3) plus controller health.
///
/// Canonical integer encoding, stable across versions:
///   unit1 * 32 + unit2 * 8 + unit3 * 2 + controller
/// with On = 0, Off = 1, StuckOn = 2, StuckOff = 3 and Failed = 0,
/// Working = 1. The initial mode (On, Off, On, Working) encodes to 9.
struct TankMode {
  std::array<UnitState, kUnits> units{UnitState::On, UnitState::Off, UnitState::On};
  Controller controller = Controller::Working;

  [[nodiscard]] constexpr ModeId encode() const noexcept {
    return static_cast<ModeId>(units[0]) * 32 + static_cast<ModeId>(units[1]) * 8 +
           static_cast<ModeId>(units[2]) * 2 + static_cast<ModeId>(controller);
  }

  [[nodiscard]] static constexpr TankMode decode(ModeId id) noexcept {
    TankMode m;
    m.units[0] = static_cast<UnitState>((id >> 5) & 3u);
    m.units[1] = static_cast<UnitState>((id >> 3) & 3u);
    m.units[2] = static_cast<UnitState>((id >> 1) & 3u);
    m.controller = static_cast<Controller>(id & 1u);
    return m;
  }

  /// nu1 + nu2: number of open inlet pumps.
  [[nodiscard]] constexpr int inflow() const noexcept {
    return is_open(units[0]) + is_open(units[1]);
  }
  /// nu1 + nu2 - nu3: level slope in units of G.
  [[nodiscard]] constexpr int level_slope() const noexcept {
    return inflow() - is_open(units[2]);
  }
  [[nodiscard]] constexpr bool controller_working() const noexcept {
    return controller == Controller::Working;
  }
  [[nodiscard]] constexpr int live_units() const noexcept {
    int n = 0;
    for (auto u : units) n += is_stuck(u) ? 0 : 1;
    return n;
  }

  /// Positions forced by a successful solicitation; stuck units keep theirs.
  [[nodiscard]] TankMode with_command(std::array<UnitState, kUnits> target) const noexcept;

  /// e.g. "(ON,OFF,SOFF,1)".
  [[nodiscard]] std::string to_string() const;

  friend constexpr bool operator==(const TankMode&, const TankMode&) = default;
};

std::string to_string(UnitState u);

}  // namespace pdmp::tank
