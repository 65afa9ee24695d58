#include "pdmp/tank/mode.hpp"

namespace pdmp::tank {

std::string to_string(UnitState u) {
  switch (u) {
    case UnitState::On: return "ON";
    case UnitState::Off: return "OFF";
    case UnitState::StuckOn: return "SON";
    case UnitState::StuckOff: return "SOFF";
  }
  return "?";
}

TankMode TankMode::with_command(std::array<UnitState, kUnits> target) const noexcept {
  TankMode out = *this;
  for (int i = 0; i < kUnits; ++i) {
    if (!is_stuck(units[i])) out.units[i] = target[i];
  }
  return out;
}

std::string TankMode::to_string() const {
  std::string s = "(";
  for (int i = 0; i < kUnits; ++i) {
    s += tank::to_string(units[i]);
    s += ',';
  }
  s += controller_working() ? "1)" : "0)";
  return s;
}

}  // namespace pdmp::tank
