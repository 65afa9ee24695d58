#include "pdmp/tank/reachability.hpp"

#include <array>
#include <set>
#include <utility>

#include "pdmp/tank/mode.hpp"

namespace pdmp::tank {
namespace {

// Ordered level positions; the dry and overflow ends are absorbing.
enum class Pos : int { Dry, BelowLow, AtLow, Mid, AtHigh, AboveHigh, Over };

bool is_interval(Pos p) {
  return p == Pos::BelowLow || p == Pos::Mid || p == Pos::AboveHigh;
}

using Node = std::pair<ModeId, Pos>;

struct Sweep {
  std::vector<Pos> failure_positions;
  Pos boundary = Pos::Dry;
  bool control = false;  // boundary is a control threshold
};

Sweep sweep(const TankMode& mode, Pos start) {
  Sweep out;
  const int slope = mode.level_slope();
  if (slope == 0) {
    // Only temperature or the horizon end the segment.
    out.failure_positions.push_back(start);
    return out;
  }
  if (is_interval(start)) out.failure_positions.push_back(start);
  const int step = slope > 0 ? 1 : -1;
  for (int i = static_cast<int>(start) + step;; i += step) {
    const Pos p = static_cast<Pos>(i);
    if (p == Pos::Dry || p == Pos::Over) {
      out.boundary = p;
      return out;
    }
    if (mode.controller_working() &&
        ((p == Pos::AtLow && slope < 0) || (p == Pos::AtHigh && slope > 0))) {
      out.boundary = p;
      out.control = true;
      return out;
    }
    if (is_interval(p)) out.failure_positions.push_back(p);
  }
}

Pos initial_position(const TankParams& p) {
  if (p.h0 < p.h_low) return Pos::BelowLow;
  if (p.h0 == p.h_low) return Pos::AtLow;
  if (p.h0 < p.h_high) return Pos::Mid;
  if (p.h0 == p.h_high) return Pos::AtHigh;
  return Pos::AboveHigh;
}

constexpr std::array<UnitState, kUnits> kFill{UnitState::On, UnitState::On, UnitState::Off};
constexpr std::array<UnitState, kUnits> kDrain{UnitState::Off, UnitState::Off, UnitState::On};

void successors(const Node& node, std::set<Node>& out) {
  const TankMode mode = TankMode::decode(node.first);
  const Sweep s = sweep(mode, node.second);
  for (Pos p : s.failure_positions) {
    for (int i = 0; i < kUnits; ++i) {
      if (is_stuck(mode.units[i])) continue;
      for (UnitState stuck : {UnitState::StuckOn, UnitState::StuckOff}) {
        TankMode next = mode;
        next.units[i] = stuck;
        out.emplace(next.encode(), p);
      }
    }
  }
  if (s.control) {
    TankMode ok = mode.with_command(s.boundary == Pos::AtLow ? kFill : kDrain);
    TankMode failed = mode;
    failed.controller = Controller::Failed;
    out.emplace(ok.encode(), s.boundary);
    out.emplace(failed.encode(), s.boundary);
  }
}

}  // namespace

std::vector<std::size_t> ReachabilityReport::depth_counts() const {
  std::vector<std::size_t> out;
  out.reserve(by_depth.size());
  for (const auto& d : by_depth) out.push_back(d.size());
  return out;
}

ReachabilityReport enumerate_reachable_modes(const TankParams& params, int max_depth) {
  ReachabilityReport report;
  std::set<Node> layer{{TankMode{}.encode(), initial_position(params)}};
  std::set<ModeId> all;
  for (int n = 0; n <= max_depth; ++n) {
    std::set<ModeId> modes;
    for (const Node& node : layer) modes.insert(node.first);
    report.by_depth.emplace_back(modes.begin(), modes.end());
    all.insert(modes.begin(), modes.end());
    if (n == max_depth) break;
    std::set<Node> next;
    for (const Node& node : layer) successors(node, next);
    layer = std::move(next);
  }
  report.all.assign(all.begin(), all.end());
  std::set<ModeId> units;
  for (ModeId m : all) units.insert(m >> 1);
  report.unit_configurations = units.size();
  return report;
}

}  // namespace pdmp::tank
