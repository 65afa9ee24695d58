#include "pdmp/policy.hpp"

#include <charconv>
#include <istream>
#include <ostream>
#include <string>
#include <utility>
#include <vector>

#include <fmt/format.h>

namespace pdmp {

StoppingPolicy::StoppingPolicy(const PdmpModel& model, const GridSet& grids,
                               const ValueTable& values, RewardFn reward)
    : model_(model),
      grids_(grids),
      values_(values),
      reward_(std::move(reward)),
      norm_(model.state_box()) {
  if (values.grid_hash != content_hash(grids)) {
    throw ArtifactMismatch("value table was computed from different grids");
  }
  if (values.by_index.size() != grids.grids.size()) {
    throw ArtifactMismatch("value table and grids disagree on the number of jump indices");
  }
  for (std::size_t n = 0; n < grids.grids.size(); ++n) {
    if (values.by_index[n].size() != grids.grids[n].points.size()) {
      throw ArtifactMismatch("value table and grid " + std::to_string(n) +
                             " disagree on the number of points");
    }
  }
}

PolicyDecision StoppingPolicy::decide(int n, const HybridState& z, double s) const {
  if (n < 0 || n > last_index()) throw std::out_of_range("policy: jump index out of range");
  if (model_.is_absorbing(z)) throw std::logic_error("policy: state is already absorbed");

  PolicyDecision d;
  if (n == last_index()) {
    d.kind = PolicyDecision::Kind::StopNow;
    d.forced = true;
    return d;
  }
  const QuantizationGrid& grid = grids_.grids[static_cast<std::size_t>(n)];
  d.point = grid.nearest(stratum_key(z.mode, PointStatus::Live), norm_.normalize(z, s));
  if (!d.point) {
    d.kind = PolicyDecision::Kind::StopNow;
    d.fallback = true;
    return d;
  }
  const ValueEntry& e = values_.by_index[static_cast<std::size_t>(n)][*d.point];
  if (e.branch == Branch::Continue) {
    d.kind = PolicyDecision::Kind::WaitForJump;
  } else if (e.u_star == 0.0) {
    d.kind = PolicyDecision::Kind::StopNow;
  } else {
    d.kind = PolicyDecision::Kind::StopAt;
    d.offset = e.u_star;
  }
  return d;
}

PolicyOutcome StoppingPolicy::stop_at(const HybridState& s, int n, StopReason why) const {
  return PolicyOutcome{s.t, s, reward_(s), why, n};
}

PolicyOutcome StoppingPolicy::replay(const Trajectory& traj) const {
  const int m = traj.jump_count();
  for (int n = 0; n <= m; ++n) {
    const JumpSample& js = traj.jumps[static_cast<std::size_t>(n)];
    const PolicyDecision d = decide(n, js.z, js.s);
    if (d.kind == PolicyDecision::Kind::StopNow) {
      const StopReason why = d.forced     ? StopReason::JumpBudget
                             : d.fallback ? StopReason::Fallback
                                          : StopReason::Maintenance;
      return stop_at(js.z, n, why);
    }
    if (d.kind == PolicyDecision::Kind::StopAt) {
      const double next = n < m ? traj.jumps[static_cast<std::size_t>(n + 1)].z.t
                                : traj.terminal.t;
      if (js.z.t + d.offset < next) {
        return stop_at(model_.flow(js.z, d.offset), n, StopReason::Maintenance);
      }
    }
  }
  if (traj.cause == TerminalCause::JumpBudget || traj.cause == TerminalCause::None) {
    // The recorded trajectory ended before the policy's last index.
    return stop_at(traj.terminal, m, StopReason::JumpBudget);
  }
  return stop_at(traj.terminal, m,
                 traj.cause == TerminalCause::Horizon ? StopReason::Horizon
                                                      : StopReason::TopEvent);
}

PolicyOutcome StoppingPolicy::run(RandomStream& rng, const SimulationOptions& sim) const {
  SimulationOptions opts = sim;
  opts.max_jumps = last_index();
  return replay(simulate_trajectory(model_, model_.initial_state(), rng, opts));
}

namespace {

std::vector<std::string_view> split_csv(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  for (;;) {
    const std::size_t comma = line.find(',', start);
    std::string_view field = line.substr(start, comma - start);
    while (!field.empty() && (field.front() == ' ' || field.front() == '\t')) field.remove_prefix(1);
    while (!field.empty() && (field.back() == ' ' || field.back() == '\t' || field.back() == '\r')) {
      field.remove_suffix(1);
    }
    out.push_back(field);
    if (comma == std::string_view::npos) return out;
    start = comma + 1;
  }
}

template <class T>
bool parse_number(std::string_view s, T& out) {
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc{} && ptr == s.data() + s.size();
}

}  // namespace

std::size_t run_policy_stream(const StoppingPolicy& policy, std::istream& in, std::ostream& out) {
  out << "n,t,action,maintain_at\n";
  std::string line;
  std::size_t records = 0;
  std::size_t line_no = 0;
  int n = 0;
  double prev_t = 0.0;
  bool done = false;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line.front() == '#') continue;
    const auto fields = split_csv(line);
    double t = 0.0, h = 0.0, theta = 0.0;
    std::uint32_t mode = 0;
    const bool ok = fields.size() == 4 && parse_number(fields[0], t) &&
                    parse_number(fields[1], mode) && parse_number(fields[2], h) &&
                    parse_number(fields[3], theta);
    if (!ok) {
      if (records == 0 && !fields.empty() && fields[0] == "t") continue;  // header
      throw std::invalid_argument(fmt::format("policy stream line {}: expected t,mode,h,theta",
                                              line_no));
    }
    if (done) {
      throw std::invalid_argument(
          fmt::format("policy stream line {}: record after the run ended", line_no));
    }
    if (records > 0 && t < prev_t) {
      throw std::invalid_argument(fmt::format("policy stream line {}: time went backwards",
                                              line_no));
    }
    const HybridState z{mode, {h, theta}, t};
    const double s = records == 0 ? 0.0 : t - prev_t;
    ++records;
    prev_t = t;

    if (policy.model().is_absorbing(z)) {
      out << fmt::format("{},{},terminal,\n", n, t);
      done = true;
      continue;
    }
    const PolicyDecision d = policy.decide(n, z, s);
    switch (d.kind) {
      case PolicyDecision::Kind::StopAt:
        out << fmt::format("{},{},maintain_at,{}\n", n, t, t + d.offset);
        break;
      case PolicyDecision::Kind::WaitForJump:
        out << fmt::format("{},{},wait,\n", n, t);
        break;
      case PolicyDecision::Kind::StopNow:
        out << fmt::format("{},{},{},{}\n", n, t, d.forced ? "forced" : "maintain_now", t);
        done = true;
        break;
    }
    ++n;
  }
  return records;
}

}  // namespace pdmp
