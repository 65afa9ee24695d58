#include "pdmp/evaluator.hpp"

#include <cmath>
#include <mutex>
#include <stdexcept>

#include "pdmp/parallel.hpp"

namespace pdmp {
namespace {

constexpr std::size_t kChunk = 4096;

// Runs fn(i) -> RunRecord over the campaign and merges per-chunk stats in
// chunk order so the result does not depend on the thread count.
template <class Fn>
CampaignStats campaign(const tank::TankParams& p, const CampaignOptions& opts, Fn&& fn) {
  if (opts.runs < 1) throw std::invalid_argument("campaign needs at least one run");
  const ChunkPlan plan{opts.runs, kChunk};
  std::vector<CampaignStats> partial(plan.chunks());
  parallel_chunks(plan, opts.threads, [&](std::size_t c, std::size_t b, std::size_t e) {
    for (std::size_t i = b; i < e; ++i) partial[c].add(p, fn(i));
  });
  CampaignStats total;
  for (const CampaignStats& s : partial) total.merge(s);
  return total;
}

}  // namespace

Histogram::Histogram(double lo_, double hi, double width_)
    : lo(lo_), width(width_), counts(static_cast<std::size_t>(std::llround((hi - lo_) / width_)), 0) {}

void Histogram::add(double x) noexcept {
  const double hi = edge(counts.size());
  if (!(x >= lo) || x > hi + 1e-9 * width) {
    ++outside;
    return;
  }
  auto i = static_cast<std::size_t>(std::floor((x - lo) / width));
  if (i >= counts.size()) i = counts.size() - 1;
  ++counts[i];
}

void Histogram::merge(const Histogram& other) {
  if (other.counts.size() != counts.size() || other.lo != lo || other.width != width) {
    throw std::invalid_argument("histogram edges differ");
  }
  for (std::size_t i = 0; i < counts.size(); ++i) counts[i] += other.counts[i];
  outside += other.outside;
}

std::uint64_t Histogram::total() const noexcept {
  std::uint64_t t = outside;
  for (auto c : counts) t += c;
  return t;
}

void CampaignStats::add(const tank::TankParams& p, const RunRecord& r) {
  ++runs;
  reward_sum += r.reward;
  reward_sumsq += r.reward * r.reward;
  const double h = r.state.x[0];
  const double theta = r.state.x[1];
  if (r.reward == 0.0) ++null_gain;
  if (h >= p.h_low && h <= p.h_high) ++level_normal;
  if (theta <= p.theta_normal) ++temp_normal;
  switch (tank::top_event(p, r.state)) {
    case tank::TopEvent::DryOut: ++top_dry; break;
    case tank::TopEvent::Overflow: ++top_overflow; break;
    case tank::TopEvent::Hot: ++top_hot; break;
    case tank::TopEvent::None: break;
  }
  switch (r.reason) {
    case StopReason::Horizon: ++horizon; break;
    case StopReason::JumpBudget: ++jump_budget; break;
    case StopReason::Maintenance: ++maintenance; break;
    case StopReason::Fallback: ++fallback; break;
    case StopReason::TopEvent: break;
  }
  for (std::size_t i = 0; i < kNearLevels.size(); ++i) {
    if (std::abs(h - kNearLevels[i]) <= kNearLevelTolerance) ++near_level[i];
  }
  time.add(r.tau);
  level.add(h);
  temperature.add(theta);
}

void CampaignStats::merge(const CampaignStats& o) {
  runs += o.runs;
  reward_sum += o.reward_sum;
  reward_sumsq += o.reward_sumsq;
  null_gain += o.null_gain;
  level_normal += o.level_normal;
  temp_normal += o.temp_normal;
  top_dry += o.top_dry;
  top_overflow += o.top_overflow;
  top_hot += o.top_hot;
  horizon += o.horizon;
  jump_budget += o.jump_budget;
  maintenance += o.maintenance;
  fallback += o.fallback;
  for (std::size_t i = 0; i < near_level.size(); ++i) near_level[i] += o.near_level[i];
  time.merge(o.time);
  level.merge(o.level);
  temperature.merge(o.temperature);
}

double CampaignStats::mean() const noexcept {
  return runs == 0 ? 0.0 : reward_sum / static_cast<double>(runs);
}

double CampaignStats::stderr_mean() const noexcept {
  if (runs < 2) return 0.0;
  const double n = static_cast<double>(runs);
  const double m = reward_sum / n;
  const double var = std::max(0.0, (reward_sumsq - n * m * m) / (n - 1.0));
  return std::sqrt(var / n);
}

RandomStream campaign_stream(std::uint64_t seed, StreamPurpose purpose, std::size_t i) noexcept {
  return RandomStream::for_item(seed, purpose, i);
}

CampaignStats baseline_campaign(const tank::TankModel& model, const tank::TankReward& reward,
                                const CampaignOptions& opts) {
  return campaign(model.params(), opts, [&](std::size_t i) {
    RandomStream rng = campaign_stream(opts.seed, StreamPurpose::Baseline, i);
    const Trajectory traj =
        simulate_trajectory(model, model.initial_state(), rng, opts.simulation);
    RunRecord r;
    r.state = traj.terminal;
    r.tau = traj.terminal.t;
    r.reward = reward(traj.terminal);
    r.reason = traj.cause == TerminalCause::Horizon    ? StopReason::Horizon
               : traj.cause == TerminalCause::TopEvent ? StopReason::TopEvent
                                                       : StopReason::JumpBudget;
    return r;
  });
}

CampaignStats policy_campaign(const tank::TankModel& model, const StoppingPolicy& policy,
                              const CampaignOptions& opts) {
  return campaign(model.params(), opts, [&](std::size_t i) {
    RandomStream rng = campaign_stream(opts.seed, StreamPurpose::Policy, i);
    const PolicyOutcome o = policy.run(rng, opts.simulation);
    return RunRecord{o.tau, o.stopped, o.reward, o.reason};
  });
}

std::size_t ModeCensus::distinct(std::size_t n) const {
  std::size_t d = 0;
  for (auto c : counts.at(n)) d += c > 0 ? 1 : 0;
  return d;
}

std::vector<std::size_t> ModeCensus::distinct_counts() const {
  std::vector<std::size_t> out;
  for (std::size_t n = 0; n < counts.size(); ++n) out.push_back(distinct(n));
  return out;
}

ModeCensus mode_census(const tank::TankModel& model, const CampaignOptions& opts) {
  const std::size_t width = static_cast<std::size_t>(opts.simulation.max_jumps) + 1;
  ModeCensus census;
  census.runs = opts.runs;
  census.counts.assign(width, std::vector<std::uint64_t>(model.mode_count(), 0));
  std::mutex merge_mutex;
  parallel_chunks(ChunkPlan{opts.runs, kChunk}, opts.threads,
                  [&](std::size_t, std::size_t b, std::size_t e) {
    std::vector<std::vector<std::uint64_t>> local(
        width, std::vector<std::uint64_t>(model.mode_count(), 0));
    for (std::size_t i = b; i < e; ++i) {
      RandomStream rng = campaign_stream(opts.seed, StreamPurpose::Census, i);
      const Trajectory traj =
          simulate_trajectory(model, model.initial_state(), rng, opts.simulation);
      for (const JumpSample& js : traj.jumps) {
        ++local[static_cast<std::size_t>(js.jump_index)][js.z.mode];
      }
    }
    std::lock_guard lock(merge_mutex);
    for (std::size_t n = 0; n < width; ++n) {
      for (std::size_t m = 0; m < local[n].size(); ++m) census.counts[n][m] += local[n][m];
    }
  });
  return census;
}

}  // namespace pdmp
