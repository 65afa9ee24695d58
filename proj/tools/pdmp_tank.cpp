// pdmp-tank: simulation, grid construction, value recursion and policy
// evaluation for the heated hold-up tank.
//
// Exit codes: 0 success, 1 unexpected failure, 2 configuration error,
// 3 artifact-chain mismatch, 4 model contract violation.

#include <chrono>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <fmt/format.h>
#include <fmt/os.h>

#include "CLI11.hpp"
#include "json.hpp"
#include "pdmp/artifacts.hpp"
#include "pdmp/evaluator.hpp"
#include "pdmp/policy.hpp"
#include "pdmp/quantizer.hpp"
#include "pdmp/simulator.hpp"
#include "pdmp/tank/config.hpp"
#include "pdmp/tank/model.hpp"
#include "pdmp/tank/reachability.hpp"
#include "pdmp/tank/reward.hpp"
#include "pdmp/value_engine.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace pdmp;
using namespace pdmp::tank;

namespace {

enum ExitCode : int { kOk = 0, kFailure = 1, kConfig = 2, kChain = 3, kContract = 4 };

struct Flags {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<int> points;
  std::optional<std::size_t> runs;
  std::optional<int> threads;
  std::string out_dir = "pdmp-out";
  std::string command_line;
};

// Precedence: built-in defaults < config file < command-line flags.
PipelineConfig resolve(const Flags& f) {
  PipelineConfig c = f.config.empty() ? PipelineConfig{} : load_config(f.config);
  if (f.seed) c.seed = *f.seed;
  if (f.points) c.quantizer.points = *f.points;
  if (f.runs) {
    c.evaluation_runs = *f.runs;
    c.census_runs = *f.runs;
  }
  if (f.threads) c.set_threads(*f.threads);
  c.validate();
  return c;
}

const char* kind_name(JumpKind k) {
  switch (k) {
    case JumpKind::Start: return "start";
    case JumpKind::Random: return "random";
    case JumpKind::Boundary: return "boundary";
  }
  return "?";
}

const char* cause_name(TerminalCause c) {
  switch (c) {
    case TerminalCause::None: return "none";
    case TerminalCause::TopEvent: return "top_event";
    case TerminalCause::Horizon: return "horizon";
    case TerminalCause::JumpBudget: return "jump_budget";
  }
  return "?";
}

std::string now_utc() {
  const std::time_t t = std::time(nullptr);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&t));
  return buf;
}

std::string hex(std::uint64_t v) { return fmt::format("{:016x}", v); }

struct Paths {
  fs::path dir;
  fs::path grids() const { return dir / "grids.bin"; }
  fs::path values() const { return dir / "values.bin"; }
  fs::path manifest() const { return dir / "manifest.json"; }
};

/// Run manifest: configuration, seeds, artifact hashes and stage status.
class Manifest {
 public:
  Manifest(const Paths& paths, const Flags& flags, const PipelineConfig& config)
      : path_(paths.manifest()) {
    if (fs::exists(path_)) {
      try {
        std::ifstream in(path_);
        doc_ = json::parse(in);
      } catch (const json::exception&) {
        doc_ = json::object();
      }
    }
    doc_["config_path"] = flags.config;
    doc_["command_line"] = flags.command_line;
    doc_["seed"] = config.seed;
    doc_["resolved_config"] = json::parse(to_json(config));
    doc_["updated"] = now_utc();
    doc_["hashes"]["dynamics"] = hex(config.dynamics_hash());
    doc_["hashes"]["reward"] = hex(config.tank.reward_hash());
  }

  json& stage(const std::string& name) { return doc_["stages"][name]; }
  json& hashes() { return doc_["hashes"]; }
  json& results() { return doc_["results"]; }

  void mark(const std::string& name, const std::string& status) {
    stage(name)["status"] = status;
    stage(name)["at"] = now_utc();
    save();
  }
  void mark_stale(std::initializer_list<const char*> names) {
    for (const char* n : names) {
      if (doc_.contains("stages") && doc_["stages"].contains(n)) doc_["stages"][n]["status"] = "stale";
    }
    save();
  }
  void save() const {
    std::ofstream out(path_);
    out << doc_.dump(2) << '\n';
  }

 private:
  fs::path path_;
  json doc_ = json::object();
};

RewardFn reward_fn(const TankReward& r) {
  return [r](const HybridState& s) { return r(s); };
}

void print_stats(const std::string& name, const CampaignStats& s) {
  fmt::print("{}: runs={} mean={:.3f} (se {:.3f}) null_gain={:.4f}\n", name, s.runs, s.mean(),
             s.stderr_mean(), s.fraction(s.null_gain));
  fmt::print("  top events: h=4 {:.4f}  h=10 {:.4f}  theta=100 {:.4f}  non-top {:.4f}\n",
             s.fraction(s.top_dry), s.fraction(s.top_overflow), s.fraction(s.top_hot),
             s.fraction(s.runs - s.top_events()));
  fmt::print("  at stop: h in [6,8] {:.4f}  theta<=50 {:.4f}  tau=1000 {:.4f}\n",
             s.fraction(s.level_normal), s.fraction(s.temp_normal),
             s.fraction(s.time.counts.back()));
  fmt::print("  near h=6/7/8: {:.4f} {:.4f} {:.4f}  maintenance {:.4f}  jump budget {:.4f}",
             s.fraction(s.near_level[0]), s.fraction(s.near_level[1]),
             s.fraction(s.near_level[2]), s.fraction(s.maintenance), s.fraction(s.jump_budget));
  if (s.fallback > 0) fmt::print("  unseen-stratum fallbacks {}", s.fallback);
  fmt::print("\n");
}

// Commands ------------------------------------------------------------------

int cmd_simulate(const PipelineConfig& c, const Paths& paths, std::size_t runs) {
  const TankModel model(c.tank, c.solver);
  auto out = fmt::output_file((paths.dir / "trajectories.csv").string());
  out.print("run,n,t,mode,h,theta,s,kind,cause\n");
  std::uint64_t top = 0, horizon = 0, budget = 0;
  for (std::size_t i = 0; i < runs; ++i) {
    RandomStream rng = campaign_stream(c.seed, StreamPurpose::Simulate, i);
    const Trajectory traj = simulate_trajectory(model, model.initial_state(), rng, c.simulation);
    for (const JumpSample& js : traj.jumps) {
      out.print("{},{},{:.10g},{},{:.10g},{:.10g},{:.10g},{},\n", i, js.jump_index, js.z.t,
                js.z.mode, js.z.x[0], js.z.x[1], js.s, kind_name(js.kind));
    }
    if (traj.cause != TerminalCause::JumpBudget) {
      out.print("{},{},{:.10g},{},{:.10g},{:.10g},{:.10g},terminal,{}\n", i,
                traj.jump_count() + 1, traj.terminal.t, traj.terminal.mode, traj.terminal.x[0],
                traj.terminal.x[1], traj.terminal_s, cause_name(traj.cause));
    } else {
      out.print("{},{},{:.10g},{},{:.10g},{:.10g},0,terminal,{}\n", i, traj.jump_count(),
                traj.terminal.t, traj.terminal.mode, traj.terminal.x[0], traj.terminal.x[1],
                cause_name(traj.cause));
    }
    top += traj.cause == TerminalCause::TopEvent;
    horizon += traj.cause == TerminalCause::Horizon;
    budget += traj.cause == TerminalCause::JumpBudget;
  }
  fmt::print("simulated {} runs: top_event {} horizon {} jump_budget {}\n", runs, top, horizon,
             budget);
  return kOk;
}

int cmd_census(const PipelineConfig& c, const Paths& paths) {
  const TankModel model(c.tank, c.solver);
  const ReachabilityReport theory = enumerate_reachable_modes(c.tank, c.simulation.max_jumps);
  const ModeCensus census = mode_census(model, c.campaign(c.census_runs));
  const auto counts = theory.depth_counts();
  write_census_csv(census, counts, paths.dir / "census.csv");
  fmt::print("reachable modes: {} ({} unit configurations)\n", theory.all.size(),
             theory.unit_configurations);
  fmt::print("{:>3} {:>8} {:>8}\n", "n", "theory", "observed");
  for (std::size_t n = 0; n < counts.size(); ++n) {
    fmt::print("{:>3} {:>8} {:>8}\n", n, counts[n], census.distinct(n));
  }
  return kOk;
}

bool grids_current(const Paths& paths, const PipelineConfig& c) {
  if (!fs::exists(paths.grids())) return false;
  try {
    return peek_grid_provenance(paths.grids()).input_hash() == c.grid_provenance().input_hash();
  } catch (const ArtifactError&) {
    return false;
  }
}

int cmd_build_grids(const PipelineConfig& c, const Paths& paths, Manifest& manifest,
                    bool skip_if_current) {
  const GridProvenance prov = c.grid_provenance();
  if (skip_if_current && grids_current(paths, c)) {
    fmt::print("build-grids: up to date (input {}), skipped\n", hex(prov.input_hash()));
    manifest.mark("build-grids", "skipped");
    return kOk;
  }
  manifest.mark_stale({"solve", "evaluate-policy"});
  const TankModel model(c.tank, c.solver);
  const auto t0 = std::chrono::steady_clock::now();
  const GridSet grids = build_grids(model, prov);
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  save_grids(grids, paths.grids());
  export_grids_csv(grids, model, paths.dir / "grids.csv");
  std::size_t total = 0;
  for (const auto& g : grids.grids) total += g.points.size();
  fmt::print("build-grids: k={} -> {} grids, {} points, {:.1f}s\n", c.quantizer.points,
             grids.grids.size(), total, secs);
  for (const auto& g : grids.grids) {
    fmt::print("  n={:>2} points={:>5} distortion {:.3e} (initial {:.3e})\n", g.index,
               g.points.size(), g.distortion, g.distortion_initial);
  }
  manifest.hashes()["grid_input"] = hex(prov.input_hash());
  manifest.hashes()["grid_content"] = hex(content_hash(grids));
  manifest.stage("build-grids")["seconds"] = secs;
  manifest.mark("build-grids", "done");
  return kOk;
}

bool values_current(const Paths& paths, const PipelineConfig& c, std::uint64_t grid_hash) {
  if (!fs::exists(paths.values())) return false;
  try {
    const ValueTable t = load_values(paths.values());
    return t.grid_hash == grid_hash && t.reward_hash == c.tank.reward_hash() &&
           t.time_nodes == c.value.time_nodes;
  } catch (const ArtifactError&) {
    return false;
  }
}

GridSet load_checked_grids(const Paths& paths, const PipelineConfig& c) {
  GridSet grids = load_grids(paths.grids());
  if (grids.provenance.dynamics_hash != c.dynamics_hash()) {
    throw ArtifactMismatch("grids.bin was built for different dynamics; rerun build-grids");
  }
  return grids;
}

int cmd_solve(const PipelineConfig& c, const Paths& paths, Manifest& manifest,
              bool skip_if_current) {
  const GridSet grids = load_checked_grids(paths, c);
  const std::uint64_t grid_hash = content_hash(grids);
  if (skip_if_current && values_current(paths, c, grid_hash)) {
    const ValueTable t = load_values(paths.values());
    fmt::print("solve: up to date, skipped (v0 = {:.4f})\n", t.initial_value());
    manifest.results()["v0"] = t.initial_value();
    manifest.mark("solve", "skipped");
    return kOk;
  }
  manifest.mark_stale({"evaluate-policy"});
  const TankModel model(c.tank, c.solver);
  const TankReward reward(c.tank);
  const auto t0 = std::chrono::steady_clock::now();
  ValueTable table = backward_solve(model, grids, reward_fn(reward), c.value);
  table.reward_hash = c.tank.reward_hash();
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  save_values(table, paths.values());
  export_values_csv(table, paths.dir / "values.csv");
  fmt::print("solve: v0 = {:.4f} ({} time nodes, {:.1f}s)\n", table.initial_value(),
             c.value.time_nodes, secs);
  manifest.hashes()["values_grid"] = hex(table.grid_hash);
  manifest.results()["v0"] = table.initial_value();
  manifest.stage("solve")["seconds"] = secs;
  manifest.mark("solve", "done");
  return kOk;
}

void record_stats(Manifest& manifest, const std::string& key, const CampaignStats& s) {
  json& r = manifest.results()[key];
  r["runs"] = s.runs;
  r["mean"] = s.mean();
  r["stderr"] = s.stderr_mean();
  r["null_gain"] = s.fraction(s.null_gain);
  r["top_h4"] = s.fraction(s.top_dry);
  r["top_h10"] = s.fraction(s.top_overflow);
  r["top_theta100"] = s.fraction(s.top_hot);
  r["tau_1000"] = s.fraction(s.time.counts.back());
}

int cmd_evaluate_baseline(const PipelineConfig& c, const Paths& paths, Manifest& manifest) {
  const TankModel model(c.tank, c.solver);
  const CampaignStats s = baseline_campaign(model, TankReward(c.tank), c.campaign(c.evaluation_runs));
  const std::pair<std::string, CampaignStats> rows[] = {{"baseline", s}};
  write_campaign_summary_csv(paths.dir / "baseline_summary.csv", rows);
  write_histograms_csv(s, paths.dir, "baseline");
  print_stats("baseline", s);
  record_stats(manifest, "baseline", s);
  manifest.mark("evaluate-baseline", "done");
  return kOk;
}

int cmd_evaluate_policy(const PipelineConfig& c, const Paths& paths, Manifest& manifest) {
  const TankModel model(c.tank, c.solver);
  const GridSet grids = load_checked_grids(paths, c);
  const ValueTable table = load_values(paths.values());
  if (table.reward_hash != c.tank.reward_hash()) {
    throw ArtifactMismatch("values.bin was solved for a different reward; rerun solve");
  }
  const TankReward reward(c.tank);
  const StoppingPolicy policy(model, grids, table, reward_fn(reward));
  const CampaignStats s = policy_campaign(model, policy, c.campaign(c.evaluation_runs));
  const std::pair<std::string, CampaignStats> rows[] = {{"policy", s}};
  write_campaign_summary_csv(paths.dir / "policy_summary.csv", rows);
  write_histograms_csv(s, paths.dir, "policy");
  fmt::print("v0 = {:.4f}\n", table.initial_value());
  print_stats("policy", s);
  if (s.fallback > 0) {
    fmt::print(stderr, "warning: {} runs met a stratum with no grid point and stopped at once\n",
               s.fallback);
  }
  record_stats(manifest, "policy", s);
  manifest.results()["v0"] = table.initial_value();
  manifest.mark("evaluate-policy", "done");
  return kOk;
}

int cmd_policy_stream(const PipelineConfig& c, const Paths& paths) {
  const TankModel model(c.tank, c.solver);
  const GridSet grids = load_checked_grids(paths, c);
  const ValueTable table = load_values(paths.values());
  const TankReward reward(c.tank);
  const StoppingPolicy policy(model, grids, table, reward_fn(reward));
  run_policy_stream(policy, std::cin, std::cout);
  return kOk;
}

int cmd_pipeline(const PipelineConfig& c, const Paths& paths, Manifest& manifest) {
  const char* stage = "build-grids";
  try {
    cmd_build_grids(c, paths, manifest, true);
    stage = "solve";
    cmd_solve(c, paths, manifest, true);
    stage = "evaluate-baseline";
    cmd_evaluate_baseline(c, paths, manifest);
    stage = "evaluate-policy";
    cmd_evaluate_policy(c, paths, manifest);
  } catch (...) {
    manifest.mark(stage, "failed");
    throw;
  }
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Optimal maintenance of the heated hold-up tank (PDMP optimal stopping)"};
  app.fallthrough();
  app.require_subcommand(1);
  Flags flags;
  for (int i = 0; i < argc; ++i) flags.command_line += (i ? " " : "") + std::string(argv[i]);

  app.add_option("--config", flags.config, "JSON configuration file")->check(CLI::ExistingFile);
  app.add_option("--seed", flags.seed, "master seed (overrides the config)");
  app.add_option("--points", flags.points, "grid size k (overrides quantizer.points)");
  app.add_option("--runs", flags.runs, "Monte Carlo runs for the chosen command");
  app.add_option("--threads", flags.threads, "worker threads")->check(CLI::PositiveNumber);
  app.add_option("--out-dir", flags.out_dir, "artifact directory")->capture_default_str();

  auto* simulate = app.add_subcommand("simulate", "write per-jump trajectory records");
  auto* census = app.add_subcommand("census", "observed vs reachable modes per jump index");
  auto* grids = app.add_subcommand("build-grids", "quantize the embedded chain");
  auto* solve = app.add_subcommand("solve", "backward value recursion on the grids");
  auto* base = app.add_subcommand("evaluate-baseline", "no-maintenance campaign");
  auto* pol = app.add_subcommand("evaluate-policy", "campaign under the stopping policy");
  auto* stream = app.add_subcommand("policy-stream",
                                    "decisions for jump records read from stdin (t,mode,h,theta)");
  auto* pipeline = app.add_subcommand("pipeline", "build-grids, solve and both evaluations");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? kOk : kConfig;
  }

  try {
    const PipelineConfig config = resolve(flags);
    const Paths paths{flags.out_dir};
    fs::create_directories(paths.dir);
    Manifest manifest(paths, flags, config);

    if (simulate->parsed()) return cmd_simulate(config, paths, flags.runs.value_or(1000));
    if (census->parsed()) return cmd_census(config, paths);
    if (grids->parsed()) return cmd_build_grids(config, paths, manifest, false);
    if (solve->parsed()) return cmd_solve(config, paths, manifest, false);
    if (base->parsed()) return cmd_evaluate_baseline(config, paths, manifest);
    if (pol->parsed()) return cmd_evaluate_policy(config, paths, manifest);
    if (stream->parsed()) return cmd_policy_stream(config, paths);
    if (pipeline->parsed()) return cmd_pipeline(config, paths, manifest);
  } catch (const ConfigError& e) {
    fmt::print(stderr, "config error: {}\n", e.what());
    return kConfig;
  } catch (const ArtifactMismatch& e) {
    fmt::print(stderr, "artifact chain mismatch: {}\n", e.what());
    return kChain;
  } catch (const ArtifactError& e) {
    fmt::print(stderr, "artifact error: {}\n", e.what());
    return kChain;
  } catch (const ModelContractViolation& e) {
    fmt::print(stderr, "model contract violation: {}\n", e.what());
    return kContract;
  } catch (const std::exception& e) {
    fmt::print(stderr, "error: {}\n", e.what());
    return kFailure;
  }
  return kFailure;
}
