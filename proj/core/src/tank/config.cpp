#include "pdmp/tank/config.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include "json.hpp"

#include "pdmp/hash.hpp"

namespace pdmp::tank {
namespace {

using nlohmann::json;

const json& section(const json& root, const char* name) {
  static const json empty = json::object();
  if (!root.contains(name)) return empty;
  const json& s = root.at(name);
  if (!s.is_object()) throw ConfigError(std::string("section '") + name + "' must be an object");
  return s;
}

void reject_unknown(const json& obj, std::string_view where, std::set<std::string> known) {
  for (const auto& [key, value] : obj.items()) {
    if (!known.contains(key)) {
      throw ConfigError("unknown key '" + key + "' in " + std::string(where));
    }
  }
}

template <class T>
void read(const json& obj, const char* key, T& out) {
  if (!obj.contains(key)) return;
  try {
    out = obj.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ConfigError(std::string("bad value for '") + key + "': " + e.what());
  }
}

ThetaSolver parse_solver(const std::string& s) {
  if (s == "closed_form") return ThetaSolver::ClosedForm;
  if (s == "adaptive") return ThetaSolver::Adaptive;
  throw ConfigError("theta_solver must be 'closed_form' or 'adaptive', got '" + s + "'");
}

}  // namespace

void PipelineConfig::validate() const {
  try {
    tank.validate();
    quantizer.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  if (simulation.max_jumps < 1) throw ConfigError("simulation.max_jumps must be >= 1");
  if (value.time_nodes < 1) throw ConfigError("value.time_nodes must be >= 1");
  if (evaluation_runs < 1) throw ConfigError("evaluator.runs must be >= 1");
  if (census_runs < 1) throw ConfigError("evaluator.census_runs must be >= 1");
  if (threads < 1) throw ConfigError("threads must be >= 1");
}

void PipelineConfig::set_threads(int n) {
  threads = n;
  quantizer.threads = n;
  value.threads = n;
}

std::uint64_t PipelineConfig::dynamics_hash() const noexcept {
  Fnv1a h;
  h.u64(tank.dynamics_hash()).u64(static_cast<std::uint64_t>(solver));
  return h.value();
}

GridProvenance PipelineConfig::grid_provenance() const {
  GridProvenance p;
  p.dynamics_hash = dynamics_hash();
  p.seed = seed;
  p.max_jumps = simulation.max_jumps;
  p.segment_bound = simulation.segment_bound;
  p.options = quantizer;
  return p;
}

CampaignOptions PipelineConfig::campaign(std::size_t runs) const {
  return CampaignOptions{runs, seed, threads, simulation};
}

PipelineConfig parse_config(std::string_view text) {
  json root;
  try {
    root = json::parse(text.begin(), text.end(), nullptr, true, /*ignore_comments=*/true);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  if (!root.is_object()) throw ConfigError("config must be a JSON object");
  reject_unknown(root, "config",
                 {"seed", "threads", "tank", "reward", "simulation", "quantizer", "value",
                  "evaluator"});

  PipelineConfig c;
  read(root, "seed", c.seed);
  read(root, "threads", c.threads);

  const json& t = section(root, "tank");
  reject_unknown(t, "tank",
                 {"b1", "b2", "bc", "bd", "theta_ref", "theta_in", "l", "G", "K", "p_control",
                  "stuck_on_prob", "h0", "theta0", "h_dry", "h_low", "h_high", "h_over",
                  "theta_hot", "horizon", "theta_solver"});
  TankParams& p = c.tank;
  read(t, "b1", p.b1);
  read(t, "b2", p.b2);
  read(t, "bc", p.bc);
  read(t, "bd", p.bd);
  read(t, "theta_ref", p.theta_ref);
  read(t, "theta_in", p.theta_in);
  read(t, "l", p.l);
  read(t, "G", p.G);
  read(t, "K", p.K);
  read(t, "p_control", p.p_control);
  read(t, "stuck_on_prob", p.stuck_on_prob);
  read(t, "h0", p.h0);
  read(t, "theta0", p.theta0);
  read(t, "h_dry", p.h_dry);
  read(t, "h_low", p.h_low);
  read(t, "h_high", p.h_high);
  read(t, "h_over", p.h_over);
  read(t, "theta_hot", p.theta_hot);
  read(t, "horizon", p.horizon);
  if (t.contains("theta_solver")) {
    std::string s;
    read(t, "theta_solver", s);
    c.solver = parse_solver(s);
  }

  const json& r = section(root, "reward");
  reject_unknown(r, "reward", {"alpha", "theta_normal"});
  read(r, "alpha", p.alpha);
  read(r, "theta_normal", p.theta_normal);

  const json& s = section(root, "simulation");
  reject_unknown(s, "simulation", {"max_jumps", "segment_bound"});
  read(s, "max_jumps", c.simulation.max_jumps);
  read(s, "segment_bound", c.simulation.segment_bound);

  const json& q = section(root, "quantizer");
  reject_unknown(q, "quantizer",
                 {"points", "calibration_runs", "train_runs", "frozen_runs", "gamma0",
                  "final_gamma"});
  read(q, "points", c.quantizer.points);
  read(q, "calibration_runs", c.quantizer.calibration_runs);
  read(q, "train_runs", c.quantizer.train_runs);
  read(q, "frozen_runs", c.quantizer.frozen_runs);
  read(q, "gamma0", c.quantizer.gamma0);
  read(q, "final_gamma", c.quantizer.final_gamma);

  const json& v = section(root, "value");
  reject_unknown(v, "value", {"time_nodes"});
  read(v, "time_nodes", c.value.time_nodes);

  const json& e = section(root, "evaluator");
  reject_unknown(e, "evaluator", {"runs", "census_runs"});
  read(e, "runs", c.evaluation_runs);
  read(e, "census_runs", c.census_runs);

  c.set_threads(c.threads);
  c.validate();
  return c;
}

PipelineConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str());
}

std::string to_json(const PipelineConfig& c) {
  const TankParams& p = c.tank;
  json root = {
      {"seed", c.seed},
      {"threads", c.threads},
      {"tank",
       {{"b1", p.b1}, {"b2", p.b2}, {"bc", p.bc}, {"bd", p.bd}, {"theta_ref", p.theta_ref},
        {"theta_in", p.theta_in}, {"l", p.l}, {"G", p.G}, {"K", p.K},
        {"p_control", p.p_control}, {"stuck_on_prob", p.stuck_on_prob}, {"h0", p.h0},
        {"theta0", p.theta0}, {"h_dry", p.h_dry}, {"h_low", p.h_low}, {"h_high", p.h_high},
        {"h_over", p.h_over}, {"theta_hot", p.theta_hot}, {"horizon", p.horizon},
        {"theta_solver", c.solver == ThetaSolver::ClosedForm ? "closed_form" : "adaptive"}}},
      {"reward", {{"alpha", p.alpha}, {"theta_normal", p.theta_normal}}},
      {"simulation",
       {{"max_jumps", c.simulation.max_jumps}, {"segment_bound", c.simulation.segment_bound}}},
      {"quantizer",
       {{"points", c.quantizer.points},
        {"calibration_runs", c.quantizer.calibration_runs},
        {"train_runs", c.quantizer.train_runs},
        {"frozen_runs", c.quantizer.frozen_runs},
        {"gamma0", c.quantizer.gamma0},
        {"final_gamma", c.quantizer.final_gamma}}},
      {"value", {{"time_nodes", c.value.time_nodes}}},
      {"evaluator", {{"runs", c.evaluation_runs}, {"census_runs", c.census_runs}}},
  };
  return root.dump(2);
}

}  // namespace pdmp::tank
