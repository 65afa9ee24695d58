#include "pdmp/artifacts.hpp"

#include <array>
#include <cstring>
#include <fstream>
#include <string>
#include <type_traits>

#include <fmt/format.h>
#include <fmt/os.h>

namespace pdmp {
namespace {

constexpr std::array<char, 8> kGridMagic{'P', 'D', 'M', 'P', 'G', 'R', 'I', 'D'};
constexpr std::array<char, 8> kValueMagic{'P', 'D', 'M', 'P', 'V', 'A', 'L', 'S'};

class Writer {
 public:
  explicit Writer(const std::filesystem::path& path) : out_(path, std::ios::binary) {
    if (!out_) throw ArtifactError("cannot write " + path.string());
  }
  template <class T>
  void put(const T& v) {
    static_assert(std::is_trivially_copyable_v<T>);
    out_.write(reinterpret_cast<const char*>(&v), sizeof(T));
  }
  template <class T>
  void put_vector(const std::vector<T>& v) {
    put<std::uint64_t>(v.size());
    if (!v.empty()) out_.write(reinterpret_cast<const char*>(v.data()), sizeof(T) * v.size());
  }
  void finish(const std::filesystem::path& path) {
    out_.flush();
    if (!out_) throw ArtifactError("write failed for " + path.string());
  }

 private:
  std::ofstream out_;
};

class Reader {
 public:
  explicit Reader(const std::filesystem::path& path) : in_(path, std::ios::binary), path_(path) {
    if (!in_) throw ArtifactError("cannot open " + path.string());
  }
  template <class T>
  T get() {
    T v{};
    in_.read(reinterpret_cast<char*>(&v), sizeof(T));
    if (!in_) throw ArtifactError("truncated artifact " + path_.string());
    return v;
  }
  template <class T>
  std::vector<T> get_vector() {
    const auto n = get<std::uint64_t>();
    if (n > (std::uint64_t{1} << 34)) throw ArtifactError("corrupt length in " + path_.string());
    std::vector<T> v(n);
    if (n > 0) in_.read(reinterpret_cast<char*>(v.data()), static_cast<std::streamsize>(sizeof(T) * n));
    if (!in_) throw ArtifactError("truncated artifact " + path_.string());
    return v;
  }
  void expect_magic(const std::array<char, 8>& magic, std::uint32_t version) {
    const auto m = get<std::array<char, 8>>();
    if (m != magic) throw ArtifactError(path_.string() + " is not the expected artifact type");
    const auto v = get<std::uint32_t>();
    if (v != version) {
      throw ArtifactError(fmt::format("{} has format version {}, expected {}", path_.string(), v,
                                      version));
    }
  }

 private:
  std::ifstream in_;
  std::filesystem::path path_;
};

void put_provenance(Writer& w, const GridProvenance& p) {
  w.put(p.dynamics_hash);
  w.put(p.seed);
  w.put<std::int32_t>(p.max_jumps);
  w.put<std::uint8_t>(p.segment_bound ? 1 : 0);
  w.put<std::int32_t>(p.options.points);
  w.put<std::uint64_t>(p.options.effective_calibration_runs());
  w.put<std::uint64_t>(p.options.train_runs);
  w.put<std::uint64_t>(p.options.frozen_runs);
  w.put(p.options.gamma0);
  w.put(p.options.final_gamma);
}

GridProvenance get_provenance(Reader& r) {
  GridProvenance p;
  p.dynamics_hash = r.get<std::uint64_t>();
  p.seed = r.get<std::uint64_t>();
  p.max_jumps = r.get<std::int32_t>();
  p.segment_bound = r.get<std::uint8_t>() != 0;
  p.options.points = r.get<std::int32_t>();
  p.options.calibration_runs = r.get<std::uint64_t>();
  p.options.train_runs = r.get<std::uint64_t>();
  p.options.frozen_runs = r.get<std::uint64_t>();
  p.options.gamma0 = r.get<double>();
  p.options.final_gamma = r.get<double>();
  return p;
}

const char* status_name(PointStatus s) {
  switch (s) {
    case PointStatus::Live: return "live";
    case PointStatus::TopEvent: return "top";
    case PointStatus::Horizon: return "horizon";
  }
  return "?";
}

}  // namespace

void save_grids(const GridSet& grids, const std::filesystem::path& path) {
  Writer w(path);
  w.put(kGridMagic);
  w.put(kGridFormatVersion);
  put_provenance(w, grids.provenance);
  w.put(grids.provenance.input_hash());
  w.put(content_hash(grids));
  w.put<std::uint64_t>(grids.grids.size());
  for (const QuantizationGrid& g : grids.grids) {
    w.put<std::int32_t>(g.index);
    w.put<std::uint64_t>(g.points.size());
    for (const GridPoint& p : g.points) {
      w.put(p.mode);
      w.put(static_cast<std::uint8_t>(p.status));
      w.put(p.coords);
      w.put(p.weight);
    }
    w.put_vector(g.visits);
    w.put(g.distortion_initial);
    w.put(g.distortion);
    w.put_vector(g.transition.offsets);
    w.put_vector(g.transition.cols);
    w.put_vector(g.transition.probs);
  }
  w.finish(path);
}

GridProvenance peek_grid_provenance(const std::filesystem::path& path) {
  Reader r(path);
  r.expect_magic(kGridMagic, kGridFormatVersion);
  return get_provenance(r);
}

GridSet load_grids(const std::filesystem::path& path) {
  Reader r(path);
  r.expect_magic(kGridMagic, kGridFormatVersion);
  GridSet set;
  set.provenance = get_provenance(r);
  const auto input_hash = r.get<std::uint64_t>();
  const auto stored_content = r.get<std::uint64_t>();
  if (input_hash != set.provenance.input_hash()) {
    throw ArtifactError(path.string() + ": header hash does not match its provenance");
  }
  const auto count = r.get<std::uint64_t>();
  if (count > 4096) throw ArtifactError(path.string() + ": implausible grid count");
  set.grids.resize(count);
  for (QuantizationGrid& g : set.grids) {
    g.index = r.get<std::int32_t>();
    const auto n = r.get<std::uint64_t>();
    if (n > (std::uint64_t{1} << 26)) throw ArtifactError(path.string() + ": implausible grid size");
    g.points.resize(n);
    for (GridPoint& p : g.points) {
      p.mode = r.get<ModeId>();
      p.status = static_cast<PointStatus>(r.get<std::uint8_t>());
      p.coords = r.get<Coords>();
      p.weight = r.get<double>();
    }
    g.visits = r.get_vector<std::uint64_t>();
    g.distortion_initial = r.get<double>();
    g.distortion = r.get<double>();
    g.transition.offsets = r.get_vector<std::uint32_t>();
    g.transition.cols = r.get_vector<std::uint32_t>();
    g.transition.probs = r.get_vector<double>();
    g.reindex();
  }
  if (content_hash(set) != stored_content) {
    throw ArtifactError(path.string() + ": content hash mismatch (file corrupted)");
  }
  return set;
}

void save_values(const ValueTable& values, const std::filesystem::path& path) {
  Writer w(path);
  w.put(kValueMagic);
  w.put(kValueFormatVersion);
  w.put(values.grid_hash);
  w.put(values.reward_hash);
  w.put<std::int32_t>(values.time_nodes);
  w.put<std::uint64_t>(values.by_index.size());
  for (const auto& row : values.by_index) {
    w.put<std::uint64_t>(row.size());
    for (const ValueEntry& e : row) {
      w.put(e.value);
      w.put(e.u_star);
      w.put(static_cast<std::uint8_t>(e.branch));
      w.put(e.stop_value);
      w.put(e.continuation);
    }
  }
  w.finish(path);
}

ValueTable load_values(const std::filesystem::path& path) {
  Reader r(path);
  r.expect_magic(kValueMagic, kValueFormatVersion);
  ValueTable t;
  t.grid_hash = r.get<std::uint64_t>();
  t.reward_hash = r.get<std::uint64_t>();
  t.time_nodes = r.get<std::int32_t>();
  const auto count = r.get<std::uint64_t>();
  if (count > 4096) throw ArtifactError(path.string() + ": implausible index count");
  t.by_index.resize(count);
  for (auto& row : t.by_index) {
    const auto n = r.get<std::uint64_t>();
    if (n > (std::uint64_t{1} << 26)) throw ArtifactError(path.string() + ": implausible row size");
    row.resize(n);
    for (ValueEntry& e : row) {
      e.value = r.get<double>();
      e.u_star = r.get<double>();
      e.branch = static_cast<Branch>(r.get<std::uint8_t>());
      e.stop_value = r.get<double>();
      e.continuation = r.get<double>();
    }
  }
  return t;
}

void export_grids_csv(const GridSet& grids, const PdmpModel& model,
                      const std::filesystem::path& path) {
  auto out = fmt::output_file(path.string());
  out.print("n,point,mode,status,h,theta,t,s,weight\n");
  const Normalizer norm(model.state_box());
  for (const QuantizationGrid& g : grids.grids) {
    for (std::size_t i = 0; i < g.points.size(); ++i) {
      const GridPoint& p = g.points[i];
      const HybridState z = norm.state(p.mode, p.coords);
      out.print("{},{},{},{},{:.10g},{:.10g},{:.10g},{:.10g},{:.10g}\n", g.index, i, p.mode,
                status_name(p.status), z.x[0], z.x[1], z.t, norm.sojourn(p.coords), p.weight);
    }
  }
}

void export_values_csv(const ValueTable& values, const std::filesystem::path& path) {
  auto out = fmt::output_file(path.string());
  out.print("n,point,value,u_star,branch,stop_value,continuation\n");
  for (std::size_t n = 0; n < values.by_index.size(); ++n) {
    const auto& row = values.by_index[n];
    for (std::size_t i = 0; i < row.size(); ++i) {
      const ValueEntry& e = row[i];
      out.print("{},{},{:.10g},{:.10g},{},{:.10g},{:.10g}\n", n, i, e.value, e.u_star,
                e.branch == Branch::Stop ? "stop" : "continue", e.stop_value, e.continuation);
    }
  }
}

void write_campaign_summary_csv(const std::filesystem::path& path,
                                std::span<const std::pair<std::string, CampaignStats>> rows) {
  auto out = fmt::output_file(path.string());
  out.print(
      "campaign,runs,mean,stderr,null_gain,h_normal,theta_normal,top_h4,top_h10,top_theta100,"
      "non_top,horizon,jump_budget,maintenance,fallback,tau_1000,near_h6,near_h7,near_h8\n");
  for (const auto& [name, s] : rows) {
    out.print("{},{},{:.6f},{:.6f},{:.6f},{:.6f},{:.6f},{:.6f},{:.6f},{:.6f},{:.6f},{:.6f},{:.6f},"
              "{:.6f},{:.6f},{:.6f},{:.6f},{:.6f},{:.6f}\n",
              name, s.runs, s.mean(), s.stderr_mean(), s.fraction(s.null_gain),
              s.fraction(s.level_normal), s.fraction(s.temp_normal), s.fraction(s.top_dry),
              s.fraction(s.top_overflow), s.fraction(s.top_hot),
              s.fraction(s.runs - s.top_events()), s.fraction(s.horizon),
              s.fraction(s.jump_budget), s.fraction(s.maintenance), s.fraction(s.fallback),
              s.fraction(s.time.counts.back()), s.fraction(s.near_level[0]),
              s.fraction(s.near_level[1]), s.fraction(s.near_level[2]));
  }
}

void write_histograms_csv(const CampaignStats& stats, const std::filesystem::path& dir,
                          const std::string& prefix) {
  const std::pair<const char*, const Histogram*> hists[] = {
      {"time", &stats.time}, {"level", &stats.level}, {"temperature", &stats.temperature}};
  for (const auto& [name, h] : hists) {
    auto out = fmt::output_file((dir / fmt::format("{}_{}_hist.csv", prefix, name)).string());
    out.print("bin_lo,bin_hi,count,fraction\n");
    for (std::size_t i = 0; i < h->counts.size(); ++i) {
      out.print("{:.6g},{:.6g},{},{:.6f}\n", h->edge(i), h->edge(i + 1), h->counts[i],
                stats.fraction(h->counts[i]));
    }
  }
}

void write_census_csv(const ModeCensus& census, std::span<const std::size_t> theoretical,
                      const std::filesystem::path& path) {
  auto out = fmt::output_file(path.string());
  out.print("n,theoretical,observed,trajectories,modes\n");
  for (std::size_t n = 0; n < census.counts.size(); ++n) {
    std::uint64_t alive = 0;
    std::string modes;
    for (std::size_t m = 0; m < census.counts[n].size(); ++m) {
      if (census.counts[n][m] == 0) continue;
      alive += census.counts[n][m];
      if (!modes.empty()) modes += ';';
      modes += std::to_string(m);
    }
    const std::size_t theory = n < theoretical.size() ? theoretical[n] : 0;
    out.print("{},{},{},{},{}\n", n, theory, census.distinct(n), alive, modes);
  }
}

}  // namespace pdmp
