#include "pdmp/quantizer.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <mutex>
#include <string>

#include "pdmp/hash.hpp"
#include "pdmp/parallel.hpp"

namespace pdmp {
namespace {

constexpr std::size_t kChunk = 4096;
constexpr std::size_t kTrainBatch = 8192;

std::uint64_t sample_priority(std::uint64_t seed, std::size_t traj, int n) noexcept {
  return mix64(seed ^ mix64(static_cast<std::uint64_t>(traj) * 64u + static_cast<unsigned>(n) + 1u));
}

using Reservoir = std::vector<std::pair<std::uint64_t, Coords>>;

bool by_priority(const Reservoir::value_type& a, const Reservoir::value_type& b) {
  return a.first < b.first || (a.first == b.first && a.second < b.second);
}

// Keeps the `capacity` entries with the smallest priorities (max-heap).
void reservoir_push(Reservoir& r, std::size_t capacity, std::uint64_t prio, const Coords& c) {
  if (r.size() < capacity) {
    r.emplace_back(prio, c);
    std::push_heap(r.begin(), r.end(), by_priority);
  } else if (capacity > 0 && by_priority({prio, c}, r.front())) {
    std::pop_heap(r.begin(), r.end(), by_priority);
    r.back() = {prio, c};
    std::push_heap(r.begin(), r.end(), by_priority);
  }
}

std::vector<Coords> distinct_in_priority_order(const Reservoir& sorted, std::size_t limit) {
  std::vector<Coords> out;
  for (const auto& [prio, c] : sorted) {
    if (out.size() >= limit) break;
    if (std::find(out.begin(), out.end(), c) == out.end()) out.push_back(c);
  }
  return out;
}

std::vector<std::uint32_t> sorted_keys(
    const std::unordered_map<std::uint32_t, Calibration::Stratum>& m) {
  std::vector<std::uint32_t> keys;
  keys.reserve(m.size());
  for (const auto& [k, v] : m) keys.push_back(k);
  std::sort(keys.begin(), keys.end());
  return keys;
}

Trajectory simulate_for(const PdmpModel& model, const GridProvenance& prov, std::size_t i) {
  RandomStream rng = quantizer_stream(prov.seed, i);
  return simulate_trajectory(model, model.initial_state(), rng, prov.simulation());
}

}  // namespace

PointStatus status_of(TerminalCause cause) noexcept {
  switch (cause) {
    case TerminalCause::TopEvent: return PointStatus::TopEvent;
    case TerminalCause::Horizon: return PointStatus::Horizon;
    default: return PointStatus::Live;
  }
}

Coords Normalizer::normalize(const HybridState& z, double s) const noexcept {
  return {(z.x[0] - box_.lower[0]) / (box_.upper[0] - box_.lower[0]),
          (z.x[1] - box_.lower[1]) / (box_.upper[1] - box_.lower[1]), z.t / box_.horizon,
          s / box_.horizon};
}

HybridState Normalizer::state(ModeId mode, const Coords& c) const noexcept {
  return HybridState{mode,
                     {box_.lower[0] + c[0] * (box_.upper[0] - box_.lower[0]),
                      box_.lower[1] + c[1] * (box_.upper[1] - box_.lower[1])},
                     c[2] * box_.horizon};
}

double Normalizer::sojourn(const Coords& c) const noexcept { return c[3] * box_.horizon; }

double squared_distance(const Coords& a, const Coords& b) noexcept {
  double d = 0.0;
  for (std::size_t i = 0; i < kCoordDim; ++i) {
    const double e = a[i] - b[i];
    d += e * e;
  }
  return d;
}

void chain_samples(const Trajectory& traj, std::span<ChainSample> out) {
  const int m = traj.jump_count();
  const PointStatus absorbed = status_of(traj.cause);
  for (std::size_t n = 0; n < out.size(); ++n) {
    const int ni = static_cast<int>(n);
    if (ni <= m) {
      out[n] = {traj.jumps[n].z, traj.jumps[n].s, PointStatus::Live};
    } else if (absorbed != PointStatus::Live) {
      out[n] = {traj.terminal, ni == m + 1 ? traj.terminal_s : 0.0, absorbed};
    } else {
      throw std::logic_error("chain_samples: trajectory stopped before index " +
                             std::to_string(n));
    }
  }
}

void QuantizationGrid::reindex() {
  strata_.clear();
  for (std::uint32_t i = 0; i < points.size(); ++i) strata_[points[i].key()].push_back(i);
}

std::span<const std::uint32_t> QuantizationGrid::stratum(std::uint32_t key) const {
  const auto it = strata_.find(key);
  if (it == strata_.end()) return {};
  return it->second;
}

std::optional<std::uint32_t> QuantizationGrid::nearest(std::uint32_t key,
                                                       const Coords& c) const noexcept {
  const auto it = strata_.find(key);
  if (it == strata_.end()) return std::nullopt;
  std::uint32_t best = it->second.front();
  double best_d = std::numeric_limits<double>::infinity();
  for (std::uint32_t i : it->second) {  // ascending, so strict < keeps the lowest index
    const double d = squared_distance(points[i].coords, c);
    if (d < best_d) {
      best_d = d;
      best = i;
    }
  }
  return best;
}

std::uint32_t QuantizationGrid::project(std::uint32_t key, const Coords& c) const {
  if (auto i = nearest(key, c)) return *i;
  throw ProjectionError("grid " + std::to_string(index) + " has no point for mode " +
                        std::to_string(key / 4) + " status " + std::to_string(key % 4));
}

void QuantizationGrid::attract(std::uint32_t i, const Coords& sample, double gamma) noexcept {
  Coords& x = points[i].coords;
  for (std::size_t d = 0; d < kCoordDim; ++d) x[d] -= gamma * (x[d] - sample[d]);
}

LearningRate LearningRate::reaching(double gamma0, double final_gamma, double steps) noexcept {
  LearningRate r;
  r.gamma0 = gamma0;
  r.decay = (gamma0 / final_gamma - 1.0) / (gamma0 * std::max(1.0, steps));
  return r;
}

std::size_t QuantizerOptions::effective_calibration_runs() const noexcept {
  return std::max(calibration_runs, train_runs + frozen_runs);
}

void QuantizerOptions::validate() const {
  if (points < 1) throw std::invalid_argument("quantizer: points must be >= 1");
  if (frozen_runs < 1) throw std::invalid_argument("quantizer: frozen_runs must be >= 1");
  if (!(gamma0 > 0.0 && gamma0 <= 1.0)) {
    throw std::invalid_argument("quantizer: gamma0 must lie in (0, 1]");
  }
  if (!(final_gamma > 0.0 && final_gamma <= gamma0)) {
    throw std::invalid_argument("quantizer: final_gamma must lie in (0, gamma0]");
  }
}

std::uint64_t GridProvenance::input_hash() const noexcept {
  Fnv1a h;
  h.str("pdmp-grids-v1");
  h.u64(dynamics_hash).u64(seed).u64(static_cast<std::uint64_t>(max_jumps));
  h.u64(segment_bound ? 1 : 0).u64(static_cast<std::uint64_t>(options.points));
  h.u64(options.effective_calibration_runs()).u64(options.train_runs).u64(options.frozen_runs);
  h.f64(options.gamma0).f64(options.final_gamma);
  return h.value();
}

std::uint64_t content_hash(const GridSet& set) noexcept {
  Fnv1a h;
  h.str("pdmp-grid-content-v1").u64(set.provenance.input_hash());
  for (const QuantizationGrid& g : set.grids) {
    h.u64(static_cast<std::uint64_t>(g.index)).u64(g.points.size());
    for (const GridPoint& p : g.points) {
      h.u64(p.key());
      for (double c : p.coords) h.f64(c);
      h.f64(p.weight);
    }
    for (std::uint32_t o : g.transition.offsets) h.u64(o);
    for (std::uint32_t c : g.transition.cols) h.u64(c);
    for (double q : g.transition.probs) h.f64(q);
  }
  return h.value();
}

RandomStream quantizer_stream(std::uint64_t seed, std::size_t i) noexcept {
  return RandomStream::for_item(seed, StreamPurpose::Calibration, i);
}

Calibration calibrate(const PdmpModel& model, const GridProvenance& prov) {
  prov.options.validate();
  const Normalizer norm(model.state_box());
  const std::size_t last = static_cast<std::size_t>(prov.max_jumps);

  Calibration cal;
  cal.runs = prov.options.effective_calibration_runs();
  cal.capacity = static_cast<std::size_t>(prov.options.points);
  cal.by_index.resize(last + 1);

  std::mutex merge_mutex;
  parallel_chunks(ChunkPlan{cal.runs, kChunk}, prov.options.threads,
                  [&](std::size_t, std::size_t begin, std::size_t end) {
    std::vector<std::unordered_map<std::uint32_t, Calibration::Stratum>> local(last + 1);
    std::vector<ChainSample> chain(last + 1);
    for (std::size_t i = begin; i < end; ++i) {
      chain_samples(simulate_for(model, prov, i), chain);
      for (std::size_t n = 0; n <= last; ++n) {
        const ChainSample& cs = chain[n];
        auto& st = local[n][stratum_key(cs.z.mode, cs.status)];
        ++st.count;
        reservoir_push(st.reservoir, cal.capacity, sample_priority(prov.seed, i, static_cast<int>(n)),
                       norm.normalize(cs.z, cs.s));
      }
    }
    // Sums and smallest-priority subsets do not depend on merge order.
    std::lock_guard lock(merge_mutex);
    for (std::size_t n = 0; n <= last; ++n) {
      for (auto& [key, st] : local[n]) {
        auto& dst = cal.by_index[n][key];
        dst.count += st.count;
        for (const auto& [prio, c] : st.reservoir) reservoir_push(dst.reservoir, cal.capacity, prio, c);
      }
    }
  });

  for (auto& strata : cal.by_index) {
    for (auto& [key, st] : strata) std::sort(st.reservoir.begin(), st.reservoir.end(), by_priority);
  }
  return cal;
}

std::unordered_map<std::uint32_t, int> allocate_points(
    const std::unordered_map<std::uint32_t, Calibration::Stratum>& strata, std::size_t runs,
    int k) {
  std::unordered_map<std::uint32_t, int> alloc;
  const std::vector<std::uint32_t> keys = sorted_keys(strata);

  std::vector<std::uint32_t> large;
  std::uint64_t large_mass = 0;
  for (std::uint32_t key : keys) {
    const std::uint64_t c = strata.at(key).count;
    if (c * static_cast<std::uint64_t>(k) < runs) {
      alloc[key] = 1;  // frequency below 1/k
    } else {
      large.push_back(key);
      large_mass += c;
    }
  }

  const long remaining = static_cast<long>(k) - static_cast<long>(alloc.size());
  if (!large.empty()) {
    std::vector<std::pair<double, std::uint32_t>> remainders;
    long given = 0;
    for (std::uint32_t key : large) {
      const double quota = remaining > 0 ? static_cast<double>(remaining) *
                                               static_cast<double>(strata.at(key).count) /
                                               static_cast<double>(large_mass)
                                         : 0.0;
      const long base = static_cast<long>(std::floor(quota));
      alloc[key] = static_cast<int>(base);
      given += base;
      remainders.emplace_back(quota - static_cast<double>(base), key);
    }
    std::stable_sort(remainders.begin(), remainders.end(),
                     [](const auto& a, const auto& b) { return a.first > b.first; });
    for (std::size_t i = 0; given < remaining && i < remainders.size(); ++i, ++given) {
      ++alloc[remainders[i].second];
    }
    for (std::uint32_t key : large) alloc[key] = std::max(1, alloc[key]);
  }

  for (auto& [key, a] : alloc) {
    const auto distinct = distinct_in_priority_order(strata.at(key).reservoir,
                                                     static_cast<std::size_t>(a));
    a = std::max(1, static_cast<int>(distinct.size()));
  }
  return alloc;
}

GridSet stratified_init(const Calibration& calibration, const GridProvenance& prov) {
  GridSet set;
  set.provenance = prov;
  set.grids.resize(calibration.by_index.size());
  for (std::size_t n = 0; n < calibration.by_index.size(); ++n) {
    const auto& strata = calibration.by_index[n];
    const auto alloc = allocate_points(strata, calibration.runs, prov.options.points);
    QuantizationGrid& g = set.grids[n];
    g.index = static_cast<int>(n);
    for (std::uint32_t key : sorted_keys(strata)) {
      const int a = alloc.at(key);
      for (const Coords& c :
           distinct_in_priority_order(strata.at(key).reservoir, static_cast<std::size_t>(a))) {
        g.points.push_back(GridPoint{key / 4, static_cast<PointStatus>(key % 4), c, 0.0});
      }
    }
    g.reindex();
  }
  return set;
}

void clvq_train(GridSet& set, const PdmpModel& model, const Calibration& calibration) {
  const GridProvenance& prov = set.provenance;
  const QuantizerOptions& opts = prov.options;
  const Normalizer norm(model.state_box());
  const std::size_t width = set.grids.size();

  // One schedule per stratum, annealed over the number of samples the
  // stratum is expected to receive.
  struct Schedule {
    LearningRate rate;
    std::uint64_t step = 0;
  };
  std::vector<std::unordered_map<std::uint32_t, Schedule>> schedules(width);
  const double share = static_cast<double>(opts.train_runs) / static_cast<double>(calibration.runs);
  for (std::size_t n = 0; n < width; ++n) {
    for (const auto& [key, st] : calibration.by_index[n]) {
      schedules[n][key].rate = LearningRate::reaching(opts.gamma0, opts.final_gamma,
                                                      static_cast<double>(st.count) * share);
    }
  }

  std::vector<ChainSample> batch;
  for (std::size_t start = 0; start < opts.train_runs; start += kTrainBatch) {
    const std::size_t count = std::min(kTrainBatch, opts.train_runs - start);
    batch.assign(count * width, ChainSample{});
    parallel_chunks(ChunkPlan{count, 256}, opts.threads,
                    [&](std::size_t, std::size_t b, std::size_t e) {
      for (std::size_t i = b; i < e; ++i) {
        chain_samples(simulate_for(model, prov, start + i),
                      std::span(batch).subspan(i * width, width));
      }
    });
    // Updates within one grid are sequential in trajectory order; grids are
    // independent of each other.
    parallel_chunks(ChunkPlan{width, 1}, opts.threads, [&](std::size_t n, std::size_t, std::size_t) {
      QuantizationGrid& g = set.grids[n];
      for (std::size_t i = 0; i < count; ++i) {
        const ChainSample& cs = batch[i * width + n];
        const std::uint32_t key = stratum_key(cs.z.mode, cs.status);
        const Coords c = norm.normalize(cs.z, cs.s);
        const std::uint32_t j = g.project(key, c);
        Schedule& sch = schedules[n].at(key);
        g.attract(j, c, sch.rate.at(sch.step++));
      }
    });
  }
}

void estimate_transitions(GridSet& set, const PdmpModel& model, const GridSet* initial) {
  const GridProvenance& prov = set.provenance;
  const QuantizerOptions& opts = prov.options;
  const Normalizer norm(model.state_box());
  const std::size_t width = set.grids.size();
  const std::size_t first = opts.train_runs;
  const ChunkPlan plan{opts.frozen_runs, kChunk};

  std::vector<std::vector<std::uint64_t>> visits(width);
  for (std::size_t n = 0; n < width; ++n) visits[n].assign(set.grids[n].points.size(), 0);
  std::vector<std::unordered_map<std::uint64_t, std::uint64_t>> pairs(width);
  // Per-chunk distortion sums, reduced in chunk order for determinism.
  std::vector<double> sq(plan.chunks() * width, 0.0);
  std::vector<double> sq_init(plan.chunks() * width, 0.0);
  std::mutex merge_mutex;

  parallel_chunks(plan, opts.threads, [&](std::size_t chunk, std::size_t begin, std::size_t end) {
    std::vector<std::vector<std::uint64_t>> lv(width);
    for (std::size_t n = 0; n < width; ++n) lv[n].assign(set.grids[n].points.size(), 0);
    std::vector<std::unordered_map<std::uint64_t, std::uint64_t>> lp(width);
    std::vector<ChainSample> chain(width);
    for (std::size_t i = begin; i < end; ++i) {
      chain_samples(simulate_for(model, prov, first + i), chain);
      std::uint32_t prev = 0;
      for (std::size_t n = 0; n < width; ++n) {
        const ChainSample& cs = chain[n];
        const std::uint32_t key = stratum_key(cs.z.mode, cs.status);
        const Coords c = norm.normalize(cs.z, cs.s);
        const QuantizationGrid& g = set.grids[n];
        const std::uint32_t j = g.project(key, c);
        sq[chunk * width + n] += squared_distance(g.points[j].coords, c);
        if (initial != nullptr) {
          const QuantizationGrid& g0 = initial->grids[n];
          sq_init[chunk * width + n] += squared_distance(g0.points[g0.project(key, c)].coords, c);
        }
        ++lv[n][j];
        if (n > 0) ++lp[n - 1][(static_cast<std::uint64_t>(prev) << 32) | j];
        prev = j;
      }
    }
    std::lock_guard lock(merge_mutex);
    for (std::size_t n = 0; n < width; ++n) {
      for (std::size_t j = 0; j < lv[n].size(); ++j) visits[n][j] += lv[n][j];
      for (const auto& [pair, c] : lp[n]) pairs[n][pair] += c;
    }
  });

  const double runs = static_cast<double>(opts.frozen_runs);
  for (std::size_t n = 0; n < width; ++n) {
    QuantizationGrid& g = set.grids[n];
    double total = 0.0;
    double total_init = 0.0;
    for (std::size_t c = 0; c < plan.chunks(); ++c) {
      total += sq[c * width + n];
      total_init += sq_init[c * width + n];
    }
    g.distortion = total / runs;
    g.distortion_initial = initial != nullptr ? total_init / runs : g.distortion;
    g.visits = visits[n];
    for (std::size_t j = 0; j < g.points.size(); ++j) {
      g.points[j].weight = static_cast<double>(visits[n][j]) / runs;
    }
  }

  for (std::size_t n = 0; n + 1 < width; ++n) {
    QuantizationGrid& g = set.grids[n];
    const QuantizationGrid& next = set.grids[n + 1];
    std::vector<std::vector<std::pair<std::uint32_t, std::uint64_t>>> rows(g.points.size());
    for (const auto& [pair, c] : pairs[n]) {
      rows[pair >> 32].emplace_back(static_cast<std::uint32_t>(pair & 0xFFFFFFFFu), c);
    }
    for (auto& r : rows) std::sort(r.begin(), r.end());

    // Unvisited points carry no mass; they still get a row so that the
    // value recursion and the policy are defined everywhere. Borrow the row
    // of the nearest visited point of the stratum, else stay put.
    for (std::uint32_t i = 0; i < g.points.size(); ++i) {
      if (!rows[i].empty()) continue;
      const GridPoint& p = g.points[i];
      std::optional<std::uint32_t> donor;
      double best = std::numeric_limits<double>::infinity();
      for (std::uint32_t j : g.stratum(p.key())) {
        if (g.visits[j] == 0) continue;
        const double d = squared_distance(g.points[j].coords, p.coords);
        if (d < best) {
          best = d;
          donor = j;
        }
      }
      if (donor) {
        rows[i] = rows[*donor];
        continue;
      }
      Coords stay = p.coords;
      stay[3] = 0.0;
      std::optional<std::uint32_t> target = next.nearest(p.key(), stay);
      if (!target) {
        double bd = std::numeric_limits<double>::infinity();
        for (std::uint32_t j = 0; j < next.points.size(); ++j) {
          const double d = squared_distance(next.points[j].coords, stay);
          if (d < bd) {
            bd = d;
            target = j;
          }
        }
      }
      rows[i] = {{*target, 1}};
    }

    TransitionMatrix& t = g.transition;
    t = TransitionMatrix{};
    for (const auto& r : rows) {
      std::uint64_t sum = 0;
      for (const auto& [j, c] : r) sum += c;
      for (const auto& [j, c] : r) {
        t.cols.push_back(j);
        t.probs.push_back(static_cast<double>(c) / static_cast<double>(sum));
      }
      t.offsets.push_back(static_cast<std::uint32_t>(t.cols.size()));
    }
  }
  set.grids.back().transition = TransitionMatrix{};
}

GridSet build_grids(const PdmpModel& model, const GridProvenance& prov) {
  const Calibration cal = calibrate(model, prov);
  GridSet set = stratified_init(cal, prov);
  const GridSet initial = set;
  clvq_train(set, model, cal);
  estimate_transitions(set, model, &initial);
  return set;
}

}  // namespace pdmp
