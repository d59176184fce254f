// Copyright 2026 The adcc Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "adcc/mc.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "adcc/error.hpp"
#include "adcc/philox.hpp"

namespace adcc::mc {

namespace {

constexpr std::uint64_t kLookupStream = 0;
constexpr std::uint64_t kInteractionStream = 1;
constexpr std::uint64_t kEnergyStream = 0x4d43'0001;
constexpr std::uint64_t kXsStream = 0x4d43'0002;
constexpr std::uint64_t kXsStream5 = 0x4d43'0003;
constexpr std::uint64_t kMaterialStream = 0x4d43'0100;

// Probabilities and nuclide counts of the 12 materials of the reference
// reactor model (68-nuclide library).
constexpr std::array<double, kMaterials> kMaterialProb = {
    0.140, 0.052, 0.275, 0.134, 0.154, 0.064, 0.066, 0.055, 0.008, 0.015, 0.025, 0.013};
constexpr std::array<std::uint64_t, kMaterials> kBaseSizes = {34, 5, 4, 4, 27, 21,
                                                              21, 21, 21, 21, 9, 9};
constexpr std::uint64_t kBaseLibrary = 68;
constexpr std::uint64_t kPointWidth = 1 + kChannels;

std::uint64_t pick_material(double u) {
  double total = 0.0;
  for (double p : kMaterialProb) total += p;
  double running = 0.0;
  for (int m = 0; m < kMaterials; ++m) {
    running += kMaterialProb[m];
    if (u * total < running) return static_cast<std::uint64_t>(m);
  }
  return kMaterials - 1;
}

// Memory backends for the shared kernel.
struct HostMem {
  const Grids& g;
  double union_energy(std::uint64_t i) { return g.union_energy[i]; }
  std::int64_t index(std::uint64_t i) { return g.index_table[i]; }
  double grid(std::uint64_t i) { return g.nuclide_grid[i]; }
  std::int64_t mat_offset(std::uint64_t i) { return g.mat_offsets[i]; }
  std::int64_t mat_nuclide(std::uint64_t i) { return g.mat_nuclides[i]; }
};

struct EngineMem {
  Arena& a;
  const Handles& h;
  double union_energy(std::uint64_t i) { return a.load_f64(h.union_energy, i); }
  std::int64_t index(std::uint64_t i) { return a.load_i64(h.index_table, i); }
  double grid(std::uint64_t i) { return a.load_f64(h.nuclide_grid, i); }
  std::int64_t mat_offset(std::uint64_t i) { return a.load_i64(h.mat_offsets, i); }
  std::int64_t mat_nuclide(std::uint64_t i) { return a.load_i64(h.mat_nuclides, i); }
};

// Largest union index whose energy is <= e (0 below the grid).
template <class Mem>
std::uint64_t grid_search(Mem& mem, std::uint64_t n, double e) {
  std::uint64_t lower = 0, upper = n - 1, length = upper - lower;
  while (length > 1) {
    const std::uint64_t examine = lower + length / 2;
    if (mem.union_energy(examine) > e)
      upper = examine;
    else
      lower = examine;
    length = upper - lower;
  }
  return lower;
}

// Calls add(channel, value) once per nuclide and channel, in a fixed order.
template <class Mem, class Add>
Xs lookup(Mem& mem, const Grids& shape, double e, std::uint64_t material, Add&& add) {
  const std::uint64_t n_nuc = shape.n_nuclides, gp = shape.gridpoints;
  const std::uint64_t u = grid_search(mem, shape.union_size(), e);
  const auto lo_nuc = static_cast<std::uint64_t>(mem.mat_offset(material));
  const auto hi_nuc = static_cast<std::uint64_t>(mem.mat_offset(material + 1));
  Xs inc{};
  for (std::uint64_t t = lo_nuc; t < hi_nuc; ++t) {
    const auto nuc = static_cast<std::uint64_t>(mem.mat_nuclide(t));
    const auto g = static_cast<std::uint64_t>(mem.index(u * n_nuc + nuc));
    const std::uint64_t lo = (nuc * gp + g) * kPointWidth;
    const std::uint64_t hi = gp > 1 ? lo + kPointWidth : lo;
    const double e_lo = mem.grid(lo), e_hi = mem.grid(hi);
    double f = e_hi > e_lo ? (e_hi - e) / (e_hi - e_lo) : 0.0;
    f = std::clamp(f, 0.0, 1.0);
    for (int c = 0; c < kChannels; ++c) {
      const double x_lo = mem.grid(lo + 1 + c), x_hi = mem.grid(hi + 1 + c);
      const double xs = x_hi - f * (x_hi - x_lo);
      inc[c] += xs;
      add(c, xs);
    }
  }
  return inc;
}

// Executes lookups [start, n_lookups). `out` tracks progress so a crash
// leaves the completed counts behind.
void segment(Arena& arena, const Handles& h, const Config& config, const Grids& grids,
             std::uint64_t start, Persistence persistence, const Hooks& hooks, RunResult& out) {
  SimEngine& engine = arena.engine();
  EngineMem mem{arena, h};
  const std::uint64_t period = config.effective_flush_period();
  auto add = [&](int c, double xs) { arena.store_f64(h.macro_xs, c, arena.load_f64(h.macro_xs, c) + xs); };
  for (std::uint64_t i = start; i < config.n_lookups; ++i) {
    if (persistence == Persistence::kIndexOnly) {
      arena.store_i64(h.lookup_index, 0, static_cast<std::int64_t>(i));
      arena.flush_element(h.lookup_index, 0);
    }
    const Sample s = sample(config.seed, i);
    const Xs inc = lookup(mem, grids, s.energy, s.material, add);
    const int type = select_interaction(inc, s.u);
    const ArrayHandle& ctr = h.counters[type - 1];
    arena.store_i64(ctr, 0, arena.load_i64(ctr, 0) + 1);
    ++out.lookups;
    engine.maybe_fire_crash(kLookupEndLabel);
    if ((i + 1) % period != 0) continue;
    if (persistence == Persistence::kPeriodic) {
      arena.store_i64(h.lookup_index, 0, static_cast<std::int64_t>(i + 1));
      arena.flush_range(h.macro_xs, 0, kChannels);
      for (const auto& c : h.counters) arena.flush_element(c, 0);
      arena.flush_element(h.lookup_index, 0);
    }
    if (hooks.round) hooks.round(arena, h, i + 1);
    if (persistence == Persistence::kPeriodic || hooks.round) {
      ++out.flush_rounds;
      engine.maybe_fire_crash(kFlushRoundLabel);
    }
  }
  Counts c;
  for (int k = 0; k < kChannels; ++k) {
    c.counters[k] = static_cast<std::uint64_t>(arena.load_i64(h.counters[k], 0));
    c.macro_xs[k] = arena.load_f64(h.macro_xs, k);
  }
  c.lookups = out.lookups;
  c.flush_rounds = out.flush_rounds;
  out.outcome = c;
}

}  // namespace

void Config::validate() const {
  if (n_nuclides == 0) throw Error(ErrorCode::kInvalidConfig, "n_nuclides must be >= 1");
  if (gridpoints == 0) throw Error(ErrorCode::kInvalidConfig, "gridpoints must be >= 1");
}

std::uint64_t Config::effective_flush_period() const {
  if (flush_period > 0) return flush_period;
  // ceil(n_lookups / 10^4)
  return std::max<std::uint64_t>(1, (n_lookups + 9'999) / 10'000);
}

std::array<std::uint64_t, kMaterials> material_sizes(std::uint64_t n_nuclides) {
  std::array<std::uint64_t, kMaterials> out{};
  for (int m = 0; m < kMaterials; ++m) {
    const auto scaled = static_cast<std::uint64_t>(
        std::llround(static_cast<double>(kBaseSizes[m] * n_nuclides) / kBaseLibrary));
    out[m] = std::clamp<std::uint64_t>(scaled, 1, n_nuclides);
  }
  return out;
}

Grids build_grids(const Config& config) {
  config.validate();
  const std::uint64_t n_nuc = config.n_nuclides, gp = config.gridpoints;
  const CounterRng rng(config.seed);
  Grids g;
  g.n_nuclides = n_nuc;
  g.gridpoints = gp;
  g.nuclide_grid.resize(n_nuc * gp * kPointWidth);
  std::vector<std::vector<double>> energies(n_nuc);
  for (std::uint64_t nuc = 0; nuc < n_nuc; ++nuc) {
    auto& e = energies[nuc];
    e.resize(gp);
    for (std::uint64_t p = 0; p < gp; ++p)
      e[p] = CounterRng::unit_open(rng.draw(nuc * gp + p, kEnergyStream)[0]);
    std::sort(e.begin(), e.end());
    for (std::uint64_t p = 1; p < gp; ++p)
      if (e[p] <= e[p - 1]) e[p] = std::nextafter(e[p - 1], 2.0);
    for (std::uint64_t p = 0; p < gp; ++p) {
      const std::uint64_t idx = nuc * gp + p;
      double* point = &g.nuclide_grid[idx * kPointWidth];
      const auto w = rng.draw(idx, kXsStream);
      point[0] = e[p];
      if (config.symmetric_channels) {
        for (int c = 0; c < kChannels; ++c) point[1 + c] = CounterRng::unit_open(w[0]);
      } else {
        for (int c = 0; c < 4; ++c) point[1 + c] = CounterRng::unit_open(w[c]);
        point[5] = CounterRng::unit_open(rng.draw(idx, kXsStream5)[0]);
      }
    }
  }

  for (const auto& e : energies) g.union_energy.insert(g.union_energy.end(), e.begin(), e.end());
  std::sort(g.union_energy.begin(), g.union_energy.end());

  g.index_table.resize(g.union_energy.size() * n_nuc);
  for (std::uint64_t nuc = 0; nuc < n_nuc; ++nuc) {
    const auto& e = energies[nuc];
    std::uint64_t p = 0;
    for (std::uint64_t u = 0; u < g.union_energy.size(); ++u) {
      while (p + 1 < gp && e[p + 1] <= g.union_energy[u]) ++p;
      g.index_table[u * n_nuc + nuc] =
          static_cast<std::int64_t>(gp >= 2 ? std::min<std::uint64_t>(p, gp - 2) : 0);
    }
  }

  const auto sizes = material_sizes(n_nuc);
  g.mat_offsets.push_back(0);
  for (int m = 0; m < kMaterials; ++m) {
    std::vector<std::int64_t> pool(n_nuc);
    std::iota(pool.begin(), pool.end(), 0);
    // Fuel takes the first nuclides of the library; the rest draw subsets.
    if (m > 0) {
      for (std::uint64_t t = 0; t < sizes[m]; ++t) {
        const auto bits = rng.draw(static_cast<std::uint64_t>(m) * n_nuc + t, kMaterialStream)[0];
        std::swap(pool[t], pool[t + bits % (n_nuc - t)]);
      }
      std::sort(pool.begin(), pool.begin() + static_cast<std::ptrdiff_t>(sizes[m]));
    }
    g.mat_nuclides.insert(g.mat_nuclides.end(), pool.begin(),
                          pool.begin() + static_cast<std::ptrdiff_t>(sizes[m]));
    g.mat_offsets.push_back(static_cast<std::int64_t>(g.mat_nuclides.size()));
  }
  return g;
}

Sample sample(std::uint64_t seed, std::uint64_t i) {
  const CounterRng rng(seed);
  const auto bits = rng.draw(i, kLookupStream);
  return {CounterRng::unit_open(bits[0]), pick_material(CounterRng::unit_open(bits[1])),
          CounterRng::unit_open(rng.draw(i, kInteractionStream)[0])};
}

Xs normalized_cdf(const Xs& xs) {
  Xs cdf{};
  double run = 0.0;
  for (int k = 0; k < kChannels; ++k) {
    if (!(xs[k] >= 0.0) || !std::isfinite(xs[k]))
      throw Error(ErrorCode::kInvalidArgument, "cross sections must be finite and >= 0");
    run += xs[k];
    cdf[k] = run;
  }
  if (run == 0.0) throw Error(ErrorCode::kDegenerateVector, "all five cross sections are zero");
  for (auto& v : cdf) v /= run;
  return cdf;
}

int select_interaction(const Xs& xs, double u) {
  if (!(u >= 0.0 && u < 1.0)) throw Error(ErrorCode::kInvalidArgument, "u must lie in [0, 1)");
  const Xs cdf = normalized_cdf(xs);
  int below = 0;
  for (int k = 0; k < kChannels - 1; ++k)
    if (cdf[k] <= u) ++below;
  return below == 0 ? kChannels : below;
}

Xs lookup_increment(const Grids& grids, double energy, std::uint64_t material) {
  HostMem mem{grids};
  return lookup(mem, grids, energy, material, [](int, double) {});
}

Handles allocate(Arena& arena, const Grids& grids) {
  Handles h;
  h.union_energy = arena.alloc_f64("union_energy", grids.union_energy.size(), grids.union_energy);
  h.index_table = arena.alloc_i64("index_table", grids.index_table.size(), grids.index_table);
  h.nuclide_grid = arena.alloc_f64("nuclide_grid", grids.nuclide_grid.size(), grids.nuclide_grid);
  h.mat_offsets = arena.alloc_i64("mat_offsets", grids.mat_offsets.size(), grids.mat_offsets);
  h.mat_nuclides = arena.alloc_i64("mat_nuclides", grids.mat_nuclides.size(), grids.mat_nuclides);
  h.macro_xs = arena.alloc_f64("macro_xs", kChannels);
  for (int k = 0; k < kChannels; ++k)
    h.counters[k] = arena.alloc_i64("counter_" + std::to_string(k + 1), 1);
  h.lookup_index = arena.alloc_i64("lookup_index", 1);
  return h;
}

RunResult run_with(const Config& config, const Grids& grids, SimEngine& engine,
                   const CrashPlan& plan, Persistence persistence, const Hooks& hooks,
                   const std::optional<State>& resume_from) {
  config.validate();
  engine.set_crash_plan(plan);
  Arena arena(engine);
  RunResult out;
  const Handles& h = out.handles = allocate(arena, grids);
  if (hooks.extra_allocations) hooks.extra_allocations(arena);
  if (resume_from) {
    if (resume_from->next_index > config.n_lookups)
      throw Error(ErrorCode::kInconsistentRestartState,
                  "lookup index " + std::to_string(resume_from->next_index) + " is out of range");
    arena.persist_f64(h.macro_xs, 0, resume_from->macro_xs);
    for (int k = 0; k < kChannels; ++k) {
      const auto v = static_cast<std::int64_t>(resume_from->counters[k]);
      arena.persist_i64(h.counters[k], 0, std::span(&v, 1));
    }
    const auto idx = static_cast<std::int64_t>(resume_from->next_index);
    arena.persist_i64(h.lookup_index, 0, std::span(&idx, 1));
    out.start_index = resume_from->next_index;
  }
  try {
    segment(arena, h, config, grids, out.start_index, persistence, hooks, out);
  } catch (const CrashFired&) {
    out.outcome = CrashOutcome{engine.crash()};
  }
  return out;
}

RunResult run(const Config& config, const Grids& grids, SimEngine& engine, const CrashPlan& plan) {
  return run_with(config, grids, engine, plan,
                  config.flushing ? Persistence::kPeriodic : Persistence::kIndexOnly);
}

State read_state(const NvmImage& snapshot, const Handles& h) {
  State st;
  const auto idx = Arena::read_i64(snapshot, h.lookup_index, 0);
  if (idx < 0)
    throw Error(ErrorCode::kInconsistentRestartState, "persisted lookup index is negative");
  st.next_index = static_cast<std::uint64_t>(idx);
  for (int k = 0; k < kChannels; ++k) {
    st.counters[k] = static_cast<std::uint64_t>(Arena::read_i64(snapshot, h.counters[k], 0));
    st.macro_xs[k] = Arena::read_f64(snapshot, h.macro_xs, k);
  }
  return st;
}

RunResult restart(const NvmImage& snapshot, const Config& config, const Grids& grids,
                  SimEngine& fresh_engine, const CrashPlan& plan) {
  // The layout is deterministic, so handles from a scratch arena match the
  // crashed run's.
  SimEngine probe(fresh_engine.config());
  Arena scratch(probe);
  const Handles h = allocate(scratch, grids);
  return run_with(config, grids, fresh_engine, plan,
                  config.flushing ? Persistence::kPeriodic : Persistence::kIndexOnly, {},
                  read_state(snapshot, h));
}

Counts reference_counts(const Config& config, const Grids& grids) {
  config.validate();
  HostMem mem{grids};
  const std::uint64_t period = config.effective_flush_period();
  Counts c;
  auto add = [&](int ch, double xs) { c.macro_xs[ch] += xs; };
  for (std::uint64_t i = 0; i < config.n_lookups; ++i) {
    const Sample s = sample(config.seed, i);
    const Xs inc = lookup(mem, grids, s.energy, s.material, add);
    ++c.counters[select_interaction(inc, s.u) - 1];
    ++c.lookups;
    if (config.flushing && (i + 1) % period == 0) ++c.flush_rounds;
  }
  return c;
}

double max_pairwise_deviation(const Counters& c, std::uint64_t n_lookups) {
  const auto [lo, hi] = std::minmax_element(c.begin(), c.end());
  if (n_lookups == 0) return 0.0;
  return 100.0 * static_cast<double>(*hi - *lo) / static_cast<double>(n_lookups);
}

}  // namespace adcc::mc
