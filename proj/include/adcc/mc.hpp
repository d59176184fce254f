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

#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <optional>
#include <variant>
#include <vector>

#include "adcc/arena.hpp"
#include "adcc/sim_engine.hpp"

namespace adcc::mc {

inline constexpr const char* kLookupEndLabel = "lookup_end";
inline constexpr const char* kFlushRoundLabel = "flush_round";
inline constexpr int kChannels = 5;
inline constexpr int kMaterials = 12;

using Xs = std::array<double, kChannels>;
using Counters = std::array<std::uint64_t, kChannels>;

struct Config {
  std::uint64_t n_nuclides = 34;
  std::uint64_t gridpoints = 300;  // per nuclide
  std::uint64_t n_lookups = 1'000'000;
  /// Lookups between flush rounds; 0 derives max(1, ceil(n_lookups * 1e-4)).
  std::uint64_t flush_period = 0;
  std::uint64_t seed = 42;
  /// false is the baseline that flushes only the lookup index.
  bool flushing = true;
  /// All five channels of a gridpoint share one value, so every interaction
  /// type has probability exactly 1/5. Otherwise channels are i.i.d. and the
  /// finite grid biases the shares by a few percent.
  bool symmetric_channels = false;

  void validate() const;
  std::uint64_t effective_flush_period() const;
};

/// Host copy of the read-only lookup tables.
struct Grids {
  std::uint64_t n_nuclides = 0;
  std::uint64_t gridpoints = 0;
  std::vector<double> union_energy;       // sorted, n_nuclides * gridpoints
  std::vector<std::int64_t> index_table;  // union point x nuclide -> lower gridpoint
  std::vector<double> nuclide_grid;       // (nuclide, gridpoint) x {energy, xs1..xs5}
  std::vector<std::int64_t> mat_offsets;  // kMaterials + 1
  std::vector<std::int64_t> mat_nuclides;

  std::uint64_t union_size() const { return union_energy.size(); }
  bool operator==(const Grids&) const = default;
};

/// Deterministic in config.seed. Cross sections are uniform(0, 1).
Grids build_grids(const Config& config);

/// Material nuclide counts for a given library size (12 materials, fuel first).
std::array<std::uint64_t, kMaterials> material_sizes(std::uint64_t n_nuclides);

struct Sample {
  double energy;
  std::uint64_t material;
  double u;  // interaction draw, separate stream
};

/// Pure function of (seed, i).
Sample sample(std::uint64_t seed, std::uint64_t i);

/// Normalized CDF of the five values (divided by the last CDF entry).
/// Throws kDegenerateVector when all are zero, kInvalidArgument on negatives.
Xs normalized_cdf(const Xs& xs);

/// Interaction type in 1..5: type k when cdf[k] <= u < cdf[k + 1] for k = 1..4,
/// and type 5 when u < cdf[1].
int select_interaction(const Xs& xs, double u);

/// Host-side increment of one lookup (no engine); the scalar oracle.
Xs lookup_increment(const Grids& grids, double energy, std::uint64_t material);

struct Handles {
  ArrayHandle union_energy, index_table, nuclide_grid, mat_offsets, mat_nuclides;
  ArrayHandle macro_xs;
  std::array<ArrayHandle, kChannels> counters;  // one line each
  ArrayHandle lookup_index;                     // next lookup to execute
};

Handles allocate(Arena& arena, const Grids& grids);

struct Counts {
  Counters counters{};
  Xs macro_xs{};
  std::uint64_t lookups = 0;       // executed in this segment
  std::uint64_t flush_rounds = 0;  // in this segment
};

struct RunResult {
  Handles handles;
  std::uint64_t start_index = 0;
  std::uint64_t lookups = 0;       // completed before the crash (or all)
  std::uint64_t flush_rounds = 0;  // completed before the crash (or all)
  std::variant<Counts, CrashOutcome> outcome;

  bool crashed() const { return std::holds_alternative<CrashOutcome>(outcome); }
};

RunResult run(const Config& config, const Grids& grids, SimEngine& engine, const CrashPlan& plan);

/// What the loop persists by itself.
enum class Persistence {
  kNone,       // nothing flushed (native)
  kIndexOnly,  // lookup index flushed at the start of every lookup
  kPeriodic,   // macro_xs, counters and index flushed every flush period
};

/// Restartable loop state.
struct State {
  std::uint64_t next_index = 0;
  Counters counters{};
  Xs macro_xs{};
};

struct Hooks {
  std::function<void(Arena&)> extra_allocations;
  /// Called every flush period with the index of the next lookup.
  std::function<void(Arena&, const Handles&, std::uint64_t next_index)> round;
};

/// General driver. `resume_from` is persist-initialized before the loop starts.
RunResult run_with(const Config& config, const Grids& grids, SimEngine& engine,
                   const CrashPlan& plan, Persistence persistence, const Hooks& hooks = {},
                   const std::optional<State>& resume_from = std::nullopt);

/// Loop state as persisted in a snapshot.
State read_state(const NvmImage& snapshot, const Handles& h);

/// Reloads counters, macro_xs and the lookup index from the snapshot into a
/// fresh engine and runs the remaining lookups.
RunResult restart(const NvmImage& snapshot, const Config& config, const Grids& grids,
                  SimEngine& fresh_engine, const CrashPlan& plan = CrashPlan::never());

/// Plain host kernel; equals an uncrashed engine run exactly.
Counts reference_counts(const Config& config, const Grids& grids);

/// Largest |c_a - c_b| over counter pairs, in percentage points of n_lookups.
double max_pairwise_deviation(const Counters& c, std::uint64_t n_lookups);

}  // namespace adcc::mc
