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

#include <cstdint>
#include <functional>
#include <optional>
#include <variant>
#include <vector>

#include "adcc/arena.hpp"
#include "adcc/sim_engine.hpp"
#include "adcc/sparse_matrix.hpp"

namespace adcc {

namespace cg {

inline constexpr double kDefaultTolerance = 1e-8;
inline constexpr const char* kIterEndLabel = "iter_end";

struct Problem {
  CsrMatrix a;
  std::vector<double> b;
  std::vector<double> x0;  // empty means zero

  std::uint64_t n() const { return a.n; }
  /// Bytes of p, q, r and z history written by one iteration.
  std::uint64_t history_bytes_per_iteration() const { return 4 * 8 * a.n; }
};

/// Seeded SPD problem: random_spd(n, offdiag_per_row, seed) with a random b.
Problem make_problem(std::uint64_t n, std::uint64_t offdiag_per_row, std::uint64_t seed);

struct Options {
  std::uint64_t max_iters = 20;
  /// In-loop ||r - (b - A z)|| / ||b|| diagnostic. Costs an extra mat-vec per iteration.
  bool check_residual = false;
};

/// Arena objects of a history-extended CG run. Row i of p/q/r/z holds the
/// iteration-i version: p, r, z rows 1 are the initial state, iteration i
/// computes q row i and writes p, r, z rows i + 1. q row 0 stays zero.
struct Handles {
  std::uint64_t n = 0;
  std::uint64_t rows = 0;  // max_iters + 2, or 1 for in-place runs
  ArrayHandle row_ptr, col_idx, values, b;
  ArrayHandle p, q, r, z;
  ArrayHandle iter;  // one i64, flushed at the start of every iteration

  Address row_offset(std::uint64_t row) const { return row * n; }
};

struct Solution {
  std::vector<double> x;
  std::uint64_t iterations = 0;  // last iteration executed
  std::vector<double> residual_checks;
};

struct RunResult {
  Handles handles;
  std::variant<Solution, CrashOutcome> outcome;

  bool crashed() const { return std::holds_alternative<CrashOutcome>(outcome); }
};

/// Allocates and persist-initializes the history layout. Deterministic, so a
/// fresh engine given the same problem reproduces identical addresses.
Handles allocate(Arena& arena, const Problem& problem, std::uint64_t max_iters);

/// History-extended CG: one flush (the iteration counter line) per iteration,
/// crash label "iter_end" at the end of every iteration.
RunResult run(const Problem& problem, const Options& options, SimEngine& engine,
              const CrashPlan& plan);

struct Consistency {
  bool consistent = false;
  double orth_residual = 0.0;
  double eq_residual = 0.0;
};

/// Checks p^(j+1)'q^(j) = 0 and r^(j+1) = b - A z^(j+1) on snapshot data.
/// j = 0 (the persisted initial state) is consistent by definition.
Consistency check_iteration(const NvmImage& snapshot, const Handles& h, std::uint64_t j,
                            double tol = kDefaultTolerance);

struct RestartReport {
  std::uint64_t crash_iteration = 0;
  std::uint64_t restart_iteration = 0;
  std::uint64_t iterations_lost = 0;
  std::uint64_t probes = 0;
  struct Probe {
    std::uint64_t j;
    Consistency result;
  };
  std::vector<Probe> checks;
};

/// Scans j = crash_iteration, crash_iteration - 1, ..., 0 for the newest
/// consistent iteration.
RestartReport detect_restart(const NvmImage& snapshot, const Handles& h,
                             double tol = kDefaultTolerance);

/// Reloads the iteration-j state from the snapshot into `fresh_engine` and
/// runs the remaining iterations up to options.max_iters.
Solution resume(const NvmImage& snapshot, const Problem& problem, const Options& options,
                std::uint64_t j, SimEngine& fresh_engine, double tol = kDefaultTolerance);

// ---------------------------------------------------------------------------
// In-place CG (one row per vector, no history, no flushes). Used by the
// native and checkpoint comparison modes. Handles::rows == 1.

struct InPlaceState {
  std::uint64_t completed_iterations = 0;
  std::vector<double> p, z;
};

/// Called after each completed iteration (before the crash label fires).
using IterationHook = std::function<void(Arena&, const Handles&, std::uint64_t iter)>;

/// Runs in-place CG. With `resume_from`, restarts from a saved (p, z) after
/// `completed_iterations`, recomputing r = b - A z.
RunResult run_in_place(const Problem& problem, const Options& options, SimEngine& engine,
                           const CrashPlan& plan, const IterationHook& hook = {},
                           const std::function<void(Arena&)>& extra_allocations = {},
                           const std::optional<InPlaceState>& resume_from = std::nullopt);

/// Plain host CG using the same operation order; the reference for result checks.
Solution reference_solve(const Problem& problem, std::uint64_t max_iters);

}  // namespace cg
}  // namespace adcc
