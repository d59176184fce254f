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
#include <utility>
#include <variant>
#include <vector>

#include "adcc/arena.hpp"
#include "adcc/dense_matrix.hpp"
#include "adcc/sim_engine.hpp"

namespace adcc::abft {

inline constexpr const char* kSubmultLabel = "submult_end";
inline constexpr const char* kSubaddLabel = "subadd_end";
inline constexpr double kDefaultTolerance = 1e-10;

// Checksum encodings (all-ones weight vectors).

/// m x k -> (m+1) x k with column sums in the last row.
DenseMatrix encode_column_checksum(const DenseMatrix& a);
/// k x n -> k x (n+1) with row sums in the last column.
DenseMatrix encode_row_checksum(const DenseMatrix& b);
/// m x n -> (m+1) x (n+1) carrying both.
DenseMatrix encode_full(const DenseMatrix& c);

/// Plain triple loop, i-j-t order. Used as the result oracle.
DenseMatrix multiply(const DenseMatrix& a, const DenseMatrix& b);

struct ChecksumViolations {
  std::vector<std::uint64_t> bad_rows;
  std::vector<std::uint64_t> bad_cols;
  std::vector<std::pair<std::uint64_t, std::uint64_t>> correctable;

  bool clean() const { return bad_rows.empty() && bad_cols.empty(); }
};

/// Checks both relations of a fully checksummed matrix. Row i is bad when
/// |c(i, last) - sum_j c(i, j)| > tol * (sum_j |c(i, j)| + 1); columns alike.
/// A single bad row crossing a single bad column is reported as correctable.
ChecksumViolations verify_checksums(const DenseMatrix& m, double tol = kDefaultTolerance);

/// Rebuilds each correctable element from its row relation (or the column
/// relation for elements of the checksum column). Returns how many changed.
std::uint64_t correct_single_errors(DenseMatrix& m, const ChecksumViolations& v);

/// Row-relation check only; used for C_temp, which carries flushed row checksums.
std::vector<std::uint64_t> bad_rows_only(const DenseMatrix& m, std::uint64_t row_lo,
                                         std::uint64_t row_hi, double tol);

struct Config {
  std::uint64_t n = 48;
  std::uint64_t k = 7;
  double tol = kDefaultTolerance;

  /// Throws kDivisibilityViolation / kInvalidConfig.
  void validate() const;
  std::uint64_t dim() const { return n + 1; }
  std::uint64_t submults() const { return (n + 1) / k; }
  std::uint64_t blocks() const { return (n + 1) / k; }
};

struct Problem {
  DenseMatrix a, b;  // n x n
};

/// Uniform(-1, 1) entries, deterministic in seed.
Problem make_problem(std::uint64_t n, std::uint64_t seed);

/// Both operands padded to (n+1) x (n+1): A_c gets a zero last column and
/// B_r a zero last row, so the inner dimension n + 1 splits into k-blocks.
DenseMatrix padded_column_checksum(const DenseMatrix& a);
DenseMatrix padded_row_checksum(const DenseMatrix& b);

/// encode_full(A x B), the reference for every run and recovery.
DenseMatrix reference_product(const Problem& problem);

struct Handles {
  std::uint64_t dim = 0;  // n + 1
  std::uint64_t k = 0;
  ArrayHandle a_c, b_r;
  std::vector<ArrayHandle> temps;  // temps[s - 1] holds C_s^temp
  ArrayHandle c_temp, c_final;
  ArrayHandle submult_progress, block_progress;
};

Handles allocate(Arena& arena, const Problem& problem, const Config& config);

struct RunResult {
  Handles handles;
  std::variant<DenseMatrix, CrashOutcome> outcome;

  bool crashed() const { return std::holds_alternative<CrashOutcome>(outcome); }
};

/// Two-loop checksummed multiply: loop 1 writes the temporaries and flushes
/// their checksum row and column, loop 2 sums them row block by row block and
/// flushes the block's row checksums, then C^f is assigned from C_temp.
RunResult run(const Problem& problem, const Config& config, SimEngine& engine,
              const CrashPlan& plan);

/// Number of distinct lines holding the checksum row and column of one temporary.
std::uint64_t checksum_lines_per_submult(const Handles& h, std::uint64_t line_size);

struct Correction {
  std::uint64_t submult, row, col;
  double value;
};

enum class Phase { kNotStarted, kMultiply, kAdd, kFinal };

struct RecoveryPlan {
  Phase phase = Phase::kNotStarted;
  std::uint64_t submult_progress = 0;
  std::uint64_t block_progress = 0;
  /// Submults whose work was lost (inconsistent, or in progress at the crash).
  std::vector<std::uint64_t> recompute_submults;
  /// First submult that had not started; loop 1 continues from here.
  std::uint64_t resume_submult = 1;
  std::vector<std::uint64_t> recompute_addition_blocks;
  std::uint64_t resume_block = 1;
  std::uint64_t corrected_elements = 0;
  std::vector<Correction> corrections;
};

/// Reads the progress scalars and verifies every temporary (and C_temp block)
/// that the snapshot claims is complete. Throws kUnreadablePhase on bad progress.
RecoveryPlan recover(const NvmImage& snapshot, const Handles& h, const Config& config);

/// Reloads the snapshot into a fresh engine, applies corrections, executes the
/// plan and the remaining loop iterations, and returns C^f.
DenseMatrix finish(const NvmImage& snapshot, const Problem& problem, const Config& config,
                   const RecoveryPlan& plan, SimEngine& fresh_engine);

// ---------------------------------------------------------------------------
// Single-loop in-place variant (C^f += A_c block x B_r block), used by the
// native and checkpoint comparison modes. No temporaries, no flushes.

struct NativeHandles {
  std::uint64_t dim = 0;
  std::uint64_t k = 0;
  ArrayHandle a_c, b_r, c_final;
  ArrayHandle progress;  // completed submults; written only by hooks
};

struct NativeState {
  std::uint64_t completed_submults = 0;
  DenseMatrix c;  // (n+1) x (n+1)
};

/// Called after each submult (after its crash label).
using SubmultHook = std::function<void(Arena&, const NativeHandles&, std::uint64_t s)>;

struct NativeResult {
  NativeHandles handles;
  std::uint64_t completed = 0;  // submults finished in this run
  std::variant<DenseMatrix, CrashOutcome> outcome;

  bool crashed() const { return std::holds_alternative<CrashOutcome>(outcome); }
};

NativeResult run_native(const Problem& problem, const Config& config, SimEngine& engine,
                        const CrashPlan& plan, const SubmultHook& hook = {},
                        const std::function<void(Arena&)>& extra_allocations = {},
                        const std::optional<NativeState>& resume_from = std::nullopt);

/// max |x - y| / max(max |y|, tiny).
double relative_error(const DenseMatrix& x, const DenseMatrix& y);

}  // namespace adcc::abft
