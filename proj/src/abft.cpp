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

#include "adcc/abft.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <string>

#include "adcc/error.hpp"
#include "adcc/philox.hpp"

namespace adcc::abft {

namespace {

constexpr std::uint64_t kStreamA = 0x4142'4641;  // "ABFA"
constexpr std::uint64_t kStreamB = 0x4142'4642;  // "ABFB"

bool row_bad(const DenseMatrix& m, std::uint64_t i, double tol) {
  const std::uint64_t last = m.cols - 1;
  double sum = 0.0, abs_sum = 0.0;
  for (std::uint64_t j = 0; j < last; ++j) {
    sum += m.at(i, j);
    abs_sum += std::abs(m.at(i, j));
  }
  // Negated form so NaN counts as bad.
  return !(std::abs(m.at(i, last) - sum) <= tol * (abs_sum + 1.0));
}

bool col_bad(const DenseMatrix& m, std::uint64_t j, double tol) {
  const std::uint64_t last = m.rows - 1;
  double sum = 0.0, abs_sum = 0.0;
  for (std::uint64_t i = 0; i < last; ++i) {
    sum += m.at(i, j);
    abs_sum += std::abs(m.at(i, j));
  }
  return !(std::abs(m.at(last, j) - sum) <= tol * (abs_sum + 1.0));
}

DenseMatrix read_matrix(const NvmImage& snapshot, const ArrayHandle& h, std::uint64_t dim) {
  DenseMatrix m(dim, dim);
  m.data = Arena::read_f64_range(snapshot, h, 0, dim * dim);
  return m;
}

// Line-representative element indices covering the checksum row and column.
std::map<Address, std::uint64_t> checksum_lines(const ArrayHandle& t, std::uint64_t dim,
                                                std::uint64_t line_size) {
  std::map<Address, std::uint64_t> lines;
  auto add = [&](std::uint64_t idx) {
    lines.emplace(t.address_of(idx) / line_size * line_size, idx);
  };
  for (std::uint64_t j = 0; j < dim; ++j) add((dim - 1) * dim + j);
  for (std::uint64_t i = 0; i < dim; ++i) add(i * dim + dim - 1);
  return lines;
}

void compute_submult(Arena& arena, const Handles& h, std::uint64_t s) {
  const std::uint64_t dim = h.dim, k = h.k;
  const std::uint64_t t0 = (s - 1) * k;
  const ArrayHandle& out = h.temps[s - 1];
  std::vector<double> arow(k);
  for (std::uint64_t i = 0; i < dim; ++i) {
    for (std::uint64_t t = 0; t < k; ++t) arow[t] = arena.load_f64(h.a_c, i * dim + t0 + t);
    for (std::uint64_t j = 0; j < dim; ++j) {
      double sum = 0.0;
      for (std::uint64_t t = 0; t < k; ++t) sum += arow[t] * arena.load_f64(h.b_r, (t0 + t) * dim + j);
      arena.store_f64(out, i * dim + j, sum);
    }
  }
}

void compute_block(Arena& arena, const Handles& h, std::uint64_t blk) {
  const std::uint64_t dim = h.dim;
  for (std::uint64_t i = (blk - 1) * h.k; i < blk * h.k; ++i) {
    for (std::uint64_t j = 0; j < dim; ++j) {
      double sum = 0.0;
      for (const auto& t : h.temps) sum += arena.load_f64(t, i * dim + j);
      arena.store_f64(h.c_temp, i * dim + j, sum);
    }
  }
}

void set_progress(Arena& arena, const ArrayHandle& p, std::uint64_t v) {
  arena.store_i64(p, 0, static_cast<std::int64_t>(v));
  arena.flush_element(p, 0);
}

DenseMatrix execute(Arena& arena, const Handles& h, const std::vector<std::uint64_t>& submults,
                    const std::vector<std::uint64_t>& blocks) {
  SimEngine& engine = arena.engine();
  const std::uint64_t dim = h.dim;
  const std::uint64_t ls = arena.line_size();
  const std::uint64_t nsub = h.temps.size();
  const std::uint64_t nblk = dim / h.k;

  for (std::uint64_t s : submults) {
    set_progress(arena, h.submult_progress, s);
    compute_submult(arena, h, s);
    engine.maybe_fire_crash(kSubmultLabel);
    for (const auto& [line, idx] : checksum_lines(h.temps[s - 1], dim, ls))
      arena.flush_element(h.temps[s - 1], idx);
  }
  set_progress(arena, h.submult_progress, nsub + 1);

  for (std::uint64_t blk : blocks) {
    set_progress(arena, h.block_progress, blk);
    compute_block(arena, h, blk);
    engine.maybe_fire_crash(kSubaddLabel);
    std::map<Address, std::uint64_t> lines;
    for (std::uint64_t i = (blk - 1) * h.k; i < blk * h.k; ++i) {
      const std::uint64_t idx = i * dim + dim - 1;
      lines.emplace(h.c_temp.address_of(idx) / ls * ls, idx);
    }
    for (const auto& [line, idx] : lines) arena.flush_element(h.c_temp, idx);
  }
  set_progress(arena, h.block_progress, nblk + 1);

  DenseMatrix c(dim, dim);
  for (std::uint64_t e = 0; e < dim * dim; ++e) {
    const double v = arena.load_f64(h.c_temp, e);
    arena.store_f64(h.c_final, e, v);
    c.data[e] = v;
  }
  return c;
}

std::vector<std::uint64_t> range_from(std::uint64_t lo, std::uint64_t hi) {
  std::vector<std::uint64_t> v;
  for (std::uint64_t x = lo; x <= hi; ++x) v.push_back(x);
  return v;
}

}  // namespace

DenseMatrix encode_column_checksum(const DenseMatrix& a) {
  DenseMatrix out(a.rows + 1, a.cols);
  for (std::uint64_t i = 0; i < a.rows; ++i)
    for (std::uint64_t j = 0; j < a.cols; ++j) {
      out.at(i, j) = a.at(i, j);
      out.at(a.rows, j) += a.at(i, j);
    }
  return out;
}

DenseMatrix encode_row_checksum(const DenseMatrix& b) {
  DenseMatrix out(b.rows, b.cols + 1);
  for (std::uint64_t i = 0; i < b.rows; ++i)
    for (std::uint64_t j = 0; j < b.cols; ++j) {
      out.at(i, j) = b.at(i, j);
      out.at(i, b.cols) += b.at(i, j);
    }
  return out;
}

DenseMatrix encode_full(const DenseMatrix& c) {
  return encode_row_checksum(encode_column_checksum(c));
}

DenseMatrix multiply(const DenseMatrix& a, const DenseMatrix& b) {
  if (a.cols != b.rows) throw Error(ErrorCode::kShapeMismatch, "inner dimensions differ");
  DenseMatrix c(a.rows, b.cols);
  for (std::uint64_t i = 0; i < a.rows; ++i)
    for (std::uint64_t j = 0; j < b.cols; ++j) {
      double sum = 0.0;
      for (std::uint64_t t = 0; t < a.cols; ++t) sum += a.at(i, t) * b.at(t, j);
      c.at(i, j) = sum;
    }
  return c;
}

ChecksumViolations verify_checksums(const DenseMatrix& m, double tol) {
  if (m.rows < 2 || m.cols < 2 || m.data.size() != m.rows * m.cols)
    throw Error(ErrorCode::kShapeMismatch, "checksummed matrix needs at least 2 x 2");
  ChecksumViolations v;
  for (std::uint64_t i = 0; i < m.rows; ++i)
    if (row_bad(m, i, tol)) v.bad_rows.push_back(i);
  for (std::uint64_t j = 0; j < m.cols; ++j)
    if (col_bad(m, j, tol)) v.bad_cols.push_back(j);
  if (v.bad_rows.size() == 1 && v.bad_cols.size() == 1)
    v.correctable.emplace_back(v.bad_rows[0], v.bad_cols[0]);
  return v;
}

std::uint64_t correct_single_errors(DenseMatrix& m, const ChecksumViolations& v) {
  std::uint64_t changed = 0;
  for (const auto& [i, j] : v.correctable) {
    double value;
    if (j == m.cols - 1 && i != m.rows - 1) {
      // The checksum element itself is wrong: rebuild it from the row.
      value = 0.0;
      for (std::uint64_t t = 0; t + 1 < m.cols; ++t) value += m.at(i, t);
    } else if (i == m.rows - 1) {
      value = 0.0;
      for (std::uint64_t t = 0; t + 1 < m.rows; ++t) value += m.at(t, j);
    } else {
      value = m.at(i, m.cols - 1);
      for (std::uint64_t t = 0; t + 1 < m.cols; ++t)
        if (t != j) value -= m.at(i, t);
    }
    if (value != m.at(i, j)) ++changed;
    m.at(i, j) = value;
  }
  return changed;
}

std::vector<std::uint64_t> bad_rows_only(const DenseMatrix& m, std::uint64_t row_lo,
                                         std::uint64_t row_hi, double tol) {
  std::vector<std::uint64_t> bad;
  for (std::uint64_t i = row_lo; i < row_hi; ++i)
    if (row_bad(m, i, tol)) bad.push_back(i);
  return bad;
}

void Config::validate() const {
  if (n == 0) throw Error(ErrorCode::kInvalidConfig, "abft n must be >= 1");
  if (k == 0) throw Error(ErrorCode::kInvalidConfig, "abft k must be >= 1");
  if ((n + 1) % k != 0)
    throw Error(ErrorCode::kDivisibilityViolation,
                "n + 1 = " + std::to_string(n + 1) + " is not divisible by k = " + std::to_string(k));
  if (!(tol > 0.0)) throw Error(ErrorCode::kInvalidConfig, "abft tol must be > 0");
}

Problem make_problem(std::uint64_t n, std::uint64_t seed) {
  const CounterRng rng(seed);
  Problem p{DenseMatrix(n, n), DenseMatrix(n, n)};
  for (std::uint64_t e = 0; e < n * n; ++e) {
    p.a.data[e] = 2.0 * CounterRng::unit_open(rng.draw(e, kStreamA)[0]) - 1.0;
    p.b.data[e] = 2.0 * CounterRng::unit_open(rng.draw(e, kStreamB)[0]) - 1.0;
  }
  return p;
}

DenseMatrix padded_column_checksum(const DenseMatrix& a) {
  const DenseMatrix enc = encode_column_checksum(a);
  DenseMatrix out(a.rows + 1, a.cols + 1);
  for (std::uint64_t i = 0; i < enc.rows; ++i)
    for (std::uint64_t j = 0; j < enc.cols; ++j) out.at(i, j) = enc.at(i, j);
  return out;
}

DenseMatrix padded_row_checksum(const DenseMatrix& b) {
  const DenseMatrix enc = encode_row_checksum(b);
  DenseMatrix out(b.rows + 1, b.cols + 1);
  for (std::uint64_t i = 0; i < enc.rows; ++i)
    for (std::uint64_t j = 0; j < enc.cols; ++j) out.at(i, j) = enc.at(i, j);
  return out;
}

DenseMatrix reference_product(const Problem& problem) {
  return encode_full(multiply(problem.a, problem.b));
}

Handles allocate(Arena& arena, const Problem& problem, const Config& config) {
  config.validate();
  const std::uint64_t n = config.n;
  if (problem.a.rows != n || problem.a.cols != n || problem.b.rows != n || problem.b.cols != n)
    throw Error(ErrorCode::kShapeMismatch, "A and B must be n x n");
  const std::uint64_t dim = config.dim();
  Handles h;
  h.dim = dim;
  h.k = config.k;
  h.a_c = arena.alloc_f64("a_c", dim * dim, padded_column_checksum(problem.a).data);
  h.b_r = arena.alloc_f64("b_r", dim * dim, padded_row_checksum(problem.b).data);
  for (std::uint64_t s = 1; s <= config.submults(); ++s)
    h.temps.push_back(arena.alloc_f64("c_temp_" + std::to_string(s), dim * dim));
  h.c_temp = arena.alloc_f64("c_temp", dim * dim);
  h.c_final = arena.alloc_f64("c_final", dim * dim);
  h.submult_progress = arena.alloc_i64("submult_progress", 1);
  h.block_progress = arena.alloc_i64("block_progress", 1);
  return h;
}

RunResult run(const Problem& problem, const Config& config, SimEngine& engine,
              const CrashPlan& plan) {
  engine.set_crash_plan(plan);
  Arena arena(engine);
  RunResult out;
  out.handles = allocate(arena, problem, config);
  try {
    out.outcome = execute(arena, out.handles, range_from(1, config.submults()),
                          range_from(1, config.blocks()));
  } catch (const CrashFired&) {
    out.outcome = CrashOutcome{engine.crash()};
  }
  return out;
}

std::uint64_t checksum_lines_per_submult(const Handles& h, std::uint64_t line_size) {
  if (h.temps.empty()) return 0;
  return checksum_lines(h.temps[0], h.dim, line_size).size();
}

RecoveryPlan recover(const NvmImage& snapshot, const Handles& h, const Config& config) {
  config.validate();
  const std::uint64_t nsub = config.submults(), nblk = config.blocks(), dim = h.dim;
  const auto s1 = Arena::read_i64(snapshot, h.submult_progress, 0);
  const auto s2 = Arena::read_i64(snapshot, h.block_progress, 0);
  if (s1 < 0 || static_cast<std::uint64_t>(s1) > nsub + 1 || s2 < 0 ||
      static_cast<std::uint64_t>(s2) > nblk + 1)
    throw Error(ErrorCode::kUnreadablePhase, "progress scalars out of range: submult " +
                                                 std::to_string(s1) + ", block " +
                                                 std::to_string(s2));
  RecoveryPlan plan;
  plan.submult_progress = static_cast<std::uint64_t>(s1);
  plan.block_progress = static_cast<std::uint64_t>(s2);

  // Loop 2 only starts after loop 1 finished. Recomputing an old temporary
  // during an earlier recovery may leave submult_progress behind, so the
  // block counter decides the phase on its own.
  if (plan.block_progress > 0 || plan.submult_progress == nsub + 1)
    plan.phase = plan.block_progress == nblk + 1 ? Phase::kFinal : Phase::kAdd;
  else if (plan.submult_progress > 0)
    plan.phase = Phase::kMultiply;

  if (plan.phase == Phase::kNotStarted) return plan;

  const std::uint64_t verified_submults =
      plan.phase == Phase::kMultiply ? plan.submult_progress - 1 : nsub;
  for (std::uint64_t s = 1; s <= verified_submults; ++s) {
    DenseMatrix t = read_matrix(snapshot, h.temps[s - 1], dim);
    const ChecksumViolations v = verify_checksums(t, config.tol);
    if (v.clean()) continue;
    if (v.correctable.size() == 1) {
      const auto [i, j] = v.correctable[0];
      correct_single_errors(t, v);
      if (verify_checksums(t, config.tol).clean()) {
        plan.corrections.push_back({s, i, j, t.at(i, j)});
        ++plan.corrected_elements;
        continue;
      }
    }
    plan.recompute_submults.push_back(s);
  }

  if (plan.phase == Phase::kMultiply) {
    plan.recompute_submults.push_back(plan.submult_progress);
    plan.resume_submult = plan.submult_progress + 1;
    return plan;
  }
  plan.resume_submult = nsub + 1;

  const DenseMatrix c = read_matrix(snapshot, h.c_temp, dim);
  const std::uint64_t verified_blocks =
      plan.phase == Phase::kFinal ? nblk : (plan.block_progress == 0 ? 0 : plan.block_progress - 1);
  for (std::uint64_t blk = 1; blk <= verified_blocks; ++blk)
    if (!bad_rows_only(c, (blk - 1) * h.k, blk * h.k, config.tol).empty())
      plan.recompute_addition_blocks.push_back(blk);
  if (plan.phase == Phase::kAdd && plan.block_progress > 0) {
    plan.recompute_addition_blocks.push_back(plan.block_progress);
    plan.resume_block = plan.block_progress + 1;
  } else {
    plan.resume_block = plan.phase == Phase::kFinal ? nblk + 1 : 1;
  }
  return plan;
}

DenseMatrix finish(const NvmImage& snapshot, const Problem& problem, const Config& config,
                   const RecoveryPlan& plan, SimEngine& fresh_engine) {
  Arena arena(fresh_engine);
  const Handles h = allocate(arena, problem, config);
  const std::uint64_t cells = h.dim * h.dim;
  for (const auto& t : h.temps) arena.persist_f64(t, 0, Arena::read_f64_range(snapshot, t, 0, cells));
  arena.persist_f64(h.c_temp, 0, Arena::read_f64_range(snapshot, h.c_temp, 0, cells));
  for (const auto& c : plan.corrections) {
    if (c.submult == 0 || c.submult > h.temps.size() || c.row >= h.dim || c.col >= h.dim)
      throw Error(ErrorCode::kInvalidArgument, "correction outside the layout");
    arena.persist_f64(h.temps[c.submult - 1], c.row * h.dim + c.col, std::span(&c.value, 1));
  }
  std::vector<std::uint64_t> submults = plan.recompute_submults;
  for (std::uint64_t s = plan.resume_submult; s <= config.submults(); ++s) submults.push_back(s);
  std::vector<std::uint64_t> blocks = plan.recompute_addition_blocks;
  for (std::uint64_t b = plan.resume_block; b <= config.blocks(); ++b) blocks.push_back(b);
  return execute(arena, h, submults, blocks);
}

NativeResult run_native(const Problem& problem, const Config& config, SimEngine& engine,
                        const CrashPlan& plan, const SubmultHook& hook,
                        const std::function<void(Arena&)>& extra_allocations,
                        const std::optional<NativeState>& resume_from) {
  config.validate();
  const std::uint64_t n = config.n, dim = config.dim(), k = config.k;
  if (problem.a.rows != n || problem.a.cols != n || problem.b.rows != n || problem.b.cols != n)
    throw Error(ErrorCode::kShapeMismatch, "A and B must be n x n");
  engine.set_crash_plan(plan);
  Arena arena(engine);
  NativeResult out;
  NativeHandles& h = out.handles;
  h.dim = dim;
  h.k = k;
  h.a_c = arena.alloc_f64("a_c", dim * dim, padded_column_checksum(problem.a).data);
  h.b_r = arena.alloc_f64("b_r", dim * dim, padded_row_checksum(problem.b).data);
  h.c_final = arena.alloc_f64("c_final", dim * dim);
  h.progress = arena.alloc_i64("progress", 1);
  if (extra_allocations) extra_allocations(arena);

  std::uint64_t first = 1;
  if (resume_from) {
    if (resume_from->c.data.size() != dim * dim)
      throw Error(ErrorCode::kShapeMismatch, "restored C does not match n");
    arena.persist_f64(h.c_final, 0, resume_from->c.data);
    const auto done = static_cast<std::int64_t>(resume_from->completed_submults);
    arena.persist_i64(h.progress, 0, std::span(&done, 1));
    first = resume_from->completed_submults + 1;
  }
  try {
    std::vector<double> arow(k);
    for (std::uint64_t s = first; s <= config.submults(); ++s) {
      const std::uint64_t t0 = (s - 1) * k;
      for (std::uint64_t i = 0; i < dim; ++i) {
        for (std::uint64_t t = 0; t < k; ++t) arow[t] = arena.load_f64(h.a_c, i * dim + t0 + t);
        for (std::uint64_t j = 0; j < dim; ++j) {
          double sum = 0.0;
          for (std::uint64_t t = 0; t < k; ++t)
            sum += arow[t] * arena.load_f64(h.b_r, (t0 + t) * dim + j);
          arena.store_f64(h.c_final, i * dim + j, arena.load_f64(h.c_final, i * dim + j) + sum);
        }
      }
      engine.maybe_fire_crash(kSubmultLabel);
      if (hook) hook(arena, h, s);
      ++out.completed;
    }
    DenseMatrix c(dim, dim);
    for (std::uint64_t e = 0; e < dim * dim; ++e) c.data[e] = arena.load_f64(h.c_final, e);
    out.outcome = std::move(c);
  } catch (const CrashFired&) {
    out.outcome = CrashOutcome{engine.crash()};
  }
  return out;
}

double relative_error(const DenseMatrix& x, const DenseMatrix& y) {
  if (x.rows != y.rows || x.cols != y.cols) return std::numeric_limits<double>::infinity();
  double diff = 0.0, scale = 0.0;
  for (std::uint64_t e = 0; e < x.data.size(); ++e) {
    const double d = std::abs(x.data[e] - y.data[e]);
    diff = std::isnan(d) ? std::numeric_limits<double>::infinity() : std::max(diff, d);
    scale = std::max(scale, std::abs(y.data[e]));
  }
  return diff / std::max(scale, std::numeric_limits<double>::min());
}

}  // namespace adcc::abft
