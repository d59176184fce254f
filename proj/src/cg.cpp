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

#include "adcc/cg.hpp"

#include <cmath>
#include <limits>
#include <string>

#include "adcc/error.hpp"

namespace adcc::cg {

namespace {

constexpr double kTiny = std::numeric_limits<double>::min();

std::vector<double> initial_x(const Problem& problem) {
  if (problem.x0.empty()) return std::vector<double>(problem.n(), 0.0);
  if (problem.x0.size() != problem.n()) throw Error(ErrorCode::kShapeMismatch, "x0 length != n");
  return problem.x0;
}

void validate_problem(const Problem& problem) {
  if (problem.n() == 0) throw Error(ErrorCode::kInvalidArgument, "empty problem");
  if (problem.b.size() != problem.n()) throw Error(ErrorCode::kShapeMismatch, "b length != n");
  if (problem.a.row_ptr.size() != problem.n() + 1)
    throw Error(ErrorCode::kShapeMismatch, "row_ptr length != n + 1");
}

std::vector<double> initial_residual(const Problem& problem, const std::vector<double>& x0) {
  std::vector<double> r = problem.a.multiply(x0);
  for (std::uint64_t i = 0; i < r.size(); ++i) r[i] = problem.b[i] - r[i];
  return r;
}

Handles allocate_common(Arena& arena, const Problem& problem, std::uint64_t rows) {
  validate_problem(problem);
  const std::uint64_t n = problem.n();
  Handles h;
  h.n = n;
  h.rows = rows;
  h.row_ptr = arena.alloc_i64("row_ptr", n + 1, problem.a.row_ptr);
  h.col_idx = arena.alloc_i64("col_idx", problem.a.nnz(), problem.a.col_idx);
  h.values = arena.alloc_f64("values", problem.a.nnz(), problem.a.values);
  h.b = arena.alloc_f64("b", n, problem.b);
  h.p = arena.alloc_f64("p", rows * n);
  h.q = arena.alloc_f64("q", rows * n);
  h.r = arena.alloc_f64("r", rows * n);
  h.z = arena.alloc_f64("z", rows * n);
  h.iter = arena.alloc_i64("iter", 1);
  return h;
}

// Row indices touched by one iteration. History runs move forward one row per
// iteration; in-place runs keep everything in row 0.
struct Rows {
  std::uint64_t cur, next;
};

Rows rows_for(const Handles& h, std::uint64_t i) {
  return h.rows == 1 ? Rows{0, 0} : Rows{i, i + 1};
}

double dot_row(Arena& arena, const ArrayHandle& a, std::uint64_t ra, const ArrayHandle& b,
               std::uint64_t rb, std::uint64_t n) {
  double s = 0.0;
  for (std::uint64_t k = 0; k < n; ++k) s += arena.load_f64(a, ra * n + k) * arena.load_f64(b, rb * n + k);
  return s;
}

// out[row_out] = A * in[row_in], loading the matrix through the cache.
void matvec(Arena& arena, const Handles& h, const ArrayHandle& in, std::uint64_t row_in,
            const ArrayHandle& out, std::uint64_t row_out) {
  const std::uint64_t n = h.n;
  auto begin = arena.load_i64(h.row_ptr, 0);
  for (std::uint64_t i = 0; i < n; ++i) {
    const auto end = arena.load_i64(h.row_ptr, i + 1);
    double sum = 0.0;
    for (auto k = begin; k < end; ++k) {
      const auto kk = static_cast<std::uint64_t>(k);
      const auto col = static_cast<std::uint64_t>(arena.load_i64(h.col_idx, kk));
      sum += arena.load_f64(h.values, kk) * arena.load_f64(in, row_in * n + col);
    }
    arena.store_f64(out, row_out * n + i, sum);
    begin = end;
  }
}

// ||r - (b - A z)|| / ||b|| computed through the cache without storing anything.
double residual_gap(Arena& arena, const Handles& h, std::uint64_t row) {
  const std::uint64_t n = h.n;
  double gap = 0.0, bnorm = 0.0;
  auto begin = arena.load_i64(h.row_ptr, 0);
  for (std::uint64_t i = 0; i < n; ++i) {
    const auto end = arena.load_i64(h.row_ptr, i + 1);
    double az = 0.0;
    for (auto k = begin; k < end; ++k) {
      const auto kk = static_cast<std::uint64_t>(k);
      const auto col = static_cast<std::uint64_t>(arena.load_i64(h.col_idx, kk));
      az += arena.load_f64(h.values, kk) * arena.load_f64(h.z, row * n + col);
    }
    const double bi = arena.load_f64(h.b, i);
    const double d = arena.load_f64(h.r, row * n + i) - (bi - az);
    gap += d * d;
    bnorm += bi * bi;
    begin = end;
  }
  return std::sqrt(gap) / std::max(std::sqrt(bnorm), kTiny);
}

std::vector<double> load_row(Arena& arena, const ArrayHandle& a, std::uint64_t row,
                             std::uint64_t n) {
  std::vector<double> out(n);
  for (std::uint64_t k = 0; k < n; ++k) out[k] = arena.load_f64(a, row * n + k);
  return out;
}

// Runs iterations first..options.max_iters. The state of iteration first - 1
// must already be in place (row `first` for history runs).
Solution iterate(Arena& arena, const Handles& h, std::uint64_t first, const Options& options,
                 const IterationHook& hook) {
  const std::uint64_t n = h.n;
  const bool history = h.rows != 1;
  SimEngine& engine = arena.engine();

  std::uint64_t last = first - 1;
  double rho = dot_row(arena, h.r, rows_for(h, first).cur, h.r, rows_for(h, first).cur, n);
  Solution sol;
  for (std::uint64_t i = first; i <= options.max_iters && rho != 0.0; ++i) {
    const Rows rw = rows_for(h, i);
    if (history) {
      arena.store_i64(h.iter, 0, static_cast<std::int64_t>(i));
      arena.flush_element(h.iter, 0);
    }
    matvec(arena, h, h.p, rw.cur, h.q, rw.cur);
    const double pq = dot_row(arena, h.p, rw.cur, h.q, rw.cur, n);
    if (!(pq > 0.0))
      throw Error(ErrorCode::kNonPositiveCurvature,
                  "p'Ap = " + std::to_string(pq) + " at iteration " + std::to_string(i));
    const double alpha = rho / pq;
    for (std::uint64_t k = 0; k < n; ++k) {
      const double pk = arena.load_f64(h.p, rw.cur * n + k);
      const double zk = arena.load_f64(h.z, rw.cur * n + k);
      arena.store_f64(h.z, rw.next * n + k, zk + alpha * pk);
    }
    for (std::uint64_t k = 0; k < n; ++k) {
      const double qk = arena.load_f64(h.q, rw.cur * n + k);
      const double rk = arena.load_f64(h.r, rw.cur * n + k);
      arena.store_f64(h.r, rw.next * n + k, rk - alpha * qk);
    }
    const double rho_next = dot_row(arena, h.r, rw.next, h.r, rw.next, n);
    const double beta = rho_next / rho;
    for (std::uint64_t k = 0; k < n; ++k) {
      const double rk = arena.load_f64(h.r, rw.next * n + k);
      const double pk = arena.load_f64(h.p, rw.cur * n + k);
      arena.store_f64(h.p, rw.next * n + k, rk + beta * pk);
    }
    rho = rho_next;
    if (options.check_residual) sol.residual_checks.push_back(residual_gap(arena, h, rw.next));
    if (hook) hook(arena, h, i);
    engine.maybe_fire_crash(kIterEndLabel);
    last = i;
  }
  sol.iterations = last;
  sol.x = load_row(arena, h.z, history ? last + 1 : 0, n);
  return sol;
}

struct SnapshotSystem {
  CsrMatrix a;
  std::vector<double> b;
};

SnapshotSystem read_system(const NvmImage& snapshot, const Handles& h) {
  SnapshotSystem s;
  s.a.n = h.n;
  s.a.row_ptr.resize(h.row_ptr.length);
  for (std::uint64_t i = 0; i < h.row_ptr.length; ++i)
    s.a.row_ptr[i] = Arena::read_i64(snapshot, h.row_ptr, i);
  s.a.col_idx.resize(h.col_idx.length);
  for (std::uint64_t i = 0; i < h.col_idx.length; ++i)
    s.a.col_idx[i] = Arena::read_i64(snapshot, h.col_idx, i);
  s.a.values = Arena::read_f64_range(snapshot, h.values, 0, h.values.length);
  s.b = Arena::read_f64_range(snapshot, h.b, 0, h.n);
  // A and b are persist-initialized and never written; a torn copy here
  // would mean the snapshot belongs to a different run.
  for (std::uint64_t i = 0; i < h.n; ++i) {
    const auto lo = s.a.row_ptr[i], hi = s.a.row_ptr[i + 1];
    if (lo > hi || lo < 0 || static_cast<std::uint64_t>(hi) > h.col_idx.length)
      throw Error(ErrorCode::kInconsistentRestartState, "snapshot CSR structure is corrupt");
    for (auto k = lo; k < hi; ++k) {
      const auto c = s.a.col_idx[static_cast<std::size_t>(k)];
      if (c < 0 || static_cast<std::uint64_t>(c) >= h.n)
        throw Error(ErrorCode::kInconsistentRestartState, "snapshot CSR structure is corrupt");
    }
  }
  return s;
}

Consistency check_with(const NvmImage& snapshot, const Handles& h, const SnapshotSystem& sys,
                       std::uint64_t j, double tol) {
  if (j == 0) return {true, 0.0, 0.0};
  Consistency c;
  if (j + 1 >= h.rows) {
    c.orth_residual = c.eq_residual = std::numeric_limits<double>::infinity();
    return c;
  }
  const std::uint64_t n = h.n;
  const auto p = Arena::read_f64_range(snapshot, h.p, (j + 1) * n, (j + 2) * n);
  const auto q = Arena::read_f64_range(snapshot, h.q, j * n, (j + 1) * n);
  const auto r = Arena::read_f64_range(snapshot, h.r, (j + 1) * n, (j + 2) * n);
  const auto z = Arena::read_f64_range(snapshot, h.z, (j + 1) * n, (j + 2) * n);

  double pq = 0.0, pn = 0.0, qn = 0.0, rn = 0.0, bn = 0.0, gap = 0.0;
  const auto az = sys.a.multiply(z);
  for (std::uint64_t k = 0; k < n; ++k) {
    pq += p[k] * q[k];
    pn += p[k] * p[k];
    qn += q[k] * q[k];
    rn += r[k] * r[k];
    bn += sys.b[k] * sys.b[k];
    const double d = r[k] - (sys.b[k] - az[k]);
    gap += d * d;
  }
  pn = std::sqrt(pn);
  qn = std::sqrt(qn);
  rn = std::sqrt(rn);
  bn = std::sqrt(bn);

  // A zero p or q row next to a nonzero residual is what an unwritten row
  // looks like; it passes the orthogonality test vacuously, so reject it.
  if ((pn == 0.0 || qn == 0.0) && rn > 0.0)
    c.orth_residual = std::numeric_limits<double>::infinity();
  else
    c.orth_residual = std::abs(pq) / std::max(pn * qn, kTiny);
  c.eq_residual = std::sqrt(gap) / std::max(bn, kTiny);
  // NaN compares false, so torn rows holding garbage are rejected too.
  c.consistent = c.orth_residual <= tol && c.eq_residual <= tol;
  return c;
}

}  // namespace

Problem make_problem(std::uint64_t n, std::uint64_t offdiag_per_row, std::uint64_t seed) {
  Problem p;
  p.a = random_spd(n, offdiag_per_row, seed);
  p.b = random_vector(n, seed);
  return p;
}

Handles allocate(Arena& arena, const Problem& problem, std::uint64_t max_iters) {
  Handles h = allocate_common(arena, problem, max_iters + 2);
  const auto x0 = initial_x(problem);
  const auto r0 = initial_residual(problem, x0);
  const std::uint64_t n = h.n;
  arena.persist_f64(h.p, n, r0);
  arena.persist_f64(h.r, n, r0);
  arena.persist_f64(h.z, n, x0);
  return h;
}

RunResult run(const Problem& problem, const Options& options, SimEngine& engine,
              const CrashPlan& plan) {
  engine.set_crash_plan(plan);
  Arena arena(engine);
  RunResult out;
  out.handles = allocate(arena, problem, options.max_iters);
  try {
    out.outcome = iterate(arena, out.handles, 1, options, {});
  } catch (const CrashFired&) {
    out.outcome = CrashOutcome{engine.crash()};
  }
  return out;
}

Consistency check_iteration(const NvmImage& snapshot, const Handles& h, std::uint64_t j,
                            double tol) {
  if (j == 0) return {true, 0.0, 0.0};
  return check_with(snapshot, h, read_system(snapshot, h), j, tol);
}

RestartReport detect_restart(const NvmImage& snapshot, const Handles& h, double tol) {
  RestartReport rep;
  const auto stored = Arena::read_i64(snapshot, h.iter, 0);
  const std::uint64_t max_iter = h.rows >= 2 ? h.rows - 2 : 0;
  rep.crash_iteration =
      stored <= 0 ? 0 : std::min<std::uint64_t>(static_cast<std::uint64_t>(stored), max_iter);
  const SnapshotSystem sys = read_system(snapshot, h);
  for (std::uint64_t j = rep.crash_iteration;; --j) {
    const Consistency c = check_with(snapshot, h, sys, j, tol);
    rep.checks.push_back({j, c});
    ++rep.probes;
    if (c.consistent) {
      rep.restart_iteration = j;
      break;
    }
  }
  rep.iterations_lost = rep.crash_iteration - rep.restart_iteration;
  return rep;
}

Solution resume(const NvmImage& snapshot, const Problem& problem, const Options& options,
                std::uint64_t j, SimEngine& fresh_engine, double tol) {
  Arena arena(fresh_engine);
  const Handles h = allocate(arena, problem, options.max_iters);
  if (j > options.max_iters)
    throw Error(ErrorCode::kInconsistentRestartState,
                "restart iteration " + std::to_string(j) + " beyond max_iters");
  const Consistency c = check_iteration(snapshot, h, j, tol);
  if (!c.consistent)
    throw Error(ErrorCode::kInconsistentRestartState,
                "iteration " + std::to_string(j) + " fails the consistency check");
  const std::uint64_t n = h.n;
  if (j > 0) {
    arena.persist_f64(h.p, 2 * n, Arena::read_f64_range(snapshot, h.p, 2 * n, (j + 2) * n));
    arena.persist_f64(h.q, n, Arena::read_f64_range(snapshot, h.q, n, (j + 1) * n));
    arena.persist_f64(h.r, 2 * n, Arena::read_f64_range(snapshot, h.r, 2 * n, (j + 2) * n));
    arena.persist_f64(h.z, 2 * n, Arena::read_f64_range(snapshot, h.z, 2 * n, (j + 2) * n));
    const std::int64_t it = static_cast<std::int64_t>(j);
    arena.persist_i64(h.iter, 0, std::span(&it, 1));
  }
  return iterate(arena, h, j + 1, options, {});
}

RunResult run_in_place(const Problem& problem, const Options& options, SimEngine& engine,
                       const CrashPlan& plan, const IterationHook& hook,
                       const std::function<void(Arena&)>& extra_allocations,
                       const std::optional<InPlaceState>& resume_from) {
  engine.set_crash_plan(plan);
  Arena arena(engine);
  RunResult out;
  Handles& h = out.handles;
  h = allocate_common(arena, problem, 1);
  if (extra_allocations) extra_allocations(arena);

  std::uint64_t first = 1;
  if (resume_from) {
    const std::uint64_t n = h.n;
    if (resume_from->p.size() != n || resume_from->z.size() != n)
      throw Error(ErrorCode::kShapeMismatch, "restored state does not match n");
    const auto r = initial_residual(problem, resume_from->z);
    arena.persist_f64(h.p, 0, resume_from->p);
    arena.persist_f64(h.z, 0, resume_from->z);
    arena.persist_f64(h.r, 0, r);
    first = resume_from->completed_iterations + 1;
  } else {
    const auto x0 = initial_x(problem);
    const auto r0 = initial_residual(problem, x0);
    arena.persist_f64(h.p, 0, r0);
    arena.persist_f64(h.r, 0, r0);
    arena.persist_f64(h.z, 0, x0);
  }
  try {
    out.outcome = iterate(arena, h, first, options, hook);
  } catch (const CrashFired&) {
    out.outcome = CrashOutcome{engine.crash()};
  }
  return out;
}

Solution reference_solve(const Problem& problem, std::uint64_t max_iters) {
  validate_problem(problem);
  const std::uint64_t n = problem.n();
  std::vector<double> z = initial_x(problem);
  std::vector<double> r = initial_residual(problem, z);
  std::vector<double> p = r;
  double rho = 0.0;
  for (double v : r) rho += v * v;
  Solution sol;
  for (std::uint64_t i = 1; i <= max_iters && rho != 0.0; ++i) {
    const auto q = problem.a.multiply(p);
    double pq = 0.0;
    for (std::uint64_t k = 0; k < n; ++k) pq += p[k] * q[k];
    if (!(pq > 0.0)) throw Error(ErrorCode::kNonPositiveCurvature, "p'Ap <= 0");
    const double alpha = rho / pq;
    for (std::uint64_t k = 0; k < n; ++k) z[k] = z[k] + alpha * p[k];
    for (std::uint64_t k = 0; k < n; ++k) r[k] = r[k] - alpha * q[k];
    double rho_next = 0.0;
    for (double v : r) rho_next += v * v;
    const double beta = rho_next / rho;
    for (std::uint64_t k = 0; k < n; ++k) p[k] = r[k] + beta * p[k];
    rho = rho_next;
    sol.iterations = i;
  }
  sol.x = std::move(z);
  return sol;
}

}  // namespace adcc::cg
