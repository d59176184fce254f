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

#include "adcc/harness.hpp"

#include <cmath>
#include <cstdio>
#include <optional>
#include <set>
#include <sstream>

#include "adcc/cg.hpp"
#include "adcc/checkpoint.hpp"
#include "adcc/error.hpp"
#include "adcc/matrix_io.hpp"

namespace adcc::harness {

using nlohmann::json;
using nlohmann::ordered_json;

namespace {

constexpr double kCgResumeTolerance = 1e-10;
constexpr double kAbftResultTolerance = 1e-9;
constexpr double kMcDeviationSlack = 0.5;  // percentage points

// ---------------------------------------------------------------------------
// JSON helpers

void reject_unknown(const json& j, std::initializer_list<const char*> keys, const char* where) {
  if (!j.is_object()) throw Error(ErrorCode::kInvalidConfig, std::string(where) + " must be an object");
  const std::set<std::string> known(keys.begin(), keys.end());
  for (const auto& [k, v] : j.items())
    if (!known.count(k)) throw Error(ErrorCode::kInvalidConfig, std::string(where) + ": unknown key '" + k + "'");
}

template <class T>
void read_key(const json& j, const char* key, T& out) {
  if (!j.contains(key)) return;
  try {
    out = j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kInvalidConfig, std::string("key '") + key + "': " + e.what());
  }
}

Workload parse_workload(const std::string& s) {
  if (s == "cg") return Workload::kCg;
  if (s == "abft") return Workload::kAbft;
  if (s == "mc") return Workload::kMc;
  throw Error(ErrorCode::kInvalidConfig, "unknown workload '" + s + "'");
}

Mode parse_mode(const std::string& s) {
  if (s == "native") return Mode::kNative;
  if (s == "checkpoint") return Mode::kCheckpoint;
  if (s == "algorithm") return Mode::kAlgorithm;
  throw Error(ErrorCode::kInvalidConfig, "unknown mode '" + s + "'");
}

std::string_view crash_kind_name(CrashPlan::Kind k) {
  switch (k) {
    case CrashPlan::Kind::kNever: return "never";
    case CrashPlan::Kind::kAfterOpCount: return "after_op_count";
    case CrashPlan::Kind::kAtLabel: return "at_label";
  }
  return "never";
}

CrashPlan::Kind parse_crash_kind(const std::string& s) {
  if (s == "never") return CrashPlan::Kind::kNever;
  if (s == "after_op_count") return CrashPlan::Kind::kAfterOpCount;
  if (s == "at_label") return CrashPlan::Kind::kAtLabel;
  throw Error(ErrorCode::kInvalidConfig, "unknown crash kind '" + s + "'");
}

const char* default_label(Workload w) {
  switch (w) {
    case Workload::kCg: return cg::kIterEndLabel;
    case Workload::kAbft: return abft::kSubmultLabel;
    case Workload::kMc: return mc::kLookupEndLabel;
  }
  return "";
}

template <class Seq>
ordered_json to_array(const Seq& s) {
  ordered_json a = ordered_json::array();
  for (const auto& v : s) a.push_back(v);
  return a;
}

double relative_norm_error(const std::vector<double>& x, const std::vector<double>& ref) {
  if (x.size() != ref.size()) return INFINITY;
  double d = 0.0, r = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    d += (x[i] - ref[i]) * (x[i] - ref[i]);
    r += ref[i] * ref[i];
  }
  const double e = std::sqrt(d) / std::max(std::sqrt(r), 1e-300);
  return std::isnan(e) ? INFINITY : e;
}

// Filled by the workload drivers.
struct Outcome {
  bool crashed = false;
  bool valid = false;
  double error = 0.0;
  std::uint64_t work_lost = 0;
  std::uint64_t probes = 0;
  std::optional<double> deviation;
  ordered_json recovery = ordered_json::object();
  ordered_json result = ordered_json::object();
  EventCounters counters;
  EventCounters recovery_counters;
};

// ---------------------------------------------------------------------------
// CG

cg::Problem load_cg_problem(const ExperimentSpec& spec) {
  if (spec.cg.matrix_file.empty()) return cg::make_problem(spec.cg.n, spec.cg.offdiag, spec.seed);
  cg::Problem p;
  p.a = read_matrix_market(spec.cg.matrix_file);
  p.a.validate_symmetric();
  p.b = random_vector(p.a.n, spec.seed);
  return p;
}

Outcome run_cg(const ExperimentSpec& spec) {
  const cg::Problem problem = load_cg_problem(spec);
  const cg::Options options{spec.cg.max_iters, false};
  const cg::Solution reference = cg::reference_solve(problem, spec.cg.max_iters);
  const CrashPlan plan = spec.crash_plan();
  Outcome o;
  SimEngine engine(spec.cache);
  SimEngine fresh(spec.cache);
  std::vector<double> x;
  double tolerance = kCgResumeTolerance;

  if (spec.mode == Mode::kAlgorithm) {
    const cg::RunResult r = cg::run(problem, options, engine, plan);
    o.counters = engine.counters();
    if (const auto* sol = std::get_if<cg::Solution>(&r.outcome)) {
      x = sol->x;
    } else {
      o.crashed = true;
      const NvmImage& snap = std::get<CrashOutcome>(r.outcome).snapshot;
      const cg::RestartReport rep = cg::detect_restart(snap, r.handles, spec.cg.tol);
      o.work_lost = rep.iterations_lost;
      o.probes = rep.probes;
      ordered_json checks = ordered_json::array();
      for (const auto& c : rep.checks)
        checks.push_back({{"j", c.j},
                          {"consistent", c.result.consistent},
                          {"orth_residual", c.result.orth_residual},
                          {"eq_residual", c.result.eq_residual}});
      o.recovery = {{"crash_iteration", rep.crash_iteration},
                    {"restart_iteration", rep.restart_iteration},
                    {"iterations_lost", rep.iterations_lost},
                    {"probes", rep.probes},
                    {"checks", checks}};
      x = cg::resume(snap, problem, options, rep.restart_iteration, fresh, spec.cg.tol).x;
      o.recovery_counters = fresh.counters();
    }
  } else {
    // In-place CG; the checkpoint mode protects {p, q, z, iter} every iteration.
    std::uint64_t completed = 0;
    std::optional<CheckpointRegion> region;
    const bool ckpt = spec.mode == Mode::kCheckpoint;
    auto extra = [&](Arena& a) {
      if (!ckpt) return;
      const ArenaLayout& l = a.layout();
      region.emplace(a, std::vector<ArrayHandle>{*l.find("p"), *l.find("q"), *l.find("z"),
                                                 *l.find("iter")});
    };
    auto hook = [&](Arena& a, const cg::Handles& h, std::uint64_t it) {
      completed = it;
      if (!ckpt) return;
      a.store_i64(h.iter, 0, static_cast<std::int64_t>(it));
      region->checkpoint(a);
    };
    const cg::RunResult r = cg::run_in_place(problem, options, engine, plan, hook, extra);
    o.counters = engine.counters();
    if (const auto* sol = std::get_if<cg::Solution>(&r.outcome)) {
      x = sol->x;
    } else {
      o.crashed = true;
      const NvmImage& snap = std::get<CrashOutcome>(r.outcome).snapshot;
      std::optional<cg::InPlaceState> state;
      if (ckpt) {
        try {
          const auto restored = CheckpointRegion::restore(snap, region->layout());
          state = cg::InPlaceState{static_cast<std::uint64_t>(restored.arrays[3].i64[0]),
                                   restored.arrays[0].f64, restored.arrays[2].f64};
          o.recovery["checkpoint_id"] = restored.id;
        } catch (const Error& e) {
          if (e.code() != ErrorCode::kNoCommittedCheckpoint) throw;
          o.recovery["checkpoint_id"] = 0;
        }
      }
      const std::uint64_t restart_iter = state ? state->completed_iterations : 0;
      o.work_lost = completed - restart_iter;
      o.recovery["crash_iteration"] = completed;
      o.recovery["restart_iteration"] = restart_iter;
      o.recovery["iterations_lost"] = o.work_lost;
      const cg::RunResult again = cg::run_in_place(problem, options, fresh, CrashPlan::never(),
                                                   hook, extra, state);
      x = std::get<cg::Solution>(again.outcome).x;
      o.recovery_counters = fresh.counters();
      // r is rebuilt as b - A z after a restore, which perturbs rounding.
      if (state) tolerance = spec.cg.tol;
    }
  }
  o.error = relative_norm_error(x, reference.x);
  o.valid = o.error <= tolerance;
  o.result = {{"iterations", reference.iterations},
              {"relative_error", o.error},
              {"tolerance", tolerance}};
  return o;
}

// ---------------------------------------------------------------------------
// ABFT

DenseMatrix load_dense(const std::string& path) {
  if (path.size() >= 4 && path.compare(path.size() - 4, 4, ".csv") == 0) return read_csv(path);
  return read_dense_binary(path);
}

abft::Problem load_abft_problem(const ExperimentSpec& spec) {
  abft::Problem p = abft::make_problem(spec.abft.n, spec.seed);
  if (!spec.abft.a_file.empty()) p.a = load_dense(spec.abft.a_file);
  if (!spec.abft.b_file.empty()) p.b = load_dense(spec.abft.b_file);
  return p;
}

Outcome run_abft(const ExperimentSpec& spec) {
  const abft::Problem problem = load_abft_problem(spec);
  const abft::Config config{spec.abft.n, spec.abft.k, spec.abft.tol};
  config.validate();
  const DenseMatrix reference = abft::reference_product(problem);
  const CrashPlan plan = spec.crash_plan();
  Outcome o;
  SimEngine engine(spec.cache);
  SimEngine fresh(spec.cache);
  DenseMatrix c;

  if (spec.mode == Mode::kAlgorithm) {
    const abft::RunResult r = abft::run(problem, config, engine, plan);
    o.counters = engine.counters();
    if (const auto* m = std::get_if<DenseMatrix>(&r.outcome)) {
      c = *m;
    } else {
      o.crashed = true;
      const NvmImage& snap = std::get<CrashOutcome>(r.outcome).snapshot;
      const abft::RecoveryPlan rp = abft::recover(snap, r.handles, config);
      static constexpr const char* kPhase[] = {"not_started", "multiply", "add", "final"};
      o.work_lost = rp.recompute_submults.size() + rp.recompute_addition_blocks.size();
      o.recovery = {{"phase", kPhase[static_cast<int>(rp.phase)]},
                    {"submult_progress", rp.submult_progress},
                    {"block_progress", rp.block_progress},
                    {"recompute_submults", to_array(rp.recompute_submults)},
                    {"resume_submult", rp.resume_submult},
                    {"recompute_addition_blocks", to_array(rp.recompute_addition_blocks)},
                    {"resume_block", rp.resume_block},
                    {"corrected_elements", rp.corrected_elements}};
      c = abft::finish(snap, problem, config, rp, fresh);
      o.recovery_counters = fresh.counters();
    }
  } else {
    std::uint64_t completed = 0;
    std::optional<CheckpointRegion> region;
    const bool ckpt = spec.mode == Mode::kCheckpoint;
    auto extra = [&](Arena& a) {
      if (!ckpt) return;
      const ArenaLayout& l = a.layout();
      region.emplace(a, std::vector<ArrayHandle>{*l.find("c_final"), *l.find("progress")});
    };
    auto hook = [&](Arena& a, const abft::NativeHandles& h, std::uint64_t s) {
      completed = s;
      if (!ckpt) return;
      a.store_i64(h.progress, 0, static_cast<std::int64_t>(s));
      region->checkpoint(a);
    };
    const abft::NativeResult r = abft::run_native(problem, config, engine, plan, hook, extra);
    o.counters = engine.counters();
    if (const auto* m = std::get_if<DenseMatrix>(&r.outcome)) {
      c = *m;
    } else {
      o.crashed = true;
      const NvmImage& snap = std::get<CrashOutcome>(r.outcome).snapshot;
      std::optional<abft::NativeState> state;
      if (ckpt) {
        try {
          const auto restored = CheckpointRegion::restore(snap, region->layout());
          DenseMatrix cm(config.dim(), config.dim());
          cm.data = restored.arrays[0].f64;
          state = abft::NativeState{static_cast<std::uint64_t>(restored.arrays[1].i64[0]), cm};
          o.recovery["checkpoint_id"] = restored.id;
        } catch (const Error& e) {
          if (e.code() != ErrorCode::kNoCommittedCheckpoint) throw;
          o.recovery["checkpoint_id"] = 0;
        }
      }
      const std::uint64_t restart_at = state ? state->completed_submults : 0;
      o.work_lost = completed - restart_at;
      o.recovery["completed_submults"] = completed;
      o.recovery["restart_submult"] = restart_at;
      o.recovery["submults_lost"] = o.work_lost;
      const abft::NativeResult again =
          abft::run_native(problem, config, fresh, CrashPlan::never(), hook, extra, state);
      c = std::get<DenseMatrix>(again.outcome);
      o.recovery_counters = fresh.counters();
    }
  }
  o.error = abft::relative_error(c, reference);
  o.valid = o.error <= kAbftResultTolerance;
  o.result = {{"relative_error", o.error}, {"tolerance", kAbftResultTolerance}};
  return o;
}

// ---------------------------------------------------------------------------
// MC

Outcome run_mc(const ExperimentSpec& spec) {
  mc::Config config = spec.mc;
  config.seed = spec.seed;
  const mc::Grids grids = mc::build_grids(config);
  const mc::Counts reference = mc::reference_counts(config, grids);
  const double ref_dev = mc::max_pairwise_deviation(reference.counters, config.n_lookups);
  const CrashPlan plan = spec.crash_plan();
  Outcome o;
  SimEngine engine(spec.cache);
  SimEngine fresh(spec.cache);

  mc::Persistence persistence = mc::Persistence::kNone;
  if (spec.mode == Mode::kAlgorithm)
    persistence = config.flushing ? mc::Persistence::kPeriodic : mc::Persistence::kIndexOnly;
  std::optional<CheckpointRegion> region;
  mc::Hooks hooks;
  if (spec.mode == Mode::kCheckpoint) {
    hooks.extra_allocations = [&](Arena& a) {
      const ArenaLayout& l = a.layout();
      std::vector<ArrayHandle> protect{*l.find("macro_xs")};
      for (int k = 1; k <= mc::kChannels; ++k) protect.push_back(*l.find("counter_" + std::to_string(k)));
      protect.push_back(*l.find("lookup_index"));
      region.emplace(a, std::move(protect));
    };
    hooks.round = [&](Arena& a, const mc::Handles& h, std::uint64_t next) {
      a.store_i64(h.lookup_index, 0, static_cast<std::int64_t>(next));
      region->checkpoint(a);
    };
  }

  const mc::RunResult r = mc::run_with(config, grids, engine, plan, persistence, hooks);
  o.counters = engine.counters();
  mc::Counts final_counts;
  std::uint64_t rounds = r.flush_rounds;
  if (const auto* c = std::get_if<mc::Counts>(&r.outcome)) {
    final_counts = *c;
  } else {
    o.crashed = true;
    const NvmImage& snap = std::get<CrashOutcome>(r.outcome).snapshot;
    std::optional<mc::State> state;
    if (spec.mode == Mode::kAlgorithm) {
      state = mc::read_state(snap, r.handles);
    } else if (spec.mode == Mode::kCheckpoint) {
      try {
        const auto restored = CheckpointRegion::restore(snap, region->layout());
        mc::State st;
        for (int k = 0; k < mc::kChannels; ++k) {
          st.macro_xs[k] = restored.arrays[0].f64[k];
          st.counters[k] = static_cast<std::uint64_t>(restored.arrays[1 + k].i64[0]);
        }
        st.next_index = static_cast<std::uint64_t>(restored.arrays[6].i64[0]);
        state = st;
        o.recovery["checkpoint_id"] = restored.id;
      } catch (const Error& e) {
        if (e.code() != ErrorCode::kNoCommittedCheckpoint) throw;
        o.recovery["checkpoint_id"] = 0;
      }
    }
    const std::uint64_t crash_index = r.lookups;
    const std::uint64_t resume_index = state ? state->next_index : 0;
    o.work_lost = crash_index > resume_index ? crash_index - resume_index : 0;
    ordered_json persisted = ordered_json::array();
    if (state)
      for (auto v : state->counters) persisted.push_back(v);
    o.recovery["crash_index"] = crash_index;
    o.recovery["resume_index"] = resume_index;
    o.recovery["lookups_reexecuted"] = o.work_lost;
    o.recovery["persisted_counters"] = persisted;
    const mc::RunResult again =
        mc::run_with(config, grids, fresh, CrashPlan::never(), persistence, hooks, state);
    final_counts = std::get<mc::Counts>(again.outcome);
    rounds += again.flush_rounds;
    o.recovery_counters = fresh.counters();
  }
  o.deviation = mc::max_pairwise_deviation(final_counts.counters, config.n_lookups);
  if (!o.crashed) {
    o.valid = final_counts.counters == reference.counters;
  } else {
    o.valid = *o.deviation <= ref_dev + kMcDeviationSlack;
  }
  o.error = std::abs(*o.deviation - ref_dev);
  o.result = {{"counters", to_array(final_counts.counters)},
              {"reference_counters", to_array(reference.counters)},
              {"reference_deviation", ref_dev},
              {"flush_period", config.effective_flush_period()},
              {"flush_rounds", rounds}};
  return o;
}

RunReport run_once(const ExperimentSpec& spec) {
  spec.validate();
  Outcome o;
  switch (spec.workload) {
    case Workload::kCg: o = run_cg(spec); break;
    case Workload::kAbft: o = run_abft(spec); break;
    case Workload::kMc: o = run_mc(spec); break;
  }
  RunReport rep;
  rep.result_valid = o.valid;
  ordered_json& b = rep.body;
  b["workload"] = workload_name(spec.workload);
  b["mode"] = mode_name(spec.mode);
  b["spec"] = spec_to_json(spec);
  b["crashed"] = o.crashed;
  b["work_lost"] = o.work_lost;
  if (spec.workload == Workload::kCg) {
    b["iterations_lost"] = o.work_lost;
    b["probes"] = o.probes;
  }
  if (o.deviation) b["max_counter_deviation"] = *o.deviation;
  b["recovery"] = o.recovery;
  b["result"] = o.result;
  b["result_valid"] = o.valid;
  b["counters"] = counters_to_json(o.counters);
  b["recovery_counters"] = counters_to_json(o.recovery_counters);
  return rep;
}

std::string fmt_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}

}  // namespace

std::string_view workload_name(Workload w) {
  switch (w) {
    case Workload::kCg: return "cg";
    case Workload::kAbft: return "abft";
    case Workload::kMc: return "mc";
  }
  return "";
}

std::string_view mode_name(Mode m) {
  switch (m) {
    case Mode::kNative: return "native";
    case Mode::kCheckpoint: return "checkpoint";
    case Mode::kAlgorithm: return "algorithm";
  }
  return "";
}

CrashPlan ExperimentSpec::crash_plan() const {
  switch (crash.kind) {
    case CrashPlan::Kind::kNever: return CrashPlan::never();
    case CrashPlan::Kind::kAfterOpCount: return CrashPlan::after_op_count(crash.op_count);
    case CrashPlan::Kind::kAtLabel:
      return CrashPlan::at_label(crash.label.empty() ? default_label(workload) : crash.label,
                                 crash.occurrence);
  }
  return CrashPlan::never();
}

void ExperimentSpec::validate() const {
  cache.validate();
  if (repetitions == 0) throw Error(ErrorCode::kInvalidConfig, "repetitions must be >= 1");
  if (crash.kind == CrashPlan::Kind::kAtLabel && crash.occurrence == 0)
    throw Error(ErrorCode::kInvalidConfig, "crash occurrence must be >= 1");
  switch (workload) {
    case Workload::kCg:
      if (cg.matrix_file.empty() && cg.n == 0) throw Error(ErrorCode::kInvalidConfig, "cg.n must be >= 1");
      if (!(cg.tol > 0.0)) throw Error(ErrorCode::kInvalidConfig, "cg.tol must be > 0");
      break;
    case Workload::kAbft: abft::Config{abft.n, abft.k, abft.tol}.validate(); break;
    case Workload::kMc: mc.validate(); break;
  }
}

ExperimentSpec spec_from_json(const json& j) {
  reject_unknown(j, {"workload", "mode", "seed", "repetitions", "cache", "crash", "cg", "abft", "mc"},
                 "spec");
  ExperimentSpec s;
  std::string text;
  if (j.contains("workload")) {
    read_key(j, "workload", text);
    s.workload = parse_workload(text);
  }
  if (j.contains("mode")) {
    read_key(j, "mode", text);
    s.mode = parse_mode(text);
  }
  read_key(j, "seed", s.seed);
  read_key(j, "repetitions", s.repetitions);
  if (j.contains("cache")) {
    const json& c = j["cache"];
    reject_unknown(c, {"line_size", "capacity", "associativity", "eviction", "write_policy"},
                   "cache");
    read_key(c, "line_size", s.cache.line_size);
    read_key(c, "capacity", s.cache.capacity);
    read_key(c, "associativity", s.cache.associativity);
    // Fixed by the model; accepted so normalized specs parse back.
    for (const auto& [key, only] : {std::pair{"eviction", "lru"},
                                    std::pair{"write_policy", "write_back_write_allocate"}}) {
      if (!c.contains(key)) continue;
      read_key(c, key, text);
      if (text != only)
        throw Error(ErrorCode::kInvalidConfig,
                    std::string("cache.") + key + " must be \"" + only + "\"");
    }
  }
  if (j.contains("crash")) {
    const json& c = j["crash"];
    reject_unknown(c, {"kind", "label", "occurrence", "op_count"}, "crash");
    if (c.contains("kind")) {
      read_key(c, "kind", text);
      s.crash.kind = parse_crash_kind(text);
    }
    read_key(c, "label", s.crash.label);
    read_key(c, "occurrence", s.crash.occurrence);
    read_key(c, "op_count", s.crash.op_count);
  }
  if (j.contains("cg")) {
    const json& c = j["cg"];
    reject_unknown(c, {"n", "offdiag", "max_iters", "tol", "matrix_file"}, "cg");
    read_key(c, "n", s.cg.n);
    read_key(c, "offdiag", s.cg.offdiag);
    read_key(c, "max_iters", s.cg.max_iters);
    read_key(c, "tol", s.cg.tol);
    read_key(c, "matrix_file", s.cg.matrix_file);
  }
  if (j.contains("abft")) {
    const json& c = j["abft"];
    reject_unknown(c, {"n", "k", "tol", "a_file", "b_file"}, "abft");
    read_key(c, "n", s.abft.n);
    read_key(c, "k", s.abft.k);
    read_key(c, "tol", s.abft.tol);
    read_key(c, "a_file", s.abft.a_file);
    read_key(c, "b_file", s.abft.b_file);
  }
  if (j.contains("mc")) {
    const json& c = j["mc"];
    reject_unknown(c,
                   {"n_nuclides", "gridpoints", "n_lookups", "flush_period", "flushing",
                    "symmetric_channels"},
                   "mc");
    read_key(c, "n_nuclides", s.mc.n_nuclides);
    read_key(c, "gridpoints", s.mc.gridpoints);
    read_key(c, "n_lookups", s.mc.n_lookups);
    read_key(c, "flush_period", s.mc.flush_period);
    read_key(c, "flushing", s.mc.flushing);
    read_key(c, "symmetric_channels", s.mc.symmetric_channels);
  }
  return s;
}

ordered_json spec_to_json(const ExperimentSpec& s) {
  ordered_json j;
  j["workload"] = workload_name(s.workload);
  j["mode"] = mode_name(s.mode);
  j["seed"] = s.seed;
  j["repetitions"] = s.repetitions;
  j["cache"] = {{"line_size", s.cache.line_size},
                {"capacity", s.cache.capacity},
                {"associativity", s.cache.associativity},
                {"eviction", "lru"},
                {"write_policy", "write_back_write_allocate"}};
  ordered_json crash = {{"kind", crash_kind_name(s.crash.kind)}};
  if (s.crash.kind == CrashPlan::Kind::kAtLabel) {
    crash["label"] = s.crash.label.empty() ? default_label(s.workload) : s.crash.label;
    crash["occurrence"] = s.crash.occurrence;
  } else if (s.crash.kind == CrashPlan::Kind::kAfterOpCount) {
    crash["op_count"] = s.crash.op_count;
  }
  j["crash"] = crash;
  switch (s.workload) {
    case Workload::kCg:
      j["cg"] = {{"n", s.cg.n},
                 {"offdiag", s.cg.offdiag},
                 {"max_iters", s.cg.max_iters},
                 {"tol", s.cg.tol},
                 {"matrix_file", s.cg.matrix_file}};
      break;
    case Workload::kAbft:
      j["abft"] = {{"n", s.abft.n},
                   {"k", s.abft.k},
                   {"tol", s.abft.tol},
                   {"a_file", s.abft.a_file},
                   {"b_file", s.abft.b_file}};
      break;
    case Workload::kMc:
      j["mc"] = {{"n_nuclides", s.mc.n_nuclides},
                 {"gridpoints", s.mc.gridpoints},
                 {"n_lookups", s.mc.n_lookups},
                 {"flush_period", s.mc.effective_flush_period()},
                 {"flushing", s.mc.flushing},
                 {"symmetric_channels", s.mc.symmetric_channels}};
      break;
  }
  return j;
}

ExperimentSpec parse_spec(std::string_view text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::kParseError, e.what());
  }
  return spec_from_json(j);
}

ordered_json counters_to_json(const EventCounters& c) {
  return {{"loads", c.loads},
          {"stores", c.stores},
          {"hits", c.hits},
          {"misses", c.misses},
          {"evictions", c.evictions},
          {"writebacks", c.writebacks},
          {"flush_ops", c.flush_ops},
          {"flushed_dirty", c.flushed_dirty},
          {"flushed_clean_or_absent", c.flushed_clean_or_absent},
          {"memcpy_bytes", c.memcpy_bytes}};
}

RunReport run(const ExperimentSpec& spec) {
  RunReport first = run_once(spec);
  bool identical = true;
  const std::string reference = first.body.dump();
  for (std::uint64_t r = 1; r < spec.repetitions; ++r)
    identical = identical && run_once(spec).body.dump() == reference;
  first.body["repetitions_identical"] = identical;
  first.result_valid = first.result_valid && identical;
  return first;
}

ordered_json layout_to_json(const ArenaLayout& layout) {
  ordered_json out = ordered_json::array();
  for (const auto& a : layout.allocations)
    out.push_back({{"name", a.name},
                   {"kind", element_kind_name(a.kind)},
                   {"base", a.base},
                   {"length", a.length}});
  return out;
}

ArenaLayout layout_from_json(const json& j) {
  if (!j.is_array()) throw Error(ErrorCode::kInvalidConfig, "layout must be an array");
  ArenaLayout layout;
  for (const auto& e : j) {
    reject_unknown(e, {"name", "kind", "base", "length"}, "layout entry");
    ArrayHandle h;
    std::string kind;
    read_key(e, "name", h.name);
    read_key(e, "kind", kind);
    read_key(e, "base", h.base);
    read_key(e, "length", h.length);
    if (kind == element_kind_name(ElementKind::kF64)) h.kind = ElementKind::kF64;
    else if (kind == element_kind_name(ElementKind::kI64)) h.kind = ElementKind::kI64;
    else throw Error(ErrorCode::kInvalidConfig, "unknown element kind '" + kind + "'");
    layout.allocations.push_back(std::move(h));
  }
  return layout;
}

SweepAxis parse_axis(std::string_view name) {
  if (name == "cache_bytes") return SweepAxis::kCacheBytes;
  if (name == "problem_size") return SweepAxis::kProblemSize;
  if (name == "crash_point") return SweepAxis::kCrashPoint;
  throw Error(ErrorCode::kInvalidConfig, "unknown sweep axis '" + std::string(name) + "'");
}

std::string_view axis_name(SweepAxis axis) {
  switch (axis) {
    case SweepAxis::kCacheBytes: return "cache_bytes";
    case SweepAxis::kProblemSize: return "problem_size";
    case SweepAxis::kCrashPoint: return "crash_point";
  }
  return "";
}

ExperimentSpec apply_axis(const ExperimentSpec& base, SweepAxis axis, std::uint64_t value) {
  ExperimentSpec s = base;
  switch (axis) {
    case SweepAxis::kCacheBytes: s.cache.capacity = value; break;
    case SweepAxis::kProblemSize:
      switch (s.workload) {
        case Workload::kCg:
          if (!s.cg.matrix_file.empty())
            throw Error(ErrorCode::kInvalidConfig, "problem_size sweep needs a generated matrix");
          s.cg.n = value;
          break;
        case Workload::kAbft: s.abft.n = value; break;
        case Workload::kMc: s.mc.gridpoints = value; break;
      }
      break;
    case SweepAxis::kCrashPoint:
      if (s.crash.kind == CrashPlan::Kind::kAfterOpCount) {
        s.crash.op_count = value;
      } else {
        s.crash.kind = CrashPlan::Kind::kAtLabel;
        s.crash.occurrence = value;
      }
      break;
  }
  return s;
}

bool SweepResult::all_valid() const {
  for (const auto& r : reports)
    if (!r.result_valid) return false;
  return true;
}

SweepResult sweep(const ExperimentSpec& base, SweepAxis axis,
                  const std::vector<std::uint64_t>& values) {
  SweepResult out;
  if (values.empty()) return out;
  std::ostringstream csv;
  csv << axis_name(axis)
      << ",workload,mode,crashed,work_lost,probes,max_counter_deviation,result_error,result_valid,"
         "flush_ops,memcpy_bytes,loads,stores,misses,writebacks\n";
  for (std::uint64_t v : values) {
    RunReport rep = run(apply_axis(base, axis, v));
    const ordered_json& b = rep.body;
    const ordered_json& c = b["counters"];
    csv << v << ',' << b["workload"].get<std::string>() << ',' << b["mode"].get<std::string>()
        << ',' << (b["crashed"].get<bool>() ? "true" : "false") << ','
        << b["work_lost"].get<std::uint64_t>() << ','
        << (b.contains("probes") ? b["probes"].get<std::uint64_t>() : 0) << ','
        << (b.contains("max_counter_deviation") ? fmt_double(b["max_counter_deviation"].get<double>())
                                                : std::string())
        << ',' << fmt_double(b["result"]["relative_error"].is_number()
                                 ? b["result"]["relative_error"].get<double>()
                                 : 0.0)
        << ',' << (rep.result_valid ? "true" : "false") << ','
        << c["flush_ops"].get<std::uint64_t>() << ',' << c["memcpy_bytes"].get<std::uint64_t>()
        << ',' << c["loads"].get<std::uint64_t>() << ',' << c["stores"].get<std::uint64_t>() << ','
        << c["misses"].get<std::uint64_t>() << ',' << c["writebacks"].get<std::uint64_t>() << '\n';
    out.reports.push_back(std::move(rep));
  }
  out.csv = csv.str();
  return out;
}

}  // namespace adcc::harness
