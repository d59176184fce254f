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
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "adcc/abft.hpp"
#include "adcc/arena.hpp"
#include "adcc/mc.hpp"
#include "adcc/sim_engine.hpp"

namespace adcc::harness {

enum class Workload { kCg, kAbft, kMc };
enum class Mode { kNative, kCheckpoint, kAlgorithm };

std::string_view workload_name(Workload w);
std::string_view mode_name(Mode m);

struct CrashSpec {
  CrashPlan::Kind kind = CrashPlan::Kind::kNever;
  std::string label;  // empty: the workload's per-iteration label
  std::uint64_t occurrence = 1;
  std::uint64_t op_count = 0;
};

struct CgSpec {
  std::uint64_t n = 256;
  std::uint64_t offdiag = 4;
  std::uint64_t max_iters = 20;
  double tol = 1e-8;
  std::string matrix_file;  // Matrix Market; overrides n/offdiag when set
};

struct AbftSpec {
  std::uint64_t n = 48;
  std::uint64_t k = 7;
  double tol = abft::kDefaultTolerance;
  std::string a_file, b_file;  // dense binary or .csv; random when empty
};

/// Fully determines a run.
struct ExperimentSpec {
  Workload workload = Workload::kCg;
  Mode mode = Mode::kAlgorithm;
  std::uint64_t seed = 42;
  std::uint64_t repetitions = 1;
  CacheConfig cache;
  CrashSpec crash;
  CgSpec cg;
  AbftSpec abft;
  mc::Config mc;  // mc.seed is ignored in favour of `seed`

  CrashPlan crash_plan() const;
  void validate() const;
};

/// Missing keys keep their defaults; unknown keys are rejected.
ExperimentSpec spec_from_json(const nlohmann::json& j);
nlohmann::ordered_json spec_to_json(const ExperimentSpec& spec);
ExperimentSpec parse_spec(std::string_view text);

nlohmann::ordered_json counters_to_json(const EventCounters& c);

/// [{"name", "kind", "base", "length"}, ...] in allocation order.
nlohmann::ordered_json layout_to_json(const ArenaLayout& layout);
ArenaLayout layout_from_json(const nlohmann::json& j);

struct RunReport {
  bool result_valid = false;
  nlohmann::ordered_json body;

  std::string dump() const { return body.dump(2); }
};

/// Executes, recovers if the plan fired, validates against the workload oracle.
RunReport run(const ExperimentSpec& spec);

enum class SweepAxis { kCacheBytes, kProblemSize, kCrashPoint };
SweepAxis parse_axis(std::string_view name);
std::string_view axis_name(SweepAxis axis);

/// Applies one axis value to a copy of the template.
ExperimentSpec apply_axis(const ExperimentSpec& base, SweepAxis axis, std::uint64_t value);

struct SweepResult {
  std::vector<RunReport> reports;
  std::string csv;
  bool all_valid() const;
};

SweepResult sweep(const ExperimentSpec& base, SweepAxis axis,
                  const std::vector<std::uint64_t>& values);

}  // namespace adcc::harness
