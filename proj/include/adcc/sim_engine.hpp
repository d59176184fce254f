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

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <cstring>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "adcc/error.hpp"

namespace adcc {

using Address = std::uint64_t;

/// Geometry of the simulated volatile cache. Eviction is always LRU and the
/// write policy is always write-back + write-allocate.
struct CacheConfig {
  std::uint64_t line_size = 64;
  std::uint64_t capacity = 16 * 1024;
  /// Ways per set; 0 means fully associative.
  std::uint32_t associativity = 0;

  /// Throws Error(kInvalidConfig) when the geometry is inconsistent.
  void validate() const;

  std::uint64_t num_lines() const { return capacity / line_size; }
  std::uint64_t ways() const { return associativity == 0 ? num_lines() : associativity; }
  std::uint64_t num_sets() const { return num_lines() / ways(); }

  bool operator==(const CacheConfig&) const = default;
};

/// Byte-addressable persistent memory image. Bytes never written read as zero.
class NvmImage {
 public:
  NvmImage() = default;

  void read(Address addr, std::byte* out, std::size_t len) const {
    if (addr >= bytes_.size()) {
      std::memset(out, 0, len);
      return;
    }
    const std::size_t avail = std::min<std::size_t>(len, bytes_.size() - addr);
    std::memcpy(out, bytes_.data() + addr, avail);
    if (avail < len) std::memset(out + avail, 0, len - avail);
  }

  void write(Address addr, const std::byte* in, std::size_t len) {
    if (addr + len > bytes_.size()) bytes_.resize(addr + len);
    std::memcpy(bytes_.data() + addr, in, len);
  }

  double read_f64(Address addr) const;
  std::int64_t read_i64(Address addr) const;

  /// Highest address ever written, plus one.
  std::uint64_t extent() const { return bytes_.size(); }

  /// Equality treats the implicit zero tail as part of the image.
  bool operator==(const NvmImage& other) const;

 private:
  std::vector<std::byte> bytes_;
};

/// What survives a crash: the NVM image at the moment the plan fired.
struct CrashOutcome {
  NvmImage snapshot;
};

struct EventCounters {
  std::uint64_t loads = 0;
  std::uint64_t stores = 0;
  std::uint64_t hits = 0;
  std::uint64_t misses = 0;
  std::uint64_t evictions = 0;
  std::uint64_t writebacks = 0;
  std::uint64_t flush_ops = 0;
  std::uint64_t flushed_dirty = 0;
  std::uint64_t flushed_clean_or_absent = 0;
  std::uint64_t memcpy_bytes = 0;

  bool operator==(const EventCounters&) const = default;
  EventCounters operator-(const EventCounters& rhs) const;
};

class CrashPlan {
 public:
  enum class Kind { kNever, kAfterOpCount, kAtLabel };

  static CrashPlan never() { return CrashPlan{}; }
  /// Fires before the memory operation that would be number `ops + 1`.
  static CrashPlan after_op_count(std::uint64_t ops);
  /// Fires when `label` is emitted for the `occurrence`-th time (1-based).
  static CrashPlan at_label(std::string label, std::uint64_t occurrence);

  Kind kind() const { return kind_; }
  std::uint64_t op_count() const { return op_count_; }
  const std::string& label() const { return label_; }
  std::uint64_t occurrence() const { return occurrence_; }

  bool operator==(const CrashPlan&) const = default;

 private:
  Kind kind_ = Kind::kNever;
  std::uint64_t op_count_ = 0;
  std::string label_;
  std::uint64_t occurrence_ = 0;
};

struct CacheLineEntry {
  Address line_address = 0;
  bool dirty = false;
  std::vector<std::byte> data;
  std::uint64_t lru_stamp = 0;
};

/// Write-back, write-allocate LRU cache over an NVM image, with CLFLUSH and
/// crash injection. Single-threaded; one instance per experiment.
class SimEngine {
 public:
  explicit SimEngine(CacheConfig config, CrashPlan plan = CrashPlan::never());
  /// Starts from an existing NVM image (e.g. a crash snapshot) with a cold cache.
  SimEngine(CacheConfig config, NvmImage initial, CrashPlan plan = CrashPlan::never());

  SimEngine(const SimEngine&) = delete;
  SimEngine& operator=(const SimEngine&) = delete;
  SimEngine(SimEngine&&) = default;
  SimEngine& operator=(SimEngine&&) = default;

  void read(Address addr, std::span<std::byte> out);
  void write(Address addr, std::span<const std::byte> in);
  void clflush(Address addr);

  double read_f64(Address addr) {
    double v;
    read(addr, std::as_writable_bytes(std::span(&v, 1)));
    return v;
  }
  void write_f64(Address addr, double v) { write(addr, std::as_bytes(std::span(&v, 1))); }
  std::int64_t read_i64(Address addr) {
    std::int64_t v;
    read(addr, std::as_writable_bytes(std::span(&v, 1)));
    return v;
  }
  void write_i64(Address addr, std::int64_t v) { write(addr, std::as_bytes(std::span(&v, 1))); }

  /// Marks the engine crashed and returns the surviving NVM image. Cache
  /// contents are not merged in; they stay visible to inspect_cache().
  NvmImage crash();

  /// Statement hook. Throws CrashFired when the crash plan triggers here.
  void maybe_fire_crash(std::string_view label = {});

  /// Discards the (volatile) cache, clears the crashed flag and disarms the plan.
  void restart();

  /// Writes straight into NVM, bypassing the cache. Models initialization
  /// that has already been made durable. Not counted as a memory operation.
  void persist_initialize(Address addr, std::span<const std::byte> bytes);

  /// Registers [base, base + len) as addressable. Accesses elsewhere throw kOutOfArena.
  void map_range(Address base, std::uint64_t len);

  void note_memcpy(std::uint64_t bytes) { counters_.memcpy_bytes += bytes; }
  void set_crash_plan(CrashPlan plan);

  std::vector<CacheLineEntry> inspect_cache() const;
  const NvmImage& nvm() const { return nvm_; }
  const EventCounters& counters() const { return counters_; }
  const CacheConfig& config() const { return config_; }
  const CrashPlan& crash_plan() const { return plan_; }
  bool crashed() const { return crashed_; }
  /// Program-level memory operations (read/write/clflush) issued so far.
  std::uint64_t op_count() const { return op_count_; }

 private:
  static constexpr std::uint32_t kNone = 0xffffffffu;

  struct Slot {
    std::uint64_t line = 0;  // line number (address >> line_shift)
    std::uint64_t stamp = 0;
    std::uint32_t prev = kNone;
    std::uint32_t next = kNone;
    bool valid = false;
    bool dirty = false;
  };

  struct SetState {
    std::uint32_t mru = kNone;
    std::uint32_t lru = kNone;
    std::uint32_t free = kNone;  // singly linked through Slot::next
  };

  void reset_cache();
  void begin_op(Address addr, std::size_t len);
  void fire();
  void check_mapped(Address addr, std::size_t len);
  void transfer(Address addr, std::byte* buf, std::size_t len, bool is_write);
  std::uint32_t touch_line(std::uint64_t line);
  void unlink(SetState& set, std::uint32_t idx);
  void push_mru(SetState& set, std::uint32_t idx);
  void write_back(std::uint32_t idx);
  std::byte* slot_data(std::uint32_t idx) { return data_.data() + idx * config_.line_size; }

  CacheConfig config_;
  CrashPlan plan_;
  unsigned line_shift_ = 6;
  std::uint64_t num_sets_ = 1;
  std::uint64_t ways_ = 1;

  std::vector<Slot> slots_;
  std::vector<SetState> sets_;
  std::vector<std::byte> data_;
  std::unordered_map<std::uint64_t, std::uint32_t> index_;

  NvmImage nvm_;
  EventCounters counters_;
  std::vector<std::pair<Address, Address>> mapped_;  // sorted, half-open
  std::uint64_t stamp_ = 0;
  std::uint64_t op_count_ = 0;
  std::uint64_t label_hits_ = 0;
  bool crashed_ = false;
};

}  // namespace adcc
