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
#include <span>
#include <string>
#include <vector>

#include "adcc/sim_engine.hpp"

namespace adcc {

enum class ElementKind { kF64, kI64 };

std::string_view element_kind_name(ElementKind kind) noexcept;

/// A named array of 8-byte elements living in simulated memory.
/// Element i sits at base + 8 * i.
struct ArrayHandle {
  std::string name;
  ElementKind kind = ElementKind::kF64;
  std::uint64_t length = 0;
  Address base = 0;

  Address address_of(std::uint64_t i) const { return base + 8 * i; }
  bool operator==(const ArrayHandle&) const = default;
};

/// Append-only allocation record; serializable for snapshot tooling.
struct ArenaLayout {
  std::vector<ArrayHandle> allocations;

  const ArrayHandle* find(std::string_view name) const;
  bool operator==(const ArenaLayout&) const = default;
};

/// Typed persistent objects over a SimEngine. Every allocation starts on a
/// fresh cache line, so distinct objects never share a line.
class Arena {
 public:
  static constexpr Address kDefaultBase = 0x1000;
  static constexpr Address kDefaultLimit = Address{1} << 40;

  explicit Arena(SimEngine& engine, Address base = kDefaultBase, Address limit = kDefaultLimit);

  /// Reserves a new array. Initial values (if any) are persist-initialized
  /// straight into NVM; they must match `length`.
  ArrayHandle alloc_f64(std::string name, std::uint64_t length,
                        std::span<const double> initial = {});
  ArrayHandle alloc_i64(std::string name, std::uint64_t length,
                        std::span<const std::int64_t> initial = {});

  double load_f64(const ArrayHandle& h, std::uint64_t i) {
    check(h, i, ElementKind::kF64);
    return engine_->read_f64(h.address_of(i));
  }
  void store_f64(const ArrayHandle& h, std::uint64_t i, double v) {
    check(h, i, ElementKind::kF64);
    engine_->write_f64(h.address_of(i), v);
  }
  std::int64_t load_i64(const ArrayHandle& h, std::uint64_t i) {
    check(h, i, ElementKind::kI64);
    return engine_->read_i64(h.address_of(i));
  }
  void store_i64(const ArrayHandle& h, std::uint64_t i, std::int64_t v) {
    check(h, i, ElementKind::kI64);
    engine_->write_i64(h.address_of(i), v);
  }

  /// CLFLUSH of the line holding element i.
  void flush_element(const ArrayHandle& h, std::uint64_t i);
  /// One CLFLUSH per distinct line covering elements [lo, hi).
  void flush_range(const ArrayHandle& h, std::uint64_t lo, std::uint64_t hi);

  /// Overwrites elements [offset, offset + values.size()) directly in NVM.
  void persist_f64(const ArrayHandle& h, std::uint64_t offset, std::span<const double> values);
  void persist_i64(const ArrayHandle& h, std::uint64_t offset,
                   std::span<const std::int64_t> values);

  static double read_f64(const NvmImage& snapshot, const ArrayHandle& h, std::uint64_t i);
  static std::int64_t read_i64(const NvmImage& snapshot, const ArrayHandle& h, std::uint64_t i);
  /// Reads elements [lo, hi) of an f64 array out of a snapshot.
  static std::vector<double> read_f64_range(const NvmImage& snapshot, const ArrayHandle& h,
                                            std::uint64_t lo, std::uint64_t hi);

  const ArenaLayout& layout() const { return layout_; }
  SimEngine& engine() { return *engine_; }
  std::uint64_t line_size() const { return engine_->config().line_size; }

 private:
  ArrayHandle reserve(std::string name, ElementKind kind, std::uint64_t length);

  static void check(const ArrayHandle& h, std::uint64_t i, ElementKind kind) {
    if (i >= h.length)
      throw Error(ErrorCode::kIndexOutOfRange,
                  h.name + "[" + std::to_string(i) + "] (length " + std::to_string(h.length) + ")");
    if (h.kind != kind) throw Error(ErrorCode::kKindMismatch, h.name);
  }

  SimEngine* engine_;
  Address next_;
  Address limit_;
  ArenaLayout layout_;
};

}  // namespace adcc
