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

#include "adcc/sim_engine.hpp"

#include <algorithm>
#include <bit>

namespace adcc {

void CacheConfig::validate() const {
  if (line_size < 8 || !std::has_single_bit(line_size))
    throw Error(ErrorCode::kInvalidConfig, "line_size must be a power of two >= 8");
  if (capacity == 0 || capacity % line_size != 0)
    throw Error(ErrorCode::kInvalidConfig, "capacity must be a positive multiple of line_size");
  if (associativity != 0 && capacity % (line_size * associativity) != 0)
    throw Error(ErrorCode::kInvalidConfig,
                "capacity must be a multiple of line_size * associativity");
  if (num_lines() >= 0xffffffffu)
    throw Error(ErrorCode::kInvalidConfig, "too many cache lines");
}

double NvmImage::read_f64(Address addr) const {
  double v;
  read(addr, reinterpret_cast<std::byte*>(&v), sizeof v);
  return v;
}

std::int64_t NvmImage::read_i64(Address addr) const {
  std::int64_t v;
  read(addr, reinterpret_cast<std::byte*>(&v), sizeof v);
  return v;
}

bool NvmImage::operator==(const NvmImage& other) const {
  const auto& a = bytes_.size() <= other.bytes_.size() ? bytes_ : other.bytes_;
  const auto& b = bytes_.size() <= other.bytes_.size() ? other.bytes_ : bytes_;
  if (!std::equal(a.begin(), a.end(), b.begin())) return false;
  return std::all_of(b.begin() + static_cast<std::ptrdiff_t>(a.size()), b.end(),
                     [](std::byte x) { return x == std::byte{0}; });
}

EventCounters EventCounters::operator-(const EventCounters& r) const {
  return {loads - r.loads,
          stores - r.stores,
          hits - r.hits,
          misses - r.misses,
          evictions - r.evictions,
          writebacks - r.writebacks,
          flush_ops - r.flush_ops,
          flushed_dirty - r.flushed_dirty,
          flushed_clean_or_absent - r.flushed_clean_or_absent,
          memcpy_bytes - r.memcpy_bytes};
}

CrashPlan CrashPlan::after_op_count(std::uint64_t ops) {
  CrashPlan p;
  p.kind_ = Kind::kAfterOpCount;
  p.op_count_ = ops;
  return p;
}

CrashPlan CrashPlan::at_label(std::string label, std::uint64_t occurrence) {
  if (occurrence < 1) throw Error(ErrorCode::kInvalidArgument, "crash occurrence must be >= 1");
  CrashPlan p;
  p.kind_ = Kind::kAtLabel;
  p.label_ = std::move(label);
  p.occurrence_ = occurrence;
  return p;
}

SimEngine::SimEngine(CacheConfig config, CrashPlan plan)
    : SimEngine(config, NvmImage{}, std::move(plan)) {}

SimEngine::SimEngine(CacheConfig config, NvmImage initial, CrashPlan plan)
    : config_(config), plan_(std::move(plan)), nvm_(std::move(initial)) {
  config_.validate();
  line_shift_ = static_cast<unsigned>(std::countr_zero(config_.line_size));
  num_sets_ = config_.num_sets();
  ways_ = config_.ways();
  slots_.resize(config_.num_lines());
  sets_.resize(num_sets_);
  data_.resize(config_.capacity);
  index_.reserve(config_.num_lines() * 2);
  reset_cache();
}

void SimEngine::restart() {
  reset_cache();
  plan_ = CrashPlan::never();
}

void SimEngine::reset_cache() {
  for (auto& s : slots_) s = Slot{};
  for (std::uint64_t set = 0; set < num_sets_; ++set) {
    SetState& st = sets_[set];
    st = SetState{};
    // Free list in ascending slot order.
    for (std::uint64_t w = ways_; w-- > 0;) {
      const auto idx = static_cast<std::uint32_t>(set * ways_ + w);
      slots_[idx].next = st.free;
      st.free = idx;
    }
  }
  index_.clear();
  crashed_ = false;
  label_hits_ = 0;
}

void SimEngine::set_crash_plan(CrashPlan plan) {
  plan_ = std::move(plan);
  label_hits_ = 0;
}

void SimEngine::map_range(Address base, std::uint64_t len) {
  if (len == 0) return;
  auto it = std::lower_bound(mapped_.begin(), mapped_.end(), std::pair{base, Address{0}});
  mapped_.insert(it, {base, base + len});
}

void SimEngine::check_mapped(Address addr, std::size_t len) {
  // Ranges are sorted by base; find the last one starting at or before addr.
  auto it = std::upper_bound(mapped_.begin(), mapped_.end(), addr,
                             [](Address a, const auto& r) { return a < r.first; });
  if (it == mapped_.begin() || addr + len > std::prev(it)->second)
    throw Error(ErrorCode::kOutOfArena, "address " + std::to_string(addr) + " is not mapped");
}

void SimEngine::fire() {
  crashed_ = true;
  throw CrashFired{};
}

void SimEngine::begin_op(Address addr, std::size_t len) {
  if (crashed_) throw Error(ErrorCode::kCrashedEngine, "engine has crashed");
  if (plan_.kind() == CrashPlan::Kind::kAfterOpCount && op_count_ >= plan_.op_count()) fire();
  if (len == 0 || ((addr + len - 1) >> line_shift_) - (addr >> line_shift_) > 1)
    throw Error(ErrorCode::kInvalidArgument, "access must touch one or two cache lines");
  check_mapped(addr, len);
  ++op_count_;
}

void SimEngine::maybe_fire_crash(std::string_view label) {
  if (crashed_) return;
  switch (plan_.kind()) {
    case CrashPlan::Kind::kNever:
      return;
    case CrashPlan::Kind::kAfterOpCount:
      if (op_count_ >= plan_.op_count()) fire();
      return;
    case CrashPlan::Kind::kAtLabel:
      if (label == plan_.label() && ++label_hits_ == plan_.occurrence()) fire();
      return;
  }
}

void SimEngine::read(Address addr, std::span<std::byte> out) {
  begin_op(addr, out.size());
  ++counters_.loads;
  transfer(addr, out.data(), out.size(), false);
}

void SimEngine::write(Address addr, std::span<const std::byte> in) {
  begin_op(addr, in.size());
  ++counters_.stores;
  transfer(addr, const_cast<std::byte*>(in.data()), in.size(), true);
}

void SimEngine::transfer(Address addr, std::byte* buf, std::size_t len, bool is_write) {
  while (len > 0) {
    const std::uint64_t line = addr >> line_shift_;
    const std::uint64_t off = addr & (config_.line_size - 1);
    const std::size_t chunk = std::min<std::size_t>(len, config_.line_size - off);
    const std::uint32_t idx = touch_line(line);
    if (is_write) {
      std::memcpy(slot_data(idx) + off, buf, chunk);
      slots_[idx].dirty = true;
    } else {
      std::memcpy(buf, slot_data(idx) + off, chunk);
    }
    addr += chunk;
    buf += chunk;
    len -= chunk;
  }
}

void SimEngine::unlink(SetState& set, std::uint32_t idx) {
  Slot& s = slots_[idx];
  if (s.prev != kNone) slots_[s.prev].next = s.next; else set.mru = s.next;
  if (s.next != kNone) slots_[s.next].prev = s.prev; else set.lru = s.prev;
  s.prev = s.next = kNone;
}

void SimEngine::push_mru(SetState& set, std::uint32_t idx) {
  Slot& s = slots_[idx];
  s.prev = kNone;
  s.next = set.mru;
  if (set.mru != kNone) slots_[set.mru].prev = idx;
  set.mru = idx;
  if (set.lru == kNone) set.lru = idx;
  s.stamp = ++stamp_;
}

void SimEngine::write_back(std::uint32_t idx) {
  nvm_.write(slots_[idx].line << line_shift_, slot_data(idx), config_.line_size);
  slots_[idx].dirty = false;
  ++counters_.writebacks;
}

std::uint32_t SimEngine::touch_line(std::uint64_t line) {
  SetState& set = sets_[line % num_sets_];
  if (auto it = index_.find(line); it != index_.end()) {
    ++counters_.hits;
    const std::uint32_t idx = it->second;
    if (set.mru != idx) {
      unlink(set, idx);
      push_mru(set, idx);
    } else {
      slots_[idx].stamp = ++stamp_;
    }
    return idx;
  }

  ++counters_.misses;
  std::uint32_t idx = set.free;
  if (idx != kNone) {
    set.free = slots_[idx].next;
  } else {
    idx = set.lru;
    ++counters_.evictions;
    if (slots_[idx].dirty) write_back(idx);
    index_.erase(slots_[idx].line);
    unlink(set, idx);
  }
  Slot& s = slots_[idx];
  s.line = line;
  s.valid = true;
  s.dirty = false;
  nvm_.read(line << line_shift_, slot_data(idx), config_.line_size);
  index_.emplace(line, idx);
  push_mru(set, idx);
  return idx;
}

void SimEngine::clflush(Address addr) {
  begin_op(addr, 1);
  ++counters_.flush_ops;
  const std::uint64_t line = addr >> line_shift_;
  auto it = index_.find(line);
  if (it == index_.end()) {
    ++counters_.flushed_clean_or_absent;
    return;
  }
  const std::uint32_t idx = it->second;
  if (slots_[idx].dirty) {
    write_back(idx);
    ++counters_.flushed_dirty;
  } else {
    ++counters_.flushed_clean_or_absent;
  }
  SetState& set = sets_[line % num_sets_];
  unlink(set, idx);
  index_.erase(it);
  slots_[idx].valid = false;
  slots_[idx].next = set.free;
  set.free = idx;
}

NvmImage SimEngine::crash() {
  crashed_ = true;
  return nvm_;
}

void SimEngine::persist_initialize(Address addr, std::span<const std::byte> bytes) {
  if (bytes.empty()) return;
  nvm_.write(addr, bytes.data(), bytes.size());
  // Keep any cached copy coherent with the new durable value.
  const std::uint64_t first = addr >> line_shift_;
  const std::uint64_t last = (addr + bytes.size() - 1) >> line_shift_;
  for (std::uint64_t line = first; line <= last; ++line) {
    if (auto it = index_.find(line); it != index_.end() && !slots_[it->second].dirty)
      nvm_.read(line << line_shift_, slot_data(it->second), config_.line_size);
  }
}

std::vector<CacheLineEntry> SimEngine::inspect_cache() const {
  std::vector<CacheLineEntry> out;
  out.reserve(index_.size());
  for (std::uint32_t idx = 0; idx < slots_.size(); ++idx) {
    const Slot& s = slots_[idx];
    if (!s.valid) continue;
    const std::byte* d = data_.data() + idx * config_.line_size;
    out.push_back({s.line << line_shift_, s.dirty,
                   std::vector<std::byte>(d, d + config_.line_size), s.stamp});
  }
  std::sort(out.begin(), out.end(),
            [](const auto& a, const auto& b) { return a.line_address < b.line_address; });
  return out;
}

}  // namespace adcc
