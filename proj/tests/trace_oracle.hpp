#pragma once

// Random trace replay against both SimEngine and the naive ReferenceCache.

#include <algorithm>
#include <cstdint>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "adcc/error.hpp"
#include "adcc/sim_engine.hpp"
#include "reference_cache.hpp"

namespace adcc::testing {

struct TraceSummary {
  std::uint64_t ops = 0;
  bool crashed = false;
  std::optional<std::string> mismatch;
};

inline TraceSummary compare_random_trace(std::uint64_t seed, std::uint64_t max_ops = 10'000,
                                         std::uint64_t max_lines = 256) {
  std::mt19937_64 rng(seed);
  auto pick = [&](std::uint64_t n) { return rng() % n; };

  static constexpr std::uint64_t kLineSizes[] = {8, 16, 32, 64};
  static constexpr std::uint64_t kCacheLines[] = {1, 2, 4, 8, 16, 32, 64};
  static constexpr std::uint64_t kWays[] = {0, 1, 2, 4};
  const std::uint64_t line = kLineSizes[pick(4)];
  const std::uint64_t cache_lines = kCacheLines[pick(7)];
  std::uint64_t ways = kWays[pick(4)];
  if (ways > cache_lines) ways = 0;
  const std::uint64_t span_lines = 1 + pick(max_lines);
  const std::uint64_t n_ops = 1 + pick(max_ops);
  const Address base = 0x1000;

  CacheConfig cfg{line, line * cache_lines, static_cast<std::uint32_t>(ways)};
  SimEngine engine(cfg);
  engine.map_range(base, span_lines * line);
  ReferenceCache ref(line, line * cache_lines, ways);

  // Persist-initialize a prefix so NVM is not all zeros.
  {
    std::vector<std::byte> init(std::min<std::uint64_t>(span_lines * line, 512));
    for (auto& b : init) b = static_cast<std::byte>(rng());
    engine.persist_initialize(base, init);
    ref.persist(base, init.data(), init.size());
  }

  const std::uint64_t plan_kind = pick(3);
  if (plan_kind == 1) {
    const std::uint64_t at = pick(n_ops + 1);
    engine.set_crash_plan(CrashPlan::after_op_count(at));
    ref.crash_after(at);
  } else if (plan_kind == 2) {
    const std::uint64_t occ = 1 + pick(std::max<std::uint64_t>(1, n_ops / 20));
    engine.set_crash_plan(CrashPlan::at_label("tick", occ));
    ref.crash_at_label("tick", occ);
  }

  TraceSummary out;
  std::ostringstream why;
  auto fail = [&](const std::string& what) {
    why << "seed " << seed << " op " << out.ops << ": " << what;
    out.mismatch = why.str();
    return out;
  };

  for (std::uint64_t i = 0; i < n_ops; ++i) {
    const std::uint64_t kind = pick(10);
    std::uint64_t len = std::uint64_t{1} << pick(4);  // 1, 2, 4, 8
    if (len > line) len = line;
    const Address addr = base + pick(span_lines * line - len + 1);
    bool engine_fired = false, ref_ok = true;
    std::vector<std::byte> a(len), b(len);
    try {
      if (kind < 4) {
        engine.read(addr, a);
        ref_ok = ref.read(addr, b.data(), len);
        if (ref_ok && a != b) return fail("read value differs");
      } else if (kind < 8) {
        for (auto& x : a) x = static_cast<std::byte>(rng());
        engine.write(addr, a);
        ref_ok = ref.write(addr, a.data(), len);
      } else if (kind < 9) {
        engine.clflush(addr);
        ref_ok = ref.clflush(addr);
      } else {
        engine.maybe_fire_crash("tick");
        ref_ok = ref.label("tick");
      }
    } catch (const CrashFired&) {
      engine_fired = true;
      if (kind == 4 || kind == 5 || kind == 6 || kind == 7) ref_ok = ref.write(addr, a.data(), len);
      else if (kind < 4) ref_ok = ref.read(addr, b.data(), len);
      else if (kind == 8) ref_ok = ref.clflush(addr);
      else ref_ok = ref.label("tick");
    }
    if (engine_fired == ref_ok) return fail("crash trigger disagrees");
    if (engine_fired) {
      out.crashed = true;
      break;
    }
    ++out.ops;
  }

  const NvmImage snap = out.crashed ? engine.crash() : engine.nvm();

  // NVM image, byte by byte over the mapped span.
  for (Address x = base; x < base + span_lines * line; ++x) {
    std::byte e;
    snap.read(x, &e, 1);
    if (e != ref.nvm_byte(x)) return fail("nvm byte differs at " + std::to_string(x));
  }

  // Cache contents and dirty flags.
  const auto lines = engine.inspect_cache();
  if (lines.size() != ref.cache().size()) return fail("cached line count differs");
  auto it = ref.cache().begin();
  for (const auto& e : lines) {
    if (e.line_address != it->first * line) return fail("cached line address differs");
    if (e.dirty != it->second.dirty) return fail("dirty flag differs");
    if (e.data != it->second.bytes) return fail("cached bytes differ");
    ++it;
  }

  // Exact LRU order per set.
  for (std::uint64_t s = 0; s < ref.sets(); ++s) {
    std::vector<std::pair<std::uint64_t, std::uint64_t>> by_stamp;
    for (const auto& e : lines)
      if ((e.line_address / line) % ref.sets() == s) by_stamp.push_back({e.lru_stamp, e.line_address / line});
    std::sort(by_stamp.rbegin(), by_stamp.rend());
    std::vector<std::uint64_t> mine;
    for (auto& p : by_stamp) mine.push_back(p.second);
    const std::vector<std::uint64_t> theirs(ref.recency(s).begin(), ref.recency(s).end());
    if (mine != theirs) return fail("LRU order differs in set " + std::to_string(s));
  }

  const EventCounters& c = engine.counters();
  if (c.loads != ref.loads || c.stores != ref.stores || c.hits != ref.hits ||
      c.misses != ref.misses || c.evictions != ref.evictions || c.writebacks != ref.writebacks ||
      c.flush_ops != ref.flush_ops || c.flushed_dirty != ref.flushed_dirty ||
      c.flushed_clean_or_absent != ref.flushed_clean)
    return fail("event counters differ");
  if (c.flush_ops != c.flushed_dirty + c.flushed_clean_or_absent)
    return fail("flush_ops != dirty + clean/absent");
  if (c.writebacks > c.evictions + c.flushed_dirty) return fail("writebacks exceed bound");
  return out;
}

}  // namespace adcc::testing
