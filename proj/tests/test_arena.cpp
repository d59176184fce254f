#include <gtest/gtest.h>

#include <random>
#include <set>
#include <vector>

#include "adcc/arena.hpp"
#include "adcc/error.hpp"

using namespace adcc;

namespace {

ErrorCode code_of(auto&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  return ErrorCode{0};
}

}  // namespace

TEST(Arena, PersistInitializedValuesSurviveImmediateCrash) {
  SimEngine e(CacheConfig{});
  Arena a(e);
  const std::vector<double> init{1, 2, 3, 4};
  const ArrayHandle b = a.alloc_f64("b", 4, init);
  const NvmImage s = e.crash();
  for (int i = 0; i < 4; ++i) EXPECT_EQ(Arena::read_f64(s, b, i), init[i]);
}

TEST(Arena, AllocationsAreDisjointAndLineAligned) {
  SimEngine e(CacheConfig{});
  Arena a(e);
  const ArrayHandle x = a.alloc_f64("x", 3);
  const ArrayHandle y = a.alloc_i64("y", 9);
  const ArrayHandle z = a.alloc_f64("z", 0);
  const ArrayHandle w = a.alloc_f64("w", 1);
  EXPECT_EQ(x.base % 64, 0u);
  EXPECT_EQ(y.base, x.base + 64);
  EXPECT_EQ(z.base, y.base + 128);
  EXPECT_EQ(w.base, z.base);  // empty arrays take no space
  EXPECT_EQ(z.length, 0u);
  EXPECT_EQ(a.layout().allocations.size(), 4u);
  EXPECT_EQ(*a.layout().find("y"), y);
  EXPECT_EQ(a.layout().find("nope"), nullptr);
}

TEST(Arena, Errors) {
  SimEngine e(CacheConfig{});
  Arena a(e, Arena::kDefaultBase, Arena::kDefaultBase + 1024);
  const ArrayHandle x = a.alloc_f64("x", 4);
  EXPECT_EQ(code_of([&] { a.alloc_f64("x", 1); }), ErrorCode::kDuplicateName);
  EXPECT_EQ(code_of([&] { a.alloc_f64("big", 1000); }), ErrorCode::kAddressSpaceExhausted);
  EXPECT_EQ(code_of([&] { a.load_f64(x, 4); }), ErrorCode::kIndexOutOfRange);
  EXPECT_EQ(code_of([&] { a.store_i64(x, 0, 1); }), ErrorCode::kKindMismatch);
  EXPECT_EQ(code_of([&] { a.flush_element(x, 9); }), ErrorCode::kIndexOutOfRange);
  EXPECT_EQ(code_of([&] { a.flush_range(x, 2, 5); }), ErrorCode::kIndexOutOfRange);
  EXPECT_EQ(code_of([&] { Arena::read_f64(e.nvm(), x, 4); }), ErrorCode::kIndexOutOfRange);
  const std::vector<double> three{1, 2, 3};
  EXPECT_EQ(code_of([&] { a.alloc_f64("bad", 2, three); }), ErrorCode::kInvalidArgument);
}

TEST(Arena, LoadStoreAndVolatility) {
  SimEngine e(CacheConfig{});
  Arena a(e);
  const std::vector<std::int64_t> init{10, 20, 30};
  const ArrayHandle v = a.alloc_i64("v", 3, init);
  EXPECT_EQ(a.load_i64(v, 2), 30);
  a.store_i64(v, 1, 99);
  EXPECT_EQ(a.load_i64(v, 1), 99);
  const NvmImage s = e.crash();
  EXPECT_EQ(Arena::read_i64(s, v, 1), 20);
}

TEST(Arena, SnapshotReadsFlushedStore) {
  SimEngine e(CacheConfig{});
  Arena a(e);
  const std::vector<double> init{1, 2, 3};
  const ArrayHandle v = a.alloc_f64("v", 3, init);
  a.store_f64(v, 1, 9.0);
  a.flush_element(v, 1);
  const NvmImage s = e.crash();
  EXPECT_EQ(Arena::read_f64_range(s, v, 0, 3), (std::vector<double>{1, 9, 3}));
}

TEST(Arena, FlushCounts) {
  SimEngine e(CacheConfig{});
  Arena a(e);
  const ArrayHandle v = a.alloc_f64("v", 64);
  a.flush_range(v, 0, 8);
  EXPECT_EQ(e.counters().flush_ops, 1u);
  a.flush_range(v, 0, 16);
  EXPECT_EQ(e.counters().flush_ops, 3u);
  a.store_f64(v, 3, 1.0);
  a.flush_element(v, 3);
  a.flush_element(v, 5);
  EXPECT_EQ(e.counters().flush_ops, 5u);
  EXPECT_EQ(e.counters().flushed_dirty, 1u);
  // Unaligned span [7, 9) crosses one line boundary.
  a.flush_range(v, 7, 9);
  EXPECT_EQ(e.counters().flush_ops, 7u);
  a.flush_range(v, 4, 4);
  EXPECT_EQ(e.counters().flush_ops, 7u);
}

TEST(Arena, FlushRangeIssuesOnePerDistinctLine) {
  std::mt19937_64 rng(5);
  for (int t = 0; t < 200; ++t) {
    const std::uint64_t line = std::uint64_t{16} << (rng() % 3);
    SimEngine e(CacheConfig{line, 4096, 0});
    Arena a(e);
    const ArrayHandle v = a.alloc_f64("v", 100);
    const std::uint64_t lo = rng() % 100, hi = lo + rng() % (101 - lo);
    a.flush_range(v, lo, hi);
    std::set<std::uint64_t> lines;
    for (std::uint64_t i = lo; i < hi; ++i) lines.insert(v.address_of(i) / line);
    EXPECT_EQ(e.counters().flush_ops, lines.size());
  }
}

TEST(Arena, AddressMapRoundTrip) {
  SimEngine e(CacheConfig{});
  Arena a(e);
  std::vector<ArrayHandle> hs;
  for (int k = 0; k < 6; ++k) hs.push_back(a.alloc_i64("a" + std::to_string(k), 1 + 7 * k));
  std::set<Address> seen;
  for (const auto& h : hs)
    for (std::uint64_t i = 0; i < h.length; ++i) {
      EXPECT_TRUE(seen.insert(h.address_of(i)).second);
      a.store_i64(h, i, static_cast<std::int64_t>(h.base + i));
    }
  for (const auto& h : hs)
    for (std::uint64_t i = 0; i < h.length; ++i)
      EXPECT_EQ(a.load_i64(h, i), static_cast<std::int64_t>(h.base + i));
}

TEST(Arena, StoresGoThroughEngine) {
  SimEngine e(CacheConfig{});
  Arena a(e);
  const ArrayHandle v = a.alloc_f64("v", 8);
  a.store_f64(v, 0, 1.0);
  a.load_f64(v, 7);
  EXPECT_EQ(e.counters().stores, 1u);
  EXPECT_EQ(e.counters().loads, 1u);
  EXPECT_EQ(e.counters().misses, 1u);
  EXPECT_EQ(e.counters().hits, 1u);
}
