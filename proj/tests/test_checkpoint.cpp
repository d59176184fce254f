#include <gtest/gtest.h>

#include <numeric>
#include <vector>

#include "adcc/checkpoint.hpp"
#include "adcc/error.hpp"

using namespace adcc;

TEST(Checkpoint, CostOfOneArray) {
  SimEngine e(CacheConfig{});
  Arena a(e);
  const ArrayHandle v = a.alloc_f64("v", 64);
  CheckpointRegion region(a, {v});
  const auto before = e.counters();
  EXPECT_EQ(region.checkpoint(a), 1u);
  const auto d = e.counters() - before;
  EXPECT_EQ(d.memcpy_bytes, 512u);
  EXPECT_EQ(d.flush_ops, 8u + 1u);
}

TEST(Checkpoint, RestoreReturnsCommittedContents) {
  SimEngine e(CacheConfig{});
  Arena a(e);
  const ArrayHandle x = a.alloc_f64("x", 10);
  const ArrayHandle k = a.alloc_i64("k", 1);
  CheckpointRegion region(a, {x, k});
  for (int i = 0; i < 10; ++i) a.store_f64(x, i, i * 0.5);
  a.store_i64(k, 0, 7);
  region.checkpoint(a);
  for (int i = 0; i < 10; ++i) a.store_f64(x, i, -1.0);  // never checkpointed
  const auto r = CheckpointRegion::restore(e.crash(), region.layout());
  EXPECT_EQ(r.id, 1u);
  ASSERT_EQ(r.arrays.size(), 2u);
  EXPECT_EQ(r.arrays[0].name, "x");
  for (int i = 0; i < 10; ++i) EXPECT_EQ(r.arrays[0].f64[i], i * 0.5);
  EXPECT_EQ(r.arrays[1].i64, (std::vector<std::int64_t>{7}));
}

TEST(Checkpoint, NoCommittedCheckpoint) {
  SimEngine e(CacheConfig{});
  Arena a(e);
  const ArrayHandle x = a.alloc_f64("x", 4);
  CheckpointRegion region(a, {x});
  try {
    CheckpointRegion::restore(e.crash(), region.layout());
    FAIL();
  } catch (const Error& err) {
    EXPECT_EQ(err.code(), ErrorCode::kNoCommittedCheckpoint);
  }
}

// Crash at every operation of the second checkpoint: the restored image is
// always exactly one of the two committed generations.
TEST(Checkpoint, AtomicUnderEveryCrashPoint) {
  auto scenario = [](const CrashPlan& plan, std::uint64_t* ops_before, std::uint64_t* ops_after) {
    SimEngine e(CacheConfig{64, 512, 0});
    Arena a(e);
    const ArrayHandle x = a.alloc_f64("x", 40);
    const ArrayHandle k = a.alloc_i64("k", 3);
    CheckpointRegion region(a, {x, k});
    for (int i = 0; i < 40; ++i) a.store_f64(x, i, 1.0 + i);
    for (int i = 0; i < 3; ++i) a.store_i64(k, i, 10 + i);
    region.checkpoint(a);
    for (int i = 0; i < 40; ++i) a.store_f64(x, i, 100.0 + i);
    for (int i = 0; i < 3; ++i) a.store_i64(k, i, 20 + i);
    if (ops_before) *ops_before = e.op_count();
    e.set_crash_plan(plan);
    try {
      region.checkpoint(a);
      // Pollute the live arrays after the commit.
      for (int i = 0; i < 40; ++i) a.store_f64(x, i, -5.0);
    } catch (const CrashFired&) {
    }
    if (ops_after) *ops_after = e.op_count();
    return CheckpointRegion::restore(e.crash(), region.layout());
  };
  std::uint64_t start = 0, end = 0;
  scenario(CrashPlan::never(), &start, &end);
  ASSERT_GT(end, start);
  for (std::uint64_t op = start; op <= end; ++op) {
    const auto r = scenario(CrashPlan::after_op_count(op), nullptr, nullptr);
    const double base = r.id == 1 ? 1.0 : 100.0;
    const std::int64_t kbase = r.id == 1 ? 10 : 20;
    ASSERT_TRUE(r.id == 1 || r.id == 2);
    for (int i = 0; i < 40; ++i) ASSERT_EQ(r.arrays[0].f64[i], base + i) << "op " << op;
    for (int i = 0; i < 3; ++i) ASSERT_EQ(r.arrays[1].i64[i], kbase + i) << "op " << op;
  }
}

TEST(Checkpoint, AlternatesShadowBuffers) {
  SimEngine e(CacheConfig{});
  Arena a(e);
  const ArrayHandle x = a.alloc_i64("x", 1);
  CheckpointRegion region(a, {x}, "cp");
  EXPECT_NE(region.layout().shadows[0][0].base, region.layout().shadows[1][0].base);
  EXPECT_NE(a.layout().find("cp_sequence"), nullptr);
  for (int g = 1; g <= 5; ++g) {
    a.store_i64(x, 0, g * 11);
    EXPECT_EQ(region.checkpoint(a), static_cast<std::uint64_t>(g));
  }
  EXPECT_EQ(region.committed(), 5u);
  const auto r = CheckpointRegion::restore(e.crash(), region.layout());
  EXPECT_EQ(r.id, 5u);
  EXPECT_EQ(r.arrays[0].i64[0], 55);
}
