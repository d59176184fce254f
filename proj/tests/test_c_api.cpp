#include <gtest/gtest.h>

#include <algorithm>
#include <cstdlib>
#include <string>

#include "adcc/adcc.h"

namespace {

struct EngineGuard {
  adcc_engine* e = nullptr;
  ~EngineGuard() { adcc_engine_destroy(e); }
};

std::string take(char* s) {
  std::string out = s ? s : "";
  adcc_free_string(s);
  return out;
}

}  // namespace

TEST(CApi, VersionAndNames) {
  EXPECT_STREQ(adcc_version(), "0.1.0");
  EXPECT_STREQ(adcc_status_name(ADCC_OK), "Ok");
  EXPECT_STREQ(adcc_status_name(ADCC_NO_COMMITTED_CHECKPOINT), "NoCommittedCheckpoint");
  EXPECT_STREQ(adcc_status_name(ADCC_CRASH_FIRED), "CrashFired");
}

TEST(CApi, EngineLifecycle) {
  const adcc_cache_config cfg{64, 128, 0};
  EngineGuard g;
  ASSERT_EQ(adcc_engine_create(&cfg, &g.e), ADCC_OK);
  ASSERT_EQ(adcc_engine_map(g.e, 0x1000, 4096), ADCC_OK);
  EXPECT_EQ(adcc_engine_write_f64(g.e, 0x1000, 1.5), ADCC_OK);
  EXPECT_EQ(adcc_engine_write_f64(g.e, 0x1040, 2.5), ADCC_OK);
  EXPECT_EQ(adcc_engine_clflush(g.e, 0x1040), ADCC_OK);
  double v = 0;
  EXPECT_EQ(adcc_engine_read_f64(g.e, 0x1000, &v), ADCC_OK);
  EXPECT_EQ(v, 1.5);
  std::uint64_t lines = 0;
  EXPECT_EQ(adcc_engine_cached_lines(g.e, &lines), ADCC_OK);
  EXPECT_EQ(lines, 1u);
  adcc_counters c{};
  EXPECT_EQ(adcc_engine_counters(g.e, &c), ADCC_OK);
  EXPECT_EQ(c.stores, 2u);
  EXPECT_EQ(c.flushed_dirty, 1u);

  adcc_snapshot* s = nullptr;
  ASSERT_EQ(adcc_engine_crash(g.e, &s), ADCC_OK);
  EXPECT_EQ(adcc_snapshot_read_f64(s, 0x1000, &v), ADCC_OK);
  EXPECT_EQ(v, 0.0);
  EXPECT_EQ(adcc_snapshot_read_f64(s, 0x1040, &v), ADCC_OK);
  EXPECT_EQ(v, 2.5);
  adcc_snapshot_destroy(s);

  EXPECT_EQ(adcc_engine_read_f64(g.e, 0x1000, &v), ADCC_CRASHED_ENGINE);
  EXPECT_EQ(adcc_engine_restart(g.e), ADCC_OK);
  EXPECT_EQ(adcc_engine_read_f64(g.e, 0x1040, &v), ADCC_OK);
  EXPECT_EQ(v, 2.5);
}

TEST(CApi, CrashPlans) {
  const adcc_cache_config cfg{64, 4096, 0};
  EngineGuard g;
  ASSERT_EQ(adcc_engine_create(&cfg, &g.e), ADCC_OK);
  adcc_engine_map(g.e, 0x1000, 4096);
  ASSERT_EQ(adcc_engine_crash_at_label(g.e, "tick", 2), ADCC_OK);
  EXPECT_EQ(adcc_engine_label(g.e, "tick"), ADCC_OK);
  EXPECT_EQ(adcc_engine_label(g.e, "tock"), ADCC_OK);
  EXPECT_EQ(adcc_engine_label(g.e, "tick"), ADCC_CRASH_FIRED);

  EngineGuard h;
  ASSERT_EQ(adcc_engine_create(&cfg, &h.e), ADCC_OK);
  adcc_engine_map(h.e, 0x1000, 4096);
  ASSERT_EQ(adcc_engine_crash_after_ops(h.e, 1), ADCC_OK);
  EXPECT_EQ(adcc_engine_write_i64(h.e, 0x1000, 1), ADCC_OK);
  EXPECT_EQ(adcc_engine_write_i64(h.e, 0x1000, 2), ADCC_CRASH_FIRED);
  std::uint64_t ops = 0;
  EXPECT_EQ(adcc_engine_op_count(h.e, &ops), ADCC_OK);
  EXPECT_EQ(ops, 1u);

  EngineGuard d;
  ASSERT_EQ(adcc_engine_create(&cfg, &d.e), ADCC_OK);
  adcc_engine_map(d.e, 0x1000, 4096);
  adcc_engine_crash_after_ops(d.e, 0);
  EXPECT_EQ(adcc_engine_disarm(d.e), ADCC_OK);
  EXPECT_EQ(adcc_engine_write_i64(d.e, 0x1000, 1), ADCC_OK);
}

TEST(CApi, ErrorsCarryMessages) {
  adcc_engine* e = nullptr;
  const adcc_cache_config bad{48, 4096, 0};
  EXPECT_EQ(adcc_engine_create(&bad, &e), ADCC_INVALID_CONFIG);
  EXPECT_EQ(e, nullptr);
  EXPECT_NE(std::string(adcc_last_error_message()).find("line"), std::string::npos);
  EXPECT_EQ(adcc_engine_create(nullptr, &e), ADCC_INVALID_ARGUMENT);

  const adcc_cache_config cfg{64, 4096, 0};
  EngineGuard g;
  ASSERT_EQ(adcc_engine_create(&cfg, &g.e), ADCC_OK);
  double v;
  EXPECT_EQ(adcc_engine_read_f64(g.e, 0x10, &v), ADCC_OUT_OF_ARENA);
  EXPECT_EQ(adcc_engine_read_f64(g.e, 0x10, nullptr), ADCC_INVALID_ARGUMENT);
}

TEST(CApi, RunAndNormalize) {
  char* norm = nullptr;
  ASSERT_EQ(adcc_spec_normalize(R"({"workload":"cg","cg":{"n":64}})", &norm), ADCC_OK);
  const std::string n = take(norm);
  EXPECT_NE(n.find("\"eviction\": \"lru\""), std::string::npos);

  char* report = nullptr;
  int valid = 0;
  ASSERT_EQ(adcc_run(R"({"workload":"cg","cg":{"n":64},
                         "crash":{"kind":"at_label","occurrence":4}})",
                     &report, &valid),
            ADCC_OK);
  EXPECT_EQ(valid, 1);
  EXPECT_NE(take(report).find("\"crashed\": true"), std::string::npos);

  EXPECT_EQ(adcc_run("{", &report, &valid), ADCC_PARSE_ERROR);
  EXPECT_EQ(adcc_run(R"({"nope":1})", &report, &valid), ADCC_INVALID_CONFIG);
  EXPECT_EQ(adcc_run(nullptr, &report, &valid), ADCC_INVALID_ARGUMENT);
}

TEST(CApi, Sweep) {
  const std::uint64_t values[] = {2048, 8192};
  char* reports = nullptr;
  char* csv = nullptr;
  int ok = 0;
  ASSERT_EQ(adcc_sweep(R"({"workload":"abft","abft":{"n":11,"k":3}})", "cache_bytes", values, 2,
                       &reports, &csv, &ok),
            ADCC_OK);
  EXPECT_EQ(ok, 1);
  const std::string table = take(csv);
  EXPECT_EQ(std::count(table.begin(), table.end(), '\n'), 3);
  EXPECT_EQ(take(reports).front(), '[');
  EXPECT_EQ(adcc_sweep("{}", "bogus", values, 2, &reports, &csv, &ok), ADCC_INVALID_CONFIG);
}
