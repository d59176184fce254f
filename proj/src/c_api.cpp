#include "adcc/adcc.h"

#include <cstdlib>
#include <cstring>
#include <string>

#include "adcc/error.hpp"
#include "adcc/harness.hpp"
#include "adcc/sim_engine.hpp"

struct adcc_engine {
  explicit adcc_engine(adcc::CacheConfig c) : engine(c) {}
  adcc::SimEngine engine;
};

struct adcc_snapshot {
  adcc::NvmImage image;
};

namespace {

thread_local std::string g_last_error;

adcc_status fail(adcc_status s, std::string msg) {
  g_last_error = std::move(msg);
  return s;
}

char* dup_string(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (out) std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

template <class F>
adcc_status guarded(F&& f) {
  g_last_error.clear();
  try {
    f();
    return ADCC_OK;
  } catch (const adcc::CrashFired&) {
    return fail(ADCC_CRASH_FIRED, "crash plan fired");
  } catch (const adcc::Error& e) {
    return fail(static_cast<adcc_status>(static_cast<int>(e.code())), e.what());
  } catch (const std::bad_alloc&) {
    return fail(ADCC_INTERNAL_ERROR, "out of memory");
  } catch (const std::exception& e) {
    return fail(ADCC_INTERNAL_ERROR, e.what());
  }
}

#define ADCC_REQUIRE(cond) \
  do { \
    if (!(cond)) return fail(ADCC_INVALID_ARGUMENT, "null argument: " #cond); \
  } while (0)

}  // namespace

extern "C" {

const char* adcc_version(void) { return "0.1.0"; }

const char* adcc_status_name(adcc_status status) {
  switch (status) {
    case ADCC_OK: return "Ok";
    case ADCC_CRASH_FIRED: return "CrashFired";
    case ADCC_INTERNAL_ERROR: return "InternalError";
    default: break;
  }
  const int v = static_cast<int>(status);
  if (v >= 1 && v <= 17) return adcc::error_code_name(static_cast<adcc::ErrorCode>(v)).data();
  return "Unknown";
}

const char* adcc_last_error_message(void) { return g_last_error.c_str(); }

void adcc_free_string(char* s) { std::free(s); }

adcc_status adcc_engine_create(const adcc_cache_config* config, adcc_engine** out) {
  ADCC_REQUIRE(config && out);
  *out = nullptr;
  return guarded([&] {
    adcc::CacheConfig c{config->line_size, config->capacity, config->associativity};
    c.validate();
    *out = new adcc_engine(c);
  });
}

void adcc_engine_destroy(adcc_engine* engine) { delete engine; }

adcc_status adcc_engine_crash_after_ops(adcc_engine* engine, uint64_t ops) {
  ADCC_REQUIRE(engine);
  return guarded([&] { engine->engine.set_crash_plan(adcc::CrashPlan::after_op_count(ops)); });
}

adcc_status adcc_engine_crash_at_label(adcc_engine* engine, const char* label, uint64_t occurrence) {
  ADCC_REQUIRE(engine && label);
  return guarded(
      [&] { engine->engine.set_crash_plan(adcc::CrashPlan::at_label(label, occurrence)); });
}

adcc_status adcc_engine_disarm(adcc_engine* engine) {
  ADCC_REQUIRE(engine);
  return guarded([&] { engine->engine.set_crash_plan(adcc::CrashPlan::never()); });
}

adcc_status adcc_engine_map(adcc_engine* engine, uint64_t base, uint64_t len) {
  ADCC_REQUIRE(engine);
  return guarded([&] { engine->engine.map_range(base, len); });
}

adcc_status adcc_engine_read_f64(adcc_engine* engine, uint64_t addr, double* out) {
  ADCC_REQUIRE(engine && out);
  return guarded([&] { *out = engine->engine.read_f64(addr); });
}

adcc_status adcc_engine_write_f64(adcc_engine* engine, uint64_t addr, double value) {
  ADCC_REQUIRE(engine);
  return guarded([&] { engine->engine.write_f64(addr, value); });
}

adcc_status adcc_engine_read_i64(adcc_engine* engine, uint64_t addr, int64_t* out) {
  ADCC_REQUIRE(engine && out);
  return guarded([&] { *out = engine->engine.read_i64(addr); });
}

adcc_status adcc_engine_write_i64(adcc_engine* engine, uint64_t addr, int64_t value) {
  ADCC_REQUIRE(engine);
  return guarded([&] { engine->engine.write_i64(addr, value); });
}

adcc_status adcc_engine_clflush(adcc_engine* engine, uint64_t addr) {
  ADCC_REQUIRE(engine);
  return guarded([&] { engine->engine.clflush(addr); });
}

adcc_status adcc_engine_persist(adcc_engine* engine, uint64_t addr, const void* bytes, size_t len) {
  ADCC_REQUIRE(engine && (bytes || len == 0));
  return guarded([&] {
    engine->engine.persist_initialize(
        addr, std::span<const std::byte>(static_cast<const std::byte*>(bytes), len));
  });
}

adcc_status adcc_engine_label(adcc_engine* engine, const char* label) {
  ADCC_REQUIRE(engine && label);
  return guarded([&] { engine->engine.maybe_fire_crash(label); });
}

adcc_status adcc_engine_counters(const adcc_engine* engine, adcc_counters* out) {
  ADCC_REQUIRE(engine && out);
  const adcc::EventCounters& c = engine->engine.counters();
  *out = adcc_counters{c.loads,      c.stores,        c.hits,
                       c.misses,     c.evictions,     c.writebacks,
                       c.flush_ops,  c.flushed_dirty, c.flushed_clean_or_absent,
                       c.memcpy_bytes};
  return ADCC_OK;
}

adcc_status adcc_engine_op_count(const adcc_engine* engine, uint64_t* out) {
  ADCC_REQUIRE(engine && out);
  *out = engine->engine.op_count();
  return ADCC_OK;
}

adcc_status adcc_engine_cached_lines(const adcc_engine* engine, uint64_t* out) {
  ADCC_REQUIRE(engine && out);
  return guarded([&] { *out = engine->engine.inspect_cache().size(); });
}

adcc_status adcc_engine_crash(adcc_engine* engine, adcc_snapshot** out) {
  ADCC_REQUIRE(engine && out);
  *out = nullptr;
  return guarded([&] { *out = new adcc_snapshot{engine->engine.crash()}; });
}

adcc_status adcc_engine_restart(adcc_engine* engine) {
  ADCC_REQUIRE(engine);
  return guarded([&] { engine->engine.restart(); });
}

adcc_status adcc_snapshot_read_f64(const adcc_snapshot* s, uint64_t addr, double* out) {
  ADCC_REQUIRE(s && out);
  *out = s->image.read_f64(addr);
  return ADCC_OK;
}

adcc_status adcc_snapshot_read_i64(const adcc_snapshot* s, uint64_t addr, int64_t* out) {
  ADCC_REQUIRE(s && out);
  *out = s->image.read_i64(addr);
  return ADCC_OK;
}

adcc_status adcc_snapshot_extent(const adcc_snapshot* s, uint64_t* out) {
  ADCC_REQUIRE(s && out);
  *out = s->image.extent();
  return ADCC_OK;
}

void adcc_snapshot_destroy(adcc_snapshot* s) { delete s; }

adcc_status adcc_spec_normalize(const char* spec_json, char** normalized) {
  ADCC_REQUIRE(spec_json && normalized);
  *normalized = nullptr;
  return guarded([&] {
    const adcc::harness::ExperimentSpec spec = adcc::harness::parse_spec(spec_json);
    spec.validate();
    *normalized = dup_string(adcc::harness::spec_to_json(spec).dump(2));
  });
}

adcc_status adcc_run(const char* spec_json, char** report, int* result_valid) {
  ADCC_REQUIRE(spec_json && report && result_valid);
  *report = nullptr;
  *result_valid = 0;
  return guarded([&] {
    const adcc::harness::RunReport r = adcc::harness::run(adcc::harness::parse_spec(spec_json));
    *report = dup_string(r.dump());
    *result_valid = r.result_valid ? 1 : 0;
  });
}

adcc_status adcc_sweep(const char* spec_json, const char* axis, const uint64_t* values,
                       size_t count, char** reports, char** csv, int* all_valid) {
  ADCC_REQUIRE(spec_json && axis && (values || count == 0) && reports && csv && all_valid);
  *reports = nullptr;
  *csv = nullptr;
  *all_valid = 0;
  return guarded([&] {
    const auto spec = adcc::harness::parse_spec(spec_json);
    const auto result = adcc::harness::sweep(spec, adcc::harness::parse_axis(axis),
                                             std::vector<std::uint64_t>(values, values + count));
    nlohmann::ordered_json arr = nlohmann::ordered_json::array();
    for (const auto& r : result.reports) arr.push_back(r.body);
    *reports = dup_string(arr.dump(2));
    *csv = dup_string(result.csv);
    *all_valid = result.all_valid() ? 1 : 0;
  });
}

}  // extern "C"
