/* Copyright 2026 The adcc Authors.
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

/* C interface to the NVM crash-consistency simulator and experiment harness.
 *
 * Every function returns an adcc_status. On failure a message is available
 * from adcc_last_error_message() on the calling thread until the next call.
 * Strings returned through char** are owned by the caller and released with
 * adcc_free_string().
 */
#ifndef ADCC_ADCC_H_
#define ADCC_ADCC_H_

#include <stddef.h>
#include <stdint.h>

#if defined(ADCC_BUILDING_LIBRARY)
#define ADCC_API __attribute__((visibility("default")))
#else
#define ADCC_API
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum adcc_status {
  ADCC_OK = 0,
  ADCC_INVALID_ARGUMENT = 1,
  ADCC_INVALID_CONFIG = 2,
  ADCC_CRASHED_ENGINE = 3,
  ADCC_OUT_OF_ARENA = 4,
  ADCC_DUPLICATE_NAME = 5,
  ADCC_ADDRESS_SPACE_EXHAUSTED = 6,
  ADCC_INDEX_OUT_OF_RANGE = 7,
  ADCC_KIND_MISMATCH = 8,
  ADCC_NON_POSITIVE_CURVATURE = 9,
  ADCC_INCONSISTENT_RESTART_STATE = 10,
  ADCC_SHAPE_MISMATCH = 11,
  ADCC_DIVISIBILITY_VIOLATION = 12,
  ADCC_UNREADABLE_PHASE = 13,
  ADCC_DEGENERATE_VECTOR = 14,
  ADCC_NO_COMMITTED_CHECKPOINT = 15,
  ADCC_PARSE_ERROR = 16,
  ADCC_IO_ERROR = 17,
  /* The armed crash plan fired during this call; take the snapshot with
     adcc_engine_crash(). */
  ADCC_CRASH_FIRED = 64,
  ADCC_INTERNAL_ERROR = 99
} adcc_status;

typedef struct adcc_engine adcc_engine;
typedef struct adcc_snapshot adcc_snapshot;

typedef struct adcc_cache_config {
  uint64_t line_size;     /* bytes, power of two */
  uint64_t capacity;      /* bytes, multiple of line_size */
  uint32_t associativity; /* ways per set, 0 = fully associative */
} adcc_cache_config;

typedef struct adcc_counters {
  uint64_t loads;
  uint64_t stores;
  uint64_t hits;
  uint64_t misses;
  uint64_t evictions;
  uint64_t writebacks;
  uint64_t flush_ops;
  uint64_t flushed_dirty;
  uint64_t flushed_clean_or_absent;
  uint64_t memcpy_bytes;
} adcc_counters;

ADCC_API const char* adcc_version(void);
ADCC_API const char* adcc_status_name(adcc_status status);
ADCC_API const char* adcc_last_error_message(void);
ADCC_API void adcc_free_string(char* s);

/* ---- Engine ----------------------------------------------------------- */

ADCC_API adcc_status adcc_engine_create(const adcc_cache_config* config, adcc_engine** out);
ADCC_API void adcc_engine_destroy(adcc_engine* engine);

/* Arms a crash before memory operation number ops + 1. */
ADCC_API adcc_status adcc_engine_crash_after_ops(adcc_engine* engine, uint64_t ops);
/* Arms a crash at the occurrence-th emission of label (1-based). */
ADCC_API adcc_status adcc_engine_crash_at_label(adcc_engine* engine, const char* label,
                                                uint64_t occurrence);
ADCC_API adcc_status adcc_engine_disarm(adcc_engine* engine);

ADCC_API adcc_status adcc_engine_map(adcc_engine* engine, uint64_t base, uint64_t len);
ADCC_API adcc_status adcc_engine_read_f64(adcc_engine* engine, uint64_t addr, double* out);
ADCC_API adcc_status adcc_engine_write_f64(adcc_engine* engine, uint64_t addr, double value);
ADCC_API adcc_status adcc_engine_read_i64(adcc_engine* engine, uint64_t addr, int64_t* out);
ADCC_API adcc_status adcc_engine_write_i64(adcc_engine* engine, uint64_t addr, int64_t value);
ADCC_API adcc_status adcc_engine_clflush(adcc_engine* engine, uint64_t addr);
/* Writes straight into NVM; not counted as a memory operation. */
ADCC_API adcc_status adcc_engine_persist(adcc_engine* engine, uint64_t addr, const void* bytes,
                                         size_t len);
/* Emits a statement label; returns ADCC_CRASH_FIRED when the plan triggers. */
ADCC_API adcc_status adcc_engine_label(adcc_engine* engine, const char* label);

ADCC_API adcc_status adcc_engine_counters(const adcc_engine* engine, adcc_counters* out);
ADCC_API adcc_status adcc_engine_op_count(const adcc_engine* engine, uint64_t* out);
ADCC_API adcc_status adcc_engine_cached_lines(const adcc_engine* engine, uint64_t* out);

/* Crashes the engine and returns the surviving NVM image. */
ADCC_API adcc_status adcc_engine_crash(adcc_engine* engine, adcc_snapshot** out);
/* Drops the cache and clears the crashed state. */
ADCC_API adcc_status adcc_engine_restart(adcc_engine* engine);

ADCC_API adcc_status adcc_snapshot_read_f64(const adcc_snapshot* s, uint64_t addr, double* out);
ADCC_API adcc_status adcc_snapshot_read_i64(const adcc_snapshot* s, uint64_t addr, int64_t* out);
ADCC_API adcc_status adcc_snapshot_extent(const adcc_snapshot* s, uint64_t* out);
ADCC_API void adcc_snapshot_destroy(adcc_snapshot* s);

/* ---- Harness ---------------------------------------------------------- */

/* Parses and validates an experiment spec; *normalized receives it with all
   defaults filled in. */
ADCC_API adcc_status adcc_spec_normalize(const char* spec_json, char** normalized);

/* Runs one experiment. *report receives the JSON report and *result_valid
   is 1 when the recovered result passed its oracle. */
ADCC_API adcc_status adcc_run(const char* spec_json, char** report, int* result_valid);

/* Runs the experiment once per value of axis ("cache_bytes", "problem_size" or
   "crash_point"). *reports receives a JSON array, *csv one row per run. */
ADCC_API adcc_status adcc_sweep(const char* spec_json, const char* axis, const uint64_t* values,
                                size_t count, char** reports, char** csv, int* all_valid);

#ifdef __cplusplus
}
#endif

#endif /* ADCC_ADCC_H_ */
