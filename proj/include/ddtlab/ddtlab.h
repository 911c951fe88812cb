// Copyright 2026 The ddt-lab Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

/* C interface to the ddt-lab simulator.
 *
 * Every call returns a ddt_status. On failure a message for the calling
 * thread is available from ddt_last_error() until the next failing call.
 * Strings returned through char** are owned by the caller and released with
 * ddt_string_free.
 */

#ifndef DDTLAB_DDTLAB_H_
#define DDTLAB_DDTLAB_H_

#include <stddef.h>
#include <stdint.h>

#if defined(DDT_BUILDING_LIBRARY)
#define DDT_API __attribute__((visibility("default")))
#else
#define DDT_API
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum ddt_status {
  DDT_OK = 0,
  DDT_ERR_CONFIG = 2,   /* scenario rejected */
  DDT_ERR_IO = 3,       /* file could not be read or written */
  DDT_ERR_INTERNAL = 4, /* simulator invariant broken */
  DDT_ERR_ARGUMENT = 5, /* null handle or bad argument */
} ddt_status;

typedef enum ddt_format { DDT_FORMAT_JSON = 0, DDT_FORMAT_TEXT = 1 } ddt_format;

typedef struct ddt_scenario ddt_scenario;
typedef struct ddt_batch ddt_batch;

DDT_API const char* ddt_version(void);
DDT_API const char* ddt_last_error(void);
DDT_API void ddt_string_free(char* s);

DDT_API ddt_status ddt_scenario_parse(const char* json, size_t len, ddt_scenario** out);
DDT_API ddt_status ddt_scenario_load(const char* path, ddt_scenario** out);
/* Loads one of the compiled-in reference scenarios by name. */
DDT_API ddt_status ddt_scenario_reference(const char* name, ddt_scenario** out);
DDT_API void ddt_scenario_free(ddt_scenario* s);

DDT_API ddt_status ddt_scenario_set_seed(ddt_scenario* s, uint64_t seed);
DDT_API ddt_status ddt_scenario_name(const ddt_scenario* s, char** out);
DDT_API ddt_status ddt_scenario_canonical_json(const ddt_scenario* s, char** out);

/* Runs seeds seed .. seed+runs-1. */
DDT_API ddt_status ddt_run_batch(const ddt_scenario* s, uint64_t runs, ddt_batch** out);
DDT_API void ddt_batch_free(ddt_batch* b);

DDT_API ddt_status ddt_batch_summary(const ddt_batch* b, ddt_format format, char** out);
DDT_API ddt_status ddt_batch_trace_jsonl(const ddt_batch* b, char** out);
DDT_API ddt_status ddt_batch_write_summary(const ddt_batch* b, ddt_format format,
                                           const char* path);
DDT_API ddt_status ddt_batch_write_trace(const ddt_batch* b, const char* path);
DDT_API uint64_t ddt_batch_completions(const ddt_batch* b);
DDT_API uint64_t ddt_batch_aborts(const ddt_batch* b);

DDT_API size_t ddt_reference_count(void);
/* Static storage; NULL when index is out of range. */
DDT_API const char* ddt_reference_name(size_t index);
DDT_API const char* ddt_reference_json(size_t index);

#ifdef __cplusplus
}
#endif

#endif /* DDTLAB_DDTLAB_H_ */
