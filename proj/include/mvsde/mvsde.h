/* Copyright 2026 The mvsde Authors
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

/* C interface of libmvsde.
 *
 * Every function returning mvsde_status leaves a message for
 * mvsde_last_error() on failure (thread-local, valid until the next call on
 * the same thread). Handles are opaque and owned by the caller.
 *
 * String outputs use the size-query pattern: pass buf = NULL, cap = 0 to
 * learn the length (without terminator) through *len, then call again with a
 * buffer of at least len + 1 bytes.
 */
#ifndef MVSDE_MVSDE_H_
#define MVSDE_MVSDE_H_

#include <stddef.h>

#if defined(_WIN32)
#define MVSDE_API __declspec(dllexport)
#else
#define MVSDE_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum mvsde_status {
  MVSDE_OK = 0,
  MVSDE_ERR_INVALID_ARGUMENT = 1,
  MVSDE_ERR_CONFIG = 2,
  MVSDE_ERR_NUMERICAL = 3,
  MVSDE_ERR_IO = 4,
  MVSDE_ERR_BUFFER_TOO_SMALL = 5,
  MVSDE_ERR_INTERNAL = 6
} mvsde_status;

typedef struct mvsde_config mvsde_config;
typedef struct mvsde_report mvsde_report;

MVSDE_API const char* mvsde_version(void);
MVSDE_API const char* mvsde_last_error(void);
MVSDE_API const char* mvsde_status_name(mvsde_status status);

/* Worker threads for particle updates; 0 is treated as 1.
 * Results do not depend on it. */
MVSDE_API mvsde_status mvsde_set_threads(unsigned threads);

MVSDE_API size_t mvsde_experiment_count(void);
MVSDE_API const char* mvsde_experiment_name(size_t index);

/* Configs */
MVSDE_API mvsde_status mvsde_config_load(const char* path, mvsde_config** out);
MVSDE_API mvsde_status mvsde_config_parse(const char* text, mvsde_config** out);
MVSDE_API mvsde_status mvsde_config_set(mvsde_config* config, const char* section, const char* key,
                                        const char* value);
MVSDE_API mvsde_status mvsde_config_get(const mvsde_config* config, const char* section, const char* key,
                                        char* buf, size_t cap, size_t* len);
MVSDE_API mvsde_status mvsde_config_serialize(const mvsde_config* config, char* buf, size_t cap, size_t* len);
/* Parses every key the named experiment reads; unknown keys are errors. */
MVSDE_API mvsde_status mvsde_config_validate(const mvsde_config* config);
MVSDE_API void mvsde_config_free(mvsde_config* config);

/* Runs */
MVSDE_API mvsde_status mvsde_run(const mvsde_config* config, mvsde_report** out);
/* 1 when every check passed, 0 otherwise (also for NULL). */
MVSDE_API int mvsde_report_passed(const mvsde_report* report);
MVSDE_API double mvsde_report_runtime_seconds(const mvsde_report* report);
MVSDE_API mvsde_status mvsde_report_json(const mvsde_report* report, char* buf, size_t cap, size_t* len);
MVSDE_API mvsde_status mvsde_report_series_csv(const mvsde_report* report, char* buf, size_t cap, size_t* len);
/* report.json, series.csv, extra CSV artifacts and timing.json. */
MVSDE_API mvsde_status mvsde_report_write(const mvsde_report* report, const char* out_dir);
MVSDE_API void mvsde_report_free(mvsde_report* report);

/* Numerics on raw arrays */

/* W_p between two equal-size point clouds (row-major n x dim) under the
 * Euclidean ground metric: sorted pairing in 1D, exact assignment otherwise. */
MVSDE_API mvsde_status mvsde_wasserstein(const double* a, const double* b, size_t n, size_t dim, double p,
                                         double* out);
/* Unit-mass Barenblatt profile of d/dt u = (u^3)'' at (t, x). */
MVSDE_API mvsde_status mvsde_barenblatt(double t, double x, double* out);

#ifdef __cplusplus
}
#endif

#endif /* MVSDE_MVSDE_H_ */
