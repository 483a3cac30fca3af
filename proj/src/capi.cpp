// Copyright 2026 The mvsde Authors
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

#include "mvsde/mvsde.h"

#include <cmath>
#include <cstring>
#include <exception>
#include <new>
#include <string>

#include "mvsde/config.hpp"
#include "mvsde/error.hpp"
#include "mvsde/experiments.hpp"
#include "mvsde/fpe.hpp"
#include "mvsde/measures.hpp"
#include "mvsde/parallel.hpp"

struct mvsde_config {
  mvsde::Config config;
};

struct mvsde_report {
  mvsde::ExperimentReport report;
  std::string json;
};

namespace {

thread_local std::string g_last_error;

mvsde_status status_of(mvsde::ErrorKind kind) {
  switch (kind) {
    case mvsde::ErrorKind::kInvalidArgument:
      return MVSDE_ERR_INVALID_ARGUMENT;
    case mvsde::ErrorKind::kConfig:
      return MVSDE_ERR_CONFIG;
    case mvsde::ErrorKind::kNumerical:
      return MVSDE_ERR_NUMERICAL;
    case mvsde::ErrorKind::kIo:
      return MVSDE_ERR_IO;
  }
  return MVSDE_ERR_INTERNAL;
}

template <class F>
mvsde_status guarded(F&& body) {
  try {
    g_last_error.clear();
    body();
    return MVSDE_OK;
  } catch (const mvsde::Error& e) {
    g_last_error = e.what();
    return status_of(e.kind());
  } catch (const std::bad_alloc&) {
    g_last_error = "out of memory";
    return MVSDE_ERR_INTERNAL;
  } catch (const std::exception& e) {
    g_last_error = e.what();
    return MVSDE_ERR_INTERNAL;
  } catch (...) {
    g_last_error = "unknown error";
    return MVSDE_ERR_INTERNAL;
  }
}

mvsde_status null_argument(const char* what) {
  g_last_error = std::string("null argument: ") + what;
  return MVSDE_ERR_INVALID_ARGUMENT;
}

mvsde_status copy_out(const std::string& s, char* buf, size_t cap, size_t* len) {
  if (len != nullptr) *len = s.size();
  if (buf == nullptr && cap == 0) return MVSDE_OK;
  if (buf == nullptr || cap < s.size() + 1) {
    g_last_error = "buffer too small: need " + std::to_string(s.size() + 1) + " bytes";
    return MVSDE_ERR_BUFFER_TOO_SMALL;
  }
  std::memcpy(buf, s.data(), s.size());
  buf[s.size()] = '\0';
  return MVSDE_OK;
}

}  // namespace

extern "C" {

const char* mvsde_version(void) { return "0.1.0"; }

const char* mvsde_last_error(void) { return g_last_error.c_str(); }

const char* mvsde_status_name(mvsde_status status) {
  switch (status) {
    case MVSDE_OK:
      return "ok";
    case MVSDE_ERR_INVALID_ARGUMENT:
      return "invalid argument";
    case MVSDE_ERR_CONFIG:
      return "config error";
    case MVSDE_ERR_NUMERICAL:
      return "numerical error";
    case MVSDE_ERR_IO:
      return "i/o error";
    case MVSDE_ERR_BUFFER_TOO_SMALL:
      return "buffer too small";
    case MVSDE_ERR_INTERNAL:
      return "internal error";
  }
  return "unknown status";
}

mvsde_status mvsde_set_threads(unsigned threads) {
  return guarded([&] { mvsde::set_thread_count(threads); });
}

size_t mvsde_experiment_count(void) { return mvsde::experiment_names().size(); }

const char* mvsde_experiment_name(size_t index) {
  const auto& names = mvsde::experiment_names();
  return index < names.size() ? names[index].c_str() : nullptr;
}

mvsde_status mvsde_config_load(const char* path, mvsde_config** out) {
  if (path == nullptr) return null_argument("path");
  if (out == nullptr) return null_argument("out");
  *out = nullptr;
  return guarded([&] { *out = new mvsde_config{mvsde::Config::load(path)}; });
}

mvsde_status mvsde_config_parse(const char* text, mvsde_config** out) {
  if (text == nullptr) return null_argument("text");
  if (out == nullptr) return null_argument("out");
  *out = nullptr;
  return guarded([&] { *out = new mvsde_config{mvsde::Config::parse(text)}; });
}

mvsde_status mvsde_config_set(mvsde_config* config, const char* section, const char* key, const char* value) {
  if (config == nullptr) return null_argument("config");
  if (section == nullptr || key == nullptr || value == nullptr) return null_argument("section, key or value");
  return guarded([&] { config->config.set(section, key, value); });
}

mvsde_status mvsde_config_get(const mvsde_config* config, const char* section, const char* key, char* buf,
                              size_t cap, size_t* len) {
  if (config == nullptr) return null_argument("config");
  if (section == nullptr || key == nullptr) return null_argument("section or key");
  g_last_error.clear();
  const auto v = config->config.raw(section, key);
  if (!v) {
    g_last_error = std::string("missing key '") + section + "." + key + "'";
    return MVSDE_ERR_CONFIG;
  }
  return copy_out(*v, buf, cap, len);
}

mvsde_status mvsde_config_serialize(const mvsde_config* config, char* buf, size_t cap, size_t* len) {
  if (config == nullptr) return null_argument("config");
  g_last_error.clear();
  return copy_out(config->config.serialize(), buf, cap, len);
}

mvsde_status mvsde_config_validate(const mvsde_config* config) {
  if (config == nullptr) return null_argument("config");
  // Validation marks keys as used; work on a copy so later runs start clean.
  return guarded([&] { mvsde::validate_config(mvsde::Config(config->config)); });
}

void mvsde_config_free(mvsde_config* config) { delete config; }

mvsde_status mvsde_run(const mvsde_config* config, mvsde_report** out) {
  if (config == nullptr) return null_argument("config");
  if (out == nullptr) return null_argument("out");
  *out = nullptr;
  return guarded([&] {
    auto* r = new mvsde_report{mvsde::run_experiment(mvsde::Config(config->config)), {}};
    try {
      r->json = r->report.to_json();
    } catch (...) {
      delete r;
      throw;
    }
    *out = r;
  });
}

int mvsde_report_passed(const mvsde_report* report) { return report != nullptr && report->report.passed() ? 1 : 0; }

double mvsde_report_runtime_seconds(const mvsde_report* report) {
  return report != nullptr ? report->report.runtime_seconds : std::nan("");
}

mvsde_status mvsde_report_json(const mvsde_report* report, char* buf, size_t cap, size_t* len) {
  if (report == nullptr) return null_argument("report");
  g_last_error.clear();
  return copy_out(report->json, buf, cap, len);
}

mvsde_status mvsde_report_series_csv(const mvsde_report* report, char* buf, size_t cap, size_t* len) {
  if (report == nullptr) return null_argument("report");
  g_last_error.clear();
  return copy_out(report->report.series.to_csv(), buf, cap, len);
}

mvsde_status mvsde_report_write(const mvsde_report* report, const char* out_dir) {
  if (report == nullptr) return null_argument("report");
  if (out_dir == nullptr) return null_argument("out_dir");
  return guarded([&] { mvsde::emit_report(report->report, out_dir); });
}

void mvsde_report_free(mvsde_report* report) { delete report; }

mvsde_status mvsde_wasserstein(const double* a, const double* b, size_t n, size_t dim, double p, double* out) {
  if (a == nullptr || b == nullptr || out == nullptr) return null_argument("a, b or out");
  return guarded([&] {
    mvsde::require(n > 0 && dim > 0, "wasserstein needs n > 0 and dim > 0");
    const mvsde::EmpiricalMeasure ma(dim, std::vector<double>(a, a + n * dim));
    const mvsde::EmpiricalMeasure mb(dim, std::vector<double>(b, b + n * dim));
    *out = dim == 1 ? mvsde::wasserstein_1d(ma, mb, p)
                    : mvsde::wasserstein(ma, mb, p, {}, mvsde::MetricMethod::kExactAssignment).value;
  });
}

mvsde_status mvsde_barenblatt(double t, double x, double* out) {
  if (out == nullptr) return null_argument("out");
  return guarded([&] { *out = mvsde::barenblatt(t, x); });
}

}  // extern "C"
