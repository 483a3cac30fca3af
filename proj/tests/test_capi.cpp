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


#include <cmath>
#include <cstring>
#include <filesystem>
#include <string>

#include "doctest.h"
#include "json.hpp"
#include "mvsde/mvsde.h"

namespace {

std::string report_json(const mvsde_report* r) {
  size_t len = 0;
  REQUIRE(mvsde_report_json(r, nullptr, 0, &len) == MVSDE_OK);
  std::string s(len + 1, '\0');
  REQUIRE(mvsde_report_json(r, s.data(), s.size(), &len) == MVSDE_OK);
  s.resize(len);
  return s;
}

}  // namespace

TEST_SUITE("capi") {
  TEST_CASE("status names and version") {
    CHECK(std::string(mvsde_version()).size() > 0);
    CHECK(std::string(mvsde_status_name(MVSDE_OK)) == "ok");
    CHECK(std::string(mvsde_status_name(MVSDE_ERR_CONFIG)) == "config error");
  }

  TEST_CASE("experiment listing") {
    REQUIRE(mvsde_experiment_count() == 11);
    bool found = false;
    for (size_t i = 0; i < mvsde_experiment_count(); ++i) found |= std::string(mvsde_experiment_name(i)) == "bismut";
    CHECK(found);
    CHECK(mvsde_experiment_name(mvsde_experiment_count()) == nullptr);
  }

  TEST_CASE("null arguments") {
    mvsde_config* cfg = nullptr;
    CHECK(mvsde_config_parse(nullptr, &cfg) == MVSDE_ERR_INVALID_ARGUMENT);
    CHECK(std::string(mvsde_last_error()).find("null") != std::string::npos);
    CHECK(mvsde_run(nullptr, nullptr) == MVSDE_ERR_INVALID_ARGUMENT);
    CHECK(mvsde_report_passed(nullptr) == 0);
    CHECK(std::isnan(mvsde_report_runtime_seconds(nullptr)));
    mvsde_config_free(nullptr);
    mvsde_report_free(nullptr);
  }

  TEST_CASE("config handles") {
    mvsde_config* cfg = nullptr;
    REQUIRE(mvsde_config_parse("[run]\nexperiment = noop\nseed = 3\n", &cfg) == MVSDE_OK);
    size_t len = 0;
    CHECK(mvsde_config_get(cfg, "run", "seed", nullptr, 0, &len) == MVSDE_OK);
    CHECK(len == 1);
    char small[1];
    CHECK(mvsde_config_get(cfg, "run", "seed", small, sizeof small, &len) == MVSDE_ERR_BUFFER_TOO_SMALL);
    char buf[8];
    CHECK(mvsde_config_get(cfg, "run", "seed", buf, sizeof buf, &len) == MVSDE_OK);
    CHECK(std::string(buf) == "3");
    CHECK(mvsde_config_get(cfg, "run", "nothing", buf, sizeof buf, &len) == MVSDE_ERR_CONFIG);
    CHECK(mvsde_config_set(cfg, "run", "seed", "9") == MVSDE_OK);
    CHECK(mvsde_config_serialize(cfg, nullptr, 0, &len) == MVSDE_OK);
    std::string text(len + 1, '\0');
    CHECK(mvsde_config_serialize(cfg, text.data(), text.size(), &len) == MVSDE_OK);
    CHECK(text.find("seed = 9") != std::string::npos);
    CHECK(mvsde_config_validate(cfg) == MVSDE_OK);
    // Validation must not leave keys marked as used.
    CHECK(mvsde_config_validate(cfg) == MVSDE_OK);
    mvsde_config_free(cfg);
  }

  TEST_CASE("error codes") {
    mvsde_config* cfg = nullptr;
    CHECK(mvsde_config_parse("[run]\nseed = 1\nseed = 2\n", &cfg) == MVSDE_ERR_CONFIG);
    CHECK(cfg == nullptr);
    CHECK(std::string(mvsde_last_error()).find(":3:") != std::string::npos);
    CHECK(mvsde_config_load("/nonexistent.cfg", &cfg) == MVSDE_ERR_IO);
    REQUIRE(mvsde_config_parse("[run]\nexperiment = nope\n", &cfg) == MVSDE_OK);
    CHECK(mvsde_config_validate(cfg) == MVSDE_ERR_CONFIG);
    mvsde_report* r = nullptr;
    CHECK(mvsde_run(cfg, &r) == MVSDE_ERR_CONFIG);
    CHECK(r == nullptr);
    mvsde_config_free(cfg);
    double out = 0.0;
    const double a[2] = {0.0, 1.0};
    CHECK(mvsde_wasserstein(a, a, 0, 1, 2.0, &out) == MVSDE_ERR_INVALID_ARGUMENT);
    CHECK(mvsde_barenblatt(-1.0, 0.0, &out) == MVSDE_ERR_INVALID_ARGUMENT);
  }

  TEST_CASE("numerics on raw arrays") {
    const double a[2] = {0.0, 1.0}, b[2] = {2.0, 5.0};
    double out = 0.0;
    REQUIRE(mvsde_wasserstein(a, b, 2, 1, 2.0, &out) == MVSDE_OK);
    CHECK(out == doctest::Approx(std::sqrt(10.0)).epsilon(1e-15));
    const double c[4] = {0, 0, 2, 0}, d[4] = {1, 0, 3, 1};
    REQUIRE(mvsde_wasserstein(c, d, 2, 2, 2.0, &out) == MVSDE_OK);
    CHECK(out == doctest::Approx(std::sqrt(1.5)).epsilon(1e-14));
    REQUIRE(mvsde_barenblatt(1.0, 0.0, &out) == MVSDE_OK);
    CHECK(out == doctest::Approx(std::sqrt(1.0 / (M_PI * std::sqrt(3.0)))).epsilon(1e-14));
  }

  TEST_CASE("run and write a report") {
    mvsde_config* cfg = nullptr;
    REQUIRE(mvsde_config_load(MVSDE_CONFIG_DIR "/noop.cfg", &cfg) == MVSDE_OK);
    REQUIRE(mvsde_set_threads(2) == MVSDE_OK);
    mvsde_report* r = nullptr;
    REQUIRE(mvsde_run(cfg, &r) == MVSDE_OK);
    CHECK(mvsde_report_passed(r) == 1);
    CHECK(mvsde_report_runtime_seconds(r) >= 0.0);
    const auto j = nlohmann::json::parse(report_json(r));
    CHECK(j["experiment"] == "noop");
    CHECK(j["verdict"] == "pass");
    size_t len = 0;
    CHECK(mvsde_report_series_csv(r, nullptr, 0, &len) == MVSDE_OK);
    CHECK(len > 0);
    const std::string dir = std::string(MVSDE_TEST_TMP) + "/capi_noop";
    std::filesystem::remove_all(dir);
    CHECK(mvsde_report_write(r, dir.c_str()) == MVSDE_OK);
    CHECK(std::filesystem::exists(dir + "/report.json"));
    CHECK(std::filesystem::exists(dir + "/series.csv"));
    mvsde_report_free(r);
    mvsde_config_free(cfg);
    mvsde_set_threads(1);
  }
}
