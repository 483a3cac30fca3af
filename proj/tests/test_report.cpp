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
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "doctest.h"
#include "json.hpp"
#include "mvsde/config.hpp"
#include "mvsde/error.hpp"
#include "mvsde/experiments.hpp"

using namespace mvsde;
using nlohmann::json;

namespace {

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

TEST_SUITE("report") {
  TEST_CASE("empty report is valid json with empty maps") {
    ExperimentReport r;
    r.experiment = "noop";
    r.validate();
    const auto j = json::parse(r.to_json());
    CHECK(j["measured"].empty());
    CHECK(j["predicted"].empty());
    CHECK(j["checks"].empty());
    CHECK(j["verdict"] == "pass");
    CHECK(r.passed());
  }

  TEST_CASE("a failed check gives a fail verdict") {
    ExperimentReport r;
    r.check("ok", 1.0, "<=", 2.0);
    r.check("bad", 3.0, "<=", 2.0);
    CHECK_FALSE(r.passed());
    const auto j = json::parse(r.to_json());
    CHECK(j["verdict"] == "fail");
    CHECK(j["checks"]["ok"]["pass"] == true);
    CHECK(j["checks"]["bad"]["pass"] == false);
  }

  TEST_CASE("check relations") {
    ExperimentReport r;
    r.check("a", 1.0, "<", 1.0);
    r.check("b", 1.0, ">=", 1.0);
    r.check("c", 0.0, "==", 0.0);
    r.check("d", std::nan(""), "<=", 1.0);
    CHECK_FALSE(r.checks[0].pass);
    CHECK(r.checks[1].pass);
    CHECK(r.checks[2].pass);
    CHECK_FALSE(r.checks[3].pass);
    CHECK_THROWS_AS(r.check("e", 0.0, "~", 1.0), Error);
  }

  TEST_CASE("every measured key needs a prediction or a diagnostic mark") {
    ExperimentReport r;
    r.measure("rate", 1.4, 1.5, "declared");
    r.measure("iterations", 9.0);
    r.validate();
    r.measured["orphan"] = 1.0;
    CHECK_THROWS_AS(r.validate(), Error);
  }

  TEST_CASE("json keys are sorted and stable") {
    ExperimentReport r;
    r.experiment = "x";
    r.measure("zeta", 1.0);
    r.measure("alpha", 2.0);
    const std::string s = r.to_json();
    CHECK(s.find("\"alpha\"") < s.find("\"zeta\""));
    CHECK(s == r.to_json());
  }

  TEST_CASE("csv uses seventeen significant digits") {
    Table t;
    t.columns = {"t", "x"};
    t.add({0.1, 1.0 / 3.0});
    CHECK(t.to_csv() == "t,x\n0.10000000000000001,0.33333333333333331\n");
    CHECK_THROWS_AS(t.add({1.0}), Error);
  }

  TEST_CASE("emit writes the report files") {
    const std::filesystem::path dir = std::filesystem::path(MVSDE_TEST_TMP) / "emit";
    std::filesystem::remove_all(dir);
    ExperimentReport r;
    r.experiment = "demo";
    r.series.columns = {"t"};
    r.series.add({0.0});
    r.artifacts["extra.csv"].columns = {"a"};
    r.runtime_seconds = 1.25;
    emit_report(r, dir.string());
    CHECK(slurp(dir / "report.json") == r.to_json());
    CHECK(slurp(dir / "series.csv") == "t\n0\n");
    CHECK(std::filesystem::exists(dir / "extra.csv"));
    CHECK(json::parse(slurp(dir / "timing.json"))["runtime_seconds"] == 1.25);
  }

  TEST_CASE("noop experiment passes with an empty measured set") {
    const auto c = Config::parse("[run]\nexperiment = noop\nseed = 1\n");
    const auto r = run_experiment(c);
    CHECK(r.measured.empty());
    CHECK(r.passed());
    CHECK(r.to_json() == run_experiment(c).to_json());
  }

  TEST_CASE("every shipped config validates") {
    for (const auto& entry : std::filesystem::directory_iterator(MVSDE_CONFIG_DIR)) {
      CAPTURE(entry.path().string());
      CHECK_NOTHROW(validate_config(Config::load(entry.path().string())));
    }
    CHECK(experiment_names().size() == 11);
  }

  TEST_CASE("config mistakes are config errors") {
    auto kind_of = [](const std::string& text) {
      try {
        validate_config(Config::parse(text, "t"));
      } catch (const Error& e) {
        return e.kind();
      }
      FAIL("expected an error for: " << text);
      return ErrorKind::kIo;
    };
    CHECK(kind_of("[run]\nexperiment = nope\n") == ErrorKind::kConfig);
    CHECK(kind_of("[run]\nexperiment = noop\nspurious = 1\n") == ErrorKind::kConfig);
    CHECK(kind_of("[run]\nexperiment = picard\n[model]\nkind = granular\n") == ErrorKind::kConfig);
    CHECK(kind_of("[run]\nexperiment = metric_oracle\n[experiment]\ntolerance = -1\n") == ErrorKind::kConfig);
  }

  TEST_CASE("model and init builders") {
    const auto c = Config::parse(
        "[model]\nkind = linear_meanfield\nA = -1\nC = 0.5\nSigma = 1.4142135623730951\n"
        "[init]\nkind = gaussian\nmean = 2\ncov = 0.25\n"
        "[run]\nseed = 3\n[sim]\nn = 100\ndt = 0.01\nt_end = 1\nrecord_every = 10\n");
    const auto m = model_from_config(c);
    CHECK(m.kind() == ModelKind::kLinearMeanField);
    CHECK(m.declared_rate().rate == doctest::Approx(0.5));
    const auto s = sim_from_config(c);
    CHECK(s.n == 100);
    CHECK(s.seed == 3);
    CHECK(init_from_config(c, m, 100, 3).size() == 100);
  }

  TEST_CASE("decay rate fit") {
    std::vector<double> t, y;
    for (int k = 0; k <= 20; ++k) {
      t.push_back(0.25 * k);
      y.push_back(3.0 * std::exp(-1.7 * t.back()));
    }
    CHECK(fit_decay_rate(t, y, 0.0, 5.0) == doctest::Approx(1.7).epsilon(1e-12));
    CHECK(fit_decay_rate(t, y, 1.0, 2.0) == doctest::Approx(1.7).epsilon(1e-12));
  }
}
