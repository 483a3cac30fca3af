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

// mvsde: run experiment configs through the C API.
//
//   mvsde run <config> [--seed N] [--out DIR] [--threads K]
//   mvsde validate <config>
//   mvsde list-experiments
//
// Exit status: 0 pass, 1 check failure, 2 usage or config error, 3 runtime error.

#include <cstdint>
#include <cstdio>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "mvsde/mvsde.h"

namespace {

constexpr int kExitPass = 0;
constexpr int kExitFail = 1;
constexpr int kExitUsage = 2;
constexpr int kExitRuntime = 3;

int report_error(const char* stage, mvsde_status status) {
  std::fprintf(stderr, "mvsde: %s: %s: %s\n", stage, mvsde_status_name(status), mvsde_last_error());
  return status == MVSDE_ERR_CONFIG || status == MVSDE_ERR_INVALID_ARGUMENT ? kExitUsage : kExitRuntime;
}

std::string config_value(const mvsde_config* cfg, const char* section, const char* key, const std::string& fallback) {
  size_t len = 0;
  if (mvsde_config_get(cfg, section, key, nullptr, 0, &len) != MVSDE_OK) return fallback;
  std::string out(len + 1, '\0');
  mvsde_config_get(cfg, section, key, out.data(), out.size(), &len);
  out.resize(len);
  return out;
}

struct Loaded {
  mvsde_config* cfg = nullptr;
  ~Loaded() { mvsde_config_free(cfg); }
};

int run(const std::string& path, std::optional<std::uint64_t> seed, std::optional<std::string> out_dir,
        unsigned threads) {
  Loaded loaded;
  mvsde_status st = mvsde_config_load(path.c_str(), &loaded.cfg);
  if (st != MVSDE_OK) return st == MVSDE_ERR_IO ? report_error("load", MVSDE_ERR_CONFIG) : report_error("load", st);
  if (seed) {
    st = mvsde_config_set(loaded.cfg, "run", "seed", std::to_string(*seed).c_str());
    if (st != MVSDE_OK) return report_error("--seed", st);
  }
  st = mvsde_set_threads(threads);
  if (st != MVSDE_OK) return report_error("--threads", st);
  st = mvsde_config_validate(loaded.cfg);
  if (st != MVSDE_OK) return report_error("config", st);

  const std::string experiment = config_value(loaded.cfg, "run", "experiment", "experiment");
  const std::string dir = out_dir ? *out_dir : "out/" + experiment;

  mvsde_report* report = nullptr;
  st = mvsde_run(loaded.cfg, &report);
  if (st != MVSDE_OK) return report_error("run", st);
  st = mvsde_report_write(report, dir.c_str());
  const int passed = mvsde_report_passed(report);
  const double seconds = mvsde_report_runtime_seconds(report);
  mvsde_report_free(report);
  if (st != MVSDE_OK) return report_error("write", st);
  std::fprintf(stderr, "mvsde: %s %s in %.2f s, results in %s\n", experiment.c_str(), passed ? "passed" : "FAILED",
               seconds, dir.c_str());
  return passed ? kExitPass : kExitFail;
}

int validate(const std::string& path) {
  Loaded loaded;
  mvsde_status st = mvsde_config_load(path.c_str(), &loaded.cfg);
  if (st != MVSDE_OK) return report_error("load", MVSDE_ERR_CONFIG);
  st = mvsde_config_validate(loaded.cfg);
  if (st != MVSDE_OK) return report_error("config", st);
  std::printf("%s: ok\n", path.c_str());
  return kExitPass;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Particle simulation and exact oracles for distribution-dependent SDEs"};
  app.require_subcommand(1);

  std::string run_path;
  std::uint64_t seed = 0;
  std::string out_dir;
  unsigned threads = 1;
  auto* run_cmd = app.add_subcommand("run", "Run one experiment config");
  run_cmd->add_option("config", run_path, "Config file")->required();
  auto* seed_opt = run_cmd->add_option("--seed", seed, "Override [run] seed");
  auto* out_opt = run_cmd->add_option("--out", out_dir, "Output directory (default out/<experiment>)");
  run_cmd->add_option("--threads", threads, "Worker threads; results do not depend on it")
      ->check(CLI::Range(1u, 1024u));

  std::string validate_path;
  auto* validate_cmd = app.add_subcommand("validate", "Parse a config and check every key");
  validate_cmd->add_option("config", validate_path, "Config file")->required();

  auto* list_cmd = app.add_subcommand("list-experiments", "Print the experiment names");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitPass : kExitUsage;
  }

  if (*list_cmd) {
    for (size_t i = 0; i < mvsde_experiment_count(); ++i) std::printf("%s\n", mvsde_experiment_name(i));
    return kExitPass;
  }
  if (*validate_cmd) return validate(validate_path);
  return run(run_path, *seed_opt ? std::optional<std::uint64_t>(seed) : std::nullopt,
             *out_opt ? std::optional<std::string>(out_dir) : std::nullopt, threads);
}
