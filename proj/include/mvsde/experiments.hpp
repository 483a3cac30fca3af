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

#pragma once

#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "mvsde/config.hpp"
#include "mvsde/models.hpp"
#include "mvsde/oracle.hpp"
#include "mvsde/simulate.hpp"

namespace mvsde {

struct Prediction {
  double value = 0.0;
  std::string source;  // formula or oracle the value comes from
};

struct Check {
  std::string name;
  bool pass = false;
  double value = 0.0;
  double threshold = 0.0;
  std::string relation;  // "<=", ">=", "==" or a short phrase
};

// A table written as CSV with a fixed header.
struct Table {
  std::vector<std::string> columns;
  std::vector<std::vector<double>> rows;

  void add(std::vector<double> row);
  std::string to_csv() const;
};

struct ExperimentReport {
  std::string experiment;
  std::map<std::string, double> measured;
  std::map<std::string, Prediction> predicted;
  std::set<std::string> diagnostic_only;
  std::vector<Check> checks;
  // Nested JSON text for the `picard` and `bismut` sections, keyed by name.
  std::map<std::string, std::string> sections;
  std::map<std::string, std::string> metadata;
  Table series;
  // Extra CSV artifacts (snapshots.csv, density.csv).
  std::map<std::string, Table> artifacts;
  double runtime_seconds = 0.0;

  bool passed() const;
  // Fails with kInvalidArgument when a measured key has neither a prediction
  // nor a diagnostic-only mark.
  void validate() const;
  std::string to_json() const;

  void measure(const std::string& key, double value);  // diagnostic-only
  void measure(const std::string& key, double value, double predicted, const std::string& source);
  void check(const std::string& name, double value, const std::string& relation, double threshold);
  void check_flag(const std::string& name, bool pass);
};

// Writes report.json and series.csv (plus artifacts) into out_dir, creating
// it when missing. Timing goes to timing.json so report.json stays
// byte-reproducible.
void emit_report(const ExperimentReport& report, const std::string& out_dir);

const std::vector<std::string>& experiment_names();

// Parses every key the experiment reads and rejects unknown ones.
void validate_config(const Config& config);
ExperimentReport run_experiment(const Config& config);

// Building blocks shared with the tests.
Model model_from_config(const Config& config, const std::string& section = "model");
SimConfig sim_from_config(const Config& config);
ParticleEnsemble init_from_config(const Config& config, const Model& model, std::size_t n, std::uint64_t seed,
                                  StreamTag tag = StreamTag::kInitA, const std::string& section = "init");

// Least-squares slope of -log(y) against t over the points with t in
// [t_min, t_max] and y > 0.
double fit_decay_rate(const std::vector<double>& t, const std::vector<double>& y, double t_min, double t_max);

}  // namespace mvsde
