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

#include <Eigen/Dense>
#include <cstdint>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

namespace mvsde {

// Experiment configuration: flat sections of `key = value` lines.
//
//   # comment
//   [section]
//   key = value
//
// Values stay as text until read through a typed getter. Matrices are written
// row by row with `;` between rows and spaces or commas between entries.
class Config {
 public:
  static Config parse(const std::string& text, const std::string& origin = "<string>");
  static Config load(const std::string& path);

  // Canonical text; parse(serialize()) reproduces the same entries.
  std::string serialize() const;

  bool has(const std::string& section, const std::string& key) const;
  void set(const std::string& section, const std::string& key, const std::string& value);
  std::optional<std::string> raw(const std::string& section, const std::string& key) const;

  std::string get_string(const std::string& section, const std::string& key) const;
  std::string get_string(const std::string& section, const std::string& key, const std::string& fallback) const;
  double get_double(const std::string& section, const std::string& key) const;
  double get_double(const std::string& section, const std::string& key, double fallback) const;
  std::optional<double> get_optional_double(const std::string& section, const std::string& key) const;
  std::uint64_t get_uint(const std::string& section, const std::string& key) const;
  std::uint64_t get_uint(const std::string& section, const std::string& key, std::uint64_t fallback) const;
  bool get_bool(const std::string& section, const std::string& key, bool fallback) const;
  std::vector<double> get_list(const std::string& section, const std::string& key) const;
  std::vector<double> get_list(const std::string& section, const std::string& key,
                               const std::vector<double>& fallback) const;
  Eigen::MatrixXd get_matrix(const std::string& section, const std::string& key) const;
  Eigen::VectorXd get_vector(const std::string& section, const std::string& key) const;

  // Keys never read by a getter since construction, as "section.key".
  std::vector<std::string> unused_keys() const;

  bool operator==(const Config& other) const { return entries_ == other.entries_; }

 private:
  struct Entry {
    std::string section;
    std::string key;
    std::string value;
    int line = 0;
    bool operator==(const Entry& o) const { return section == o.section && key == o.key && value == o.value; }
  };
  const Entry* find(const std::string& section, const std::string& key) const;
  const Entry& need(const std::string& section, const std::string& key) const;
  [[noreturn]] void bad_value(const Entry& e, const std::string& expected) const;

  std::string origin_;
  std::vector<Entry> entries_;
  mutable std::set<std::pair<std::string, std::string>> used_;
};

// Shortest decimal form that reads back to the same double.
std::string format_double(double v);

}  // namespace mvsde
