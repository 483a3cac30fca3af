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

#include "mvsde/config.hpp"

#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "mvsde/error.hpp"

namespace mvsde {

namespace {

std::string trim(const std::string& s) {
  std::size_t b = 0;
  std::size_t e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return s.substr(b, e - b);
}

bool valid_name(const std::string& s) {
  if (s.empty()) return false;
  for (char c : s)
    if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '.' || c == '-')) return false;
  return true;
}

std::optional<double> parse_number(const std::string& s) {
  const std::string t = trim(s);
  if (t.empty()) return std::nullopt;
  double v = 0.0;
  const char* first = t.data();
  const char* last = t.data() + t.size();
  if (*first == '+') ++first;
  auto [ptr, ec] = std::from_chars(first, last, v);
  if (ec != std::errc() || ptr != last) return std::nullopt;
  return v;
}

// Entries of one matrix row or list, split on spaces and commas.
std::optional<std::vector<double>> parse_row(const std::string& s) {
  std::vector<double> out;
  std::string token;
  auto flush = [&]() -> bool {
    if (token.empty()) return true;
    auto v = parse_number(token);
    token.clear();
    if (!v) return false;
    out.push_back(*v);
    return true;
  };
  for (char c : s) {
    if (c == ',' || std::isspace(static_cast<unsigned char>(c))) {
      if (!flush()) return std::nullopt;
    } else {
      token.push_back(c);
    }
  }
  if (!flush()) return std::nullopt;
  return out;
}

}  // namespace

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  (void)ec;
  return std::string(buf, ptr);
}

Config Config::parse(const std::string& text, const std::string& origin) {
  Config cfg;
  cfg.origin_ = origin;
  std::istringstream in(text);
  std::string line;
  std::string section;
  int number = 0;
  auto where = [&]() { return origin + ":" + std::to_string(number) + ": "; };
  while (std::getline(in, line)) {
    ++number;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') fail(ErrorKind::kConfig, where() + "unterminated section header");
      section = trim(line.substr(1, line.size() - 2));
      if (!valid_name(section)) fail(ErrorKind::kConfig, where() + "invalid section name '" + section + "'");
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) fail(ErrorKind::kConfig, where() + "expected 'key = value'");
    if (section.empty()) fail(ErrorKind::kConfig, where() + "key outside of any [section]");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (!valid_name(key)) fail(ErrorKind::kConfig, where() + "invalid key '" + key + "'");
    if (cfg.find(section, key) != nullptr)
      fail(ErrorKind::kConfig, where() + "duplicate key '" + section + "." + key + "'");
    cfg.entries_.push_back({section, key, value, number});
  }
  return cfg;
}

Config Config::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::kIo, "cannot open config '" + path + "'");
  std::ostringstream text;
  text << in.rdbuf();
  return parse(text.str(), path);
}

std::string Config::serialize() const {
  // Sections in order of first appearance, keys in insertion order.
  std::vector<std::string> sections;
  for (const auto& e : entries_) {
    bool seen = false;
    for (const auto& s : sections) seen = seen || s == e.section;
    if (!seen) sections.push_back(e.section);
  }
  std::string out;
  for (std::size_t s = 0; s < sections.size(); ++s) {
    if (s > 0) out += "\n";
    out += "[" + sections[s] + "]\n";
    for (const auto& e : entries_)
      if (e.section == sections[s]) out += e.key + " = " + e.value + "\n";
  }
  return out;
}

const Config::Entry* Config::find(const std::string& section, const std::string& key) const {
  for (const auto& e : entries_)
    if (e.section == section && e.key == key) return &e;
  return nullptr;
}

const Config::Entry& Config::need(const std::string& section, const std::string& key) const {
  const Entry* e = find(section, key);
  if (e == nullptr) fail(ErrorKind::kConfig, origin_ + ": missing key '" + section + "." + key + "'");
  used_.insert({section, key});
  return *e;
}

void Config::bad_value(const Entry& e, const std::string& expected) const {
  const std::string line = e.line > 0 ? std::to_string(e.line) : "set";
  fail(ErrorKind::kConfig, origin_ + ":" + line + ": key '" + e.section + "." + e.key + "': expected " + expected +
                               ", got '" + e.value + "'");
}

bool Config::has(const std::string& section, const std::string& key) const {
  return find(section, key) != nullptr;
}

void Config::set(const std::string& section, const std::string& key, const std::string& value) {
  require(valid_name(section) && valid_name(key), "invalid config section or key name");
  const std::string v = trim(value);
  require(v.find('\n') == std::string::npos && v.find('#') == std::string::npos,
          "config values cannot contain newlines or '#'");
  for (auto& e : entries_)
    if (e.section == section && e.key == key) {
      e.value = v;
      e.line = 0;
      return;
    }
  entries_.push_back({section, key, v, 0});
}

std::optional<std::string> Config::raw(const std::string& section, const std::string& key) const {
  const Entry* e = find(section, key);
  if (e == nullptr) return std::nullopt;
  return e->value;
}

std::string Config::get_string(const std::string& section, const std::string& key) const {
  return need(section, key).value;
}

std::string Config::get_string(const std::string& section, const std::string& key,
                               const std::string& fallback) const {
  return has(section, key) ? get_string(section, key) : fallback;
}

double Config::get_double(const std::string& section, const std::string& key) const {
  const Entry& e = need(section, key);
  auto v = parse_number(e.value);
  if (!v) bad_value(e, "a number");
  return *v;
}

double Config::get_double(const std::string& section, const std::string& key, double fallback) const {
  return has(section, key) ? get_double(section, key) : fallback;
}

std::optional<double> Config::get_optional_double(const std::string& section, const std::string& key) const {
  if (!has(section, key)) return std::nullopt;
  return get_double(section, key);
}

std::uint64_t Config::get_uint(const std::string& section, const std::string& key) const {
  const Entry& e = need(section, key);
  const std::string t = trim(e.value);
  std::uint64_t v = 0;
  auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
  if (ec != std::errc() || ptr != t.data() + t.size() || t.empty()) {
    // Accept integral floating forms such as 1e4.
    auto d = parse_number(t);
    if (!d || *d < 0.0 || *d != std::floor(*d) || *d > 9.0e15) bad_value(e, "a non-negative integer");
    return static_cast<std::uint64_t>(*d);
  }
  return v;
}

std::uint64_t Config::get_uint(const std::string& section, const std::string& key, std::uint64_t fallback) const {
  return has(section, key) ? get_uint(section, key) : fallback;
}

bool Config::get_bool(const std::string& section, const std::string& key, bool fallback) const {
  if (!has(section, key)) return fallback;
  const Entry& e = need(section, key);
  if (e.value == "true" || e.value == "1" || e.value == "yes") return true;
  if (e.value == "false" || e.value == "0" || e.value == "no") return false;
  bad_value(e, "true or false");
}

std::vector<double> Config::get_list(const std::string& section, const std::string& key) const {
  const Entry& e = need(section, key);
  auto row = parse_row(e.value);
  if (!row || row->empty()) bad_value(e, "a list of numbers");
  return *row;
}

std::vector<double> Config::get_list(const std::string& section, const std::string& key,
                                     const std::vector<double>& fallback) const {
  return has(section, key) ? get_list(section, key) : fallback;
}

Eigen::MatrixXd Config::get_matrix(const std::string& section, const std::string& key) const {
  const Entry& e = need(section, key);
  std::vector<std::vector<double>> rows;
  std::stringstream ss(e.value);
  std::string part;
  while (std::getline(ss, part, ';')) {
    auto row = parse_row(part);
    if (!row || row->empty()) bad_value(e, "a matrix such as '1 0; 0 1'");
    rows.push_back(*row);
  }
  if (rows.empty()) bad_value(e, "a matrix such as '1 0; 0 1'");
  for (const auto& r : rows)
    if (r.size() != rows[0].size()) bad_value(e, "rows of equal length");
  Eigen::MatrixXd m(rows.size(), rows[0].size());
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t j = 0; j < rows[0].size(); ++j) m(i, j) = rows[i][j];
  return m;
}

Eigen::VectorXd Config::get_vector(const std::string& section, const std::string& key) const {
  const auto list = get_list(section, key);
  return Eigen::Map<const Eigen::VectorXd>(list.data(), static_cast<Eigen::Index>(list.size()));
}

std::vector<std::string> Config::unused_keys() const {
  std::vector<std::string> out;
  for (const auto& e : entries_)
    if (used_.count({e.section, e.key}) == 0) out.push_back(e.section + "." + e.key);
  return out;
}

}  // namespace mvsde
