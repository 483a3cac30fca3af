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


// Acceptance criteria. Each test case runs one shipped config through the C
// API at one thread, writes its outputs under the build tree, and re-checks
// the outputs against thresholds and oracles computed here.

#include <dlfcn.h>

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <numbers>
#include <numeric>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "doctest.h"
#include "json.hpp"
#include "mvsde/mvsde.h"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

const fs::path kConfigs = MVSDE_CONFIG_DIR;
const fs::path kOut = MVSDE_ACCEPTANCE_OUT;

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  REQUIRE_MESSAGE(in.good(), "cannot read " << p.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

struct Csv {
  std::vector<std::string> header;
  std::vector<std::vector<double>> rows;

  std::size_t col(const std::string& name) const {
    const auto it = std::find(header.begin(), header.end(), name);
    REQUIRE_MESSAGE(it != header.end(), "missing column " << name);
    return static_cast<std::size_t>(it - header.begin());
  }
  std::vector<double> column(const std::string& name) const {
    const std::size_t j = col(name);
    std::vector<double> out;
    for (const auto& r : rows) out.push_back(r[j]);
    return out;
  }
};

Csv read_csv(const fs::path& p) {
  std::istringstream in(slurp(p));
  Csv csv;
  std::string line, cell;
  std::getline(in, line);
  std::istringstream hs(line);
  while (std::getline(hs, cell, ',')) csv.header.push_back(cell);
  while (std::getline(in, line)) {
    std::istringstream ls(line);
    std::vector<double> row;
    while (std::getline(ls, cell, ',')) row.push_back(std::stod(cell));
    REQUIRE(row.size() == csv.header.size());
    csv.rows.push_back(std::move(row));
  }
  return csv;
}

class ConfigHandle {
 public:
  explicit ConfigHandle(const fs::path& path) {
    const mvsde_status st = mvsde_config_load(path.c_str(), &cfg_);
    REQUIRE_MESSAGE(st == MVSDE_OK, mvsde_last_error());
  }
  ~ConfigHandle() { mvsde_config_free(cfg_); }
  ConfigHandle(const ConfigHandle&) = delete;
  ConfigHandle& operator=(const ConfigHandle&) = delete;

  const mvsde_config* get() const { return cfg_; }
  std::string value(const char* section, const char* key) const {
    size_t len = 0;
    REQUIRE_MESSAGE(mvsde_config_get(cfg_, section, key, nullptr, 0, &len) == MVSDE_OK, mvsde_last_error());
    std::string s(len + 1, '\0');
    REQUIRE(mvsde_config_get(cfg_, section, key, s.data(), s.size(), &len) == MVSDE_OK);
    s.resize(len);
    return s;
  }
  double number(const char* section, const char* key) const { return std::stod(value(section, key)); }

 private:
  mvsde_config* cfg_ = nullptr;
};

struct Outcome {
  fs::path dir;
  json report;
  bool passed = false;
  double runtime = 0.0;
};

fs::path output_dir(const std::string& name, unsigned threads) {
  return kOut / ("threads" + std::to_string(threads)) / name;
}

Outcome run_config(const std::string& name, unsigned threads) {
  ConfigHandle cfg(kConfigs / (name + ".cfg"));
  REQUIRE_MESSAGE(mvsde_config_validate(cfg.get()) == MVSDE_OK, mvsde_last_error());
  REQUIRE(mvsde_set_threads(threads) == MVSDE_OK);
  mvsde_report* report = nullptr;
  const mvsde_status st = mvsde_run(cfg.get(), &report);
  REQUIRE_MESSAGE(st == MVSDE_OK, name << ": " << mvsde_last_error());
  Outcome out;
  out.dir = output_dir(name, threads);
  fs::remove_all(out.dir);
  REQUIRE_MESSAGE(mvsde_report_write(report, out.dir.c_str()) == MVSDE_OK, mvsde_last_error());
  out.passed = mvsde_report_passed(report) == 1;
  out.runtime = mvsde_report_runtime_seconds(report);
  mvsde_report_free(report);
  mvsde_set_threads(1);
  out.report = json::parse(slurp(out.dir / "report.json"));
  MESSAGE(name << ": " << (out.passed ? "pass" : "FAIL") << " in " << out.runtime << " s");
  return out;
}

double measured(const Outcome& o, const char* key) {
  REQUIRE_MESSAGE(o.report["measured"].contains(key), "missing measured." << key);
  return o.report["measured"][key].get<double>();
}

double predicted(const Outcome& o, const char* key) {
  REQUIRE_MESSAGE(o.report["predicted"].contains(key), "missing predicted." << key);
  return o.report["predicted"][key]["value"].get<double>();
}

void check_verdict(const Outcome& o) {
  for (const auto& [name, c] : o.report["checks"].items()) CHECK_MESSAGE(c["pass"].get<bool>(), "check " << name);
  CHECK(o.report["verdict"] == "pass");
  CHECK(o.passed);
}

// Least-squares slope of -log y on t over [t0, t1].
double decay_rate(const std::vector<double>& t, const std::vector<double>& y, double t0, double t1) {
  double st = 0, sy = 0, stt = 0, sty = 0;
  int n = 0;
  for (std::size_t k = 0; k < t.size(); ++k) {
    if (t[k] < t0 - 1e-9 || t[k] > t1 + 1e-9 || !(y[k] > 0.0)) continue;
    const double ly = std::log(y[k]);
    st += t[k];
    sy += ly;
    stt += t[k] * t[k];
    sty += t[k] * ly;
    ++n;
  }
  REQUIRE(n >= 2);
  return -(n * sty - st * sy) / (n * stt - st * st);
}

Eigen::MatrixXd parse_matrix(const std::string& text) {
  std::vector<std::vector<double>> rows;
  std::istringstream rs(text);
  std::string row;
  while (std::getline(rs, row, ';')) {
    std::replace(row.begin(), row.end(), ',', ' ');
    std::istringstream es(row);
    rows.emplace_back();
    double v;
    while (es >> v) rows.back().push_back(v);
  }
  Eigen::MatrixXd m(rows.size(), rows[0].size());
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t j = 0; j < rows[i].size(); ++j) m(i, j) = rows[i][j];
  return m;
}

Eigen::MatrixXd sym_sqrt(const Eigen::MatrixXd& m) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (m + m.transpose()));
  return es.eigenvectors() * es.eigenvalues().cwiseMax(0.0).cwiseSqrt().asDiagonal() * es.eigenvectors().transpose();
}

double bures(const Eigen::VectorXd& m1, const Eigen::MatrixXd& v1, const Eigen::VectorXd& m2,
             const Eigen::MatrixXd& v2) {
  const Eigen::MatrixXd r = sym_sqrt(v2);
  const double tr = v1.trace() + v2.trace() - 2.0 * sym_sqrt(r * v1 * r).trace();
  return std::sqrt(std::max(0.0, (m1 - m2).squaredNorm() + tr));
}

// Brute force over all N! matchings.
double brute_force_wp(const std::vector<double>& a, const std::vector<double>& b, std::size_t n, std::size_t dim,
                      double p) {
  std::vector<std::size_t> perm(n);
  std::iota(perm.begin(), perm.end(), 0);
  double best = INFINITY;
  do {
    double cost = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      double d2 = 0.0;
      for (std::size_t k = 0; k < dim; ++k) d2 += std::pow(a[i * dim + k] - b[perm[i] * dim + k], 2);
      cost += std::pow(std::sqrt(d2), p);
    }
    best = std::min(best, cost);
  } while (std::next_permutation(perm.begin(), perm.end()));
  return std::pow(best / static_cast<double>(n), 1.0 / p);
}

double barenblatt(double t, double x) {
  const double c = 1.0 / (std::numbers::pi * std::sqrt(3.0));
  return std::pow(t, -0.25) * std::sqrt(std::max(0.0, c - x * x / (12.0 * std::sqrt(t))));
}

// Sum_i |f_i - g_i| dx over the rows of a t,x,f table at time t.
double l1_between(const Csv& a, const Csv& b, double t) {
  std::vector<double> fa, fb, xs;
  for (const auto& r : a.rows)
    if (std::abs(r[0] - t) < 1e-6) {
      fa.push_back(r[2]);
      xs.push_back(r[1]);
    }
  for (const auto& r : b.rows)
    if (std::abs(r[0] - t) < 1e-6) fb.push_back(r[2]);
  REQUIRE(fa.size() == fb.size());
  REQUIRE(fa.size() >= 2);
  const double dx = xs[1] - xs[0];
  double s = 0.0;
  for (std::size_t i = 0; i < fa.size(); ++i) s += std::abs(fa[i] - fb[i]) * dx;
  return s;
}

}  // namespace

TEST_CASE("01_metric_oracle") {
  const auto o = run_config("metric_oracle", 1);
  check_verdict(o);
  CHECK(measured(o, "instances") == 200);
  CHECK(measured(o, "max_abs_error") <= 1e-10);
  const auto csv = read_csv(o.dir / "series.csv");
  REQUIRE(csv.rows.size() == 200);
  for (const auto& r : csv.rows) {
    CHECK(r[csv.col("n")] <= 8);
    CHECK(r[csv.col("dim")] <= 2);
    CHECK((r[csv.col("p")] == 1 || r[csv.col("p")] == 2));
    CHECK(std::abs(r[csv.col("exact")] - r[csv.col("brute_force")]) <= 1e-10);
  }
  CHECK(o.runtime < 10.0);

  // The same property through the public entry point on instances drawn here.
  std::mt19937_64 gen(2026);
  std::uniform_real_distribution<double> u(-3.0, 3.0);
  double worst = 0.0;
  for (int inst = 0; inst < 200; ++inst) {
    const std::size_t n = 1 + inst % 8, dim = 1 + (inst / 8) % 2;
    const double p = inst % 2 == 0 ? 1.0 : 2.0;
    std::vector<double> a(n * dim), b(n * dim);
    for (auto& v : a) v = u(gen);
    for (auto& v : b) v = u(gen);
    double w = 0.0;
    REQUIRE(mvsde_wasserstein(a.data(), b.data(), n, dim, p, &w) == MVSDE_OK);
    worst = std::max(worst, std::abs(w - brute_force_wp(a, b, n, dim, p)));
  }
  CHECK(worst <= 1e-10);
}

TEST_CASE("02_gaussian_tracking") {
  ConfigHandle cfg(kConfigs / "gaussian_tracking.cfg");
  CHECK(cfg.number("model", "A") == -1.0);
  CHECK(cfg.number("model", "C") == 0.5);
  CHECK(cfg.number("model", "Sigma") == doctest::Approx(std::sqrt(2.0)).epsilon(1e-15));
  const double n = cfg.number("sim", "n");
  CHECK(n == 1e4);
  CHECK(cfg.number("sim", "dt") == 1e-3);
  CHECK(cfg.number("sim", "t_end") == 5.0);
  const double m0 = cfg.number("init", "mean"), v0 = cfg.number("init", "cov");

  const auto o = run_config("gaussian_tracking", 1);
  check_verdict(o);
  const auto csv = read_csv(o.dir / "series.csv");
  REQUIRE(csv.rows.size() == 51);
  double max_w2 = 0.0;
  for (const auto& r : csv.rows) {
    const double t = r[csv.col("t")];
    // m' = (A + C) m and v' = 2 A v + Sigma^2.
    const double mean = m0 * std::exp(-0.5 * t);
    const double var = 1.0 + (v0 - 1.0) * std::exp(-2.0 * t);
    CHECK(r[csv.col("oracle_mean_0")] == doctest::Approx(mean).epsilon(1e-9));
    CHECK(r[csv.col("oracle_var_0")] == doctest::Approx(var).epsilon(1e-9));
    CHECK(std::abs(r[csv.col("mean_0")] - mean) <= 4.0 * std::sqrt(var / n));
    CHECK(std::abs(r[csv.col("var_0")] - var) <= 4.0 * var * std::sqrt(2.0 / (n - 1.0)));
    max_w2 = std::max(max_w2, r[csv.col("w2")]);
  }
  CHECK(max_w2 <= 0.05);
  CHECK(measured(o, "max_w2") == doctest::Approx(max_w2));
  CHECK(o.runtime < 60.0);
}

TEST_CASE("03_contraction") {
  ConfigHandle cfg(kConfigs / "contraction.cfg");
  const double lambda = cfg.number("model", "lambda"), d1 = cfg.number("model", "delta1"),
               d2 = cfg.number("model", "delta2");
  CHECK(lambda == 2.0);
  CHECK(d1 == 0.0);
  CHECK(d2 == 0.5);
  const double declared = lambda + d1 - d2;
  const double vq = cfg.number("model", "V.quad"), wq = cfg.number("model", "W.quad");
  const double fit0 = cfg.number("experiment", "fit_start"), fit1 = cfg.number("experiment", "fit_end");

  const auto o = run_config("contraction", 1);
  check_verdict(o);
  CHECK(predicted(o, "rate") == 1.5);

  // Both laws stay Gaussian: means decay at V'' and variances at 2 (V'' + W'')
  // towards 1 / (V'' + W'').
  const auto csv = read_csv(o.dir / "series.csv");
  const double ma = cfg.number("init_a", "mean"), va = cfg.number("init_a", "cov");
  const double mb = cfg.number("init_b", "mean"), vb = cfg.number("init_b", "cov");
  const double k = vq + wq, vinf = 1.0 / k;
  std::vector<double> t = csv.column("t"), exact;
  for (double s : t) {
    const double dm = (ma - mb) * std::exp(-vq * s);
    const double sa = std::sqrt(vinf + (va - vinf) * std::exp(-2.0 * k * s));
    const double sb = std::sqrt(vinf + (vb - vinf) * std::exp(-2.0 * k * s));
    exact.push_back(std::sqrt(dm * dm + (sa - sb) * (sa - sb)));
  }
  const auto oracle_col = csv.column("oracle_w2");
  for (std::size_t i = 0; i < t.size(); ++i) CHECK(oracle_col[i] == doctest::Approx(exact[i]).epsilon(1e-6));
  const double oracle_rate = decay_rate(t, exact, fit0, fit1);
  CHECK(predicted(o, "oracle_rate") == doctest::Approx(oracle_rate).epsilon(1e-6));

  const double rate = measured(o, "rate");
  CHECK(rate == doctest::Approx(decay_rate(t, csv.column("w2"), fit0, fit1)).epsilon(1e-9));
  CHECK(std::abs(rate - oracle_rate) <= 0.15 * oracle_rate);
  CHECK(rate >= declared * (1.0 - 0.15));
  CHECK(o.runtime < 120.0);
}

TEST_CASE("04_log_harnack") {
  ConfigHandle cfg(kConfigs / "log_harnack.cfg");
  const auto o = run_config("log_harnack", 1);
  check_verdict(o);

  const Eigen::MatrixXd a = parse_matrix(cfg.value("model", "A"));
  const Eigen::MatrixXd c = parse_matrix(cfg.value("model", "C"));
  const Eigen::MatrixXd s = parse_matrix(cfg.value("model", "Sigma"));
  const Eigen::MatrixXd sym = 0.5 * (a + a.transpose());
  CHECK(measured(o, "kappa1") ==
        doctest::Approx(std::max(0.0, 2.0 * Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(sym).eigenvalues().maxCoeff())));
  CHECK(measured(o, "kappa2") == doctest::Approx(2.0 * Eigen::JacobiSVD<Eigen::MatrixXd>(c).singularValues()(0)));
  CHECK(measured(o, "lambda") == doctest::Approx(1.0 / Eigen::JacobiSVD<Eigen::MatrixXd>(s).singularValues().minCoeff()));

  const auto csv = read_csv(o.dir / "series.csv");
  CHECK(csv.rows.size() == 20 * 6);
  std::map<double, int> per_time;
  for (const auto& r : csv.rows) {
    CHECK(r[csv.col("kl")] <= r[csv.col("bound")]);
    per_time[r[csv.col("t")]]++;
  }
  CHECK(per_time == std::map<double, int>{{0.1, 20}, {0.2, 20}, {0.5, 20}, {1.0, 20}, {2.0, 20}, {5.0, 20}});
  CHECK(o.runtime < 5.0);
}

TEST_CASE("05_ergodicity") {
  ConfigHandle cfg(kConfigs / "ergodicity.cfg");
  const double beta = cfg.number("model", "beta"), theta = cfg.number("model", "theta");
  CHECK(beta == 1.0);
  CHECK(theta == 0.05);
  CHECK(cfg.number("model", "B") == 1.0);
  CHECK(cfg.number("model", "confinement") == 0.0);
  CHECK(cfg.number("sim", "n") == 1e4);
  CHECK(cfg.number("sim", "dt") == 5e-4);
  CHECK(cfg.number("sim", "t_end") == 20.0);
  const double root = std::sqrt(2.0 + 2.0 * beta + beta * beta);
  const double theta1 = theta * (0.5 + root), theta2 = 0.5 * theta * root;
  const double kappa =
      2.0 * (beta - theta1 - theta2) / (2.0 + 2.0 * beta + beta * beta + std::sqrt(std::pow(beta, 4) + 4.0));

  const auto o = run_config("ergodicity", 1);
  check_verdict(o);
  CHECK(predicted(o, "rate") == doctest::Approx(kappa).epsilon(1e-12));

  // Exact Gaussian flow of dx = y dt, dy = -(beta x + theta (x - E x) + y) dt + sqrt(2) dW:
  // fluctuations follow a, the mean follows a + c.
  Eigen::Matrix2d a, c, q;
  a << 0.0, 1.0, -(beta + theta), -1.0;
  c << 0.0, 0.0, theta, 0.0;
  q << 0.0, 0.0, 0.0, 2.0;
  // Invariant covariance from a V + V a^T + q = 0, vectorized column-major.
  Eigen::Matrix4d lyap = Eigen::Matrix4d::Zero();
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j)
      for (int k = 0; k < 2; ++k) {
        lyap(i + 2 * j, k + 2 * j) += a(i, k);  // (a V)_{ij}
        lyap(i + 2 * j, i + 2 * k) += a(j, k);  // (V a^T)_{ij}
      }
  const Eigen::Vector4d vinf_vec = lyap.fullPivLu().solve(-Eigen::Map<const Eigen::Vector4d>(q.data()));
  const Eigen::Matrix2d vinf = Eigen::Map<const Eigen::Matrix2d>(vinf_vec.data());
  const Eigen::Vector2d zero = Eigen::Vector2d::Zero();

  const auto csv = read_csv(o.dir / "series.csv");
  const auto t = csv.column("t");
  const auto oracle_col = csv.column("oracle_w2");
  Eigen::Vector2d m(2.0, 0.0);
  Eigen::Matrix2d v;
  v << 0.25, 0.0, 0.0, 0.0;
  auto fm = [&](const Eigen::Vector2d& x) -> Eigen::Vector2d { return (a + c) * x; };
  auto fv = [&](const Eigen::Matrix2d& x) -> Eigen::Matrix2d { return a * x + x * a.transpose() + q; };
  const double h = 1e-3;
  double now = 0.0;
  std::vector<double> exact;
  for (std::size_t k = 0; k < t.size(); ++k) {
    while (now < t[k] - 1e-9) {
      const auto m1 = fm(m), m2 = fm(m + 0.5 * h * m1), m3 = fm(m + 0.5 * h * m2), m4 = fm(m + h * m3);
      const Eigen::Matrix2d v1 = fv(v), v2 = fv(v + 0.5 * h * v1), v3 = fv(v + 0.5 * h * v2), v4 = fv(v + h * v3);
      m += h / 6.0 * (m1 + 2.0 * m2 + 2.0 * m3 + m4);
      v += h / 6.0 * (v1 + 2.0 * v2 + 2.0 * v3 + v4);
      now += h;
    }
    exact.push_back(bures(m, v, zero, vinf));
    CHECK(std::abs(oracle_col[k] - exact[k]) <= 1e-6 * (1.0 + exact[k]));
  }
  const double oracle_rate = decay_rate(t, exact, cfg.number("experiment", "oracle_fit_start"),
                                        cfg.number("experiment", "oracle_fit_end"));
  CHECK(measured(o, "oracle_rate") == doctest::Approx(oracle_rate).epsilon(1e-4));
  CHECK(oracle_rate >= kappa);

  const double rate = measured(o, "rate");
  CHECK(rate == doctest::Approx(decay_rate(t, csv.column("w2_moment_matched"), cfg.number("experiment", "fit_start"),
                                           cfg.number("experiment", "fit_end")))
                    .epsilon(1e-9));
  CHECK(rate >= 0.8 * kappa);
  CHECK(o.runtime < 180.0);
}

TEST_CASE("06_superposition") {
  ConfigHandle cfg(kConfigs / "superposition.cfg");
  CHECK(cfg.number("sim", "n") == 1e5);
  CHECK(cfg.number("experiment", "cells") == 400);
  CHECK(cfg.value("model", "dim") == "1");

  const auto o = run_config("superposition", 1);
  check_verdict(o);
  CHECK(measured(o, "l1_error") <= 0.05);
  const auto series = read_csv(o.dir / "series.csv");
  const auto fpe = read_csv(o.dir / "density.csv");
  const auto particles = read_csv(o.dir / "density_particles.csv");
  std::vector<double> seen;
  for (const auto& r : series.rows) {
    const double t = r[series.col("t")];
    seen.push_back(std::round(t * 1e6) / 1e6);
    // Recompute the reported L1 error from the two density tables.
    CHECK(l1_between(fpe, particles, t) == doctest::Approx(r[series.col("l1_error")]).epsilon(1e-9));
    CHECK(r[series.col("l1_error")] <= 0.05);
    CHECK(std::abs(r[series.col("fpe_mass")] - 1.0) <= 1e-10);
  }
  CHECK(seen == std::vector<double>{0.5, 1.0, 2.0});
  const auto energy = series.column("free_energy");
  for (std::size_t k = 1; k < energy.size(); ++k) CHECK(energy[k] <= energy[k - 1]);
  CHECK(o.runtime < 180.0);
}

TEST_CASE("07_porous") {
  ConfigHandle cfg(kConfigs / "porous.cfg");
  CHECK(cfg.number("experiment", "cells") == 800);
  CHECK(cfg.number("sim", "n") == 1e5);
  const auto o = run_config("porous", 1);
  check_verdict(o);

  // Compare the density tables with the closed-form profile at cell centers.
  auto l1_to_barenblatt = [](const Csv& table, double t) {
    std::vector<double> xs, fs;
    for (const auto& r : table.rows)
      if (std::abs(r[0] - t) < 1e-6) {
        xs.push_back(r[1]);
        fs.push_back(r[2]);
      }
    REQUIRE(xs.size() >= 2);
    const double dx = xs[1] - xs[0];
    double s = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) s += std::abs(fs[i] - barenblatt(t, xs[i])) * dx;
    return s;
  };
  const auto fpe = read_csv(o.dir / "density.csv");
  const auto particles = read_csv(o.dir / "density_particles.csv");
  const double fpe_l1 = l1_to_barenblatt(fpe, 1.0);
  MESSAGE("FPE L1 to Barenblatt at t = 1: " << fpe_l1);
  CHECK(fpe_l1 <= 0.02);
  CHECK(measured(o, "l1_fpe_t1") <= 0.02);
  for (double t : {1.0, 1.5, 2.0}) {
    const double l1 = l1_to_barenblatt(particles, t);
    MESSAGE("particle L1 to Barenblatt at t = " << t << ": " << l1);
    CHECK(l1 <= 0.10);
  }
  CHECK(measured(o, "l1_particles") <= 0.10);
  CHECK(o.runtime < 240.0);
}

TEST_CASE("08_picard") {
  ConfigHandle cfg(kConfigs / "picard.cfg");
  CHECK(cfg.number("sim", "t_end") == 1.0);
  CHECK(cfg.value("model", "kind") == "granular");
  const auto o = run_config("picard", 1);
  check_verdict(o);
  const auto& pic = o.report["picard"];
  CHECK(pic["converged"] == true);
  const auto d = pic["distances"].get<std::vector<double>>();
  REQUIRE(d.size() >= 2);
  double log_sum = 0.0;
  int ratios = 0;
  for (std::size_t k = 0; k + 1 < d.size(); ++k) {
    if (d[k] <= 1e-12 || d[k + 1] <= 1e-12) break;
    log_sum += std::log(d[k + 1] / d[k]);
    ++ratios;
  }
  REQUIRE(ratios >= 1);
  const double factor = std::exp(log_sum / ratios);
  CHECK(factor < 1.0);
  CHECK(pic["contraction_factor"].get<double>() == doctest::Approx(factor).epsilon(1e-12));

  const auto csv = read_csv(o.dir / "series.csv");
  const double n = cfg.number("sim", "n");
  for (const auto& r : csv.rows) {
    CHECK(r[csv.col("w2_to_direct")] <= r[csv.col("stderr_bound")]);
    // The bound is 4 standard errors of the mean gap of two n-samples.
    CHECK(r[csv.col("stderr_bound")] <= 4.0 * std::sqrt(2.0 * 1.0 / n));
  }
  CHECK(o.runtime < 180.0);
}

TEST_CASE("09_bismut") {
  ConfigHandle cfg(kConfigs / "bismut.cfg");
  CHECK(cfg.number("experiment", "n_samples") == 1e5);
  CHECK(cfg.value("analytic_model", "A") == "-1");
  CHECK(cfg.value("analytic_model", "C") == "0");
  const auto o = run_config("bismut", 1);
  check_verdict(o);
  const auto& b = o.report["bismut"];

  // OU: the derivative of E[X_T] along a unit shift is e^{-T}.
  const double exact = std::exp(-cfg.number("experiment", "horizon"));
  CHECK(b["analytic"]["exact"].get<double>() == doctest::Approx(exact).epsilon(1e-14));
  for (const char* g : {"linear", "sine_squared"}) {
    const auto& e = b["analytic"][g];
    CHECK(e["n_samples"] == 100000);
    CHECK(std::abs(e["value"].get<double>() - exact) <= 3.0 * e["std_error"].get<double>());
  }
  // Granular: finite-difference oracle.
  const auto& fd = b["model"]["fd"];
  for (const char* g : {"linear", "sine_squared"}) {
    const auto& e = b["model"][g];
    CHECK(e["n_samples"] == 100000);
    CHECK(std::abs(e["value"].get<double>() - fd["value"].get<double>()) <=
          3.0 * (e["std_error"].get<double>() + fd["std_error"].get<double>()));
  }
  // Independence of the weight function.
  for (const char* which : {"analytic", "model"}) {
    const auto& l = b[which]["linear"];
    const auto& s = b[which]["sine_squared"];
    CHECK(std::abs(l["value"].get<double>() - s["value"].get<double>()) <=
          3.0 * (l["std_error"].get<double>() + s["std_error"].get<double>()));
  }
  CHECK(o.runtime < 180.0);
}

TEST_CASE("10_comparison") {
  ConfigHandle cfg(kConfigs / "comparison.cfg");
  const double n = cfg.number("sim", "n");
  CHECK(n >= 1000);
  const auto o = run_config("comparison", 1);
  check_verdict(o);
  CHECK(measured(o, "violations") == 0.0);
  // Every path at every grid time, t = 0 included.
  const double steps = std::round(cfg.number("sim", "t_end") / cfg.number("sim", "dt"));
  CHECK(measured(o, "checked_points") == n * (steps + 1));
  CHECK(measured(o, "probe_violation_fraction") > 0.0);
  CHECK(o.runtime < 120.0);
}

namespace {

// Newest of this binary and the shared library it runs.
fs::file_time_type build_time() {
  auto newest = fs::last_write_time("/proc/self/exe");
  Dl_info info{};
  if (dladdr(reinterpret_cast<void*>(&mvsde_version), &info) != 0 && info.dli_fname != nullptr)
    newest = std::max(newest, fs::last_write_time(fs::canonical(info.dli_fname)));
  return newest;
}

}  // namespace

TEST_CASE("11_determinism") {
  std::vector<std::string> names;
  for (const auto& entry : fs::directory_iterator(kConfigs))
    if (entry.path().extension() == ".cfg") names.push_back(entry.path().stem().string());
  std::sort(names.begin(), names.end());
  REQUIRE(names.size() == 11);
  const auto built = build_time();
  for (const auto& name : names) {
    CAPTURE(name);
    // Reuse the single-thread outputs of the criteria above when they are
    // newer than the build; otherwise produce them here.
    const fs::path one = output_dir(name, 1);
    const fs::path report = one / "report.json";
    if (!fs::exists(report) || fs::last_write_time(report) < built) run_config(name, 1);
    const auto two = run_config(name, 2);
    std::size_t compared = 0;
    for (const auto& entry : fs::directory_iterator(one)) {
      const auto file = entry.path().filename();
      if (file == "timing.json") continue;
      CAPTURE(file.string());
      REQUIRE(fs::exists(two.dir / file));
      CHECK(slurp(entry.path()) == slurp(two.dir / file));
      ++compared;
    }
    CHECK(compared >= 2);
  }
}
