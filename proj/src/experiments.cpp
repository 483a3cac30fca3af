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

#include "mvsde/experiments.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <memory>
#include <limits>
#include <numbers>
#include <unsupported/Eigen/MatrixFunctions>

#include "json.hpp"

#include "mvsde/density.hpp"
#include "mvsde/error.hpp"
#include "mvsde/fpe.hpp"
#include "mvsde/measures.hpp"
#include "mvsde/picard.hpp"
#include "mvsde/sensitivity.hpp"

namespace mvsde {

using nlohmann::json;

// ---------------------------------------------------------------------------
// Report plumbing

void Table::add(std::vector<double> row) {
  require(row.size() == columns.size(), "table row has the wrong number of columns");
  rows.push_back(std::move(row));
}

std::string Table::to_csv() const {
  std::string out;
  for (std::size_t j = 0; j < columns.size(); ++j) out += (j ? "," : "") + columns[j];
  out += "\n";
  char buf[40];
  for (const auto& row : rows) {
    for (std::size_t j = 0; j < row.size(); ++j) {
      std::snprintf(buf, sizeof(buf), "%.17g", row[j]);
      if (j) out += ",";
      out += buf;
    }
    out += "\n";
  }
  return out;
}

bool ExperimentReport::passed() const {
  return std::all_of(checks.begin(), checks.end(), [](const Check& c) { return c.pass; });
}

void ExperimentReport::validate() const {
  for (const auto& [key, value] : measured)
    if (predicted.count(key) == 0 && diagnostic_only.count(key) == 0)
      fail(ErrorKind::kInvalidArgument, "measured key '" + key + "' has no prediction and is not diagnostic-only");
}

void ExperimentReport::measure(const std::string& key, double value) {
  measured[key] = value;
  diagnostic_only.insert(key);
}

void ExperimentReport::measure(const std::string& key, double value, double prediction, const std::string& source) {
  measured[key] = value;
  predicted[key] = {prediction, source};
}

void ExperimentReport::check(const std::string& name, double value, const std::string& relation, double threshold) {
  bool pass = false;
  if (relation == "<=") pass = value <= threshold;
  else if (relation == ">=") pass = value >= threshold;
  else if (relation == "<") pass = value < threshold;
  else if (relation == ">") pass = value > threshold;
  else if (relation == "==") pass = value == threshold;
  else fail(ErrorKind::kInvalidArgument, "unknown check relation '" + relation + "'");
  for (const auto& c : checks) require(c.name != name, "duplicate check name '" + name + "'");
  checks.push_back({name, pass, value, threshold, relation});
}

void ExperimentReport::check_flag(const std::string& name, bool pass) {
  check(name, pass ? 1.0 : 0.0, "==", 1.0);
}

std::string ExperimentReport::to_json() const {
  validate();
  json j;
  j["experiment"] = experiment;
  j["measured"] = json::object();
  for (const auto& [k, v] : measured) j["measured"][k] = v;
  j["predicted"] = json::object();
  for (const auto& [k, p] : predicted) j["predicted"][k] = {{"value", p.value}, {"source", p.source}};
  j["diagnostic_only"] = json::array();
  for (const auto& k : diagnostic_only) j["diagnostic_only"].push_back(k);
  j["checks"] = json::object();
  for (const auto& c : checks)
    j["checks"][c.name] = {{"pass", c.pass}, {"value", c.value}, {"threshold", c.threshold}, {"relation", c.relation}};
  j["verdict"] = passed() ? "pass" : "fail";
  j["metadata"] = json::object();
  for (const auto& [k, v] : metadata) j["metadata"][k] = v;
  for (const auto& [k, text] : sections) j[k] = json::parse(text);
  return j.dump(2) + "\n";
}

namespace {
void write_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorKind::kIo, "cannot write '" + path.string() + "'");
  out << text;
  if (!out) fail(ErrorKind::kIo, "write failed for '" + path.string() + "'");
}
}  // namespace

void emit_report(const ExperimentReport& report, const std::string& out_dir) {
  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec) fail(ErrorKind::kIo, "cannot create output directory '" + out_dir + "': " + ec.message());
  const std::filesystem::path dir(out_dir);
  write_file(dir / "report.json", report.to_json());
  write_file(dir / "series.csv", report.series.to_csv());
  for (const auto& [name, table] : report.artifacts) write_file(dir / name, table.to_csv());
  json timing = {{"runtime_seconds", report.runtime_seconds}};
  write_file(dir / "timing.json", timing.dump(2) + "\n");
}

double fit_decay_rate(const std::vector<double>& t, const std::vector<double>& y, double t_min, double t_max) {
  require(t.size() == y.size(), "fit_decay_rate needs matching series");
  double n = 0.0, st = 0.0, sy = 0.0, stt = 0.0, sty = 0.0;
  for (std::size_t k = 0; k < t.size(); ++k) {
    if (t[k] < t_min - 1e-12 || t[k] > t_max + 1e-12 || !(y[k] > 0.0)) continue;
    const double ly = std::log(y[k]);
    n += 1.0;
    st += t[k];
    sy += ly;
    stt += t[k] * t[k];
    sty += t[k] * ly;
  }
  if (n < 2.0) fail(ErrorKind::kNumerical, "decay-rate fit needs at least two positive points in the window");
  const double denom = n * stt - st * st;
  if (!(denom > 0.0)) fail(ErrorKind::kNumerical, "decay-rate fit window has no spread in t");
  return -(n * sty - st * sy) / denom;
}

// ---------------------------------------------------------------------------
// Config to domain objects

namespace {

RadialPotential potential(const Config& c, const std::string& section, const std::string& prefix) {
  RadialPotential p;
  p.quadratic = c.get_double(section, prefix + ".quad", 0.0);
  p.bump_amplitude = c.get_double(section, prefix + ".bump_amp", 0.0);
  p.bump_width = c.get_double(section, prefix + ".bump_width", 1.0);
  return p;
}

}  // namespace

Model model_from_config(const Config& c, const std::string& s) {
  const std::string kind = c.get_string(s, "kind");
  if (kind == "granular") {
    GranularParams p;
    p.confinement = potential(c, s, "V");
    p.interaction = potential(c, s, "W");
    p.noise = c.get_double(s, "noise", p.noise);
    p.lambda = c.get_optional_double(s, "lambda");
    p.delta1 = c.get_optional_double(s, "delta1");
    p.delta2 = c.get_optional_double(s, "delta2");
    return Model::granular(c.get_uint(s, "dim", 1), p);
  }
  if (kind == "degenerate_hamiltonian") {
    DegenerateParams p;
    p.coupling_b = c.has(s, "B") ? c.get_matrix(s, "B") : Eigen::MatrixXd::Identity(1, 1);
    p.friction = c.get_double(s, "beta", p.friction);
    p.theta = c.get_double(s, "theta", p.theta);
    p.confinement = c.get_double(s, "confinement", p.confinement);
    p.theta1 = c.get_optional_double(s, "theta1");
    p.theta2 = c.get_optional_double(s, "theta2");
    return Model::degenerate_hamiltonian(p);
  }
  if (kind == "porous") {
    PorousParams p;
    p.floor_scale = c.get_double(s, "floor_scale", p.floor_scale);
    return Model::porous(p);
  }
  if (kind == "landau") return Model::landau({c.get_double(s, "gamma", 0.0)});
  if (kind == "linear_meanfield") {
    LinearParams p;
    p.state = c.get_matrix(s, "A");
    p.interaction = c.get_matrix(s, "C");
    p.noise = c.get_matrix(s, "Sigma");
    return Model::linear(p);
  }
  if (kind == "delay") {
    DelayParams p;
    p.reversion = c.get_double(s, "reversion", p.reversion);
    p.delay_weight = c.get_double(s, "delay_weight", p.delay_weight);
    p.mean_weight = c.get_double(s, "mean_weight", p.mean_weight);
    p.noise_base = c.get_double(s, "noise_base", p.noise_base);
    p.noise_slope = c.get_double(s, "noise_slope", p.noise_slope);
    p.noise_on_delay = c.get_bool(s, "noise_on_delay", p.noise_on_delay);
    p.memory = c.get_double(s, "memory");
    return Model::delay(p);
  }
  if (kind == "zero") return Model::zero(c.get_uint(s, "dim", 1));
  fail(ErrorKind::kConfig, "unknown model kind '" + kind + "' in [" + s + "]");
}

SimConfig sim_from_config(const Config& c) {
  SimConfig cfg;
  cfg.n = c.get_uint("sim", "n", cfg.n);
  cfg.dt = c.get_double("sim", "dt", cfg.dt);
  cfg.t_end = c.get_double("sim", "t_end", cfg.t_end);
  cfg.record_every = c.get_uint("sim", "record_every", cfg.record_every);
  cfg.seed = c.get_uint("run", "seed", cfg.seed);
  cfg.validate();
  return cfg;
}

namespace {

GaussianState gaussian_from_config(const Config& c, const std::string& s, std::size_t dim) {
  if (c.get_string(s, "kind", "gaussian") != "gaussian") fail(ErrorKind::kConfig, "[" + s + "] must be a gaussian law");
  GaussianState g;
  g.mean = c.get_vector(s, "mean");
  g.cov = c.get_matrix(s, "cov");
  if (g.mean.size() != static_cast<Eigen::Index>(dim) || g.cov.rows() != g.mean.size() ||
      g.cov.cols() != g.mean.size())
    fail(ErrorKind::kConfig, "[" + s + "] mean and cov must match the model dimension " + std::to_string(dim));
  g.validate();
  return g;
}

// Inverse-CDF draws from the Barenblatt profile at time t0.
std::vector<double> sample_barenblatt(double t0, std::size_t n, std::uint64_t seed, StreamTag tag) {
  const NormalStream stream(seed, tag);
  const double r = barenblatt_support(t0);
  std::vector<double> x(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double u = stream.uniform(i, 0);
    double lo = -r, hi = r;
    for (int it = 0; it < 64; ++it) {
      const double mid = 0.5 * (lo + hi);
      if (barenblatt_mass(t0, -r, mid) < u) lo = mid;
      else hi = mid;
    }
    x[i] = 0.5 * (lo + hi);
  }
  return x;
}

}  // namespace

ParticleEnsemble init_from_config(const Config& c, const Model& model, std::size_t n, std::uint64_t seed,
                                  StreamTag tag, const std::string& s) {
  const std::string kind = c.get_string(s, "kind", "gaussian");
  if (kind == "gaussian") {
    const GaussianState g = gaussian_from_config(c, s, model.dim());
    return sample_gaussian(g.mean, g.cov, n, seed, tag);
  }
  if (kind == "point") {
    const auto x = c.get_list(s, "x");
    if (x.size() != model.dim()) fail(ErrorKind::kConfig, "[" + s + "] x must match the model dimension");
    return point_mass(x, n);
  }
  if (kind == "barenblatt") {
    if (model.dim() != 1) fail(ErrorKind::kConfig, "[" + s + "] barenblatt initial law is one-dimensional");
    const double t0 = c.get_double(s, "t0");
    if (!(t0 > 0.0)) fail(ErrorKind::kConfig, "[" + s + "] t0 must be positive");
    return ParticleEnsemble(1, sample_barenblatt(t0, n, seed, tag), t0);
  }
  fail(ErrorKind::kConfig, "unknown initial law kind '" + kind + "' in [" + s + "]");
}

// ---------------------------------------------------------------------------
// Experiments

namespace {

const char* kScheme = "euler_maruyama";
const char* kRng = "philox4x32_10_box_muller";

class Experiment {
 public:
  virtual ~Experiment() = default;
  virtual void configure(const Config& c) = 0;
  virtual void execute(ExperimentReport& r) = 0;

 protected:
  static double positive(const Config& c, const std::string& s, const std::string& key, double fallback) {
    const double v = c.get_double(s, key, fallback);
    if (!(v > 0.0)) fail(ErrorKind::kConfig, "[" + s + "] " + key + " must be positive");
    return v;
  }
  static std::vector<double> times_list(const Config& c, const std::string& key, std::vector<double> fallback) {
    auto v = c.get_list("experiment", key, fallback);
    for (std::size_t k = 0; k < v.size(); ++k)
      if (!(v[k] >= 0.0) || (k > 0 && v[k] <= v[k - 1]))
        fail(ErrorKind::kConfig, "[experiment] " + key + " must be increasing and non-negative");
    return v;
  }
};

Table snapshot_table(std::size_t dim) {
  Table t;
  t.columns = {"t", "particle_id"};
  for (std::size_t j = 0; j < dim; ++j) t.columns.push_back("x_" + std::to_string(j));
  return t;
}

void append_snapshot(Table& t, const ParticleEnsemble& e) {
  for (std::size_t i = 0; i < e.size(); ++i) {
    std::vector<double> row{e.time(), static_cast<double>(i)};
    for (double x : e.point(i)) row.push_back(x);
    t.rows.push_back(std::move(row));
  }
}

// --- noop -----------------------------------------------------------------

class Noop : public Experiment {
 public:
  void configure(const Config&) override {}
  void execute(ExperimentReport& r) override { r.series.columns = {"t"}; }
};

// --- metric_oracle ----------------------------------------------------------

double brute_force_wp(const EmpiricalMeasure& a, const EmpiricalMeasure& b, double p) {
  const std::size_t n = a.size();
  std::vector<std::size_t> perm(n);
  for (std::size_t i = 0; i < n; ++i) perm[i] = i;
  double best = std::numeric_limits<double>::infinity();
  do {
    double cost = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      double sq = 0.0;
      for (std::size_t k = 0; k < a.dim(); ++k) {
        const double d = a.point(i)[k] - b.point(perm[i])[k];
        sq += d * d;
      }
      cost += std::pow(std::sqrt(sq), p);
    }
    best = std::min(best, cost);
  } while (std::next_permutation(perm.begin(), perm.end()));
  return std::pow(best / static_cast<double>(n), 1.0 / p);
}

class MetricOracle : public Experiment {
 public:
  void configure(const Config& c) override {
    seed_ = c.get_uint("run", "seed", 1);
    instances_ = c.get_uint("experiment", "instances", 200);
    max_n_ = c.get_uint("experiment", "max_n", 8);
    max_dim_ = c.get_uint("experiment", "max_dim", 2);
    tol_ = positive(c, "experiment", "tolerance", 1e-10);
    if (instances_ == 0 || max_n_ == 0 || max_n_ > 10 || max_dim_ == 0)
      fail(ErrorKind::kConfig, "[experiment] needs instances >= 1, 1 <= max_n <= 10, max_dim >= 1");
  }
  void execute(ExperimentReport& r) override {
    const NormalStream uni(seed_, StreamTag::kAux);
    const NormalStream normal(seed_, StreamTag::kInitA);
    r.series.columns = {"instance", "n", "dim", "p", "exact", "brute_force", "abs_error"};
    double max_err = 0.0, max_sort_err = 0.0;
    for (std::size_t k = 0; k < instances_; ++k) {
      const auto n = 1 + std::min<std::size_t>(max_n_ - 1, static_cast<std::size_t>(uni.uniform(k, 0) * max_n_));
      const auto d = 1 + std::min<std::size_t>(max_dim_ - 1, static_cast<std::size_t>(uni.uniform(k, 1) * max_dim_));
      const double p = uni.uniform(k, 2) < 0.5 ? 1.0 : 2.0;
      std::vector<double> z(2 * n * d);
      normal.fill(k, 0, z);
      const EmpiricalMeasure a(d, std::vector<double>(z.begin(), z.begin() + static_cast<std::ptrdiff_t>(n * d)));
      const EmpiricalMeasure b(d, std::vector<double>(z.begin() + static_cast<std::ptrdiff_t>(n * d), z.end()));
      const double exact = wasserstein(a, b, p, {}, MetricMethod::kExactAssignment).value;
      const double brute = brute_force_wp(a, b, p);
      const double err = std::abs(exact - brute);
      max_err = std::max(max_err, err);
      if (d == 1) max_sort_err = std::max(max_sort_err, std::abs(wasserstein_1d(a, b, p) - brute));
      r.series.add({static_cast<double>(k), static_cast<double>(n), static_cast<double>(d), p, exact, brute, err});
    }
    r.measure("max_abs_error", max_err, 0.0, "brute-force minimum over all N! matchings");
    r.measure("max_abs_error_sort_1d", max_sort_err, 0.0, "brute-force minimum over all N! matchings");
    r.measure("instances", static_cast<double>(instances_));
    r.check("exact_assignment_matches_brute_force", max_err, "<=", tol_);
    r.check("sorted_pairing_matches_brute_force", max_sort_err, "<=", tol_);
  }

 private:
  std::uint64_t seed_ = 1;
  std::size_t instances_ = 200, max_n_ = 8, max_dim_ = 2;
  double tol_ = 1e-10;
};

// --- gaussian_tracking --------------------------------------------------------

class GaussianTracking : public Experiment {
 public:
  void configure(const Config& c) override {
    model_ = std::make_unique<Model>(model_from_config(c));
    linear_ = std::make_unique<Model>(linearize(*model_));
    sim_ = sim_from_config(c);
    init_ = gaussian_from_config(c, "init", model_->dim());
    z_max_ = positive(c, "experiment", "z_max", 4.0);
    w2_tol_ = positive(c, "experiment", "w2_tolerance", 0.05);
    snapshots_ = c.get_bool("output", "snapshots", false);
  }
  void execute(ExperimentReport& r) override {
    const std::size_t d = model_->dim();
    const double n = static_cast<double>(sim_.n);
    Table snaps = snapshot_table(d);
    FlowOptions opt;
    opt.keep_snapshots = true;
    if (snapshots_) opt.observer = [&](const ParticleEnsemble& e) { append_snapshot(snaps, e); };
    const FlowResult flow =
        simulate_flow(*model_, sample_gaussian(init_.mean, init_.cov, sim_.n, sim_.seed), sim_, opt);

    r.series.columns = {"t", "mean_0", "oracle_mean_0", "var_0", "oracle_var_0", "mean_z", "var_z", "w2"};
    double max_mean_z = 0.0, max_var_z = 0.0, max_w2 = 0.0;
    for (std::size_t k = 0; k < flow.times.size(); ++k) {
      const double t = flow.times[k];
      const GaussianState g = evolve_gaussian(*linear_, init_, t, GaussianEvolution::kExact);
      const auto& m = flow.moments[k];
      double mean_z = 0.0, var_z = 0.0;
      for (std::size_t j = 0; j < d; ++j) {
        const auto jj = static_cast<Eigen::Index>(j);
        const double v = g.cov(jj, jj);
        if (v <= 0.0) continue;
        mean_z = std::max(mean_z, std::abs(m.mean(jj) - g.mean(jj)) / std::sqrt(v / n));
        var_z = std::max(var_z, std::abs(m.cov(jj, jj) - v) / (v * std::sqrt(2.0 / (n - 1.0))));
      }
      const double w2 = d == 1 ? wasserstein2_to_gaussian_1d(flow.snapshots[k], g.mean(0), g.cov(0, 0))
                               : gaussian_w2({m.mean, m.cov}, g);
      max_mean_z = std::max(max_mean_z, mean_z);
      max_var_z = std::max(max_var_z, var_z);
      max_w2 = std::max(max_w2, w2);
      r.series.add({t, m.mean(0), g.mean(0), m.cov(0, 0), g.cov(0, 0), mean_z, var_z, w2});
    }
    const GaussianState g_end = evolve_gaussian(*linear_, init_, sim_.t_end, GaussianEvolution::kExact);
    r.measure("final_mean_0", flow.moments.back().mean(0), g_end.mean(0), "evolve_gaussian, closed form");
    r.measure("final_var_0", flow.moments.back().cov(0, 0), g_end.cov(0, 0), "evolve_gaussian, closed form");
    r.measure("max_w2", max_w2, 0.0, "particle law equals the Gaussian oracle law");
    r.measure("max_mean_z", max_mean_z);
    r.measure("max_var_z", max_var_z);
    r.check("mean_within_z_max_stderr", max_mean_z, "<=", z_max_);
    r.check("variance_within_z_max_stderr", max_var_z, "<=", z_max_);
    r.check("w2_to_oracle", max_w2, "<=", w2_tol_);
    if (snapshots_) r.artifacts["snapshots.csv"] = std::move(snaps);
  }

 private:
  std::unique_ptr<Model> model_, linear_;
  SimConfig sim_;
  GaussianState init_;
  double z_max_ = 4.0, w2_tol_ = 0.05;
  bool snapshots_ = false;
};

// --- contraction ---------------------------------------------------------------

class Contraction : public Experiment {
 public:
  void configure(const Config& c) override {
    model_ = std::make_unique<Model>(model_from_config(c));
    linear_ = std::make_unique<Model>(linearize(*model_));
    sim_ = sim_from_config(c);
    init_a_ = gaussian_from_config(c, "init_a", model_->dim());
    init_b_ = gaussian_from_config(c, "init_b", model_->dim());
    fit_start_ = c.get_double("experiment", "fit_start", 0.5);
    fit_end_ = c.get_double("experiment", "fit_end", sim_.t_end);
    rel_tol_ = positive(c, "experiment", "rate_rel_tolerance", 0.15);
    declared_slack_ = positive(c, "experiment", "declared_slack", 0.15);
    if (!(fit_end_ > fit_start_)) fail(ErrorKind::kConfig, "[experiment] fit_end must exceed fit_start");
  }
  void execute(ExperimentReport& r) override {
    const auto a = sample_gaussian(init_a_.mean, init_a_.cov, sim_.n, sim_.seed);
    const auto b = sample_gaussian(init_b_.mean, init_b_.cov, sim_.n, sim_.seed);
    const CoupledResult cr = simulate_coupled(*model_, *model_, a, b, sim_);
    const auto& times = cr.a.times;
    std::vector<double> oracle(times.size());
    r.series.columns = {"t", "w2", "oracle_w2", "mean_square_gap"};
    for (std::size_t k = 0; k < times.size(); ++k) {
      oracle[k] = gaussian_w2(evolve_gaussian(*linear_, init_a_, times[k], GaussianEvolution::kExact),
                              evolve_gaussian(*linear_, init_b_, times[k], GaussianEvolution::kExact));
      r.series.add({times[k], cr.w2[k], oracle[k], cr.mean_square_gap[k]});
    }
    const double rate = fit_decay_rate(times, cr.w2, fit_start_, fit_end_);
    const double oracle_rate = fit_decay_rate(times, oracle, fit_start_, fit_end_);
    const RateRecord declared = model_->declared_rate();
    const CurvatureCheck curvature = check_declared_curvature(*model_);

    r.measure("rate", rate, declared.rate, declared.formula + " (lower bound on the W2 decay rate)");
    r.predicted["oracle_rate"] = {oracle_rate, "W2 between exact Gaussian flows, same fit window"};
    r.measure("oracle_rate_fit", oracle_rate);
    r.measure("sup_second_moment", std::max(cr.a.sup_second_moment, cr.b.sup_second_moment));
    r.measure("initial_w2", cr.w2.front());
    r.check("rate_within_tolerance_of_oracle", std::abs(rate - oracle_rate) / oracle_rate, "<=", rel_tol_);
    r.check("rate_at_least_declared", rate, ">=", (1.0 - declared_slack_) * declared.rate);
    r.check_flag("declared_curvature_consistent", curvature.ok);
    r.metadata["coupling"] = "shared_noise";
  }

 private:
  std::unique_ptr<Model> model_, linear_;
  SimConfig sim_;
  GaussianState init_a_, init_b_;
  double fit_start_ = 0.5, fit_end_ = 1.0, rel_tol_ = 0.15, declared_slack_ = 0.15;
};

// --- log_harnack -------------------------------------------------------------------

class LogHarnack : public Experiment {
 public:
  void configure(const Config& c) override {
    model_ = std::make_unique<Model>(model_from_config(c));
    if (model_->kind() != ModelKind::kLinearMeanField)
      fail(ErrorKind::kConfig, "log_harnack needs a linear_meanfield model");
    seed_ = c.get_uint("run", "seed", 1);
    pairs_ = c.get_uint("experiment", "pairs", 20);
    times_ = times_list(c, "times", {0.1, 0.2, 0.5, 1.0, 2.0, 5.0});
    mean_scale_ = positive(c, "experiment", "mean_scale", 2.0);
    cov_scale_ = positive(c, "experiment", "cov_scale", 1.0);
    if (pairs_ == 0 || times_.empty() || times_.front() <= 0.0)
      fail(ErrorKind::kConfig, "[experiment] needs pairs >= 1 and positive times");
  }
  void execute(ExperimentReport& r) override {
    const std::size_t d = model_->dim();
    const LogHarnackConstants lh = log_harnack_constants(*model_);
    const NormalStream stream(seed_, StreamTag::kAux);
    auto draw = [&](std::size_t pair, std::size_t which) {
      std::vector<double> z(d + d * d);
      stream.fill(pair, which, z);
      GaussianState g;
      g.mean = mean_scale_ * Eigen::Map<const Eigen::VectorXd>(z.data(), static_cast<Eigen::Index>(d));
      const Eigen::Map<const Eigen::MatrixXd> l(z.data() + d, static_cast<Eigen::Index>(d),
                                                static_cast<Eigen::Index>(d));
      g.cov = cov_scale_ * (l * l.transpose() / static_cast<double>(d)) +
              0.05 * Eigen::MatrixXd::Identity(static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(d));
      return g;
    };
    r.series.columns = {"pair", "t", "kl", "bound", "ratio"};
    double max_ratio = 0.0;
    std::size_t violations = 0;
    for (std::size_t k = 0; k < pairs_; ++k) {
      const GaussianState mu = draw(k, 0);
      const GaussianState nu = draw(k, 1);
      const double w2 = gaussian_w2(mu, nu);
      for (double t : times_) {
        const GaussianState mt = evolve_gaussian(*model_, mu, t, GaussianEvolution::kExact);
        const GaussianState nt = evolve_gaussian(*model_, nu, t, GaussianEvolution::kExact);
        const double bound = log_harnack_phi(lh, 0.0, t) * w2 * w2;
        const double kl = std::max(gaussian_kl(nt, mt), gaussian_kl(mt, nt));
        if (!(kl <= bound)) ++violations;
        const double ratio = kl / bound;
        max_ratio = std::max(max_ratio, ratio);
        r.series.add({static_cast<double>(k), t, kl, bound, ratio});
      }
    }
    r.measure("max_ratio", max_ratio, 1.0, "log-Harnack entropy bound: KL <= phi(0,t) W2(mu0,nu0)^2");
    r.measure("kappa1", lh.kappa1);
    r.measure("kappa2", lh.kappa2);
    r.measure("lambda", lh.lambda);
    r.check("entropy_bound_violations", static_cast<double>(violations), "==", 0.0);
  }

 private:
  std::unique_ptr<Model> model_;
  std::uint64_t seed_ = 1;
  std::size_t pairs_ = 20;
  std::vector<double> times_;
  double mean_scale_ = 2.0, cov_scale_ = 1.0;
};

// --- ergodicity ------------------------------------------------------------------

class Ergodicity : public Experiment {
 public:
  void configure(const Config& c) override {
    model_ = std::make_unique<Model>(model_from_config(c));
    linear_ = std::make_unique<Model>(linearize(*model_));
    sim_ = sim_from_config(c);
    init_ = gaussian_from_config(c, "init", model_->dim());
    fit_start_ = c.get_double("experiment", "fit_start", 0.5);
    fit_end_ = c.get_double("experiment", "fit_end", 6.0);
    oracle_fit_start_ = c.get_double("experiment", "oracle_fit_start", 0.0);
    oracle_fit_end_ = c.get_double("experiment", "oracle_fit_end", sim_.t_end);
    slack_ = positive(c, "experiment", "particle_slack", 0.2);
    if (!(fit_end_ > fit_start_) || !(oracle_fit_end_ > oracle_fit_start_))
      fail(ErrorKind::kConfig, "[experiment] fit windows must have positive length");
  }
  void execute(ExperimentReport& r) override {
    const GaussianState inv = invariant_gaussian(*linear_);
    FlowOptions opt;
    opt.keep_snapshots = false;
    const FlowResult flow =
        simulate_flow(*model_, sample_gaussian(init_.mean, init_.cov, sim_.n, sim_.seed), sim_, opt);
    std::vector<double> particle(flow.times.size()), oracle(flow.times.size());
    r.series.columns = {"t", "w2_moment_matched", "oracle_w2"};
    for (std::size_t k = 0; k < flow.times.size(); ++k) {
      particle[k] = gaussian_w2({flow.moments[k].mean, flow.moments[k].cov}, inv);
      oracle[k] = gaussian_w2(evolve_gaussian(*linear_, init_, flow.times[k], GaussianEvolution::kExact), inv);
      r.series.add({flow.times[k], particle[k], oracle[k]});
    }
    const RateRecord kappa = model_->declared_rate();
    const double oracle_rate = fit_decay_rate(flow.times, oracle, oracle_fit_start_, oracle_fit_end_);
    const double rate = fit_decay_rate(flow.times, particle, fit_start_, fit_end_);
    r.measure("oracle_rate", oracle_rate, kappa.rate, kappa.formula + " (lower bound)");
    r.measure("rate", rate, kappa.rate, kappa.formula + " (lower bound)");
    r.measure("final_w2_moment_matched", particle.back());
    const auto& p = std::get<DegenerateParams>(model_->params());
    if (p.theta1) r.measure("theta1", *p.theta1);
    if (p.theta2) r.measure("theta2", *p.theta2);
    r.check("oracle_rate_at_least_kappa", oracle_rate, ">=", kappa.rate);
    r.check("particle_rate_at_least_kappa_minus_slack", rate, ">=", (1.0 - slack_) * kappa.rate);
  }

 private:
  std::unique_ptr<Model> model_, linear_;
  SimConfig sim_;
  GaussianState init_;
  double fit_start_ = 0.5, fit_end_ = 6.0, oracle_fit_start_ = 0.0, oracle_fit_end_ = 1.0, slack_ = 0.2;
};

// --- superposition ----------------------------------------------------------------

// Advances the grid to t_target with steps of at most fraction x the stable step.
void advance_granular(DensityGrid& g, const RadialPotential& v, const RadialPotential& w, double t_target,
                      double fraction, double& free_energy_now, double& max_increase, std::size_t& clamped) {
  while (g.time < t_target - 1e-12) {
    const double dt = std::min(fraction * granular_stable_dt(g, v, w), t_target - g.time);
    clamped += fpe_step_granular(g, v, w, dt).clamped_cells;
    const double fe = free_energy(g, v, w);
    max_increase = std::max(max_increase, fe - free_energy_now);
    free_energy_now = fe;
  }
  g.time = t_target;
}

DensityGrid kde_on_grid(const ParticleEnsemble& e, const DensityGrid& like) {
  const KernelDensity1d kde(e.positions());
  DensityGrid out = like;
  for (std::size_t i = 0; i < out.cells(); ++i) out.values[i] = kde(out.center(i));
  out.time = e.time();
  return out;
}

void append_density(Table& t, const DensityGrid& g) {
  for (std::size_t i = 0; i < g.cells(); ++i) t.rows.push_back({g.time, g.center(i), g.values[i]});
}

class Superposition : public Experiment {
 public:
  void configure(const Config& c) override {
    model_ = std::make_unique<Model>(model_from_config(c));
    if (model_->kind() != ModelKind::kGranular || model_->dim() != 1)
      fail(ErrorKind::kConfig, "superposition needs a one-dimensional granular model");
    sim_ = sim_from_config(c);
    init_ = gaussian_from_config(c, "init", 1);
    cells_ = c.get_uint("experiment", "cells", 400);
    const double sd = std::sqrt(init_.cov(0, 0));
    const double half = 8.0 * std::max(sd, 1.0);
    x_min_ = c.get_double("experiment", "x_min", init_.mean(0) - half);
    x_max_ = c.get_double("experiment", "x_max", init_.mean(0) + half);
    times_ = times_list(c, "check_times", {0.5, 1.0, 2.0});
    tol_ = positive(c, "experiment", "l1_tolerance", 0.05);
    fraction_ = positive(c, "experiment", "fpe_dt_fraction", 0.5);
    if (cells_ < 10 || !(x_max_ > x_min_) || fraction_ > 1.0)
      fail(ErrorKind::kConfig, "[experiment] needs cells >= 10, x_max > x_min, fpe_dt_fraction <= 1");
    if (times_.back() > sim_.t_end + 1e-12) fail(ErrorKind::kConfig, "check_times must not exceed sim.t_end");
  }
  void execute(ExperimentReport& r) override {
    const auto& p = std::get<GranularParams>(model_->params());
    const double m0 = init_.mean(0), v0 = init_.cov(0, 0);
    DensityGrid g = grid_from_density(x_min_, x_max_, cells_, [&](double x) {
      return std::exp(-(x - m0) * (x - m0) / (2.0 * v0)) / std::sqrt(2.0 * std::numbers::pi * v0);
    });
    std::vector<DensityGrid> particle_grids;
    FlowOptions opt;
    opt.keep_snapshots = false;
    opt.observer = [&](const ParticleEnsemble& e) {
      for (double t : times_)
        if (std::abs(e.time() - t) < 1e-9) particle_grids.push_back(kde_on_grid(e, g));
    };
    simulate_flow(*model_, sample_gaussian(init_.mean, init_.cov, sim_.n, sim_.seed), sim_, opt);
    if (particle_grids.size() != times_.size())
      fail(ErrorKind::kConfig, "check_times must lie on the recording grid (sim.dt x sim.record_every)");

    double fe = free_energy(g, p.confinement, p.interaction);
    double max_increase = -std::numeric_limits<double>::infinity();
    std::size_t clamped = 0;
    Table fpe_density{{"t", "x", "f"}, {}};
    Table kde_density{{"t", "x", "f"}, {}};
    append_density(fpe_density, g);
    r.series.columns = {"t", "l1_error", "fpe_mass", "free_energy", "fpe_mean", "particle_mean"};
    double worst = 0.0;
    for (std::size_t k = 0; k < times_.size(); ++k) {
      advance_granular(g, p.confinement, p.interaction, times_[k], fraction_, fe, max_increase, clamped);
      const double l1 = l1_distance(g, particle_grids[k]);
      worst = std::max(worst, l1);
      double fm = 0.0, pm = 0.0;
      for (std::size_t i = 0; i < g.cells(); ++i) {
        fm += g.center(i) * g.values[i] * g.dx();
        pm += g.center(i) * particle_grids[k].values[i] * g.dx();
      }
      r.series.add({times_[k], l1, g.mass(), fe, fm, pm});
      r.measure("l1_error_t" + format_double(times_[k]), l1);
      append_density(fpe_density, g);
      append_density(kde_density, particle_grids[k]);
    }
    r.measure("l1_error", worst, 0.0, "particle law solves the nonlinear Fokker-Planck equation");
    r.measure("max_free_energy_increase", max_increase);
    r.measure("clamped_cells", static_cast<double>(clamped));
    r.check("l1_error", worst, "<=", tol_);
    r.check("free_energy_nonincreasing", max_increase, "<=", 1e-10);
    r.artifacts["density.csv"] = std::move(fpe_density);
    r.artifacts["density_particles.csv"] = std::move(kde_density);
  }

 private:
  std::unique_ptr<Model> model_;
  SimConfig sim_;
  GaussianState init_;
  std::size_t cells_ = 400;
  double x_min_ = -8.0, x_max_ = 8.0, tol_ = 0.05, fraction_ = 0.5;
  std::vector<double> times_;
};

// --- porous ------------------------------------------------------------------------

class Porous : public Experiment {
 public:
  void configure(const Config& c) override {
    model_ = std::make_unique<Model>(model_from_config(c));
    if (model_->kind() != ModelKind::kPorous) fail(ErrorKind::kConfig, "porous needs a porous model");
    sim_ = sim_from_config(c);
    if (c.get_string("init", "kind") != "barenblatt")
      fail(ErrorKind::kConfig, "porous needs [init] kind = barenblatt");
    t0_ = positive(c, "init", "t0", 0.5);
    cells_ = c.get_uint("experiment", "cells", 800);
    x_min_ = c.get_double("experiment", "x_min", -2.5);
    x_max_ = c.get_double("experiment", "x_max", 2.5);
    fpe_end_ = positive(c, "experiment", "fpe_check_time", 1.0);
    fpe_tol_ = positive(c, "experiment", "fpe_tolerance", 0.02);
    times_ = times_list(c, "particle_check_times", {1.0, 1.5, 2.0});
    particle_tol_ = positive(c, "experiment", "particle_tolerance", 0.10);
    fraction_ = positive(c, "experiment", "fpe_dt_fraction", 0.5);
    if (cells_ < 10 || !(x_max_ > x_min_) || fraction_ > 1.0)
      fail(ErrorKind::kConfig, "[experiment] needs cells >= 10, x_max > x_min, fpe_dt_fraction <= 1");
    if (fpe_end_ <= t0_ || times_.front() <= t0_ || times_.back() > t0_ + sim_.t_end + 1e-9)
      fail(ErrorKind::kConfig, "check times must lie in (init.t0, init.t0 + sim.t_end]");
  }
  void execute(ExperimentReport& r) override {
    // FPE from the exact profile at t0; checked at fpe_check_time, carried on
    // to the particle check times for the diagnostics.
    DensityGrid g = barenblatt_grid(t0_, x_min_, x_max_, cells_);
    std::vector<double> all_times = times_;
    all_times.push_back(fpe_end_);
    std::sort(all_times.begin(), all_times.end());
    all_times.erase(std::unique(all_times.begin(), all_times.end()), all_times.end());

    std::vector<DensityGrid> particle_grids;
    FlowOptions opt;
    opt.keep_snapshots = false;
    opt.observer = [&](const ParticleEnsemble& e) {
      for (double t : times_)
        if (std::abs(e.time() - t) < 1e-9) particle_grids.push_back(kde_on_grid(e, g));
    };
    ParticleEnsemble init(1, sample_barenblatt(t0_, sim_.n, sim_.seed, StreamTag::kInitA), t0_);
    simulate_flow(*model_, std::move(init), sim_, opt);
    if (particle_grids.size() != times_.size())
      fail(ErrorKind::kConfig, "particle_check_times must lie on the recording grid");

    Table fpe_density{{"t", "x", "f"}, {}};
    Table kde_density{{"t", "x", "f"}, {}};
    append_density(fpe_density, g);
    r.series.columns = {"t", "l1_fpe", "l1_particles", "fpe_mass"};
    std::size_t clamped = 0;
    double fpe_at_check = 0.0, worst_particle = 0.0;
    std::size_t pk = 0;
    for (double t : all_times) {
      while (g.time < t - 1e-12) {
        const double dt = std::min(fraction_ * porous_stable_dt(g), t - g.time);
        clamped += fpe_step_porous(g, dt).clamped_cells;
      }
      g.time = t;
      const DensityGrid exact = barenblatt_grid(t, x_min_, x_max_, cells_);
      const double l1_fpe = l1_distance(g, exact);
      if (std::abs(t - fpe_end_) < 1e-12) fpe_at_check = l1_fpe;
      double l1_particles = std::numeric_limits<double>::quiet_NaN();
      if (pk < times_.size() && std::abs(times_[pk] - t) < 1e-12) {
        l1_particles = l1_distance(particle_grids[pk], exact);
        worst_particle = std::max(worst_particle, l1_particles);
        r.measure("l1_particles_t" + format_double(t), l1_particles);
        append_density(kde_density, particle_grids[pk]);
        ++pk;
      }
      r.measure("l1_fpe_t" + format_double(t), l1_fpe);
      append_density(fpe_density, g);
      r.series.add({t, l1_fpe, l1_particles, g.mass()});
    }
    r.measure("l1_fpe", fpe_at_check, 0.0, "Barenblatt self-similar solution, exact cell averages");
    r.measure("l1_particles", worst_particle, 0.0, "Barenblatt self-similar solution");
    r.measure("clamped_cells", static_cast<double>(clamped));
    r.check("fpe_l1_to_barenblatt", fpe_at_check, "<=", fpe_tol_);
    r.check("particle_l1_to_barenblatt", worst_particle, "<=", particle_tol_);
    r.artifacts["density.csv"] = std::move(fpe_density);
    r.artifacts["density_particles.csv"] = std::move(kde_density);
  }

 private:
  std::unique_ptr<Model> model_;
  SimConfig sim_;
  double t0_ = 0.5, x_min_ = -2.5, x_max_ = 2.5, fpe_end_ = 1.0, fpe_tol_ = 0.02, particle_tol_ = 0.1;
  double fraction_ = 0.5;
  std::size_t cells_ = 800;
  std::vector<double> times_;
};

// --- picard ---------------------------------------------------------------------------

class Picard : public Experiment {
 public:
  void configure(const Config& c) override {
    model_ = std::make_unique<Model>(model_from_config(c));
    sim_ = sim_from_config(c);
    init_ = gaussian_from_config(c, "init", model_->dim());
    tol_ = positive(c, "experiment", "tolerance", 1e-9);
    max_iter_ = c.get_uint("experiment", "max_iter", 40);
    lambda_ = c.get_optional_double("experiment", "lambda_weight");
    factor_ = positive(c, "experiment", "stderr_factor", 4.0);
    if (max_iter_ == 0) fail(ErrorKind::kConfig, "[experiment] max_iter must be at least 1");
    if (lambda_ && !(*lambda_ > 0.0)) fail(ErrorKind::kConfig, "[experiment] lambda_weight must be positive");
  }
  void execute(ExperimentReport& r) override {
    const ParticleEnsemble init = sample_gaussian(init_.mean, init_.cov, sim_.n, sim_.seed);
    const double lambda = lambda_ ? *lambda_ : default_lambda_weight(*model_);
    const PicardResult pr = picard_iterate(*model_, init.measure(), sim_, lambda, tol_, max_iter_);
    const FlowResult direct = simulate_flow(*model_, init, sim_);

    const double n = static_cast<double>(sim_.n);
    r.series.columns = {"t", "w2_to_direct", "stderr_bound", "mean_picard_0", "mean_direct_0"};
    double worst_excess = -std::numeric_limits<double>::infinity();
    double max_w2 = 0.0;
    for (std::size_t k = 0; k < direct.times.size(); ++k) {
      const auto& a = pr.flow.measures[k];
      const auto& b = direct.snapshots[k];
      const double w2 = ensemble_w2(a, b);
      const double va = a.covariance().trace();
      const double vb = b.covariance().trace();
      const double bound = factor_ * std::sqrt(va / n + vb / n);
      worst_excess = std::max(worst_excess, w2 - bound);
      max_w2 = std::max(max_w2, w2);
      r.series.add({direct.times[k], w2, bound, a.mean()(0), b.mean()(0)});
    }
    const auto& dg = pr.diagnostics;
    double max_ratio = 0.0;
    for (std::size_t k = 0; k + 1 < dg.distances.size(); ++k)
      if (dg.distances[k] > 1e-12 && dg.distances[k + 1] > 1e-12)
        max_ratio = std::max(max_ratio, dg.distances[k + 1] / dg.distances[k]);

    r.measure("contraction_factor", dg.contraction_factor, 1.0, "Picard map is a contraction (factor < 1)");
    r.measure("max_w2_to_direct", max_w2);
    r.measure("iterations", static_cast<double>(dg.iterations));
    r.measure("max_successive_ratio", max_ratio);
    r.measure("lambda_weight", lambda);
    r.check("contraction_factor", dg.contraction_factor, "<", 1.0);
    r.check_flag("converged", dg.converged);
    r.check("matches_direct_within_stderr", worst_excess, "<=", 0.0);

    json sec;
    sec["distances"] = dg.distances;
    sec["contraction_factor"] = dg.contraction_factor;
    sec["iterations"] = dg.iterations;
    sec["converged"] = dg.converged;
    sec["lambda_weight"] = dg.lambda_weight;
    sec["tolerance"] = tol_;
    r.sections["picard"] = sec.dump();
    Table dist{{"iteration", "distance"}, {}};
    for (std::size_t k = 0; k < dg.distances.size(); ++k) dist.add({static_cast<double>(k), dg.distances[k]});
    r.artifacts["picard_distances.csv"] = std::move(dist);
  }

 private:
  std::unique_ptr<Model> model_;
  SimConfig sim_;
  GaussianState init_;
  double tol_ = 1e-9, factor_ = 4.0;
  std::size_t max_iter_ = 40;
  std::optional<double> lambda_;
};

// --- bismut ----------------------------------------------------------------------------

Observable observable_from_config(const Config& c, std::size_t dim) {
  const std::string kind = c.get_string("experiment", "observable", "coordinate");
  const auto axis = c.get_uint("experiment", "axis", 0);
  if (axis >= dim) fail(ErrorKind::kConfig, "[experiment] axis is out of range");
  if (kind == "coordinate") return Observable::coordinate(axis);
  if (kind == "quadratic") return Observable::quadratic();
  if (kind == "bounded") return Observable::bounded(axis, c.get_double("experiment", "observable_scale", 1.0));
  fail(ErrorKind::kConfig, "unknown observable '" + kind + "'");
}

PerturbationField perturbation_from_config(const Config& c, std::size_t dim) {
  const std::string kind = c.get_string("experiment", "perturbation", "constant");
  auto vec = [&](const std::string& key) {
    Eigen::VectorXd v = c.get_vector("experiment", key);
    if (v.size() != static_cast<Eigen::Index>(dim))
      fail(ErrorKind::kConfig, "[experiment] " + key + " must have the model dimension");
    return v;
  };
  if (kind == "constant") return PerturbationField::constant(vec("direction"));
  if (kind == "linear") {
    Eigen::MatrixXd m = c.get_matrix("experiment", "matrix");
    if (m.rows() != static_cast<Eigen::Index>(dim) || m.cols() != static_cast<Eigen::Index>(dim))
      fail(ErrorKind::kConfig, "[experiment] matrix must be d x d");
    return PerturbationField::linear(m);
  }
  if (kind == "bump")
    return PerturbationField::bump(vec("direction"), vec("center"), c.get_double("experiment", "width", 1.0));
  fail(ErrorKind::kConfig, "unknown perturbation '" + kind + "'");
}

json estimate_json(const BismutEstimate& e) {
  return {{"value", e.value}, {"std_error", e.std_error}, {"n_samples", e.n_samples}, {"g", e.g.describe()}};
}

class Bismut : public Experiment {
 public:
  void configure(const Config& c) override {
    model_ = std::make_unique<Model>(model_from_config(c));
    if (c.has("analytic_model", "kind")) {
      analytic_ = std::make_unique<Model>(model_from_config(c, "analytic_model"));
      if (analytic_->kind() != ModelKind::kLinearMeanField || analytic_->dim() != model_->dim())
        fail(ErrorKind::kConfig, "[analytic_model] must be a linear_meanfield model of the same dimension");
    }
    mu0_ = gaussian_from_config(c, "init", model_->dim());
    f_ = observable_from_config(c, model_->dim());
    phi_ = perturbation_from_config(c, model_->dim());
    cfg_.n_samples = c.get_uint("experiment", "n_samples", cfg_.n_samples);
    cfg_.batch_size = c.get_uint("experiment", "batch_size", cfg_.batch_size);
    cfg_.dt = c.get_double("experiment", "dt", cfg_.dt);
    cfg_.horizon = c.get_double("experiment", "horizon", cfg_.horizon);
    cfg_.seed = c.get_uint("run", "seed", 1);
    cfg_.validate();
    eps_ = c.get_double("experiment", "fd_eps", -1.0);
    k_ = positive(c, "experiment", "stderr_factor", 3.0);
    slack_ = positive(c, "experiment", "gradient_slack", 0.1);
    // The closed-form case always uses f(x) = x_axis and phi = e_axis.
    const auto axis = static_cast<Eigen::Index>(c.get_uint("experiment", "axis", 0));
    analytic_f_ = Observable::coordinate(static_cast<std::size_t>(axis));
    analytic_phi_ = PerturbationField::constant(
        Eigen::VectorXd::Unit(static_cast<Eigen::Index>(model_->dim()), axis));
  }

  void execute(ExperimentReport& r) override {
    const std::vector<WeightFunction> weights{{WeightFunction::Kind::kLinear},
                                              {WeightFunction::Kind::kSineSquared}};
    json sec;
    r.series.columns = {"case", "bismut_linear", "stderr_linear", "bismut_sine_squared", "stderr_sine_squared",
                        "reference", "reference_stderr"};
    bool all_ok = true;
    auto record_g = [&](const std::string& name, const std::vector<BismutEstimate>& est) {
      const double tol = k_ * (est[0].std_error + est[1].std_error);
      r.check(name + "_g_invariance", std::abs(est[0].value - est[1].value), "<=", tol);
      all_ok = all_ok && r.checks.back().pass;
    };

    if (analytic_) {
      const auto est = bismut_derivative(*analytic_, analytic_f_, analytic_phi_, mu0_, weights, cfg_);
      const auto& p = std::get<LinearParams>(analytic_->params());
      const Eigen::MatrixXd flow = ((p.state + p.interaction) * cfg_.horizon).exp();
      const auto ax = static_cast<Eigen::Index>(analytic_f_.axis);
      const double exact = flow(ax, ax);
      const std::string src = "exact linear flow: exp((A + C) T) at (axis, axis)";
      r.measure("analytic_bismut_linear", est[0].value, exact, src);
      r.measure("analytic_bismut_sine_squared", est[1].value, exact, src);
      r.measure("analytic_stderr_linear", est[0].std_error);
      r.check("analytic_agreement_linear", std::abs(est[0].value - exact), "<=", k_ * est[0].std_error);
      r.check("analytic_agreement_sine_squared", std::abs(est[1].value - exact), "<=", k_ * est[1].std_error);
      all_ok = all_ok && r.checks[r.checks.size() - 1].pass && r.checks[r.checks.size() - 2].pass;
      record_g("analytic", est);

      // |D^L P_T f|^2 <= Var_{mu_T}(f) / int_0^T lambda^-2 e^{-8 K t} dt with
      // lambda = 1 / sigma_min(Sigma) and K = |A| + |C|.
      const GaussianState law_t = evolve_gaussian(*analytic_, mu0_, cfg_.horizon, GaussianEvolution::kExact);
      const double var = law_t.cov(ax, ax);
      const double lambda = log_harnack_constants(*analytic_).lambda;
      const double big_k = Eigen::JacobiSVD<Eigen::MatrixXd>(p.state).singularValues()(0) +
                           Eigen::JacobiSVD<Eigen::MatrixXd>(p.interaction).singularValues()(0);
      const double integral = big_k > 0.0 ? -std::expm1(-8.0 * big_k * cfg_.horizon) / (8.0 * big_k * lambda * lambda)
                                          : cfg_.horizon / (lambda * lambda);
      const double lhs = exact * exact;
      const double rhs = var / integral;
      r.measure("gradient_bound_ratio", lhs / rhs);
      r.check("gradient_estimate_inequality", lhs, "<=", (1.0 + slack_) * rhs);

      sec["analytic"] = {{"linear", estimate_json(est[0])}, {"sine_squared", estimate_json(est[1])},
                         {"exact", exact}, {"model", to_string(analytic_->kind())}};
      r.series.add({0.0, est[0].value, est[0].std_error, est[1].value, est[1].std_error, exact, 0.0});
    }

    const auto est = bismut_derivative(*model_, f_, phi_, mu0_, weights, cfg_);
    const FdEstimate fd = fd_lions_derivative(*model_, f_, phi_, mu0_, eps_, cfg_);
    const std::string src = "central finite difference with common random numbers";
    r.measure("bismut_linear", est[0].value, fd.value, src);
    r.measure("bismut_sine_squared", est[1].value, fd.value, src);
    r.measure("fd_stderr", fd.std_error);
    r.measure("bismut_stderr_linear", est[0].std_error);
    r.measure("fd_half_step", fd.half_step_value);
    r.measure("fd_eps", fd.eps);
    r.check("fd_agreement_linear", std::abs(est[0].value - fd.value), "<=", k_ * (est[0].std_error + fd.std_error));
    r.check("fd_agreement_sine_squared", std::abs(est[1].value - fd.value), "<=",
            k_ * (est[1].std_error + fd.std_error));
    all_ok = all_ok && r.checks[r.checks.size() - 1].pass && r.checks[r.checks.size() - 2].pass;
    record_g("model", est);
    r.check_flag("fd_richardson_consistency", fd.richardson_ok);
    all_ok = all_ok && fd.richardson_ok;

    sec["model"] = {{"linear", estimate_json(est[0])},
                    {"sine_squared", estimate_json(est[1])},
                    {"fd", {{"value", fd.value}, {"std_error", fd.std_error}, {"eps", fd.eps},
                            {"half_step_value", fd.half_step_value}, {"half_step_stderr", fd.half_step_stderr},
                            {"richardson_ok", fd.richardson_ok}}},
                    {"model", to_string(model_->kind())}};
    if (analytic_) sec["analytic"]["observable"] = analytic_f_.describe();
    sec["observable"] = f_.describe();
    sec["perturbation"] = phi_.describe();
    sec["verdict"] = all_ok ? "pass" : "fail";
    r.sections["bismut"] = sec.dump();
    r.series.add({1.0, est[0].value, est[0].std_error, est[1].value, est[1].std_error, fd.value, fd.std_error});
  }

 private:
  std::unique_ptr<Model> model_, analytic_;
  GaussianState mu0_;
  Observable f_, analytic_f_;
  PerturbationField phi_, analytic_phi_;
  SensitivityConfig cfg_;
  double eps_ = -1.0, k_ = 3.0, slack_ = 0.1;
};

// --- comparison ------------------------------------------------------------------------

class Comparison : public Experiment {
 public:
  void configure(const Config& c) override {
    model_ = std::make_unique<Model>(model_from_config(c));
    if (model_->kind() != ModelKind::kDelay) fail(ErrorKind::kConfig, "comparison needs a delay model");
    sim_ = sim_from_config(c);
    init_ = gaussian_from_config(c, "init", 1);
    offset_ = c.get_double("experiment", "offset", 0.5);
    if (!(offset_ >= 0.0)) fail(ErrorKind::kConfig, "[experiment] offset must be non-negative");
    DelayParams probe = std::get<DelayParams>(model_->params());
    probe.noise_on_delay = true;
    probe.noise_slope = c.get_double("experiment", "probe_noise_slope", probe.noise_slope);
    probe_gap_ = positive(c, "experiment", "probe_history_gap", 1.0);
    probe_ = std::make_unique<Model>(Model::delay(probe));
  }
  void execute(ExperimentReport& r) override {
    const double memory = model_->memory_length();
    const auto base = sample_gaussian(init_.mean, init_.cov, sim_.n, sim_.seed).positions();
    std::vector<double> shifted = base;
    for (double& x : shifted) x += offset_;
    const auto a = ParticleEnsemble::with_constant_histories(memory, sim_.dt, base);
    const auto b = ParticleEnsemble::with_constant_histories(memory, sim_.dt, shifted);
    const CoupledResult cr = simulate_coupled(*model_, *model_, a, b, sim_, true);

    // Same present, ordered pasts, noise reading the past.
    const auto lags = static_cast<std::size_t>(std::llround(memory / sim_.dt));
    std::vector<std::vector<double>> ha, hb;
    for (double x : base) {
      std::vector<double> lo(lags + 1, x - probe_gap_), hi(lags + 1, x + probe_gap_);
      lo.back() = x;
      hi.back() = x;
      ha.push_back(std::move(lo));
      hb.push_back(std::move(hi));
    }
    const CoupledResult probe = simulate_coupled(*probe_, *probe_, ParticleEnsemble::with_histories(memory, sim_.dt, ha),
                                                 ParticleEnsemble::with_histories(memory, sim_.dt, hb), sim_, true);

    r.series.columns = {"t", "w2", "mean_gap", "probe_w2"};
    for (std::size_t k = 0; k < cr.a.times.size(); ++k)
      r.series.add({cr.a.times[k], cr.w2[k], cr.b.moments[k].mean(0) - cr.a.moments[k].mean(0), probe.w2[k]});

    const auto& ord = *cr.order;
    const auto& pord = *probe.order;
    const double fraction = static_cast<double>(pord.violations) / static_cast<double>(pord.checked_points);
    r.measure("violations", static_cast<double>(ord.violations), 0.0,
              "order preservation under monotone drift and state-only noise");
    r.measure("checked_points", static_cast<double>(ord.checked_points));
    r.measure("probe_violation_fraction", fraction);
    r.measure("probe_max_violation", pord.max_violation_magnitude);
    r.check_flag("order_conditions_hold", model_->order_conditions_hold());
    r.check_flag("probe_breaks_conditions", !probe_->order_conditions_hold());
    r.check("violations", static_cast<double>(ord.violations), "==", 0.0);
    r.check("probe_violation_fraction", fraction, ">", 0.0);
  }

 private:
  std::unique_ptr<Model> model_, probe_;
  SimConfig sim_;
  GaussianState init_;
  double offset_ = 0.5, probe_gap_ = 1.0;
};

std::unique_ptr<Experiment> make_experiment(const std::string& name) {
  if (name == "noop") return std::make_unique<Noop>();
  if (name == "metric_oracle") return std::make_unique<MetricOracle>();
  if (name == "gaussian_tracking") return std::make_unique<GaussianTracking>();
  if (name == "contraction") return std::make_unique<Contraction>();
  if (name == "log_harnack") return std::make_unique<LogHarnack>();
  if (name == "ergodicity") return std::make_unique<Ergodicity>();
  if (name == "superposition") return std::make_unique<Superposition>();
  if (name == "porous") return std::make_unique<Porous>();
  if (name == "picard") return std::make_unique<Picard>();
  if (name == "bismut") return std::make_unique<Bismut>();
  if (name == "comparison") return std::make_unique<Comparison>();
  fail(ErrorKind::kConfig, "unknown experiment '" + name + "'; see list-experiments");
}

// Parses the config into a ready experiment. Invalid model or simulation
// parameters surface as configuration errors.
std::unique_ptr<Experiment> configured(const Config& config) {
  const std::string name = config.get_string("run", "experiment");
  auto e = make_experiment(name);
  try {
    e->configure(config);
  } catch (const Error& err) {
    if (err.kind() == ErrorKind::kInvalidArgument) throw Error(ErrorKind::kConfig, err.what());
    throw;
  }
  config.get_uint("run", "seed", 1);
  config.get_bool("output", "snapshots", false);
  const auto unused = config.unused_keys();
  if (!unused.empty()) {
    std::string list;
    for (const auto& k : unused) list += (list.empty() ? "" : ", ") + k;
    fail(ErrorKind::kConfig, "unknown keys for experiment '" + name + "': " + list);
  }
  return e;
}

}  // namespace

const std::vector<std::string>& experiment_names() {
  static const std::vector<std::string> names{"noop",          "metric_oracle", "gaussian_tracking", "contraction",
                                              "log_harnack",   "ergodicity",    "superposition",     "porous",
                                              "picard",        "bismut",        "comparison"};
  return names;
}

void validate_config(const Config& config) { configured(config); }

ExperimentReport run_experiment(const Config& config) {
  const auto start = std::chrono::steady_clock::now();
  auto e = configured(config);
  ExperimentReport r;
  r.experiment = config.get_string("run", "experiment");
  r.metadata["seed"] = std::to_string(config.get_uint("run", "seed", 1));
  r.metadata["scheme"] = kScheme;
  r.metadata["rng"] = kRng;
  r.metadata["config"] = config.serialize();
  e->execute(r);
  r.validate();
  r.runtime_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return r;
}

}  // namespace mvsde
