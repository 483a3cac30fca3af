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

#include "mvsde/simulate.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "mvsde/parallel.hpp"

namespace mvsde {

void SimConfig::validate() const {
  require(n >= 2, "sim.n must be at least 2");
  require(dt > 0.0 && std::isfinite(dt), "sim.dt must be positive");
  require(t_end >= dt, "sim.t_end must be at least dt");
  require(record_every >= 1, "sim.record_every must be positive");
  (void)steps();
}

std::size_t SimConfig::steps() const {
  const double ratio = t_end / dt;
  const auto k = static_cast<std::size_t>(std::llround(ratio));
  require(std::abs(ratio - static_cast<double>(k)) <= 1e-9 * std::max(1.0, ratio),
          "sim.t_end must be a whole number of steps");
  return k;
}

namespace {
std::string blow_up_message(std::size_t particle, double time) {
  std::ostringstream os;
  os << "blow-up: particle " << particle << " became non-finite at t = " << time;
  return os.str();
}
}  // namespace

BlowUpError::BlowUpError(std::size_t particle, double time)
    : Error(ErrorKind::kNumerical, blow_up_message(particle, time)), particle_(particle), time_(time) {}

ParticleEnsemble::ParticleEnsemble(std::size_t dim, std::vector<double> positions, double time)
    : dim_(dim), positions_(std::move(positions)), time_(time) {
  require(dim_ >= 1, "ensemble dimension must be positive");
  require(!positions_.empty() && positions_.size() % dim_ == 0, "ensemble positions must be N x d");
  for (double v : positions_) require(std::isfinite(v), "ensemble positions must be finite");
}

ParticleEnsemble ParticleEnsemble::with_histories(double memory, double dt,
                                                  const std::vector<std::vector<double>>& histories, double time) {
  require(!histories.empty(), "delay ensemble needs at least one particle");
  std::vector<double> now;
  now.reserve(histories.size());
  for (const auto& h : histories) {
    require(!h.empty(), "empty particle history");
    now.push_back(h.back());
  }
  ParticleEnsemble e(1, std::move(now), time);
  e.segments_.reserve(histories.size());
  for (const auto& h : histories) {
    for (double v : h) require(std::isfinite(v), "particle history must be finite");
    e.segments_.emplace_back(memory, dt, h);
  }
  return e;
}

ParticleEnsemble ParticleEnsemble::with_constant_histories(double memory, double dt, std::vector<double> positions,
                                                           double time) {
  const auto lags = static_cast<std::size_t>(std::llround(memory / dt));
  std::vector<std::vector<double>> histories;
  histories.reserve(positions.size());
  for (double x : positions) histories.emplace_back(lags + 1, x);
  return with_histories(memory, dt, histories, time);
}

ParticleEnsemble sample_gaussian(const Eigen::VectorXd& mean, const Eigen::MatrixXd& cov, std::size_t n,
                                 std::uint64_t seed, StreamTag tag) {
  const auto d = mean.size();
  require(d >= 1 && cov.rows() == d && cov.cols() == d, "gaussian sampler: mean and covariance disagree");
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(cov);
  require(eig.eigenvalues().minCoeff() >= -1e-12 * std::max(1.0, cov.trace()),
          "gaussian sampler: covariance is not PSD");
  const Eigen::MatrixXd root =
      eig.eigenvectors() * eig.eigenvalues().cwiseMax(0.0).cwiseSqrt().asDiagonal() * eig.eigenvectors().transpose();
  const NormalStream stream(seed, tag);
  const auto du = static_cast<std::size_t>(d);
  std::vector<double> pos(n * du);
  parallel_chunks(n, [&](std::size_t b, std::size_t e) {
    Eigen::VectorXd z(d);
    for (std::size_t i = b; i < e; ++i) {
      stream.fill(i, 0, {z.data(), du});
      Eigen::Map<Eigen::VectorXd>(pos.data() + i * du, d) = mean + root * z;
    }
  });
  return ParticleEnsemble(du, std::move(pos));
}

ParticleEnsemble point_mass(std::span<const double> x, std::size_t n) {
  std::vector<double> pos;
  pos.reserve(n * x.size());
  for (std::size_t i = 0; i < n; ++i) pos.insert(pos.end(), x.begin(), x.end());
  return ParticleEnsemble(x.size(), std::move(pos));
}

void brownian_increments(const NormalStream& stream, std::size_t step_index, std::size_t n, std::size_t m, double dt,
                         std::span<double> out) {
  require(out.size() == n * m, "increment buffer must be N x m");
  const double scale = std::sqrt(dt);
  parallel_chunks(n, [&](std::size_t b, std::size_t e) {
    for (std::size_t i = b; i < e; ++i) {
      std::span<double> row = out.subspan(i * m, m);
      stream.fill(i, step_index, row);
      for (double& v : row) v *= scale;
    }
  });
}

void step(ParticleEnsemble& ens, const Model& model, double dt, std::span<const double> increments) {
  require(model.dim() == ens.dim(), "ensemble dimension does not match the model");
  step_frozen(ens, model, dt, increments, model.prepare(ens.positions(), ens.size()));
}

void step_frozen(ParticleEnsemble& ens, const Model& model, double dt, std::span<const double> increments,
                 const MeasureContext& ctx) {
  const std::size_t n = ens.size();
  const std::size_t d = ens.dim_;
  const std::size_t m = model.noise_dim();
  require(model.dim() == d, "ensemble dimension does not match the model");
  require(increments.size() == n * m, "increments must be N x m");
  const bool delayed = model.memory_length() > 0.0;
  if (delayed && !ens.has_segments()) fail(ErrorKind::kInvalidArgument, "missing segment: model has memory r0 > 0");
  require(delayed || !ens.has_segments(), "segments supplied to a model without memory");

  const double t = ens.time_;
  auto view = [&](std::size_t i, double& lag) {
    StateView v{ens.point(i), {}};
    if (delayed) {
      lag = ens.segments_[i].delayed();
      v.delayed = {&lag, 1};
    }
    return v;
  };

  const auto di = static_cast<Eigen::Index>(d);
  const auto mi = static_cast<Eigen::Index>(m);
  Eigen::MatrixXd sigma_const(di, mi);
  const bool constant_sigma = model.additive_noise();
  if (constant_sigma) {
    double lag = 0.0;
    model.diffusion(t, view(0, lag), ctx, sigma_const);
  }

  std::vector<double> next(n * d);
  parallel_chunks(n, [&](std::size_t b, std::size_t e) {
    std::vector<double> drift(d);
    Eigen::MatrixXd sigma_local(di, mi);
    for (std::size_t i = b; i < e; ++i) {
      double lag = 0.0;
      const StateView v = view(i, lag);
      model.drift(t, v, ctx, drift);
      if (!constant_sigma) model.diffusion(t, v, ctx, sigma_local);
      const Eigen::MatrixXd& sigma = constant_sigma ? sigma_const : sigma_local;
      const double* dw = increments.data() + i * m;
      for (std::size_t k = 0; k < d; ++k) {
        double x = v.now[k] + drift[k] * dt;
        for (std::size_t j = 0; j < m; ++j)
          x += sigma(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(j)) * dw[j];
        next[i * d + k] = x;
      }
    }
  });

  // Sequential scan so the reported index does not depend on scheduling.
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t k = 0; k < d; ++k)
      if (!std::isfinite(next[i * d + k])) throw BlowUpError(i, t + dt);

  ens.positions_.swap(next);
  if (delayed)
    for (std::size_t i = 0; i < n; ++i) ens.segments_[i].push(ens.positions_[i]);
  ens.time_ = t + dt;
}

namespace {

MomentRecord moments_of(const ParticleEnsemble& e, double t) {
  const std::size_t n = e.size();
  const std::size_t d = e.dim();
  const auto& x = e.positions();
  MomentRecord r;
  r.t = t;
  const auto di = static_cast<Eigen::Index>(d);
  r.mean.resize(di);
  for (std::size_t k = 0; k < d; ++k)
    r.mean[static_cast<Eigen::Index>(k)] =
        ordered_sum(n, [&](std::size_t i) { return x[i * d + k]; }) / static_cast<double>(n);
  r.cov.resize(di, di);
  for (std::size_t a = 0; a < d; ++a)
    for (std::size_t b = a; b < d; ++b) {
      const double ma = r.mean[static_cast<Eigen::Index>(a)];
      const double mb = r.mean[static_cast<Eigen::Index>(b)];
      const double s =
          ordered_sum(n, [&](std::size_t i) { return (x[i * d + a] - ma) * (x[i * d + b] - mb); });
      const double c = n > 1 ? s / static_cast<double>(n - 1) : 0.0;
      r.cov(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b)) = c;
      r.cov(static_cast<Eigen::Index>(b), static_cast<Eigen::Index>(a)) = c;
    }
  r.second_moment = ordered_sum(n * d, [&](std::size_t j) { return x[j] * x[j]; }) / static_cast<double>(n);
  double mx = 0.0;
  for (double v : x) mx = std::max(mx, std::abs(v));
  r.max_abs = mx;
  return r;
}

void record(FlowResult& out, const ParticleEnsemble& e, double t, const FlowOptions& options) {
  out.times.push_back(t);
  out.moments.push_back(moments_of(e, t));
  out.sup_second_moment = std::max(out.sup_second_moment, out.moments.back().second_moment);
  out.max_abs = std::max(out.max_abs, out.moments.back().max_abs);
  if (options.keep_snapshots) out.snapshots.push_back(e.measure());
  if (options.observer) options.observer(e);
}

void check_order(const ParticleEnsemble& a, const ParticleEnsemble& b, double t, OrderReport& rep) {
  const auto& xa = a.positions();
  const auto& xb = b.positions();
  const std::size_t d = a.dim();
  for (std::size_t j = 0; j < xa.size(); ++j) {
    ++rep.checked_points;
    const double gap = xa[j] - xb[j];
    if (gap > order_tolerance(xb[j])) {
      ++rep.violations;
      rep.max_violation_magnitude = std::max(rep.max_violation_magnitude, gap);
      if (!rep.first_violation) rep.first_violation = OrderReport::Location{j / d, t, j % d};
    }
  }
}

}  // namespace

FlowResult simulate_flow(const Model& model, ParticleEnsemble init, const SimConfig& cfg, const FlowOptions& options) {
  cfg.validate();
  require(init.size() == cfg.n, "initial ensemble size differs from sim.n");
  require(init.dim() == model.dim(), "initial ensemble dimension does not match the model");
  const std::size_t steps = cfg.steps();
  const std::size_t m = model.noise_dim();
  const NormalStream stream(cfg.seed, StreamTag::kNoise);
  std::vector<double> inc(cfg.n * m);
  const double t0 = init.time();

  FlowResult out;
  record(out, init, t0, options);
  for (std::size_t k = 0; k < steps; ++k) {
    brownian_increments(stream, k, cfg.n, m, cfg.dt, inc);
    step(init, model, cfg.dt, inc);
    if ((k + 1) % cfg.record_every == 0 || k + 1 == steps)
      record(out, init, t0 + static_cast<double>(k + 1) * cfg.dt, options);
  }
  out.final_state = std::move(init);
  return out;
}

EmpiricalMeasure stride_subsample(const EmpiricalMeasure& a, std::size_t max_points) {
  const std::size_t n = a.size();
  if (n <= max_points) return a;
  const std::size_t d = a.dim();
  std::vector<double> c;
  c.reserve(max_points * d);
  for (std::size_t i = 0; i < max_points; ++i) {
    const auto p = a.point(i * n / max_points);
    c.insert(c.end(), p.begin(), p.end());
  }
  return EmpiricalMeasure(d, std::move(c));
}

double ensemble_w2(const EmpiricalMeasure& a, const EmpiricalMeasure& b) {
  if (a.dim() == 1) return wasserstein_1d(a, b, 2.0);
  return wasserstein(stride_subsample(a, kExactAssignmentThreshold), stride_subsample(b, kExactAssignmentThreshold),
                     2.0, {}, MetricMethod::kExactAssignment)
      .value;
}

CoupledResult simulate_coupled(const Model& model_a, const Model& model_b, ParticleEnsemble init_a,
                               ParticleEnsemble init_b, const SimConfig& cfg, bool check_order_flag,
                               bool keep_snapshots) {
  cfg.validate();
  require(init_a.size() == cfg.n && init_b.size() == cfg.n, "coupled ensembles must both have sim.n particles");
  require(init_a.dim() == init_b.dim() && model_a.dim() == model_b.dim() && init_a.dim() == model_a.dim(),
          "coupled systems must share the dimension");
  require(model_a.noise_dim() == model_b.noise_dim(), "coupled systems must share the noise dimension");

  CoupledResult out;
  if (check_order_flag) {
    OrderReport initial;
    check_order(init_a, init_b, init_a.time(), initial);
    if (init_a.has_segments() && init_b.has_segments()) {
      for (std::size_t i = 0; i < init_a.size(); ++i) {
        const auto ha = init_a.segments()[i].values();
        const auto hb = init_b.segments()[i].values();
        require(ha.size() == hb.size(), "coupled segments must have equal length");
        for (std::size_t j = 0; j < ha.size(); ++j)
          if (ha[j] - hb[j] > order_tolerance(hb[j])) ++initial.violations;
      }
    }
    if (initial.violations > 0) fail(ErrorKind::kInvalidArgument, "initial order violated: init_a <= init_b required");
    out.order = OrderReport{};
  }

  const std::size_t steps = cfg.steps();
  const std::size_t m = model_a.noise_dim();
  const NormalStream stream(cfg.seed, StreamTag::kNoise);
  std::vector<double> inc(cfg.n * m);
  const double t0 = init_a.time();
  FlowOptions opts;
  opts.keep_snapshots = keep_snapshots;

  auto snapshot = [&](double t) {
    record(out.a, init_a, t, opts);
    record(out.b, init_b, t, opts);
    out.w2.push_back(ensemble_w2(init_a.measure(), init_b.measure()));
    const auto& xa = init_a.positions();
    const auto& xb = init_b.positions();
    out.mean_square_gap.push_back(
        ordered_sum(xa.size(), [&](std::size_t j) { return (xa[j] - xb[j]) * (xa[j] - xb[j]); }) /
        static_cast<double>(cfg.n));
  };

  snapshot(t0);
  if (out.order) check_order(init_a, init_b, t0, *out.order);
  for (std::size_t k = 0; k < steps; ++k) {
    brownian_increments(stream, k, cfg.n, m, cfg.dt, inc);
    step(init_a, model_a, cfg.dt, inc);
    step(init_b, model_b, cfg.dt, inc);
    const double t = t0 + static_cast<double>(k + 1) * cfg.dt;
    if (out.order) check_order(init_a, init_b, t, *out.order);
    if ((k + 1) % cfg.record_every == 0 || k + 1 == steps) snapshot(t);
  }
  out.a.final_state = std::move(init_a);
  out.b.final_state = std::move(init_b);
  return out;
}

InvariantEstimate estimate_invariant(const Model& model, ParticleEnsemble init, const SimConfig& cfg, double burn_in,
                                     bool force, double stationarity_threshold) {
  if (!force) {
    double rate = 0.0;
    try {
      rate = model.declared_rate().rate;
    } catch (const Error&) {
      fail(ErrorKind::kInvalidArgument, "model declares no rate; pass force to estimate an invariant law anyway");
    }
    require(rate > 0.0, "model does not declare a positive rate; pass force to estimate anyway");
  }
  require(burn_in >= 0.0 && burn_in < cfg.t_end, "burn-in must lie in [0, t_end)");
  const FlowResult flow = simulate_flow(model, std::move(init), cfg);

  std::vector<std::size_t> window;
  for (std::size_t k = 0; k < flow.times.size(); ++k)
    if (flow.times[k] >= burn_in - 1e-12) window.push_back(k);

  const std::size_t d = model.dim();
  auto pool = [&](std::size_t from, std::size_t to) {
    std::vector<double> c;
    for (std::size_t j = from; j < to; ++j) {
      const auto& s = flow.snapshots[window[j]].coords();
      c.insert(c.end(), s.begin(), s.end());
    }
    return EmpiricalMeasure(d, std::move(c));
  };

  InvariantEstimate out;
  out.pooled = pool(0, window.size());
  const std::size_t half = window.size() / 2;
  if (half >= 1) {
    out.stationarity_w2 = ensemble_w2(pool(0, half), pool(window.size() - half, window.size()));
    if (out.stationarity_w2 > stationarity_threshold) {
      std::ostringstream os;
      os << "stationarity diagnostic " << out.stationarity_w2 << " exceeds " << stationarity_threshold;
      out.warning = os.str();
    }
  }
  return out;
}

}  // namespace mvsde
