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

#include "mvsde/sensitivity.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numbers>
#include <sstream>
#include <utility>
#include <vector>

#include "mvsde/error.hpp"
#include "mvsde/parallel.hpp"

namespace mvsde {

PerturbationField PerturbationField::constant(Eigen::VectorXd e) {
  PerturbationField p;
  p.kind = Kind::kConstant;
  p.direction = std::move(e);
  return p;
}

PerturbationField PerturbationField::linear(Eigen::MatrixXd m) {
  require(m.rows() == m.cols() && m.rows() >= 1, "linear perturbation needs a square matrix");
  PerturbationField p;
  p.kind = Kind::kLinear;
  p.matrix = std::move(m);
  return p;
}

PerturbationField PerturbationField::bump(Eigen::VectorXd e, Eigen::VectorXd c, double w) {
  require(e.size() == c.size() && w > 0.0, "bump perturbation needs matching e, c and w > 0");
  PerturbationField p;
  p.kind = Kind::kBump;
  p.direction = std::move(e);
  p.center = std::move(c);
  p.width = w;
  return p;
}

void PerturbationField::apply(std::span<const double> x, std::span<double> out) const {
  const auto d = static_cast<Eigen::Index>(x.size());
  Eigen::Map<const Eigen::VectorXd> xv(x.data(), d);
  Eigen::Map<Eigen::VectorXd> o(out.data(), d);
  switch (kind) {
    case Kind::kConstant:
      require(direction.size() == d, "perturbation dimension mismatch");
      o = direction;
      return;
    case Kind::kLinear:
      require(matrix.rows() == d, "perturbation dimension mismatch");
      o.noalias() = matrix * xv;
      return;
    case Kind::kBump: {
      require(direction.size() == d, "perturbation dimension mismatch");
      const double u2 = (xv - center).squaredNorm() / (width * width);
      o = u2 < 1.0 ? (std::exp(1.0 - 1.0 / (1.0 - u2)) * direction).eval() : Eigen::VectorXd::Zero(d);
      return;
    }
  }
}

std::string PerturbationField::describe() const {
  switch (kind) {
    case Kind::kConstant: return "constant";
    case Kind::kLinear: return "linear";
    case Kind::kBump: return "bump";
  }
  return "unknown";
}

Observable Observable::coordinate(std::size_t axis) { return {Kind::kCoordinate, axis, 1.0}; }
Observable Observable::quadratic() { return {Kind::kQuadratic, 0, 1.0}; }
Observable Observable::bounded(std::size_t axis, double scale) {
  require(scale > 0.0, "bounded observable needs scale > 0");
  return {Kind::kBounded, axis, scale};
}
Observable Observable::constant_value(double c) { return {Kind::kConstant, 0, c}; }

double Observable::operator()(std::span<const double> x) const {
  switch (kind) {
    case Kind::kCoordinate: return x[axis];
    case Kind::kQuadratic: {
      double s = 0.0;
      for (double v : x) s += v * v;
      return s;
    }
    case Kind::kBounded: return std::tanh(x[axis] / scale);
    case Kind::kConstant: return scale;
  }
  return 0.0;
}

std::string Observable::describe() const {
  switch (kind) {
    case Kind::kCoordinate: return "coordinate";
    case Kind::kQuadratic: return "quadratic";
    case Kind::kBounded: return "bounded";
    case Kind::kConstant: return "constant";
  }
  return "unknown";
}

double WeightFunction::value(double t, double horizon) const {
  const double s = t / horizon;
  if (kind == Kind::kLinear) return s;
  const double r = std::sin(0.5 * std::numbers::pi * s);
  return r * r;
}

double WeightFunction::derivative(double t, double horizon) const {
  if (kind == Kind::kLinear) return 1.0 / horizon;
  // d/dt sin^2(pi t / 2T) = (pi / 2T) sin(pi t / T)
  return 0.5 * std::numbers::pi / horizon * std::sin(std::numbers::pi * t / horizon);
}

std::string WeightFunction::describe() const { return kind == Kind::kLinear ? "linear" : "sine_squared"; }

void SensitivityConfig::validate() const {
  require(n_samples >= 2 && batch_size >= 2, "sensitivity needs at least two samples per batch");
  require(dt > 0.0 && horizon >= dt, "sensitivity needs dt > 0 and horizon >= dt");
  SimConfig probe;
  probe.dt = dt;
  probe.t_end = horizon;
  probe.steps();
}

std::uint64_t batch_seed(std::uint64_t seed, std::size_t batch) {
  // splitmix64 finalizer of (seed, batch)
  std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL * (static_cast<std::uint64_t>(batch) + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

namespace {

bool constant_lions_kernel(const Model& model) {
  switch (model.kind()) {
    case ModelKind::kLinearMeanField:
    case ModelKind::kZero:
    case ModelKind::kDegenerateHamiltonian:
      return true;
    case ModelKind::kGranular:
      return std::get<GranularParams>(model.params()).interaction.is_quadratic();
    default:
      return false;
  }
}

void require_derivatives(const Model& model) {
  if (!model.has_derivatives())
    fail(ErrorKind::kInvalidArgument, "model " + to_string(model.kind()) + " has no registered derivatives");
  require(model.additive_noise() && model.memory_length() == 0.0,
          "variational flow needs additive noise and no memory");
}

// Per-step hook: (step index, time, v, mean-field term m, increments).
using StepHook = std::function<void(std::size_t, double, const std::vector<double>&, const std::vector<double>&,
                                    const std::vector<double>&)>;

// Advances (X, v) together for `steps` Euler steps on the noise of `seed`.
void integrate_variational(const Model& model, ParticleEnsemble& ens, std::vector<double>& v, double dt,
                           std::size_t steps, std::uint64_t seed, const StepHook& hook,
                           const std::function<void(std::size_t)>& after_step = {}) {
  const std::size_t n = ens.size();
  const std::size_t d = ens.dim();
  const std::size_t m = model.noise_dim();
  const auto di = static_cast<Eigen::Index>(d);
  const bool constant_kernel = constant_lions_kernel(model);
  const NormalStream stream(seed, StreamTag::kNoise);
  std::vector<double> inc(n * m), mean_field(n * d), next_v(n * d);
  const std::vector<double> origin(d, 0.0);

  for (std::size_t k = 0; k < steps; ++k) {
    const double t = ens.time();
    const MeasureContext ctx = model.prepare(ens.positions(), n);
    if (constant_kernel) {
      const Eigen::MatrixXd kernel = model.lions_kernel(t, origin, origin, ctx);
      Eigen::VectorXd vbar(di);
      for (std::size_t c = 0; c < d; ++c)
        vbar[static_cast<Eigen::Index>(c)] =
            ordered_sum(n, [&](std::size_t i) { return v[i * d + c]; }) / static_cast<double>(n);
      const Eigen::VectorXd term = kernel * vbar;
      for (std::size_t i = 0; i < n; ++i)
        for (std::size_t c = 0; c < d; ++c) mean_field[i * d + c] = term[static_cast<Eigen::Index>(c)];
    } else {
      parallel_chunks(n, [&](std::size_t b, std::size_t e) {
        for (std::size_t i = b; i < e; ++i) {
          Eigen::VectorXd acc = Eigen::VectorXd::Zero(di);
          for (std::size_t j = 0; j < n; ++j)
            acc += model.lions_kernel(t, ens.point(i), ens.point(j), ctx) *
                   Eigen::Map<const Eigen::VectorXd>(v.data() + j * d, di);
          Eigen::Map<Eigen::VectorXd>(mean_field.data() + i * d, di) = acc / static_cast<double>(n);
        }
      });
    }
    parallel_chunks(n, [&](std::size_t b, std::size_t e) {
      for (std::size_t i = b; i < e; ++i) {
        const Eigen::MatrixXd jac = model.drift_jacobian(t, ens.point(i), ctx);
        Eigen::Map<const Eigen::VectorXd> vi(v.data() + i * d, di);
        Eigen::Map<const Eigen::VectorXd> mi(mean_field.data() + i * d, di);
        Eigen::Map<Eigen::VectorXd>(next_v.data() + i * d, di) = vi + (jac * vi + mi) * dt;
      }
    });
    brownian_increments(stream, k, n, m, dt, inc);
    if (hook) hook(k, t, v, mean_field, inc);
    step_frozen(ens, model, dt, inc, ctx);
    v.swap(next_v);
    if (after_step) after_step(k);
  }
}

std::vector<double> initial_v(const ParticleEnsemble& ens, const PerturbationField& phi) {
  const std::size_t d = ens.dim();
  std::vector<double> v(ens.size() * d);
  for (std::size_t i = 0; i < ens.size(); ++i) phi.apply(ens.point(i), {v.data() + i * d, d});
  return v;
}

Eigen::MatrixXd noise_inverse(const Model& model) {
  const std::vector<double> origin(model.dim(), 0.0);
  const MeasureContext ctx = model.prepare(origin, 1);
  Eigen::MatrixXd sigma(static_cast<Eigen::Index>(model.dim()), static_cast<Eigen::Index>(model.noise_dim()));
  model.diffusion(0.0, StateView{origin, {}}, ctx, sigma);
  if (sigma.rows() != sigma.cols()) fail(ErrorKind::kNumerical, "singular sigma: the noise matrix is not square");
  Eigen::FullPivLU<Eigen::MatrixXd> lu(sigma);
  if (!lu.isInvertible()) fail(ErrorKind::kNumerical, "singular sigma encountered");
  return lu.inverse();
}

// Particles of one batch share the empirical measure and are not
// independent, so the error bar is the larger of the iid estimate and the
// spread of the batch means.
struct RunningMoments {
  double sum = 0.0;
  double sum_sq = 0.0;
  std::size_t n = 0;
  std::vector<std::pair<double, std::size_t>> blocks;  // (batch sum, count)

  void add_block(double s, double ss, std::size_t count) {
    sum += s;
    sum_sq += ss;
    n += count;
    blocks.emplace_back(s, count);
  }
  double mean() const { return sum / static_cast<double>(n); }
  double std_error() const {
    const double mu = mean();
    const double nn = static_cast<double>(n);
    const double var = std::max(0.0, (sum_sq / nn - mu * mu)) * nn / (nn - 1.0);
    const double iid = std::sqrt(var / nn);
    if (blocks.size() < 2) return iid;
    double between = 0.0;
    for (const auto& [s, c] : blocks) {
      const double dev = static_cast<double>(c) * (s / static_cast<double>(c) - mu);
      between += dev * dev;
    }
    const double nb = static_cast<double>(blocks.size());
    return std::max(iid, std::sqrt(between * nb / (nb - 1.0)) / nn);
  }
};

ParticleEnsemble batch_initial(const GaussianState& mu0, std::size_t count, std::uint64_t seed) {
  return sample_gaussian(mu0.mean, mu0.cov, count, seed, StreamTag::kInitA);
}

}  // namespace

VariationalPath variational_flow(const Model& model, ParticleEnsemble init, const PerturbationField& phi,
                                 const SimConfig& cfg) {
  require_derivatives(model);
  cfg.validate();
  require(init.size() == cfg.n && init.dim() == model.dim(), "initial ensemble does not match sim.n or the model");
  const std::size_t d = model.dim();
  std::vector<double> v = initial_v(init, phi);
  VariationalPath out;
  auto record = [&](double t) {
    Eigen::VectorXd mean(static_cast<Eigen::Index>(d));
    for (std::size_t c = 0; c < d; ++c)
      mean[static_cast<Eigen::Index>(c)] =
          ordered_sum(init.size(), [&](std::size_t i) { return v[i * d + c]; }) / static_cast<double>(init.size());
    out.times.push_back(t);
    out.mean_v.push_back(mean);
  };
  const double t0 = init.time();
  const std::size_t steps = cfg.steps();
  record(t0);
  integrate_variational(model, init, v, cfg.dt, steps, cfg.seed, {}, [&](std::size_t k) {
    if ((k + 1) % cfg.record_every == 0 || k + 1 == steps) record(t0 + static_cast<double>(k + 1) * cfg.dt);
  });
  out.final_x = init.positions();
  out.final_v = std::move(v);
  return out;
}

std::vector<BismutEstimate> bismut_derivative(const Model& model, const Observable& f, const PerturbationField& phi,
                                              const GaussianState& mu0, const std::vector<WeightFunction>& weights,
                                              const SensitivityConfig& cfg) {
  require_derivatives(model);
  cfg.validate();
  require(!weights.empty(), "bismut estimate needs at least one weight function");
  require(mu0.dim() == model.dim(), "initial law dimension does not match the model");
  const Eigen::MatrixXd sigma_inv = noise_inverse(model);
  const std::size_t d = model.dim();
  const std::size_t m = model.noise_dim();
  const std::size_t gcount = weights.size();
  const auto di = static_cast<Eigen::Index>(d);
  SimConfig probe;
  probe.dt = cfg.dt;
  probe.t_end = cfg.horizon;
  const std::size_t steps = probe.steps();

  std::vector<RunningMoments> acc(gcount);
  for (std::size_t b = 0; b < cfg.batches(); ++b) {
    const std::size_t count = std::min(cfg.batch_size, cfg.n_samples - b * cfg.batch_size);
    const std::uint64_t seed = batch_seed(cfg.seed, b);
    ParticleEnsemble ens = batch_initial(mu0, count, seed);
    std::vector<double> v = initial_v(ens, phi);
    std::vector<double> w(count * gcount, 0.0);
    integrate_variational(
        model, ens, v, cfg.dt, steps, seed,
        [&](std::size_t, double t, const std::vector<double>& vk, const std::vector<double>& mk,
            const std::vector<double>& inc) {
          parallel_chunks(count, [&](std::size_t lo, std::size_t hi) {
            for (std::size_t i = lo; i < hi; ++i) {
              Eigen::Map<const Eigen::VectorXd> vi(vk.data() + i * d, di);
              Eigen::Map<const Eigen::VectorXd> mi(mk.data() + i * d, di);
              Eigen::Map<const Eigen::VectorXd> dw(inc.data() + i * m, static_cast<Eigen::Index>(m));
              for (std::size_t g = 0; g < gcount; ++g) {
                const Eigen::VectorXd u = weights[g].derivative(t, cfg.horizon) * vi +
                                          weights[g].value(t, cfg.horizon) * mi;
                w[i * gcount + g] += (sigma_inv * u).dot(dw);
              }
            }
          });
        });
    for (std::size_t g = 0; g < gcount; ++g) {
      auto term = [&](std::size_t i) { return f(ens.point(i)) * w[i * gcount + g]; };
      const double s = ordered_sum(count, term);
      const double ss = ordered_sum(count, [&](std::size_t i) {
        const double x = term(i);
        return x * x;
      });
      acc[g].add_block(s, ss, count);
    }
  }

  std::vector<BismutEstimate> out(gcount);
  for (std::size_t g = 0; g < gcount; ++g) {
    out[g].value = acc[g].mean();
    out[g].std_error = acc[g].std_error();
    out[g].n_samples = acc[g].n;
    out[g].g = weights[g];
  }
  return out;
}

FdEstimate fd_lions_derivative(const Model& model, const Observable& f, const PerturbationField& phi,
                               const GaussianState& mu0, double eps, const SensitivityConfig& cfg) {
  cfg.validate();
  require(mu0.dim() == model.dim(), "initial law dimension does not match the model");
  require(model.memory_length() == 0.0, "finite-difference derivative needs a model without memory");
  const std::size_t d = model.dim();
  if (!(eps > 0.0)) {
    const double sd = mu0.cov.diagonal().cwiseMax(0.0).cwiseSqrt().mean();
    eps = 1e-2 * (sd > 0.0 ? sd : 1.0);
  }

  auto estimate = [&](double h) {
    RunningMoments acc;
    for (std::size_t b = 0; b < cfg.batches(); ++b) {
      const std::size_t count = std::min(cfg.batch_size, cfg.n_samples - b * cfg.batch_size);
      const std::uint64_t seed = batch_seed(cfg.seed, b);
      const ParticleEnsemble base = batch_initial(mu0, count, seed);
      std::vector<double> plus = base.positions();
      std::vector<double> minus = base.positions();
      std::vector<double> shift(d);
      for (std::size_t i = 0; i < count; ++i) {
        phi.apply(base.point(i), shift);
        for (std::size_t c = 0; c < d; ++c) {
          plus[i * d + c] += h * shift[c];
          minus[i * d + c] -= h * shift[c];
        }
      }
      SimConfig sc;
      sc.n = count;
      sc.dt = cfg.dt;
      sc.t_end = cfg.horizon;
      sc.seed = seed;
      sc.record_every = sc.steps();
      FlowOptions opts;
      opts.keep_snapshots = false;
      const FlowResult rp = simulate_flow(model, ParticleEnsemble(d, std::move(plus)), sc, opts);
      const FlowResult rm = simulate_flow(model, ParticleEnsemble(d, std::move(minus)), sc, opts);
      auto term = [&](std::size_t i) {
        return (f(rp.final_state.point(i)) - f(rm.final_state.point(i))) / (2.0 * h);
      };
      const double s = ordered_sum(count, term);
      const double ss = ordered_sum(count, [&](std::size_t i) {
        const double x = term(i);
        return x * x;
      });
      acc.add_block(s, ss, count);
    }
    return std::pair{acc.mean(), acc.std_error()};
  };

  FdEstimate out;
  out.eps = eps;
  std::tie(out.value, out.std_error) = estimate(eps);
  std::tie(out.half_step_value, out.half_step_stderr) = estimate(0.5 * eps);
  const double slack = 3.0 * (out.std_error + out.half_step_stderr) + eps * eps * (1.0 + std::abs(out.value));
  out.richardson_ok = std::abs(out.value - out.half_step_value) <= slack;
  return out;
}

}  // namespace mvsde
