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

#include "mvsde/models.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "mvsde/error.hpp"
#include "mvsde/parallel.hpp"
#include "mvsde/rng.hpp"

namespace mvsde {

namespace {
// max_{u >= 0} e^{-u/2} (u - 1), attained at u = 3.
const double kBumpCurvaturePeak = 2.0 * std::exp(-1.5);

double squared_norm(std::span<const double> r) {
  double s = 0.0;
  for (double v : r) s += v * v;
  return s;
}
}  // namespace

std::string to_string(ModelKind kind) {
  switch (kind) {
    case ModelKind::kGranular: return "granular";
    case ModelKind::kDegenerateHamiltonian: return "degenerate_hamiltonian";
    case ModelKind::kPorous: return "porous";
    case ModelKind::kLandau: return "landau";
    case ModelKind::kLinearMeanField: return "linear_meanfield";
    case ModelKind::kDelay: return "delay";
    case ModelKind::kZero: return "zero";
  }
  return "unknown";
}

double RadialPotential::value(std::span<const double> r) const {
  const double s = squared_norm(r);
  double v = 0.5 * quadratic * s;
  if (bump_amplitude != 0.0) v += bump_amplitude * std::exp(-0.5 * s / (bump_width * bump_width));
  return v;
}

void RadialPotential::add_gradient(std::span<const double> r, double scale, std::span<double> out) const {
  double coef = quadratic;
  if (bump_amplitude != 0.0) {
    const double w2 = bump_width * bump_width;
    coef -= bump_amplitude * std::exp(-0.5 * squared_norm(r) / w2) / w2;
  }
  for (std::size_t k = 0; k < r.size(); ++k) out[k] += scale * coef * r[k];
}

Eigen::MatrixXd RadialPotential::hessian(std::span<const double> r) const {
  const auto d = static_cast<Eigen::Index>(r.size());
  Eigen::MatrixXd h = quadratic * Eigen::MatrixXd::Identity(d, d);
  if (bump_amplitude != 0.0) {
    const double w2 = bump_width * bump_width;
    const double e = bump_amplitude * std::exp(-0.5 * squared_norm(r) / w2);
    Eigen::Map<const Eigen::VectorXd> rv(r.data(), d);
    h += e * (rv * rv.transpose() / (w2 * w2) - Eigen::MatrixXd::Identity(d, d) / w2);
  }
  return h;
}

double RadialPotential::hessian_lower_bound() const {
  const double scale = bump_amplitude / (bump_width * bump_width);
  return quadratic + (bump_amplitude >= 0.0 ? -scale : kBumpCurvaturePeak * scale);
}

double RadialPotential::hessian_upper_bound() const {
  const double scale = bump_amplitude / (bump_width * bump_width);
  return quadratic + (bump_amplitude >= 0.0 ? kBumpCurvaturePeak * scale : -scale);
}

PathSegment::PathSegment(double memory, double dt, std::span<const double> initial_history) {
  require(dt > 0.0 && memory >= 0.0, "segment needs dt > 0 and r0 >= 0");
  const double ratio = memory / dt;
  const auto lags = static_cast<std::size_t>(std::llround(ratio));
  require(std::abs(ratio - static_cast<double>(lags)) <= 1e-9 * std::max(1.0, ratio),
          "memory length must be an exact multiple of dt");
  require(initial_history.size() == lags + 1, "segment history must have floor(r0/dt) + 1 entries");
  history_.assign(initial_history.begin(), initial_history.end());
  head_ = history_.size() - 1;
}

void PathSegment::push(double value) noexcept {
  head_ = (head_ + 1) % history_.size();
  history_[head_] = value;
}

std::vector<double> PathSegment::values() const {
  std::vector<double> out(history_.size());
  for (std::size_t k = 0; k < out.size(); ++k) out[k] = history_[(head_ + 1 + k) % history_.size()];
  return out;
}

Model::Model(ModelKind kind, std::size_t dim, std::size_t noise_dim, double memory, bool additive,
             std::variant<std::monostate, GranularParams, DegenerateParams, PorousParams, LandauParams,
                          LinearParams, DelayParams>
                 params)
    : kind_(kind), dim_(dim), noise_dim_(noise_dim), memory_(memory), additive_(additive),
      params_(std::move(params)) {}

Model Model::granular(std::size_t dim, GranularParams p) {
  require(dim >= 1, "granular model needs d >= 1");
  require(p.confinement.bump_width > 0.0 && p.interaction.bump_width > 0.0, "bump width must be positive");
  require(std::isfinite(p.noise) && p.noise >= 0.0, "noise scale must be finite and nonnegative");
  const double noise = p.noise;
  Model m(ModelKind::kGranular, dim, dim, 0.0, true, std::move(p));
  const auto d = static_cast<Eigen::Index>(dim);
  m.constant_noise_ = noise * Eigen::MatrixXd::Identity(d, d);
  return m;
}

Model Model::degenerate_hamiltonian(DegenerateParams p) {
  const auto d1 = p.coupling_b.rows();
  const auto d2 = p.coupling_b.cols();
  require(d1 >= 1 && d2 >= 1, "degenerate model needs a nonempty B");
  require(p.friction > 0.0, "degenerate model needs friction beta > 0");
  const Eigen::MatrixXd bbt = p.coupling_b * p.coupling_b.transpose();
  Eigen::FullPivLU<Eigen::MatrixXd> lu(bbt);
  require(lu.isInvertible(), "degenerate model needs B B^T invertible");
  const Eigen::MatrixXd gain = p.friction * p.coupling_b.transpose() * lu.inverse();
  const auto dim = static_cast<std::size_t>(d1 + d2);
  Model m(ModelKind::kDegenerateHamiltonian, dim, static_cast<std::size_t>(d2), 0.0, true, std::move(p));
  m.degenerate_gain_ = gain;
  m.constant_noise_ = Eigen::MatrixXd::Zero(d1 + d2, d2);
  m.constant_noise_.bottomRows(d2) = std::sqrt(2.0) * Eigen::MatrixXd::Identity(d2, d2);
  return m;
}

Model Model::porous(PorousParams p) {
  require(p.floor_scale > 0.0, "porous density floor must be positive");
  return Model(ModelKind::kPorous, 1, 1, 0.0, false, p);
}

Model Model::landau(LandauParams p) {
  require(p.gamma >= -3.0 && p.gamma <= 1.0, "landau exponent gamma must lie in [-3, 1]");
  return Model(ModelKind::kLandau, 3, 3, 0.0, false, p);
}

Model Model::linear(LinearParams p) {
  const auto d = p.state.rows();
  require(d >= 1 && p.state.cols() == d, "A must be square");
  require(p.interaction.rows() == d && p.interaction.cols() == d, "C must be d x d");
  require(p.noise.rows() == d && p.noise.cols() >= 1, "Sigma must be d x m");
  const auto m_dim = static_cast<std::size_t>(p.noise.cols());
  Eigen::MatrixXd noise = p.noise;
  Model m(ModelKind::kLinearMeanField, static_cast<std::size_t>(d), m_dim, 0.0, true, std::move(p));
  m.constant_noise_ = noise;
  return m;
}

Model Model::delay(DelayParams p) {
  require(p.memory > 0.0, "delay model needs r0 > 0");
  const double memory = p.memory;
  const bool additive = p.noise_slope == 0.0;
  const double base = p.noise_base;
  Model m(ModelKind::kDelay, 1, 1, memory, additive, p);
  m.constant_noise_ = Eigen::MatrixXd::Constant(1, 1, base);
  return m;
}

Model Model::zero(std::size_t dim) {
  require(dim >= 1, "zero model needs d >= 1");
  Model m(ModelKind::kZero, dim, dim, 0.0, true, std::monostate{});
  const auto d = static_cast<Eigen::Index>(dim);
  m.constant_noise_ = Eigen::MatrixXd::Zero(d, d);
  return m;
}

MeasureContext Model::prepare(std::span<const double> coords, std::size_t count) const {
  require(count >= 1 && coords.size() == count * dim_, "measure does not match model dimension");
  MeasureContext ctx;
  ctx.count = count;
  ctx.mean.resize(static_cast<Eigen::Index>(dim_));
  for (std::size_t k = 0; k < dim_; ++k)
    ctx.mean[static_cast<Eigen::Index>(k)] =
        ordered_sum(count, [&](std::size_t i) { return coords[i * dim_ + k]; }) / static_cast<double>(count);

  const bool pairwise =
      kind_ == ModelKind::kLandau ||
      (kind_ == ModelKind::kGranular && !std::get<GranularParams>(params_).interaction.is_quadratic());
  if (pairwise) ctx.points.assign(coords.begin(), coords.end());

  if (kind_ == ModelKind::kPorous) {
    require(count >= 10, "porous diffusion needs at least 10 particles to estimate a density");
    ctx.density = std::make_shared<KernelDensity1d>(coords);
    double range = ctx.density->sample_max() - ctx.density->sample_min();
    if (!(range > 0.0)) range = 1.0;
    ctx.density_floor = std::get<PorousParams>(params_).floor_scale / range;
  }
  return ctx;
}

void Model::drift(double /*t*/, StateView x, const MeasureContext& ctx, std::span<double> out) const {
  require(x.now.size() == dim_ && out.size() == dim_, "dimension mismatch in drift");
  switch (kind_) {
    case ModelKind::kZero:
      std::fill(out.begin(), out.end(), 0.0);
      return;
    case ModelKind::kGranular: {
      const auto& p = std::get<GranularParams>(params_);
      std::fill(out.begin(), out.end(), 0.0);
      p.confinement.add_gradient(x.now, -1.0, out);
      if (p.interaction.is_quadratic()) {
        for (std::size_t k = 0; k < dim_; ++k)
          out[k] -= p.interaction.quadratic * (x.now[k] - ctx.mean[static_cast<Eigen::Index>(k)]);
      } else {
        std::vector<double> r(dim_);
        const double w = -1.0 / static_cast<double>(ctx.count);
        for (std::size_t j = 0; j < ctx.count; ++j) {
          for (std::size_t k = 0; k < dim_; ++k) r[k] = x.now[k] - ctx.points[j * dim_ + k];
          p.interaction.add_gradient(r, w, out);
        }
      }
      return;
    }
    case ModelKind::kDegenerateHamiltonian: {
      const auto& p = std::get<DegenerateParams>(params_);
      const auto d1 = p.coupling_b.rows();
      const auto d2 = p.coupling_b.cols();
      Eigen::Map<const Eigen::VectorXd> pos(x.now.data(), d1);
      Eigen::Map<const Eigen::VectorXd> vel(x.now.data() + d1, d2);
      const Eigen::VectorXd grad_v = p.confinement * pos + p.theta * (pos - ctx.mean.head(d1));
      Eigen::Map<Eigen::VectorXd> o(out.data(), d1 + d2);
      o.head(d1) = p.coupling_b * vel;
      o.tail(d2) = -p.coupling_b.transpose() * grad_v - degenerate_gain_ * pos - vel;
      return;
    }
    case ModelKind::kPorous:
      out[0] = 0.0;
      return;
    case ModelKind::kLandau: {
      const double gamma = std::get<LandauParams>(params_).gamma;
      Eigen::Map<Eigen::VectorXd> o(out.data(), 3);
      o.setZero();
      double r[3];
      for (std::size_t j = 0; j < ctx.count; ++j) {
        for (std::size_t k = 0; k < 3; ++k) r[k] = x.now[k] - ctx.points[j * 3 + k];
        if (r[0] == 0.0 && r[1] == 0.0 && r[2] == 0.0) continue;
        o += landau_half_divergence(r, gamma);
      }
      o /= static_cast<double>(ctx.count);
      return;
    }
    case ModelKind::kLinearMeanField: {
      const auto& p = std::get<LinearParams>(params_);
      Eigen::Map<const Eigen::VectorXd> xv(x.now.data(), static_cast<Eigen::Index>(dim_));
      Eigen::Map<Eigen::VectorXd> o(out.data(), static_cast<Eigen::Index>(dim_));
      o.noalias() = p.state * xv;
      o.noalias() += p.interaction * ctx.mean;
      return;
    }
    case ModelKind::kDelay: {
      const auto& p = std::get<DelayParams>(params_);
      if (x.delayed.empty()) fail(ErrorKind::kInvalidArgument, "delay model needs a path segment");
      out[0] = -p.reversion * x.now[0] + p.delay_weight * x.delayed[0] + p.mean_weight * ctx.mean[0];
      return;
    }
  }
}

void Model::diffusion(double /*t*/, StateView x, const MeasureContext& ctx, Eigen::Ref<Eigen::MatrixXd> out) const {
  require(x.now.size() == dim_, "dimension mismatch in diffusion");
  require(out.rows() == static_cast<Eigen::Index>(dim_) && out.cols() == static_cast<Eigen::Index>(noise_dim_),
          "diffusion output must be d x m");
  switch (kind_) {
    case ModelKind::kPorous: {
      const double rho = std::max((*ctx.density)(x.now[0]), ctx.density_floor);
      out(0, 0) = std::sqrt(2.0) * rho;
      return;
    }
    case ModelKind::kLandau: {
      const double gamma = std::get<LandauParams>(params_).gamma;
      Eigen::Matrix3d avg = Eigen::Matrix3d::Zero();
      double r[3];
      for (std::size_t j = 0; j < ctx.count; ++j) {
        for (std::size_t k = 0; k < 3; ++k) r[k] = x.now[k] - ctx.points[j * 3 + k];
        if (r[0] == 0.0 && r[1] == 0.0 && r[2] == 0.0) continue;
        avg += landau_matrix(r, gamma);
      }
      avg /= static_cast<double>(ctx.count);
      Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> eig(avg);
      const Eigen::Vector3d ev = eig.eigenvalues();
      const double scale = std::max(1.0, avg.trace());
      if (ev.minCoeff() < -1e-10 * scale) fail(ErrorKind::kNumerical, "psd violation in averaged Landau matrix");
      out = eig.eigenvectors() * ev.cwiseMax(0.0).cwiseSqrt().asDiagonal() * eig.eigenvectors().transpose();
      return;
    }
    case ModelKind::kDelay: {
      const auto& p = std::get<DelayParams>(params_);
      double arg = x.now[0];
      if (p.noise_on_delay) {
        if (x.delayed.empty()) fail(ErrorKind::kInvalidArgument, "delay model needs a path segment");
        arg = x.delayed[0];
      }
      out(0, 0) = p.noise_base + p.noise_slope * std::tanh(arg);
      return;
    }
    default:
      out = constant_noise_;
      return;
  }
}

Eigen::VectorXd Model::drift(double t, std::span<const double> x, const EmpiricalMeasure& mu) const {
  if (memory_ > 0.0) fail(ErrorKind::kInvalidArgument, "missing segment: model has memory r0 > 0");
  Eigen::VectorXd out(static_cast<Eigen::Index>(dim_));
  drift(t, StateView{x, {}}, prepare(mu), {out.data(), dim_});
  return out;
}

Eigen::VectorXd Model::drift(double t, const PathSegment& segment, const EmpiricalMeasure& mu) const {
  require(dim_ == 1, "path segments are one-dimensional");
  const double now = segment.current();
  const double delayed = segment.delayed();
  Eigen::VectorXd out(1);
  drift(t, StateView{{&now, 1}, {&delayed, 1}}, prepare(mu), {out.data(), 1});
  return out;
}

Eigen::MatrixXd Model::diffusion(double t, std::span<const double> x, const EmpiricalMeasure& mu) const {
  if (memory_ > 0.0) fail(ErrorKind::kInvalidArgument, "missing segment: model has memory r0 > 0");
  Eigen::MatrixXd out(static_cast<Eigen::Index>(dim_), static_cast<Eigen::Index>(noise_dim_));
  diffusion(t, StateView{x, {}}, prepare(mu), out);
  return out;
}

Eigen::MatrixXd Model::diffusion(double t, const PathSegment& segment, const EmpiricalMeasure& mu) const {
  require(dim_ == 1, "path segments are one-dimensional");
  const double now = segment.current();
  const double delayed = segment.delayed();
  Eigen::MatrixXd out(1, 1);
  diffusion(t, StateView{{&now, 1}, {&delayed, 1}}, prepare(mu), out);
  return out;
}

bool Model::has_derivatives() const noexcept {
  return kind_ == ModelKind::kGranular || kind_ == ModelKind::kLinearMeanField || kind_ == ModelKind::kZero ||
         kind_ == ModelKind::kDegenerateHamiltonian;
}

Eigen::MatrixXd Model::drift_jacobian(double /*t*/, std::span<const double> x, const MeasureContext& ctx) const {
  const auto d = static_cast<Eigen::Index>(dim_);
  switch (kind_) {
    case ModelKind::kZero: return Eigen::MatrixXd::Zero(d, d);
    case ModelKind::kLinearMeanField: return std::get<LinearParams>(params_).state;
    case ModelKind::kGranular: {
      const auto& p = std::get<GranularParams>(params_);
      Eigen::MatrixXd j = -p.confinement.hessian(x);
      if (p.interaction.is_quadratic()) {
        j -= p.interaction.quadratic * Eigen::MatrixXd::Identity(d, d);
      } else {
        std::vector<double> r(dim_);
        Eigen::MatrixXd acc = Eigen::MatrixXd::Zero(d, d);
        for (std::size_t n = 0; n < ctx.count; ++n) {
          for (std::size_t k = 0; k < dim_; ++k) r[k] = x[k] - ctx.points[n * dim_ + k];
          acc += p.interaction.hessian(r);
        }
        j -= acc / static_cast<double>(ctx.count);
      }
      return j;
    }
    case ModelKind::kDegenerateHamiltonian: {
      const auto& p = std::get<DegenerateParams>(params_);
      const auto d1 = p.coupling_b.rows();
      const auto d2 = p.coupling_b.cols();
      Eigen::MatrixXd j = Eigen::MatrixXd::Zero(d, d);
      j.topRightCorner(d1, d2) = p.coupling_b;
      j.bottomLeftCorner(d2, d1) = -(p.confinement + p.theta) * p.coupling_b.transpose() - degenerate_gain_;
      j.bottomRightCorner(d2, d2) = -Eigen::MatrixXd::Identity(d2, d2);
      return j;
    }
    default:
      fail(ErrorKind::kInvalidArgument, "model " + to_string(kind_) + " has no registered derivatives");
  }
}

Eigen::MatrixXd Model::lions_kernel(double /*t*/, std::span<const double> x, std::span<const double> z,
                                    const MeasureContext& /*ctx*/) const {
  const auto d = static_cast<Eigen::Index>(dim_);
  switch (kind_) {
    case ModelKind::kZero: return Eigen::MatrixXd::Zero(d, d);
    case ModelKind::kLinearMeanField: return std::get<LinearParams>(params_).interaction;
    case ModelKind::kGranular: {
      // b(x, mu) = -grad V(x) - int grad U(x - z) mu(dz), so D^L b(x, .)(z) = Hess U(x - z).
      const auto& p = std::get<GranularParams>(params_);
      std::vector<double> r(dim_);
      for (std::size_t k = 0; k < dim_; ++k) r[k] = x[k] - z[k];
      return p.interaction.hessian(r);
    }
    case ModelKind::kDegenerateHamiltonian: {
      const auto& p = std::get<DegenerateParams>(params_);
      const auto d1 = p.coupling_b.rows();
      const auto d2 = p.coupling_b.cols();
      Eigen::MatrixXd k = Eigen::MatrixXd::Zero(d, d);
      k.bottomLeftCorner(d2, d1) = p.theta * p.coupling_b.transpose();
      return k;
    }
    default:
      fail(ErrorKind::kInvalidArgument, "model " + to_string(kind_) + " has no registered derivatives");
  }
}

double Model::declared_lambda() const {
  require(kind_ == ModelKind::kGranular, "curvature metadata exists only for the granular family");
  const auto& p = std::get<GranularParams>(params_);
  return p.lambda.value_or(p.confinement.hessian_lower_bound());
}

double Model::declared_delta1() const {
  require(kind_ == ModelKind::kGranular, "curvature metadata exists only for the granular family");
  const auto& p = std::get<GranularParams>(params_);
  // Hess W(x, y) for W = U(x - y) has spectrum {0} u 2 spec(Hess U).
  return p.delta1.value_or(std::min(0.0, 2.0 * p.interaction.hessian_lower_bound()));
}

double Model::declared_delta2() const {
  require(kind_ == ModelKind::kGranular, "curvature metadata exists only for the granular family");
  const auto& p = std::get<GranularParams>(params_);
  return p.delta2.value_or(2.0 * std::max(std::abs(p.interaction.hessian_lower_bound()),
                                          std::abs(p.interaction.hessian_upper_bound())));
}

RateRecord Model::declared_rate() const {
  switch (kind_) {
    case ModelKind::kGranular:
      return {declared_lambda() + declared_delta1() - declared_delta2(), "lambda + delta1 - delta2"};
    case ModelKind::kDegenerateHamiltonian: {
      const auto& p = std::get<DegenerateParams>(params_);
      const double beta = p.friction;
      const double root = std::sqrt(2.0 + 2.0 * beta + beta * beta);
      const double theta1 = p.theta1.value_or(p.theta * (0.5 + root));
      const double theta2 = p.theta2.value_or(0.5 * p.theta * root);
      const double denom = 2.0 + 2.0 * beta + beta * beta + std::sqrt(beta * beta * beta * beta + 4.0);
      return {2.0 * (beta - theta1 - theta2) / denom,
              "kappa = 2(beta - theta1 - theta2) / (2 + 2 beta + beta^2 + sqrt(beta^4 + 4))"};
    }
    case ModelKind::kLinearMeanField: {
      const auto& p = std::get<LinearParams>(params_);
      Eigen::EigenSolver<Eigen::MatrixXd> fluct(p.state, false);
      Eigen::EigenSolver<Eigen::MatrixXd> mean(p.state + p.interaction, false);
      const double rate = std::min(-fluct.eigenvalues().real().maxCoeff(), -mean.eigenvalues().real().maxCoeff());
      return {rate, "min(-max Re spec(A), -max Re spec(A + C))"};
    }
    default:
      fail(ErrorKind::kInvalidArgument, "model " + to_string(kind_) + " has no declared rate");
  }
}

bool Model::order_conditions_hold() const {
  require(kind_ == ModelKind::kDelay, "order conditions are defined for the delay family");
  const auto& p = std::get<DelayParams>(params_);
  return p.delay_weight >= 0.0 && p.mean_weight >= 0.0 && !(p.noise_on_delay && p.noise_slope != 0.0);
}

Eigen::MatrixXd landau_matrix(std::span<const double> y, double gamma) {
  const auto d = static_cast<Eigen::Index>(y.size());
  const double r2 = squared_norm(y);
  if (r2 == 0.0) return Eigen::MatrixXd::Zero(d, d);
  Eigen::Map<const Eigen::VectorXd> v(y.data(), d);
  // |y|^{2+gamma} (I - y y^T/|y|^2) = |y|^gamma (|y|^2 I - y y^T)
  return std::pow(r2, 0.5 * gamma) * (r2 * Eigen::MatrixXd::Identity(d, d) - v * v.transpose());
}

Eigen::MatrixXd landau_sqrt_matrix(std::span<const double> y, double gamma) {
  const auto d = static_cast<Eigen::Index>(y.size());
  const double r2 = squared_norm(y);
  if (r2 == 0.0) return Eigen::MatrixXd::Zero(d, d);
  Eigen::Map<const Eigen::VectorXd> v(y.data(), d);
  const Eigen::MatrixXd proj = Eigen::MatrixXd::Identity(d, d) - v * v.transpose() / r2;
  return std::pow(r2, 0.5 * (1.0 + 0.5 * gamma)) * proj;
}

Eigen::VectorXd landau_half_divergence(std::span<const double> y, double gamma) {
  const auto d = static_cast<Eigen::Index>(y.size());
  const double r2 = squared_norm(y);
  Eigen::Map<const Eigen::VectorXd> v(y.data(), d);
  if (r2 == 0.0) return Eigen::VectorXd::Zero(d);
  return -0.5 * static_cast<double>(d - 1) * std::pow(r2, 0.5 * gamma) * v;
}

CurvatureCheck check_declared_curvature(const Model& model, std::size_t samples, std::uint64_t seed) {
  require(model.kind() == ModelKind::kGranular, "curvature check applies to the granular family");
  const auto& p = std::get<GranularParams>(model.params());
  const std::size_t d = model.dim();
  const double radius =
      3.0 * std::max({1.0, p.confinement.bump_width, p.interaction.bump_width});
  const NormalStream stream(seed, StreamTag::kAux);
  CurvatureCheck out;
  out.samples = samples;
  out.min_hess_v = std::numeric_limits<double>::infinity();
  out.min_hess_w = std::numeric_limits<double>::infinity();
  std::vector<double> x(d), y(d), r(d);
  const auto dd = static_cast<Eigen::Index>(d);
  for (std::size_t s = 0; s < samples; ++s) {
    for (std::size_t k = 0; k < d; ++k) {
      x[k] = radius * (2.0 * stream.uniform(s, 2 * k) - 1.0);
      y[k] = radius * (2.0 * stream.uniform(s, 2 * k + 1) - 1.0);
      r[k] = x[k] - y[k];
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> ev(p.confinement.hessian(x), Eigen::EigenvaluesOnly);
    out.min_hess_v = std::min(out.min_hess_v, ev.eigenvalues().minCoeff());
    const Eigen::MatrixXd h = p.interaction.hessian(r);
    Eigen::MatrixXd hw(2 * dd, 2 * dd);
    hw << h, -h, -h, h;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> ew(hw, Eigen::EigenvaluesOnly);
    out.min_hess_w = std::min(out.min_hess_w, ew.eigenvalues().minCoeff());
    out.max_norm_hess_w = std::max(out.max_norm_hess_w, ew.eigenvalues().cwiseAbs().maxCoeff());
  }
  constexpr double kSlack = 1e-8;
  out.ok = out.min_hess_v >= model.declared_lambda() - kSlack && out.min_hess_w >= model.declared_delta1() - kSlack &&
           out.max_norm_hess_w <= model.declared_delta2() + kSlack;
  return out;
}

}  // namespace mvsde
