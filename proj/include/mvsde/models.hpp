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
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "mvsde/density.hpp"
#include "mvsde/measures.hpp"

namespace mvsde {

// U(r) = quadratic/2 |r|^2 + bump_amplitude exp(-|r|^2 / (2 bump_width^2)).
// Used for the confinement V(x) = U(x) and the pair interaction
// W(x, y) = U(x - y) of the granular family.
struct RadialPotential {
  double quadratic = 0.0;
  double bump_amplitude = 0.0;
  double bump_width = 1.0;

  bool is_quadratic() const noexcept { return bump_amplitude == 0.0; }
  double value(std::span<const double> r) const;
  void add_gradient(std::span<const double> r, double scale, std::span<double> out) const;
  Eigen::MatrixXd hessian(std::span<const double> r) const;
  // Analytic bounds on the eigenvalues of the Hessian over all of R^d.
  double hessian_lower_bound() const;
  double hessian_upper_bound() const;
};

struct GranularParams {
  RadialPotential confinement;
  RadialPotential interaction;
  double noise = 1.4142135623730951;  // sigma = noise * I
  // Declared curvature metadata: Hess V >= lambda, delta1 <= Hess W, |Hess W| <= delta2.
  std::optional<double> lambda;
  std::optional<double> delta1;
  std::optional<double> delta2;
};

// Stochastic Hamiltonian system on (x, y) in R^{d1} x R^{d2} with
// V(x, mu) = confinement/2 |x|^2 + theta/2 int |x - z_x|^2 mu(dz).
struct DegenerateParams {
  Eigen::MatrixXd coupling_b;  // d1 x d2, B B^T invertible
  double friction = 1.0;       // beta
  double theta = 0.0;
  double confinement = 0.0;
  std::optional<double> theta1;
  std::optional<double> theta2;
};

struct PorousParams {
  double floor_scale = 1e-6;  // rho_floor = floor_scale / (sample range)
};

struct LandauParams {
  double gamma = 0.0;
};

struct LinearParams {
  Eigen::MatrixXd state;        // A, d x d
  Eigen::MatrixXd interaction;  // C, d x d
  Eigen::MatrixXd noise;        // Sigma, d x m
};

// One-dimensional delay equation with memory r0:
//   b = -reversion xi(0) + delay_weight xi(-r0) + mean_weight E[xi(0)]
//   sigma = noise_base + noise_slope tanh(xi(0))       (or of xi(-r0) when
//   noise_on_delay is set, which breaks the order-preservation condition)
struct DelayParams {
  double reversion = 1.0;
  double delay_weight = 0.0;
  double mean_weight = 0.0;
  double noise_base = 1.0;
  double noise_slope = 0.0;
  bool noise_on_delay = false;
  double memory = 0.0;
};

enum class ModelKind { kGranular, kDegenerateHamiltonian, kPorous, kLandau, kLinearMeanField, kDelay, kZero };

std::string to_string(ModelKind kind);

// Measure-dependent quantities reduced once per step from an ensemble.
struct MeasureContext {
  std::size_t count = 0;
  Eigen::VectorXd mean;
  std::vector<double> points;                     // row-major, kept only for pairwise kinds
  std::shared_ptr<const KernelDensity1d> density;  // porous only
  double density_floor = 0.0;
};

// Current state plus, for memory models, the value r0 ago.
struct StateView {
  std::span<const double> now;
  std::span<const double> delayed;
};

// Sliding window of one particle's past over [t - r0, t].
class PathSegment {
 public:
  PathSegment(double memory, double dt, std::span<const double> initial_history);
  std::size_t length() const noexcept { return history_.size(); }
  double current() const noexcept { return history_[head_]; }
  double delayed() const noexcept { return history_[(head_ + 1) % history_.size()]; }
  void push(double value) noexcept;
  // Oldest first.
  std::vector<double> values() const;

 private:
  std::vector<double> history_;
  std::size_t head_ = 0;
};

struct RateRecord {
  double rate = 0.0;
  std::string formula;
};

class Model {
 public:
  static Model granular(std::size_t dim, GranularParams params);
  static Model degenerate_hamiltonian(DegenerateParams params);
  static Model porous(PorousParams params = {});
  static Model landau(LandauParams params);
  static Model linear(LinearParams params);
  static Model delay(DelayParams params);
  // b = 0, sigma = 0 in dimension dim.
  static Model zero(std::size_t dim);

  ModelKind kind() const noexcept { return kind_; }
  std::size_t dim() const noexcept { return dim_; }
  std::size_t noise_dim() const noexcept { return noise_dim_; }
  double memory_length() const noexcept { return memory_; }
  // True when sigma depends on neither state nor measure.
  bool additive_noise() const noexcept { return additive_; }

  const auto& params() const noexcept { return params_; }

  MeasureContext prepare(std::span<const double> coords, std::size_t count) const;
  MeasureContext prepare(const EmpiricalMeasure& mu) const {
    return prepare(mu.coords(), mu.size());
  }

  void drift(double t, StateView x, const MeasureContext& ctx, std::span<double> out) const;
  // out is d x m, column-major (Eigen default).
  void diffusion(double t, StateView x, const MeasureContext& ctx, Eigen::Ref<Eigen::MatrixXd> out) const;

  // Convenience forms.
  Eigen::VectorXd drift(double t, std::span<const double> x, const EmpiricalMeasure& mu) const;
  Eigen::VectorXd drift(double t, const PathSegment& segment, const EmpiricalMeasure& mu) const;
  Eigen::MatrixXd diffusion(double t, std::span<const double> x, const EmpiricalMeasure& mu) const;
  Eigen::MatrixXd diffusion(double t, const PathSegment& segment, const EmpiricalMeasure& mu) const;

  // Derivative data for the variational flow: grad_x b (d x d) and the
  // Lions-derivative kernel D^L b(x, mu)(z) (d x d). Available for granular,
  // linear and zero kinds.
  bool has_derivatives() const noexcept;
  Eigen::MatrixXd drift_jacobian(double t, std::span<const double> x, const MeasureContext& ctx) const;
  Eigen::MatrixXd lions_kernel(double t, std::span<const double> x, std::span<const double> z,
                               const MeasureContext& ctx) const;

  // Exponential rate the theory predicts for convergence to equilibrium.
  RateRecord declared_rate() const;

  // Declared Hessian bounds for the granular family (analytic defaults when
  // not given in the parameters).
  double declared_lambda() const;
  double declared_delta1() const;
  double declared_delta2() const;

  // Delay kind: whether the drift is monotone in the delayed value and the
  // measure, and sigma depends only on the current value.
  bool order_conditions_hold() const;

 private:
  Model(ModelKind kind, std::size_t dim, std::size_t noise_dim, double memory, bool additive,
        std::variant<std::monostate, GranularParams, DegenerateParams, PorousParams, LandauParams,
                     LinearParams, DelayParams>
            params);

  ModelKind kind_;
  std::size_t dim_;
  std::size_t noise_dim_;
  double memory_;
  bool additive_;
  std::variant<std::monostate, GranularParams, DegenerateParams, PorousParams, LandauParams, LinearParams,
               DelayParams>
      params_;
  Eigen::MatrixXd constant_noise_;
  Eigen::MatrixXd degenerate_gain_;  // beta B^T (B B^T)^{-1}
};

// Landau kernel a(y) = |y|^{2+gamma} (I - y y^T / |y|^2) and its closed-form
// square root |y|^{1+gamma/2} (I - y y^T / |y|^2).
Eigen::MatrixXd landau_matrix(std::span<const double> y, double gamma);
Eigen::MatrixXd landau_sqrt_matrix(std::span<const double> y, double gamma);
// b(y) = (1/2) div a(y) = -((d-1)/2) |y|^gamma y.
Eigen::VectorXd landau_half_divergence(std::span<const double> y, double gamma);

struct CurvatureCheck {
  std::size_t samples = 0;
  double min_hess_v = 0.0;
  double min_hess_w = 0.0;
  double max_norm_hess_w = 0.0;
  bool ok = false;
};

// Samples Hessians of V and W at random points and compares their
// eigenvalues with the declared lambda, delta1, delta2 (slack 1e-8).
CurvatureCheck check_declared_curvature(const Model& model, std::size_t samples = 1000,
                                        std::uint64_t seed = 7);

}  // namespace mvsde
