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
#include <string>
#include <vector>

#include "mvsde/models.hpp"
#include "mvsde/oracle.hpp"
#include "mvsde/simulate.hpp"

namespace mvsde {

// Initial-law perturbations phi: R^d -> R^d.
struct PerturbationField {
  enum class Kind { kConstant, kLinear, kBump };
  Kind kind = Kind::kConstant;
  Eigen::VectorXd direction;  // e for constant and bump
  Eigen::MatrixXd matrix;     // M for linear
  Eigen::VectorXd center;     // bump center
  double width = 1.0;         // bump radius

  static PerturbationField constant(Eigen::VectorXd e);
  static PerturbationField linear(Eigen::MatrixXd m);
  // e * exp(1 - 1 / (1 - |x - c|^2 / w^2)) inside the ball, 0 outside.
  static PerturbationField bump(Eigen::VectorXd e, Eigen::VectorXd c, double w);

  void apply(std::span<const double> x, std::span<double> out) const;
  std::string describe() const;
};

struct Observable {
  enum class Kind { kCoordinate, kQuadratic, kBounded, kConstant };
  Kind kind = Kind::kCoordinate;
  std::size_t axis = 0;
  double scale = 1.0;  // tanh(x_axis / scale) when bounded; the value when constant

  static Observable coordinate(std::size_t axis);
  static Observable quadratic();
  static Observable bounded(std::size_t axis, double scale);
  static Observable constant_value(double c);

  double operator()(std::span<const double> x) const;
  std::string describe() const;
};

// g in C^1([0, T]) with g(0) = 0 and g(T) = 1.
struct WeightFunction {
  enum class Kind { kLinear, kSineSquared };
  Kind kind = Kind::kLinear;
  double value(double t, double horizon) const;
  double derivative(double t, double horizon) const;
  std::string describe() const;
};

struct SensitivityConfig {
  std::size_t n_samples = 100000;
  std::size_t batch_size = 10000;  // particles per interacting system
  double dt = 2e-3;
  double horizon = 1.0;
  std::uint64_t seed = 1;

  void validate() const;
  std::size_t batches() const { return (n_samples + batch_size - 1) / batch_size; }
};

// Seed of batch b; batches are independent interacting systems.
std::uint64_t batch_seed(std::uint64_t seed, std::size_t batch);

struct VariationalPath {
  std::vector<double> times;
  std::vector<Eigen::VectorXd> mean_v;  // ensemble mean of v_t at each recorded time
  std::vector<double> final_x;          // N x d
  std::vector<double> final_v;          // N x d
};

// Euler integration of the variational equation
//   dv = (grad b(X) v + E<D^L b(y, .)(X), v>|_{y = X}) dt,  v_0 = phi(X_0),
// alongside the particle system; the expectation is the ensemble average.
// Needs registered derivatives and additive noise.
VariationalPath variational_flow(const Model& model, ParticleEnsemble init, const PerturbationField& phi,
                                 const SimConfig& cfg);

struct BismutEstimate {
  double value = 0.0;
  double std_error = 0.0;  // max of the iid and the batch-means estimate
  std::size_t n_samples = 0;
  WeightFunction g;
};

// Monte Carlo estimate of D^L_phi (P_T f)(mu0) as the mean of
// f(X_T) sum_k <sigma^{-1} (g'(t_k) v_k + g(t_k) m_k), dW_k>, where
// m_k = E<D^L b(y, .)(X_k), v_k>|_{y = X_k}. One estimate per weight function,
// all from the same paths.
std::vector<BismutEstimate> bismut_derivative(const Model& model, const Observable& f, const PerturbationField& phi,
                                              const GaussianState& mu0, const std::vector<WeightFunction>& weights,
                                              const SensitivityConfig& cfg);

struct FdEstimate {
  double value = 0.0;
  double std_error = 0.0;
  double eps = 0.0;
  double half_step_value = 0.0;  // estimate at eps / 2
  double half_step_stderr = 0.0;
  bool richardson_ok = false;
};

// Central difference of P_T f between the pushed-forward initial ensembles
// {x + eps phi(x)} and {x - eps phi(x)} with common random numbers, plus the
// same at eps / 2. eps <= 0 selects 1e-2 times the mean coordinate std of mu0.
FdEstimate fd_lions_derivative(const Model& model, const Observable& f, const PerturbationField& phi,
                               const GaussianState& mu0, double eps, const SensitivityConfig& cfg);

}  // namespace mvsde
