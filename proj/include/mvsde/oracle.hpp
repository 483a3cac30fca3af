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

#include "mvsde/models.hpp"

namespace mvsde {

struct GaussianState {
  Eigen::VectorXd mean;
  Eigen::MatrixXd cov;

  std::size_t dim() const noexcept { return static_cast<std::size_t>(mean.size()); }
  // Checks symmetry to 1e-12 and eigenvalues >= -1e-12 (relative to trace).
  void validate() const;
};

enum class GaussianEvolution {
  kRk4,   // fixed step, h <= 1e-4
  kExact  // closed form: matrix exponentials and the Lyapunov solution
};

// Law at time t of the linear mean-field equation dX = (AX + C E[X]) dt + Sigma dW
// started from g0: m' = (A + C) m, V' = AV + VA^T + Sigma Sigma^T.
GaussianState evolve_gaussian(const Model& linear, const GaussianState& g0, double t,
                              GaussianEvolution method = GaussianEvolution::kRk4, double h = 1e-4);

// Bures-Wasserstein distance.
double gaussian_w2(const GaussianState& g1, const GaussianState& g2);
// KL(g1 | g2); +inf when V1 is singular and V2 is not.
double gaussian_kl(const GaussianState& g1, const GaussianState& g2);

struct LogHarnackConstants {
  double kappa1 = 0.0;
  double kappa2 = 0.0;
  double lambda = 1.0;
};

// phi(s, t) = lambda^2 (kappa1 / (1 - e^{-kappa1 (t-s)}) + t kappa2^2 exp(2 (t-s)(kappa1 + kappa2)) / 2).
double log_harnack_phi(const LogHarnackConstants& c, double s, double t);

// Constants of the monotonicity condition
//   2<b(x,mu) - b(y,nu), x - y> <= kappa1 |x-y|^2 + kappa2 |x-y| W2(mu, nu)
// for a linear model: kappa1 = max(0, 2 lambda_max(sym A)), kappa2 = 2 ||C||_2,
// lambda = 1 / sigma_min(Sigma).
LogHarnackConstants log_harnack_constants(const Model& linear);

GaussianState invariant_gaussian(const Model& linear);

// Linear mean-field model with the same law as model when the drift is affine
// and the noise additive: granular with quadratic V and W, degenerate
// Hamiltonian, linear.
Model linearize(const Model& model);

// Symmetric PSD square root with eigenvalues clamped at 0.
Eigen::MatrixXd psd_sqrt(const Eigen::MatrixXd& m);

}  // namespace mvsde
