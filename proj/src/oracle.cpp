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

#include "mvsde/oracle.hpp"

#include <unsupported/Eigen/MatrixFunctions>
#include <algorithm>
#include <cmath>
#include <limits>

#include "mvsde/error.hpp"

namespace mvsde {

namespace {

const LinearParams& linear_params(const Model& m) {
  require(m.kind() == ModelKind::kLinearMeanField, "the Gaussian oracle needs a linear_meanfield model");
  return std::get<LinearParams>(m.params());
}

double max_real_eig(const Eigen::MatrixXd& a) {
  Eigen::EigenSolver<Eigen::MatrixXd> es(a, false);
  return es.eigenvalues().real().maxCoeff();
}

void check_psd(const Eigen::MatrixXd& v, const char* what) {
  const double scale = std::max(1.0, v.cwiseAbs().maxCoeff());
  require((v - v.transpose()).cwiseAbs().maxCoeff() <= 1e-12 * scale, std::string(what) + ": covariance not symmetric");
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (v + v.transpose()), Eigen::EigenvaluesOnly);
  if (es.eigenvalues().minCoeff() < -1e-12 * scale)
    fail(ErrorKind::kInvalidArgument, std::string(what) + ": covariance not PSD");
}

Eigen::MatrixXd lyapunov(const Eigen::MatrixXd& a, const Eigen::MatrixXd& q) {
  // A V + V A^T = -Q via the Kronecker form (I (x) A + A (x) I) vec V = -vec Q.
  const auto d = a.rows();
  Eigen::MatrixXd k = Eigen::MatrixXd::Zero(d * d, d * d);
  const Eigen::MatrixXd id = Eigen::MatrixXd::Identity(d, d);
  for (Eigen::Index r = 0; r < d; ++r)
    for (Eigen::Index c = 0; c < d; ++c) {
      k.block(r * d, c * d, d, d) += id(r, c) * a;
      k.block(r * d, c * d, d, d) += a(r, c) * id;
    }
  const Eigen::VectorXd rhs = -Eigen::Map<const Eigen::VectorXd>(q.data(), d * d);
  const Eigen::VectorXd sol = k.fullPivLu().solve(rhs);
  Eigen::MatrixXd v = Eigen::Map<const Eigen::MatrixXd>(sol.data(), d, d);
  return 0.5 * (v + v.transpose());
}

}  // namespace

void GaussianState::validate() const {
  require(mean.size() >= 1 && cov.rows() == mean.size() && cov.cols() == mean.size(),
          "gaussian state: mean and covariance dimensions disagree");
  check_psd(cov, "gaussian state");
}

Eigen::MatrixXd psd_sqrt(const Eigen::MatrixXd& m) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (m + m.transpose()));
  return es.eigenvectors() * es.eigenvalues().cwiseMax(0.0).cwiseSqrt().asDiagonal() * es.eigenvectors().transpose();
}

GaussianState evolve_gaussian(const Model& linear, const GaussianState& g0, double t, GaussianEvolution method,
                              double h) {
  const auto& p = linear_params(linear);
  g0.validate();
  require(g0.mean.size() == p.state.rows(), "gaussian state dimension does not match the model");
  require(t >= 0.0, "evolution time must be nonnegative");
  if (t == 0.0) return g0;
  const Eigen::MatrixXd& a = p.state;
  const Eigen::MatrixXd ac = p.state + p.interaction;
  const Eigen::MatrixXd q = p.noise * p.noise.transpose();
  const auto d = a.rows();

  if (d == 1) {
    // Scalar closed form.
    const double av = a(0, 0);
    const double s2 = q(0, 0);
    GaussianState g;
    g.mean = Eigen::VectorXd::Constant(1, std::exp(ac(0, 0) * t) * g0.mean[0]);
    const double e2 = std::exp(2.0 * av * t);
    const double noise = av == 0.0 ? s2 * t : s2 * std::expm1(2.0 * av * t) / (2.0 * av);
    g.cov = Eigen::MatrixXd::Constant(1, 1, e2 * g0.cov(0, 0) + noise);
    return g;
  }

  if (method == GaussianEvolution::kExact) {
    GaussianState g;
    g.mean = (ac * t).exp() * g0.mean;
    const Eigen::MatrixXd ea = (a * t).exp();
    if (max_real_eig(a) < 0.0) {
      const Eigen::MatrixXd vinf = lyapunov(a, q);
      g.cov = vinf + ea * (g0.cov - vinf) * ea.transpose();
    } else {
      // Van Loan block exponential for the noise integral.
      Eigen::MatrixXd blk = Eigen::MatrixXd::Zero(2 * d, 2 * d);
      blk.topLeftCorner(d, d) = -a;
      blk.topRightCorner(d, d) = q;
      blk.bottomRightCorner(d, d) = a.transpose();
      const Eigen::MatrixXd f = (blk * t).exp();
      const Eigen::MatrixXd f22t = f.bottomRightCorner(d, d).transpose();
      g.cov = ea * g0.cov * ea.transpose() + f22t * f.topRightCorner(d, d);
    }
    g.cov = 0.5 * (g.cov + g.cov.transpose());
    return g;
  }

  require(h > 0.0, "ODE step must be positive");
  const auto steps = static_cast<std::size_t>(std::ceil(t / h - 1e-9));
  const double dt = t / static_cast<double>(steps);
  Eigen::VectorXd m = g0.mean;
  Eigen::MatrixXd v = g0.cov;
  auto fv = [&](const Eigen::MatrixXd& x) -> Eigen::MatrixXd { return a * x + x * a.transpose() + q; };
  for (std::size_t k = 0; k < steps; ++k) {
    const Eigen::VectorXd m1 = ac * m;
    const Eigen::VectorXd m2 = ac * (m + 0.5 * dt * m1);
    const Eigen::VectorXd m3 = ac * (m + 0.5 * dt * m2);
    const Eigen::VectorXd m4 = ac * (m + dt * m3);
    m += dt / 6.0 * (m1 + 2.0 * m2 + 2.0 * m3 + m4);
    const Eigen::MatrixXd v1 = fv(v);
    const Eigen::MatrixXd v2 = fv(v + 0.5 * dt * v1);
    const Eigen::MatrixXd v3 = fv(v + 0.5 * dt * v2);
    const Eigen::MatrixXd v4 = fv(v + dt * v3);
    v += dt / 6.0 * (v1 + 2.0 * v2 + 2.0 * v3 + v4);
  }
  return {m, 0.5 * (v + v.transpose())};
}

double gaussian_w2(const GaussianState& g1, const GaussianState& g2) {
  require(g1.mean.size() == g2.mean.size(), "gaussian_w2: dimensions differ");
  g1.validate();
  g2.validate();
  const Eigen::MatrixXd r2 = psd_sqrt(g2.cov);
  const Eigen::MatrixXd cross = psd_sqrt(r2 * g1.cov * r2);
  const double bures = std::max(0.0, (g1.cov + g2.cov - 2.0 * cross).trace());
  return std::sqrt((g1.mean - g2.mean).squaredNorm() + bures);
}

double gaussian_kl(const GaussianState& g1, const GaussianState& g2) {
  require(g1.mean.size() == g2.mean.size(), "gaussian_kl: dimensions differ");
  g1.validate();
  g2.validate();
  Eigen::LLT<Eigen::MatrixXd> l2(g2.cov);
  const double scale2 = std::max(1.0, g2.cov.trace());
  if (l2.info() != Eigen::Success || l2.matrixL().toDenseMatrix().diagonal().minCoeff() <= 1e-14 * scale2)
    fail(ErrorKind::kNumerical, "gaussian_kl: singular covariance of the reference law");
  Eigen::LLT<Eigen::MatrixXd> l1(g1.cov);
  if (l1.info() != Eigen::Success || l1.matrixL().toDenseMatrix().diagonal().minCoeff() <= 0.0)
    return std::numeric_limits<double>::infinity();
  const auto d = static_cast<double>(g1.mean.size());
  const Eigen::VectorXd dm = g2.mean - g1.mean;
  const double tr = l2.solve(g1.cov).trace();
  const double quad = dm.dot(l2.solve(dm));
  const double logdet2 = 2.0 * l2.matrixL().toDenseMatrix().diagonal().array().log().sum();
  const double logdet1 = 2.0 * l1.matrixL().toDenseMatrix().diagonal().array().log().sum();
  return 0.5 * (tr + quad - d + logdet2 - logdet1);
}

double log_harnack_phi(const LogHarnackConstants& c, double s, double t) {
  require(t > s, "log_harnack_phi needs t > s");
  const double delta = t - s;
  const double first = c.kappa1 == 0.0 ? 1.0 / delta : c.kappa1 / -std::expm1(-c.kappa1 * delta);
  const double second = t * c.kappa2 * c.kappa2 * std::exp(2.0 * delta * (c.kappa1 + c.kappa2)) / 2.0;
  return c.lambda * c.lambda * (first + second);
}

LogHarnackConstants log_harnack_constants(const Model& linear) {
  const auto& p = linear_params(linear);
  require(p.noise.rows() == p.noise.cols(), "log-Harnack constants need a square Sigma");
  LogHarnackConstants c;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> sym(0.5 * (p.state + p.state.transpose()), Eigen::EigenvaluesOnly);
  // The constants must be non-negative: with kappa1 < 0 the first term of phi
  // decays faster than the mean gap under A + C and the bound fails.
  c.kappa1 = std::max(0.0, 2.0 * sym.eigenvalues().maxCoeff());
  Eigen::JacobiSVD<Eigen::MatrixXd> svd_c(p.interaction);
  c.kappa2 = 2.0 * svd_c.singularValues()(0);
  Eigen::JacobiSVD<Eigen::MatrixXd> svd_s(p.noise);
  const double smin = svd_s.singularValues().minCoeff();
  require(smin > 0.0, "log-Harnack constants need an invertible Sigma");
  c.lambda = 1.0 / smin;
  return c;
}

GaussianState invariant_gaussian(const Model& linear) {
  const auto& p = linear_params(linear);
  if (!(max_real_eig(p.state) < 0.0) || !(max_real_eig(p.state + p.interaction) < 0.0))
    fail(ErrorKind::kNumerical, "no invariant law: A and A + C must both be stable");
  const auto d = p.state.rows();
  return {Eigen::VectorXd::Zero(d), lyapunov(p.state, p.noise * p.noise.transpose())};
}

Model linearize(const Model& model) {
  if (model.kind() == ModelKind::kLinearMeanField) return model;
  const bool affine =
      model.kind() == ModelKind::kDegenerateHamiltonian ||
      (model.kind() == ModelKind::kGranular && std::get<GranularParams>(model.params()).confinement.is_quadratic() &&
       std::get<GranularParams>(model.params()).interaction.is_quadratic());
  require(affine, "model " + to_string(model.kind()) + " has no exact linear form");
  const auto d = static_cast<Eigen::Index>(model.dim());
  const std::vector<double> origin(model.dim(), 0.0);
  const MeasureContext ctx = model.prepare(origin, 1);
  LinearParams lp;
  lp.state = model.drift_jacobian(0.0, origin, ctx);
  lp.interaction = model.lions_kernel(0.0, origin, origin, ctx);
  lp.noise = Eigen::MatrixXd(d, static_cast<Eigen::Index>(model.noise_dim()));
  model.diffusion(0.0, StateView{origin, {}}, ctx, lp.noise);
  return Model::linear(std::move(lp));
}

}  // namespace mvsde
