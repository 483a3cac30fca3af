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


#include <cmath>
#include <vector>

#include "doctest.h"
#include "mvsde/error.hpp"
#include "mvsde/sensitivity.hpp"

using namespace mvsde;

namespace {

Model linear1d(double a, double c, double s) {
  return Model::linear(LinearParams{Eigen::MatrixXd::Constant(1, 1, a), Eigen::MatrixXd::Constant(1, 1, c),
                                    Eigen::MatrixXd::Constant(1, 1, s)});
}

Model granular1d(double v, double w) {
  GranularParams p;
  p.confinement.quadratic = v;
  p.interaction.quadratic = w;
  return Model::granular(1, p);
}

GaussianState g1(double m, double v) { return {Eigen::VectorXd::Constant(1, m), Eigen::MatrixXd::Constant(1, 1, v)}; }

PerturbationField unit_shift() { return PerturbationField::constant(Eigen::VectorXd::Ones(1)); }

SensitivityConfig sens(std::size_t n, std::size_t batch, std::uint64_t seed) {
  SensitivityConfig c;
  c.n_samples = n;
  c.batch_size = batch;
  c.dt = 2e-3;
  c.horizon = 1.0;
  c.seed = seed;
  return c;
}

SimConfig sim(std::size_t n, double dt, double t_end) {
  SimConfig c;
  c.n = n;
  c.dt = dt;
  c.t_end = t_end;
  c.record_every = 10;
  return c;
}

const std::vector<WeightFunction> kWeights{{WeightFunction::Kind::kLinear}, {WeightFunction::Kind::kSineSquared}};

}  // namespace

TEST_SUITE("sensitivity") {
  TEST_CASE("variational flow of the ou process") {
    const auto cfg = sim(100, 1e-2, 1.0);
    const auto init = sample_gaussian(Eigen::VectorXd::Zero(1), Eigen::MatrixXd::Identity(1, 1), 100, 1);
    const auto path = variational_flow(linear1d(-1.0, 0.0, std::sqrt(2.0)), init, unit_shift(), cfg);
    // Explicit Euler of v' = -v: (1 - dt)^k, within O(dt) of e^{-t}.
    for (std::size_t k = 0; k < path.times.size(); ++k) {
      const auto steps = std::llround(path.times[k] / cfg.dt);
      CHECK(path.mean_v[k](0) == doctest::Approx(std::pow(1.0 - cfg.dt, steps)).epsilon(1e-12));
      CHECK(std::abs(path.mean_v[k](0) - std::exp(-path.times[k])) <= cfg.dt);
    }
  }

  TEST_CASE("zero perturbation gives zero flow") {
    const auto init = sample_gaussian(Eigen::VectorXd::Zero(1), Eigen::MatrixXd::Identity(1, 1), 50, 2);
    const auto path = variational_flow(granular1d(1.0, 0.5), init,
                                       PerturbationField::constant(Eigen::VectorXd::Zero(1)), sim(50, 1e-2, 0.5));
    for (double v : path.final_v) CHECK(v == 0.0);
  }

  TEST_CASE("mean interaction enters the variational mean") {
    const auto cfg = sim(200, 1e-2, 1.0);
    const auto init = sample_gaussian(Eigen::VectorXd::Zero(1), Eigen::MatrixXd::Identity(1, 1), 200, 3);
    const auto path = variational_flow(linear1d(-1.0, 0.5, std::sqrt(2.0)), init, unit_shift(), cfg);
    const auto steps = std::llround(path.times.back() / cfg.dt);
    CHECK(path.mean_v.back()(0) == doctest::Approx(std::pow(1.0 - 0.5 * cfg.dt, steps)).epsilon(1e-12));
  }

  TEST_CASE("finite difference of identity dynamics is one") {
    const auto fd = fd_lions_derivative(Model::zero(1), Observable::coordinate(0), unit_shift(), g1(0.3, 2.0), 0.1,
                                        sens(1000, 500, 4));
    CHECK(fd.value == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(fd.half_step_value == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(fd.std_error <= 1e-12);
    CHECK(fd.richardson_ok);
  }

  TEST_CASE("finite difference of the ou flow") {
    const auto cfg = sens(2000, 1000, 5);
    const auto fd =
        fd_lions_derivative(linear1d(-1.0, 0.0, std::sqrt(2.0)), Observable::coordinate(0), unit_shift(), g1(0.0, 1.0),
                            -1.0, cfg);
    // Common random numbers cancel the noise; Euler gives (1 - dt)^{T/dt}.
    CHECK(fd.value == doctest::Approx(std::pow(1.0 - cfg.dt, 500)).epsilon(1e-9));
    CHECK(std::abs(fd.value - std::exp(-1.0)) <= cfg.dt);
    CHECK(fd.richardson_ok);
  }

  TEST_CASE("bismut estimate of the ou derivative") {
    const auto est = bismut_derivative(linear1d(-1.0, 0.0, std::sqrt(2.0)), Observable::coordinate(0), unit_shift(),
                                       g1(0.0, 1.0), kWeights, sens(100000, 10000, 6));
    REQUIRE(est.size() == 2);
    for (const auto& e : est) {
      CHECK(e.n_samples == 100000);
      CHECK(std::abs(e.value - std::exp(-1.0)) <= 3.0 * e.std_error);
    }
    CHECK(std::abs(est[0].value - est[1].value) <= 3.0 * (est[0].std_error + est[1].std_error));
  }

  TEST_CASE("constant observable has zero derivative") {
    const auto est = bismut_derivative(linear1d(-1.0, 0.0, std::sqrt(2.0)), Observable::constant_value(2.5),
                                       unit_shift(), g1(0.0, 1.0), kWeights, sens(20000, 5000, 7));
    for (const auto& e : est) CHECK(std::abs(e.value) <= 3.0 * e.std_error);
  }

  TEST_CASE("granular bismut matches the finite-difference oracle") {
    const auto m = granular1d(1.0, 0.5);
    const auto cfg = sens(100000, 10000, 8);
    const auto est = bismut_derivative(m, Observable::coordinate(0), unit_shift(), g1(0.5, 1.0), kWeights, cfg);
    const auto fd = fd_lions_derivative(m, Observable::coordinate(0), unit_shift(), g1(0.5, 1.0), -1.0, cfg);
    for (const auto& e : est) CHECK(std::abs(e.value - fd.value) <= 3.0 * (e.std_error + fd.std_error));
    // The interaction cancels in the mean, so the shift decays like e^{-T}.
    CHECK(fd.value == doctest::Approx(std::pow(1.0 - cfg.dt, 500)).epsilon(1e-9));
  }

  TEST_CASE("weight functions") {
    for (const auto& g : kWeights) {
      CHECK(g.value(0.0, 2.0) == doctest::Approx(0.0));
      CHECK(g.value(2.0, 2.0) == doctest::Approx(1.0));
      const double h = 1e-6, t = 0.7;
      CHECK(g.derivative(t, 2.0) == doctest::Approx((g.value(t + h, 2.0) - g.value(t - h, 2.0)) / (2 * h)).epsilon(1e-7));
    }
  }

  TEST_CASE("perturbation fields and observables") {
    const auto bump = PerturbationField::bump(Eigen::VectorXd::Ones(1), Eigen::VectorXd::Zero(1), 1.0);
    std::vector<double> out(1);
    const std::vector<double> inside{0.0}, outside{1.5};
    bump.apply(inside, out);
    CHECK(out[0] == doctest::Approx(1.0));
    bump.apply(outside, out);
    CHECK(out[0] == 0.0);
    Eigen::MatrixXd m(1, 1);
    m << 3.0;
    PerturbationField::linear(m).apply(outside, out);
    CHECK(out[0] == doctest::Approx(4.5));

    const std::vector<double> x{0.5, -2.0};
    CHECK(Observable::coordinate(1)(x) == -2.0);
    CHECK(Observable::quadratic()(x) == doctest::Approx(4.25));
    CHECK(Observable::bounded(0, 2.0)(x) == doctest::Approx(std::tanh(0.25)));
    CHECK(Observable::constant_value(3.0)(x) == 3.0);
  }

  TEST_CASE("preconditions") {
    CHECK_THROWS_AS(bismut_derivative(Model::porous(), Observable::coordinate(0), unit_shift(), g1(0, 1), kWeights,
                                      sens(100, 100, 1)),
                    Error);
    CHECK_THROWS_AS(sens(0, 100, 1).validate(), Error);
    CHECK(batch_seed(1, 0) != batch_seed(1, 1));
  }
}
