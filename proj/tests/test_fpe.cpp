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


#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <cmath>
#include <numbers>

#include "doctest.h"
#include "mvsde/error.hpp"
#include "mvsde/fpe.hpp"

using namespace mvsde;

namespace {

DensityGrid uniform_grid(double lo, double hi, std::size_t cells) {
  return grid_from_density(lo, hi, cells, [](double) { return 1.0; });
}

double gaussian(double x) { return std::exp(-0.5 * x * x) / std::sqrt(2.0 * std::numbers::pi); }

}  // namespace

TEST_SUITE("fpe") {
  TEST_CASE("uniform density is a fixed point without potentials") {
    auto g = uniform_grid(-1.0, 1.0, 50);
    const auto before = g.values;
    const RadialPotential none;
    for (int k = 0; k < 100; ++k) fpe_step_granular(g, none, none, granular_stable_dt(g, none, none));
    for (std::size_t i = 0; i < g.cells(); ++i) CHECK(g.values[i] == doctest::Approx(before[i]).epsilon(1e-13));
  }

  TEST_CASE("discrete gibbs state is stationary") {
    RadialPotential v;
    v.quadratic = 1.0;
    const RadialPotential none;
    const double lo = -8.0, hi = 8.0;
    const std::size_t m = 400;
    DensityGrid g{lo, hi, std::vector<double>(m), 0.0};
    double total = 0.0;
    for (std::size_t i = 0; i < m; ++i) total += g.values[i] = std::exp(-0.5 * g.center(i) * g.center(i));
    for (auto& x : g.values) x /= total * g.dx();
    const auto start = g.values;
    for (int k = 0; k < 200; ++k) fpe_step_granular(g, v, none, granular_stable_dt(g, v, none));
    double drift = 0.0;
    for (std::size_t i = 0; i < m; ++i) drift += std::abs(g.values[i] - start[i]) * g.dx();
    CHECK(drift <= 1e-12);
  }

  TEST_CASE("granular solution relaxes to the gaussian") {
    RadialPotential v;
    v.quadratic = 1.0;
    const RadialPotential none;
    auto g = grid_from_density(-8.0, 8.0, 400, [](double x) { return std::abs(x - 1.0) < 1.0 ? 1.0 : 0.0; });
    double t = 0.0, last_energy = free_energy(g, v, none);
    for (int k = 1; t < 15.0; ++k) {
      const double dt = granular_stable_dt(g, v, none);
      fpe_step_granular(g, v, none, dt);
      t += dt;
      REQUIRE(std::abs(g.mass() - 1.0) <= 1e-12);
      if (k % 100 != 0) continue;
      const double e = free_energy(g, v, none);
      REQUIRE(e <= last_energy + 1e-13);
      last_energy = e;
    }
    CHECK(l1_distance(g, gaussian) <= 0.01);
  }

  TEST_CASE("steps beyond the stability limit are rejected") {
    auto g = uniform_grid(0.0, 1.0, 10);
    const RadialPotential none;
    CHECK_THROWS_AS(fpe_step_granular(g, none, none, 2.0 * granular_stable_dt(g, none, none)), Error);
    CHECK_THROWS_AS(fpe_step_porous(g, 2.0 * porous_stable_dt(g)), Error);
  }

  TEST_CASE("porous step keeps constants and mass") {
    auto g = uniform_grid(0.0, 2.0, 40);
    const auto before = g.values;
    for (int k = 0; k < 50; ++k) fpe_step_porous(g, porous_stable_dt(g));
    for (std::size_t i = 0; i < g.cells(); ++i) CHECK(g.values[i] == doctest::Approx(before[i]).epsilon(1e-13));
  }

  TEST_CASE("porous solver tracks the barenblatt profile") {
    auto g = barenblatt_grid(0.5, -2.5, 2.5, 800);
    double t = 0.5;
    while (t < 1.0 - 1e-12) {
      const double dt = std::min(porous_stable_dt(g), 1.0 - t);
      fpe_step_porous(g, dt);
      t += dt;
      REQUIRE(std::abs(g.mass() - 1.0) <= 1e-12);
    }
    CHECK(l1_distance(g, barenblatt_grid(1.0, -2.5, 2.5, 800)) <= 0.02);
  }

  TEST_CASE("barenblatt closed form") {
    const double edge = barenblatt_support(1.0);
    CHECK(barenblatt(1.0, edge + 1e-9) == 0.0);
    CHECK(barenblatt(2.0, 10.0) == 0.0);
    CHECK(barenblatt_constant() == doctest::Approx(1.0 / (std::numbers::pi * std::sqrt(3.0))).epsilon(1e-15));
    // Mass by adaptive quadrature over the support.
    const double mass = boost::math::quadrature::gauss_kronrod<double, 61>::integrate(
        [](double x) { return barenblatt(1.0, x); }, -edge, edge, 20, 1e-13);
    CHECK(std::abs(mass - 1.0) <= 1e-8);
    CHECK(barenblatt_mass(1.0, -edge, edge) == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(barenblatt_mass(1.0, -10.0, 0.0) == doctest::Approx(0.5).epsilon(1e-14));
    // u(t, x) = s^{1/4} u(s t, s^{1/4} x).
    const double s = 4.0;
    for (double t : {0.3, 1.0, 2.0})
      for (double x = -1.5; x <= 1.5; x += 0.125)
        CHECK(std::abs(barenblatt(t, x) - std::pow(s, 0.25) * barenblatt(s * t, std::pow(s, 0.25) * x)) <= 1e-10);
    CHECK_THROWS_AS(barenblatt(0.0, 0.0), Error);
  }

  TEST_CASE("grid helpers") {
    const auto g = grid_from_density(-1.0, 1.0, 20, [](double x) { return 1.0 - std::abs(x); });
    CHECK(g.mass() == doctest::Approx(1.0).epsilon(1e-14));
    g.validate();
    CHECK(l1_distance(g, g) == 0.0);
    DensityGrid bad{0.0, 1.0, {2.0, -1.0}, 0.0};
    CHECK_THROWS_AS(bad.validate(), Error);
  }
}
