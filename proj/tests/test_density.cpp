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
#include <numbers>
#include <random>
#include <vector>

#include "doctest.h"
#include "mvsde/density.hpp"

using mvsde::KernelDensity1d;

namespace {

double trapezoid(const KernelDensity1d& f, double lo, double hi, int n) {
  const double h = (hi - lo) / n;
  double s = 0.5 * (f(lo) + f(hi));
  for (int i = 1; i < n; ++i) s += f(lo + i * h);
  return s * h;
}

}  // namespace

TEST_SUITE("density") {
  TEST_CASE("single point gives the gaussian kernel") {
    const std::vector<double> x{0.0};
    const KernelDensity1d f(x, 0.5);
    const double expect = std::exp(-0.5 * 0.36) / (0.5 * std::sqrt(2.0 * std::numbers::pi));
    CHECK(f(0.3) == doctest::Approx(expect).epsilon(1e-12));
  }

  TEST_CASE("silverman bandwidth") {
    const std::vector<double> x{-1.0, 0.0, 1.0};
    // Sample sd 1 with the N-1 normalization.
    CHECK(KernelDensity1d::silverman_bandwidth(x) == doctest::Approx(1.06 * std::pow(3.0, -0.2)).epsilon(1e-12));
  }

  TEST_CASE("direct and binned modes integrate to one") {
    std::mt19937_64 gen(3);
    std::normal_distribution<double> nd(0.0, 1.0);
    for (std::size_t n : {100u, 100000u}) {
      std::vector<double> x(n);
      for (auto& v : x) v = nd(gen);
      const KernelDensity1d f(x);
      CHECK(trapezoid(f, -9.0, 9.0, 20000) == doctest::Approx(1.0).epsilon(1e-3));
    }
  }

  TEST_CASE("binned estimate agrees with the direct sum") {
    std::mt19937_64 gen(4);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::vector<double> x(50000);
    for (auto& v : x) v = u(gen);
    const KernelDensity1d f(x, 0.05);
    for (double t : {0.1, 0.5, 0.93}) {
      double direct = 0.0;
      for (double v : x) direct += std::exp(-0.5 * (t - v) * (t - v) / 0.0025);
      direct /= x.size() * 0.05 * std::sqrt(2.0 * std::numbers::pi);
      // Linear binning at h/20 has relative error O((h/20)^2 / h^2).
      CHECK(f(t) == doctest::Approx(direct).epsilon(3e-3));
    }
    // Interior of Uniform[0,1] has density 1.
    CHECK(f(0.5) == doctest::Approx(1.0).epsilon(0.05));
  }
}
