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

#include "mvsde/fpe.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "mvsde/error.hpp"

namespace mvsde {

namespace {

constexpr double kNegativeTolerance = -1e-12;

// B(z) = z / (e^z - 1), with the series near 0.
double bernoulli_fn(double z) {
  if (std::abs(z) < 1e-6) return 1.0 - 0.5 * z + z * z / 12.0;
  return z / std::expm1(z);
}

void check_grid(const DensityGrid& g) {
  require(g.cells() >= 2, "density grid needs at least two cells");
  require(g.x_max > g.x_min, "density grid needs x_max > x_min");
}

// Phi_i = V(x_i) + sum_j W(x_i - x_j) rho_j dx.
std::vector<double> potential(const DensityGrid& g, const RadialPotential& v, const RadialPotential& w) {
  const std::size_t m = g.cells();
  const double dx = g.dx();
  std::vector<double> phi(m);
  for (std::size_t i = 0; i < m; ++i) {
    const double x = g.center(i);
    phi[i] = v.value({&x, 1});
  }
  if (w.is_quadratic()) {
    // (q/2) int (x - z)^2 rho(z) dz = (q/2)(x^2 - 2 x m1 + m2)
    double m0 = 0.0, m1 = 0.0, m2 = 0.0;
    for (std::size_t j = 0; j < m; ++j) {
      const double z = g.center(j);
      m0 += g.values[j] * dx;
      m1 += z * g.values[j] * dx;
      m2 += z * z * g.values[j] * dx;
    }
    for (std::size_t i = 0; i < m; ++i) {
      const double x = g.center(i);
      phi[i] += 0.5 * w.quadratic * (x * x * m0 - 2.0 * x * m1 + m2);
    }
    return phi;
  }
  // W(x_i - x_j) depends on i - j only.
  std::vector<double> table(2 * m - 1);
  for (std::size_t k = 0; k < table.size(); ++k) {
    const double r = (static_cast<double>(k) - static_cast<double>(m - 1)) * dx;
    table[k] = w.value({&r, 1});
  }
  for (std::size_t i = 0; i < m; ++i) {
    double s = 0.0;
    for (std::size_t j = 0; j < m; ++j) s += table[i + m - 1 - j] * g.values[j];
    phi[i] += s * dx;
  }
  return phi;
}

StepDiagnostics apply_fluxes(DensityGrid& g, const std::vector<double>& flux, double dt) {
  // flux[i] is the flux through the interface between cells i and i+1.
  const std::size_t m = g.cells();
  const double r = dt / g.dx();
  std::vector<double> next(m);
  for (std::size_t i = 0; i < m; ++i) {
    const double right = i + 1 < m ? flux[i] : 0.0;
    const double left = i > 0 ? flux[i - 1] : 0.0;
    next[i] = g.values[i] - r * (right - left);
  }
  StepDiagnostics diag;
  for (double& v : next) {
    if (v < 0.0) {
      if (v < kNegativeTolerance) ++diag.clamped_cells;
      diag.clamped_mass += -v;
      v = 0.0;
    }
  }
  if (diag.clamped_mass > 0.0) {
    double total = 0.0;
    for (double v : next) total += v;
    const double scale = 1.0 / (total * g.dx());
    for (double& v : next) v *= scale;
  }
  g.values.swap(next);
  g.time += dt;
  return diag;
}

}  // namespace

double DensityGrid::mass() const {
  double s = 0.0;
  for (double v : values) s += v;
  return s * dx();
}

void DensityGrid::validate() const {
  check_grid(*this);
  for (double v : values) require(std::isfinite(v) && v >= 0.0, "density grid has a negative or non-finite cell");
  require(std::abs(mass() - 1.0) <= 1e-10, "density grid mass differs from 1");
}

DensityGrid grid_from_density(double x_min, double x_max, std::size_t cells, const std::function<double(double)>& f,
                              double time) {
  DensityGrid g;
  g.x_min = x_min;
  g.x_max = x_max;
  g.time = time;
  g.values.assign(cells, 0.0);
  check_grid(g);
  constexpr int kSub = 16;
  const double dx = g.dx();
  double total = 0.0;
  for (std::size_t i = 0; i < cells; ++i) {
    double s = 0.0;
    for (int k = 0; k < kSub; ++k) s += f(x_min + (static_cast<double>(i) + (k + 0.5) / kSub) * dx);
    g.values[i] = std::max(0.0, s / kSub);
    total += g.values[i] * dx;
  }
  require(total > 0.0, "initial density has zero mass on the grid");
  for (double& v : g.values) v /= total;
  return g;
}

double granular_stable_dt(const DensityGrid& g, const RadialPotential& v, const RadialPotential& w) {
  check_grid(g);
  const auto phi = potential(g, v, w);
  double jump = 0.0;
  for (std::size_t i = 0; i + 1 < phi.size(); ++i) jump = std::max(jump, std::abs(phi[i + 1] - phi[i]));
  const double dx = g.dx();
  return dx * dx / (2.0 + jump);
}

StepDiagnostics fpe_step_granular(DensityGrid& g, const RadialPotential& v, const RadialPotential& w, double dt) {
  check_grid(g);
  require(dt > 0.0, "fpe step needs dt > 0");
  const auto phi = potential(g, v, w);
  const std::size_t m = g.cells();
  const double dx = g.dx();
  double jump = 0.0;
  for (std::size_t i = 0; i + 1 < m; ++i) jump = std::max(jump, std::abs(phi[i + 1] - phi[i]));
  if (dt > dx * dx / (2.0 + jump)) {
    std::ostringstream os;
    os << "CFL violation: dt = " << dt << " exceeds " << dx * dx / (2.0 + jump);
    fail(ErrorKind::kNumerical, os.str());
  }
  std::vector<double> flux(m - 1);
  for (std::size_t i = 0; i + 1 < m; ++i) {
    const double z = phi[i + 1] - phi[i];
    flux[i] = (bernoulli_fn(z) * g.values[i] - bernoulli_fn(-z) * g.values[i + 1]) / dx;
  }
  return apply_fluxes(g, flux, dt);
}

double porous_stable_dt(const DensityGrid& g) {
  check_grid(g);
  const double fmax = *std::max_element(g.values.begin(), g.values.end());
  const double dx = g.dx();
  return fmax > 0.0 ? dx * dx / (6.0 * fmax * fmax) : std::numeric_limits<double>::infinity();
}

StepDiagnostics fpe_step_porous(DensityGrid& g, double dt) {
  check_grid(g);
  require(dt > 0.0, "fpe step needs dt > 0");
  const double limit = porous_stable_dt(g);
  if (dt > limit) {
    std::ostringstream os;
    os << "CFL violation: dt = " << dt << " exceeds " << limit;
    fail(ErrorKind::kNumerical, os.str());
  }
  const std::size_t m = g.cells();
  const double dx = g.dx();
  std::vector<double> flux(m - 1);
  for (std::size_t i = 0; i + 1 < m; ++i) {
    const double a = g.values[i];
    const double b = g.values[i + 1];
    flux[i] = -(b * b * b - a * a * a) / dx;
  }
  return apply_fluxes(g, flux, dt);
}

double free_energy(const DensityGrid& g, const RadialPotential& v, const RadialPotential& w) {
  check_grid(g);
  const double dx = g.dx();
  RadialPotential zero;
  const auto confinement = potential(g, v, zero);
  const auto full = potential(g, v, w);
  double e = 0.0;
  for (std::size_t i = 0; i < g.cells(); ++i) {
    const double r = g.values[i];
    if (r <= 0.0) continue;
    e += (r * std::log(r) + r * confinement[i] + 0.5 * r * (full[i] - confinement[i])) * dx;
  }
  return e;
}

double barenblatt_constant() { return 1.0 / (std::numbers::pi * std::numbers::sqrt3); }

double barenblatt(double t, double x) {
  require(t > 0.0, "barenblatt needs t > 0");
  const double inner = barenblatt_constant() - x * x / (12.0 * std::sqrt(t));
  return inner > 0.0 ? std::pow(t, -0.25) * std::sqrt(inner) : 0.0;
}

double barenblatt_support(double t) {
  require(t > 0.0, "barenblatt needs t > 0");
  return std::sqrt(12.0 * barenblatt_constant()) * std::pow(t, 0.25);
}

double barenblatt_mass(double t, double a, double b) {
  require(t > 0.0, "barenblatt needs t > 0");
  const double c = barenblatt_constant();
  const double k = 1.0 / (12.0 * std::sqrt(t));
  const double r = std::sqrt(c / k);
  // Antiderivative of sqrt(c - k x^2) on [-r, r] in the angle psi = acos(x / r),
  // where the tail term psi - sin(2 psi) / 2 ~ 2 psi^3 / 3 stays accurate at the edges.
  auto anti = [&](double x) {
    const double psi = std::acos(std::clamp(x / r, -1.0, 1.0));
    return 0.5 * r * std::sqrt(c) * (0.5 * std::numbers::pi - (psi - 0.5 * std::sin(2.0 * psi)));
  };
  return std::pow(t, -0.25) * (anti(b) - anti(a));
}

DensityGrid barenblatt_grid(double t, double x_min, double x_max, std::size_t cells) {
  DensityGrid g;
  g.x_min = x_min;
  g.x_max = x_max;
  g.time = t;
  g.values.assign(cells, 0.0);
  check_grid(g);
  const double dx = g.dx();
  for (std::size_t i = 0; i < cells; ++i) {
    const double a = x_min + static_cast<double>(i) * dx;
    g.values[i] = barenblatt_mass(t, a, a + dx) / dx;
  }
  return g;
}

double l1_distance(const DensityGrid& g, const std::function<double(double)>& f) {
  double s = 0.0;
  for (std::size_t i = 0; i < g.cells(); ++i) s += std::abs(g.values[i] - f(g.center(i)));
  return s * g.dx();
}

double l1_distance(const DensityGrid& g, const DensityGrid& h) {
  require(g.cells() == h.cells() && g.x_min == h.x_min && g.x_max == h.x_max, "l1_distance needs identical grids");
  double s = 0.0;
  for (std::size_t i = 0; i < g.cells(); ++i) s += std::abs(g.values[i] - h.values[i]);
  return s * g.dx();
}

}  // namespace mvsde
