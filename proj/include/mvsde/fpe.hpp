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

#include <cstddef>
#include <functional>
#include <vector>

#include "mvsde/models.hpp"

namespace mvsde {

// Cell averages of a probability density on [x_min, x_max] with M equal cells.
struct DensityGrid {
  double x_min = 0.0;
  double x_max = 1.0;
  std::vector<double> values;
  double time = 0.0;

  std::size_t cells() const noexcept { return values.size(); }
  double dx() const noexcept { return (x_max - x_min) / static_cast<double>(values.size()); }
  double center(std::size_t i) const noexcept { return x_min + (static_cast<double>(i) + 0.5) * dx(); }
  double mass() const;
  // Mass 1 within 1e-10 and no negative cells.
  void validate() const;
};

// Cell averages of f by 16-point composite midpoint rule, renormalized to mass 1.
DensityGrid grid_from_density(double x_min, double x_max, std::size_t cells, const std::function<double(double)>& f,
                              double time = 0.0);

struct StepDiagnostics {
  std::size_t clamped_cells = 0;
  double clamped_mass = 0.0;
};

// Largest dt allowed by the explicit step: dx^2 / (2 + max |Delta Phi|), where
// Phi = V + W * rho on the grid.
double granular_stable_dt(const DensityGrid& g, const RadialPotential& v, const RadialPotential& w);

// One explicit conservative step of d/dt rho = rho'' + (rho (V + W * rho)')'
// with zero-flux walls. The flux between cells i and i+1 uses exponential
// fitting, (B(dPhi) rho_i - B(-dPhi) rho_{i+1}) / dx with B(z) = z / (e^z - 1),
// which is exact for the discrete Gibbs state.
StepDiagnostics fpe_step_granular(DensityGrid& g, const RadialPotential& v, const RadialPotential& w, double dt);

// dx^2 / (6 max f^2).
double porous_stable_dt(const DensityGrid& g);

// One explicit conservative step of d/dt f = (f^3)'' with zero-flux walls.
StepDiagnostics fpe_step_porous(DensityGrid& g, double dt);

// Discrete Ent(rho | e^{-V}) + (1/2) int int W d rho d rho, up to the log
// normalizer of e^{-V}.
double free_energy(const DensityGrid& g, const RadialPotential& v, const RadialPotential& w);

// Unit-mass self-similar solution of d/dt u = (u^3)'' in one dimension:
// u(t, x) = t^{-1/4} (C - x^2 / (12 sqrt t))_+^{1/2}, C = 1 / (pi sqrt 3).
double barenblatt_constant();
double barenblatt(double t, double x);
// Half-width of the support, sqrt(12 C) t^{1/4}.
double barenblatt_support(double t);
// Exact integral of the profile over [a, b].
double barenblatt_mass(double t, double a, double b);
DensityGrid barenblatt_grid(double t, double x_min, double x_max, std::size_t cells);

// sum_i |g_i - f(x_i)| dx with f evaluated at the cell centers.
double l1_distance(const DensityGrid& g, const std::function<double(double)>& f);
// sum_i |g_i - h_i| dx on identical grids.
double l1_distance(const DensityGrid& g, const DensityGrid& h);

}  // namespace mvsde
