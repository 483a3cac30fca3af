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

#include <vector>

#include "mvsde/measures.hpp"
#include "mvsde/models.hpp"
#include "mvsde/simulate.hpp"

namespace mvsde {

struct MeasureFlow {
  std::vector<double> grid;
  std::vector<EmpiricalMeasure> measures;

  // Strictly increasing grid, one measure per grid point, shared dimension.
  void validate() const;
};

// Times at which simulate_flow records snapshots for cfg, starting at t0.
std::vector<double> recording_grid(const SimConfig& cfg, double t0 = 0.0);

// Law flow of the classical SDE whose measure argument on [t_k, t_{k+1}) is
// flow.measures[k]. Particles are independent given the flow and are driven by
// the noise stream of cfg.seed, so repeated calls share Brownian paths.
MeasureFlow solve_frozen(const Model& model, const MeasureFlow& flow, const ParticleEnsemble& init,
                         const SimConfig& cfg);

// sup_k e^{-lambda (t_k - t_0)} W2(a_k, b_k).
double weighted_sup_w2(const MeasureFlow& a, const MeasureFlow& b, double lambda);

struct PicardDiagnostics {
  std::vector<double> distances;  // rho(mu^(k), mu^(k+1)), k = 0, 1, ...
  double contraction_factor = 0.0;  // geometric mean of successive ratios above the rounding floor
  std::size_t iterations = 0;
  bool converged = false;
  double lambda_weight = 0.0;
};

struct PicardResult {
  MeasureFlow flow;
  PicardDiagnostics diagnostics;
};

// 2 x (Lipschitz bound of b in x plus in the measure argument); at least 1.
double default_lambda_weight(const Model& model);

PicardResult picard_iterate(const Model& model, const EmpiricalMeasure& init_law, const SimConfig& cfg,
                            double lambda_weight, double tol, std::size_t max_iter);

}  // namespace mvsde
