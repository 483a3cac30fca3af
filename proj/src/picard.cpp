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

#include "mvsde/picard.hpp"

#include <algorithm>
#include <cmath>

#include "mvsde/error.hpp"

namespace mvsde {

namespace {
// Distances below this are rounding noise of a converged map.
constexpr double kRoundingFloor = 1e-12;

double spectral_norm(const Eigen::MatrixXd& m) {
  return Eigen::JacobiSVD<Eigen::MatrixXd>(m).singularValues()(0);
}
}  // namespace

void MeasureFlow::validate() const {
  require(!grid.empty() && grid.size() == measures.size(), "measure flow needs one measure per grid time");
  for (std::size_t k = 1; k < grid.size(); ++k) require(grid[k] > grid[k - 1], "measure flow grid must increase");
  for (const auto& m : measures) require(m.dim() == measures[0].dim(), "measure flow dimensions differ");
}

std::vector<double> recording_grid(const SimConfig& cfg, double t0) {
  cfg.validate();
  const std::size_t steps = cfg.steps();
  std::vector<double> grid{t0};
  for (std::size_t k = 0; k < steps; ++k)
    if ((k + 1) % cfg.record_every == 0 || k + 1 == steps) grid.push_back(t0 + static_cast<double>(k + 1) * cfg.dt);
  return grid;
}

MeasureFlow solve_frozen(const Model& model, const MeasureFlow& flow, const ParticleEnsemble& init,
                         const SimConfig& cfg) {
  flow.validate();
  require(model.memory_length() == 0.0, "frozen-flow solve is defined for models without memory");
  require(init.size() == cfg.n && init.dim() == model.dim(), "initial ensemble does not match sim.n or the model");
  const auto grid = recording_grid(cfg, init.time());
  require(grid.size() == flow.grid.size(), "flow grid is incompatible with sim.dt and sim.record_every");
  for (std::size_t k = 0; k < grid.size(); ++k)
    require(std::abs(grid[k] - flow.grid[k]) <= 1e-9 * (1.0 + std::abs(grid[k])),
            "flow grid is incompatible with sim.dt and sim.record_every");

  std::vector<MeasureContext> contexts;
  contexts.reserve(flow.measures.size());
  for (const auto& mu : flow.measures) contexts.push_back(model.prepare(mu));

  const std::size_t steps = cfg.steps();
  const std::size_t m = model.noise_dim();
  const NormalStream stream(cfg.seed, StreamTag::kNoise);
  std::vector<double> inc(cfg.n * m);
  ParticleEnsemble ens = init;
  MeasureFlow out;
  out.grid = flow.grid;
  out.measures.push_back(ens.measure());
  for (std::size_t k = 0; k < steps; ++k) {
    const std::size_t interval = std::min(k / cfg.record_every, contexts.size() - 2);
    brownian_increments(stream, k, cfg.n, m, cfg.dt, inc);
    step_frozen(ens, model, cfg.dt, inc, contexts[interval]);
    if ((k + 1) % cfg.record_every == 0 || k + 1 == steps) out.measures.push_back(ens.measure());
  }
  return out;
}

double weighted_sup_w2(const MeasureFlow& a, const MeasureFlow& b, double lambda) {
  require(a.grid.size() == b.grid.size(), "flows must share the grid");
  double sup = 0.0;
  for (std::size_t k = 0; k < a.grid.size(); ++k)
    sup = std::max(sup, std::exp(-lambda * (a.grid[k] - a.grid[0])) * ensemble_w2(a.measures[k], b.measures[k]));
  return sup;
}

double default_lambda_weight(const Model& model) {
  double lip = 0.0;
  switch (model.kind()) {
    case ModelKind::kGranular: {
      const auto& p = std::get<GranularParams>(model.params());
      const double v = std::max(std::abs(p.confinement.hessian_lower_bound()),
                                std::abs(p.confinement.hessian_upper_bound()));
      const double w = std::max(std::abs(p.interaction.hessian_lower_bound()),
                                std::abs(p.interaction.hessian_upper_bound()));
      lip = v + 2.0 * w;
      break;
    }
    case ModelKind::kLinearMeanField: {
      const auto& p = std::get<LinearParams>(model.params());
      lip = spectral_norm(p.state) + spectral_norm(p.interaction);
      break;
    }
    case ModelKind::kDegenerateHamiltonian: {
      const std::vector<double> origin(model.dim(), 0.0);
      const MeasureContext ctx = model.prepare(origin, 1);
      lip = spectral_norm(model.drift_jacobian(0.0, origin, ctx)) +
            spectral_norm(model.lions_kernel(0.0, origin, origin, ctx));
      break;
    }
    case ModelKind::kZero:
      break;
    default:
      fail(ErrorKind::kInvalidArgument, "picard iteration needs a granular, linear or degenerate model");
  }
  return std::max(1.0, 2.0 * lip);
}

PicardResult picard_iterate(const Model& model, const EmpiricalMeasure& init_law, const SimConfig& cfg,
                            double lambda_weight, double tol, std::size_t max_iter) {
  const ModelKind kind = model.kind();
  require(kind == ModelKind::kGranular || kind == ModelKind::kLinearMeanField ||
              kind == ModelKind::kDegenerateHamiltonian || kind == ModelKind::kZero,
          "picard iteration needs a granular, linear or degenerate model");
  require(lambda_weight > 0.0 && tol > 0.0 && max_iter >= 1, "picard needs lambda_weight > 0, tol > 0, max_iter >= 1");
  require(init_law.size() == cfg.n && init_law.dim() == model.dim(), "initial law does not match sim.n or the model");

  const ParticleEnsemble init(init_law.dim(), init_law.coords());
  MeasureFlow current;
  current.grid = recording_grid(cfg, 0.0);
  current.measures.assign(current.grid.size(), init_law);

  PicardResult result;
  result.diagnostics.lambda_weight = lambda_weight;
  for (std::size_t k = 0; k < max_iter; ++k) {
    MeasureFlow next = solve_frozen(model, current, init, cfg);
    const double dist = weighted_sup_w2(current, next, lambda_weight);
    result.diagnostics.distances.push_back(dist);
    result.diagnostics.iterations = k + 1;
    current = std::move(next);
    if (dist < tol) {
      result.diagnostics.converged = true;
      break;
    }
  }

  const auto& d = result.diagnostics.distances;
  double log_sum = 0.0;
  std::size_t ratios = 0;
  for (std::size_t k = 0; k + 1 < d.size(); ++k) {
    if (d[k] <= kRoundingFloor || d[k + 1] <= kRoundingFloor) break;
    log_sum += std::log(d[k + 1] / d[k]);
    ++ratios;
  }
  result.diagnostics.contraction_factor = ratios > 0 ? std::exp(log_sum / static_cast<double>(ratios)) : 0.0;
  result.flow = std::move(current);
  return result;
}

}  // namespace mvsde
