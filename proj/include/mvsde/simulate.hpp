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
#include <cmath>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "mvsde/error.hpp"
#include "mvsde/measures.hpp"
#include "mvsde/models.hpp"
#include "mvsde/rng.hpp"

namespace mvsde {

struct SimConfig {
  std::size_t n = 1000;
  double dt = 1e-3;
  double t_end = 1.0;
  std::uint64_t seed = 1;
  std::size_t record_every = 100;

  void validate() const;
  // Number of Euler steps; t_end must be a whole number of steps up to 1e-9.
  std::size_t steps() const;
};

// Raised when an Euler step produces a non-finite coordinate.
class BlowUpError : public Error {
 public:
  BlowUpError(std::size_t particle, double time);
  std::size_t particle() const noexcept { return particle_; }
  double time() const noexcept { return time_; }

 private:
  std::size_t particle_;
  double time_;
};

class ParticleEnsemble {
 public:
  ParticleEnsemble(std::size_t dim, std::vector<double> positions, double time = 0.0);
  // Delay form: one history per particle, oldest first, each of length
  // floor(memory/dt) + 1 and ending at the particle's current position.
  static ParticleEnsemble with_histories(double memory, double dt, const std::vector<std::vector<double>>& histories,
                                         double time = 0.0);
  // Delay form with flat pasts: xi(theta) = x for theta in [-memory, 0].
  static ParticleEnsemble with_constant_histories(double memory, double dt, std::vector<double> positions,
                                                  double time = 0.0);

  std::size_t size() const noexcept { return positions_.size() / dim_; }
  std::size_t dim() const noexcept { return dim_; }
  double time() const noexcept { return time_; }
  const std::vector<double>& positions() const noexcept { return positions_; }
  std::span<const double> point(std::size_t i) const noexcept { return {positions_.data() + i * dim_, dim_}; }
  bool has_segments() const noexcept { return !segments_.empty(); }
  const std::vector<PathSegment>& segments() const noexcept { return segments_; }
  EmpiricalMeasure measure() const { return EmpiricalMeasure(dim_, positions_); }

 private:
  friend void step_frozen(ParticleEnsemble&, const Model&, double, std::span<const double>, const MeasureContext&);
  std::size_t dim_;
  std::vector<double> positions_;
  double time_;
  std::vector<PathSegment> segments_;
};

// Gaussian initial laws. Particle i uses the normals of stream (seed, tag) at
// (i, 0), so two laws sampled with the same seed and tag are comonotone.
ParticleEnsemble sample_gaussian(const Eigen::VectorXd& mean, const Eigen::MatrixXd& cov, std::size_t n,
                                 std::uint64_t seed, StreamTag tag = StreamTag::kInitA);
// n copies of one point.
ParticleEnsemble point_mass(std::span<const double> x, std::size_t n);

// Fills the N x m Brownian increments of one step (already scaled by sqrt(dt)).
void brownian_increments(const NormalStream& stream, std::size_t step_index, std::size_t n, std::size_t m, double dt,
                         std::span<double> out);

// One Euler-Maruyama step. Every particle sees the empirical measure of the
// pre-step ensemble. increments is N x m, row-major, N(0, dt) entries.
void step(ParticleEnsemble& ensemble, const Model& model, double dt, std::span<const double> increments);
// Same step with the measure argument supplied by the caller.
void step_frozen(ParticleEnsemble& ensemble, const Model& model, double dt, std::span<const double> increments,
                 const MeasureContext& ctx);

struct MomentRecord {
  double t = 0.0;
  Eigen::VectorXd mean;
  Eigen::MatrixXd cov;
  double second_moment = 0.0;  // (1/N) sum |x_i|^2
  double max_abs = 0.0;
};

struct FlowResult {
  std::vector<double> times;
  std::vector<EmpiricalMeasure> snapshots;  // empty when snapshots are not kept
  std::vector<MomentRecord> moments;
  double sup_second_moment = 0.0;
  double max_abs = 0.0;
  ParticleEnsemble final_state{1, {0.0}};
};

struct FlowOptions {
  bool keep_snapshots = true;
  // Called with the ensemble at every recorded time, including t = 0.
  std::function<void(const ParticleEnsemble&)> observer;
};

FlowResult simulate_flow(const Model& model, ParticleEnsemble init, const SimConfig& cfg,
                         const FlowOptions& options = {});

struct OrderReport {
  std::uint64_t checked_points = 0;
  std::uint64_t violations = 0;
  double max_violation_magnitude = 0.0;
  struct Location {
    std::size_t path;
    double time;
    std::size_t coordinate;
  };
  std::optional<Location> first_violation;
};

inline double order_tolerance(double x) { return 1e-9 * (1.0 + std::abs(x)); }

struct CoupledResult {
  FlowResult a;
  FlowResult b;
  std::vector<double> w2;                // per recorded time
  std::vector<double> mean_square_gap;   // (1/N) sum |x_a,i - x_b,i|^2 per recorded time
  std::optional<OrderReport> order;
};

// Two systems driven by identical Brownian increments per particle and step.
// With check_order, init_a <= init_b coordinatewise (segments included) is
// required and every grid time is checked for x_a > x_b + tol.
CoupledResult simulate_coupled(const Model& model_a, const Model& model_b, ParticleEnsemble init_a,
                               ParticleEnsemble init_b, const SimConfig& cfg, bool check_order = false,
                               bool keep_snapshots = false);

// W2 between two equal-size ensembles: sorted pairing in 1D, otherwise exact
// assignment on at most 512 particles taken at a fixed stride.
double ensemble_w2(const EmpiricalMeasure& a, const EmpiricalMeasure& b);
EmpiricalMeasure stride_subsample(const EmpiricalMeasure& a, std::size_t max_points);

struct InvariantEstimate {
  EmpiricalMeasure pooled{1, {0.0}};
  double stationarity_w2 = 0.0;  // first half of the pooled window vs second half
  std::optional<std::string> warning;
};

InvariantEstimate estimate_invariant(const Model& model, ParticleEnsemble init, const SimConfig& cfg,
                                     double burn_in, bool force = false, double stationarity_threshold = 0.1);

}  // namespace mvsde
