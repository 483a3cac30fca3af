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
#include <cstddef>
#include <optional>
#include <span>
#include <vector>

namespace mvsde {

// Uniform-weight atomic measure (1/N) sum_i delta_{x_i} on R^d. Points are
// stored row-major; every coordinate is finite.
class EmpiricalMeasure {
 public:
  EmpiricalMeasure(std::size_t dim, std::vector<double> coords);
  static EmpiricalMeasure from_values(std::vector<double> values) {
    return EmpiricalMeasure(1, std::move(values));
  }

  std::size_t size() const noexcept { return coords_.size() / dim_; }
  std::size_t dim() const noexcept { return dim_; }
  std::span<const double> point(std::size_t i) const noexcept {
    return {coords_.data() + i * dim_, dim_};
  }
  const std::vector<double>& coords() const noexcept { return coords_; }

  Eigen::VectorXd mean() const;
  // Unbiased (N-1) sample covariance; zero matrix when N = 1.
  Eigen::MatrixXd covariance() const;
  // Values of one coordinate, in particle order.
  std::vector<double> coordinate(std::size_t axis) const;

 private:
  std::size_t dim_;
  std::vector<double> coords_;
};

// Ground metric for transport costs.
//  euclidean:       |u - v|
//  block_weighted:  with matrix_B set, psi_B = sqrt(alpha^2 |du1|^2 + |B du2|^2);
//                   otherwise alpha |du1| + |du2| (the W_{p,alpha} cost).
struct GroundMetricSpec {
  enum class Kind { kEuclidean, kBlockWeighted };
  Kind kind = Kind::kEuclidean;
  std::size_t d1 = 0;
  std::size_t d2 = 0;
  double alpha = 1.0;
  std::optional<Eigen::MatrixXd> matrix_b;

  void validate(std::size_t dim) const;
  double distance(std::span<const double> u, std::span<const double> v) const;
};

enum class MetricMethod { kAuto, kExactAssignment, kEntropic };

struct MetricResult {
  enum class Method { kSort1d, kExactAssignment, kEntropic };
  double value = 0.0;
  Method method = Method::kExactAssignment;
  int iterations = 0;
  double regularization = 0.0;
  double marginal_violation = 0.0;
  double duality_gap = 0.0;
};

inline constexpr std::size_t kExactAssignmentThreshold = 512;

struct EntropicOptions {
  // Target regularization is relative_eps * median(cost) unless absolute_eps > 0.
  double relative_eps = 0.01;
  double absolute_eps = -1.0;
  int max_iterations = 5000;
  double tolerance = 1e-8;
};

// Exact W_p of two equal-size 1D samples by sorted pairing.
double wasserstein_1d(const EmpiricalMeasure& a, const EmpiricalMeasure& b, double p);

MetricResult wasserstein(const EmpiricalMeasure& a, const EmpiricalMeasure& b, double p,
                         const GroundMetricSpec& ground = {},
                         MetricMethod method = MetricMethod::kAuto,
                         const EntropicOptions& entropic = {});

// Minimum-cost perfect matching on a square cost matrix (shortest augmenting
// path with potentials, O(n^3)). Returns the column assigned to each row.
std::vector<int> solve_assignment(const Eigen::MatrixXd& cost);

// Exact W_2 between a 1D sample and N(mean, variance): integrates the squared
// difference of the two quantile functions over each 1/N band in closed form.
double wasserstein2_to_gaussian_1d(const EmpiricalMeasure& a, double mean, double variance);

// Axis-aligned rectilinear grid; cells are [e_k, e_{k+1}), the last one closed.
struct HistogramGrid {
  std::vector<std::vector<double>> edges;

  // Freedman-Diaconis width per axis on the pooled sample, padded by one bin.
  static HistogramGrid freedman_diaconis(const EmpiricalMeasure& a, const EmpiricalMeasure& b);
  static HistogramGrid uniform(std::span<const double> lo, std::span<const double> hi,
                               std::span<const std::size_t> bins);
  // Splits every cell in two along every axis.
  HistogramGrid refined() const;
};

// Histogram estimate of the total variation norm 2 sup_A |a(A) - b(A)|.
double tv_distance(const EmpiricalMeasure& a, const EmpiricalMeasure& b, const HistogramGrid& grid);
double tv_distance(const EmpiricalMeasure& a, const EmpiricalMeasure& b);

enum class EntropyEstimator { kGaussianMomentMatch, kKnn };

// Estimate of Ent(a | b) = KL(a || b); may be slightly negative from noise.
double relative_entropy(const EmpiricalMeasure& a, const EmpiricalMeasure& b,
                        EntropyEstimator estimator);

// Quantile dominance of equal-size 1D samples (a <= b in stochastic order).
bool stochastic_order_1d(const EmpiricalMeasure& a, const EmpiricalMeasure& b);

}  // namespace mvsde
