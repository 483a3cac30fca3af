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

#include <span>
#include <vector>

namespace mvsde {

// Gaussian kernel density estimate on the line. Large samples are linearly
// binned onto a grid of spacing h/20 and convolved once, so evaluation is
// O(1) per point; small samples are summed directly.
class KernelDensity1d {
 public:
  // bandwidth <= 0 selects Silverman's rule h = 1.06 sd N^{-1/5}.
  explicit KernelDensity1d(std::span<const double> samples, double bandwidth = -1.0);

  static double silverman_bandwidth(std::span<const double> samples);

  double operator()(double x) const;
  double bandwidth() const noexcept { return h_; }
  double sample_min() const noexcept { return lo_; }
  double sample_max() const noexcept { return hi_; }

 private:
  double h_ = 0.0;
  double lo_ = 0.0;
  double hi_ = 0.0;
  std::vector<double> samples_;  // direct mode only
  double grid_origin_ = 0.0;
  double grid_step_ = 0.0;
  std::vector<double> table_;  // binned mode only
};

}  // namespace mvsde
