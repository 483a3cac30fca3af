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

#include "mvsde/density.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "mvsde/error.hpp"

namespace mvsde {
namespace {
constexpr std::size_t kDirectLimit = 2000;
constexpr double kBinsPerBandwidth = 20.0;
constexpr double kKernelCutoff = 6.0;
}  // namespace

double KernelDensity1d::silverman_bandwidth(std::span<const double> samples) {
  require(samples.size() >= 2, "bandwidth needs at least two samples");
  double mean = 0.0;
  for (double x : samples) mean += x;
  mean /= static_cast<double>(samples.size());
  double ss = 0.0;
  for (double x : samples) ss += (x - mean) * (x - mean);
  const double sd = std::sqrt(ss / static_cast<double>(samples.size() - 1));
  return 1.06 * sd * std::pow(static_cast<double>(samples.size()), -0.2);
}

KernelDensity1d::KernelDensity1d(std::span<const double> samples, double bandwidth) {
  require(!samples.empty(), "density estimate needs samples");
  h_ = bandwidth > 0.0 ? bandwidth : silverman_bandwidth(samples);
  require(h_ > 0.0 && std::isfinite(h_), "degenerate sample: zero bandwidth");
  const auto [mn, mx] = std::minmax_element(samples.begin(), samples.end());
  lo_ = *mn;
  hi_ = *mx;
  if (samples.size() <= kDirectLimit) {
    samples_.assign(samples.begin(), samples.end());
    return;
  }
  grid_step_ = h_ / kBinsPerBandwidth;
  grid_origin_ = lo_ - kKernelCutoff * h_;
  const auto cells =
      static_cast<std::size_t>(std::ceil((hi_ - lo_ + 2.0 * kKernelCutoff * h_) / grid_step_)) + 2;
  std::vector<double> mass(cells, 0.0);
  const double w = 1.0 / static_cast<double>(samples.size());
  for (double x : samples) {
    const double pos = (x - grid_origin_) / grid_step_;
    const auto k = static_cast<std::size_t>(pos);
    const double frac = pos - static_cast<double>(k);
    mass[k] += w * (1.0 - frac);
    mass[k + 1] += w * frac;
  }
  const auto half = static_cast<std::size_t>(std::ceil(kKernelCutoff * kBinsPerBandwidth));
  std::vector<double> kernel(2 * half + 1);
  const double norm = 1.0 / (h_ * std::sqrt(2.0 * std::numbers::pi));
  for (std::size_t j = 0; j < kernel.size(); ++j) {
    const double u = (static_cast<double>(j) - static_cast<double>(half)) / kBinsPerBandwidth;
    kernel[j] = norm * std::exp(-0.5 * u * u);
  }
  table_.assign(cells, 0.0);
  for (std::size_t k = 0; k < cells; ++k) {
    if (mass[k] == 0.0) continue;
    const std::size_t j_lo = k >= half ? 0 : half - k;
    const std::size_t j_hi = std::min(kernel.size(), cells + half - k);
    for (std::size_t j = j_lo; j < j_hi; ++j) table_[k + j - half] += mass[k] * kernel[j];
  }
}

double KernelDensity1d::operator()(double x) const {
  if (table_.empty()) {
    const double inv = 1.0 / h_;
    const double norm = inv / (std::sqrt(2.0 * std::numbers::pi) * static_cast<double>(samples_.size()));
    double s = 0.0;
    for (double xi : samples_) {
      const double u = (x - xi) * inv;
      if (std::abs(u) < 2.0 * kKernelCutoff) s += std::exp(-0.5 * u * u);
    }
    return s * norm;
  }
  const double pos = (x - grid_origin_) / grid_step_;
  if (pos < 0.0 || pos >= static_cast<double>(table_.size() - 1)) return 0.0;
  const auto k = static_cast<std::size_t>(pos);
  const double frac = pos - static_cast<double>(k);
  return table_[k] * (1.0 - frac) + table_[k + 1] * frac;
}

}  // namespace mvsde
