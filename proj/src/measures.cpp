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

#include "mvsde/measures.hpp"

#include <algorithm>
#include <boost/math/distributions/normal.hpp>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <sstream>

#include "mvsde/error.hpp"
#include "mvsde/parallel.hpp"

namespace mvsde {

EmpiricalMeasure::EmpiricalMeasure(std::size_t dim, std::vector<double> coords)
    : dim_(dim), coords_(std::move(coords)) {
  require(dim_ >= 1, "dimension must be positive");
  require(!coords_.empty() && coords_.size() % dim_ == 0,
          "empirical measure needs at least one point with exactly dim coordinates");
  for (double c : coords_) require(std::isfinite(c), "empirical measure has a non-finite coordinate");
}

Eigen::VectorXd EmpiricalMeasure::mean() const {
  Eigen::VectorXd m = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(dim_));
  const std::size_t n = size();
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t k = 0; k < dim_; ++k) m[static_cast<Eigen::Index>(k)] += coords_[i * dim_ + k];
  return m / static_cast<double>(n);
}

Eigen::MatrixXd EmpiricalMeasure::covariance() const {
  const auto d = static_cast<Eigen::Index>(dim_);
  Eigen::MatrixXd cov = Eigen::MatrixXd::Zero(d, d);
  const std::size_t n = size();
  if (n < 2) return cov;
  const Eigen::VectorXd m = mean();
  Eigen::VectorXd dev(d);
  for (std::size_t i = 0; i < n; ++i) {
    for (Eigen::Index k = 0; k < d; ++k) dev[k] = coords_[i * dim_ + static_cast<std::size_t>(k)] - m[k];
    cov.noalias() += dev * dev.transpose();
  }
  return cov / static_cast<double>(n - 1);
}

std::vector<double> EmpiricalMeasure::coordinate(std::size_t axis) const {
  require(axis < dim_, "coordinate axis out of range");
  std::vector<double> out(size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = coords_[i * dim_ + axis];
  return out;
}

void GroundMetricSpec::validate(std::size_t dim) const {
  if (kind == Kind::kEuclidean) return;
  require(d1 >= 1 && d2 >= 1 && d1 + d2 == dim, "block_weighted ground metric needs d1 + d2 = d");
  require(alpha > 0.0 && std::isfinite(alpha), "block_weighted ground metric needs alpha > 0");
  if (matrix_b) {
    require(matrix_b->rows() == static_cast<Eigen::Index>(d1) &&
                matrix_b->cols() == static_cast<Eigen::Index>(d2),
            "matrix_B must be d1 x d2");
    require(matrix_b->allFinite(), "matrix_B has non-finite entries");
  }
}

double GroundMetricSpec::distance(std::span<const double> u, std::span<const double> v) const {
  if (kind == Kind::kEuclidean) {
    double s = 0.0;
    for (std::size_t k = 0; k < u.size(); ++k) s += (u[k] - v[k]) * (u[k] - v[k]);
    return std::sqrt(s);
  }
  double first = 0.0;
  for (std::size_t k = 0; k < d1; ++k) first += (u[k] - v[k]) * (u[k] - v[k]);
  if (matrix_b) {
    Eigen::VectorXd dy(static_cast<Eigen::Index>(d2));
    for (std::size_t k = 0; k < d2; ++k) dy[static_cast<Eigen::Index>(k)] = u[d1 + k] - v[d1 + k];
    return std::sqrt(alpha * alpha * first + ((*matrix_b) * dy).squaredNorm());
  }
  double second = 0.0;
  for (std::size_t k = d1; k < d1 + d2; ++k) second += (u[k] - v[k]) * (u[k] - v[k]);
  return alpha * std::sqrt(first) + std::sqrt(second);
}

namespace {

void require_same_size(const EmpiricalMeasure& a, const EmpiricalMeasure& b) {
  if (a.size() != b.size()) fail(ErrorKind::kInvalidArgument, "unequal sample counts");
}

void require_1d(const EmpiricalMeasure& a, const EmpiricalMeasure& b) {
  if (a.dim() != 1 || b.dim() != 1) fail(ErrorKind::kInvalidArgument, "dimension: expected d = 1");
}

std::vector<double> sorted_values(const EmpiricalMeasure& m) {
  std::vector<double> v = m.coords();
  std::sort(v.begin(), v.end());
  return v;
}

Eigen::MatrixXd cost_matrix(const EmpiricalMeasure& a, const EmpiricalMeasure& b, double p,
                            const GroundMetricSpec& ground) {
  const std::size_t na = a.size();
  const std::size_t nb = b.size();
  Eigen::MatrixXd c(static_cast<Eigen::Index>(na), static_cast<Eigen::Index>(nb));
  parallel_chunks(na, [&](std::size_t lo, std::size_t hi) {
    for (std::size_t i = lo; i < hi; ++i)
      for (std::size_t j = 0; j < nb; ++j) {
        const double dist = ground.distance(a.point(i), b.point(j));
        c(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
            p == 2.0 ? dist * dist : (p == 1.0 ? dist : std::pow(dist, p));
      }
  });
  return c;
}

double log_sum_exp(const double* v, std::size_t n, std::size_t stride) {
  double mx = -std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < n; ++k) mx = std::max(mx, v[k * stride]);
  if (!std::isfinite(mx)) return mx;
  double s = 0.0;
  for (std::size_t k = 0; k < n; ++k) s += std::exp(v[k * stride] - mx);
  return mx + std::log(s);
}

MetricResult entropic_transport(const EmpiricalMeasure& a, const EmpiricalMeasure& b, double p,
                                const GroundMetricSpec& ground, const EntropicOptions& opts) {
  const Eigen::MatrixXd cost = cost_matrix(a, b, p, ground);
  const auto na = cost.rows();
  const auto nb = cost.cols();
  double target_eps = opts.absolute_eps;
  if (target_eps <= 0.0) {
    std::vector<double> all(cost.data(), cost.data() + cost.size());
    auto mid = all.begin() + static_cast<std::ptrdiff_t>(all.size() / 2);
    std::nth_element(all.begin(), mid, all.end());
    target_eps = opts.relative_eps * *mid;
    if (target_eps <= 0.0) target_eps = opts.relative_eps * std::max(cost.maxCoeff(), 1e-300);
  }

  MetricResult res;
  res.method = MetricResult::Method::kEntropic;
  res.regularization = target_eps;
  if (cost.maxCoeff() <= 0.0) {
    res.value = 0.0;
    return res;
  }

  const double log_a = -std::log(static_cast<double>(na));
  const double log_b = -std::log(static_cast<double>(nb));
  Eigen::VectorXd f = Eigen::VectorXd::Zero(na);
  Eigen::VectorXd g = Eigen::VectorXd::Zero(nb);
  // Row-major scratch for row-wise log-sum-exp.
  std::vector<double> scratch(static_cast<std::size_t>(std::max(na, nb)));

  auto update_f = [&](double eps) {
    for (Eigen::Index i = 0; i < na; ++i) {
      for (Eigen::Index j = 0; j < nb; ++j) scratch[static_cast<std::size_t>(j)] = (g[j] - cost(i, j)) / eps;
      f[i] = eps * log_a - eps * log_sum_exp(scratch.data(), static_cast<std::size_t>(nb), 1);
    }
  };
  auto update_g = [&](double eps) {
    for (Eigen::Index j = 0; j < nb; ++j) {
      for (Eigen::Index i = 0; i < na; ++i) scratch[static_cast<std::size_t>(i)] = (f[i] - cost(i, j)) / eps;
      g[j] = eps * log_b - eps * log_sum_exp(scratch.data(), static_cast<std::size_t>(na), 1);
    }
  };
  auto plan_of = [&](const Eigen::VectorXd& fv, const Eigen::VectorXd& gv, double eps) {
    Eigen::MatrixXd plan(na, nb);
    for (Eigen::Index j = 0; j < nb; ++j)
      for (Eigen::Index i = 0; i < na; ++i) plan(i, j) = std::exp((fv[i] + gv[j] - cost(i, j)) / eps);
    return plan;
  };
  auto row_violation = [&](double eps) {
    const Eigen::VectorXd rows = plan_of(f, g, eps).rowwise().sum();
    return (rows.array() - std::exp(log_a)).abs().sum();
  };
  // One damped Newton step on the dual in f, with g eliminated through its
  // exact column update. The reduced Hessian diag(r) - P diag(c)^-1 P^T is
  // applied matrix-free inside conjugate gradients. Returns false when no
  // step along the direction lowers the row violation.
  auto newton_step = [&](double eps, double current) {
    const Eigen::MatrixXd plan = plan_of(f, g, eps);
    const Eigen::VectorXd r = plan.rowwise().sum();
    const Eigen::VectorXd c_inv = plan.colwise().sum().transpose().cwiseInverse();
    auto apply = [&](const Eigen::VectorXd& x) -> Eigen::VectorXd {
      Eigen::VectorXd y = r.cwiseProduct(x) - plan * c_inv.cwiseProduct(plan.transpose() * x);
      return y.array() - y.mean();
    };
    Eigen::VectorXd rhs = -eps * (r.array() - std::exp(log_a)).matrix();
    rhs.array() -= rhs.mean();
    Eigen::VectorXd x = Eigen::VectorXd::Zero(na), res_k = rhs, dir = rhs;
    double rr = res_k.squaredNorm();
    const double stop = 1e-24 * rr;
    for (int k = 0; k < 4 * static_cast<int>(na) && rr > stop; ++k) {
      const Eigen::VectorXd q = apply(dir);
      const double curv = dir.dot(q);
      if (!(curv > 0.0)) break;
      const double alpha = rr / curv;
      x += alpha * dir;
      res_k -= alpha * q;
      const double rr_next = res_k.squaredNorm();
      dir = res_k + (rr_next / rr) * dir;
      rr = rr_next;
    }
    const Eigen::VectorXd f0 = f, g0 = g;
    for (double step = 1.0; step > 1e-4; step *= 0.5) {
      f = f0 + step * x;
      update_g(eps);
      if (row_violation(eps) < current) return true;
    }
    f = f0;
    g = g0;
    return false;
  };

  // Epsilon scaling: warm-start the target problem from coarser ones.
  int iterations = 0;
  double eps = std::max(cost.maxCoeff(), target_eps);
  while (eps > target_eps) {
    for (int k = 0; k < 20; ++k) {
      update_f(eps);
      update_g(eps);
    }
    eps = std::max(eps * 0.5, target_eps);
  }
  eps = target_eps;
  // Sinkhorn sweeps until the violation is small, then Newton steps (each
  // counted as one iteration); Sinkhorn resumes if Newton stalls.
  constexpr double kNewtonStart = 1e-3;
  double viol = std::numeric_limits<double>::infinity();
  bool newton = true;
  while (iterations < opts.max_iterations) {
    const bool newton_iteration = newton && viol < kNewtonStart;
    if (newton_iteration) {
      newton = newton_step(eps, viol);
    } else {
      update_f(eps);
      update_g(eps);
    }
    ++iterations;
    if (newton_iteration || iterations % 10 == 0 || iterations == opts.max_iterations) {
      viol = row_violation(eps);
      if (viol < opts.tolerance) break;
    }
  }
  res.iterations = iterations;
  res.marginal_violation = viol;
  if (!(viol < opts.tolerance)) {
    std::ostringstream os;
    os << "entropic transport did not converge: " << iterations
       << " iterations, marginal violation " << viol << ", eps " << eps;
    fail(ErrorKind::kNumerical, os.str());
  }

  // Round the plan onto the exact coupling polytope so its cost is a genuine
  // upper bound on the optimal transport cost.
  Eigen::MatrixXd plan(na, nb);
  for (Eigen::Index i = 0; i < na; ++i)
    for (Eigen::Index j = 0; j < nb; ++j) plan(i, j) = std::exp((f[i] + g[j] - cost(i, j)) / eps);
  const double wa = 1.0 / static_cast<double>(na);
  const double wb = 1.0 / static_cast<double>(nb);
  for (Eigen::Index i = 0; i < na; ++i) {
    const double r = plan.row(i).sum();
    if (r > wa) plan.row(i) *= wa / r;
  }
  for (Eigen::Index j = 0; j < nb; ++j) {
    const double c = plan.col(j).sum();
    if (c > wb) plan.col(j) *= wb / c;
  }
  Eigen::VectorXd err_r = Eigen::VectorXd::Constant(na, wa) - plan.rowwise().sum();
  Eigen::VectorXd err_c = Eigen::VectorXd::Constant(nb, wb) - plan.colwise().sum().transpose();
  const double mass = err_r.sum();
  if (mass > 0.0) plan.noalias() += err_r * err_c.transpose() / mass;

  const double primal = (plan.array() * cost.array()).sum();
  const double dual = f.sum() * wa + g.sum() * wb;
  res.duality_gap = std::max(0.0, primal - dual);
  res.value = std::pow(std::max(primal, 0.0), 1.0 / p);
  return res;
}

}  // namespace

double wasserstein_1d(const EmpiricalMeasure& a, const EmpiricalMeasure& b, double p) {
  require(p >= 1.0, "W_p requires p >= 1");
  require_1d(a, b);
  require_same_size(a, b);
  const auto x = sorted_values(a);
  const auto y = sorted_values(b);
  double s = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double d = std::abs(x[i] - y[i]);
    s += p == 2.0 ? d * d : std::pow(d, p);
  }
  return std::pow(s / static_cast<double>(x.size()), 1.0 / p);
}

std::vector<int> solve_assignment(const Eigen::MatrixXd& cost) {
  require(cost.rows() == cost.cols(), "assignment needs a square cost matrix");
  const int n = static_cast<int>(cost.rows());
  constexpr double kInf = std::numeric_limits<double>::infinity();
  // 1-based potentials; column 0 is the virtual source.
  std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0), minv(n + 1);
  std::vector<int> match(n + 1, 0), way(n + 1, 0);
  std::vector<char> used(n + 1);
  for (int i = 1; i <= n; ++i) {
    match[0] = i;
    int j0 = 0;
    std::fill(minv.begin(), minv.end(), kInf);
    std::fill(used.begin(), used.end(), 0);
    do {
      used[j0] = 1;
      const int i0 = match[j0];
      double delta = kInf;
      int j1 = 0;
      for (int j = 1; j <= n; ++j) {
        if (used[j]) continue;
        const double cur = cost(i0 - 1, j - 1) - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (int j = 0; j <= n; ++j) {
        if (used[j]) {
          u[match[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (match[j0] != 0);
    do {
      const int j1 = way[j0];
      match[j0] = match[j1];
      j0 = j1;
    } while (j0 != 0);
  }
  std::vector<int> row_to_col(n);
  for (int j = 1; j <= n; ++j) row_to_col[match[j] - 1] = j - 1;
  return row_to_col;
}

MetricResult wasserstein(const EmpiricalMeasure& a, const EmpiricalMeasure& b, double p,
                         const GroundMetricSpec& ground, MetricMethod method,
                         const EntropicOptions& entropic) {
  require(p >= 1.0, "W_p requires p >= 1");
  require(a.dim() == b.dim(), "dimension mismatch between measures");
  ground.validate(a.dim());

  if (method == MetricMethod::kAuto) {
    if (a.dim() == 1 && ground.kind == GroundMetricSpec::Kind::kEuclidean && a.size() == b.size()) {
      MetricResult r;
      r.method = MetricResult::Method::kSort1d;
      r.value = wasserstein_1d(a, b, p);
      return r;
    }
    method = (a.size() == b.size() && a.size() <= kExactAssignmentThreshold)
                 ? MetricMethod::kExactAssignment
                 : MetricMethod::kEntropic;
  }
  if (method == MetricMethod::kEntropic) return entropic_transport(a, b, p, ground, entropic);

  require_same_size(a, b);
  const Eigen::MatrixXd cost = cost_matrix(a, b, p, ground);
  const auto assignment = solve_assignment(cost);
  double total = 0.0;
  for (std::size_t i = 0; i < assignment.size(); ++i)
    total += cost(static_cast<Eigen::Index>(i), assignment[i]);
  MetricResult r;
  r.method = MetricResult::Method::kExactAssignment;
  r.value = std::pow(std::max(total, 0.0) / static_cast<double>(a.size()), 1.0 / p);
  return r;
}

double wasserstein2_to_gaussian_1d(const EmpiricalMeasure& a, double mean, double variance) {
  require(a.dim() == 1, "dimension: expected d = 1");
  require(variance >= 0.0, "variance must be nonnegative");
  const auto x = sorted_values(a);
  const std::size_t n = x.size();
  const double sd = std::sqrt(variance);
  if (sd == 0.0) {
    double s = 0.0;
    for (double v : x) s += (v - mean) * (v - mean);
    return std::sqrt(s / static_cast<double>(n));
  }
  const boost::math::normal_distribution<double> std_normal;
  auto density_at_quantile = [&](std::size_t k) {
    if (k == 0 || k == n) return 0.0;
    const double z = boost::math::quantile(std_normal, static_cast<double>(k) / static_cast<double>(n));
    return boost::math::pdf(std_normal, z);
  };
  // int_{(i-1)/N}^{i/N} Q(u) du = mean/N + sd (phi(z_{i-1}) - phi(z_i)).
  double cross = 0.0;
  double square = 0.0;
  double phi_prev = density_at_quantile(0);
  for (std::size_t i = 0; i < n; ++i) {
    const double phi_next = density_at_quantile(i + 1);
    const double band = mean / static_cast<double>(n) + sd * (phi_prev - phi_next);
    cross += x[i] * band;
    square += x[i] * x[i];
    phi_prev = phi_next;
  }
  const double w2sq = square / static_cast<double>(n) - 2.0 * cross + mean * mean + variance;
  return std::sqrt(std::max(w2sq, 0.0));
}

HistogramGrid HistogramGrid::uniform(std::span<const double> lo, std::span<const double> hi,
                                     std::span<const std::size_t> bins) {
  require(lo.size() == hi.size() && lo.size() == bins.size() && !lo.empty(), "grid spec size mismatch");
  HistogramGrid g;
  for (std::size_t k = 0; k < lo.size(); ++k) {
    require(bins[k] >= 1 && hi[k] > lo[k], "empty grid");
    std::vector<double> e(bins[k] + 1);
    for (std::size_t j = 0; j <= bins[k]; ++j)
      e[j] = lo[k] + (hi[k] - lo[k]) * static_cast<double>(j) / static_cast<double>(bins[k]);
    g.edges.push_back(std::move(e));
  }
  return g;
}

HistogramGrid HistogramGrid::freedman_diaconis(const EmpiricalMeasure& a, const EmpiricalMeasure& b) {
  require(a.dim() == b.dim(), "dimension mismatch between measures");
  HistogramGrid g;
  for (std::size_t k = 0; k < a.dim(); ++k) {
    std::vector<double> pooled = a.coordinate(k);
    const auto bk = b.coordinate(k);
    pooled.insert(pooled.end(), bk.begin(), bk.end());
    std::sort(pooled.begin(), pooled.end());
    const std::size_t n = pooled.size();
    auto quantile = [&](double q) {
      const double pos = q * static_cast<double>(n - 1);
      const auto lo = static_cast<std::size_t>(std::floor(pos));
      const std::size_t hi = std::min(lo + 1, n - 1);
      return pooled[lo] + (pos - static_cast<double>(lo)) * (pooled[hi] - pooled[lo]);
    };
    const double iqr = quantile(0.75) - quantile(0.25);
    const double range = pooled.back() - pooled.front();
    double width = 2.0 * iqr / std::cbrt(static_cast<double>(n));
    if (!(width > 0.0)) width = range > 0.0 ? range / std::sqrt(static_cast<double>(n)) : 1.0;
    const double lo = pooled.front() - width;
    const auto cells = static_cast<std::size_t>(std::ceil((range + 2.0 * width) / width));
    std::vector<double> e(cells + 1);
    for (std::size_t j = 0; j <= cells; ++j) e[j] = lo + width * static_cast<double>(j);
    g.edges.push_back(std::move(e));
  }
  return g;
}

HistogramGrid HistogramGrid::refined() const {
  HistogramGrid g;
  for (const auto& e : edges) {
    std::vector<double> r;
    r.reserve(2 * e.size() - 1);
    for (std::size_t j = 0; j + 1 < e.size(); ++j) {
      r.push_back(e[j]);
      r.push_back(0.5 * (e[j] + e[j + 1]));
    }
    r.push_back(e.back());
    g.edges.push_back(std::move(r));
  }
  return g;
}

namespace {

std::size_t cell_of(const HistogramGrid& grid, std::span<const double> x) {
  std::size_t index = 0;
  for (std::size_t k = 0; k < grid.edges.size(); ++k) {
    const auto& e = grid.edges[k];
    if (x[k] < e.front() || x[k] > e.back()) fail(ErrorKind::kInvalidArgument, "coverage: sample outside histogram grid");
    auto it = std::upper_bound(e.begin(), e.end(), x[k]);
    std::size_t c = static_cast<std::size_t>(it - e.begin());
    c = c == 0 ? 0 : c - 1;
    c = std::min(c, e.size() - 2);
    index = index * (e.size() - 1) + c;
  }
  return index;
}

}  // namespace

double tv_distance(const EmpiricalMeasure& a, const EmpiricalMeasure& b, const HistogramGrid& grid) {
  require(a.dim() == b.dim(), "dimension mismatch between measures");
  require(grid.edges.size() == a.dim(), "grid dimension mismatch");
  for (const auto& e : grid.edges) require(e.size() >= 2, "empty grid");
  std::map<std::size_t, double> diff;
  const double wa = 1.0 / static_cast<double>(a.size());
  const double wb = 1.0 / static_cast<double>(b.size());
  for (std::size_t i = 0; i < a.size(); ++i) diff[cell_of(grid, a.point(i))] += wa;
  for (std::size_t i = 0; i < b.size(); ++i) diff[cell_of(grid, b.point(i))] -= wb;
  double tv = 0.0;
  for (const auto& [cell, v] : diff) tv += std::abs(v);
  return std::min(tv, 2.0);
}

double tv_distance(const EmpiricalMeasure& a, const EmpiricalMeasure& b) {
  return tv_distance(a, b, HistogramGrid::freedman_diaconis(a, b));
}

namespace {

double gaussian_kl_fit(const EmpiricalMeasure& a, const EmpiricalMeasure& b) {
  const std::size_t d = a.dim();
  require(a.size() >= d + 2 && b.size() >= d + 2,
          "gaussian_moment_match needs at least d + 2 samples");
  const Eigen::VectorXd ma = a.mean();
  const Eigen::VectorXd mb = b.mean();
  const Eigen::MatrixXd va = a.covariance();
  const Eigen::MatrixXd vb = b.covariance();
  Eigen::LLT<Eigen::MatrixXd> la(va), lb(vb);
  if (la.info() != Eigen::Success || lb.info() != Eigen::Success)
    fail(ErrorKind::kNumerical, "degenerate sample: fitted covariance is singular");
  const double logdet_a = 2.0 * la.matrixL().toDenseMatrix().diagonal().array().log().sum();
  const double logdet_b = 2.0 * lb.matrixL().toDenseMatrix().diagonal().array().log().sum();
  if (!std::isfinite(logdet_a) || !std::isfinite(logdet_b))
    fail(ErrorKind::kNumerical, "degenerate sample: fitted covariance is singular");
  const Eigen::VectorXd dm = mb - ma;
  const double trace = lb.solve(va).trace();
  const double maha = dm.dot(lb.solve(dm));
  return 0.5 * (trace + maha - static_cast<double>(d) + logdet_b - logdet_a);
}

// k-th nearest neighbour distance from x to the points of m, skipping index
// `skip` (pass m.size() to skip nothing). Ties are resolved by index order.
double kth_neighbour(const EmpiricalMeasure& m, std::span<const double> x, std::size_t k,
                     std::size_t skip) {
  std::vector<std::pair<double, std::size_t>> dist;
  dist.reserve(m.size());
  for (std::size_t j = 0; j < m.size(); ++j) {
    if (j == skip) continue;
    double s = 0.0;
    const auto y = m.point(j);
    for (std::size_t c = 0; c < x.size(); ++c) s += (x[c] - y[c]) * (x[c] - y[c]);
    dist.emplace_back(s, j);
  }
  std::nth_element(dist.begin(), dist.begin() + static_cast<std::ptrdiff_t>(k - 1), dist.end());
  return std::sqrt(dist[k - 1].first);
}

double knn_kl(const EmpiricalMeasure& a, const EmpiricalMeasure& b) {
  require(a.size() >= 2 && b.size() >= 2, "knn entropy estimator needs N >= 2");
  const std::size_t n = a.size();
  const std::size_t m = b.size();
  const std::size_t k = std::min<std::size_t>({3, n - 1, m});
  std::vector<double> rho(n), nu(n);
  parallel_chunks(n, [&](std::size_t lo, std::size_t hi) {
    for (std::size_t i = lo; i < hi; ++i) {
      rho[i] = kth_neighbour(a, a.point(i), k, i);
      nu[i] = kth_neighbour(b, a.point(i), k, m);
    }
  });
  // Coincident points give zero distances; floor them at the smallest
  // positive distance seen so the log-ratio stays finite.
  double floor_dist = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < n; ++i) {
    if (rho[i] > 0.0) floor_dist = std::min(floor_dist, rho[i]);
    if (nu[i] > 0.0) floor_dist = std::min(floor_dist, nu[i]);
  }
  if (!std::isfinite(floor_dist)) return 0.0;
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) s += std::log(std::max(nu[i], floor_dist) / std::max(rho[i], floor_dist));
  return static_cast<double>(a.dim()) * s / static_cast<double>(n) +
         std::log(static_cast<double>(m) / static_cast<double>(n - 1));
}

}  // namespace

double relative_entropy(const EmpiricalMeasure& a, const EmpiricalMeasure& b, EntropyEstimator estimator) {
  require(a.dim() == b.dim(), "dimension mismatch between measures");
  return estimator == EntropyEstimator::kGaussianMomentMatch ? gaussian_kl_fit(a, b) : knn_kl(a, b);
}

bool stochastic_order_1d(const EmpiricalMeasure& a, const EmpiricalMeasure& b) {
  require_1d(a, b);
  require_same_size(a, b);
  const auto x = sorted_values(a);
  const auto y = sorted_values(b);
  for (std::size_t i = 0; i < x.size(); ++i)
    if (x[i] > y[i]) return false;
  return true;
}

}  // namespace mvsde
