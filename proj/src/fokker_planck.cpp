// Copyright 2026 The kinex Authors
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

#include "kinex/fokker_planck.hpp"

#include <algorithm>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>

#include "kinex/error.hpp"

namespace kinex {

namespace {

template <class F>
double integrate(F f, double lo, double hi, double tol = 1e-10) {
  using boost::math::quadrature::gauss_kronrod;
  double error = 0.0;
  return gauss_kronrod<double, 15>::integrate(f, lo, hi, 15, tol, &error);
}

void check_grid(const std::vector<double>& grid) {
  require(grid.size() >= 3, ErrorCode::InvalidParameter,
          "grid needs at least 3 points");
  for (std::size_t k = 0; k < grid.size(); ++k) {
    require(std::isfinite(grid[k]), ErrorCode::InvalidParameter,
            "grid values must be finite");
    if (k > 0)
      require(grid[k] > grid[k - 1], ErrorCode::InvalidParameter,
              "grid must be strictly increasing");
  }
}

}  // namespace

double trapezoid(const std::vector<double>& grid,
                 const std::vector<double>& values) {
  double sum = 0.0;
  for (std::size_t k = 1; k < grid.size(); ++k)
    sum += 0.5 * (values[k] + values[k - 1]) * (grid[k] - grid[k - 1]);
  return sum;
}

std::vector<double> geometric_grid(double lo, double hi, std::size_t points) {
  require(lo > 0.0 && hi > lo && points >= 2, ErrorCode::InvalidParameter,
          "geometric grid needs 0 < lo < hi and at least 2 points");
  std::vector<double> grid(points);
  const double step = std::log(hi / lo) / static_cast<double>(points - 1);
  for (std::size_t k = 0; k < points; ++k)
    grid[k] = lo * std::exp(step * static_cast<double>(k));
  grid.back() = hi;
  return grid;
}

std::vector<double> default_grid(const DriftDiffusion& dd, std::size_t points) {
  require(dd.additive_drift > 0.0 && dd.additive_diffusion > 0.0,
          ErrorCode::InvalidParameter,
          "default grid needs A0 > 0 and B0 > 0; pass an explicit range");
  const double temperature = dd.additive_diffusion / dd.additive_drift;
  double hi = 1e3 * temperature;
  if (dd.multiplicative_diffusion > 0.0)
    hi = std::max(hi, 1e3 * std::sqrt(dd.additive_diffusion /
                                      dd.multiplicative_diffusion));
  return geometric_grid(1e-3 * temperature, hi, std::max<std::size_t>(points, 4096));
}

GridDensity stationary_solution(const DriftDiffusion& dd,
                                const std::vector<double>& grid) {
  check_grid(grid);
  const double a0 = dd.additive_drift;
  const double a = dd.multiplicative_drift;
  const double b0 = dd.additive_diffusion;
  const double b = dd.multiplicative_diffusion;
  require(std::isfinite(a0) && std::isfinite(a) && std::isfinite(b0) &&
              std::isfinite(b),
          ErrorCode::InvalidParameter, "coefficients must be finite");
  require(b0 >= 0.0 && b >= 0.0, ErrorCode::InvalidParameter,
          "diffusion coefficients must be non-negative");
  require(a0 > 0.0 || a > 0.0, ErrorCode::InvalidParameter,
          "a stationary solution needs A0 > 0 or a > 0");
  // Large-r normalizability: a power tail r^-(2 + a/b) needs a/b > -1; with
  // b = 0 the tail is Gaussian for a > 0 and exponential for a = 0, A0 > 0.
  if (b > 0.0) {
    require(a / b > -1.0, ErrorCode::InvalidParameter,
            "non-normalizable: tail exponent 2 + a/b must exceed 1");
  } else {
    require(b0 > 0.0, ErrorCode::InvalidParameter,
            "diffusion vanishes identically");
    require(a > 0.0 || (a == 0.0 && a0 > 0.0), ErrorCode::InvalidParameter,
            "non-normalizable: drift does not confine large incomes");
  }
  for (double r : grid)
    require(dd.diffusion(r) > 0.0, ErrorCode::InvalidParameter,
            "diffusion B(r) must be positive on the grid");
  if (grid.front() < 0.0 && grid.back() > 0.0)
    require(b0 > 0.0, ErrorCode::InvalidParameter,
            "diffusion B(r) vanishes inside the grid");

  const std::size_t n = grid.size();
  auto ratio = [&](double r) { return dd.drift(r) / dd.diffusion(r); };
  std::vector<double> log_p(n);
  double cumulative = 0.0;
  log_p[0] = -std::log(dd.diffusion(grid[0]));
  for (std::size_t k = 1; k < n; ++k) {
    cumulative += integrate(ratio, grid[k - 1], grid[k]);
    log_p[k] = -cumulative - std::log(dd.diffusion(grid[k]));
  }
  const double peak = *std::max_element(log_p.begin(), log_p.end());

  GridDensity out;
  out.grid = grid;
  out.density.resize(n);
  for (std::size_t k = 0; k < n; ++k) out.density[k] = std::exp(log_p[k] - peak);
  const double mass = trapezoid(out.grid, out.density);
  require(std::isfinite(mass) && mass > 0.0, ErrorCode::InvalidParameter,
          "stationary density is not normalizable on the grid");
  for (double& p : out.density) p /= mass;
  out.normalized = true;

  // Truncation check: the local log-log slope at the top of the grid bounds
  // the mass beyond it.
  const double r1 = grid[n - 2];
  const double r2 = grid[n - 1];
  const double p1 = out.density[n - 2];
  const double p2 = out.density[n - 1];
  if (p2 > 0.0 && r2 > 0.0 && r1 > 0.0) {
    const double slope = -(std::log(p2) - std::log(p1)) / (std::log(r2) - std::log(r1));
    require(slope > 1.0, ErrorCode::InvalidParameter,
            "density does not decay fast enough at the top of the grid");
    const double beyond = p2 * r2 / (slope - 1.0);
    require(beyond < 1e-3, ErrorCode::InvalidParameter,
            "grid truncates more than 0.1% of the probability mass; extend "
            "the grid (estimated tail mass " + std::to_string(beyond) + ")");
  }
  return out;
}

std::vector<double> stationarity_residual(const DriftDiffusion& dd,
                                          const GridDensity& density) {
  const auto& r = density.grid;
  const auto& p = density.density;
  std::vector<double> out;
  if (r.size() < 3) return out;
  out.reserve(r.size() - 2);
  for (std::size_t k = 1; k + 1 < r.size(); ++k) {
    const double hm = r[k] - r[k - 1];
    const double hp = r[k + 1] - r[k];
    const double fm = dd.diffusion(r[k - 1]) * p[k - 1];
    const double f0 = dd.diffusion(r[k]) * p[k];
    const double fp = dd.diffusion(r[k + 1]) * p[k + 1];
    const double deriv = -hp / (hm * (hm + hp)) * fm +
                         (hp - hm) / (hm * hp) * f0 +
                         hm / (hp * (hm + hp)) * fp;
    const double ap = dd.drift(r[k]) * p[k];
    const double scale = std::abs(ap) + std::abs(deriv);
    out.push_back(scale > 0.0 ? (deriv + ap) / scale : 0.0);
  }
  return out;
}

InterpolatingDensity::InterpolatingDensity(double kappa, double exponent,
                                           double r0)
    : kappa_(kappa), exponent_(exponent), r0_(r0) {
  require(std::isfinite(kappa) && std::isfinite(exponent) &&
              std::isfinite(r0) && r0 > 0.0,
          ErrorCode::InvalidParameter, "invalid interpolating parameters");
  require(exponent > 0.5, ErrorCode::InvalidParameter,
          "non-normalizable: tail exponent 2 + a/b must exceed 1");

  // Integrate over dyadic shells around the natural scale of the law.
  const double scale = std::max(r0, std::abs(kappa) * r0);
  constexpr int kLow = -60;
  constexpr int kHigh = 200;
  double reference = -std::numeric_limits<double>::infinity();
  for (int k = kLow; k <= kHigh; k += 2)
    reference = std::max(reference, unnormalized_log(std::ldexp(scale, k)));
  auto f = [&](double r) { return std::exp(unnormalized_log(r) - reference); };

  double total = integrate(f, 0.0, std::ldexp(scale, kLow), 1e-12);
  for (int k = kLow; k < kHigh; ++k) {
    const double lo = std::ldexp(scale, k);
    const double hi = std::ldexp(scale, k + 1);
    const double piece = integrate(f, lo, hi, 1e-12);
    total += piece;
    if (k > 8 && piece < 1e-18 * total) {
      // Remaining power tail ~ r^-(2e) beyond hi.
      total += f(hi) * hi / (2.0 * exponent_ - 1.0);
      break;
    }
  }
  require(std::isfinite(total) && total > 0.0, ErrorCode::InvalidParameter,
          "interpolating density is not normalizable");
  log_norm_ = reference + std::log(total);
}

InterpolatingDensity InterpolatingDensity::from(const DriftDiffusion& dd) {
  const double b = dd.multiplicative_diffusion;
  const double b0 = dd.additive_diffusion;
  require(b > 0.0 && b0 > 0.0, ErrorCode::InvalidParameter,
          "closed form needs b > 0 and B0 > 0");
  const double r0 = std::sqrt(b0 / b);
  return InterpolatingDensity(dd.additive_drift / (b * r0),
                              1.0 + dd.multiplicative_drift / (2.0 * b), r0);
}

double InterpolatingDensity::unnormalized_log(double r) const {
  if (r < 0.0) return -std::numeric_limits<double>::infinity();
  return kappa_ * std::atan2(r0_, r) - exponent_ * std::log(r0_ * r0_ + r * r);
}

double InterpolatingDensity::log_density(double r) const {
  return unnormalized_log(r) - log_norm_;
}

double InterpolatingDensity::operator()(double r) const {
  return std::exp(log_density(r));
}

double pdf_interpolating(double r, double temperature, double a_over_2b,
                         double r0) {
  require(temperature > 0.0 && a_over_2b > 0.0 && r0 > 0.0,
          ErrorCode::InvalidParameter,
          "interpolating law needs positive T_r, a/2b and r0");
  struct Cache {
    double t = 0.0, e = 0.0, r0 = 0.0;
    InterpolatingDensity law{1.0, 1.5, 1.0};
  };
  thread_local Cache cache;
  if (cache.t != temperature || cache.e != a_over_2b || cache.r0 != r0) {
    cache.law = InterpolatingDensity(r0 / temperature, 1.0 + a_over_2b, r0);
    cache.t = temperature;
    cache.e = a_over_2b;
    cache.r0 = r0;
  }
  return cache.law(r);
}

double pdf_gamma(double m, double beta, double temperature) {
  require(std::isfinite(beta) && beta > -1.0, ErrorCode::InvalidParameter,
          "Gamma law needs beta > -1");
  require(std::isfinite(temperature) && temperature > 0.0,
          ErrorCode::InvalidParameter, "temperature must be positive");
  if (m < 0.0) return 0.0;
  if (m == 0.0) {
    if (beta > 0.0) return 0.0;
    if (beta == 0.0) return 1.0 / temperature;
    return std::numeric_limits<double>::infinity();
  }
  const double x = m / temperature;
  return std::exp(beta * std::log(x) - x - std::lgamma(1.0 + beta)) /
         temperature;
}

double beta_from_gamma(double gamma) {
  require(gamma > 0.0 && gamma < 1.0, ErrorCode::InvalidParameter,
          "gamma must lie in (0, 1)");
  return -1.0 - std::numbers::ln2 / std::log1p(-gamma);
}

double beta_from_lambda(double lambda) {
  require(lambda >= 0.0 && lambda < 1.0, ErrorCode::InvalidParameter,
          "lambda must lie in [0, 1)");
  return 3.0 * lambda / (1.0 - lambda);
}

}  // namespace kinex
