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

#pragma once

#include <vector>

namespace kinex {

/// Income diffusion with drift A(r) = A0 + a r and diffusion
/// B(r) = B0 + b r^2, where A = -<dr>/dt and B = <dr^2>/(2 dt).
struct DriftDiffusion {
  double additive_drift = 0.0;             // A0
  double multiplicative_drift = 0.0;       // a
  double additive_diffusion = 0.0;         // B0
  double multiplicative_diffusion = 0.0;   // b

  double drift(double r) const { return additive_drift + multiplicative_drift * r; }
  double diffusion(double r) const {
    return additive_diffusion + multiplicative_diffusion * r * r;
  }
};

struct GridDensity {
  std::vector<double> grid;
  std::vector<double> density;
  bool normalized = false;
};

/// Trapezoid integral of `values` over `grid`.
double trapezoid(const std::vector<double>& grid,
                 const std::vector<double>& values);

/// Geometric grid of `points` incomes spanning [lo, hi].
std::vector<double> geometric_grid(double lo, double hi, std::size_t points);

/// Default grid: [T_r 1e-3, max(1e3 T_r, 1e3 r0)] with 4096 points, where
/// T_r = B0/A0 and r0 = sqrt(B0/b). Needs A0 > 0 and B0 > 0.
std::vector<double> default_grid(const DriftDiffusion& dd,
                                 std::size_t points = 4096);

/// Stationary solution P(r) = c / B(r) exp(-int A/B dr) on `grid`,
/// normalized by the trapezoid rule on the grid. The integral of A/B is
/// taken cell by cell with adaptive Gauss-Kronrod quadrature (target 1e-10
/// per cell). Throws InvalidParameter for a non-normalizable process or a
/// grid on which B <= 0.
GridDensity stationary_solution(const DriftDiffusion& dd,
                                const std::vector<double>& grid);

/// Residual d(BP)/dr + A P at interior points by the three-point
/// non-uniform difference formula, scaled by |A P| + |d(BP)/dr|.
std::vector<double> stationarity_residual(const DriftDiffusion& dd,
                                          const GridDensity& density);

/// Closed form of the stationary law when b > 0 and B0 > 0:
///   P(r) ~ exp(kappa atan(r0 / r)) / (r0^2 + r^2)^e,
/// kappa = A0 / (b r0), e = 1 + a / (2 b). With A0 > 0 this is
/// exp(-(r0/T_r) atan(r/r0)) / [1 + (r/r0)^2]^(1 + a/2b) up to a constant.
/// The atan(r0/r) form stays finite as r0 -> 0, where it tends to
/// exp(A0 / (b r)) r^(-2 e), the relative-wealth law when A0 = -J.
/// Normalized on [0, inf) by adaptive quadrature.
class InterpolatingDensity {
 public:
  InterpolatingDensity(double kappa, double exponent, double r0);
  static InterpolatingDensity from(const DriftDiffusion& dd);

  double operator()(double r) const;
  double log_density(double r) const;
  double tail_exponent() const { return 2.0 * exponent_; }

 private:
  double unnormalized_log(double r) const;

  double kappa_;
  double exponent_;
  double r0_;
  double log_norm_ = 0.0;
};

/// Normalized interpolating density with income temperature T_r, ratio a/2b
/// and crossover r0; low-r behavior exp(-r/T_r), tail exponent 2 + a/b.
double pdf_interpolating(double r, double temperature, double a_over_2b,
                         double r0);

/// Gamma law c m^beta exp(-m/T), c = 1 / (T^(1+beta) Gamma(1+beta)).
double pdf_gamma(double m, double beta, double temperature);

/// beta = -1 - ln 2 / ln(1 - gamma) for the proportional rule.
double beta_from_gamma(double gamma);

/// beta = 3 lambda / (1 - lambda) for the saving rule.
double beta_from_lambda(double lambda);

}  // namespace kinex
