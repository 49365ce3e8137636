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

#include <functional>
#include <limits>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "kinex/distribution.hpp"
#include "kinex/random.hpp"

namespace kinex {

// Histograms and entropy -----------------------------------------------------

struct Histogram {
  std::vector<double> bin_edges;
  std::vector<double> counts;  // weighted counts per half-open bin
  double total = 0.0;          // sum of counts (in-range mass)
  double underflow = 0.0;
  double overflow = 0.0;
};

/// Counts by half-open bins [e_k, e_{k+1}); out-of-range mass goes to
/// underflow/overflow.
Histogram histogram(const EmpiricalDistribution& dist,
                    const std::vector<double>& edges);

/// `bins` equal-width bins over [min, max]; the top edge is nudged up by one
/// ulp so the maximum lands in the last bin. A degenerate sample gives a
/// single bin.
std::vector<double> equal_width_edges(const std::vector<double>& samples,
                                      std::size_t bins = 100);

/// S/N = -sum P_k ln P_k with P_k = counts_k / total.
double entropy(const Histogram& hist);

/// Entropy with the default 100 equal-width bins over the sample range.
double binned_entropy(const std::vector<double>& samples, std::size_t bins = 100);

// Fits -----------------------------------------------------------------------

enum class FitModel { Exponential, Gamma, ParetoTail, TwoClass };

const char* to_string(FitModel model) noexcept;

struct FitReport {
  FitModel model = FitModel::Exponential;
  std::map<std::string, double> params;
  std::map<std::string, double> stderrs;
  double goodness = 0.0;  // sup |F_model - F_empirical| over the fit range
  double range_lo = 0.0;
  double range_hi = std::numeric_limits<double>::infinity();
  std::size_t n = 0;  // samples inside the fit range
  bool degenerate = false;

  double param(const std::string& name) const { return params.at(name); }
};

struct FitOptions {
  std::size_t min_samples = 100;
};

/// Maximum-likelihood exponential on [lo, hi] shifted to lo: T = mean(x - lo)
/// for an open range, truncated-exponential MLE otherwise. Reports "T".
FitReport fit_exponential(const EmpiricalDistribution& dist, double lo = 0.0,
                          double hi = std::numeric_limits<double>::infinity(),
                          FitOptions options = {});

/// Figure-style alternative: least-squares slope of ln CCDF against x on
/// [lo, hi]. Reports "T" = -1/slope and "intercept".
FitReport fit_exponential_ccdf(const EmpiricalDistribution& dist, double lo,
                               double hi);

/// Least-squares slope of ln CCDF against ln x on [lo, hi]; for a Pareto
/// tail this is -alpha. Reports "slope".
FitReport fit_ccdf_loglog(const EmpiricalDistribution& dist, double lo,
                          double hi);

/// Maximum-likelihood Gamma c m^beta e^(-m/T). Reports "beta" and "T".
FitReport fit_gamma(const EmpiricalDistribution& dist,
                    FitOptions options = {1000});

/// Hill estimator over samples >= threshold. Reports "alpha" (CCDF
/// exponent) with standard error alpha / sqrt(k).
FitReport fit_pareto_tail(const EmpiricalDistribution& dist, double threshold,
                          FitOptions options = {});

/// Exponential bulk plus Pareto tail. The tail scale is scanned over the
/// 80th-99.5th percentiles in 0.5% steps; at each candidate the mixture
/// weight, temperature and tail exponent are fitted by EM and the candidate
/// with the smallest sup-CDF distance wins. Reports "T", "alpha", "r_star"
/// (crossing of the fitted component CCDFs), "upper_share", "threshold" and
/// "f" = (<r> - T) / <r>, plus "mean". When the tail does not improve on a
/// pure exponential the report is flagged degenerate with T = <r>.
FitReport two_class_fit(const EmpiricalDistribution& dist,
                        FitOptions options = {10000});

/// Weighted two-sided Kolmogorov distance between the sample (restricted to
/// [lo, hi], renormalized) and a continuous CDF.
double sup_cdf_distance(const EmpiricalDistribution& dist,
                        const std::function<double(double)>& cdf,
                        double lo = -std::numeric_limits<double>::infinity(),
                        double hi = std::numeric_limits<double>::infinity());

// Lorenz / Gini ----------------------------------------------------------------

struct LorenzCurve {
  std::vector<double> x;
  std::vector<double> y;
  double gini = 0.0;
};

/// Sorted cumulative population and income shares starting at (0, 0) and
/// ending at (1, 1); Gini = 1 - 2 * trapezoid area.
LorenzCurve lorenz_curve(const EmpiricalDistribution& dist);

double gini(const EmpiricalDistribution& dist);

/// y = x + (1 - x) ln(1 - x); y(1) = 1.
double lorenz_exponential(double x);

/// y = (1 - f) [x + (1 - x) ln(1 - x)] + f Theta(x - 1).
double lorenz_two_class(double x, double f);

/// Gini of lorenz_two_class: 1 - 2 (1 - f) (1/2 - 1/4) = (1 + f) / 2.
double gini_two_class(double f);

/// Family income density r e^(-r/T) / T^2.
double family_income_pdf(double r, double temperature);

/// n/2 sums of disjoint random pairs.
EmpiricalDistribution pair_sum_samples(const EmpiricalDistribution& dist,
                                       RngStream& rng);

double pearson_correlation(const std::vector<double>& a,
                           const std::vector<double>& b);

// Summaries ------------------------------------------------------------------

double weighted_mean(const EmpiricalDistribution& dist);
double weighted_variance(const EmpiricalDistribution& dist);

/// Weighted quantile by the inverse of the empirical CDF.
double quantile(const EmpiricalDistribution& dist, double q);

/// (value, P[X >= value]) at every distinct sample value.
std::vector<std::pair<double, double>> ccdf_points(
    const EmpiricalDistribution& dist);

}  // namespace kinex
