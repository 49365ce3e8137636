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

#include "kinex/analysis.hpp"

#include <algorithm>
#include <boost/math/special_functions/digamma.hpp>
#include <boost/math/special_functions/gamma.hpp>
#include <boost/math/special_functions/trigamma.hpp>
#include <cmath>
#include <numeric>
#include <string>

#include "kinex/error.hpp"

namespace kinex {

double EmpiricalDistribution::total_weight() const noexcept {
  if (weights.empty()) return static_cast<double>(samples.size());
  return std::accumulate(weights.begin(), weights.end(), 0.0);
}

void validate(const EmpiricalDistribution& dist) {
  require(!dist.samples.empty(), ErrorCode::InvalidData, "no samples");
  for (double x : dist.samples)
    require(std::isfinite(x), ErrorCode::InvalidData, "non-finite sample");
  if (dist.weighted()) {
    require(dist.weights.size() == dist.samples.size(), ErrorCode::InvalidData,
            "weights and samples differ in length");
    for (double w : dist.weights)
      require(std::isfinite(w) && w >= 0.0, ErrorCode::InvalidData,
              "weights must be finite and non-negative");
    require(dist.total_weight() > 0.0, ErrorCode::InvalidData,
            "weights sum to zero");
  }
}

const char* to_string(FitModel model) noexcept {
  switch (model) {
    case FitModel::Exponential: return "exponential";
    case FitModel::Gamma: return "gamma";
    case FitModel::ParetoTail: return "pareto-tail";
    case FitModel::TwoClass: return "two-class";
  }
  return "unknown";
}

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

struct Sorted {
  std::vector<double> x;
  std::vector<double> w;
  double total = 0.0;

  std::size_t size() const { return x.size(); }
  double effective_n() const {
    double sq = 0.0;
    for (double v : w) sq += v * v;
    return sq > 0.0 ? total * total / sq : 0.0;
  }
};

Sorted sorted_in_range(const EmpiricalDistribution& dist, double lo, double hi) {
  validate(dist);
  std::vector<std::size_t> idx;
  idx.reserve(dist.size());
  for (std::size_t k = 0; k < dist.size(); ++k) {
    const double x = dist.samples[k];
    if (x >= lo && x <= hi && dist.weight(k) > 0.0) idx.push_back(k);
  }
  std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
    return dist.samples[a] < dist.samples[b];
  });
  Sorted s;
  s.x.reserve(idx.size());
  s.w.reserve(idx.size());
  for (std::size_t k : idx) {
    s.x.push_back(dist.samples[k]);
    s.w.push_back(dist.weight(k));
    s.total += dist.weight(k);
  }
  return s;
}

template <class Cdf>
double ks_sorted(const Sorted& s, Cdf&& cdf) {
  double best = 0.0;
  double cum = 0.0;
  std::size_t k = 0;
  while (k < s.size()) {
    const double v = s.x[k];
    const double before = cum / s.total;
    while (k < s.size() && s.x[k] == v) cum += s.w[k++];
    const double after = cum / s.total;
    const double f = cdf(v);
    best = std::max({best, std::abs(f - before), std::abs(f - after)});
  }
  return best;
}

void need_samples(std::size_t have, std::size_t want, const char* what) {
  if (have < want)
    raise(ErrorCode::InsufficientData,
          std::string(what) + " needs at least " + std::to_string(want) +
              " samples in range, got " + std::to_string(have));
}

// Solves T - L / expm1(L/T) = m for the truncated exponential on [0, L].
double truncated_exponential_temperature(double mean_shift, double length) {
  if (!(mean_shift > 0.0) || !(mean_shift < 0.5 * length))
    raise(ErrorCode::FitDegenerate,
          "truncated exponential has no finite temperature for this sample");
  auto g = [&](double t) { return t - length / std::expm1(length / t); };
  double lo = mean_shift * 1e-6;
  double hi = length * 1e6;
  for (int it = 0; it < 200; ++it) {
    const double mid = std::sqrt(lo * hi);
    if (g(mid) < mean_shift)
      lo = mid;
    else
      hi = mid;
    if (hi / lo - 1.0 < 1e-15) break;
  }
  return std::sqrt(lo * hi);
}

struct LineFit {
  double slope;
  double intercept;
  double slope_stderr;
};

LineFit least_squares(const std::vector<double>& u, const std::vector<double>& v) {
  const double n = static_cast<double>(u.size());
  const double mu = std::accumulate(u.begin(), u.end(), 0.0) / n;
  const double mv = std::accumulate(v.begin(), v.end(), 0.0) / n;
  double suu = 0.0;
  double suv = 0.0;
  for (std::size_t k = 0; k < u.size(); ++k) {
    suu += (u[k] - mu) * (u[k] - mu);
    suv += (u[k] - mu) * (v[k] - mv);
  }
  if (!(suu > 0.0))
    raise(ErrorCode::InsufficientData, "regression needs distinct abscissae");
  LineFit fit;
  fit.slope = suv / suu;
  fit.intercept = mv - fit.slope * mu;
  double sse = 0.0;
  for (std::size_t k = 0; k < u.size(); ++k) {
    const double e = v[k] - fit.intercept - fit.slope * u[k];
    sse += e * e;
  }
  fit.slope_stderr = u.size() > 2 ? std::sqrt(sse / (n - 2.0) / suu) : 0.0;
  return fit;
}

// Distinct (value, ln CCDF) pairs of the whole distribution, kept on [lo, hi].
void log_ccdf_in_range(const EmpiricalDistribution& dist, double lo, double hi,
                       bool log_x, std::vector<double>& u,
                       std::vector<double>& v) {
  for (const auto& [x, c] : ccdf_points(dist)) {
    if (x < lo || x > hi || !(c > 0.0)) continue;
    if (log_x && !(x > 0.0)) continue;
    u.push_back(log_x ? std::log(x) : x);
    v.push_back(std::log(c));
  }
  if (u.size() < 2)
    raise(ErrorCode::InsufficientData,
          "CCDF regression needs at least two distinct values in range");
}

}  // namespace

// Histograms ------------------------------------------------------------------

Histogram histogram(const EmpiricalDistribution& dist,
                    const std::vector<double>& edges) {
  require(edges.size() >= 2, ErrorCode::InvalidParameter,
          "histogram needs at least 2 edges");
  for (std::size_t k = 1; k < edges.size(); ++k)
    require(edges[k] > edges[k - 1], ErrorCode::InvalidParameter,
            "histogram edges must be strictly increasing");
  validate(dist);
  Histogram h;
  h.bin_edges = edges;
  h.counts.assign(edges.size() - 1, 0.0);
  for (std::size_t k = 0; k < dist.size(); ++k) {
    const double x = dist.samples[k];
    const double w = dist.weight(k);
    if (x < edges.front()) {
      h.underflow += w;
    } else if (x >= edges.back()) {
      h.overflow += w;
    } else {
      const auto it = std::upper_bound(edges.begin(), edges.end(), x);
      h.counts[static_cast<std::size_t>(it - edges.begin()) - 1] += w;
    }
  }
  h.total = std::accumulate(h.counts.begin(), h.counts.end(), 0.0);
  return h;
}

std::vector<double> equal_width_edges(const std::vector<double>& samples,
                                      std::size_t bins) {
  require(!samples.empty() && bins >= 1, ErrorCode::InvalidParameter,
          "binning needs samples and at least one bin");
  const auto [mn, mx] = std::minmax_element(samples.begin(), samples.end());
  const double lo = *mn;
  const double hi = *mx;
  if (!(hi > lo)) return {lo, std::nextafter(lo, kInf) + std::abs(lo) * 1e-12 + 1e-300};
  std::vector<double> edges(bins + 1);
  for (std::size_t k = 0; k <= bins; ++k)
    edges[k] = lo + (hi - lo) * static_cast<double>(k) / static_cast<double>(bins);
  edges.back() = std::nextafter(hi, kInf);
  return edges;
}

double entropy(const Histogram& hist) {
  if (!(hist.total > 0.0)) return 0.0;
  double s = 0.0;
  for (double c : hist.counts) {
    if (c <= 0.0) continue;
    const double p = c / hist.total;
    s -= p * std::log(p);
  }
  return s;
}

double binned_entropy(const std::vector<double>& samples, std::size_t bins) {
  EmpiricalDistribution dist(samples);
  return entropy(histogram(dist, equal_width_edges(samples, bins)));
}

double sup_cdf_distance(const EmpiricalDistribution& dist,
                        const std::function<double(double)>& cdf, double lo,
                        double hi) {
  const Sorted s = sorted_in_range(dist, lo, hi);
  if (s.size() == 0) raise(ErrorCode::InsufficientData, "no samples in range");
  return ks_sorted(s, cdf);
}

// Fits ------------------------------------------------------------------------

FitReport fit_exponential(const EmpiricalDistribution& dist, double lo,
                          double hi, FitOptions options) {
  require(hi > lo, ErrorCode::InvalidParameter, "fit range is empty");
  const Sorted s = sorted_in_range(dist, lo, hi);
  need_samples(s.size(), std::max<std::size_t>(options.min_samples, 1),
               "exponential fit");
  double shift = 0.0;
  for (std::size_t k = 0; k < s.size(); ++k) shift += s.w[k] * (s.x[k] - lo);
  shift /= s.total;

  double t;
  double norm = 1.0;
  if (std::isinf(hi)) {
    if (!(shift > 0.0))
      raise(ErrorCode::FitDegenerate, "all samples sit at the range minimum");
    t = shift;
  } else {
    t = truncated_exponential_temperature(shift, hi - lo);
    norm = -std::expm1(-(hi - lo) / t);
  }
  FitReport r;
  r.model = FitModel::Exponential;
  r.params["T"] = t;
  r.stderrs["T"] = t / std::sqrt(s.effective_n());
  r.range_lo = lo;
  r.range_hi = hi;
  r.n = s.size();
  r.goodness = ks_sorted(s, [&](double x) {
    return -std::expm1(-(x - lo) / t) / norm;
  });
  return r;
}

FitReport fit_exponential_ccdf(const EmpiricalDistribution& dist, double lo,
                               double hi) {
  std::vector<double> u;
  std::vector<double> v;
  log_ccdf_in_range(dist, lo, hi, false, u, v);
  const LineFit line = least_squares(u, v);
  if (!(line.slope < 0.0))
    raise(ErrorCode::FitDegenerate, "CCDF does not decay on the fit range");
  FitReport r;
  r.model = FitModel::Exponential;
  r.params["T"] = -1.0 / line.slope;
  r.params["intercept"] = line.intercept;
  r.stderrs["T"] = line.slope_stderr / (line.slope * line.slope);
  r.range_lo = lo;
  r.range_hi = hi;
  r.n = u.size();
  double worst = 0.0;
  for (std::size_t k = 0; k < u.size(); ++k)
    worst = std::max(worst, std::abs(std::exp(v[k]) -
                                     std::exp(line.intercept + line.slope * u[k])));
  r.goodness = worst;
  return r;
}

FitReport fit_ccdf_loglog(const EmpiricalDistribution& dist, double lo,
                          double hi) {
  std::vector<double> u;
  std::vector<double> v;
  log_ccdf_in_range(dist, lo, hi, true, u, v);
  const LineFit line = least_squares(u, v);
  FitReport r;
  r.model = FitModel::ParetoTail;
  r.params["slope"] = line.slope;
  r.params["alpha"] = -line.slope;
  r.params["intercept"] = line.intercept;
  r.stderrs["slope"] = line.slope_stderr;
  r.range_lo = lo;
  r.range_hi = hi;
  r.n = u.size();
  double worst = 0.0;
  for (std::size_t k = 0; k < u.size(); ++k)
    worst = std::max(worst, std::abs(std::exp(v[k]) -
                                     std::exp(line.intercept + line.slope * u[k])));
  r.goodness = worst;
  return r;
}

FitReport fit_gamma(const EmpiricalDistribution& dist, FitOptions options) {
  validate(dist);
  for (std::size_t k = 0; k < dist.size(); ++k)
    if (dist.weight(k) > 0.0)
      require(dist.samples[k] > 0.0, ErrorCode::InvalidData,
              "Gamma fit needs strictly positive samples");
  const Sorted s = sorted_in_range(dist, 0.0, kInf);
  need_samples(s.size(), options.min_samples, "Gamma fit");

  double mean = 0.0;
  double mean_log = 0.0;
  for (std::size_t k = 0; k < s.size(); ++k) {
    mean += s.w[k] * s.x[k];
    mean_log += s.w[k] * std::log(s.x[k]);
  }
  mean /= s.total;
  mean_log /= s.total;
  double var = 0.0;
  for (std::size_t k = 0; k < s.size(); ++k)
    var += s.w[k] * (s.x[k] - mean) * (s.x[k] - mean);
  var /= s.total;
  const double target = std::log(mean) - mean_log;
  if (!(target > 0.0) || !(var > 0.0))
    raise(ErrorCode::FitDegenerate, "Gamma fit needs non-constant samples");

  // Newton on ln k - digamma(k) = ln(mean) - mean(ln x), started from the
  // method-of-moments shape mean^2 / var.
  double shape = mean * mean / var;
  for (int it = 0; it < 100; ++it) {
    const double f = std::log(shape) - boost::math::digamma(shape) - target;
    const double df = 1.0 / shape - boost::math::trigamma(shape);
    double next = shape - f / df;
    if (!(next > 0.0)) next = 0.5 * shape;
    const bool done = std::abs(next - shape) <= 1e-14 * shape;
    shape = next;
    if (done) break;
  }
  const double scale = mean / shape;
  const double n_eff = s.effective_n();
  const double tri = boost::math::trigamma(shape);
  const double det = shape * tri - 1.0;

  FitReport r;
  r.model = FitModel::Gamma;
  r.params["beta"] = shape - 1.0;
  r.params["T"] = scale;
  r.stderrs["beta"] = std::sqrt(shape / (n_eff * det));
  r.stderrs["T"] = scale * std::sqrt(tri / (n_eff * det));
  r.range_lo = 0.0;
  r.n = s.size();
  r.goodness =
      ks_sorted(s, [&](double x) { return boost::math::gamma_p(shape, x / scale); });
  return r;
}

FitReport fit_pareto_tail(const EmpiricalDistribution& dist, double threshold,
                          FitOptions options) {
  require(std::isfinite(threshold) && threshold > 0.0,
          ErrorCode::InvalidParameter, "Pareto threshold must be positive");
  const Sorted s = sorted_in_range(dist, threshold, kInf);
  need_samples(s.size(), options.min_samples, "Pareto tail fit");
  double log_sum = 0.0;
  for (std::size_t k = 0; k < s.size(); ++k)
    log_sum += s.w[k] * std::log(s.x[k] / threshold);
  if (!(log_sum > 0.0))
    raise(ErrorCode::InsufficientData,
          "all exceedances equal the threshold; tail exponent undefined");
  const double alpha = s.total / log_sum;
  FitReport r;
  r.model = FitModel::ParetoTail;
  r.params["alpha"] = alpha;
  r.stderrs["alpha"] = alpha / std::sqrt(s.effective_n());
  r.range_lo = threshold;
  r.n = s.size();
  r.goodness = ks_sorted(
      s, [&](double x) { return 1.0 - std::pow(x / threshold, -alpha); });
  return r;
}

namespace {

struct MixtureFit {
  double temperature;
  double alpha;
  double share;      // weight of the Pareto component
  double threshold;  // Pareto scale
  double goodness;
  double tail_weight;
};

MixtureFit fit_mixture(const Sorted& s, std::size_t first_above, double u) {
  // Samples below u are exponential; above u each sample is Exp or Pareto.
  double below_w = 0.0;
  double below_wx = 0.0;
  for (std::size_t k = 0; k < first_above; ++k) {
    below_w += s.w[k];
    below_wx += s.w[k] * s.x[k];
  }
  double above_w = s.total - below_w;
  double t = below_w > 0.0 ? below_wx / below_w : s.x.front();
  t = std::max(t, 1e-300);
  double share =
      std::clamp(above_w / s.total - std::exp(-u / t), 1e-6, 1.0 - 1e-6);
  double alpha = 1.0;
  {
    double lw = 0.0;
    for (std::size_t k = first_above; k < s.size(); ++k)
      lw += s.w[k] * std::log(s.x[k] / u);
    if (lw > 0.0) alpha = above_w / lw;
  }
  std::vector<double> resp(s.size() - first_above);
  for (int it = 0; it < 1000; ++it) {
    const double log_e = std::log1p(-share) - std::log(t);
    const double log_p = std::log(share) + std::log(alpha) + alpha * std::log(u);
    double rw = 0.0;
    double rl = 0.0;
    double ew = below_w;
    double ex = below_wx;
    for (std::size_t k = first_above; k < s.size(); ++k) {
      const double x = s.x[k];
      const double le = log_e - x / t;
      const double lp = log_p - (alpha + 1.0) * std::log(x);
      const double r = 1.0 / (1.0 + std::exp(le - lp));
      resp[k - first_above] = r;
      rw += s.w[k] * r;
      rl += s.w[k] * r * std::log(x / u);
      ew += s.w[k] * (1.0 - r);
      ex += s.w[k] * (1.0 - r) * x;
    }
    const double new_share = std::clamp(rw / s.total, 1e-12, 1.0 - 1e-12);
    const double new_t = ew > 0.0 ? ex / ew : t;
    const double new_alpha = rl > 0.0 ? rw / rl : alpha;
    const bool done = std::abs(new_share - share) <= 1e-12 &&
                      std::abs(new_t - t) <= 1e-12 * t &&
                      std::abs(new_alpha - alpha) <= 1e-10 * alpha;
    share = new_share;
    t = new_t;
    alpha = new_alpha;
    if (done) break;
  }
  MixtureFit m{t, alpha, share, u, 0.0, 0.0};
  for (std::size_t k = first_above; k < s.size(); ++k)
    m.tail_weight += s.w[k] * resp[k - first_above];
  m.goodness = ks_sorted(s, [&](double x) {
    const double fe = -std::expm1(-x / t);
    const double fp = x >= u ? 1.0 - std::pow(x / u, -alpha) : 0.0;
    return (1.0 - share) * fe + share * fp;
  });
  return m;
}

// Largest r >= u where (1 - pi) e^(-r/T) = pi (r/u)^-alpha; u if the power
// law lies above the exponential everywhere past u.
double component_crossing(const MixtureFit& m) {
  auto h = [&](double r) {
    return std::log1p(-m.share) - r / m.temperature - std::log(m.share) +
           m.alpha * std::log(r / m.threshold);
  };
  const double start = std::max(m.threshold, m.alpha * m.temperature);
  if (h(start) <= 0.0) {
    // Decreasing on [u, start] only if start == u; otherwise look for a root
    // on the rising part.
    if (h(m.threshold) >= 0.0) return m.threshold;
    return m.threshold;
  }
  double lo = start;
  double hi = start * 2.0;
  while (h(hi) > 0.0) hi *= 2.0;
  for (int it = 0; it < 200 && hi - lo > 1e-12 * hi; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (h(mid) > 0.0)
      lo = mid;
    else
      hi = mid;
  }
  return 0.5 * (lo + hi);
}

}  // namespace

FitReport two_class_fit(const EmpiricalDistribution& dist, FitOptions options) {
  validate(dist);
  for (double x : dist.samples)
    require(x >= 0.0, ErrorCode::InvalidData,
            "two-class fit needs non-negative incomes");
  const Sorted s = sorted_in_range(dist, 0.0, kInf);
  need_samples(s.size(), options.min_samples, "two-class fit");

  double mean = 0.0;
  for (std::size_t k = 0; k < s.size(); ++k) mean += s.w[k] * s.x[k];
  mean /= s.total;
  require(mean > 0.0, ErrorCode::InvalidData, "mean income must be positive");
  const double n_eff = s.effective_n();

  const double pure_goodness =
      ks_sorted(s, [&](double x) { return -std::expm1(-x / mean); });

  std::vector<double> cum(s.size());
  double acc = 0.0;
  for (std::size_t k = 0; k < s.size(); ++k) cum[k] = (acc += s.w[k]);

  MixtureFit best{};
  bool have = false;
  for (int step = 0; step <= 39; ++step) {
    const double q = 0.80 + 0.005 * step;
    const auto it = std::lower_bound(cum.begin(), cum.end(), q * s.total);
    const std::size_t k = std::min<std::size_t>(it - cum.begin(), s.size() - 1);
    const double u = s.x[k];
    if (!(u > 0.0)) continue;
    const auto first_above = static_cast<std::size_t>(
        std::lower_bound(s.x.begin(), s.x.end(), u) - s.x.begin());
    if (s.size() - first_above < 10) continue;
    const MixtureFit m = fit_mixture(s, first_above, u);
    if (!have || m.goodness < best.goodness) {
      best = m;
      have = true;
    }
  }

  FitReport r;
  r.model = FitModel::TwoClass;
  r.range_lo = 0.0;
  r.n = s.size();
  r.params["mean"] = mean;
  const bool tail_found = have && best.tail_weight >= 10.0 &&
                          pure_goodness - best.goodness > 1.0 / std::sqrt(n_eff);
  if (!tail_found) {
    r.degenerate = true;
    r.params["T"] = mean;
    r.params["f"] = (mean - mean) / mean;
    r.params["upper_share"] = 0.0;
    r.stderrs["T"] = mean / std::sqrt(n_eff);
    r.goodness = pure_goodness;
    return r;
  }
  r.params["T"] = best.temperature;
  r.params["alpha"] = best.alpha;
  r.params["threshold"] = best.threshold;
  r.params["upper_share"] = best.share;
  r.params["r_star"] = component_crossing(best);
  r.params["f"] = (mean - best.temperature) / mean;
  r.stderrs["T"] = best.temperature / std::sqrt(std::max(n_eff - best.tail_weight, 1.0));
  r.stderrs["alpha"] = best.alpha / std::sqrt(best.tail_weight);
  r.stderrs["upper_share"] = std::sqrt(best.share * (1.0 - best.share) / n_eff);
  r.goodness = best.goodness;
  return r;
}

// Lorenz / Gini -----------------------------------------------------------------

LorenzCurve lorenz_curve(const EmpiricalDistribution& dist) {
  validate(dist);
  for (double x : dist.samples)
    require(x >= 0.0, ErrorCode::InvalidData,
            "Lorenz curve needs non-negative samples");
  const Sorted s = sorted_in_range(dist, 0.0, kInf);
  double income = 0.0;
  for (std::size_t k = 0; k < s.size(); ++k) income += s.w[k] * s.x[k];
  if (!(income > 0.0))
    raise(ErrorCode::UndefinedGini, "total income is zero");

  LorenzCurve c;
  c.x.reserve(s.size() + 1);
  c.y.reserve(s.size() + 1);
  c.x.push_back(0.0);
  c.y.push_back(0.0);
  double pop = 0.0;
  double cum = 0.0;
  double area = 0.0;
  for (std::size_t k = 0; k < s.size(); ++k) {
    pop += s.w[k];
    cum += s.w[k] * s.x[k];
    double x = pop / s.total;
    double y = std::min(cum / income, x);
    if (k + 1 == s.size()) x = y = 1.0;
    area += 0.5 * (x - c.x.back()) * (y + c.y.back());
    c.x.push_back(x);
    c.y.push_back(y);
  }
  c.gini = std::clamp(1.0 - 2.0 * area, 0.0, 1.0);
  return c;
}

double gini(const EmpiricalDistribution& dist) { return lorenz_curve(dist).gini; }

double lorenz_exponential(double x) {
  require(x >= 0.0 && x <= 1.0, ErrorCode::InvalidParameter,
          "Lorenz abscissa must lie in [0, 1]");
  if (x >= 1.0) return 1.0;
  return x + (1.0 - x) * std::log1p(-x);
}

double lorenz_two_class(double x, double f) {
  require(f >= 0.0 && f < 1.0, ErrorCode::InvalidParameter,
          "tail income share f must lie in [0, 1)");
  if (x >= 1.0 && x <= 1.0) return 1.0;
  return (1.0 - f) * lorenz_exponential(x);
}

double gini_two_class(double f) {
  require(f >= 0.0 && f < 1.0, ErrorCode::InvalidParameter,
          "tail income share f must lie in [0, 1)");
  // Integral of x + (1-x) ln(1-x) over [0, 1] is 1/2 - 1/4.
  return 1.0 - 2.0 * (1.0 - f) * 0.25;
}

double family_income_pdf(double r, double temperature) {
  require(std::isfinite(temperature) && temperature > 0.0,
          ErrorCode::InvalidParameter, "temperature must be positive");
  if (r < 0.0) return 0.0;
  return r * std::exp(-r / temperature) / (temperature * temperature);
}

EmpiricalDistribution pair_sum_samples(const EmpiricalDistribution& dist,
                                       RngStream& rng) {
  if (dist.size() < 2)
    raise(ErrorCode::InsufficientData, "pairing needs at least 2 samples");
  validate(dist);
  require(!dist.weighted(), ErrorCode::InvalidData,
          "pairing is defined for unweighted samples");
  std::vector<double> x = dist.samples;
  for (std::size_t k = x.size() - 1; k > 0; --k) {
    const auto j = static_cast<std::size_t>(rng.index(k + 1));
    std::swap(x[k], x[j]);
  }
  std::vector<double> sums(x.size() / 2);
  for (std::size_t k = 0; k < sums.size(); ++k) sums[k] = x[2 * k] + x[2 * k + 1];
  return EmpiricalDistribution(std::move(sums));
}

double pearson_correlation(const std::vector<double>& a,
                           const std::vector<double>& b) {
  require(a.size() == b.size() && a.size() >= 2, ErrorCode::InsufficientData,
          "correlation needs two equal-length columns of at least 2 values");
  const double n = static_cast<double>(a.size());
  const double ma = std::accumulate(a.begin(), a.end(), 0.0) / n;
  const double mb = std::accumulate(b.begin(), b.end(), 0.0) / n;
  double sab = 0.0;
  double saa = 0.0;
  double sbb = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) {
    sab += (a[k] - ma) * (b[k] - mb);
    saa += (a[k] - ma) * (a[k] - ma);
    sbb += (b[k] - mb) * (b[k] - mb);
  }
  if (!(saa > 0.0) || !(sbb > 0.0))
    raise(ErrorCode::FitDegenerate, "correlation of a constant column");
  return sab / std::sqrt(saa * sbb);
}

double weighted_mean(const EmpiricalDistribution& dist) {
  validate(dist);
  double sw = 0.0;
  double swx = 0.0;
  for (std::size_t k = 0; k < dist.size(); ++k) {
    sw += dist.weight(k);
    swx += dist.weight(k) * dist.samples[k];
  }
  return swx / sw;
}

double weighted_variance(const EmpiricalDistribution& dist) {
  const double m = weighted_mean(dist);
  double sw = 0.0;
  double acc = 0.0;
  for (std::size_t k = 0; k < dist.size(); ++k) {
    const double d = dist.samples[k] - m;
    sw += dist.weight(k);
    acc += dist.weight(k) * d * d;
  }
  return acc / sw;
}

double quantile(const EmpiricalDistribution& dist, double q) {
  require(q >= 0.0 && q <= 1.0, ErrorCode::InvalidParameter,
          "quantile level must lie in [0, 1]");
  const Sorted s = sorted_in_range(dist, -kInf, kInf);
  double cum = 0.0;
  for (std::size_t k = 0; k < s.size(); ++k) {
    cum += s.w[k];
    if (cum >= q * s.total) return s.x[k];
  }
  return s.x.back();
}

std::vector<std::pair<double, double>> ccdf_points(
    const EmpiricalDistribution& dist) {
  const Sorted s = sorted_in_range(dist, -kInf, kInf);
  std::vector<std::pair<double, double>> out;
  double before = 0.0;
  std::size_t k = 0;
  while (k < s.size()) {
    const double v = s.x[k];
    out.emplace_back(v, (s.total - before) / s.total);
    while (k < s.size() && s.x[k] == v) before += s.w[k++];
  }
  return out;
}

}  // namespace kinex
