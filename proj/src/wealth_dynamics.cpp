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

#include "kinex/wealth_dynamics.hpp"

#include <boost/math/special_functions/gamma.hpp>
#include <cmath>
#include <limits>
#include <string>

#include "kinex/error.hpp"

namespace kinex {

void validate(const BMParams& p) {
  require(std::isfinite(p.coupling) && p.coupling >= 0.0,
          ErrorCode::InvalidParameter, "coupling J must be non-negative");
  require(std::isfinite(p.noise) && p.noise >= 0.0,
          ErrorCode::InvalidParameter, "noise sigma^2 must be non-negative");
  require(std::isfinite(p.mean_growth), ErrorCode::InvalidParameter,
          "mean growth must be finite");
  require(std::isfinite(p.dt) && p.dt > 0.0, ErrorCode::InvalidParameter,
          "dt must be positive");
  require(p.coupling * p.dt < 1.0, ErrorCode::InvalidParameter,
          "stability requires J dt < 1");
  require(p.noise * p.dt <= 0.1, ErrorCode::InvalidParameter,
          "stability requires sigma^2 dt <= 0.1");
}

// With eta of variance 2 sigma^2 read in the Stratonovich sense, the
// -sigma^2 term in the relative-wealth equation exactly cancels the noise
// induced drift, leaving the Ito form
//   dw = J (1 - w) dt + sqrt(2 sigma^2) w dW,
// whose Fokker-Planck operator is d/dw[J (w-1) P] + d^2/dw^2[sigma^2 w^2 P].
// Its stationary solution is c exp(-mu/w) / w^(2+mu), mu = J / sigma^2.
// The step is a Lie splitting: the multiplicative part is solved exactly,
//   w <- w exp(sqrt(2 sigma^2 dt) Z - sigma^2 dt),
// then the exchange part by an explicit Euler step w <- w + J (1 - w) dt.
// Both stages keep w > 0 when J dt < 1.
void bm_step(std::vector<double>& wtilde, const BMParams& p, RngStream& rng) {
  validate(p);
  const double amp = std::sqrt(2.0 * p.noise * p.dt);
  const double shift = p.noise * p.dt;
  const double relax = p.coupling * p.dt;
  for (double& w : wtilde) {
    if (!std::isfinite(w) || w <= 0.0)
      raise(ErrorCode::CorruptedState, "relative wealth must be positive");
    if (amp > 0.0) w *= std::exp(amp * rng.normal() - shift);
    w += relax * (1.0 - w);
    if (w < kRelativeWealthFloor) w = kRelativeWealthFloor;
  }
}

double bm_stationary_pdf(double wtilde, double mu) {
  require(std::isfinite(mu) && mu > 0.0, ErrorCode::InvalidParameter,
          "mu = J / sigma^2 must be positive");
  if (!(wtilde > 0.0)) return 0.0;
  const double log_c = (1.0 + mu) * std::log(mu) - std::lgamma(1.0 + mu);
  return std::exp(log_c - mu / wtilde - (2.0 + mu) * std::log(wtilde));
}

double bm_stationary_cdf(double wtilde, double mu) {
  require(std::isfinite(mu) && mu > 0.0, ErrorCode::InvalidParameter,
          "mu = J / sigma^2 must be positive");
  if (!(wtilde > 0.0)) return 0.0;
  if (std::isinf(wtilde)) return 1.0;
  return boost::math::gamma_q(1.0 + mu, mu / wtilde);
}

namespace {

constexpr int kRescaleBits = 512;
constexpr double kRescaleTrigger = 0x1p+600;

void rescale_if_large(Population& pop, double probe) {
  if (probe < kRescaleTrigger) return;
  for (double& w : pop.balances) w = std::ldexp(w, -kRescaleBits);
  pop.log2_scale += kRescaleBits;
}

}  // namespace

void slanina_step(Population& pop, double gamma, double zeta, RngStream& rng) {
  run_slanina(pop, gamma, zeta, rng, 1);
}

std::uint64_t run_slanina(Population& pop, double gamma, double zeta,
                          RngStream& rng, std::uint64_t steps) {
  require(gamma > 0.0 && gamma < 1.0, ErrorCode::InvalidParameter,
          "gamma must lie in (0, 1)");
  require(std::isfinite(zeta) && zeta >= 0.0, ErrorCode::InvalidParameter,
          "growth zeta must be non-negative");
  require(pop.size() >= 2, ErrorCode::InvalidPopulation,
          "population needs at least 2 agents");
  const std::size_t n = pop.size();
  const double growth = 1.0 + zeta;
  double* w = pop.balances.data();
  std::uint64_t executed = 0;
  for (std::uint64_t s = 0; s < steps; ++s) {
    const auto i = static_cast<std::size_t>(rng.index(n));
    auto j = static_cast<std::size_t>(rng.index(n - 1));
    if (j >= i) ++j;
    ++pop.step_count;
    const double dm = gamma * w[i];
    if (!(dm > 0.0)) continue;
    double wi = w[i] - dm;
    double wj = w[j] + dm;
    wi *= growth;
    wj *= growth;
    if (!std::isfinite(wi + wj))
      raise(ErrorCode::CorruptedState, "non-finite wealth in growth exchange");
    w[i] = wi;
    w[j] = wj;
    ++executed;
    rescale_if_large(pop, wj > wi ? wj : wi);
  }
  return executed;
}

// Market ---------------------------------------------------------------------

std::vector<double> MarketState::wealth() const {
  std::vector<double> w(money.size());
  for (std::size_t k = 0; k < w.size(); ++k) w[k] = money[k] + price * shares[k];
  return w;
}

double clearing_price(const std::vector<double>& prefs,
                      const std::vector<double>& money,
                      const std::vector<double>& shares) {
  require(prefs.size() == money.size() && money.size() == shares.size(),
          ErrorCode::InvalidParameter, "market vectors differ in length");
  double demand = 0.0;
  double held = 0.0;
  double total = 0.0;
  for (std::size_t k = 0; k < prefs.size(); ++k) {
    demand += prefs[k] * money[k];
    held += prefs[k] * shares[k];
    total += shares[k];
  }
  const double denom = total - held;
  if (!(denom > 0.0) || !(demand > 0.0))
    raise(ErrorCode::NoClearing, "no positive market-clearing price");
  return demand / denom;
}

namespace {

double open_unit(RngStream& rng) {
  double u;
  do {
    u = rng.uniform();
  } while (u == 0.0);
  return u;
}

void rebalance(MarketState& ms, double price) {
  for (std::size_t k = 0; k < ms.size(); ++k) {
    const double w = ms.money[k] + price * ms.shares[k];
    const double s = ms.prefs[k] * w / price;
    ms.shares[k] = s;
    ms.money[k] = w - price * s;
  }
  ms.price = price;
}

}  // namespace

MarketState make_market(std::size_t n, double m0, double s0, RngStream& rng) {
  require(n >= 2, ErrorCode::InvalidPopulation, "market needs at least 2 agents");
  require(std::isfinite(m0) && m0 > 0.0 && std::isfinite(s0) && s0 > 0.0,
          ErrorCode::InvalidParameter,
          "initial money and shares must be positive");
  MarketState ms;
  ms.money.assign(n, m0);
  ms.shares.assign(n, s0);
  ms.prefs.resize(n);
  for (double& f : ms.prefs) f = open_unit(rng);
  rebalance(ms, clearing_price(ms.prefs, ms.money, ms.shares));
  return ms;
}

bool market_step(MarketState& ms, RngStream& rng, double redraw_prob) {
  const std::size_t n = ms.size();
  const double q =
      redraw_prob > 0.0 ? redraw_prob : 1.0 / static_cast<double>(n);
  require(q > 0.0 && q <= 1.0, ErrorCode::InvalidParameter,
          "redraw probability must lie in (0, 1]");

  // Geometric skipping visits exactly the agents a per-agent Bernoulli(q)
  // sweep would select.
  std::vector<std::pair<std::size_t, double>> changed;
  if (q >= 1.0) {
    for (std::size_t k = 0; k < n; ++k) changed.emplace_back(k, ms.prefs[k]);
  } else {
    const double log_keep = std::log1p(-q);
    double pos = -1.0;
    for (;;) {
      pos += 1.0 + std::floor(std::log(rng.uniform_open_low()) / log_keep);
      if (pos >= static_cast<double>(n)) break;
      changed.emplace_back(static_cast<std::size_t>(pos), 0.0);
    }
    for (auto& c : changed) c.second = ms.prefs[c.first];
  }
  if (changed.empty()) return false;
  for (auto& c : changed) ms.prefs[c.first] = open_unit(rng);

  double price;
  try {
    price = clearing_price(ms.prefs, ms.money, ms.shares);
  } catch (const Error&) {
    for (auto& c : changed) ms.prefs[c.first] = c.second;
    return false;
  }
  rebalance(ms, price);
  return true;
}

// Hierarchy ------------------------------------------------------------------

EmpiricalDistribution hierarchy_incomes(int levels, double branching,
                                        double base, const IncrementMode& mode) {
  require(levels >= 1, ErrorCode::InvalidParameter, "levels must be positive");
  require(std::isfinite(branching) && branching > 1.0,
          ErrorCode::InvalidParameter, "branching must exceed 1");
  require(std::isfinite(base) && base > 0.0, ErrorCode::InvalidParameter,
          "base income must be positive");
  if (const auto* add = std::get_if<AdditiveIncrement>(&mode))
    require(std::isfinite(add->step) && add->step > 0.0,
            ErrorCode::InvalidParameter, "additive increment must be positive");
  if (const auto* mul = std::get_if<MultiplicativeIncrement>(&mode))
    require(std::isfinite(mul->factor) && mul->factor > 1.0,
            ErrorCode::InvalidParameter, "multiplicative factor must exceed 1");

  EmpiricalDistribution out;
  out.samples.resize(static_cast<std::size_t>(levels));
  out.weights.resize(static_cast<std::size_t>(levels));
  const double log_n = std::log(branching);
  double norm = 0.0;
  for (int k = 0; k < levels; ++k) {
    const double weight = std::exp(-k * log_n);
    out.weights[static_cast<std::size_t>(k)] = weight;
    norm += weight;
    out.samples[static_cast<std::size_t>(k)] = std::visit(
        [&](const auto& m) -> double {
          if constexpr (std::is_same_v<std::decay_t<decltype(m)>,
                                       AdditiveIncrement>)
            return base + k * m.step;
          else
            return base * std::pow(m.factor, k);
        },
        mode);
  }
  for (double& w : out.weights) w /= norm;
  return out;
}

}  // namespace kinex
