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

#include <cstdint>
#include <variant>
#include <vector>

#include "kinex/distribution.hpp"
#include "kinex/population.hpp"
#include "kinex/random.hpp"

namespace kinex {

// Bouchaud-Mezard mean-field model ------------------------------------------

struct BMParams {
  double coupling;     // J, exchange rate (1/time)
  double mean_growth;  // <eta>; cancels in relative wealth
  double noise;        // sigma^2, eta has variance 2 sigma^2 (1/time)
  double dt;           // integration step
};

/// Requires J >= 0, sigma^2 >= 0, J dt < 1 and sigma^2 dt <= 0.1.
void validate(const BMParams& p);

inline constexpr double kRelativeWealthFloor = 1e-12;

/// One step of dw/dt = (eta - <eta> - sigma^2) w + J (1 - w) for the relative
/// wealth of every agent, in place.
void bm_step(std::vector<double>& wtilde, const BMParams& p, RngStream& rng);

/// Stationary density c exp(-mu/w) / w^(2+mu), c = mu^(1+mu) / Gamma(1+mu).
double bm_stationary_pdf(double wtilde, double mu);

/// Cumulative distribution of bm_stationary_pdf: Q(1 + mu, mu / w).
double bm_stationary_cdf(double wtilde, double mu);

// Slanina growth exchange ---------------------------------------------------

/// Proportional transfer gamma * w_i from payer i to receiver j, after which
/// both agents are multiplied by (1 + zeta). Balances are rescaled by powers
/// of two when they grow large, which leaves relative wealth bit-identical.
void slanina_step(Population& pop, double gamma, double zeta, RngStream& rng);

std::uint64_t run_slanina(Population& pop, double gamma, double zeta,
                          RngStream& rng, std::uint64_t steps);

// Conserved money + stock market --------------------------------------------

struct MarketState {
  std::vector<double> money;
  std::vector<double> shares;
  std::vector<double> prefs;  // desired fraction of wealth held in stock
  double price = 1.0;

  std::size_t size() const noexcept { return money.size(); }
  std::vector<double> wealth() const;
};

/// Equal endowments, preferences uniform on (0, 1), then one clearing trade.
MarketState make_market(std::size_t n, double m0, double s0, RngStream& rng);

/// p = sum f_i m_i / (S - sum f_i s_i); throws NoClearing when the
/// denominator or the demand is not positive.
double clearing_price(const std::vector<double>& prefs,
                      const std::vector<double>& money,
                      const std::vector<double>& shares);

/// Each agent redraws its preference with probability `redraw_prob`
/// (default 1/N); if any changed, the market clears and every agent
/// rebalances to hold f_i w_i in stock. Returns true if trades happened.
bool market_step(MarketState& ms, RngStream& rng, double redraw_prob = 0.0);

// Lydall hierarchy ----------------------------------------------------------

struct AdditiveIncrement {
  double step;  // d
};
struct MultiplicativeIncrement {
  double factor;  // c > 1
};
using IncrementMode = std::variant<AdditiveIncrement, MultiplicativeIncrement>;

/// Level k in [0, levels) carries population weight proportional to n^-k and
/// income base + k d or base c^k. Returned as weighted samples.
EmpiricalDistribution hierarchy_incomes(int levels, double branching,
                                        double base, const IncrementMode& mode);

}  // namespace kinex
