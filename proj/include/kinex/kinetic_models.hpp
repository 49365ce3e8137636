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

#include <cmath>
#include <cstdint>
#include <variant>
#include <vector>

#include "kinex/error.hpp"
#include "kinex/population.hpp"
#include "kinex/random.hpp"

namespace kinex {

// Pairwise exchange rules. In every rule agent i is the payer (first of the
// ordered pair) and agent j the receiver.

/// Delta m = delta.
struct FixedAmount {
  double delta;
};
/// Delta m = nu * M / N with nu uniform on [0, 1).
struct RandomFractionOfMean {};
/// Delta m = nu * (m_i + m_j) / 2 with nu uniform on [0, 1).
struct RandomFractionOfPairMean {};
/// Delta m = gamma * m_i.
struct Proportional {
  double gamma;
};
/// m_i' = lambda m_i + xi (1-lambda)(m_i+m_j), m_j' = m_i + m_j - m_i'.
struct Saving {
  double lambda;
};
/// Saving with a quenched propensity per agent. `lambdas` is empty in a
/// model description and drawn uniformly on [0, 1) once per replica.
struct RandomSaving {
  std::vector<double> lambdas;
};

using ExchangeRule = std::variant<FixedAmount, RandomFractionOfMean,
                                  RandomFractionOfPairMean, Proportional,
                                  Saving, RandomSaving>;

struct TransactionOutcome {
  bool executed = false;
  std::size_t payer = 0;
  std::size_t receiver = 0;
  double amount = 0.0;  // net transfer to the receiver
};

void validate(const ExchangeRule& rule);

/// Multiplicative rules are only defined for non-negative balances.
bool requires_non_negative_balances(const ExchangeRule& rule);

RandomSaving draw_random_saving(std::size_t n, RngStream& rng);

struct PairBalances {
  double payer;
  double receiver;
};

/// Saving-propensity exchange with an explicit draw xi.
inline PairBalances saving_exchange(double mi, double mj, double lambda,
                                    double xi) {
  const double sum = mi + mj;
  const double payer = lambda * mi + xi * (1.0 - lambda) * sum;
  return {payer, sum - payer};
}

/// Random-propensity variant: each agent keeps its own lambda share and the
/// pooled remainder is split by xi.
inline PairBalances random_saving_exchange(double mi, double mj, double li,
                                           double lj, double xi) {
  const double pool = (1.0 - li) * mi + (1.0 - lj) * mj;
  const double payer = li * mi + xi * pool;
  return {payer, (mi + mj) - payer};
}

/// Performs one transaction attempt. Blocked attempts still count as a step.
TransactionOutcome pairwise_step(Population& pop, const ExchangeRule& rule,
                                 const CreditPolicy& credit,
                                 const PairingPolicy& pairing, RngStream& rng);

/// Runs `steps` attempts with the rule, credit and pairing dispatch hoisted
/// out of the loop. Returns the number of executed transactions. With
/// `check_every_step` the credit bounds are asserted after each transaction.
std::uint64_t run_pairwise(Population& pop, const ExchangeRule& rule,
                           const CreditPolicy& credit,
                           const PairingPolicy& pairing, RngStream& rng,
                           std::uint64_t steps, bool check_every_step = false);

/// Orientation bit of the unordered pair {a, b}: true when the lower index
/// pays.
bool lower_index_pays(std::uint64_t seed, std::size_t a, std::size_t b);

/// Applies a single transfer `from -> to` if the credit policy admits it.
bool try_transfer(Population& pop, const CreditPolicy& credit,
                  std::size_t from, std::size_t to, double amount);

/// Asserts the credit bounds on the whole population; throws
/// InternalInvariantFailure on violation.
void check_credit_bounds(const Population& pop, const CreditPolicy& credit);

// Firm model.

struct FirmParams {
  double demand_scale;     // v in p(Q) = v / Q^eta
  double demand_exponent;  // eta in (0, 1)
  double labor_share;      // chi in Q = L^chi K^(1-chi)
  double wage;             // omega
  double interest;         // h
};

void validate(const FirmParams& p);

struct FirmPlan {
  double capital;  // K*
  double labor;    // L*
  double output;   // Q*
  double profit;   // F*
  double price;    // p(Q*)
};

/// Maximizes F(L, K) = v (L^chi K^(1-chi))^(1-eta) - omega L - h K.
FirmPlan optimize_firm(const FirmParams& p);

struct FirmCycleOutcome {
  bool executed = false;
  std::size_t firm = 0;
  std::size_t workers = 0;
  std::size_t buyers = 0;  // buyers who completed a purchase
  double realized_profit = 0.0;
};

/// One firm cycle: a random agent borrows K* from a random lender, pays
/// floor(L*) random workers the wage, sells to floor(Q*) random buyers at
/// p(Q*), then repays K*(1+h). Skipped when the integer plan is not
/// profitable or a mandatory transfer is refused by the credit policy.
FirmCycleOutcome firm_cycle(Population& pop, const FirmParams& p,
                            RngStream& rng,
                            const CreditPolicy& credit = NoDebt{});

/// Same as firm_cycle with a precomputed plan.
FirmCycleOutcome firm_cycle(Population& pop, const FirmParams& p,
                            const FirmPlan& plan, RngStream& rng,
                            const CreditPolicy& credit);

}  // namespace kinex
