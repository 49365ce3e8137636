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

#include "kinex/kinetic_models.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace kinex {

namespace {

inline double debt_of(double m) { return m < 0.0 ? -m : 0.0; }

std::uint64_t mix64(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

// Credit gates: decide whether a proposed pair update is admissible and
// report the resulting change in aggregate debt.

struct NoDebtGate {
  bool admit(double oi, double ni, double oj, double nj, double& ddebt) const {
    ddebt = 0.0;
    return (ni >= 0.0 || ni >= oi) && (nj >= 0.0 || nj >= oj);
  }
};

struct LimitGate {
  double floor;
  bool admit(double oi, double ni, double oj, double nj, double& ddebt) const {
    ddebt = debt_of(ni) - debt_of(oi) + debt_of(nj) - debt_of(oj);
    return (ni >= floor || ni >= oi) && (nj >= floor || nj >= oj);
  }
};

// Shortfalls are borrowed on the spot while the aggregate cap allows it;
// receipts by an indebted agent repay implicitly.
struct BankGate {
  double cap;
  const double* outstanding;
  bool admit(double oi, double ni, double oj, double nj, double& ddebt) const {
    ddebt = debt_of(ni) - debt_of(oi) + debt_of(nj) - debt_of(oj);
    return ddebt <= 0.0 || *outstanding + ddebt <= cap;
  }
};

struct UnlimitedGate {
  bool admit(double oi, double ni, double oj, double nj, double& ddebt) const {
    ddebt = debt_of(ni) - debt_of(oi) + debt_of(nj) - debt_of(oj);
    return true;
  }
};

NoDebtGate make_gate(const NoDebt&, const Population&) { return {}; }
LimitGate make_gate(const DebtLimit& c, const Population&) {
  return {-c.max_debt};
}
BankGate make_gate(const Bank& c, const Population& pop) {
  return {bank_debt_cap(c, pop.money_base), &pop.outstanding_debt};
}
UnlimitedGate make_gate(const Unlimited&, const Population&) { return {}; }

struct Pair {
  std::size_t payer;
  std::size_t receiver;
};

inline Pair pick_pair(std::size_t n, const UniformSymmetric&, RngStream& rng) {
  const auto i = static_cast<std::size_t>(rng.index(n));
  auto j = static_cast<std::size_t>(rng.index(n - 1));
  if (j >= i) ++j;
  return {i, j};
}

inline Pair pick_pair(std::size_t n, const FixedDirectedLinks& links,
                      RngStream& rng) {
  const Pair p = pick_pair(n, UniformSymmetric{}, rng);
  const std::size_t lo = std::min(p.payer, p.receiver);
  const std::size_t hi = std::max(p.payer, p.receiver);
  return lower_index_pays(links.seed, lo, hi) ? Pair{lo, hi} : Pair{hi, lo};
}

// Rule proposals: write the post-transaction balances of (i, j). A false
// return means there is nothing to transfer and the attempt is blocked.

struct ProposalContext {
  double mean;  // M / N
};

inline bool propose(const FixedAmount& r, const ProposalContext&, std::size_t,
                    std::size_t, double mi, double mj, RngStream&, double& ni,
                    double& nj) {
  ni = mi - r.delta;
  nj = mj + r.delta;
  return true;
}

inline bool propose(const RandomFractionOfMean&, const ProposalContext& ctx,
                    std::size_t, std::size_t, double mi, double mj,
                    RngStream& rng, double& ni, double& nj) {
  const double dm = rng.uniform() * ctx.mean;
  ni = mi - dm;
  nj = mj + dm;
  return dm > 0.0;
}

inline bool propose(const RandomFractionOfPairMean&, const ProposalContext&,
                    std::size_t, std::size_t, double mi, double mj,
                    RngStream& rng, double& ni, double& nj) {
  const double dm = rng.uniform() * 0.5 * (mi + mj);
  ni = mi - dm;
  nj = mj + dm;
  return dm > 0.0;
}

inline bool propose(const Proportional& r, const ProposalContext&, std::size_t,
                    std::size_t, double mi, double mj, RngStream&, double& ni,
                    double& nj) {
  const double dm = r.gamma * mi;
  ni = mi - dm;
  nj = mj + dm;
  return dm > 0.0;
}

inline bool propose(const Saving& r, const ProposalContext&, std::size_t,
                    std::size_t, double mi, double mj, RngStream& rng,
                    double& ni, double& nj) {
  const PairBalances out = saving_exchange(mi, mj, r.lambda, rng.uniform());
  ni = out.payer;
  nj = out.receiver;
  return true;
}

inline bool propose(const RandomSaving& r, const ProposalContext&,
                    std::size_t i, std::size_t j, double mi, double mj,
                    RngStream& rng, double& ni, double& nj) {
  const PairBalances out = random_saving_exchange(
      mi, mj, r.lambdas[i], r.lambdas[j], rng.uniform());
  ni = out.payer;
  nj = out.receiver;
  return true;
}

[[noreturn]] void bound_violation(std::size_t agent, double m,
                                  std::uint64_t step) {
  raise(ErrorCode::InternalInvariantFailure,
        "credit bound violated by agent " + std::to_string(agent) +
            " (balance " + std::to_string(m) + ") at step " +
            std::to_string(step));
}

template <class Gate>
void check_agent(const Gate&, const CreditPolicy& credit, const Population& pop,
                 std::size_t k) {
  const double m = pop.balances[k];
  if (std::holds_alternative<NoDebt>(credit) && m < 0.0)
    bound_violation(k, m, pop.step_count);
  if (const auto* lim = std::get_if<DebtLimit>(&credit);
      lim && m < -lim->max_debt)
    bound_violation(k, m, pop.step_count);
}

template <class Rule, class Credit, class Pairing>
std::uint64_t loop(Population& pop, const Rule& rule, const Credit& credit,
                   const CreditPolicy& credit_variant, const Pairing& pairing,
                   RngStream& rng, std::uint64_t steps, bool check,
                   TransactionOutcome* last) {
  const auto gate = make_gate(credit, pop);
  const std::size_t n = pop.size();
  const ProposalContext ctx{pop.money_base / static_cast<double>(n)};
  double* m = pop.balances.data();
  std::uint64_t executed = 0;
  for (std::uint64_t s = 0; s < steps; ++s) {
    const Pair p = pick_pair(n, pairing, rng);
    const double mi = m[p.payer];
    const double mj = m[p.receiver];
    double ni = mi;
    double nj = mj;
    double ddebt = 0.0;
    ++pop.step_count;
    if (!propose(rule, ctx, p.payer, p.receiver, mi, mj, rng, ni, nj)) continue;
    if (!std::isfinite(ni + nj)) [[unlikely]]
      raise(ErrorCode::CorruptedState,
            "non-finite balance at step " + std::to_string(pop.step_count));
    if (!gate.admit(mi, ni, mj, nj, ddebt)) continue;
    m[p.payer] = ni;
    m[p.receiver] = nj;
    pop.outstanding_debt += ddebt;
    ++executed;
    if (last) *last = {true, p.payer, p.receiver, nj - mj};
    if (check) [[unlikely]] {
      check_agent(gate, credit_variant, pop, p.payer);
      check_agent(gate, credit_variant, pop, p.receiver);
      if (const auto* bank = std::get_if<Bank>(&credit_variant)) {
        const double cap = bank_debt_cap(*bank, pop.money_base);
        if (total_debt(pop.balances) > cap * (1.0 + 1e-12) + 1e-12)
          raise(ErrorCode::InternalInvariantFailure,
                "aggregate debt above the reserve cap at step " +
                    std::to_string(pop.step_count));
      }
    }
  }
  return executed;
}

std::uint64_t dispatch(Population& pop, const ExchangeRule& rule,
                       const CreditPolicy& credit, const PairingPolicy& pairing,
                       RngStream& rng, std::uint64_t steps, bool check,
                       TransactionOutcome* last) {
  require(pop.size() >= 2, ErrorCode::InvalidPopulation,
          "population needs at least 2 agents");
  if (const auto* rs = std::get_if<RandomSaving>(&rule)) {
    require(rs->lambdas.size() == pop.size(), ErrorCode::InvalidParameter,
            "random saving propensities must match the agent count");
  }
  return std::visit(
      [&](const auto& r, const auto& c, const auto& pp) {
        return loop(pop, r, c, credit, pp, rng, steps, check, last);
      },
      rule, credit, pairing);
}

}  // namespace

bool lower_index_pays(std::uint64_t seed, std::size_t a, std::size_t b) {
  const std::uint64_t h =
      mix64(mix64(seed ^ 0x9e3779b97f4a7c15ULL) ^ (static_cast<std::uint64_t>(a) * 0xd1b54a32d192ed03ULL) ^
            (static_cast<std::uint64_t>(b) * 0xabc98388fb8fac03ULL));
  return (h >> 63) != 0;
}

namespace {
struct RuleValidator {
  void operator()(const FixedAmount& r) const {
    require(std::isfinite(r.delta) && r.delta > 0.0,
            ErrorCode::InvalidParameter, "fixed amount must be positive");
  }
  void operator()(const RandomFractionOfMean&) const {}
  void operator()(const RandomFractionOfPairMean&) const {}
  void operator()(const Proportional& r) const {
    require(r.gamma > 0.0 && r.gamma < 1.0, ErrorCode::InvalidParameter,
            "proportional fraction gamma must lie in (0, 1)");
  }
  void operator()(const Saving& r) const {
    require(r.lambda >= 0.0 && r.lambda < 1.0, ErrorCode::InvalidParameter,
            "saving propensity lambda must lie in [0, 1)");
  }
  void operator()(const RandomSaving& r) const {
    for (double l : r.lambdas)
      require(l >= 0.0 && l < 1.0, ErrorCode::InvalidParameter,
              "saving propensities must lie in [0, 1)");
  }
};
}  // namespace

void validate(const ExchangeRule& rule) { std::visit(RuleValidator{}, rule); }

bool requires_non_negative_balances(const ExchangeRule& rule) {
  return std::holds_alternative<Proportional>(rule) ||
         std::holds_alternative<Saving>(rule) ||
         std::holds_alternative<RandomSaving>(rule);
}

RandomSaving draw_random_saving(std::size_t n, RngStream& rng) {
  RandomSaving rs;
  rs.lambdas.resize(n);
  for (auto& l : rs.lambdas) l = rng.uniform();
  return rs;
}

TransactionOutcome pairwise_step(Population& pop, const ExchangeRule& rule,
                                 const CreditPolicy& credit,
                                 const PairingPolicy& pairing, RngStream& rng) {
  TransactionOutcome out;
  dispatch(pop, rule, credit, pairing, rng, 1, false, &out);
  return out;
}

std::uint64_t run_pairwise(Population& pop, const ExchangeRule& rule,
                           const CreditPolicy& credit,
                           const PairingPolicy& pairing, RngStream& rng,
                           std::uint64_t steps, bool check_every_step) {
  return dispatch(pop, rule, credit, pairing, rng, steps, check_every_step,
                  nullptr);
}

bool try_transfer(Population& pop, const CreditPolicy& credit,
                  std::size_t from, std::size_t to, double amount) {
  const double oi = pop.balances[from];
  const double oj = pop.balances[to];
  const double ni = oi - amount;
  const double nj = oj + amount;
  double ddebt = 0.0;
  const bool ok = std::visit(
      [&](const auto& c) {
        return make_gate(c, pop).admit(oi, ni, oj, nj, ddebt);
      },
      credit);
  if (!ok) return false;
  pop.balances[from] = ni;
  pop.balances[to] = nj;
  pop.outstanding_debt += ddebt;
  return true;
}

void check_credit_bounds(const Population& pop, const CreditPolicy& credit) {
  for (std::size_t k = 0; k < pop.size(); ++k) {
    const double m = pop.balances[k];
    if (!std::isfinite(m))
      raise(ErrorCode::InternalInvariantFailure,
            "non-finite balance for agent " + std::to_string(k));
    if (std::holds_alternative<NoDebt>(credit) && m < 0.0)
      bound_violation(k, m, pop.step_count);
    if (const auto* lim = std::get_if<DebtLimit>(&credit);
        lim && m < -lim->max_debt)
      bound_violation(k, m, pop.step_count);
  }
  if (const auto* bank = std::get_if<Bank>(&credit)) {
    const double cap = bank_debt_cap(*bank, pop.money_base);
    const double debt = total_debt(pop.balances);
    if (debt > cap * (1.0 + 1e-9) + 1e-9)
      raise(ErrorCode::InternalInvariantFailure,
            "aggregate debt " + std::to_string(debt) +
                " exceeds the reserve cap " + std::to_string(cap));
  }
}

// Firm model ---------------------------------------------------------------

void validate(const FirmParams& p) {
  require(std::isfinite(p.demand_scale) && p.demand_scale > 0.0,
          ErrorCode::InvalidParameter, "demand scale v must be positive");
  require(p.demand_exponent > 0.0 && p.demand_exponent < 1.0,
          ErrorCode::InvalidParameter,
          "demand exponent eta must lie in (0, 1); eta <= 0 is unbounded");
  require(p.labor_share > 0.0 && p.labor_share < 1.0,
          ErrorCode::InvalidParameter, "labor share chi must lie in (0, 1)");
  require(std::isfinite(p.wage) && p.wage > 0.0, ErrorCode::InvalidParameter,
          "wage must be positive");
  require(std::isfinite(p.interest) && p.interest > 0.0,
          ErrorCode::InvalidParameter, "interest factor h must be positive");
}

// Stationarity of F gives omega L / chi = h K / (1-chi) = v (1-eta) Q^(1-eta)
// =: R with Q = R G, G = (chi/omega)^chi ((1-chi)/h)^(1-chi). Solving,
// R = (v (1-eta) G^(1-eta))^(1/eta) and F* = R eta / (1-eta). F is concave,
// so this stationary point is the global maximizer.
FirmPlan optimize_firm(const FirmParams& p) {
  validate(p);
  const double eta = p.demand_exponent;
  const double chi = p.labor_share;
  const double log_g = chi * std::log(chi / p.wage) +
                       (1.0 - chi) * std::log((1.0 - chi) / p.interest);
  const double log_r =
      (std::log(p.demand_scale * (1.0 - eta)) + (1.0 - eta) * log_g) / eta;
  const double r = std::exp(log_r);
  FirmPlan plan;
  plan.labor = chi * r / p.wage;
  plan.capital = (1.0 - chi) * r / p.interest;
  plan.output = std::exp(log_r + log_g);
  plan.profit = r * eta / (1.0 - eta);
  plan.price = p.demand_scale * std::pow(plan.output, -eta);
  return plan;
}

FirmCycleOutcome firm_cycle(Population& pop, const FirmParams& p,
                            RngStream& rng, const CreditPolicy& credit) {
  return firm_cycle(pop, p, optimize_firm(p), rng, credit);
}

FirmCycleOutcome firm_cycle(Population& pop, const FirmParams& p,
                            const FirmPlan& plan, RngStream& rng,
                            const CreditPolicy& credit) {
  const auto workers = static_cast<std::size_t>(std::floor(plan.labor));
  const auto buyers = static_cast<std::size_t>(std::floor(plan.output));
  const std::size_t roles = 2 + workers + buyers;
  require(roles <= pop.size(), ErrorCode::InvalidPopulation,
          "firm cycle needs " + std::to_string(roles) + " distinct agents");

  FirmCycleOutcome out;
  ++pop.step_count;
  const double planned = plan.price * static_cast<double>(buyers) -
                         p.wage * static_cast<double>(workers) -
                         p.interest * plan.capital;
  if (planned <= 0.0) return out;

  // Distinct role holders by rejection; roles are few relative to N.
  std::vector<std::size_t> chosen;
  chosen.reserve(roles);
  while (chosen.size() < roles) {
    const auto k = static_cast<std::size_t>(rng.index(pop.size()));
    if (std::find(chosen.begin(), chosen.end(), k) == chosen.end())
      chosen.push_back(k);
  }
  const std::size_t firm = chosen[0];
  const std::size_t lender = chosen[1];

  std::vector<double> saved(roles);
  for (std::size_t r = 0; r < roles; ++r) saved[r] = pop.balances[chosen[r]];
  const double saved_debt = pop.outstanding_debt;
  auto rollback = [&] {
    for (std::size_t r = 0; r < roles; ++r) pop.balances[chosen[r]] = saved[r];
    pop.outstanding_debt = saved_debt;
  };

  if (!try_transfer(pop, credit, lender, firm, plan.capital)) {
    rollback();
    return out;
  }
  for (std::size_t w = 0; w < workers; ++w) {
    if (!try_transfer(pop, credit, firm, chosen[2 + w], p.wage)) {
      rollback();
      return out;
    }
  }
  std::size_t sold = 0;
  for (std::size_t b = 0; b < buyers; ++b) {
    if (try_transfer(pop, credit, chosen[2 + workers + b], firm, plan.price))
      ++sold;
  }
  if (!try_transfer(pop, credit, firm, lender,
                    plan.capital * (1.0 + p.interest))) {
    rollback();
    return out;
  }
  out.executed = true;
  out.firm = firm;
  out.workers = workers;
  out.buyers = sold;
  out.realized_profit = plan.price * static_cast<double>(sold) -
                        p.wage * static_cast<double>(workers) -
                        p.interest * plan.capital;
  return out;
}

}  // namespace kinex
