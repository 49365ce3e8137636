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

#include "kinex/population.hpp"

#include <cmath>
#include <string>

#include "kinex/error.hpp"

namespace kinex {

const char* to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::InvalidPopulation: return "invalid-population";
    case ErrorCode::InvalidParameter: return "invalid-parameter";
    case ErrorCode::CorruptedState: return "corrupted-state";
    case ErrorCode::InternalInvariantFailure: return "internal-invariant-failure";
    case ErrorCode::InsufficientData: return "insufficient-data";
    case ErrorCode::InvalidData: return "invalid-data";
    case ErrorCode::FitDegenerate: return "fit-degenerate";
    case ErrorCode::NoClearing: return "no-clearing";
    case ErrorCode::UndefinedGini: return "undefined-gini";
  }
  return "unknown";
}

Population init_population(std::size_t n, double m0, std::optional<double> s0) {
  require(n >= 2, ErrorCode::InvalidPopulation,
          "population needs at least 2 agents, got " + std::to_string(n));
  require(std::isfinite(m0), ErrorCode::InvalidParameter,
          "initial balance must be finite");
  Population pop;
  pop.balances.assign(n, m0);
  if (s0) {
    require(std::isfinite(*s0) && *s0 >= 0.0, ErrorCode::InvalidParameter,
            "initial stock must be finite and non-negative");
    pop.stocks.assign(n, *s0);
  }
  pop.money_base = m0 * static_cast<double>(n);
  pop.outstanding_debt = total_debt(pop.balances);
  return pop;
}

double compensated_sum(const std::vector<double>& values) {
  double sum = 0.0;
  double carry = 0.0;
  for (double v : values) {
    const double t = sum + v;
    if (std::abs(sum) >= std::abs(v))
      carry += (sum - t) + v;
    else
      carry += (v - t) + sum;
    sum = t;
  }
  return sum + carry;
}

double total_debt(const std::vector<double>& balances) {
  std::vector<double> debts;
  debts.reserve(balances.size());
  for (double m : balances)
    if (m < 0.0) debts.push_back(-m);
  return compensated_sum(debts);
}

namespace {
struct CreditValidator {
  void operator()(const NoDebt&) const {}
  void operator()(const Unlimited&) const {}
  void operator()(const DebtLimit& c) const {
    require(std::isfinite(c.max_debt) && c.max_debt > 0.0,
            ErrorCode::InvalidParameter, "debt limit m_d must be positive");
  }
  void operator()(const Bank& c) const {
    require(c.reserve_ratio > 0.0 && c.reserve_ratio <= 1.0,
            ErrorCode::InvalidParameter, "reserve ratio R must lie in (0, 1]");
  }
};
}  // namespace

void validate(const CreditPolicy& credit) {
  std::visit(CreditValidator{}, credit);
}

}  // namespace kinex
