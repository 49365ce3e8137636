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
#include <optional>
#include <variant>
#include <vector>

namespace kinex {

/// Mutable state of one simulation replica.
struct Population {
  std::vector<double> balances;
  std::vector<double> stocks;  // empty when the model carries no shares
  double outstanding_debt = 0.0;
  std::uint64_t step_count = 0;
  /// Initial total money M_b; the bank cap and conservation checks use it.
  double money_base = 0.0;
  /// Growth models rescale balances by powers of two to stay in range;
  /// true balances are balances * 2^log2_scale.
  std::int64_t log2_scale = 0;

  std::size_t size() const noexcept { return balances.size(); }
  bool has_stocks() const noexcept { return !stocks.empty(); }
};

Population init_population(std::size_t n, double m0,
                           std::optional<double> s0 = std::nullopt);

// Credit policies.
struct NoDebt {};
struct DebtLimit {
  double max_debt;  // m_d > 0; balances stay >= -m_d
};
struct Bank {
  double reserve_ratio;  // R in (0, 1]; aggregate debt <= M_b (1-R)/R
};
struct Unlimited {};
using CreditPolicy = std::variant<NoDebt, DebtLimit, Bank, Unlimited>;

// Pairing policies.
struct UniformSymmetric {};
/// Each unordered pair gets one fixed payment orientation, derived from
/// `seed`; payment always flows along it.
struct FixedDirectedLinks {
  std::uint64_t seed;
};
using PairingPolicy = std::variant<UniformSymmetric, FixedDirectedLinks>;

/// Aggregate debt cap M_b (1-R)/R for a bank policy.
inline double bank_debt_cap(const Bank& bank, double money_base) {
  return money_base * (1.0 - bank.reserve_ratio) / bank.reserve_ratio;
}

/// Sum of max(-m_i, 0), compensated.
double total_debt(const std::vector<double>& balances);

/// Neumaier-compensated sum.
double compensated_sum(const std::vector<double>& values);

void validate(const CreditPolicy& credit);

}  // namespace kinex
