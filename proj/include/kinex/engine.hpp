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
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "kinex/kinetic_models.hpp"
#include "kinex/population.hpp"
#include "kinex/random.hpp"
#include "kinex/wealth_dynamics.hpp"

namespace kinex {

struct Firm {
  FirmParams params;
};
struct SlaninaGrowth {
  double gamma;  // growth rate per step
  double zeta;   // exchange fraction
};
struct BouchaudMezard {
  BMParams params;
};
struct StockMarket {
  double redraw_prob = 0.0;  // 0 means 1/N
};

using ModelRule =
    std::variant<FixedAmount, RandomFractionOfMean, RandomFractionOfPairMean,
                 Proportional, Saving, RandomSaving, Firm, SlaninaGrowth,
                 BouchaudMezard, StockMarket>;

/// Kebab-case model name, as accepted by the CLI.
std::string model_name(const ModelRule& rule);

/// Kinetic rules and the firm model move money between agents and conserve it.
bool conserves_money(const ModelRule& rule);

struct ModelSpec {
  ModelRule rule = RandomFractionOfMean{};
  CreditPolicy credit = NoDebt{};
  PairingPolicy pairing = UniformSymmetric{};
  std::size_t agent_count = 1000;
  double initial_balance = 1000.0;
  double initial_stock = 1.0;  // market model only
  std::uint64_t step_budget = 0;
  std::uint64_t snapshot_stride = 1;
  std::uint64_t seed = 0;
  std::uint64_t stream_id = 0;
  /// Check credit bounds after every attempt instead of only at snapshots.
  bool debug_checks = false;
  /// Fixed bin width for the entropy series; 0 means |initial mean| / 10.
  double entropy_bin_width = 0.0;
  std::size_t full_snapshot_limit = 100000;
};

void validate(const ModelSpec& spec);

struct SummaryStats {
  double total = 0.0;
  double mean = 0.0;
  double variance = 0.0;
  double min = 0.0;
  double max = 0.0;
  std::vector<double> quantiles;  // at kSummaryLevels
};

inline constexpr double kSummaryLevels[] = {0.01, 0.05, 0.1, 0.25, 0.5,
                                            0.75, 0.9,  0.95, 0.99};

struct Snapshot {
  std::uint64_t step = 0;
  std::vector<double> balances;  // empty above full_snapshot_limit
  std::vector<double> stocks;
  double price = 0.0;  // market model only
  double share_total = 0.0;
  std::int64_t log2_scale = 0;
  SummaryStats summary;
};

struct Trajectory {
  ModelSpec spec;
  std::vector<Snapshot> snapshots;
  std::vector<std::pair<std::uint64_t, double>> entropy_series;
  double wall_seconds = 0.0;
  std::vector<double> saving_propensities;  // random-saving only

  const Snapshot& final() const { return snapshots.back(); }
};

Trajectory run_simulation(const ModelSpec& spec);

/// Replica k runs spec with stream_id = k; results do not depend on workers.
std::vector<Trajectory> run_replicas(const ModelSpec& spec,
                                     std::size_t replicas,
                                     std::size_t workers = 0);

std::optional<std::uint64_t> detect_equilibration(
    const std::vector<std::pair<std::uint64_t, double>>& series,
    std::size_t window, double epsilon);

/// Entropy per agent of values binned on a fixed grid of the given width.
double fixed_width_entropy(const std::vector<double>& values, double width);

SummaryStats summarize(const std::vector<double>& values);

/// Per-agent wealth money + price * stock; the balances for other models.
std::vector<double> snapshot_wealth(const Snapshot& s);

}  // namespace kinex
