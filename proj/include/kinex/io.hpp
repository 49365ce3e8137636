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
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include "kinex/analysis.hpp"
#include "kinex/distribution.hpp"
#include "kinex/engine.hpp"
#include "json.hpp"

namespace kinex {

/// 17 significant digits, so values round-trip.
std::string format_number(double v);

void write_snapshots_csv(std::ostream& os, const Trajectory& traj);
void write_entropy_csv(std::ostream& os, const Trajectory& traj);
void write_summary_csv(std::ostream& os, const Trajectory& traj);
void write_lorenz_csv(std::ostream& os, const LorenzCurve& curve);
void write_histogram_csv(std::ostream& os, const Histogram& hist);
void write_ccdf_csv(std::ostream& os, const EmpiricalDistribution& dist);

nlohmann::json spec_to_json(const ModelSpec& spec);
nlohmann::json report_to_json(const FitReport& report);

/// Parsed CSV input. Snapshot files keep every stored step; value files
/// (`value`, `id,value`, `value,weight`, `r,density`) fill `values`.
struct InputTable {
  bool snapshots = false;
  bool has_stock = false;
  std::map<std::uint64_t, std::vector<double>> balances;
  std::map<std::uint64_t, std::vector<double>> stocks;
  EmpiricalDistribution values;
};

InputTable read_table(std::istream& is, const std::string& source);

}  // namespace kinex
