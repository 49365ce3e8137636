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

#include <cstddef>
#include <vector>

namespace kinex {

/// A set of real-valued samples with optional non-negative weights. An
/// empty weight vector means every sample has weight one.
struct EmpiricalDistribution {
  std::vector<double> samples;
  std::vector<double> weights;

  EmpiricalDistribution() = default;
  explicit EmpiricalDistribution(std::vector<double> s) : samples(std::move(s)) {}
  EmpiricalDistribution(std::vector<double> s, std::vector<double> w)
      : samples(std::move(s)), weights(std::move(w)) {}

  std::size_t size() const noexcept { return samples.size(); }
  bool weighted() const noexcept { return !weights.empty(); }
  double weight(std::size_t k) const noexcept {
    return weights.empty() ? 1.0 : weights[k];
  }
  double total_weight() const noexcept;
};

/// Throws InvalidData unless the distribution is non-empty, finite, and
/// (when weighted) has matching non-negative weights with a positive sum.
void validate(const EmpiricalDistribution& dist);

}  // namespace kinex
