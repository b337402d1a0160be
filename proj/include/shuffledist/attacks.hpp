// Copyright 2026 The shuffledist Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef SHUFFLEDIST_ATTACKS_HPP_
#define SHUFFLEDIST_ATTACKS_HPP_

#include <cstddef>
#include <span>
#include <vector>

#include "shuffledist/histogram.hpp"
#include "shuffledist/randomizers.hpp"
#include "shuffledist/rng.hpp"

namespace shuffledist {

struct AttackConfig {
  double beta = 0;
  std::vector<double> targets{1.0};
  // Piecewise injection half-width is b / range_divisor.
  int range_divisor = 1;

  void Validate() const;

  friend bool operator==(const AttackConfig&, const AttackConfig&) = default;
};

// round(beta * n).
std::size_t FakeUserCount(double beta, std::size_t n);

// Equal mass on the bin of each target; colliding targets merge.
Histogram IdealDistribution(std::span<const double> targets, int m);

// Distinct chunk indices hit by the targets, ascending.
std::vector<int> TargetChunks(std::span<const double> targets, int c);

// Every fake message has a 1 at each target chunk and 0 elsewhere.
FlipReports CraftFlipReports(const AttackConfig& cfg, const ScfoParams& sc, std::size_t n_f);

// Every fake message is a target chunk (1-based), uniform over the targets.
PureReports CraftPureReports(const AttackConfig& cfg, const ScfoParams& sc, std::size_t n_f, RngStream& rng);

// One value per fake user, uniform within b / d of a uniformly chosen
// target, clipped to [-b, 1 + b].
PiecewiseReports CraftPiecewiseReports(const AttackConfig& cfg, const PerturbParams& params, std::size_t n_f,
                                       RngStream& rng);

struct RiarReport {
  double w1_attacked_vs_ideal = 0;
  double w1_true_vs_ideal = 0;
  double riar = 0;

  friend bool operator==(const RiarReport&, const RiarReport&) = default;
};

RiarReport Riar(const Histogram& f_true, const Histogram& f_attacked, const Histogram& f_ide);

}  // namespace shuffledist

#endif  // SHUFFLEDIST_ATTACKS_HPP_
