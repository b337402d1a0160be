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

#ifndef SHUFFLEDIST_PRIVACY_HPP_
#define SHUFFLEDIST_PRIVACY_HPP_

#include <cstdint>
#include <string_view>

#include "shuffledist/randomizers.hpp"

namespace shuffledist {

struct PrivacyBudget {
  double eps = 1;
  double delta = 1e-5;
  std::int64_t n = 100000;

  // Throws for eps <= 0, delta outside (0, 1) or n < 2; warns for n < 100.
  void Validate() const;

  friend bool operator==(const PrivacyBudget&, const PrivacyBudget&) = default;
};

// How the blanket-relative width r of the amplification variable is formed
// from the piecewise densities. kDensityRatio scales the density gap by the
// blanket ratio 1 + 2b; kAsPrinted divides by it, which yields a smaller r
// and a looser (larger) feasible region.
enum class BoundConvention { kDensityRatio, kAsPrinted };

std::string_view BoundConventionName(BoundConvention convention);
BoundConvention ParseBoundConvention(std::string_view name);

struct BoundTerms {
  double gamma = 0;  // (1 + 2b) q
  double xi = 0;     // 1 / ((2bk + 1)(1 + 2b))
  double a = 0;      // e^eps - 1
  double r = 0;
};

BoundTerms PiecewiseBoundTerms(double eps, const PerturbParams& params,
                               BoundConvention convention = BoundConvention::kDensityRatio);

// Natural log of the left-hand side; -inf when r = 0.
double PiecewiseBoundLogLhs(double eps, const PerturbParams& params, std::int64_t n,
                            BoundConvention convention = BoundConvention::kDensityRatio);

// Shuffled square wave with local budget eps_l. Requires eps < eps_l.
double SswBoundLhs(double eps, double eps_l, std::int64_t n,
                   BoundConvention convention = BoundConvention::kDensityRatio);

// Largest eps_l (absolute tolerance 1e-4) with SswBoundLhs <= delta. Returns
// kEpsLocalCap when the constraint never binds below it.
inline constexpr double kEpsLocalCap = 40.0;
double SswCalibrate(const PrivacyBudget& budget,
                    BoundConvention convention = BoundConvention::kDensityRatio);

double AspBoundLhs(double eps, double b, double k, std::int64_t n,
                   BoundConvention convention = BoundConvention::kDensityRatio);

// Dummy-count formula before rounding.
double FlipRawS(const PrivacyBudget& budget, int c);
// q(1 - q) required of the flip probability at (possibly fractional) s.
double FlipNoiseProduct(const PrivacyBudget& budget, double s);
ScfoParams FlipParams(const PrivacyBudget& budget, int c);

double PureRawS(const PrivacyBudget& budget, int c);
ScfoParams PureParams(const PrivacyBudget& budget, int c);
// Shuffle eps certified for Pure with s dummies per user.
double PureEpsilon(int s, std::int64_t n, int c, double delta);

}  // namespace shuffledist

#endif  // SHUFFLEDIST_PRIVACY_HPP_
