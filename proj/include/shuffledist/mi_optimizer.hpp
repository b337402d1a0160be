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

#ifndef SHUFFLEDIST_MI_OPTIMIZER_HPP_
#define SHUFFLEDIST_MI_OPTIMIZER_HPP_

#include <optional>

#include "shuffledist/histogram.hpp"
#include "shuffledist/privacy.hpp"
#include "shuffledist/randomizers.hpp"
#include "shuffledist/rng.hpp"

namespace shuffledist {

// Mutual information terms of the piecewise channel under uniform input,
// in nats.
struct MiBound {
  double h_u = 0;     // output entropy upper bound
  double h_cond = 0;  // h(out | in)
  double i_u = 0;
};

MiBound MiUpperBound(double b, double k);

// Bound that treats the output as uniform on [-b, 1 + b].
double PriorUpperBound(double b, double k);

struct MiEstimate {
  double value = 0;   // bias-corrected, clamped at 0
  double std_error = 0;
  double raw = 0;     // plug-in estimate
};

// Plug-in estimate of I(in; out) on a cells x cells grid with Miller-Madow
// correction. Input is uniform on [0, 1] unless a histogram is given, in
// which case it is sampled bin-then-uniform.
MiEstimate MiMonteCarlo(const PerturbParams& params, const Histogram* input, std::size_t samples, RngStream& rng,
                        int cells = 128);

struct OptimizerConfig {
  double b_lo = 1e-4;
  double b_hi = 1.5;
  double k_lo = 1 + 1e-6;
  double k_hi = 1e6;
  int grid = 64;
  int refine_iters = 200;
  double constraint_tol = 1e-9;
  BoundConvention convention = BoundConvention::kDensityRatio;

  void Validate() const;
};

struct OptimizerResult {
  PerturbParams params;
  MiBound bound;
  double lhs = 0;
  // Best feasible grid point, before refinement.
  PerturbParams grid_params;
  double grid_i_u = 0;
};

OptimizerResult OptimizeAsp(const PrivacyBudget& budget, const OptimizerConfig& cfg = {});

inline PerturbParams OptimizeParams(const PrivacyBudget& budget, const OptimizerConfig& cfg = {}) {
  return OptimizeAsp(budget, cfg).params;
}

}  // namespace shuffledist

#endif  // SHUFFLEDIST_MI_OPTIMIZER_HPP_
