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

#include "shuffledist/privacy.hpp"

#include <algorithm>
#include <boost/math/tools/roots.hpp>
#include <cmath>
#include <limits>
#include <vector>

namespace shuffledist {

void PrivacyBudget::Validate() const {
  if (!(eps > 0) || !std::isfinite(eps)) throw Error(ErrorCode::kInvalidArgument, "eps must be > 0");
  if (!(delta > 0 && delta < 1)) throw Error(ErrorCode::kInvalidArgument, "delta must lie in (0, 1)");
  if (n < 2) throw Error(ErrorCode::kInvalidArgument, "n must be >= 2");
  if (n < 100) Warn("amplification bounds are loose for n < 100 (n = " + std::to_string(n) + ")");
}

std::string_view BoundConventionName(BoundConvention convention) {
  return convention == BoundConvention::kDensityRatio ? "density-ratio" : "as-printed";
}

BoundConvention ParseBoundConvention(std::string_view name) {
  if (name == "density-ratio") return BoundConvention::kDensityRatio;
  if (name == "as-printed") return BoundConvention::kAsPrinted;
  throw Error(ErrorCode::kInvalidArgument, "unknown bound convention '" + std::string(name) + "'");
}

BoundTerms PiecewiseBoundTerms(double eps, const PerturbParams& params, BoundConvention convention) {
  const double b = params.b;
  const double w = 1 + 2 * b;
  BoundTerms t;
  t.gamma = w * params.q;
  t.xi = 1 / ((2 * b * params.k + 1) * w);
  t.a = std::expm1(eps);
  // xi (k - e^eps - 1 + k e^eps) = (p - q)(1 + e^eps) / (1 + 2b)
  const double r_printed = t.xi * (params.k - 1) * (2 + t.a);
  t.r = convention == BoundConvention::kAsPrinted ? r_printed : r_printed * w * w;
  return t;
}

double PiecewiseBoundLogLhs(double eps, const PerturbParams& params, std::int64_t n, BoundConvention convention) {
  const BoundTerms t = PiecewiseBoundTerms(eps, params, convention);
  if (t.r <= 0) return -std::numeric_limits<double>::infinity();
  const double nn = static_cast<double>(n);
  const double z = 2 * t.a * t.a / (t.r * t.r);
  return 2 * std::log(t.r) - std::log(4 * t.gamma * nn * t.a) + t.gamma * nn * std::expm1(-z);
}

double SswBoundLhs(double eps, double eps_l, std::int64_t n, BoundConvention convention) {
  if (!(eps > 0)) throw Error(ErrorCode::kInvalidArgument, "eps must be > 0");
  if (n < 2) throw Error(ErrorCode::kInvalidArgument, "n must be >= 2");
  if (!(eps < eps_l)) throw Error(ErrorCode::kCalibration, "shuffling cannot enlarge eps: need eps < eps_l");
  return std::exp(PiecewiseBoundLogLhs(eps, SwParams(eps_l), n, convention));
}

double SswCalibrate(const PrivacyBudget& budget, BoundConvention convention) {
  budget.Validate();
  const double log_delta = std::log(budget.delta);
  auto feasible = [&](double eps_l) {
    return PiecewiseBoundLogLhs(budget.eps, SwParams(eps_l), budget.n, convention) <= log_delta;
  };
  const double lo = budget.eps * (1 + 1e-9);
  if (!feasible(lo)) {
    throw Error(ErrorCode::kInfeasibleBudget, "no local budget above eps satisfies the shuffle bound");
  }
  if (feasible(kEpsLocalCap)) return kEpsLocalCap;

  // Coarse scan for the first infeasible point; feasibility returning after
  // it means the bound is not monotone over the interval.
  constexpr int kScan = 96;
  std::vector<double> grid(kScan + 1);
  const double step = std::log(kEpsLocalCap / lo) / kScan;
  for (int i = 0; i <= kScan; ++i) grid[i] = lo * std::exp(step * i);
  int last_feasible = 0;
  bool crossed = false;
  for (int i = 1; i <= kScan; ++i) {
    if (feasible(grid[i])) {
      if (crossed) Warn("shuffle bound is not monotone in eps_l; using the largest feasible scan point");
      last_feasible = i;
    } else {
      crossed = true;
    }
  }
  double a = grid[last_feasible];
  double b = grid[std::min(last_feasible + 1, kScan)];
  auto f = [&](double eps_l) { return feasible(eps_l) ? -1.0 : 1.0; };
  auto tol = [](double x, double y) { return std::abs(y - x) < 1e-6; };
  const auto bracket = boost::math::tools::bisect(f, a, b, tol);
  a = bracket.first;
  return a;
}

double AspBoundLhs(double eps, double b, double k, std::int64_t n, BoundConvention convention) {
  if (!(eps > 0)) throw Error(ErrorCode::kInvalidArgument, "eps must be > 0");
  if (n < 2) throw Error(ErrorCode::kInvalidArgument, "n must be >= 2");
  return std::exp(PiecewiseBoundLogLhs(eps, PerturbParams::FromBandRatio(b, k), n, convention));
}

namespace {

double FlipNoiseTerm(const PrivacyBudget& budget) {
  const double ratio = (std::exp(budget.eps) + 1) / std::expm1(budget.eps);
  return ratio * ratio * std::log(4 / budget.delta);
}

void CheckChunks(int c) {
  if (c < 2) throw Error(ErrorCode::kInvalidArgument, "chunk count c must be >= 2");
}

int CeilS(double raw) {
  const double s = std::max(1.0, std::ceil(raw));
  if (s > std::numeric_limits<int>::max()) throw Error(ErrorCode::kParameter, "dummy count overflows");
  return static_cast<int>(s);
}

}  // namespace

double FlipRawS(const PrivacyBudget& budget, int c) {
  budget.Validate();
  CheckChunks(c);
  const double n = static_cast<double>(budget.n);
  return std::max(132.0 / (5 * n) * FlipNoiseTerm(budget), 2.0 / n * std::log(20.0 * c) - 1);
}

double FlipNoiseProduct(const PrivacyBudget& budget, double s) {
  return 33.0 / (5 * static_cast<double>(budget.n) * s) * FlipNoiseTerm(budget);
}

ScfoParams FlipParams(const PrivacyBudget& budget, int c) {
  ScfoParams sc;
  sc.c = c;
  sc.s = CeilS(FlipRawS(budget, c));
  const double v = FlipNoiseProduct(budget, sc.s);
  if (v > 0.25) throw Error(ErrorCode::kParameter, "flip variance term exceeds 1/4");
  // Smaller root of q^2 - q + v = 0, written to avoid cancellation.
  sc.q_flip = 2 * v / (1 + std::sqrt(1 - 4 * v));
  return sc;
}

double PureRawS(const PrivacyBudget& budget, int c) {
  budget.Validate();
  CheckChunks(c);
  return (14.0 * c * std::log(2 / budget.delta) / (budget.eps * budget.eps) + 1) / static_cast<double>(budget.n);
}

ScfoParams PureParams(const PrivacyBudget& budget, int c) {
  ScfoParams sc;
  sc.c = c;
  sc.s = CeilS(PureRawS(budget, c));
  return sc;
}

double PureEpsilon(int s, std::int64_t n, int c, double delta) {
  const double denom = static_cast<double>(n) * s - 1;
  if (!(denom > 0)) return std::numeric_limits<double>::infinity();
  return std::sqrt(14.0 * c * std::log(2 / delta) / denom);
}

}  // namespace shuffledist
