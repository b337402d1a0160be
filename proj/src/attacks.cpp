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

#include "shuffledist/attacks.hpp"

#include <algorithm>
#include <cmath>

#include "shuffledist/metrics.hpp"

namespace shuffledist {

void AttackConfig::Validate() const {
  if (!(beta >= 0 && beta <= 1)) throw Error(ErrorCode::kInvalidArgument, "beta must lie in [0, 1]");
  if (targets.empty()) throw Error(ErrorCode::kInvalidArgument, "attack needs at least one target");
  for (double t : targets) {
    if (!(t >= 0 && t <= 1)) throw Error(ErrorCode::kInvalidArgument, "attack target " + std::to_string(t) + " outside [0, 1]");
  }
  if (range_divisor < 1 || range_divisor > 3) throw Error(ErrorCode::kInvalidArgument, "range_divisor must be 1, 2 or 3");
}

std::size_t FakeUserCount(double beta, std::size_t n) {
  return static_cast<std::size_t>(std::llround(beta * static_cast<double>(n)));
}

Histogram IdealDistribution(std::span<const double> targets, int m) {
  if (targets.empty()) throw Error(ErrorCode::kInvalidArgument, "no attack targets");
  Eigen::VectorXd w = Eigen::VectorXd::Zero(m);
  for (double t : targets) {
    if (!(t >= 0 && t <= 1)) throw Error(ErrorCode::kDomain, "attack target outside [0, 1]");
    w[BinIndex(t, m)] += 1.0 / static_cast<double>(targets.size());
  }
  return Histogram::FromWeights(w);
}

std::vector<int> TargetChunks(std::span<const double> targets, int c) {
  std::vector<int> chunks;
  for (double t : targets) {
    if (!(t >= 0 && t <= 1)) throw Error(ErrorCode::kDomain, "attack target outside [0, 1]");
    chunks.push_back(BinIndex(t, c));
  }
  std::sort(chunks.begin(), chunks.end());
  chunks.erase(std::unique(chunks.begin(), chunks.end()), chunks.end());
  return chunks;
}

FlipReports CraftFlipReports(const AttackConfig& cfg, const ScfoParams& sc, std::size_t n_f) {
  cfg.Validate();
  FlipReports out{sc.c, sc.messages_per_user(), {}};
  const std::vector<int> chunks = TargetChunks(cfg.targets, sc.c);
  for (std::size_t u = 0; u < n_f * sc.messages_per_user(); ++u) {
    const std::size_t msg = out.add_message();
    for (int j : chunks) out.set_bit(msg, j);
  }
  return out;
}

PureReports CraftPureReports(const AttackConfig& cfg, const ScfoParams& sc, std::size_t n_f, RngStream& rng) {
  cfg.Validate();
  PureReports out{sc.c, sc.messages_per_user(), {}};
  const std::vector<int> chunks = TargetChunks(cfg.targets, sc.c);
  const std::size_t total = n_f * sc.messages_per_user();
  out.values.reserve(total);
  for (std::size_t u = 0; u < total; ++u) {
    const int j = chunks.size() == 1 ? chunks[0] : chunks[rng.UniformInt(0, chunks.size() - 1)];
    out.values.push_back(static_cast<std::uint32_t>(j + 1));
  }
  return out;
}

PiecewiseReports CraftPiecewiseReports(const AttackConfig& cfg, const PerturbParams& params, std::size_t n_f,
                                       RngStream& rng) {
  cfg.Validate();
  params.Validate();
  const double half = params.b / cfg.range_divisor;
  PiecewiseReports out{params.b, {}};
  out.values.reserve(n_f);
  for (std::size_t u = 0; u < n_f; ++u) {
    const double t =
        cfg.targets.size() == 1 ? cfg.targets[0] : cfg.targets[rng.UniformInt(0, cfg.targets.size() - 1)];
    out.values.push_back(std::clamp(rng.Uniform(t - half, t + half), params.out_lo(), params.out_hi()));
  }
  return out;
}

RiarReport Riar(const Histogram& f_true, const Histogram& f_attacked, const Histogram& f_ide) {
  RiarReport r;
  r.w1_attacked_vs_ideal = Wasserstein(f_attacked, f_ide);
  r.w1_true_vs_ideal = Wasserstein(f_true, f_ide);
  if (!(r.w1_true_vs_ideal > 0)) throw Error(ErrorCode::kDegenerateTarget, "true distribution already equals the target");
  r.riar = r.w1_attacked_vs_ideal / r.w1_true_vs_ideal;
  return r;
}

}  // namespace shuffledist
