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

#include <gtest/gtest.h>

#include "shuffledist/experiment.hpp"
#include "shuffledist/metrics.hpp"

namespace shuffledist {
namespace {

std::vector<int> Bits(const FlipReports& r, std::size_t msg) {
  std::vector<int> out;
  for (int j = 0; j < r.c; ++j) out.push_back(r.bit(msg, j));
  return out;
}

TEST(AttackConfig, Validation) {
  EXPECT_NO_THROW((AttackConfig{0.05, {0.0, 1.0}, 2}.Validate()));
  EXPECT_THROW((AttackConfig{-0.1, {1.0}, 1}.Validate()), Error);
  EXPECT_THROW((AttackConfig{0.1, {}, 1}.Validate()), Error);
  EXPECT_THROW((AttackConfig{0.1, {1.5}, 1}.Validate()), Error);
  EXPECT_THROW((AttackConfig{0.1, {1.0}, 4}.Validate()), Error);
}

TEST(FakeUserCount, Rounds) {
  EXPECT_EQ(FakeUserCount(0.05, 100000), 5000u);
  EXPECT_EQ(FakeUserCount(0.015, 100), 2u);
  EXPECT_EQ(FakeUserCount(0, 100), 0u);
}

TEST(IdealDistribution, Examples) {
  const std::vector<double> one{0.5}, two{0, 1}, three{0, 0.25, 0.5}, same{0.1, 0.2};
  EXPECT_EQ(IdealDistribution(one, 4).freqs(), Eigen::Vector4d(0, 0, 1, 0));
  EXPECT_EQ(IdealDistribution(two, 4).freqs(), Eigen::Vector4d(0.5, 0, 0, 0.5));
  const Histogram h = IdealDistribution(three, 4);
  for (int i = 0; i < 3; ++i) EXPECT_NEAR(h[i], 1.0 / 3, 1e-15);
  EXPECT_EQ(h[3], 0);
  EXPECT_EQ(IdealDistribution(same, 4).freqs(), Eigen::Vector4d(1, 0, 0, 0));
}

TEST(CraftFlipReports, Examples) {
  const FlipReports a = CraftFlipReports({0.1, {1.0}, 1}, {4, 1, 0.1}, 10);
  ASSERT_EQ(a.size(), 20u);
  for (std::size_t i = 0; i < a.size(); ++i) EXPECT_EQ(Bits(a, i), (std::vector<int>{0, 0, 0, 1}));
  const FlipReports b = CraftFlipReports({0.1, {0.0, 0.5}, 1}, {4, 2, 0.1}, 3);
  for (std::size_t i = 0; i < b.size(); ++i) EXPECT_EQ(Bits(b, i), (std::vector<int>{1, 0, 1, 0}));
}

TEST(CraftFlipReports, CountingProperty) {
  const std::vector<double> targets{0.03, 0.5, 0.51, 0.97};
  const ScfoParams sc{32, 4, 0.2};
  const std::size_t n_f = 137;
  const FlipReports r = CraftFlipReports({0.1, targets, 1}, sc, n_f);
  const auto chunks = TargetChunks(targets, sc.c);
  for (int j = 0; j < sc.c; ++j) {
    std::size_t sum = 0;
    for (std::size_t i = 0; i < r.size(); ++i) sum += r.bit(i, j);
    const bool hit = std::find(chunks.begin(), chunks.end(), j) != chunks.end();
    EXPECT_EQ(sum, hit ? n_f * (sc.s + 1) : 0u) << j;
  }
  EXPECT_NO_THROW(ValidateBatch(r));
}

TEST(CraftPureReports, Examples) {
  RngStream rng(1, 0);
  const PureReports a = CraftPureReports({0.1, {1.0}, 1}, {4, 2, 0}, 5, rng);
  ASSERT_EQ(a.values.size(), 15u);
  for (auto v : a.values) EXPECT_EQ(v, 4u);
  EXPECT_TRUE(CraftPureReports({0.1, {1.0}, 1}, {4, 2, 0}, 0, rng).values.empty());
}

TEST(CraftPureReports, SplitsBetweenTargets) {
  RngStream rng(2, 0);
  const PureReports r = CraftPureReports({0.1, {0.0, 0.5}, 1}, {4, 0, 0}, 10000, rng);
  int first = 0;
  for (auto v : r.values) {
    ASSERT_TRUE(v == 1u || v == 3u);
    first += v == 1u;
  }
  EXPECT_LE(std::abs(first - 5000), 3 * std::sqrt(10000 * 0.25));
  EXPECT_NO_THROW(ValidateBatch(r));
}

TEST(CraftPiecewiseReports, SupportAndMean) {
  RngStream rng(3, 0);
  const PiecewiseReports a = CraftPiecewiseReports({0.1, {1.0}, 1}, PerturbParams::FromBandRatio(0.2, 5), 10000, rng);
  for (double v : a.values) {
    ASSERT_GE(v, 0.8);
    ASSERT_LE(v, 1.2);
  }
  EXPECT_NO_THROW(ValidateBatch(a));
  const PiecewiseReports b = CraftPiecewiseReports({0.1, {0.5}, 3}, PerturbParams::FromBandRatio(0.3, 5), 100000, rng);
  double mean = 0;
  for (double v : b.values) {
    ASSERT_GE(v, 0.4);
    ASSERT_LE(v, 0.6);
    mean += v;
  }
  EXPECT_NEAR(mean / 100000, 0.5, 0.003);
}

TEST(CraftPiecewiseReports, ClippedToOutputRange) {
  RngStream rng(4, 0);
  const PerturbParams pp = PerturbParams::FromBandRatio(0.5, 3);
  const PiecewiseReports r = CraftPiecewiseReports({0.1, {0.0, 1.0}, 1}, pp, 20000, rng);
  for (double v : r.values) {
    ASSERT_GE(v, -0.5);
    ASSERT_LE(v, 1.5);
  }
}

TEST(Riar, Examples) {
  const Histogram f(Eigen::Vector2d(1, 0)), ide(Eigen::Vector2d(0, 1)), half(Eigen::Vector2d(0.5, 0.5));
  EXPECT_DOUBLE_EQ(Riar(f, f, ide).riar, 1.0);
  EXPECT_DOUBLE_EQ(Riar(f, ide, ide).riar, 0.0);
  const RiarReport r = Riar(f, half, ide);
  EXPECT_DOUBLE_EQ(r.w1_attacked_vs_ideal, 0.5);
  EXPECT_DOUBLE_EQ(r.w1_true_vs_ideal, 1.0);
  EXPECT_DOUBLE_EQ(r.riar, 0.5);
  try {
    Riar(ide, half, ide);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kDegenerateTarget);
  }
}

TEST(Riar, ScaleFree) {
  RngStream rng(5, 0);
  for (int t = 0; t < 100; ++t) {
    Eigen::VectorXd a(16), b(16);
    for (int i = 0; i < 16; ++i) {
      a[i] = rng.Uniform();
      b[i] = rng.Uniform();
    }
    const Histogram f = Histogram::FromWeights(a), att = Histogram::FromWeights(b);
    const std::vector<double> target{rng.Uniform()};
    const Histogram ide = IdealDistribution(target, 16);
    const RiarReport r = Riar(f, att, ide);
    const double scale = 1.0 / 16;
    EXPECT_NEAR((scale * r.w1_attacked_vs_ideal) / (scale * r.w1_true_vs_ideal), r.riar, 1e-14);
    EXPECT_GE(r.riar, 0);
  }
}

TEST(Attack, FullInjectionRangeIsStrongest) {
  ExperimentConfig cfg;
  cfg.protocol = Protocol::kAsp;
  cfg.budget = {0.1, 1e-5, 100000};
  cfg.attack = AttackConfig{0.05, {1.0}, 1};
  cfg.repetitions = 5;
  cfg.seed = 9;
  const RunReport report = RunExperiment(cfg);
  EXPECT_LT(report.summary.at("riar_range1").mean, report.summary.at("riar_range3").mean);
}

}  // namespace
}  // namespace shuffledist
