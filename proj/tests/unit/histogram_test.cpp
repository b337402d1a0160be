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

#include "shuffledist/histogram.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <numeric>
#include <random>

#include "test_util.hpp"

namespace shuffledist {
namespace {

using testing::TempDir;

TEST(NormalizeDomain, MapsEndpointsLinearly) {
  const std::vector<double> raw{0, 5, 10};
  const Dataset d = NormalizeDomain(raw, {0, 10, 4});
  EXPECT_EQ(d.values, (std::vector<double>{0.0, 0.5, 1.0}));
}

TEST(NormalizeDomain, ClipsOutOfRange) {
  const std::vector<double> raw{-3, 12};
  EXPECT_EQ(NormalizeDomain(raw, {0, 10, 4}).values, (std::vector<double>{0.0, 1.0}));
}

TEST(NormalizeDomain, RejectsEmptyInput) {
  try {
    NormalizeDomain(std::vector<double>{}, {0, 1, 4});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kEmptyDataset);
  }
}

TEST(NormalizeDomain, RejectsInvalidSpec) {
  EXPECT_THROW(NormalizeDomain(std::vector<double>{1}, {1, 1, 4}), Error);
  EXPECT_THROW(NormalizeDomain(std::vector<double>{1}, {0, 1, 1}), Error);
}

TEST(NormalizeDomain, NormalSampleCentred) {
  RngStream rng(42, 0);
  const auto raw = SampleSyntheticNormal(100000, 0, 10, rng);
  const Dataset d = NormalizeDomain(raw, {-40, 40, 256});
  double mean = 0;
  for (double v : d.values) {
    ASSERT_GE(v, 0);
    ASSERT_LE(v, 1);
    mean += v;
  }
  mean /= d.n();
  // Sample mean of the raw draws, mapped through the same affine law.
  const double raw_mean = std::accumulate(raw.begin(), raw.end(), 0.0) / raw.size();
  EXPECT_NEAR(mean, (raw_mean + 40) / 80, 1e-3);
  EXPECT_NEAR(mean, 0.5, 0.005);
}

TEST(NormalizeDomain, MonotoneAndOrderPreserving) {
  std::mt19937_64 gen(5);
  std::uniform_real_distribution<double> u(-50, 50);
  std::vector<double> raw(500);
  for (double& v : raw) v = u(gen);
  std::sort(raw.begin(), raw.end());
  const Dataset d = NormalizeDomain(raw, {-20, 30, 8});
  EXPECT_TRUE(std::is_sorted(d.values.begin(), d.values.end()));
}

TEST(BuildHistogram, SymmetricSplit) {
  const Histogram h = BuildHistogram(Dataset{{0.1, 0.1, 0.9, 0.9}}, 2);
  EXPECT_EQ(h[0], 0.5);
  EXPECT_EQ(h[1], 0.5);
}

TEST(BuildHistogram, RightEdgeJoinsLastBin) {
  const Histogram h = BuildHistogram(Dataset{{1.0}}, 4);
  EXPECT_EQ(h.freqs(), Eigen::Vector4d(0, 0, 0, 1));
}

TEST(BuildHistogram, HandEvaluatedBinRule) {
  // floor(0.24 * 4) = 0, floor(0.25 * 4) = 1, floor(0.26 * 4) = 1.
  const Histogram h = BuildHistogram(Dataset{{0.24, 0.25, 0.26}}, 4);
  EXPECT_NEAR(h[0], 1.0 / 3, 1e-15);
  EXPECT_NEAR(h[1], 2.0 / 3, 1e-15);
  EXPECT_EQ(h[2], 0);
  EXPECT_EQ(h[3], 0);
}

TEST(BuildHistogram, RecoversCountsAndIgnoresOrder) {
  RngStream rng(3, 1);
  Dataset d;
  for (int i = 0; i < 1000; ++i) d.values.push_back(rng.Uniform());
  const Histogram h = BuildHistogram(d, 16);
  const auto counts = BinCounts(d, 16);
  EXPECT_NEAR(h.freqs().sum(), 1.0, 1e-9);
  for (int i = 0; i < 16; ++i) EXPECT_EQ(std::llround(h[i] * d.n()), counts[i]);
  Dataset shuffled = d;
  std::shuffle(shuffled.values.begin(), shuffled.values.end(), rng);
  EXPECT_EQ(BuildHistogram(shuffled, 16), h);
}

TEST(BuildHistogram, RejectsSmallM) { EXPECT_THROW(BuildHistogram(Dataset{{0.5}}, 1), Error); }

TEST(Histogram, ValidatesInvariants) {
  EXPECT_THROW(Histogram(Eigen::Vector2d(0.6, 0.6)), Error);
  EXPECT_THROW(Histogram(Eigen::Vector2d(1.5, -0.5)), Error);
  EXPECT_NO_THROW(Histogram(Eigen::Vector2d(0.25, 0.75)));
  EXPECT_EQ(Histogram::Uniform(4).freqs(), Eigen::Vector4d::Constant(0.25));
}

TEST(SampleSyntheticNormal, MomentsWithinCltBounds) {
  RngStream rng(11, 2);
  const auto x = SampleSyntheticNormal(100000, 0, 10, rng);
  ASSERT_EQ(x.size(), 100000u);
  const double mean = std::accumulate(x.begin(), x.end(), 0.0) / x.size();
  double ss = 0;
  for (double v : x) ss += (v - mean) * (v - mean);
  const double sd = std::sqrt(ss / (x.size() - 1));
  EXPECT_NEAR(mean, 0, 0.1);
  EXPECT_NEAR(sd, 10, 0.1);
}

TEST(SampleSyntheticNormal, TinySpreadCollapsesToMean) {
  RngStream rng(1, 1);
  EXPECT_NEAR(SampleSyntheticNormal(1, 3.5, 1e-12, rng)[0], 3.5, 1e-9);
}

TEST(SampleSyntheticNormal, DeterministicPerStream) {
  RngStream a(99, 4), b(99, 4), c(99, 5);
  const auto xa = SampleSyntheticNormal(1000, 0, 1, a);
  EXPECT_EQ(xa, SampleSyntheticNormal(1000, 0, 1, b));
  EXPECT_NE(xa, SampleSyntheticNormal(1000, 0, 1, c));
}

TEST(SampleSyntheticNormal, RejectsBadArguments) {
  RngStream rng(1, 1);
  EXPECT_THROW(SampleSyntheticNormal(0, 0, 1, rng), Error);
  EXPECT_THROW(SampleSyntheticNormal(5, 0, 0, rng), Error);
}

TEST(RngStream, ChildrenDependOnIdentityOnly) {
  RngStream a(5, 9), b(5, 9);
  a();
  a();
  RngStream ca = a.Child(3), cb = b.Child(3);
  for (int i = 0; i < 10; ++i) EXPECT_EQ(ca(), cb());
  RngStream d = b.Child(4);
  EXPECT_NE(b.Child(3)(), d());
}

TEST(LoadDatasetCsv, HeaderlessColumn) {
  TempDir dir;
  const auto p = dir.Write("v.csv", "0\n5\n10\n");
  EXPECT_EQ(LoadDatasetCsv(p, std::size_t{0}, {0, 10, 4}).values, (std::vector<double>{0, 0.5, 1}));
}

TEST(LoadDatasetCsv, HeaderByNameMatchesHeaderless) {
  TempDir dir;
  const auto with = dir.Write("h.csv", "income\n0\n5\n10\n");
  const auto without = dir.Write("n.csv", "0\n5\n10\n");
  EXPECT_EQ(LoadDatasetCsv(with, std::string("income"), {0, 10, 4}).values,
            LoadDatasetCsv(without, std::size_t{0}, {0, 10, 4}).values);
}

TEST(LoadDatasetCsv, SelectsNamedColumnAmongMany) {
  TempDir dir;
  const auto p = dir.Write("m.csv", "id,income\n1,2000\n2,4000\n");
  EXPECT_EQ(LoadDatasetCsv(p, std::string("income"), {0, 4000, 4}).values, (std::vector<double>{0.5, 1.0}));
  EXPECT_EQ(LoadDatasetCsv(p, std::size_t{1}, {0, 4000, 4}).values, (std::vector<double>{0.5, 1.0}));
}

TEST(LoadDatasetCsv, RetirementStyleRangeIsClipped) {
  TempDir dir;
  const auto p = dir.Write("r.csv", "compensation\n-28700\n0\n30000\n59999\n101000\n");
  const Dataset d = LoadDatasetCsv(p, std::string("compensation"), {0, 60000, 512});
  ASSERT_EQ(d.n(), 5u);
  for (double v : d.values) {
    EXPECT_GE(v, 0);
    EXPECT_LE(v, 1);
  }
  EXPECT_EQ(d.values[0], 0.0);
  EXPECT_EQ(d.values[4], 1.0);
  EXPECT_DOUBLE_EQ(d.values[2], 0.5);
}

TEST(LoadDatasetCsv, ReportsRowOfNonNumericCell) {
  TempDir dir;
  const auto p = dir.Write("bad.csv", "x\n1\n2\nabc\n");
  try {
    LoadDatasetCsv(p, std::string("x"), {0, 10, 4});
    FAIL();
  } catch (const Error& e) {
    EXPECT_NE(std::string(e.what()).find("row 4"), std::string::npos) << e.what();
  }
}

TEST(LoadDatasetCsv, FailureModes) {
  TempDir dir;
  EXPECT_THROW(LoadDatasetCsv(dir.path() / "missing.csv", std::size_t{0}, {0, 1, 4}), Error);
  const auto p = dir.Write("h.csv", "a\n1\n");
  EXPECT_THROW(LoadDatasetCsv(p, std::string("b"), {0, 1, 4}), Error);
  const auto empty = dir.Write("e.csv", "a\n");
  try {
    LoadDatasetCsv(empty, std::string("a"), {0, 1, 4});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kEmptyDataset);
  }
}

}  // namespace
}  // namespace shuffledist
