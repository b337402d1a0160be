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

#ifndef SHUFFLEDIST_EXPERIMENT_HPP_
#define SHUFFLEDIST_EXPERIMENT_HPP_

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "shuffledist/aggregation.hpp"
#include "shuffledist/attacks.hpp"
#include "shuffledist/histogram.hpp"
#include "shuffledist/metrics.hpp"
#include "shuffledist/mi_optimizer.hpp"
#include "shuffledist/privacy.hpp"
#include "shuffledist/randomizers.hpp"

namespace shuffledist {

struct DatasetConfig {
  enum class Kind { kNormal, kCsv };
  Kind kind = Kind::kNormal;
  double mean = 0;
  double stddev = 10;
  double lo = -40;
  double hi = 40;
  std::string path;
  CsvColumn column = std::size_t{0};

  friend bool operator==(const DatasetConfig&, const DatasetConfig&) = default;
};

enum class SweepParam { kEps, kBeta, kC };

struct SweepConfig {
  SweepParam param = SweepParam::kEps;
  std::vector<double> values;
};

struct ExperimentConfig {
  Protocol protocol = Protocol::kAsp;
  PrivacyBudget budget;
  DatasetConfig dataset;
  int m = 256;
  std::optional<int> c;
  std::optional<Aggregator> aggregator;  // defaults per protocol
  BoundConvention bound = BoundConvention::kDensityRatio;
  SmootherConfig smoother;
  OptimizerConfig optimizer;
  std::optional<AttackConfig> attack;
  int repetitions = 20;
  std::uint64_t seed = 0;
  MetricSettings metrics;
  bool w1_domain_units = false;  // multiply W1 by 1/m
  std::optional<SweepConfig> sweep;

  Aggregator resolved_aggregator() const;
  // Throws kConfig naming the offending field.
  void Validate() const;
};

// Strict JSON parsing: unknown fields and bad values raise kConfig errors
// carrying the field path.
ExperimentConfig ParseConfig(const nlohmann::json& j);
ExperimentConfig ParseConfigFile(const std::filesystem::path& path);

struct ResolvedParams {
  Protocol protocol = Protocol::kAsp;
  Aggregator aggregator = Aggregator::kEmas;
  std::optional<double> eps_l;
  PerturbParams piecewise;
  ScfoParams scfo;
  int messages_per_user = 1;

  friend bool operator==(const ResolvedParams&, const ResolvedParams&) = default;
};

ResolvedParams ResolveParams(const ExperimentConfig& cfg);

// The configured dataset; synthetic data is drawn from a fixed stream of
// the experiment seed so every protocol sees the same values.
Dataset MaterializeDataset(const ExperimentConfig& cfg);

ReportBatch Randomize(const Dataset& data, const ResolvedParams& params, const RngStream& rng);

struct EstimateOutcome {
  Histogram f;
  int iterations = 0;
};

// Server side for any protocol. n is the number of users behind the batch.
EstimateOutcome EstimateHistogram(const ReportBatch& batch, const ResolvedParams& params, int m, std::size_t n,
                                  const SmootherConfig& smoother);

struct RangeRiar {
  int divisor = 1;
  RiarReport report;

  friend bool operator==(const RangeRiar&, const RangeRiar&) = default;
};

struct RepetitionResult {
  int index = 0;
  MetricReport metrics;
  int iterations = 0;
  // One entry for SCFOs, one per injection range for piecewise protocols.
  std::vector<RangeRiar> riar;

  friend bool operator==(const RepetitionResult&, const RepetitionResult&) = default;
};

struct SummaryStat {
  double mean = 0;
  double std = 0;

  friend bool operator==(const SummaryStat&, const SummaryStat&) = default;
};

struct RunReport {
  std::string protocol;
  std::string aggregator;
  PrivacyBudget budget;
  int m = 0;
  std::uint64_t seed = 0;
  int repetitions = 0;
  ResolvedParams params;
  std::optional<AttackConfig> attack;
  std::vector<RepetitionResult> runs;
  std::map<std::string, SummaryStat> summary;
  // Injection range with the lowest mean RIAR (piecewise attacks only).
  std::optional<int> best_divisor;
  double wall_time_s = 0;

  friend bool operator==(const RunReport&, const RunReport&) = default;
};

RunReport RunExperiment(const ExperimentConfig& cfg);

// Flattened per-repetition values, in column order.
std::vector<std::pair<std::string, double>> FlattenRepetition(const RepetitionResult& r);

nlohmann::json ToJson(const RunReport& report);
RunReport RunReportFromJson(const nlohmann::json& j);

enum class ReportFormat { kJson, kCsv };
ReportFormat ParseReportFormat(std::string_view name);

// CSV has a header, one row per repetition, then "mean" and "std" rows.
std::string ReportToCsv(const RunReport& report);
void EmitReport(const RunReport& report, ReportFormat format, const std::filesystem::path& path);

struct SweepPoint {
  double value = 0;
  RunReport report;
};

std::string_view SweepParamName(SweepParam p);
std::vector<SweepPoint> RunSweep(const ExperimentConfig& cfg);
// One file per grid point, named <param>_<value>.<ext>. Returns the paths.
std::vector<std::filesystem::path> EmitSweep(const std::vector<SweepPoint>& points, SweepParam param,
                                             ReportFormat format, const std::filesystem::path& dir);

nlohmann::json CalibrationJson(const ExperimentConfig& cfg);
nlohmann::json MiBoundJson(const ExperimentConfig& cfg);

}  // namespace shuffledist

#endif  // SHUFFLEDIST_EXPERIMENT_HPP_
