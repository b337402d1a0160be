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

#include <algorithm>
#include <charconv>
#include <fstream>
#include <iostream>
#include <sstream>

namespace shuffledist {

std::string_view ErrorCodeName(ErrorCode code) {
  switch (code) {
    case ErrorCode::kEmptyDataset: return "EmptyDataset";
    case ErrorCode::kDomain: return "DomainError";
    case ErrorCode::kInvalidArgument: return "InvalidArgument";
    case ErrorCode::kIo: return "IoError";
    case ErrorCode::kCalibration: return "CalibrationError";
    case ErrorCode::kInfeasibleBudget: return "InfeasibleBudget";
    case ErrorCode::kParameter: return "ParameterError";
    case ErrorCode::kDegenerateGeometry: return "DegenerateGeometry";
    case ErrorCode::kBatch: return "BatchError";
    case ErrorCode::kSingularAggregator: return "SingularAggregator";
    case ErrorCode::kDegenerateTarget: return "DegenerateTarget";
    case ErrorCode::kNumeric: return "NumericError";
    case ErrorCode::kConfig: return "ConfigError";
  }
  return "Error";
}

void Warn(std::string_view message) { std::cerr << "warning: " << message << '\n'; }

void DomainSpec::Validate() const {
  if (!(lo < hi)) throw Error(ErrorCode::kInvalidArgument, "domain requires lo < hi");
  if (m < 2) throw Error(ErrorCode::kInvalidArgument, "domain requires m >= 2");
}

Dataset NormalizeDomain(std::span<const double> values, const DomainSpec& spec) {
  spec.Validate();
  if (values.empty()) throw Error(ErrorCode::kEmptyDataset, "no values to normalize");
  const double width = spec.hi - spec.lo;
  Dataset out;
  out.values.reserve(values.size());
  for (double x : values) {
    out.values.push_back(std::clamp((x - spec.lo) / width, 0.0, 1.0));
  }
  return out;
}

std::vector<long long> BinCounts(const Dataset& data, int m) {
  if (m < 2) throw Error(ErrorCode::kInvalidArgument, "histogram requires m >= 2");
  std::vector<long long> counts(m, 0);
  for (double v : data.values) ++counts[BinIndex(v, m)];
  return counts;
}

Histogram BuildHistogram(const Dataset& data, int m) {
  if (data.n() == 0) throw Error(ErrorCode::kEmptyDataset, "cannot build a histogram of no values");
  const auto counts = BinCounts(data, m);
  Eigen::VectorXd freqs(m);
  const double n = static_cast<double>(data.n());
  for (int i = 0; i < m; ++i) freqs[i] = static_cast<double>(counts[i]) / n;
  return Histogram(std::move(freqs));
}

std::vector<double> SampleSyntheticNormal(std::size_t n, double mean, double stddev, RngStream& rng) {
  if (n < 1) throw Error(ErrorCode::kInvalidArgument, "sample size must be >= 1");
  if (!(stddev > 0)) throw Error(ErrorCode::kInvalidArgument, "stddev must be > 0");
  std::normal_distribution<double> normal(mean, stddev);
  std::vector<double> out(n);
  for (auto& v : out) v = normal(rng);
  return out;
}

namespace {

std::vector<std::string> SplitCsvLine(const std::string& line) {
  std::vector<std::string> fields;
  std::string field;
  std::istringstream in(line);
  while (std::getline(in, field, ',')) {
    const auto first = field.find_first_not_of(" \t\r\"");
    const auto last = field.find_last_not_of(" \t\r\"");
    fields.push_back(first == std::string::npos ? std::string() : field.substr(first, last - first + 1));
  }
  if (!line.empty() && line.back() == ',') fields.emplace_back();
  return fields;
}

bool ParseReal(const std::string& text, double& out) {
  if (text.empty()) return false;
  const char* begin = text.data();
  const char* end = begin + text.size();
  if (*begin == '+') ++begin;
  auto [ptr, ec] = std::from_chars(begin, end, out);
  return ec == std::errc() && ptr == end && std::isfinite(out);
}

}  // namespace

Dataset LoadDatasetCsv(const std::filesystem::path& path, const CsvColumn& column, const DomainSpec& spec) {
  spec.Validate();
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIo, "cannot open " + path.string());

  std::vector<double> raw;
  std::string line;
  std::size_t row = 0;
  std::size_t index = std::holds_alternative<std::size_t>(column) ? std::get<std::size_t>(column) : 0;
  bool resolved = std::holds_alternative<std::size_t>(column);
  while (std::getline(in, line)) {
    ++row;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const auto fields = SplitCsvLine(line);
    if (!resolved) {
      // Selecting by name: the first non-blank row must be the header.
      const auto& name = std::get<std::string>(column);
      auto it = std::find(fields.begin(), fields.end(), name);
      if (it == fields.end()) throw Error(ErrorCode::kIo, "column '" + name + "' not found in header of " + path.string());
      index = static_cast<std::size_t>(it - fields.begin());
      resolved = true;
      continue;
    }
    if (index >= fields.size()) {
      throw Error(ErrorCode::kIo, "row " + std::to_string(row) + " has no column " + std::to_string(index));
    }
    double value = 0;
    if (!ParseReal(fields[index], value)) {
      if (raw.empty() && row == 1) continue;  // optional header row
      throw Error(ErrorCode::kIo, "row " + std::to_string(row) + ": non-numeric value '" + fields[index] + "'");
    }
    raw.push_back(value);
  }
  if (!resolved) throw Error(ErrorCode::kIo, "no header row in " + path.string());
  if (raw.empty()) throw Error(ErrorCode::kEmptyDataset, "no valid rows in " + path.string());
  return NormalizeDomain(raw, spec);
}

}  // namespace shuffledist
