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

#ifndef SHUFFLEDIST_HISTOGRAM_HPP_
#define SHUFFLEDIST_HISTOGRAM_HPP_

#include <cmath>
#include <cstddef>
#include <filesystem>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include <Eigen/Core>

#include "shuffledist/error.hpp"
#include "shuffledist/rng.hpp"

namespace shuffledist {

// Raw-unit bounds of the data domain plus the estimate resolution.
struct DomainSpec {
  double lo = 0.0;
  double hi = 1.0;
  int m = 256;

  void Validate() const;
};

// A probability vector over m equal-width bins of [0, 1].
template <typename Scalar>
class BasicHistogram {
 public:
  using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
  static constexpr double kSumTolerance = 1e-9;

  BasicHistogram() = default;

  // Throws kInvalidArgument unless every entry is >= 0 and the entries sum
  // to 1 within kSumTolerance.
  explicit BasicHistogram(Vector freqs) : freqs_(std::move(freqs)) { Check(); }

  static BasicHistogram Uniform(int m) {
    return BasicHistogram(Vector::Constant(m, Scalar(1) / Scalar(m)));
  }

  // Normalizes a nonnegative vector with positive total.
  template <typename Derived>
  static BasicHistogram FromWeights(const Eigen::MatrixBase<Derived>& weights) {
    const Scalar total = weights.sum();
    if (!(total > Scalar(0)) || (weights.array() < Scalar(0)).any()) {
      throw Error(ErrorCode::kInvalidArgument, "histogram weights must be nonnegative with positive sum");
    }
    return BasicHistogram(Vector(weights / total));
  }

  int size() const { return static_cast<int>(freqs_.size()); }
  const Vector& freqs() const { return freqs_; }
  Scalar operator[](int i) const { return freqs_[i]; }

  friend bool operator==(const BasicHistogram& a, const BasicHistogram& b) {
    return a.freqs_.size() == b.freqs_.size() && a.freqs_ == b.freqs_;
  }

 private:
  void Check() const {
    if (freqs_.size() == 0) throw Error(ErrorCode::kInvalidArgument, "histogram must have at least one bin");
    for (Eigen::Index i = 0; i < freqs_.size(); ++i) {
      if (!(freqs_[i] >= Scalar(0))) {
        throw Error(ErrorCode::kInvalidArgument, "histogram entry " + std::to_string(i) + " is negative or NaN");
      }
    }
    const double total = static_cast<double>(freqs_.sum());
    if (std::abs(total - 1.0) > kSumTolerance) {
      throw Error(ErrorCode::kInvalidArgument, "histogram sums to " + std::to_string(total));
    }
  }

  Vector freqs_;
};

using Histogram = BasicHistogram<double>;

// Values normalized into [0, 1].
struct Dataset {
  std::vector<double> values;

  std::size_t n() const { return values.size(); }
};

// Bin of a normalized value: floor(v * m), with v = 1 joining bin m - 1.
inline int BinIndex(double v, int m) {
  const int bin = static_cast<int>(std::floor(v * m));
  return bin >= m ? m - 1 : (bin < 0 ? 0 : bin);
}

// Linear map (x - lo) / (hi - lo), clipped to [0, 1].
Dataset NormalizeDomain(std::span<const double> values, const DomainSpec& spec);

// Empirical histogram of the dataset at resolution m.
Histogram BuildHistogram(const Dataset& data, int m);

// Per-bin counts underlying BuildHistogram.
std::vector<long long> BinCounts(const Dataset& data, int m);

std::vector<double> SampleSyntheticNormal(std::size_t n, double mean, double stddev, RngStream& rng);

// Column selector for CSV ingestion: a header name or a zero-based index.
using CsvColumn = std::variant<std::string, std::size_t>;

// Reads one numeric column of a comma-separated file. A single header row
// is accepted (and required when the column is selected by name); any other
// non-numeric cell is rejected with its 1-based row number.
Dataset LoadDatasetCsv(const std::filesystem::path& path, const CsvColumn& column, const DomainSpec& spec);

}  // namespace shuffledist

#endif  // SHUFFLEDIST_HISTOGRAM_HPP_
