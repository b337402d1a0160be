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

#ifndef SHUFFLEDIST_AGGREGATION_HPP_
#define SHUFFLEDIST_AGGREGATION_HPP_

#include <Eigen/Core>
#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numbers>
#include <string_view>
#include <vector>

#include "shuffledist/histogram.hpp"
#include "shuffledist/randomizers.hpp"

namespace shuffledist {

// Column-stochastic channel from m input bins over [0, 1] to m_hat output
// bins over the randomizer's output range. Entry (j, i) is the probability
// of output bin j given input bin i.
template <typename Scalar>
class BasicTransitionMatrix {
 public:
  using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  static constexpr double kColumnTolerance = 1e-9;

  explicit BasicTransitionMatrix(Matrix entries) : entries_(std::move(entries)) {
    if (entries_.size() == 0) throw Error(ErrorCode::kInvalidArgument, "empty transition matrix");
    if ((entries_.array() < Scalar(0)).any()) throw Error(ErrorCode::kInvalidArgument, "negative transition entry");
    for (Eigen::Index i = 0; i < entries_.cols(); ++i) {
      if (std::abs(static_cast<double>(entries_.col(i).sum()) - 1.0) > kColumnTolerance) {
        throw Error(ErrorCode::kInvalidArgument, "transition column " + std::to_string(i) + " is not stochastic");
      }
    }
  }

  int m_hat() const { return static_cast<int>(entries_.rows()); }
  int m() const { return static_cast<int>(entries_.cols()); }
  const Matrix& entries() const { return entries_; }
  Scalar operator()(int j, int i) const { return entries_(j, i); }

 private:
  Matrix entries_;
};

using TransitionMatrix = BasicTransitionMatrix<double>;

// Inputs sit at bin centers; output bins are integrated exactly.
TransitionMatrix BuildTransitionMatrix(const PerturbParams& params, int m, int m_hat);

// Output-bin histogram of piecewise reports (m_hat bins over [-b, 1 + b]).
Eigen::VectorXd OutputCounts(const PiecewiseReports& batch, const PerturbParams& params, int m_hat);

struct EmState {
  Histogram f;
  Eigen::VectorXd p_vec;
  int t = 0;
  double log_lik = -std::numeric_limits<double>::infinity();
};

EmState EmInit(int m);

template <typename Derived>
double LogLikelihood(const Histogram& f, const Eigen::MatrixBase<Derived>& counts, const TransitionMatrix& M) {
  const Eigen::VectorXd mix = M.entries() * f.freqs();
  double ll = 0;
  for (Eigen::Index j = 0; j < counts.size(); ++j) {
    if (counts[j] > 0) ll += counts[j] * std::log(mix[j]);
  }
  return ll;
}

// One E/M step. log_lik of the result is evaluated at the new estimate.
EmState EmStep(const EmState& state, const Eigen::VectorXd& counts, const TransitionMatrix& M);

// Binomial (1/4, 1/2, 1/4) smoothing. The two boundary bins average over
// their truncated window, (1/2, 1/4) / (3/4), and the result is rescaled to
// unit mass.
Histogram EmsSmooth(const Histogram& f);

enum class Sigma1Mode { kLiteral, kPerUser };

struct SmootherConfig {
  int radius = 3;
  double sigma_min = 1.0 / 3.0;
  double sigma_max = 1.0;
  int period = 50;
  int tau = 10000;
  Sigma1Mode sigma1_mode = Sigma1Mode::kLiteral;

  void Validate() const;
  // Cosine-decay width of the position kernel at iteration t.
  double Sigma2(int t) const {
    return sigma_min + 0.5 * (sigma_max - sigma_min) * (1 - std::cos(std::numbers::pi * t / period));
  }
};

// Frequency-kernel width from the report counts.
double Sigma1(const Eigen::VectorXd& counts, const TransitionMatrix& M, Sigma1Mode mode);

// Symmetric kernel over bins |i - k| <= R with entries
// K(f_i - f_k; sigma1) K(i - k; sigma2(t)), scaled to a doubly stochastic
// matrix, applied to a frozen copy of f. Each output is a convex combination
// of its window and total mass is preserved.
Histogram AdaptiveSmoothStep(const Histogram& f, int t, double sigma1, const SmootherConfig& cfg);

enum class Aggregator { kEm, kEms, kEmas };
std::string_view AggregatorName(Aggregator a);
Aggregator ParseAggregator(std::string_view name);

struct EstimateResult {
  Histogram f;
  int iterations = 0;
  bool converged = false;
};

// Iterates EM with the chosen smoothing until the L1 change of the estimate
// drops below 1/n or tau iterations have run.
EstimateResult IterateEm(const Eigen::VectorXd& counts, const TransitionMatrix& M, Aggregator aggregator,
                         const SmootherConfig& cfg);

EstimateResult EstimatePiecewise(const PiecewiseReports& batch, const PerturbParams& params, int m,
                                 Aggregator aggregator, const SmootherConfig& cfg = {});

inline Histogram EmasEstimate(const PiecewiseReports& batch, const PerturbParams& params, int m,
                              const SmootherConfig& cfg = {}) {
  return EstimatePiecewise(batch, params, m, Aggregator::kEmas, cfg).f;
}

inline Histogram EmsEstimate(const PiecewiseReports& batch, const PerturbParams& params, int m,
                             const SmootherConfig& cfg = {}) {
  return EstimatePiecewise(batch, params, m, Aggregator::kEms, cfg).f;
}

// Water-filling projection: subtracts the shift d with sum max(0, raw - d) = 1
// and clips. Falls back to uniform (with a warning) when raw has no finite
// entry.
template <typename Derived>
Histogram NormSub(const Eigen::MatrixBase<Derived>& raw) {
  const Eigen::Index m = raw.size();
  if (m == 0) throw Error(ErrorCode::kInvalidArgument, "norm-sub needs at least one entry");
  std::vector<double> sorted;
  sorted.reserve(m);
  for (Eigen::Index i = 0; i < m; ++i) {
    if (std::isfinite(static_cast<double>(raw[i]))) sorted.push_back(static_cast<double>(raw[i]));
  }
  if (sorted.empty() || static_cast<Eigen::Index>(sorted.size()) != m) {
    Warn("norm-sub input has non-finite entries; falling back to uniform");
    return Histogram::Uniform(static_cast<int>(m));
  }
  std::sort(sorted.begin(), sorted.end(), std::greater<>());
  double prefix = 0, shift = 0;
  for (std::size_t k = 0; k < sorted.size(); ++k) {
    prefix += sorted[k];
    shift = (prefix - 1) / static_cast<double>(k + 1);
    if (k + 1 == sorted.size() || sorted[k + 1] <= shift) break;
  }
  Eigen::VectorXd out(m);
  for (Eigen::Index i = 0; i < m; ++i) out[i] = std::max(0.0, static_cast<double>(raw[i]) - shift);
  const double total = out.sum();
  if (!(total > 0)) {
    Warn("norm-sub produced no mass; falling back to uniform");
    return Histogram::Uniform(static_cast<int>(m));
  }
  return Histogram(out / total);
}

// Unbiased chunk-frequency estimates (may be negative or exceed 1).
Eigen::VectorXd FlipAggregate(const FlipReports& batch, const ScfoParams& sc, std::size_t n);
Eigen::VectorXd PureAggregate(const PureReports& batch, const ScfoParams& sc, std::size_t n);

// Norm-Sub then uniform spreading of each chunk over m / c bins.
Histogram ScfoToHistogram(const Eigen::VectorXd& raw, int m);

}  // namespace shuffledist

#endif  // SHUFFLEDIST_AGGREGATION_HPP_
