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

#ifndef SHUFFLEDIST_METRICS_HPP_
#define SHUFFLEDIST_METRICS_HPP_

#include <Eigen/Core>
#include <span>
#include <utility>
#include <vector>

#include "shuffledist/histogram.hpp"
#include "shuffledist/randomizers.hpp"
#include "shuffledist/rng.hpp"

namespace shuffledist {

template <typename Derived>
Eigen::Matrix<typename Derived::Scalar, Eigen::Dynamic, 1> Cdf(const Eigen::MatrixBase<Derived>& f) {
  Eigen::Matrix<typename Derived::Scalar, Eigen::Dynamic, 1> out(f.size());
  typename Derived::Scalar acc(0);
  for (Eigen::Index i = 0; i < f.size(); ++i) out[i] = (acc += f[i]);
  return out;
}

inline Eigen::VectorXd Cdf(const Histogram& f) { return Cdf(f.freqs()); }

// Sum of absolute CDF gaps, without a bin-width factor.
template <typename DerivedA, typename DerivedB>
double Wasserstein(const Eigen::MatrixBase<DerivedA>& f, const Eigen::MatrixBase<DerivedB>& g) {
  if (f.size() != g.size()) throw Error(ErrorCode::kInvalidArgument, "histograms differ in bin count");
  return static_cast<double>((Cdf(f) - Cdf(g)).cwiseAbs().sum());
}

inline double Wasserstein(const Histogram& f, const Histogram& g) { return Wasserstein(f.freqs(), g.freqs()); }

// Bin offset of a range query of relative width alpha.
int RangeOffset(double alpha, int m);

// Mean |R(f, i) - R(f_est, i)| with R(f, i) = P(f, i + L) - P(f, i), over the
// given start indices.
double RangeQueryError(const Histogram& f, const Histogram& f_est, double alpha, std::span<const int> starts);

// Starts drawn uniformly from [0, m - 1 - L].
double RangeQueryError(const Histogram& f, const Histogram& f_est, double alpha, int n_queries, RngStream& rng);

// Largest index with CDF <= lambda, or -1 when there is none.
int QuantileIndex(const Histogram& f, double lambda);

// Mean absolute quantile-index gap divided by m.
double QuantileError(const Histogram& f, const Histogram& f_est, std::span<const double> quantiles);

std::vector<double> DefaultQuantiles();

int MessageComplexity(Protocol protocol, const ScfoParams& sc = {});

struct MetricReport {
  std::vector<std::pair<double, double>> range_query;  // (alpha, error)
  double range_query_err = 0;  // mean over alphas
  double quantile_err = 0;
  double w1 = 0;
  double messages_per_user = 1;

  friend bool operator==(const MetricReport&, const MetricReport&) = default;
};

struct MetricSettings {
  std::vector<double> alphas{0.2, 0.4};
  std::vector<double> quantiles = DefaultQuantiles();
  int range_queries = 200;

  void Validate() const;
};

MetricReport EvaluateMetrics(const Histogram& f, const Histogram& f_est, const MetricSettings& settings,
                             const RngStream& query_stream, double messages_per_user);

}  // namespace shuffledist

#endif  // SHUFFLEDIST_METRICS_HPP_
