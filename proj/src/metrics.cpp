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

#include "shuffledist/metrics.hpp"

#include <cmath>

namespace shuffledist {

int RangeOffset(double alpha, int m) {
  if (!(alpha > 0 && alpha < 1)) throw Error(ErrorCode::kInvalidArgument, "range width alpha must lie in (0, 1)");
  return static_cast<int>(std::lround(alpha * m));
}

double RangeQueryError(const Histogram& f, const Histogram& f_est, double alpha, std::span<const int> starts) {
  if (f.size() != f_est.size()) throw Error(ErrorCode::kInvalidArgument, "histograms differ in bin count");
  const int m = f.size();
  const int L = RangeOffset(alpha, m);
  if (L >= m) throw Error(ErrorCode::kInvalidArgument, "range query wider than the domain");
  if (starts.empty()) throw Error(ErrorCode::kInvalidArgument, "no range queries");
  const Eigen::VectorXd P = Cdf(f), Q = Cdf(f_est);
  double total = 0;
  for (int i : starts) {
    if (i < 0 || i + L >= m) throw Error(ErrorCode::kInvalidArgument, "range query start out of bounds");
    total += std::abs((P[i + L] - P[i]) - (Q[i + L] - Q[i]));
  }
  return total / static_cast<double>(starts.size());
}

double RangeQueryError(const Histogram& f, const Histogram& f_est, double alpha, int n_queries, RngStream& rng) {
  const int m = f.size();
  const int L = RangeOffset(alpha, m);
  if (L >= m) throw Error(ErrorCode::kInvalidArgument, "range query wider than the domain");
  if (n_queries < 1) throw Error(ErrorCode::kInvalidArgument, "need at least one range query");
  std::vector<int> starts(n_queries);
  for (int& s : starts) s = static_cast<int>(rng.UniformInt(0, static_cast<std::uint64_t>(m - 1 - L)));
  return RangeQueryError(f, f_est, alpha, starts);
}

int QuantileIndex(const Histogram& f, double lambda) {
  const Eigen::VectorXd P = Cdf(f);
  int idx = -1;
  for (int i = 0; i < f.size(); ++i) {
    if (P[i] <= lambda + 1e-12) idx = i;
  }
  return idx;
}

double QuantileError(const Histogram& f, const Histogram& f_est, std::span<const double> quantiles) {
  if (f.size() != f_est.size()) throw Error(ErrorCode::kInvalidArgument, "histograms differ in bin count");
  if (quantiles.empty()) throw Error(ErrorCode::kInvalidArgument, "empty quantile set");
  double total = 0;
  for (double lambda : quantiles) {
    if (!(lambda > 0 && lambda < 1)) throw Error(ErrorCode::kInvalidArgument, "quantiles must lie in (0, 1)");
    total += std::abs(QuantileIndex(f_est, lambda) - QuantileIndex(f, lambda));
  }
  return total / static_cast<double>(quantiles.size()) / f.size();
}

std::vector<double> DefaultQuantiles() {
  std::vector<double> q;
  for (int i = 1; i <= 19; ++i) q.push_back(0.05 * i);
  return q;
}

int MessageComplexity(Protocol protocol, const ScfoParams& sc) {
  return IsPiecewise(protocol) ? 1 : sc.s + 1;
}

void MetricSettings::Validate() const {
  if (alphas.empty()) throw Error(ErrorCode::kInvalidArgument, "no range-query widths");
  for (double a : alphas) {
    if (!(a > 0 && a < 1)) throw Error(ErrorCode::kInvalidArgument, "range-query widths must lie in (0, 1)");
  }
  if (quantiles.empty()) throw Error(ErrorCode::kInvalidArgument, "no quantiles");
  for (double q : quantiles) {
    if (!(q > 0 && q < 1)) throw Error(ErrorCode::kInvalidArgument, "quantiles must lie in (0, 1)");
  }
  if (range_queries < 1) throw Error(ErrorCode::kInvalidArgument, "range_queries must be >= 1");
}

MetricReport EvaluateMetrics(const Histogram& f, const Histogram& f_est, const MetricSettings& settings,
                             const RngStream& query_stream, double messages_per_user) {
  MetricReport r;
  double sum = 0;
  for (std::size_t i = 0; i < settings.alphas.size(); ++i) {
    RngStream rng = query_stream.Child(i);
    const double e = RangeQueryError(f, f_est, settings.alphas[i], settings.range_queries, rng);
    r.range_query.emplace_back(settings.alphas[i], e);
    sum += e;
  }
  r.range_query_err = sum / static_cast<double>(settings.alphas.size());
  r.quantile_err = QuantileError(f, f_est, settings.quantiles);
  r.w1 = Wasserstein(f, f_est);
  r.messages_per_user = messages_per_user;
  return r;
}

}  // namespace shuffledist
