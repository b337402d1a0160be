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

#include "shuffledist/aggregation.hpp"

#include <algorithm>
#include <cmath>

namespace shuffledist {

TransitionMatrix BuildTransitionMatrix(const PerturbParams& params, int m, int m_hat) {
  params.Validate();
  if (m < 1 || m_hat < 1) throw Error(ErrorCode::kInvalidArgument, "transition matrix needs m, m_hat >= 1");
  const double b = params.b;
  const double w = params.out_width() / m_hat;
  TransitionMatrix::Matrix M(m_hat, m);
  for (int i = 0; i < m; ++i) {
    const double x = (i + 0.5) / m;
    const double band_lo = x - b, band_hi = x + b;
    for (int j = 0; j < m_hat; ++j) {
      const double lo = -b + j * w;
      const double hi = (j + 1 == m_hat) ? 1 + b : lo + w;
      const double overlap = std::max(0.0, std::min(hi, band_hi) - std::max(lo, band_lo));
      M(j, i) = params.q * (hi - lo) + (params.p - params.q) * overlap;
    }
  }
  return TransitionMatrix(std::move(M));
}

Eigen::VectorXd OutputCounts(const PiecewiseReports& batch, const PerturbParams& params, int m_hat) {
  if (std::abs(batch.b - params.b) > 1e-12 * std::max(1.0, params.b)) {
    throw Error(ErrorCode::kBatch, "batch band width does not match the randomizer (protocol mismatch)");
  }
  ValidateBatch(batch);
  const double b = params.b;
  const double scale = m_hat / params.out_width();
  Eigen::VectorXd counts = Eigen::VectorXd::Zero(m_hat);
  for (double v : batch.values) {
    counts[std::clamp(static_cast<int>((v + b) * scale), 0, m_hat - 1)] += 1;
  }
  return counts;
}

EmState EmInit(int m) {
  EmState s{Histogram::Uniform(m), Eigen::VectorXd::Zero(m), 0, -std::numeric_limits<double>::infinity()};
  return s;
}

EmState EmStep(const EmState& state, const Eigen::VectorXd& counts, const TransitionMatrix& M) {
  const Eigen::VectorXd& f = state.f.freqs();
  if (counts.size() != M.m_hat() || f.size() != M.m()) {
    throw Error(ErrorCode::kInvalidArgument, "EM dimensions do not match the transition matrix");
  }
  const Eigen::VectorXd mix = M.entries() * f;
  Eigen::VectorXd ratio(counts.size());
  for (Eigen::Index j = 0; j < counts.size(); ++j) {
    if (counts[j] == 0) {
      ratio[j] = 0;
    } else if (!(mix[j] > 0)) {
      throw Error(ErrorCode::kNumeric, "zero mixture probability at output bin " + std::to_string(j));
    } else {
      ratio[j] = counts[j] / mix[j];
    }
  }
  EmState next;
  next.p_vec = f.cwiseProduct(M.entries().transpose() * ratio);
  const double total = next.p_vec.sum();
  if (!(total > 0)) throw Error(ErrorCode::kNumeric, "EM step produced no mass");
  next.f = Histogram(next.p_vec / total);
  next.t = state.t + 1;
  next.log_lik = LogLikelihood(next.f, counts, M);
  return next;
}

Histogram EmsSmooth(const Histogram& f) {
  const int m = f.size();
  if (m < 2) return f;
  const Eigen::VectorXd& v = f.freqs();
  Eigen::VectorXd out(m);
  out[0] = (0.5 * v[0] + 0.25 * v[1]) / 0.75;
  out[m - 1] = (0.5 * v[m - 1] + 0.25 * v[m - 2]) / 0.75;
  for (int i = 1; i + 1 < m; ++i) out[i] = 0.5 * v[i] + 0.25 * (v[i - 1] + v[i + 1]);
  return Histogram::FromWeights(out);
}

void SmootherConfig::Validate() const {
  if (radius < 1) throw Error(ErrorCode::kInvalidArgument, "smoother radius must be >= 1");
  if (!(sigma_min > 0 && sigma_min <= sigma_max)) {
    throw Error(ErrorCode::kInvalidArgument, "smoother needs 0 < sigma_min <= sigma_max");
  }
  if (period < 1) throw Error(ErrorCode::kInvalidArgument, "smoother period must be >= 1");
  if (tau < 1) throw Error(ErrorCode::kInvalidArgument, "smoother tau must be >= 1");
}

double Sigma1(const Eigen::VectorXd& counts, const TransitionMatrix& M, Sigma1Mode mode) {
  const double m = M.m();
  const double n = counts.sum();
  double acc = 0;
  for (int i = 0; i < M.m_hat(); ++i) {
    const double row = M.entries().row(i).sum();
    if (!(row > 0) || counts[i] == 0) continue;
    const double ni = mode == Sigma1Mode::kPerUser ? counts[i] / n : counts[i];
    for (int j = 0; j < M.m(); ++j) acc += ni * m * m * M(i, j) / row;
  }
  return acc / m;
}

namespace {

// Banded symmetric kernel: row i holds K(i, i + o) for o in [-R, R], zero
// outside [0, m).
struct BandedKernel {
  int m;
  int radius;
  Eigen::MatrixXd band;  // m x (2R + 1)

  Eigen::VectorXd Apply(const Eigen::VectorXd& x) const {
    Eigen::VectorXd y = Eigen::VectorXd::Zero(m);
    for (int i = 0; i < m; ++i) {
      const int lo = std::max(0, i - radius), hi = std::min(m - 1, i + radius);
      double s = 0;
      for (int k = lo; k <= hi; ++k) s += band(i, k - i + radius) * x[k];
      y[i] = s;
    }
    return y;
  }
};

// Scaling d with d_i (K d)_i = 1, so diag(d) K diag(d) is doubly stochastic.
Eigen::VectorXd SymmetricScaling(const BandedKernel& K) {
  Eigen::VectorXd d = K.Apply(Eigen::VectorXd::Ones(K.m)).cwiseInverse().cwiseSqrt();
  for (int it = 0; it < 100000; ++it) {
    const Eigen::VectorXd kd = K.Apply(d);
    const double err = (d.cwiseProduct(kd).array() - 1).abs().maxCoeff();
    if (err < 1e-14) break;
    d = d.cwiseQuotient(kd).cwiseSqrt();
  }
  return d;
}

}  // namespace

Histogram AdaptiveSmoothStep(const Histogram& f, int t, double sigma1, const SmootherConfig& cfg) {
  cfg.Validate();
  if (!(sigma1 > 0)) throw Error(ErrorCode::kInvalidArgument, "sigma1 must be > 0");
  const int m = f.size();
  const int R = cfg.radius;
  const double s2 = cfg.Sigma2(t);
  const Eigen::VectorXd& v = f.freqs();
  BandedKernel K{m, R, Eigen::MatrixXd::Zero(m, 2 * R + 1)};
  for (int i = 0; i < m; ++i) {
    for (int k = std::max(0, i - R); k <= std::min(m - 1, i + R); ++k) {
      const double df = v[i] - v[k];
      const double dx = i - k;
      K.band(i, k - i + R) = std::exp(-df * df / (2 * sigma1 * sigma1) - dx * dx / (2 * s2 * s2));
    }
  }
  const Eigen::VectorXd d = SymmetricScaling(K);
  const Eigen::VectorXd out = d.cwiseProduct(K.Apply(d.cwiseProduct(v)));
  return Histogram::FromWeights(out.cwiseMax(0.0));
}

std::string_view AggregatorName(Aggregator a) {
  switch (a) {
    case Aggregator::kEm: return "EM";
    case Aggregator::kEms: return "EMS";
    case Aggregator::kEmas: return "EMAS";
  }
  return "?";
}

Aggregator ParseAggregator(std::string_view name) {
  if (name == "EM" || name == "em") return Aggregator::kEm;
  if (name == "EMS" || name == "ems") return Aggregator::kEms;
  if (name == "EMAS" || name == "emas") return Aggregator::kEmas;
  throw Error(ErrorCode::kInvalidArgument, "unknown aggregator '" + std::string(name) + "'");
}

EstimateResult IterateEm(const Eigen::VectorXd& counts, const TransitionMatrix& M, Aggregator aggregator,
                         const SmootherConfig& cfg) {
  cfg.Validate();
  const double n = counts.sum();
  if (!(n > 0)) throw Error(ErrorCode::kEmptyDataset, "no reports to aggregate");
  const double sigma1 = aggregator == Aggregator::kEmas ? Sigma1(counts, M, cfg.sigma1_mode) : 0.0;
  EmState state = EmInit(M.m());
  EstimateResult result{state.f, 0, false};
  for (int t = 0; t < cfg.tau; ++t) {
    EmState next = EmStep(state, counts, M);
    if (aggregator == Aggregator::kEms) {
      next.f = EmsSmooth(next.f);
    } else if (aggregator == Aggregator::kEmas) {
      next.f = AdaptiveSmoothStep(next.f, t, sigma1, cfg);
    }
    const double change = (next.f.freqs() - state.f.freqs()).lpNorm<1>();
    state = std::move(next);
    result.iterations = t + 1;
    if (change < 1 / n) {
      result.converged = true;
      break;
    }
  }
  result.f = state.f;
  return result;
}

EstimateResult EstimatePiecewise(const PiecewiseReports& batch, const PerturbParams& params, int m,
                                 Aggregator aggregator, const SmootherConfig& cfg) {
  if (batch.values.empty()) throw Error(ErrorCode::kEmptyDataset, "empty report batch");
  const Eigen::VectorXd counts = OutputCounts(batch, params, m);
  return IterateEm(counts, BuildTransitionMatrix(params, m, m), aggregator, cfg);
}

Eigen::VectorXd FlipAggregate(const FlipReports& batch, const ScfoParams& sc, std::size_t n) {
  if (batch.c != sc.c) throw Error(ErrorCode::kBatch, "flip batch chunk count does not match parameters");
  if (std::abs(1 - 2 * sc.q_flip) < 1e-12) throw Error(ErrorCode::kSingularAggregator, "flip probability 1/2 carries no signal");
  if (n == 0) throw Error(ErrorCode::kEmptyDataset, "no users to aggregate");
  ValidateBatch(batch);
  Eigen::VectorXd ones = Eigen::VectorXd::Zero(sc.c);
  const std::size_t count = batch.size();
  for (std::size_t i = 0; i < count; ++i) {
    for (int j = 0; j < sc.c; ++j) {
      if (batch.bit(i, j)) ones[j] += 1;
    }
  }
  return (ones.array() - sc.q_flip * static_cast<double>(count)) / ((1 - 2 * sc.q_flip) * static_cast<double>(n));
}

Eigen::VectorXd PureAggregate(const PureReports& batch, const ScfoParams& sc, std::size_t n) {
  if (batch.c != sc.c) throw Error(ErrorCode::kBatch, "pure batch chunk count does not match parameters");
  if (n == 0) throw Error(ErrorCode::kEmptyDataset, "no users to aggregate");
  ValidateBatch(batch);
  Eigen::VectorXd counts = Eigen::VectorXd::Zero(sc.c);
  for (auto v : batch.values) counts[v - 1] += 1;
  const double nn = static_cast<double>(n);
  return (counts.array() - nn * sc.s / sc.c) / nn;
}

Histogram ScfoToHistogram(const Eigen::VectorXd& raw, int m) {
  const int c = static_cast<int>(raw.size());
  if (c < 1 || m % c != 0) throw Error(ErrorCode::kInvalidArgument, "m must be divisible by the chunk count");
  const Histogram chunks = NormSub(raw);
  const int width = m / c;
  Eigen::VectorXd out(m);
  for (int j = 0; j < c; ++j) out.segment(j * width, width).setConstant(chunks[j] / width);
  return Histogram::FromWeights(out);
}

}  // namespace shuffledist
