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

#include "shuffledist/mi_optimizer.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <boost/math/tools/minima.hpp>
#include <boost/math/tools/roots.hpp>
#include <cmath>
#include <limits>
#include <tuple>
#include <vector>

namespace shuffledist {

namespace {

double XLogX(double x) { return x > 0 ? x * std::log(x) : 0.0; }

}  // namespace

MiBound MiUpperBound(double b, double k) {
  const PerturbParams pp = PerturbParams::FromBandRatio(b, k);
  const double p = pp.p, q = pp.q;
  MiBound out;
  out.h_cond = -(2 * b * XLogX(p) + XLogX(q));
  if (k == 1) {
    // The three output segments collapse to the uniform density q.
    out.h_u = out.h_cond;
    out.i_u = 0;
    return out;
  }
  const double side = q * b + 0.5 * (p - q) * b * b;
  const double side_density = q + 0.5 * (p - q) * b;
  const double mid = 1 - (p - q) * b * b - 2 * q * b;
  if (!(mid > 0)) {
    throw Error(ErrorCode::kDegenerateGeometry, "middle output segment has no mass (b too large for k)");
  }
  out.h_u = -2 * side * std::log(side_density) - mid * std::log(mid);
  out.i_u = out.h_u - out.h_cond;
  return out;
}

double PriorUpperBound(double b, double k) {
  const PerturbParams pp = PerturbParams::FromBandRatio(b, k);
  if (k == 1) return 0;
  return std::log(1 + 2 * b) + 2 * b * XLogX(pp.p) + XLogX(pp.q);
}

MiEstimate MiMonteCarlo(const PerturbParams& params, const Histogram* input, std::size_t samples, RngStream& rng,
                        int cells) {
  params.Validate();
  if (samples < 2 || cells < 2) throw Error(ErrorCode::kInvalidArgument, "need samples >= 2 and cells >= 2");
  Eigen::MatrixXd joint = Eigen::MatrixXd::Zero(cells, cells);
  std::discrete_distribution<int> bins;
  if (input) bins = std::discrete_distribution<int>(input->freqs().data(), input->freqs().data() + input->size());
  const double out_w = params.out_width() / cells;
  for (std::size_t i = 0; i < samples; ++i) {
    double x;
    if (input) {
      const int bin = bins(rng);
      x = std::min(1.0, (bin + rng.Uniform()) / static_cast<double>(input->size()));
    } else {
      x = rng.Uniform();
    }
    const double y = PiecewisePerturb(x, params, rng);
    const int xi = std::min(cells - 1, static_cast<int>(x * cells));
    const int yi = std::clamp(static_cast<int>((y + params.b) / out_w), 0, cells - 1);
    joint(xi, yi) += 1;
  }
  const double n = static_cast<double>(samples);
  joint /= n;
  const Eigen::VectorXd px = joint.rowwise().sum();
  const Eigen::RowVectorXd py = joint.colwise().sum();

  double mi = 0, second = 0;
  int kxy = 0;
  for (int a = 0; a < cells; ++a) {
    for (int c = 0; c < cells; ++c) {
      const double pxy = joint(a, c);
      if (pxy <= 0) continue;
      ++kxy;
      const double g = std::log(pxy / (px(a) * py(c)));
      mi += pxy * g;
      second += pxy * g * g;
    }
  }
  const int kx = static_cast<int>((px.array() > 0).count());
  const int ky = static_cast<int>((py.array() > 0).count());
  MiEstimate est;
  est.raw = mi;
  est.value = std::max(0.0, mi + ((kx - 1) + (ky - 1) - (kxy - 1)) / (2 * n));
  est.std_error = std::sqrt(std::max(0.0, second - mi * mi) / n);
  return est;
}

void OptimizerConfig::Validate() const {
  if (!(b_lo > 0 && b_lo < b_hi)) throw Error(ErrorCode::kInvalidArgument, "optimizer b range must be positive and ordered");
  if (!(k_lo >= 1 && k_lo < k_hi)) throw Error(ErrorCode::kInvalidArgument, "optimizer k range must satisfy 1 <= k_lo < k_hi");
  if (grid < 8) throw Error(ErrorCode::kInvalidArgument, "optimizer grid must be >= 8");
  if (refine_iters < 1) throw Error(ErrorCode::kInvalidArgument, "refine_iters must be >= 1");
  if (!(constraint_tol >= 0)) throw Error(ErrorCode::kInvalidArgument, "constraint_tol must be >= 0");
}

namespace {

class AspProblem {
 public:
  AspProblem(const PrivacyBudget& budget, const OptimizerConfig& cfg)
      : budget_(budget), cfg_(cfg), log_delta_(std::log(budget.delta)) {}

  bool Feasible(double b, double k) const {
    return PiecewiseBoundLogLhs(budget_.eps, PerturbParams::FromBandRatio(b, k), budget_.n, cfg_.convention) <=
           log_delta_;
  }

  // -inf where the geometry is degenerate.
  static double Objective(double b, double k) {
    try {
      return MiUpperBound(b, k).i_u;
    } catch (const Error&) {
      return -std::numeric_limits<double>::infinity();
    }
  }

  // Largest feasible k for this b on the configured range, or nullopt when
  // even k_lo is infeasible. Found on a log-k scan then refined by bisection.
  std::optional<double> KMax(double b) const {
    const double lk0 = std::log(cfg_.k_lo), lk1 = std::log(cfg_.k_hi);
    if (!Feasible(b, cfg_.k_lo)) return std::nullopt;
    if (Feasible(b, cfg_.k_hi)) return cfg_.k_hi;
    constexpr int kScan = 64;
    double lo = lk0, hi = lk1;
    for (int i = 1; i <= kScan; ++i) {
      const double lk = lk0 + (lk1 - lk0) * i / kScan;
      if (!Feasible(b, std::exp(lk))) {
        hi = lk;
        break;
      }
      lo = lk;
    }
    auto f = [&](double lk) { return Feasible(b, std::exp(lk)) ? -1.0 : 1.0; };
    auto tol = [](double x, double y) { return std::abs(y - x) < 1e-12; };
    return std::exp(boost::math::tools::bisect(f, lo, hi, tol).first);
  }

  // Best objective over feasible k for this b, with the maximizing k.
  std::pair<double, double> Profile(double b) const {
    const auto kmax = KMax(b);
    if (!kmax) return {-std::numeric_limits<double>::infinity(), cfg_.k_lo};
    const double lk0 = std::log(cfg_.k_lo), lk1 = std::log(*kmax);
    if (lk1 <= lk0) return {Objective(b, cfg_.k_lo), cfg_.k_lo};
    auto neg = [b](double lk) { return -Objective(b, std::exp(lk)); };
    std::uintmax_t iters = cfg_.refine_iters;
    const auto [lk, v] = boost::math::tools::brent_find_minima(neg, lk0, lk1, 40, iters);
    // Brent never probes the end points; the constrained optimum usually
    // sits on kmax.
    const double at_edge = Objective(b, *kmax);
    if (at_edge >= -v) return {at_edge, *kmax};
    return {-v, std::exp(lk)};
  }

 private:
  PrivacyBudget budget_;
  OptimizerConfig cfg_;
  double log_delta_;
};

}  // namespace

OptimizerResult OptimizeAsp(const PrivacyBudget& budget, const OptimizerConfig& cfg) {
  budget.Validate();
  cfg.Validate();
  const AspProblem problem(budget, cfg);

  const int g = cfg.grid;
  std::vector<double> bs(g), ks(g);
  for (int i = 0; i < g; ++i) {
    const double t = static_cast<double>(i) / (g - 1);
    bs[i] = cfg.b_lo * std::pow(cfg.b_hi / cfg.b_lo, t);
    ks[i] = cfg.k_lo * std::pow(cfg.k_hi / cfg.k_lo, t);
  }
  double best = -std::numeric_limits<double>::infinity();
  int best_b = -1, best_k = -1;
  for (int i = 0; i < g; ++i) {
    for (int j = 0; j < g; ++j) {
      if (!problem.Feasible(bs[i], ks[j])) continue;
      const double v = AspProblem::Objective(bs[i], ks[j]);
      if (v > best) {
        best = v;
        best_b = i;
        best_k = j;
      }
    }
  }
  if (best_b < 0) throw Error(ErrorCode::kInfeasibleBudget, "no feasible (b, k) on the search grid");

  OptimizerResult result;
  result.grid_params = PerturbParams::FromBandRatio(bs[best_b], ks[best_k]);
  result.grid_i_u = best;

  // Profile scan over the b grid: each column is solved exactly in k.
  int seed = 0;
  double seed_value = -std::numeric_limits<double>::infinity();
  for (int i = 0; i < g; ++i) {
    const double v = problem.Profile(bs[i]).first;
    if (v > seed_value) {
      seed_value = v;
      seed = i;
    }
  }
  const double lb0 = std::log(bs[std::max(seed - 1, 0)]);
  const double lb1 = std::log(bs[std::min(seed + 1, g - 1)]);
  auto neg = [&](double lb) { return -problem.Profile(std::exp(lb)).first; };
  std::uintmax_t iters = cfg.refine_iters;
  double b = std::exp(boost::math::tools::brent_find_minima(neg, lb0, lb1, 40, iters).first);
  auto [value, k] = problem.Profile(b);
  if (seed_value > value) {
    b = bs[seed];
    std::tie(value, k) = problem.Profile(b);
  }

  if (value >= best && problem.Feasible(b, k)) {
    result.params = PerturbParams::FromBandRatio(b, k);
  } else {
    result.params = result.grid_params;
  }
  result.bound = MiUpperBound(result.params.b, result.params.k);
  result.lhs = std::exp(PiecewiseBoundLogLhs(budget.eps, result.params, budget.n, cfg.convention));
  return result;
}

}  // namespace shuffledist
