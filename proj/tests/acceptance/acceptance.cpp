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

// Acceptance checks. Prints one [PASS]/[FAIL] line per criterion and exits
// nonzero when any selected criterion fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <map>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "shuffledist/aggregation.hpp"
#include "shuffledist/attacks.hpp"
#include "shuffledist/experiment.hpp"
#include "shuffledist/histogram.hpp"
#include "shuffledist/metrics.hpp"
#include "shuffledist/mi_optimizer.hpp"
#include "shuffledist/privacy.hpp"
#include "shuffledist/randomizers.hpp"

namespace sd = shuffledist;

namespace {

struct Outcome {
  bool pass = true;
  std::ostringstream detail;

  void Check(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      detail << "FAILED " << what << "; ";
    }
  }
};

double Seconds(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

sd::Histogram RandomHistogram(int m, sd::RngStream& rng) {
  Eigen::VectorXd w(m);
  for (int i = 0; i < m; ++i) w[i] = -std::log(1 - rng.Uniform());
  return sd::Histogram::FromWeights(w);
}

Eigen::VectorXd SampleCounts(const sd::Histogram& f, const sd::TransitionMatrix& M, int n, sd::RngStream& rng) {
  const Eigen::VectorXd mix = M.entries() * f.freqs();
  std::discrete_distribution<int> pick(mix.data(), mix.data() + mix.size());
  Eigen::VectorXd counts = Eigen::VectorXd::Zero(M.m_hat());
  for (int i = 0; i < n; ++i) counts[pick(rng)] += 1;
  return counts;
}

bool IsDistribution(const sd::Histogram& h) {
  return (h.freqs().array() >= 0).all() && std::abs(h.freqs().sum() - 1) <= 1e-9;
}

void ParameterReproduction(Outcome& out) {
  const sd::PrivacyBudget budget{0.01, 1e-5, 100000};
  auto start = std::chrono::steady_clock::now();
  const sd::PerturbParams asp = sd::OptimizeParams(budget);
  const double t_asp = Seconds(start);
  start = std::chrono::steady_clock::now();
  const double eps_l = sd::SswCalibrate(budget);
  const sd::PerturbParams ssw = sd::SwParams(eps_l);
  const double t_ssw = Seconds(start);
  out.detail << "ASP b=" << asp.b << " p=" << asp.p << " (" << t_asp << "s); SSW eps_l=" << eps_l << " b=" << ssw.b
             << " p=" << ssw.p << " (" << t_ssw << "s); ";
  out.Check(asp.b >= 0.19 && asp.b <= 0.24, "ASP b in [0.19, 0.24]");
  out.Check(asp.p >= 1.05 && asp.p <= 1.21, "ASP p in [1.05, 1.21]");
  out.Check(ssw.b >= 0.31 && ssw.b <= 0.35, "SSW b in [0.31, 0.35]");
  out.Check(ssw.p >= 0.80 && ssw.p <= 0.86, "SSW p in [0.80, 0.86]");
  out.Check(t_asp < 120 && t_ssw < 120, "runtime < 2 min each");
}

void MiBoundTightness(Outcome& out) {
  const auto start = std::chrono::steady_clock::now();
  double gap = 0;
  const double grid[] = {0.01, 0.05, 0.1, 0.5, 1.0};
  sd::RngStream rng(2, 0);
  for (double eps : grid) {
    const sd::OptimizerResult r = sd::OptimizeAsp({eps, 1e-5, 100000});
    const double prior = sd::PriorUpperBound(r.params.b, r.params.k);
    gap += (prior - r.bound.i_u) / prior;
    const sd::MiEstimate mc = sd::MiMonteCarlo(r.params, nullptr, 1000000, rng);
    out.detail << "eps=" << eps << " i_u=" << r.bound.i_u << " prior=" << prior << " mc=" << mc.value << "+-"
               << mc.std_error << "; ";
    out.Check(mc.value <= r.bound.i_u + 3 * mc.std_error, "i_u >= Monte-Carlo MI at eps=" + std::to_string(eps));
  }
  gap /= 5;
  out.detail << "mean relative gap=" << gap << "; ";
  out.Check(gap >= 0.30, "mean relative gap >= 0.30");
  out.Check(Seconds(start) < 600, "runtime < 10 min");
}

void NoiselessRecovery(Outcome& out) {
  const auto start = std::chrono::steady_clock::now();
  const int m = 32;
  sd::RngStream rng(3, 0);
  sd::Dataset d;
  for (int i = 0; i < 10000; ++i) d.values.push_back(rng.Uniform());
  const sd::PerturbParams pp = sd::PerturbParams::FromBandRatio(1.0 / (2 * m), 1e6);
  const sd::Histogram est = sd::EmasEstimate(sd::RandomizePiecewise(d, pp, rng), pp, m);
  const double w1 = sd::Wasserstein(est, sd::BuildHistogram(d, m));
  out.detail << "W1=" << w1 << " bound=" << 2.0 / m << "; ";
  out.Check(w1 < 2.0 / m, "W1 < 2/m");
  out.Check(Seconds(start) < 60, "runtime < 1 min");
}

void EmInvariants(Outcome& out) {
  sd::RngStream rng(4, 0);
  int violations = 0, invalid = 0;
  for (int inst = 0; inst < 100; ++inst) {
    const int m = static_cast<int>(rng.UniformInt(8, 16));
    const sd::PerturbParams pp =
        sd::PerturbParams::FromBandRatio(rng.Uniform(0.02, 0.8), std::exp(rng.Uniform(0.1, std::log(100.0))));
    const sd::TransitionMatrix M = sd::BuildTransitionMatrix(pp, m, m);
    const Eigen::VectorXd counts = SampleCounts(RandomHistogram(m, rng), M, 1000, rng);
    sd::EmState s = sd::EmInit(m);
    double prev = sd::LogLikelihood(s.f, counts, M);
    for (int t = 0; t < 100; ++t) {
      s = sd::EmStep(s, counts, M);
      if (s.log_lik < prev - 1e-10) ++violations;
      if (!IsDistribution(s.f)) ++invalid;
      prev = s.log_lik;
    }
    sd::SmootherConfig cfg;
    cfg.tau = 500;
    for (sd::Aggregator agg : {sd::Aggregator::kEm, sd::Aggregator::kEms, sd::Aggregator::kEmas}) {
      if (!IsDistribution(sd::IterateEm(counts, M, agg, cfg).f)) ++invalid;
    }
    Eigen::VectorXd raw(m);
    for (int i = 0; i < m; ++i) raw[i] = rng.Uniform(-0.3, 0.6);
    if (!IsDistribution(sd::NormSub(raw))) ++invalid;
  }
  out.detail << "likelihood decreases=" << violations << " invalid outputs=" << invalid << "; ";
  out.Check(violations == 0, "log-likelihood non-decreasing");
  out.Check(invalid == 0, "outputs nonnegative and sum to 1");
}

void SmoothingProperty(Outcome& out) {
  sd::RngStream rng(5, 0);
  int checked = 0, violations = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    sd::SmootherConfig cfg;
    cfg.radius = static_cast<int>(rng.UniformInt(1, 5));
    const int m = static_cast<int>(rng.UniformInt(2, 64));
    const double s1 = std::exp(rng.Uniform(std::log(1e-4), std::log(1e6)));
    const int t = static_cast<int>(rng.UniformInt(0, 200));
    const sd::Histogram f = RandomHistogram(m, rng);
    const sd::Histogram g = sd::AdaptiveSmoothStep(f, t, s1, cfg);
    for (int i = 0; i < m; ++i) {
      const int lo = std::max(0, i - cfg.radius), hi = std::min(m - 1, i + cfg.radius);
      if (f[i] < f.freqs().segment(lo, hi - lo + 1).maxCoeff()) continue;
      ++checked;
      if (g[i] > f[i] * (1 + 1e-12)) ++violations;
    }
  }
  out.detail << "window maxima checked=" << checked << " increased=" << violations << "; ";
  out.Check(violations == 0, "window-maximal bins non-increasing");
}

void ScfoUnbiased(Outcome& out) {
  const int c = 8;
  const std::size_t n = 50000;
  const sd::PrivacyBudget budget{1, 1e-5, static_cast<std::int64_t>(n)};
  sd::RngStream data_rng(6, 0);
  const sd::Dataset d = sd::NormalizeDomain(sd::SampleSyntheticNormal(n, 0, 10, data_rng), {-40, 40, 256});
  const sd::Histogram truth = sd::BuildHistogram(d, c);
  const sd::ScfoParams flip = sd::FlipParams(budget, c), pure = sd::PureParams(budget, c);
  const int trials = 200;
  Eigen::MatrixXd fe(trials, c), pe(trials, c);
  for (int t = 0; t < trials; ++t) {
    const sd::RngStream rng(7, t);
    fe.row(t) = sd::FlipAggregate(sd::RandomizeFlip(d, flip, rng.Child(0)), flip, n).transpose();
    pe.row(t) = sd::PureAggregate(sd::RandomizePure(d, pure, rng.Child(1)), pure, n).transpose();
  }
  const std::pair<const char*, const Eigen::MatrixXd*> sets[] = {{"Flip", &fe}, {"Pure", &pe}};
  for (const auto& [name, est] : sets) {
    double worst = 0;
    for (int j = 0; j < c; ++j) {
      const Eigen::VectorXd col = est->col(j);
      const double mean = col.mean();
      const double se = std::sqrt((col.array() - mean).square().sum() / (trials - 1) / trials);
      worst = std::max(worst, std::abs(mean - truth[j]) / se);
    }
    out.detail << name << " worst |bias|/se=" << worst << "; ";
    out.Check(worst <= 3, std::string(name) + " within 3 standard errors");
  }
}

void MassAndChannel(Outcome& out) {
  sd::RngStream rng(8, 0);
  double worst_mass = 0;
  for (int i = 0; i < 10000; ++i) {
    const double b = rng.Uniform(1e-6, 1.0);
    const double k = std::exp(rng.Uniform(1e-9, std::log(1e6)));
    const sd::PerturbParams pp = sd::PerturbParams::FromBandRatio(b, k);
    worst_mass = std::max(worst_mass, std::abs(2 * b * pp.p + pp.q - 1));
  }
  out.detail << "max |2bp+q-1|=" << worst_mass << "; ";
  out.Check(worst_mass <= 1e-12, "2bp + q = 1");
  double worst_col = 0;
  for (int trial = 0; trial < 200; ++trial) {
    const int m = static_cast<int>(rng.UniformInt(2, 64));
    const sd::TransitionMatrix M = sd::BuildTransitionMatrix(
        sd::PerturbParams::FromBandRatio(std::exp(rng.Uniform(std::log(1e-3), std::log(1.5))),
                                         std::exp(rng.Uniform(0, std::log(1e6)))),
        m, m);
    for (int i = 0; i < m; ++i) worst_col = std::max(worst_col, std::abs(M.entries().col(i).sum() - 1));
  }
  out.detail << "max column error=" << worst_col << "; ";
  out.Check(worst_col <= 1e-9, "columns stochastic");
  const sd::PerturbParams pp = sd::PerturbParams::FromBandRatio(0.25, 10);
  const sd::TransitionMatrix M = sd::BuildTransitionMatrix(pp, 4, 4);
  double worst_z = 0;
  for (int i = 0; i < 4; ++i) {
    sd::PiecewiseReports batch{pp.b, {}};
    for (int s = 0; s < 1000000; ++s) batch.values.push_back(sd::PiecewisePerturb((i + 0.5) / 4, pp, rng));
    const Eigen::VectorXd counts = sd::OutputCounts(batch, pp, 4);
    for (int j = 0; j < 4; ++j) {
      const double se = std::sqrt(M(j, i) * (1 - M(j, i)) / 1e6);
      worst_z = std::max(worst_z, std::abs(counts[j] / 1e6 - M(j, i)) / se);
    }
  }
  out.detail << "4-bin Monte-Carlo worst z=" << worst_z << "; ";
  out.Check(worst_z <= 4, "4-bin channel within 4 standard errors");
}

void PrivacyBoundBehavior(Outcome& out) {
  const std::int64_t ns[] = {1000, 10000, 100000};
  bool ssw_dec = true, asp_dec = true;
  for (int i = 0; i + 1 < 3; ++i) {
    ssw_dec &= sd::SswBoundLhs(0.01, 0.8, ns[i]) > sd::SswBoundLhs(0.01, 0.8, ns[i + 1]);
    asp_dec &= sd::AspBoundLhs(0.05, 0.2, 3, ns[i]) > sd::AspBoundLhs(0.05, 0.2, 3, ns[i + 1]);
  }
  out.Check(ssw_dec, "SSW bound strictly decreasing in n");
  out.Check(asp_dec, "ASP bound strictly decreasing in n");
  const sd::PrivacyBudget budget{0.01, 1e-5, 100000};
  const double eps_l = sd::SswCalibrate(budget);
  const double at = sd::SswBoundLhs(budget.eps, eps_l, budget.n);
  const double beyond = sd::SswBoundLhs(budget.eps, eps_l + 1e-3, budget.n);
  out.detail << "SSW lhs=" << at << " beyond=" << beyond << "; ";
  out.Check(at <= budget.delta && beyond > budget.delta, "SSW calibration binding");
  const sd::OptimizerConfig cfg;
  const sd::PerturbParams asp = sd::OptimizeParams(budget, cfg);
  const double asp_at = sd::AspBoundLhs(budget.eps, asp.b, asp.k, budget.n);
  const double asp_beyond = sd::AspBoundLhs(budget.eps, asp.b, asp.k * (1 + 1e-3), budget.n);
  out.detail << "ASP lhs=" << asp_at << " beyond=" << asp_beyond << "; ";
  out.Check(asp_at <= budget.delta * (1 + cfg.constraint_tol) && asp_beyond > budget.delta, "ASP optimum binding");
}

sd::ExperimentConfig DeskConfig(sd::Protocol protocol, double eps, std::uint64_t seed) {
  sd::ExperimentConfig cfg;
  cfg.protocol = protocol;
  cfg.budget = {eps, 1e-5, 100000};
  cfg.m = 256;
  cfg.repetitions = 20;
  cfg.seed = seed;
  return cfg;
}

void UtilityOrdering(Outcome& out) {
  const auto start = std::chrono::steady_clock::now();
  const std::uint64_t seed = 9;
  const double asp = sd::RunExperiment(DeskConfig(sd::Protocol::kAsp, 0.05, seed)).summary.at("w1").mean;
  const double ssw = sd::RunExperiment(DeskConfig(sd::Protocol::kSsw, 0.05, seed)).summary.at("w1").mean;
  double best_scfo = std::numeric_limits<double>::infinity();
  std::string best_name;
  for (sd::Protocol p : {sd::Protocol::kFlip, sd::Protocol::kPure}) {
    for (int c : {16, 32, 64}) {
      sd::ExperimentConfig cfg = DeskConfig(p, 0.05, seed);
      cfg.c = c;
      const double w1 = sd::RunExperiment(cfg).summary.at("w1").mean;
      if (w1 < best_scfo) {
        best_scfo = w1;
        best_name = std::string(sd::ProtocolName(p)) + "/c=" + std::to_string(c);
      }
    }
  }
  const double asp_hi = sd::RunExperiment(DeskConfig(sd::Protocol::kAsp, 1.0, seed)).summary.at("w1").mean;
  out.detail << "eps=0.05 mean W1: ASP=" << asp << " SSW=" << ssw << " best SCFO (" << best_name << ")=" << best_scfo
             << "; ASP eps=1 W1=" << asp_hi << "; ";
  out.Check(asp <= ssw, "W1(ASP) <= W1(SSW)");
  out.Check(ssw <= best_scfo, "W1(SSW) <= W1(best SCFO)");
  out.Check(asp_hi < asp, "W1(ASP) at eps=1 < W1(ASP) at eps=0.05");
  out.Check(Seconds(start) < 45 * 60, "runtime < 45 min");
}

void RobustnessOrdering(Outcome& out) {
  const auto start = std::chrono::steady_clock::now();
  struct Setup {
    std::string name;
    sd::Protocol protocol;
    std::optional<int> c;
  };
  std::vector<Setup> setups{{"ASP", sd::Protocol::kAsp, std::nullopt}, {"SSW", sd::Protocol::kSsw, std::nullopt}};
  for (sd::Protocol p : {sd::Protocol::kFlip, sd::Protocol::kPure}) {
    for (int c : {16, 32, 64}) setups.push_back({std::string(sd::ProtocolName(p)) + "/c=" + std::to_string(c), p, c});
  }
  std::map<std::string, std::map<double, sd::RunReport>> runs;
  for (const auto& s : setups) {
    for (double beta : {0.01, 0.05, 0.10}) {
      sd::ExperimentConfig cfg = DeskConfig(s.protocol, 0.1, 10);
      cfg.c = s.c;
      cfg.attack = sd::AttackConfig{beta, {1.0}, 1};
      runs[s.name][beta] = sd::RunExperiment(cfg);
    }
  }
  double best_scfo = -1;
  std::string best_name;
  for (const auto& s : setups) {
    const double lo = runs[s.name][0.01].summary.at("riar").mean;
    const double mid = runs[s.name][0.05].summary.at("riar").mean;
    const double hi = runs[s.name][0.10].summary.at("riar").mean;
    out.detail << s.name << " RIAR(0.01/0.05/0.10)=" << lo << "/" << mid << "/" << hi << "; ";
    out.Check(hi < lo, s.name + " RIAR at beta=0.10 < beta=0.01");
    if (s.c && mid > best_scfo) {
      best_scfo = mid;
      best_name = s.name;
    }
  }
  const double asp = runs["ASP"][0.05].summary.at("riar").mean;
  out.detail << "most robust SCFO=" << best_name << "; ";
  out.Check(asp >= best_scfo, "RIAR(ASP) >= RIAR(best SCFO) at beta=0.05");
  const auto& summary = runs["ASP"][0.05].summary;
  const double r1 = summary.at("riar_range1").mean, r2 = summary.at("riar_range2").mean,
               r3 = summary.at("riar_range3").mean;
  out.detail << "ASP RIAR by range b/1,b/2,b/3=" << r1 << "," << r2 << "," << r3 << "; ";
  out.Check(r1 < r2 && r1 < r3, "range [T-b, T+b] lowest RIAR for ASP");
  out.Check(Seconds(start) < 45 * 60, "runtime < 45 min");
}

void PerformanceEnvelope(Outcome& out) {
  const sd::PrivacyBudget budget{0.05, 1e-5, 100000};
  const sd::PerturbParams pp = sd::OptimizeParams(budget);
  sd::RngStream rng(11, 0);
  const sd::Dataset d = sd::NormalizeDomain(sd::SampleSyntheticNormal(100000, 0, 10, rng), {-40, 40, 256});
  const sd::PiecewiseReports batch = sd::RandomizePiecewise(d, pp, rng);
  const auto start = std::chrono::steady_clock::now();
  const sd::EstimateResult r = sd::EstimatePiecewise(batch, pp, 256, sd::Aggregator::kEmas);
  const double secs = Seconds(start);
  out.detail << "EMAS n=1e5 m=256: " << secs << "s, " << r.iterations << " iterations; ";
  out.Check(IsDistribution(r.f), "valid estimate");
  out.Check(secs < 60, "runtime < 60 s");
}

struct Criterion {
  int id;
  const char* title;
  std::function<void(Outcome&)> run;
};

}  // namespace

int main(int argc, char** argv) {
  const std::vector<Criterion> criteria{
      {1, "parameter reproduction", ParameterReproduction},
      {2, "MI bound tightness", MiBoundTightness},
      {3, "noiseless recovery", NoiselessRecovery},
      {4, "EM invariants", EmInvariants},
      {5, "smoothing shrinks window maxima", SmoothingProperty},
      {6, "SCFO aggregators unbiased", ScfoUnbiased},
      {7, "mass conservation and channel", MassAndChannel},
      {8, "privacy bound behavior", PrivacyBoundBehavior},
      {9, "utility ordering", UtilityOrdering},
      {10, "robustness ordering", RobustnessOrdering},
      {11, "performance envelope", PerformanceEnvelope},
  };
  int only = 0;
  for (int i = 1; i < argc; ++i) {
    const std::string arg = argv[i];
    if (arg == "--criterion" && i + 1 < argc) {
      only = std::atoi(argv[++i]);
    } else {
      std::fprintf(stderr, "usage: %s [--criterion N]\n", argv[0]);
      return 2;
    }
  }
  bool all_pass = true;
  for (const auto& c : criteria) {
    if (only != 0 && c.id != only) continue;
    Outcome out;
    const auto start = std::chrono::steady_clock::now();
    try {
      c.run(out);
    } catch (const std::exception& e) {
      out.pass = false;
      out.detail << "exception: " << e.what();
    }
    std::printf("[%s] criterion %d: %s (%.1fs) %s\n", out.pass ? "PASS" : "FAIL", c.id, c.title, Seconds(start),
                out.detail.str().c_str());
    std::fflush(stdout);
    all_pass &= out.pass;
  }
  return all_pass ? 0 : 1;
}
