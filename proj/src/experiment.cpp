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

#include "shuffledist/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <cassert>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <exception>
#include <fstream>
#include <numeric>
#include <set>
#include <sstream>
#include <thread>

namespace shuffledist {

using nlohmann::json;

namespace {

constexpr std::uint64_t kDatasetStream = 0x6461746173657431ULL;
constexpr std::uint64_t kQueryStream = 0x7175657279737431ULL;

Error ConfigError(const std::string& path, const std::string& what) {
  return Error(ErrorCode::kConfig, path + ": " + what);
}

// Typed access to one JSON object that remembers which keys were read, so
// leftovers can be reported as unknown fields.
class Fields {
 public:
  Fields(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw ConfigError(path_, "expected an object");
  }

  std::string Path(const std::string& key) const { return path_ + "." + key; }

  const json* Find(const std::string& key) {
    seen_.insert(key);
    const auto it = j_.find(key);
    return it == j_.end() ? nullptr : &*it;
  }

  std::optional<double> Real(const std::string& key) {
    const json* v = Find(key);
    if (!v) return std::nullopt;
    if (!v->is_number()) throw ConfigError(Path(key), "expected a number");
    return v->get<double>();
  }

  std::optional<std::int64_t> Integer(const std::string& key) {
    const json* v = Find(key);
    if (!v) return std::nullopt;
    if (v->is_number_integer()) return v->get<std::int64_t>();
    if (v->is_number_float()) {
      const double d = v->get<double>();
      if (std::floor(d) == d && std::abs(d) < 9e15) return static_cast<std::int64_t>(d);
    }
    throw ConfigError(Path(key), "expected an integer");
  }

  std::optional<std::string> String(const std::string& key) {
    const json* v = Find(key);
    if (!v) return std::nullopt;
    if (!v->is_string()) throw ConfigError(Path(key), "expected a string");
    return v->get<std::string>();
  }

  std::optional<std::vector<double>> Reals(const std::string& key) {
    const json* v = Find(key);
    if (!v) return std::nullopt;
    if (!v->is_array()) throw ConfigError(Path(key), "expected an array of numbers");
    std::vector<double> out;
    for (std::size_t i = 0; i < v->size(); ++i) {
      if (!(*v)[i].is_number()) throw ConfigError(Path(key) + "[" + std::to_string(i) + "]", "expected a number");
      out.push_back((*v)[i].get<double>());
    }
    return out;
  }

  void Finish() const {
    for (const auto& [key, _] : j_.items()) {
      if (!seen_.count(key)) throw ConfigError(Path(key), "unknown field");
    }
  }

 private:
  const json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

template <typename F>
auto Checked(const std::string& path, F&& f) {
  try {
    return f();
  } catch (const Error& e) {
    throw ConfigError(path, e.what());
  }
}

template <typename F>
auto Stage(const char* name, F&& f) {
  try {
    return f();
  } catch (const Error& e) {
    throw Error(e.code(), std::string(name) + " stage: " + e.what());
  }
}

DatasetConfig ParseDataset(const json& j, const std::string& path) {
  DatasetConfig d;
  if (j.is_string()) {
    if (j.get<std::string>() != "normal") throw ConfigError(path, "dataset shorthand must be \"normal\"");
    return d;
  }
  Fields f(j, path);
  const std::string kind = f.String("kind").value_or("normal");
  if (kind == "normal") {
    d.kind = DatasetConfig::Kind::kNormal;
    d.mean = f.Real("mean").value_or(d.mean);
    d.stddev = f.Real("std").value_or(d.stddev);
    d.lo = f.Real("lo").value_or(d.lo);
    d.hi = f.Real("hi").value_or(d.hi);
    if (!(d.stddev > 0)) throw ConfigError(f.Path("std"), "must be > 0");
  } else if (kind == "csv") {
    d.kind = DatasetConfig::Kind::kCsv;
    d.path = f.String("path").value_or("");
    if (d.path.empty()) throw ConfigError(f.Path("path"), "required for csv datasets");
    const json* col = f.Find("column");
    if (!col || col->is_null()) {
      d.column = std::size_t{0};
    } else if (col->is_string()) {
      d.column = col->get<std::string>();
    } else if (col->is_number_unsigned()) {
      d.column = col->get<std::size_t>();
    } else {
      throw ConfigError(f.Path("column"), "expected a header name or a zero-based index");
    }
    const auto lo = f.Real("lo"), hi = f.Real("hi");
    if (!lo || !hi) throw ConfigError(path, "csv datasets need lo and hi");
    d.lo = *lo;
    d.hi = *hi;
  } else {
    throw ConfigError(f.Path("kind"), "expected \"normal\" or \"csv\"");
  }
  if (!(d.lo < d.hi)) throw ConfigError(path, "need lo < hi");
  f.Finish();
  return d;
}

SmootherConfig ParseSmoother(const json& j, const std::string& path) {
  Fields f(j, path);
  SmootherConfig s;
  if (auto v = f.Integer("R")) s.radius = static_cast<int>(*v);
  if (auto v = f.Real("sigma_min")) s.sigma_min = *v;
  if (auto v = f.Real("sigma_max")) s.sigma_max = *v;
  if (auto v = f.Integer("period")) s.period = static_cast<int>(*v);
  if (auto v = f.Integer("tau")) s.tau = static_cast<int>(*v);
  if (auto v = f.String("sigma1")) {
    if (*v == "literal") {
      s.sigma1_mode = Sigma1Mode::kLiteral;
    } else if (*v == "per-user") {
      s.sigma1_mode = Sigma1Mode::kPerUser;
    } else {
      throw ConfigError(f.Path("sigma1"), "expected \"literal\" or \"per-user\"");
    }
  }
  f.Finish();
  Checked(path, [&] { s.Validate(); return 0; });
  return s;
}

OptimizerConfig ParseOptimizer(const json& j, const std::string& path) {
  Fields f(j, path);
  OptimizerConfig o;
  if (auto v = f.Real("b_min")) o.b_lo = *v;
  if (auto v = f.Real("b_max")) o.b_hi = *v;
  if (auto v = f.Real("k_min")) o.k_lo = *v;
  if (auto v = f.Real("k_max")) o.k_hi = *v;
  if (auto v = f.Integer("grid")) o.grid = static_cast<int>(*v);
  if (auto v = f.Integer("refine_iters")) o.refine_iters = static_cast<int>(*v);
  if (auto v = f.Real("constraint_tol")) o.constraint_tol = *v;
  f.Finish();
  Checked(path, [&] { o.Validate(); return 0; });
  return o;
}

AttackConfig ParseAttack(const json& j, const std::string& path) {
  Fields f(j, path);
  AttackConfig a;
  if (auto v = f.Real("beta")) a.beta = *v;
  if (auto v = f.Reals("targets")) a.targets = *v;
  if (auto v = f.Integer("range_divisor")) a.range_divisor = static_cast<int>(*v);
  f.Finish();
  for (std::size_t i = 0; i < a.targets.size(); ++i) {
    if (!(a.targets[i] >= 0 && a.targets[i] <= 1)) {
      throw ConfigError(f.Path("targets") + "[" + std::to_string(i) + "]", "target outside [0, 1]");
    }
  }
  Checked(path, [&] { a.Validate(); return 0; });
  return a;
}

std::pair<MetricSettings, bool> ParseMetrics(const json& j, const std::string& path) {
  Fields f(j, path);
  MetricSettings m;
  bool domain = false;
  if (auto v = f.Reals("alphas")) m.alphas = *v;
  if (auto v = f.Reals("quantiles")) m.quantiles = *v;
  if (auto v = f.Integer("range_queries")) m.range_queries = static_cast<int>(*v);
  if (auto v = f.String("w1_units")) {
    if (*v == "domain") {
      domain = true;
    } else if (*v != "cdf-sum") {
      throw ConfigError(f.Path("w1_units"), "expected \"cdf-sum\" or \"domain\"");
    }
  }
  f.Finish();
  Checked(path, [&] { m.Validate(); return 0; });
  return {m, domain};
}

SweepParam ParseSweepParam(const std::string& s, const std::string& path) {
  if (s == "eps") return SweepParam::kEps;
  if (s == "beta") return SweepParam::kBeta;
  if (s == "c") return SweepParam::kC;
  throw ConfigError(path, "expected \"eps\", \"beta\" or \"c\"");
}

SweepConfig ParseSweep(const json& j, const std::string& path) {
  Fields f(j, path);
  SweepConfig s;
  const auto param = f.String("param");
  if (!param) throw ConfigError(f.Path("param"), "required");
  s.param = ParseSweepParam(*param, f.Path("param"));
  const auto values = f.Reals("values");
  if (!values || values->empty()) throw ConfigError(f.Path("values"), "need at least one value");
  s.values = *values;
  f.Finish();
  return s;
}

bool SupportedChunks(int c) { return c == 16 || c == 32 || c == 64; }

}  // namespace

Aggregator ExperimentConfig::resolved_aggregator() const {
  if (aggregator) return *aggregator;
  return protocol == Protocol::kAsp ? Aggregator::kEmas : Aggregator::kEms;
}

void ExperimentConfig::Validate() const {
  if (!(budget.eps > 0) || !std::isfinite(budget.eps)) throw ConfigError("$.eps", "must be > 0");
  if (!(budget.delta > 0 && budget.delta < 1)) throw ConfigError("$.delta", "must lie in (0, 1)");
  if (dataset.kind == DatasetConfig::Kind::kNormal && budget.n < 2) throw ConfigError("$.n", "must be >= 2");
  if (m < 2) throw ConfigError("$.m", "must be >= 2");
  if (repetitions < 1) throw ConfigError("$.repetitions", "must be >= 1");
  const bool scfo = !IsPiecewise(protocol);
  if (scfo && !c) throw ConfigError("$.c", "required for " + std::string(ProtocolName(protocol)));
  if (c) {
    if (!SupportedChunks(*c)) throw ConfigError("$.c", "must be one of 16, 32, 64");
    if (m % *c != 0) throw ConfigError("$.c", "must divide m = " + std::to_string(m));
  }
  if (aggregator && scfo) throw ConfigError("$.aggregator", "only applies to piecewise protocols");
  Checked("$.smoother", [&] { smoother.Validate(); return 0; });
  Checked("$.optimizer", [&] { optimizer.Validate(); return 0; });
  Checked("$.metrics", [&] { metrics.Validate(); return 0; });
  if (attack) Checked("$.attack", [&] { attack->Validate(); return 0; });
  if (sweep) {
    if (sweep->values.empty()) throw ConfigError("$.sweep.values", "need at least one value");
    for (std::size_t i = 0; i < sweep->values.size(); ++i) {
      const std::string path = "$.sweep.values[" + std::to_string(i) + "]";
      const double v = sweep->values[i];
      switch (sweep->param) {
        case SweepParam::kEps:
          if (!(v > 0)) throw ConfigError(path, "eps must be > 0");
          break;
        case SweepParam::kBeta:
          if (!attack) throw ConfigError("$.sweep.param", "a beta sweep needs an attack section");
          if (!(v >= 0 && v <= 1)) throw ConfigError(path, "beta must lie in [0, 1]");
          break;
        case SweepParam::kC:
          if (!scfo) throw ConfigError("$.sweep.param", "a c sweep needs Flip or Pure");
          if (v != std::floor(v) || !SupportedChunks(static_cast<int>(v)) || m % static_cast<int>(v) != 0) {
            throw ConfigError(path, "c must be one of 16, 32, 64 and divide m");
          }
          break;
      }
    }
  }
}

ExperimentConfig ParseConfig(const json& j) {
  Fields f(j, "$");
  ExperimentConfig cfg;
  const auto protocol = f.String("protocol");
  if (!protocol) throw ConfigError("$.protocol", "required");
  cfg.protocol = Checked("$.protocol", [&] { return ParseProtocol(*protocol); });
  const auto eps = f.Real("eps");
  if (!eps) throw ConfigError("$.eps", "required");
  cfg.budget.eps = *eps;
  cfg.budget.delta = f.Real("delta").value_or(1e-5);
  if (const json* d = f.Find("dataset")) cfg.dataset = ParseDataset(*d, "$.dataset");
  const bool csv = cfg.dataset.kind == DatasetConfig::Kind::kCsv;
  if (auto n = f.Integer("n")) {
    cfg.budget.n = *n;
  } else if (!csv) {
    throw ConfigError("$.n", "required for synthetic datasets");
  } else {
    cfg.budget.n = 0;
  }
  cfg.m = static_cast<int>(f.Integer("m").value_or(csv ? 512 : 256));
  if (auto c = f.Integer("c")) cfg.c = static_cast<int>(*c);
  if (auto a = f.String("aggregator")) cfg.aggregator = Checked("$.aggregator", [&] { return ParseAggregator(*a); });
  if (auto b = f.String("bound")) cfg.bound = Checked("$.bound", [&] { return ParseBoundConvention(*b); });
  cfg.optimizer.convention = cfg.bound;
  if (const json* s = f.Find("smoother")) cfg.smoother = ParseSmoother(*s, "$.smoother");
  if (const json* o = f.Find("optimizer")) {
    cfg.optimizer = ParseOptimizer(*o, "$.optimizer");
    cfg.optimizer.convention = cfg.bound;
  }
  if (const json* a = f.Find("attack")) cfg.attack = ParseAttack(*a, "$.attack");
  cfg.repetitions = static_cast<int>(f.Integer("repetitions").value_or(20));
  if (auto s = f.Integer("seed")) {
    if (*s < 0) throw ConfigError("$.seed", "must be >= 0");
    cfg.seed = static_cast<std::uint64_t>(*s);
  }
  if (const json* m = f.Find("metrics")) std::tie(cfg.metrics, cfg.w1_domain_units) = ParseMetrics(*m, "$.metrics");
  if (const json* s = f.Find("sweep")) cfg.sweep = ParseSweep(*s, "$.sweep");
  f.Finish();
  if (csv && cfg.budget.n == 0) {
    // n comes from the file; validated once the data is loaded.
    ExperimentConfig probe = cfg;
    probe.budget.n = 2;
    probe.Validate();
  } else {
    cfg.Validate();
  }
  return cfg;
}

ExperimentConfig ParseConfigFile(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kConfig, "cannot open config " + path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::kConfig, path.string() + ": " + e.what());
  }
  ExperimentConfig cfg = ParseConfig(j);
  // CSV paths are relative to the config file.
  if (cfg.dataset.kind == DatasetConfig::Kind::kCsv && std::filesystem::path(cfg.dataset.path).is_relative()) {
    cfg.dataset.path = (path.parent_path() / cfg.dataset.path).lexically_normal().string();
  }
  return cfg;
}

Dataset MaterializeDataset(const ExperimentConfig& cfg) {
  const DomainSpec spec{cfg.dataset.lo, cfg.dataset.hi, cfg.m};
  if (cfg.dataset.kind == DatasetConfig::Kind::kCsv) {
    Dataset d = LoadDatasetCsv(cfg.dataset.path, cfg.dataset.column, spec);
    if (cfg.budget.n != 0 && static_cast<std::size_t>(cfg.budget.n) != d.n()) {
      throw ConfigError("$.n", "does not match the " + std::to_string(d.n()) + " rows of " + cfg.dataset.path);
    }
    return d;
  }
  RngStream rng(cfg.seed, kDatasetStream);
  const auto raw = SampleSyntheticNormal(static_cast<std::size_t>(cfg.budget.n), cfg.dataset.mean, cfg.dataset.stddev, rng);
  return NormalizeDomain(raw, spec);
}

ResolvedParams ResolveParams(const ExperimentConfig& cfg) {
  ResolvedParams r;
  r.protocol = cfg.protocol;
  switch (cfg.protocol) {
    case Protocol::kAsp: {
      OptimizerConfig o = cfg.optimizer;
      o.convention = cfg.bound;
      r.piecewise = OptimizeAsp(cfg.budget, o).params;
      break;
    }
    case Protocol::kSsw:
      r.eps_l = SswCalibrate(cfg.budget, cfg.bound);
      r.piecewise = SwParams(*r.eps_l);
      break;
    case Protocol::kSwLdp:
      r.eps_l = cfg.budget.eps;
      r.piecewise = SwParams(cfg.budget.eps);
      break;
    case Protocol::kFlip:
      r.scfo = FlipParams(cfg.budget, *cfg.c);
      break;
    case Protocol::kPure:
      r.scfo = PureParams(cfg.budget, *cfg.c);
      break;
  }
  if (IsPiecewise(cfg.protocol)) {
    r.aggregator = cfg.resolved_aggregator();
    r.messages_per_user = 1;
  } else {
    r.aggregator = Aggregator::kEm;
    r.messages_per_user = r.scfo.messages_per_user();
  }
  return r;
}

ReportBatch Randomize(const Dataset& data, const ResolvedParams& params, const RngStream& rng) {
  switch (params.protocol) {
    case Protocol::kFlip: return RandomizeFlip(data, params.scfo, rng);
    case Protocol::kPure: return RandomizePure(data, params.scfo, rng);
    default: return RandomizePiecewise(data, params.piecewise, rng);
  }
}

EstimateOutcome EstimateHistogram(const ReportBatch& batch, const ResolvedParams& params, int m, std::size_t n,
                                  const SmootherConfig& smoother) {
  if (const auto* pw = std::get_if<PiecewiseReports>(&batch)) {
    if (!IsPiecewise(params.protocol)) throw Error(ErrorCode::kBatch, "piecewise batch for a categorical protocol");
    const EstimateResult r = EstimatePiecewise(*pw, params.piecewise, m, params.aggregator, smoother);
    return {r.f, r.iterations};
  }
  if (const auto* fl = std::get_if<FlipReports>(&batch)) {
    if (params.protocol != Protocol::kFlip) throw Error(ErrorCode::kBatch, "flip batch for another protocol");
    return {ScfoToHistogram(FlipAggregate(*fl, params.scfo, n), m), 0};
  }
  const auto& pu = std::get<PureReports>(batch);
  if (params.protocol != Protocol::kPure) throw Error(ErrorCode::kBatch, "pure batch for another protocol");
  return {ScfoToHistogram(PureAggregate(pu, params.scfo, n), m), 0};
}

namespace {

[[maybe_unused]] std::uint64_t Checksum(const std::vector<double>& v) {
  std::uint64_t h = 1469598103934665603ULL;
  for (double x : v) {
    std::uint64_t bits;
    std::memcpy(&bits, &x, sizeof bits);
    h = (h ^ bits) * 1099511628211ULL;
  }
  return h;
}

ReportBatch Concat(ReportBatch honest, const ReportBatch& fake) {
  std::visit(
      [&fake](auto& h) {
        using T = std::decay_t<decltype(h)>;
        const auto& f = std::get<T>(fake);
        if constexpr (std::is_same_v<T, FlipReports>) {
          h.Append(f);
        } else {
          h.values.insert(h.values.end(), f.values.begin(), f.values.end());
        }
      },
      honest);
  return honest;
}

struct Context {
  const ExperimentConfig& cfg;
  const Dataset& data;
  const ResolvedParams& params;
  const Histogram& truth;
  std::optional<Histogram> ideal;
  RngStream query;
};

MetricReport Metrics(const Context& ctx, const Histogram& est) {
  MetricReport r = EvaluateMetrics(ctx.truth, est, ctx.cfg.metrics, ctx.query, ctx.params.messages_per_user);
  if (ctx.cfg.w1_domain_units) r.w1 /= ctx.cfg.m;
  return r;
}

RepetitionResult RunRepetition(const Context& ctx, int index) {
  const ExperimentConfig& cfg = ctx.cfg;
  const RngStream rs(cfg.seed, static_cast<std::uint64_t>(index));
  const std::size_t n = ctx.data.n();
  RepetitionResult out;
  out.index = index;
#ifndef NDEBUG
  const std::uint64_t before = Checksum(ctx.data.values);
#endif

  if (!cfg.attack) {
    const ReportBatch batch = Randomize(ctx.data, ctx.params, rs.Child(0));
    RngStream shuffle_rng = rs.Child(3);
    const EstimateOutcome est =
        EstimateHistogram(Shuffle(batch, shuffle_rng), ctx.params, cfg.m, n, cfg.smoother);
    out.metrics = Metrics(ctx, est.f);
    out.iterations = est.iterations;
    assert(Checksum(ctx.data.values) == before);
    return out;
  }

  const AttackConfig& attack = *cfg.attack;
  const std::size_t n_f = std::min(n, FakeUserCount(attack.beta, n));
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  RngStream pick = rs.Child(1);
  for (std::size_t i = 0; i < n_f; ++i) {
    std::swap(order[i], order[i + pick.UniformInt(0, n - 1 - i)]);
  }
  std::vector<char> compromised(n, 0);
  for (std::size_t i = 0; i < n_f; ++i) compromised[order[i]] = 1;
  Dataset honest;
  honest.values.reserve(n - n_f);
  for (std::size_t i = 0; i < n; ++i) {
    if (!compromised[i]) honest.values.push_back(ctx.data.values[i]);
  }
  const ReportBatch honest_batch = Randomize(honest, ctx.params, rs.Child(0));

  auto evaluate = [&](const ReportBatch& fake, int divisor, std::uint64_t stream) {
    RngStream shuffle_rng = rs.Child(3).Child(stream);
    const ReportBatch mixed = Shuffle(Concat(honest_batch, fake), shuffle_rng);
    const EstimateOutcome est = EstimateHistogram(mixed, ctx.params, cfg.m, n, cfg.smoother);
    out.riar.push_back({divisor, Riar(ctx.truth, est.f, *ctx.ideal)});
    if (divisor == attack.range_divisor || !IsPiecewise(ctx.params.protocol)) {
      out.metrics = Metrics(ctx, est.f);
      out.iterations = est.iterations;
    }
  };

  RngStream craft = rs.Child(2);
  switch (ctx.params.protocol) {
    case Protocol::kFlip:
      evaluate(CraftFlipReports(attack, ctx.params.scfo, n_f), attack.range_divisor, 0);
      break;
    case Protocol::kPure:
      evaluate(CraftPureReports(attack, ctx.params.scfo, n_f, craft), attack.range_divisor, 0);
      break;
    default:
      for (int d = 1; d <= 3; ++d) {
        AttackConfig a = attack;
        a.range_divisor = d;
        RngStream craft_d = craft.Child(d);
        evaluate(CraftPiecewiseReports(a, ctx.params.piecewise, n_f, craft_d), d, d);
      }
  }
  assert(Checksum(ctx.data.values) == before);
  return out;
}

std::string FormatKeyNumber(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%g", v);
  return buf;
}

std::map<std::string, SummaryStat> Summarize(const std::vector<RepetitionResult>& runs) {
  std::map<std::string, std::vector<double>> columns;
  for (const auto& r : runs) {
    for (const auto& [key, value] : FlattenRepetition(r)) columns[key].push_back(value);
  }
  std::map<std::string, SummaryStat> out;
  for (const auto& [key, values] : columns) {
    const double n = static_cast<double>(values.size());
    const double mean = std::accumulate(values.begin(), values.end(), 0.0) / n;
    double ss = 0;
    for (double v : values) ss += (v - mean) * (v - mean);
    out[key] = {mean, values.size() > 1 ? std::sqrt(ss / (n - 1)) : 0.0};
  }
  return out;
}

}  // namespace

std::vector<std::pair<std::string, double>> FlattenRepetition(const RepetitionResult& r) {
  std::vector<std::pair<std::string, double>> out;
  out.emplace_back("w1", r.metrics.w1);
  out.emplace_back("range_query_err", r.metrics.range_query_err);
  for (const auto& [alpha, err] : r.metrics.range_query) {
    out.emplace_back("range_query_err@" + FormatKeyNumber(alpha), err);
  }
  out.emplace_back("quantile_err", r.metrics.quantile_err);
  out.emplace_back("messages_per_user", r.metrics.messages_per_user);
  out.emplace_back("iterations", r.iterations);
  if (r.riar.size() == 1) {
    out.emplace_back("riar", r.riar[0].report.riar);
  } else {
    for (const auto& rr : r.riar) out.emplace_back("riar_range" + std::to_string(rr.divisor), rr.report.riar);
  }
  return out;
}

RunReport RunExperiment(const ExperimentConfig& cfg_in) {
  const auto start = std::chrono::steady_clock::now();
  cfg_in.Validate();
  const Dataset data = Stage("dataset", [&] { return MaterializeDataset(cfg_in); });
  ExperimentConfig cfg = cfg_in;
  cfg.budget.n = static_cast<std::int64_t>(data.n());
  const ResolvedParams params = Stage("calibration", [&] { return ResolveParams(cfg); });
  const Histogram truth = BuildHistogram(data, cfg.m);

  Context ctx{cfg, data, params, truth, std::nullopt, RngStream(cfg.seed, kQueryStream)};
  if (cfg.attack) ctx.ideal = IdealDistribution(cfg.attack->targets, cfg.m);

  std::vector<std::optional<RepetitionResult>> results(cfg.repetitions);
  std::vector<std::exception_ptr> errors(cfg.repetitions);
  std::atomic<int> next{0};
  auto worker = [&] {
    for (int r; (r = next.fetch_add(1)) < cfg.repetitions;) {
      try {
        results[r] = RunRepetition(ctx, r);
      } catch (...) {
        errors[r] = std::current_exception();
      }
    }
  };
  const int threads = std::max(1, std::min<int>(cfg.repetitions, static_cast<int>(std::thread::hardware_concurrency())));
  std::vector<std::thread> pool;
  for (int t = 1; t < threads; ++t) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
  for (const auto& e : errors) {
    if (e) {
      Stage("repetition", [&]() -> int { std::rethrow_exception(e); });
    }
  }

  RunReport report;
  report.protocol = ProtocolName(cfg.protocol);
  report.aggregator = IsPiecewise(cfg.protocol) ? AggregatorName(params.aggregator) : "Norm-Sub";
  report.budget = cfg.budget;
  report.m = cfg.m;
  report.seed = cfg.seed;
  report.repetitions = cfg.repetitions;
  report.params = params;
  report.attack = cfg.attack;
  for (auto& r : results) report.runs.push_back(std::move(*r));
  report.summary = Summarize(report.runs);
  if (cfg.attack && IsPiecewise(cfg.protocol)) {
    int best = 1;
    for (int d = 2; d <= 3; ++d) {
      if (report.summary["riar_range" + std::to_string(d)].mean <
          report.summary["riar_range" + std::to_string(best)].mean) {
        best = d;
      }
    }
    report.best_divisor = best;
    report.summary["riar"] = report.summary["riar_range" + std::to_string(best)];
  }
  report.wall_time_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return report;
}

namespace {

json ParamsJson(const ResolvedParams& p) {
  json j;
  if (IsPiecewise(p.protocol)) {
    if (p.eps_l) j["eps_l"] = *p.eps_l;
    j["b"] = p.piecewise.b;
    j["k"] = p.piecewise.k;
    j["p"] = p.piecewise.p;
    j["q"] = p.piecewise.q;
  } else {
    j["c"] = p.scfo.c;
    j["s"] = p.scfo.s;
    j["q_flip"] = p.scfo.q_flip;
  }
  j["messages_per_user"] = p.messages_per_user;
  return j;
}

json AttackJson(const AttackConfig& a) {
  return json{{"beta", a.beta}, {"targets", a.targets}, {"range_divisor", a.range_divisor}};
}

}  // namespace

json ToJson(const RunReport& report) {
  json j;
  j["protocol"] = report.protocol;
  j["aggregator"] = report.aggregator;
  j["budget"] = {{"eps", report.budget.eps}, {"delta", report.budget.delta}, {"n", report.budget.n}};
  j["m"] = report.m;
  j["seed"] = report.seed;
  j["repetitions"] = report.repetitions;
  j["params"] = ParamsJson(report.params);
  if (report.attack) j["attack"] = AttackJson(*report.attack);
  json runs = json::array();
  for (const auto& r : report.runs) {
    json rq = json::array();
    for (const auto& [alpha, err] : r.metrics.range_query) rq.push_back({{"alpha", alpha}, {"error", err}});
    json run{{"index", r.index},
             {"metrics",
              {{"w1", r.metrics.w1},
               {"range_query_err", r.metrics.range_query_err},
               {"range_query", rq},
               {"quantile_err", r.metrics.quantile_err},
               {"messages_per_user", r.metrics.messages_per_user}}},
             {"iterations", r.iterations}};
    if (!r.riar.empty()) {
      json rr = json::array();
      for (const auto& x : r.riar) {
        rr.push_back({{"divisor", x.divisor},
                      {"w1_attacked_vs_ideal", x.report.w1_attacked_vs_ideal},
                      {"w1_true_vs_ideal", x.report.w1_true_vs_ideal},
                      {"riar", x.report.riar}});
      }
      run["riar"] = rr;
    }
    runs.push_back(run);
  }
  j["runs"] = runs;
  json summary = json::object();
  for (const auto& [key, s] : report.summary) summary[key] = {{"mean", s.mean}, {"std", s.std}};
  j["summary"] = summary;
  if (report.best_divisor) j["best_divisor"] = *report.best_divisor;
  j["wall_time_s"] = report.wall_time_s;
  return j;
}

RunReport RunReportFromJson(const json& j) {
  try {
    RunReport r;
    r.protocol = j.at("protocol").get<std::string>();
    r.aggregator = j.at("aggregator").get<std::string>();
    const json& b = j.at("budget");
    r.budget = {b.at("eps").get<double>(), b.at("delta").get<double>(), b.at("n").get<std::int64_t>()};
    r.m = j.at("m").get<int>();
    r.seed = j.at("seed").get<std::uint64_t>();
    r.repetitions = j.at("repetitions").get<int>();
    const json& p = j.at("params");
    r.params.protocol = ParseProtocol(r.protocol);
    if (IsPiecewise(r.params.protocol)) {
      r.params.aggregator = ParseAggregator(r.aggregator);
      if (p.contains("eps_l")) r.params.eps_l = p.at("eps_l").get<double>();
      r.params.piecewise = {p.at("b").get<double>(), p.at("k").get<double>(), p.at("p").get<double>(),
                            p.at("q").get<double>()};
    } else {
      r.params.aggregator = Aggregator::kEm;
      r.params.scfo = {p.at("c").get<int>(), p.at("s").get<int>(), p.at("q_flip").get<double>()};
    }
    r.params.messages_per_user = p.at("messages_per_user").get<int>();
    if (j.contains("attack")) {
      const json& a = j.at("attack");
      r.attack = AttackConfig{a.at("beta").get<double>(), a.at("targets").get<std::vector<double>>(),
                              a.at("range_divisor").get<int>()};
    }
    for (const json& run : j.at("runs")) {
      RepetitionResult rr;
      rr.index = run.at("index").get<int>();
      const json& m = run.at("metrics");
      rr.metrics.w1 = m.at("w1").get<double>();
      rr.metrics.range_query_err = m.at("range_query_err").get<double>();
      for (const json& q : m.at("range_query")) {
        rr.metrics.range_query.emplace_back(q.at("alpha").get<double>(), q.at("error").get<double>());
      }
      rr.metrics.quantile_err = m.at("quantile_err").get<double>();
      rr.metrics.messages_per_user = m.at("messages_per_user").get<double>();
      rr.iterations = run.at("iterations").get<int>();
      if (run.contains("riar")) {
        for (const json& x : run.at("riar")) {
          rr.riar.push_back({x.at("divisor").get<int>(),
                             {x.at("w1_attacked_vs_ideal").get<double>(), x.at("w1_true_vs_ideal").get<double>(),
                              x.at("riar").get<double>()}});
        }
      }
      r.runs.push_back(std::move(rr));
    }
    for (const auto& [key, s] : j.at("summary").items()) {
      r.summary[key] = {s.at("mean").get<double>(), s.at("std").get<double>()};
    }
    if (j.contains("best_divisor")) r.best_divisor = j.at("best_divisor").get<int>();
    r.wall_time_s = j.at("wall_time_s").get<double>();
    return r;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kIo, std::string("malformed run report: ") + e.what());
  }
}

ReportFormat ParseReportFormat(std::string_view name) {
  if (name == "json") return ReportFormat::kJson;
  if (name == "csv") return ReportFormat::kCsv;
  throw Error(ErrorCode::kConfig, "format must be json or csv");
}

std::string ReportToCsv(const RunReport& report) {
  std::ostringstream os;
  std::vector<std::string> keys;
  if (!report.runs.empty()) {
    for (const auto& kv : FlattenRepetition(report.runs[0])) keys.push_back(kv.first);
  }
  os << "row";
  for (const auto& k : keys) os << ',' << k;
  os << '\n';
  char buf[32];
  auto cell = [&](double v) {
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return std::string(buf);
  };
  for (const auto& r : report.runs) {
    os << r.index;
    for (const auto& kv : FlattenRepetition(r)) os << ',' << cell(kv.second);
    os << '\n';
  }
  for (const char* row : {"mean", "std"}) {
    os << row;
    for (const auto& k : keys) {
      const auto it = report.summary.find(k);
      const SummaryStat s = it == report.summary.end() ? SummaryStat{} : it->second;
      os << ',' << cell(row[0] == 'm' ? s.mean : s.std);
    }
    os << '\n';
  }
  return os.str();
}

void EmitReport(const RunReport& report, ReportFormat format, const std::filesystem::path& path) {
  const std::string text = format == ReportFormat::kJson ? ToJson(report).dump(2) + "\n" : ReportToCsv(report);
  if (path.empty() || path == "-") {
    std::fwrite(text.data(), 1, text.size(), stdout);
    return;
  }
  std::ofstream os(path);
  if (!os) throw Error(ErrorCode::kIo, "cannot write " + path.string());
  os << text;
  if (!os) throw Error(ErrorCode::kIo, "write failed for " + path.string());
}

std::string_view SweepParamName(SweepParam p) {
  switch (p) {
    case SweepParam::kEps: return "eps";
    case SweepParam::kBeta: return "beta";
    case SweepParam::kC: return "c";
  }
  return "?";
}

std::vector<SweepPoint> RunSweep(const ExperimentConfig& cfg) {
  if (!cfg.sweep) throw ConfigError("$.sweep", "required for a sweep");
  cfg.Validate();
  std::vector<SweepPoint> points;
  for (double v : cfg.sweep->values) {
    ExperimentConfig point = cfg;
    point.sweep.reset();
    switch (cfg.sweep->param) {
      case SweepParam::kEps: point.budget.eps = v; break;
      case SweepParam::kBeta: point.attack->beta = v; break;
      case SweepParam::kC: point.c = static_cast<int>(v); break;
    }
    points.push_back({v, RunExperiment(point)});
  }
  return points;
}

std::vector<std::filesystem::path> EmitSweep(const std::vector<SweepPoint>& points, SweepParam param,
                                             ReportFormat format, const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw Error(ErrorCode::kIo, "cannot create " + dir.string() + ": " + ec.message());
  std::vector<std::filesystem::path> paths;
  for (const auto& pt : points) {
    const auto path = dir / (std::string(SweepParamName(param)) + "_" + FormatKeyNumber(pt.value) +
                             (format == ReportFormat::kJson ? ".json" : ".csv"));
    EmitReport(pt.report, format, path);
    paths.push_back(path);
  }
  return paths;
}

json CalibrationJson(const ExperimentConfig& cfg_in) {
  ExperimentConfig cfg = cfg_in;
  if (cfg.budget.n == 0) cfg.budget.n = static_cast<std::int64_t>(MaterializeDataset(cfg).n());
  json j;
  j["protocol"] = std::string(ProtocolName(cfg.protocol));
  j["eps"] = cfg.budget.eps;
  j["delta"] = cfg.budget.delta;
  j["n"] = cfg.budget.n;
  switch (cfg.protocol) {
    case Protocol::kAsp: {
      OptimizerConfig o = cfg.optimizer;
      o.convention = cfg.bound;
      const OptimizerResult r = OptimizeAsp(cfg.budget, o);
      j.update({{"b", r.params.b}, {"k", r.params.k}, {"p", r.params.p}, {"q", r.params.q},
                {"i_u", r.bound.i_u}, {"bound_lhs", r.lhs}, {"bound", std::string(BoundConventionName(cfg.bound))}});
      break;
    }
    case Protocol::kSsw:
    case Protocol::kSwLdp: {
      const double eps_l = cfg.protocol == Protocol::kSsw ? SswCalibrate(cfg.budget, cfg.bound) : cfg.budget.eps;
      const PerturbParams p = SwParams(eps_l);
      j.update({{"eps_l", eps_l}, {"b", p.b}, {"k", p.k}, {"p", p.p}, {"q", p.q}});
      if (cfg.protocol == Protocol::kSsw) {
        j["bound_lhs"] = SswBoundLhs(cfg.budget.eps, eps_l, cfg.budget.n, cfg.bound);
        j["bound"] = std::string(BoundConventionName(cfg.bound));
      }
      break;
    }
    case Protocol::kFlip: {
      const ScfoParams sc = FlipParams(cfg.budget, *cfg.c);
      j.update({{"c", sc.c}, {"s", sc.s}, {"q_flip", sc.q_flip}, {"raw_s", FlipRawS(cfg.budget, *cfg.c)}});
      break;
    }
    case Protocol::kPure: {
      const ScfoParams sc = PureParams(cfg.budget, *cfg.c);
      j.update({{"c", sc.c}, {"s", sc.s}, {"raw_s", PureRawS(cfg.budget, *cfg.c)},
                {"eps_certified", PureEpsilon(sc.s, cfg.budget.n, sc.c, cfg.budget.delta)}});
      break;
    }
  }
  return j;
}

json MiBoundJson(const ExperimentConfig& cfg_in) {
  ExperimentConfig cfg = cfg_in;
  if (cfg.budget.n == 0) cfg.budget.n = static_cast<std::int64_t>(MaterializeDataset(cfg).n());
  OptimizerConfig o = cfg.optimizer;
  o.convention = cfg.bound;
  const OptimizerResult r = OptimizeAsp(cfg.budget, o);
  return json{{"eps", cfg.budget.eps},
              {"delta", cfg.budget.delta},
              {"n", cfg.budget.n},
              {"b", r.params.b},
              {"k", r.params.k},
              {"p", r.params.p},
              {"q", r.params.q},
              {"h_u", r.bound.h_u},
              {"h_cond", r.bound.h_cond},
              {"i_u", r.bound.i_u},
              {"prior_bound", PriorUpperBound(r.params.b, r.params.k)},
              {"asp_bound_lhs", r.lhs},
              {"bound", std::string(BoundConventionName(cfg.bound))}};
}

}  // namespace shuffledist
