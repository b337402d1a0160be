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

// Command-line front end. Exit status: 0 success, 2 configuration error,
// 3 infeasible calibration, 1 anything else.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "shuffledist/experiment.hpp"
#include "shuffledist/report_io.hpp"

namespace sd = shuffledist;

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitInfeasible = 3;

struct Common {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out;
  std::string format = "json";
};

void AddCommon(CLI::App* cmd, Common& c, bool needs_config = true) {
  auto* opt = cmd->add_option("--config", c.config, "experiment config (JSON)");
  if (needs_config) opt->required();
  cmd->add_option("--seed", c.seed, "override the config seed");
  cmd->add_option("--out", c.out, "output path (stdout when omitted)");
  cmd->add_option("--format", c.format, "json or csv")->check(CLI::IsMember({"json", "csv"}));
}

sd::ExperimentConfig Load(const Common& c) {
  sd::ExperimentConfig cfg = sd::ParseConfigFile(c.config);
  if (c.seed) cfg.seed = *c.seed;
  return cfg;
}

void WriteText(const std::string& text, const std::string& out) {
  if (out.empty() || out == "-") {
    std::cout << text;
    return;
  }
  std::ofstream os(out);
  if (!os) throw sd::Error(sd::ErrorCode::kIo, "cannot write " + out);
  os << text;
}

void WriteJson(const nlohmann::json& j, const std::string& out) { WriteText(j.dump(2) + "\n", out); }

int ExitCode(sd::ErrorCode code) {
  switch (code) {
    case sd::ErrorCode::kConfig:
    case sd::ErrorCode::kInvalidArgument:
    case sd::ErrorCode::kParameter:
    case sd::ErrorCode::kEmptyDataset:
      return kExitConfig;
    case sd::ErrorCode::kInfeasibleBudget:
      return kExitInfeasible;
    default:
      return 1;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Shuffle-model distribution estimation experiments"};
  app.require_subcommand(1);

  Common calibrate_opts, mi_opts, run_opts, attack_opts, sweep_opts, randomize_opts, estimate_opts;
  auto* calibrate = app.add_subcommand("calibrate", "resolve protocol parameters for the configured budget");
  AddCommon(calibrate, calibrate_opts);
  auto* mi = app.add_subcommand("mi-bound", "optimized piecewise parameters and mutual-information bounds");
  AddCommon(mi, mi_opts);
  auto* run = app.add_subcommand("run", "honest pipeline with repetitions");
  AddCommon(run, run_opts);
  auto* attack = app.add_subcommand("attack", "poisoning pipeline and RIAR");
  AddCommon(attack, attack_opts);
  std::optional<double> beta;
  std::vector<double> targets;
  std::optional<int> divisor;
  attack->add_option("--beta", beta, "compromised fraction");
  attack->add_option("--targets", targets, "target values in [0, 1]");
  attack->add_option("--range-divisor", divisor, "piecewise injection width b / d")->check(CLI::Range(1, 3));
  auto* sweep = app.add_subcommand("sweep", "one run per grid value of the config sweep");
  AddCommon(sweep, sweep_opts);

  auto* randomize = app.add_subcommand("randomize", "write the unshuffled report batch of one repetition");
  AddCommon(randomize, randomize_opts);
  int repetition = 0;
  randomize->add_option("--repetition", repetition, "repetition index whose streams are used");

  std::string shuffle_in, shuffle_out;
  std::uint64_t shuffle_seed = 0;
  auto* shuffle = app.add_subcommand("shuffle", "uniformly permute a report batch");
  shuffle->add_option("--in", shuffle_in, "batch file")->required();
  shuffle->add_option("--out", shuffle_out, "output batch file (stdout when omitted)");
  shuffle->add_option("--seed", shuffle_seed, "shuffle seed");

  auto* estimate = app.add_subcommand("estimate", "aggregate a report batch into a histogram");
  AddCommon(estimate, estimate_opts);
  std::string estimate_in;
  estimate->add_option("--in", estimate_in, "batch file")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : kExitConfig;
  }

  try {
    if (*calibrate) {
      WriteJson(sd::CalibrationJson(Load(calibrate_opts)), calibrate_opts.out);
    } else if (*mi) {
      WriteJson(sd::MiBoundJson(Load(mi_opts)), mi_opts.out);
    } else if (*run) {
      sd::ExperimentConfig cfg = Load(run_opts);
      cfg.attack.reset();
      cfg.sweep.reset();
      sd::EmitReport(sd::RunExperiment(cfg), sd::ParseReportFormat(run_opts.format), run_opts.out);
    } else if (*attack) {
      sd::ExperimentConfig cfg = Load(attack_opts);
      if (!cfg.attack) cfg.attack = sd::AttackConfig{};
      if (beta) cfg.attack->beta = *beta;
      if (!targets.empty()) cfg.attack->targets = targets;
      if (divisor) cfg.attack->range_divisor = *divisor;
      cfg.sweep.reset();
      sd::EmitReport(sd::RunExperiment(cfg), sd::ParseReportFormat(attack_opts.format), attack_opts.out);
    } else if (*sweep) {
      const sd::ExperimentConfig cfg = Load(sweep_opts);
      if (!cfg.sweep) throw sd::Error(sd::ErrorCode::kConfig, "$.sweep: required for the sweep command");
      if (sweep_opts.out.empty()) throw sd::Error(sd::ErrorCode::kConfig, "--out directory is required for sweeps");
      const auto points = sd::RunSweep(cfg);
      const auto paths = sd::EmitSweep(points, cfg.sweep->param, sd::ParseReportFormat(sweep_opts.format),
                                       sweep_opts.out);
      for (const auto& p : paths) std::cout << p.string() << '\n';
    } else if (*randomize) {
      sd::ExperimentConfig cfg = Load(randomize_opts);
      const sd::Dataset data = sd::MaterializeDataset(cfg);
      cfg.budget.n = static_cast<std::int64_t>(data.n());
      const sd::ResolvedParams params = sd::ResolveParams(cfg);
      const sd::RngStream rs(cfg.seed, static_cast<std::uint64_t>(repetition));
      const sd::ReportBatch batch = sd::Randomize(data, params, rs.Child(0));
      if (randomize_opts.out.empty()) {
        sd::WriteBatch(std::cout, batch);
      } else {
        sd::SaveBatch(randomize_opts.out, batch);
      }
    } else if (*shuffle) {
      sd::RngStream rng(shuffle_seed, 0);
      const sd::ReportBatch out = sd::Shuffle(sd::LoadBatch(shuffle_in), rng);
      if (shuffle_out.empty()) {
        sd::WriteBatch(std::cout, out);
      } else {
        sd::SaveBatch(shuffle_out, out);
      }
    } else if (*estimate) {
      sd::ExperimentConfig cfg = Load(estimate_opts);
      if (cfg.budget.n == 0) cfg.budget.n = static_cast<std::int64_t>(sd::MaterializeDataset(cfg).n());
      const sd::ResolvedParams params = sd::ResolveParams(cfg);
      const sd::ReportBatch batch = sd::LoadBatch(estimate_in);
      const std::size_t users = sd::MessageCount(batch) / static_cast<std::size_t>(params.messages_per_user);
      const sd::EstimateOutcome est = sd::EstimateHistogram(batch, params, cfg.m, users, cfg.smoother);
      const Eigen::VectorXd& f = est.f.freqs();
      WriteJson({{"m", cfg.m},
                 {"users", users},
                 {"iterations", est.iterations},
                 {"freqs", std::vector<double>(f.data(), f.data() + f.size())}},
                estimate_opts.out);
    }
  } catch (const sd::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return ExitCode(e.code());
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
