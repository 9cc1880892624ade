/**
 * Copyright 2026 The FLuID Simulator Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 * http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

// fluidsim: experiment runner for the straggler-aware FL simulator.

#include <cstdint>
#include <cstdlib>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "fluid/analysis.h"
#include "fluid/config.h"
#include "fluid/errors.h"
#include "fluid/experiment.h"
#include "fluid/gradcheck.h"

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitRuntime = 3;

struct Overrides {
  std::optional<uint64_t> seed;
  std::optional<std::string> out;
  std::optional<std::string> strategy;
  std::optional<double> rate;
};

fluid::ExperimentConfig Load(const std::string& path, const Overrides& o) {
  auto cfg = fluid::LoadConfig(path);
  if (const char* env = std::getenv("FLUID_OUT_DIR"); env && *env) cfg.out_dir = env;
  if (o.out) cfg.out_dir = *o.out;
  if (o.seed) cfg.seeds = {*o.seed};
  if (o.strategy) cfg.fl.strategy = fluid::ParseStrategy(*o.strategy);
  if (o.rate) cfg.fl.forced_rate = *o.rate;
  fluid::ValidateExperimentConfig(cfg);
  return cfg;
}

int Run(const std::string& path, const Overrides& o) {
  const auto cfg = Load(path, o);
  const auto out = fluid::RunExperiment(cfg);
  const auto acc = fluid::SampleStats(out.summary.final_accuracy);
  const auto time = fluid::SampleStats(out.summary.total_time);
  std::cout << "strategy=" << out.summary.strategy << " rate=" << out.summary.rate
            << " seeds=" << out.runs.size() << " final_accuracy=" << acc.mean << " +- " << acc.std
            << " total_time_s=" << time.mean << " +- " << time.std << "\n"
            << "summary: " << out.summary_file << "\n";
  return 0;
}

int SweepThreshold(const std::string& path, const std::string& th, const Overrides& o) {
  const auto cfg = Load(path, o);
  const auto rows = fluid::SweepThreshold(cfg, fluid::ParseDoubleList(th));
  const auto csv = fluid::ThresholdCsv(rows);
  fluid::WriteFile(cfg.out_dir, "threshold_sweep.csv", csv);
  std::cout << csv;
  return 0;
}

int SweepRatio(const std::string& path, const std::string& ratios, const Overrides& o) {
  const auto cfg = Load(path, o);
  const auto rows = fluid::SweepStragglerRatio(
      cfg, fluid::ParseDoubleList(ratios),
      {fluid::DropoutStrategy::kRandom, fluid::DropoutStrategy::kOrdered,
       fluid::DropoutStrategy::kInvariant});
  const auto csv = fluid::RatioCsv(rows);
  fluid::WriteFile(cfg.out_dir, "ratio_sweep.csv", csv);
  std::cout << csv;
  return 0;
}

struct BoundArgs {
  size_t m = 32;
  size_t k = 8;
  double eps = 0.5;
  size_t trials = 100000;
  size_t instances = 1;
  double scale = 0.01;
  std::string model = "retained";
};

int BoundCheck(const BoundArgs& a, uint64_t seed) {
  namespace an = fluid::analysis;
  const auto variance =
      a.model == "alternative" ? an::VarianceModel::kAlternative : an::VarianceModel::kRetained;
  if (a.model != "retained" && a.model != "alternative") {
    throw fluid::ConfigError("variance model must be retained or alternative");
  }
  for (size_t i = 0; i < a.instances; ++i) {
    const auto inst = an::RandomInstance(a.m, a.k, a.eps, fluid::DeriveSeed(seed, {i}), a.scale);
    nlohmann::ordered_json line{{"instance", i}, {"m", a.m}, {"k", a.k}, {"eps", a.eps}};
    try {
      const auto bound = an::ProbabilityMassBound(inst.g, inst.k, inst.eps);
      const auto p = an::KeepProbabilities(inst.g, inst.k, bound.rate);
      line["feasible"] = true;
      line["rate"] = bound.rate;
      line["sum_p"] = bound.total_probability;
      line["bound"] = bound.bound;
      line["holds"] = bound.holds;
      line["variance_model"] = a.model;
      line["second_moment"] = an::SecondMoment(inst.g, p, variance, bound.rate);
      line["mc_trials"] = a.trials;
      line["mc_estimate"] =
          an::EmpiricalSecondMoment(inst.g, p, a.trials, fluid::DeriveSeed(seed, {i, 0xbeef}));
      line["mc_stderr"] = an::SecondMomentStdError(inst.g, p, a.trials);
    } catch (const fluid::InfeasibleRateError& e) {
      line["feasible"] = false;
      line["error"] = e.what();
    } catch (const fluid::SlackError& e) {
      line["feasible"] = false;
      line["error"] = e.what();
    }
    std::cout << line.dump() << "\n";
  }
  return 0;
}

int GradCheck(uint64_t seed) {
  const auto report = fluid::RunGradientCheck(20, seed);
  const bool ok = report.max_relative_error < 1e-4;
  std::cout << nlohmann::ordered_json{{"trials", report.trials},
                                      {"max_relative_error", report.max_relative_error},
                                      {"pass", ok}}
                   .dump()
            << "\n";
  return ok ? 0 : kExitRuntime;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Straggler-aware federated learning simulator"};
  app.require_subcommand(1);
  app.fallthrough();

  Overrides o;
  uint64_t seed = 1;
  std::string out, strategy;
  double rate = 0.0;
  auto* seed_opt = app.add_option("--seed", seed, "Run a single seed")->group("Global");
  auto* out_opt = app.add_option("--out", out, "Output directory")->group("Global");
  auto* strat_opt = app.add_option("--strategy", strategy, "none|random|ordered|invariant")->group("Global");
  auto* rate_opt = app.add_option("--rate", rate, "Force every straggler to this rate")->group("Global");

  std::string config_path, th_list, ratio_list;
  auto* run = app.add_subcommand("run", "Run every seed of a config");
  run->add_option("config", config_path)->required()->check(CLI::ExistingFile);

  auto* sweep_th = app.add_subcommand("sweep-threshold", "Fixed-threshold sweep");
  sweep_th->add_option("config", config_path)->required()->check(CLI::ExistingFile);
  sweep_th->add_option("--th", th_list, "Comma-separated thresholds")->required();

  auto* sweep_ratio = app.add_subcommand("sweep-ratio", "Straggler-ratio sweep");
  sweep_ratio->add_option("config", config_path)->required()->check(CLI::ExistingFile);
  sweep_ratio->add_option("--ratios", ratio_list, "Comma-separated straggler ratios")->required();

  BoundArgs bound;
  auto* bound_cmd = app.add_subcommand("bound-check", "Keep-probability mass bound report (JSON lines)");
  bound_cmd->add_option("--m", bound.m, "Gradient length");
  bound_cmd->add_option("--k", bound.k, "Always-kept prefix");
  bound_cmd->add_option("--eps", bound.eps, "Variance slack");
  bound_cmd->add_option("--trials", bound.trials, "Monte-Carlo trials");
  bound_cmd->add_option("--instances", bound.instances, "Random instances to report");
  bound_cmd->add_option("--scale", bound.scale, "Max gradient magnitude");
  bound_cmd->add_option("--variance-model", bound.model, "retained|alternative");

  auto* grad = app.add_subcommand("gradcheck", "Backprop vs finite differences");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitConfig;
  }
  if (*seed_opt) o.seed = seed;
  if (*out_opt) o.out = out;
  if (*strat_opt) o.strategy = strategy;
  if (*rate_opt) o.rate = rate;

  try {
    if (*run) return Run(config_path, o);
    if (*sweep_th) return SweepThreshold(config_path, th_list, o);
    if (*sweep_ratio) return SweepRatio(config_path, ratio_list, o);
    if (*bound_cmd) return BoundCheck(bound, seed);
    if (*grad) return GradCheck(seed);
  } catch (const fluid::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
  return 0;
}
