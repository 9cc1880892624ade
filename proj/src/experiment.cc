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

#include "fluid/experiment.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

#include "json.hpp"

#include "fluid/data.h"
#include "fluid/errors.h"
#include "fluid/rng.h"

namespace fluid {
namespace {

std::string Num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::string RateLabel(const ExperimentConfig& config) {
  return config.fl.forced_rate ? Num(*config.fl.forced_rate) : "auto";
}

}  // namespace

const char* const kMetricsHeader =
    "seed,round,strategy,r,straggler_ids,round_time_s,cumulative_time_s,weighted_accuracy,"
    "weighted_loss,invariant_fraction,thresholds,calibration_overhead";

std::vector<SimClient> BuildClients(const ExperimentConfig& config, size_t* input_dims,
                                    int* classes) {
  Dataset ds = config.dataset.csv.empty()
                   ? SynthGaussianBlobs(config.dataset.classes, config.dataset.dims,
                                        config.dataset.per_class, config.dataset.seed)
                   : LoadCsv(config.dataset.csv);
  const auto part = MakePartition(ds, config.fleet.size(), config.dataset.partition,
                                  DeriveSeed(config.dataset.seed, {0x5eed}));
  std::vector<SimClient> clients;
  for (size_t c = 0; c < config.fleet.size(); ++c) {
    clients.push_back({config.fleet[c], ds.Subset(part.clients[c].train),
                       ds.Subset(part.clients[c].test)});
  }
  if (input_dims) *input_dims = ds.features.cols();
  if (classes) *classes = ds.class_count;
  return clients;
}

RunResult RunSingle(const ExperimentConfig& config, uint64_t seed) {
  ValidateExperimentConfig(config);
  size_t dims = 0;
  int classes = 0;
  auto clients = BuildClients(config, &dims, &classes);
  Model init = MakeMlp(dims, config.hidden, static_cast<size_t>(classes),
                       DeriveSeed(seed, {0x1417}));
  Orchestrator orch(std::move(init), std::move(clients), config.fl, seed);
  RunResult out;
  out.seed = seed;
  out.records = orch.Run();
  out.final_model = orch.global();
  if (!AllFinite(out.final_model)) throw Error("non-finite parameters after training");
  return out;
}

double RoundRate(const RoundRecord& record) {
  double r = 1.0;
  for (double v : record.rates) r = std::min(r, v);
  return r;
}

std::string MetricsCsv(const std::vector<RoundRecord>& records, uint64_t seed,
                       const std::string& strategy) {
  std::ostringstream out;
  out << kMetricsHeader << "\n";
  double cumulative = 0.0;
  for (const auto& rec : records) {
    cumulative += rec.round_time;
    std::string ids, th;
    for (size_t i = 0; i < rec.stragglers.size(); ++i) {
      ids += (i ? ";" : "") + std::to_string(rec.stragglers[i]);
    }
    for (size_t i = 0; i < rec.thresholds.size(); ++i) {
      th += (i ? ";" : "") + Num(rec.thresholds[i]);
    }
    out << seed << "," << rec.round << "," << strategy << "," << Num(RoundRate(rec)) << ","
        << ids << "," << Num(rec.round_time) << "," << Num(cumulative) << ","
        << Num(rec.accuracy) << "," << Num(rec.loss) << "," << Num(rec.invariant_fraction)
        << "," << th << "," << Num(CalibrationOverhead(rec)) << "\n";
  }
  return out.str();
}

Stats SampleStats(const std::vector<double>& values) {
  Stats s;
  if (values.empty()) return s;
  for (double v : values) s.mean += v;
  s.mean /= static_cast<double>(values.size());
  if (values.size() < 2) return s;
  double sq = 0.0;
  for (double v : values) sq += (v - s.mean) * (v - s.mean);
  s.std = std::sqrt(sq / static_cast<double>(values.size() - 1));
  return s;
}

std::string WriteFile(const std::string& dir, const std::string& name, const std::string& content) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError("cannot create " + dir + ": " + ec.message());
  const auto path = (std::filesystem::path(dir) / name).string();
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path);
  out << content;
  if (!out) throw IoError("write failed for " + path);
  return path;
}

std::string SummaryJson(const std::vector<SummaryGroup>& groups) {
  nlohmann::ordered_json doc;
  doc["groups"] = nlohmann::ordered_json::array();
  for (const auto& g : groups) {
    const auto acc = SampleStats(g.final_accuracy);
    const auto time = SampleStats(g.total_time);
    doc["groups"].push_back({{"strategy", g.strategy},
                             {"rate", g.rate},
                             {"seeds", g.seeds},
                             {"final_accuracy", g.final_accuracy},
                             {"total_time_s", g.total_time},
                             {"final_accuracy_mean", acc.mean},
                             {"final_accuracy_std", acc.std},
                             {"total_time_mean_s", time.mean},
                             {"total_time_std_s", time.std}});
  }
  return doc.dump(2) + "\n";
}

ExperimentOutput RunExperiment(const ExperimentConfig& config, bool write) {
  ValidateExperimentConfig(config);
  ExperimentOutput out;
  const std::string strategy = StrategyName(config.fl.strategy);
  out.summary.strategy = strategy;
  out.summary.rate = RateLabel(config);
  for (uint64_t seed : config.seeds) {
    auto run = RunSingle(config, seed);
    double total = 0.0;
    for (const auto& r : run.records) total += r.round_time;
    out.summary.seeds.push_back(seed);
    out.summary.final_accuracy.push_back(run.records.back().accuracy);
    out.summary.total_time.push_back(total);
    if (write) {
      out.metrics_files.push_back(
          WriteFile(config.out_dir, "metrics_" + strategy + "_seed" + std::to_string(seed) + ".csv",
                    MetricsCsv(run.records, seed, strategy)));
    }
    out.runs.push_back(std::move(run));
  }
  if (write) out.summary_file = WriteFile(config.out_dir, "summary.json", SummaryJson({out.summary}));
  return out;
}

std::vector<ThresholdRow> SweepThreshold(const ExperimentConfig& config,
                                         std::vector<double> thresholds) {
  std::sort(thresholds.begin(), thresholds.end());
  ExperimentConfig base = config;
  base.fl.strategy = DropoutStrategy::kInvariant;
  base.fl.fixed_threshold.reset();
  const auto reference = RunSingle(base, base.seeds.front());
  std::vector<const LayerScores*> trace;
  for (const auto& r : reference.records) {
    if (r.round >= base.fl.calibration.warmup && !r.scores.empty()) trace.push_back(&r.scores);
  }

  std::vector<ThresholdRow> rows;
  for (double th : thresholds) {
    ThresholdRow row;
    row.threshold = th;
    for (const auto* s : trace) row.invariant_fraction += InvariantFraction(*s, th);
    if (!trace.empty()) row.invariant_fraction /= static_cast<double>(trace.size());
    ExperimentConfig fixed = base;
    fixed.fl.fixed_threshold = th;
    std::vector<double> finals;
    for (uint64_t seed : fixed.seeds) finals.push_back(RunSingle(fixed, seed).records.back().accuracy);
    row.final_accuracy = SampleStats(finals).mean;
    rows.push_back(row);
  }
  return rows;
}

std::vector<RatioRow> SweepStragglerRatio(const ExperimentConfig& config,
                                          const std::vector<double>& ratios,
                                          const std::vector<DropoutStrategy>& strategies) {
  std::vector<RatioRow> rows;
  for (double ratio : ratios) {
    if (!(ratio >= 0.0 && ratio < 1.0)) throw ConfigError("straggler ratios must be in [0, 1)");
    for (auto strategy : strategies) {
      ExperimentConfig cfg = config;
      cfg.fl.strategy = strategy;
      cfg.fl.policy = StragglerPolicy::SlowestPct(ratio);
      std::vector<double> finals;
      for (uint64_t seed : cfg.seeds) finals.push_back(RunSingle(cfg, seed).records.back().accuracy);
      rows.push_back({ratio, StrategyName(strategy), SampleStats(finals)});
    }
  }
  return rows;
}

std::string ThresholdCsv(const std::vector<ThresholdRow>& rows) {
  std::ostringstream out;
  out << "threshold,invariant_fraction,final_accuracy\n";
  for (const auto& r : rows) {
    out << Num(r.threshold) << "," << Num(r.invariant_fraction) << "," << Num(r.final_accuracy) << "\n";
  }
  return out.str();
}

std::string RatioCsv(const std::vector<RatioRow>& rows) {
  std::ostringstream out;
  out << "ratio,strategy,accuracy_mean,accuracy_std\n";
  for (const auto& r : rows) {
    out << Num(r.ratio) << "," << r.strategy << "," << Num(r.accuracy.mean) << ","
        << Num(r.accuracy.std) << "\n";
  }
  return out.str();
}

}  // namespace fluid
