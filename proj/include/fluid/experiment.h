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

#ifndef FLUID_EXPERIMENT_H_
#define FLUID_EXPERIMENT_H_

#include <cstdint>
#include <string>
#include <vector>

#include "fluid/config.h"
#include "fluid/orchestrator.h"

namespace fluid {

struct RunResult {
  uint64_t seed = 0;
  std::vector<RoundRecord> records;
  Model final_model;
};

// Dataset, partition and fleet for a config; identical for every seed.
std::vector<SimClient> BuildClients(const ExperimentConfig& config, size_t* input_dims = nullptr,
                                    int* classes = nullptr);

RunResult RunSingle(const ExperimentConfig& config, uint64_t seed);

// Smallest rate handed to a straggler in the round, 1 when none.
double RoundRate(const RoundRecord& record);

extern const char* const kMetricsHeader;

// One CSV row per round, doubles printed round-trip exact.
std::string MetricsCsv(const std::vector<RoundRecord>& records, uint64_t seed,
                       const std::string& strategy);

struct SummaryGroup {
  std::string strategy;
  std::string rate;  // forced rate or "auto"
  std::vector<uint64_t> seeds;
  std::vector<double> final_accuracy;
  std::vector<double> total_time;
};

struct Stats {
  double mean = 0.0;
  double std = 0.0;  // sample std (n - 1); 0 for a single value
};

Stats SampleStats(const std::vector<double>& values);

struct ExperimentOutput {
  std::vector<RunResult> runs;
  SummaryGroup summary;
  std::vector<std::string> metrics_files;
  std::string summary_file;
};

// Runs every seed, writing one metrics CSV per seed and a summary JSON when
// `write` is set.
ExperimentOutput RunExperiment(const ExperimentConfig& config, bool write = true);

std::string SummaryJson(const std::vector<SummaryGroup>& groups);

struct ThresholdRow {
  double threshold = 0.0;
  double invariant_fraction = 0.0;  // on the reference score trace
  double final_accuracy = 0.0;      // mean over seeds with this fixed threshold
};

// Fractions come from the post-warmup scores of one calibrated invariant run
// (first seed), so the column is monotone in the threshold. Accuracies come
// from runs that hold the threshold fixed.
std::vector<ThresholdRow> SweepThreshold(const ExperimentConfig& config,
                                         std::vector<double> thresholds);

struct RatioRow {
  double ratio = 0.0;
  std::string strategy;
  Stats accuracy;
};

// Runs every strategy under slowest_pct:<ratio> for each ratio.
std::vector<RatioRow> SweepStragglerRatio(const ExperimentConfig& config,
                                          const std::vector<double>& ratios,
                                          const std::vector<DropoutStrategy>& strategies);

std::string ThresholdCsv(const std::vector<ThresholdRow>& rows);
std::string RatioCsv(const std::vector<RatioRow>& rows);

// Writes `content` to `dir/name`, creating `dir`. Throws IoError.
std::string WriteFile(const std::string& dir, const std::string& name, const std::string& content);

}  // namespace fluid

#endif  // FLUID_EXPERIMENT_H_
