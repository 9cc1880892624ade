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

#ifndef FLUID_CONFIG_H_
#define FLUID_CONFIG_H_

#include <cstdint>
#include <string>
#include <vector>

#include "fluid/data.h"
#include "fluid/orchestrator.h"
#include "fluid/simclient.h"

namespace fluid {

struct DatasetConfig {
  int classes = 10;
  size_t dims = 16;
  size_t per_class = 100;
  uint64_t seed = 7;
  PartitionSpec partition;
  std::string csv;  // when set, replaces the synthetic blobs
};

struct ExperimentConfig {
  DatasetConfig dataset;
  std::vector<size_t> hidden = {64, 32};
  std::vector<ClientSpec> fleet;
  FluidConfig fl;
  std::vector<uint64_t> seeds = {1};
  std::string out_dir = "fluid_out";
};

// Five clients with base epoch times spanning a twofold spread.
std::vector<ClientSpec> DefaultFleet();

ExperimentConfig DefaultExperimentConfig();

// Parses `section.key = value` lines on top of the defaults. Throws
// ConfigError naming the line and key.
ExperimentConfig ParseConfig(const std::string& text);
ExperimentConfig LoadConfig(const std::string& path);

// Cross-field checks (rounds vs warmup, non-empty seeds, rates in (0, 1]).
void ValidateExperimentConfig(const ExperimentConfig& config);

DropoutStrategy ParseStrategy(const std::string& name);
std::string StrategyName(DropoutStrategy strategy);
StragglerPolicy ParsePolicy(const std::string& text);
std::string PolicyName(const StragglerPolicy& policy);

// Comma-separated list of doubles.
std::vector<double> ParseDoubleList(const std::string& text);

}  // namespace fluid

#endif  // FLUID_CONFIG_H_
