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

#ifndef FLUID_SIMCLIENT_H_
#define FLUID_SIMCLIENT_H_

#include <cstddef>
#include <cstdint>
#include <vector>

#include "fluid/data.h"
#include "fluid/dropout.h"
#include "fluid/nn.h"
#include "fluid/rng.h"

namespace fluid {

// Background load active for progress in [start, end).
struct LoadWindow {
  double start = 0.0;
  double end = 0.0;
  double slowdown = 1.0;
};

struct ClientSpec {
  int id = 0;
  double base_epoch_time = 1.0;  // seconds for one local epoch on the full model
  double noise_pct = 0.05;
  std::vector<LoadWindow> load_schedule;
};

void ValidateClientSpec(const ClientSpec& spec);

// Product of the slowdowns of every window containing `progress`.
double ActiveSlowdown(const ClientSpec& spec, double progress);

// base * r * slowdown * (1 + u), u ~ Uniform(-noise, +noise). Always consumes
// one draw so noise-free and noisy runs stay stream-aligned.
double SimulateEpochTime(const ClientSpec& spec, double rate, double progress, Rng& rng);

struct LocalTrainParams {
  int epochs = 1;
  double lr = 0.05;
  size_t batch = 16;
};

// Mini-batch SGD over `train`, reshuffled every epoch.
Model LocalTrain(const Model& model, const Dataset& train, const LocalTrainParams& params,
                 uint64_t seed);

struct EvalResult {
  double accuracy = 0.0;
  double loss = 0.0;
  size_t examples = 0;
};

EvalResult Evaluate(const Model& model, const Dataset& test);

struct ClientReport {
  int id = 0;
  double epoch_time = 0.0;
  ClientUpdate update;
  EvalResult eval;
};

// A client with its data shard.
struct SimClient {
  ClientSpec spec;
  Dataset train;
  Dataset test;
};

// Trains the mask's sub-model of `global` and returns the update with the
// simulated epoch time for the sub-model size.
ClientReport RunClient(const SimClient& client, const Model& global, const NeuronMask& mask,
                       const LocalTrainParams& params, double progress, uint64_t train_seed,
                       uint64_t time_seed);

}  // namespace fluid

#endif  // FLUID_SIMCLIENT_H_
