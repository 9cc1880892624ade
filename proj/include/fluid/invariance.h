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

#ifndef FLUID_INVARIANCE_H_
#define FLUID_INVARIANCE_H_

#include <cstddef>
#include <span>
#include <vector>

#include "fluid/nn.h"

namespace fluid {

// Per hidden layer, one invariance score per neuron.
using LayerScores = std::vector<std::vector<double>>;

struct CalibrationParams {
  int warmup = 3;
  int persistence = 2;
  double growth_factor = 1.25;
  double delta = 1e-8;
};

struct CalibrationState {
  std::vector<double> threshold;              // per hidden layer
  std::vector<std::vector<int>> votes;        // non-stragglers with g < th, last epoch
  std::vector<std::vector<int>> below_streak; // consecutive majority-below epochs
  int epochs = 0;                             // epochs folded into the counters

  // Zero thresholds and counters shaped like `model`'s hidden layers.
  static CalibrationState For(const Model& model);
};

// max_p |cur_p - prev_p| / (|prev_p| + delta)
double NeuronScore(std::span<const double> prev, std::span<const double> cur, double delta);

// Scores every hidden neuron (weight row plus bias) of a full-model client
// update against the model the client received.
LayerScores ScoreModel(const Model& sent, const Model& trained, double delta);

// Element-wise median across clients.
LayerScores MedianScores(std::span<const LayerScores> per_client);

// Folds one epoch of non-straggler scores into the vote and streak counters
// and returns each layer's candidates, ranked by median score (ties by index).
// A neuron qualifies when a strict majority scored it below the layer
// threshold and its streak has reached `persistence`.
std::vector<std::vector<size_t>> VoteCandidates(std::span<const LayerScores> per_client,
                                                CalibrationState& state, int persistence);

// Mean over warmup epochs of each layer's smallest score.
std::vector<double> InitThreshold(std::span<const LayerScores> warmup_epochs);

// Multiplies a layer's threshold by `growth_factor` when it has fewer
// candidates than required drops. A zero threshold restarts from `floor`.
std::vector<double> GrowThreshold(std::span<const double> threshold,
                                  std::span<const size_t> required_drops,
                                  std::span<const size_t> candidate_counts,
                                  double growth_factor,
                                  std::span<const double> floor = {});

// Fraction of hidden neurons scoring strictly below their layer threshold.
double InvariantFraction(const LayerScores& scores, std::span<const double> threshold);
double InvariantFraction(const LayerScores& scores, double threshold);

}  // namespace fluid

#endif  // FLUID_INVARIANCE_H_
