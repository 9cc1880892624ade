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

#ifndef FLUID_DROPOUT_H_
#define FLUID_DROPOUT_H_

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "fluid/nn.h"

namespace fluid {

// Keep-vectors for every hidden layer. The output layer and the input
// features are never masked.
struct NeuronMask {
  std::vector<std::vector<bool>> keep;
  double rate = 1.0;

  size_t kept(size_t layer) const;
  bool full() const;

  bool operator==(const NeuronMask&) const = default;
};

struct SubModel {
  Model model;
  NeuronMask mask;
};

// A client's trained parameters (sub-model shaped when the mask drops
// neurons) plus the weight it carries in aggregation.
struct ClientUpdate {
  Model params;
  NeuronMask mask;
  size_t example_count = 0;
};

enum class DropoutStrategy { kNone, kRandom, kOrdered, kInvariant };

// round(r * n) rounded half-up, never below 1.
size_t KeptCount(double rate, size_t neurons);

// Throws RateError unless 0 < rate <= 1.
void CheckRate(double rate);

NeuronMask FullMask(const Model& model);

NeuronMask MaskRandom(const Model& model, double rate, uint64_t seed);

// Keeps the lowest-index neurons of every hidden layer.
NeuronMask MaskOrdered(const Model& model, double rate);

// `candidates[j]` lists layer j's drop candidates, most invariant first. When
// there are too few, the remaining drops are the non-candidates with the
// lowest `scores[j]` (ties by index). Empty `scores` means all zero.
NeuronMask MaskInvariant(const Model& model, double rate,
                         const std::vector<std::vector<size_t>>& candidates,
                         const std::vector<std::vector<double>>& scores);

void CheckMask(const Model& model, const NeuronMask& mask);

// Removes each dropped neuron's weight row and bias, and the matching column
// of the next layer.
SubModel Extract(const Model& model, const NeuronMask& mask);

// Per-coordinate example-weighted mean over the clients whose mask kept the
// coordinate. Coordinates nobody kept keep their global value.
Model Merge(const Model& global, std::span<const ClientUpdate> updates);

}  // namespace fluid

#endif  // FLUID_DROPOUT_H_
