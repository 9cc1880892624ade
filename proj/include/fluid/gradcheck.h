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

#ifndef FLUID_GRADCHECK_H_
#define FLUID_GRADCHECK_H_

#include <cstdint>
#include <span>

#include "fluid/nn.h"

namespace fluid {

// |a - b| / max(|a|, |b|, floor)
double RelativeError(double a, double b, double floor = 1e-8);

// Largest relative error between Backward() and central differences of Loss().
double MaxGradientError(const Model& model, const Matrix& batch, std::span<const int> labels,
                        double h = 1e-5);

struct GradCheckReport {
  int trials = 0;
  double max_relative_error = 0.0;
};

// Seeded 3-layer models on random batches.
GradCheckReport RunGradientCheck(int trials, uint64_t seed);

}  // namespace fluid

#endif  // FLUID_GRADCHECK_H_
