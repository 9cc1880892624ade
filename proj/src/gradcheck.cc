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

#include "fluid/gradcheck.h"

#include <algorithm>
#include <cmath>
#include <vector>

#include "fluid/rng.h"

namespace fluid {

double RelativeError(double a, double b, double floor) {
  return std::abs(a - b) / std::max({std::abs(a), std::abs(b), floor});
}

double MaxGradientError(const Model& model, const Matrix& batch, std::span<const int> labels,
                        double h) {
  const auto analytic = Backward(model, batch, labels).gradients;
  Model probe = model;
  double worst = 0.0;
  auto check = [&](double& param, double grad) {
    const double saved = param;
    param = saved + h;
    const double up = Loss(probe, batch, labels);
    param = saved - h;
    const double down = Loss(probe, batch, labels);
    param = saved;
    worst = std::max(worst, RelativeError(grad, (up - down) / (2.0 * h)));
  };
  for (size_t j = 0; j < probe.layers.size(); ++j) {
    auto& layer = probe.layers[j];
    for (size_t k = 0; k < layer.weights.size(); ++k) {
      check(layer.weights.data()[k], analytic.layers[j].weights.data()[k]);
    }
    for (size_t k = 0; k < layer.biases.size(); ++k) {
      check(layer.biases[k], analytic.layers[j].biases[k]);
    }
  }
  return worst;
}

GradCheckReport RunGradientCheck(int trials, uint64_t seed) {
  GradCheckReport report;
  for (int t = 0; t < trials; ++t) {
    const uint64_t s = DeriveSeed(seed, {static_cast<uint64_t>(t)});
    Rng rng(s);
    const size_t inputs = 4, classes = 3, rows = 6;
    const size_t hidden[] = {5, 4};
    Model model = MakeMlp(inputs, hidden, classes, s);
    for (auto& layer : model.layers) {
      for (double& b : layer.biases) b = UniformIn(rng, -0.5, 0.5);
    }
    Matrix batch(rows, inputs);
    for (double& v : batch.data()) v = UniformIn(rng, -2.0, 2.0);
    std::vector<int> labels(rows);
    for (int& y : labels) y = static_cast<int>(rng() % classes);
    report.max_relative_error = std::max(report.max_relative_error, MaxGradientError(model, batch, labels));
    ++report.trials;
  }
  return report;
}

}  // namespace fluid
