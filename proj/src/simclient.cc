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

#include "fluid/simclient.h"

#include <algorithm>
#include <numeric>
#include <string>

#include "fluid/errors.h"

namespace fluid {

void ValidateClientSpec(const ClientSpec& spec) {
  const std::string who = "client " + std::to_string(spec.id);
  if (!(spec.base_epoch_time > 0.0)) throw ConfigError(who + ": base epoch time must be > 0");
  if (!(spec.noise_pct >= 0.0 && spec.noise_pct < 0.1)) {
    throw ConfigError(who + ": noise must be in [0, 0.1)");
  }
  for (const auto& w : spec.load_schedule) {
    if (!(w.slowdown >= 1.0)) throw ConfigError(who + ": slowdown must be >= 1");
    if (!(w.start >= 0.0 && w.start <= w.end && w.end <= 1.0)) {
      throw ConfigError(who + ": load window must satisfy 0 <= start <= end <= 1");
    }
  }
}

double ActiveSlowdown(const ClientSpec& spec, double progress) {
  double factor = 1.0;
  for (const auto& w : spec.load_schedule) {
    if (w.start <= progress && progress < w.end) factor *= w.slowdown;
  }
  return factor;
}

double SimulateEpochTime(const ClientSpec& spec, double rate, double progress, Rng& rng) {
  CheckRate(rate);
  const double u = UniformIn(rng, -spec.noise_pct, spec.noise_pct);
  return spec.base_epoch_time * rate * ActiveSlowdown(spec, progress) * (1.0 + u);
}

Model LocalTrain(const Model& model, const Dataset& train, const LocalTrainParams& params,
                 uint64_t seed) {
  if (train.size() == 0) throw DataError("client has no training examples");
  if (params.batch == 0) throw ConfigError("batch size must be >= 1");
  Rng rng(seed);
  std::vector<size_t> order(train.size());
  std::iota(order.begin(), order.end(), size_t{0});

  Model current = model;
  std::vector<size_t> batch_idx;
  for (int e = 0; e < params.epochs; ++e) {
    std::shuffle(order.begin(), order.end(), rng);
    for (size_t begin = 0; begin < order.size(); begin += params.batch) {
      const size_t end = std::min(order.size(), begin + params.batch);
      batch_idx.assign(order.begin() + static_cast<std::ptrdiff_t>(begin),
                       order.begin() + static_cast<std::ptrdiff_t>(end));
      const Dataset batch = train.Subset(batch_idx);
      const auto result = Backward(current, batch.features, batch.labels);
      current = SgdStep(current, result.gradients, params.lr);
    }
  }
  return current;
}

EvalResult Evaluate(const Model& model, const Dataset& test) {
  EvalResult r;
  r.examples = test.size();
  if (r.examples == 0) return r;
  r.accuracy = Accuracy(model, test.features, test.labels);
  r.loss = Loss(model, test.features, test.labels);
  return r;
}

ClientReport RunClient(const SimClient& client, const Model& global, const NeuronMask& mask,
                       const LocalTrainParams& params, double progress, uint64_t train_seed,
                       uint64_t time_seed) {
  Rng time_rng(time_seed);
  ClientReport report;
  report.id = client.spec.id;
  report.epoch_time = SimulateEpochTime(client.spec, mask.rate, progress, time_rng);
  SubModel sub = Extract(global, mask);
  report.update.params = LocalTrain(sub.model, client.train, params, train_seed);
  report.update.mask = std::move(sub.mask);
  report.update.example_count = client.train.size();
  return report;
}

}  // namespace fluid
