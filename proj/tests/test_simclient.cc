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

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "fluid/dropout.h"
#include "fluid/errors.h"
#include "fluid/simclient.h"

using namespace fluid;

namespace {

ClientSpec Spec(double base, double noise = 0.0, std::vector<LoadWindow> load = {}) {
  ClientSpec s;
  s.base_epoch_time = base;
  s.noise_pct = noise;
  s.load_schedule = std::move(load);
  return s;
}

Model SmallMlp(uint64_t seed) {
  const size_t hidden[] = {12, 8};
  return MakeMlp(6, hidden, 4, seed);
}

}  // namespace

TEST_CASE("local_train: lr 0 returns the received parameters") {
  const Model m = SmallMlp(1);
  const Dataset d = SynthGaussianBlobs(4, 6, 30, 2);
  LocalTrainParams p;
  p.lr = 0.0;
  p.epochs = 3;
  CHECK(LocalTrain(m, d, p, 9) == m);
}

TEST_CASE("local_train: loss drops after one epoch") {
  const Dataset d = SynthGaussianBlobs(4, 6, 50, 3);
  for (uint64_t seed = 1; seed <= 5; ++seed) {
    const Model m = SmallMlp(seed);
    const Model t = LocalTrain(m, d, LocalTrainParams{}, seed);
    CHECK(Loss(t, d.features, d.labels) < Loss(m, d.features, d.labels));
  }
}

TEST_CASE("local_train: deterministic per seed, empty slice rejected") {
  const Model m = SmallMlp(2);
  const Dataset d = SynthGaussianBlobs(4, 6, 20, 3);
  CHECK(LocalTrain(m, d, LocalTrainParams{}, 5) == LocalTrain(m, d, LocalTrainParams{}, 5));
  CHECK_FALSE(LocalTrain(m, d, LocalTrainParams{}, 5) == LocalTrain(m, d, LocalTrainParams{}, 6));
  CHECK_THROWS_AS(LocalTrain(m, d.Subset({}), LocalTrainParams{}, 5), DataError);
}

TEST_CASE("one full-model client with FedAvg equals centralized SGD") {
  const Model init = SmallMlp(4);
  SimClient client{Spec(1.0), SynthGaussianBlobs(4, 6, 25, 5), {}};
  LocalTrainParams p;
  p.epochs = 2;

  Model federated = init, central = init;
  for (uint64_t round = 0; round < 5; ++round) {
    const uint64_t seed = DeriveSeed(11, {round, 0, 1});
    const auto report = RunClient(client, federated, FullMask(federated), p, 0.0, seed, 0);
    federated = Merge(federated, std::vector<ClientUpdate>{report.update});
    central = LocalTrain(central, client.train, p, seed);
  }
  CHECK(federated == central);
}

TEST_CASE("simulate_epoch_time examples") {
  Rng rng(1);
  CHECK(SimulateEpochTime(Spec(10.0), 0.5, 0.0, rng) == 5.0);
  CHECK(SimulateEpochTime(Spec(10.0, 0.0, {{0.25, 0.5, 2.0}}), 1.0, 0.3, rng) == 20.0);
  CHECK_THROWS_AS(SimulateEpochTime(Spec(10.0), 0.0, 0.0, rng), RateError);
}

TEST_CASE("simulate_epoch_time: noisy draws stay within the noise band") {
  Rng rng(77);
  const ClientSpec s = Spec(10.0, 0.05);
  for (int i = 0; i < 1000; ++i) {
    const double t = SimulateEpochTime(s, 0.75, 0.5, rng);
    CHECK(t >= 7.125);
    CHECK(t <= 7.875);
  }
}

TEST_CASE("simulate_epoch_time is linear in r without noise") {
  const ClientSpec s = Spec(3.7, 0.0, {{0.0, 1.0, 1.5}});
  for (double r = 0.05; r <= 1.0; r += 0.05) {
    Rng a(1), b(1);
    const double full = SimulateEpochTime(s, 1.0, 0.4, a);
    CHECK(SimulateEpochTime(s, r, 0.4, b) / full == doctest::Approx(r).epsilon(1e-15));
  }
}

TEST_CASE("load windows apply on [start, end)") {
  const ClientSpec s = Spec(1.0, 0.0, {{0.25, 0.5, 2.0}, {0.4, 0.75, 3.0}});
  CHECK(ActiveSlowdown(s, 0.2499) == 1.0);
  CHECK(ActiveSlowdown(s, 0.25) == 2.0);
  CHECK(ActiveSlowdown(s, 0.4) == 6.0);
  CHECK(ActiveSlowdown(s, 0.5) == 3.0);
  CHECK(ActiveSlowdown(s, 0.75) == 1.0);
}

TEST_CASE("client spec validation") {
  CHECK_NOTHROW(ValidateClientSpec(Spec(1.0, 0.05, {{0.0, 1.0, 1.0}})));
  CHECK_THROWS_AS(ValidateClientSpec(Spec(0.0)), ConfigError);
  CHECK_THROWS_AS(ValidateClientSpec(Spec(1.0, 0.1)), ConfigError);
  CHECK_THROWS_AS(ValidateClientSpec(Spec(1.0, -0.01)), ConfigError);
  CHECK_THROWS_AS(ValidateClientSpec(Spec(1.0, 0.0, {{0.0, 1.0, 0.5}})), ConfigError);
  CHECK_THROWS_AS(ValidateClientSpec(Spec(1.0, 0.0, {{0.6, 0.5, 2.0}})), ConfigError);
}

TEST_CASE("run_client reports sub-model time and shape") {
  const Model m = SmallMlp(6);
  SimClient client{Spec(2.0), SynthGaussianBlobs(4, 6, 10, 1), SynthGaussianBlobs(4, 6, 3, 2)};
  client.spec.id = 7;
  const auto mask = MaskOrdered(m, 0.5);
  const auto report = RunClient(client, m, mask, LocalTrainParams{}, 0.0, 1, 2);
  CHECK(report.id == 7);
  CHECK(report.epoch_time == 1.0);
  CHECK(report.update.example_count == 40);
  CHECK(report.update.params.layers[0].out_neurons() == 6);
  CHECK(report.update.mask == mask);
  const auto eval = Evaluate(m, client.test);
  CHECK(eval.examples == 12);
  CHECK(eval.accuracy >= 0.0);
  CHECK(eval.accuracy <= 1.0);
}
