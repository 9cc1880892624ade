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

#ifndef FLUID_ORCHESTRATOR_H_
#define FLUID_ORCHESTRATOR_H_

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "fluid/dropout.h"
#include "fluid/invariance.h"
#include "fluid/nn.h"
#include "fluid/simclient.h"

namespace fluid {

struct StragglerPolicy {
  enum class Kind { kSlowestOne, kSlowestPct, kCluster };
  Kind kind = Kind::kSlowestOne;
  double fraction = 0.2;  // kSlowestPct and kCluster
  int clusters = 4;       // kCluster

  static StragglerPolicy SlowestOne() { return {}; }
  static StragglerPolicy SlowestPct(double p) { return {Kind::kSlowestPct, p, 1}; }
  static StragglerPolicy Cluster(int k, double p) { return {Kind::kCluster, p, k}; }
};

struct StragglerSelection {
  std::vector<size_t> stragglers;  // client indices, slowest first
  std::vector<int> group;          // cluster of each straggler, aligned with `stragglers`
  double target_time = 0.0;
};

StragglerSelection IdentifyStragglers(std::span<const double> times,
                                      const StragglerPolicy& policy);

double ComputeSpeedup(double straggler_time, double target_time);

// Rate nearest to 1 / speedup; ties go to the larger rate.
double SelectRate(double speedup, std::span<const double> available);

// Per-client rates: 1 for non-stragglers, otherwise `forced` or the rate
// matching the straggler's (or its cluster's) speedup.
std::vector<double> AssignRates(const StragglerSelection& selection,
                                std::span<const double> times,
                                std::span<const double> available,
                                std::optional<double> forced);

struct ClientProfile {
  int id = 0;
  double last_time = 0.0;        // measured epoch time
  double full_model_time = 0.0;  // last_time scaled back to r = 1
  bool straggler = false;
  double rate = 1.0;
  int cluster = -1;
};

struct RoundRecord {
  int round = 0;
  std::vector<double> client_times;
  std::vector<int> stragglers;  // client ids
  std::vector<double> rates;    // per client
  std::vector<double> thresholds;
  double accuracy = 0.0;
  double loss = 0.0;
  double invariant_fraction = 0.0;
  double round_time = 0.0;
  double calibration_time = 0.0;
  bool calibrated = false;
  LayerScores scores;  // median non-straggler scores, empty when not calibrated
};

// Example-weighted mean accuracy and loss.
EvalResult WeightedEval(std::span<const EvalResult> reports);

double CalibrationOverhead(const RoundRecord& record);

struct FluidConfig {
  DropoutStrategy strategy = DropoutStrategy::kInvariant;
  std::vector<double> rates = {0.5, 0.65, 0.75, 0.85, 0.95, 1.0};
  std::optional<double> forced_rate;
  StragglerPolicy policy;
  int rounds = 30;
  LocalTrainParams train;
  CalibrationParams calibration;
  int cadence = 1;  // calibrate every N post-warmup rounds, 0 = never
  double server_overhead = 0.01;  // fraction of mean full-model client time
  std::optional<double> fixed_threshold;
  int threads = 1;
};

void ValidateFluidConfig(const FluidConfig& config, size_t clients);

// The synchronous FL control loop with straggler-aware dropout.
class Orchestrator {
 public:
  Orchestrator(Model initial, std::vector<SimClient> clients, FluidConfig config,
               uint64_t seed);

  RoundRecord RunRound();
  std::vector<RoundRecord> Run();

  int round() const { return round_; }
  const Model& global() const { return global_; }
  const std::vector<ClientProfile>& profiles() const { return profiles_; }
  const CalibrationState& calibration() const { return calibration_; }
  const FluidConfig& config() const { return config_; }
  double server_overhead_seconds() const { return server_seconds_; }

 private:
  NeuronMask MaskFor(size_t client, double rate) const;
  std::vector<ClientReport> TrainClients(const std::vector<NeuronMask>& masks, double progress);
  void Calibrate(const std::vector<ClientReport>& reports, const Model& sent, bool warm,
                 RoundRecord& record);
  void Reprofile(const std::vector<ClientReport>& reports);

  Model global_;
  std::vector<SimClient> clients_;
  FluidConfig config_;
  uint64_t seed_;
  int round_ = 0;
  double server_seconds_ = 0.0;

  std::vector<ClientProfile> profiles_;
  CalibrationState calibration_;
  std::vector<LayerScores> warmup_scores_;
  std::vector<std::vector<size_t>> candidates_;
  LayerScores last_scores_;
  double last_fraction_ = 0.0;
};

}  // namespace fluid

#endif  // FLUID_ORCHESTRATOR_H_
