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

#include "fluid/orchestrator.h"

#include <algorithm>
#include <cmath>
#include <future>
#include <numeric>
#include <string>

#include "fluid/errors.h"
#include "fluid/rng.h"

namespace fluid {
namespace {

enum StreamTag : uint64_t { kTagTrain = 1, kTagTime = 2, kTagMask = 3 };

std::vector<size_t> SlowestFirst(std::span<const double> times) {
  std::vector<size_t> order(times.size());
  std::iota(order.begin(), order.end(), size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](size_t a, size_t b) { return times[a] > times[b]; });
  return order;
}

}  // namespace

StragglerSelection IdentifyStragglers(std::span<const double> times,
                                      const StragglerPolicy& policy) {
  if (times.size() < 2) throw ConfigError("straggler identification needs >= 2 clients");
  const auto order = SlowestFirst(times);
  const size_t clients = times.size();

  size_t count = 1;
  if (policy.kind != StragglerPolicy::Kind::kSlowestOne) {
    if (!(policy.fraction >= 0.0 && policy.fraction < 1.0)) {
      throw ConfigError("straggler fraction must be in [0, 1)");
    }
    count = static_cast<size_t>(std::ceil(policy.fraction * static_cast<double>(clients) - 1e-9));
    count = std::min(count, clients - 1);
  }

  StragglerSelection sel;
  sel.stragglers.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(count));
  sel.target_time = times[order[count]];
  const int k = policy.kind == StragglerPolicy::Kind::kCluster ? policy.clusters : 1;
  if (k < 1) throw ConfigError("cluster count must be >= 1");
  for (size_t i = 0; i < count; ++i) {
    sel.group.push_back(static_cast<int>(i * static_cast<size_t>(k) / count));
  }
  return sel;
}

double ComputeSpeedup(double straggler_time, double target_time) {
  if (!(straggler_time > 0.0) || !(target_time > 0.0)) {
    throw MeasurementError("epoch times must be positive");
  }
  return straggler_time / target_time;
}

double SelectRate(double speedup, std::span<const double> available) {
  if (available.empty()) throw ConfigError("available rate set is empty");
  for (double r : available) CheckRate(r);
  const double goal = 1.0 / speedup;
  double best = available.front();
  double best_gap = std::abs(best - goal);
  for (double r : available) {
    const double gap = std::abs(r - goal);
    if (gap < best_gap - 1e-12 || (std::abs(gap - best_gap) <= 1e-12 && r > best)) {
      best = r;
      best_gap = gap;
    }
  }
  return best;
}

std::vector<double> AssignRates(const StragglerSelection& selection,
                                std::span<const double> times,
                                std::span<const double> available,
                                std::optional<double> forced) {
  std::vector<double> rates(times.size(), 1.0);
  if (forced) CheckRate(*forced);
  for (size_t i = 0; i < selection.stragglers.size(); ++i) {
    const size_t c = selection.stragglers[i];
    if (forced) {
      rates[c] = *forced;
      continue;
    }
    // Stragglers are sorted slowest first, so the group's first member sets
    // the group's required speedup.
    size_t lead = i;
    while (lead > 0 && selection.group[lead - 1] == selection.group[i]) --lead;
    const double t = times[selection.stragglers[lead]];
    rates[c] = SelectRate(ComputeSpeedup(t, selection.target_time), available);
  }
  return rates;
}

EvalResult WeightedEval(std::span<const EvalResult> reports) {
  EvalResult out;
  double acc = 0.0, loss = 0.0;
  for (const auto& r : reports) {
    const auto n = static_cast<double>(r.examples);
    acc += r.accuracy * n;
    loss += r.loss * n;
    out.examples += r.examples;
  }
  if (out.examples == 0) throw MetricError("no evaluation examples across clients");
  out.accuracy = acc / static_cast<double>(out.examples);
  out.loss = loss / static_cast<double>(out.examples);
  return out;
}

double CalibrationOverhead(const RoundRecord& record) {
  return record.round_time > 0.0 ? record.calibration_time / record.round_time : 0.0;
}

void ValidateFluidConfig(const FluidConfig& config, size_t clients) {
  if (clients < 2) throw ConfigError("need at least 2 clients");
  if (config.rates.empty()) throw ConfigError("rate set is empty");
  for (double r : config.rates) {
    if (!(r > 0.0 && r <= 1.0)) throw ConfigError("rate " + std::to_string(r) + " outside (0, 1]");
  }
  if (config.forced_rate && !(*config.forced_rate > 0.0 && *config.forced_rate <= 1.0)) {
    throw ConfigError("forced rate outside (0, 1]");
  }
  if (config.calibration.warmup < 1) throw ConfigError("warmup must be >= 1");
  if (config.rounds < config.calibration.warmup + 1) throw ConfigError("rounds must be >= warmup + 1");
  if (config.calibration.persistence < 1) throw ConfigError("persistence must be >= 1");
  if (!(config.calibration.growth_factor >= 1.0)) throw ConfigError("growth factor must be >= 1");
  if (!(config.calibration.delta > 0.0)) throw ConfigError("delta must be > 0");
  if (config.cadence < 0) throw ConfigError("cadence must be >= 0");
  if (!(config.server_overhead >= 0.0)) throw ConfigError("server overhead must be >= 0");
  if (config.train.epochs < 1) throw ConfigError("local epochs must be >= 1");
  if (!(config.train.lr >= 0.0)) throw ConfigError("learning rate must be >= 0");
  if (config.train.batch < 1) throw ConfigError("batch must be >= 1");
  if (config.fixed_threshold && !(*config.fixed_threshold >= 0.0)) {
    throw ConfigError("fixed threshold must be >= 0");
  }
}

Orchestrator::Orchestrator(Model initial, std::vector<SimClient> clients, FluidConfig config,
                           uint64_t seed)
    : global_(std::move(initial)),
      clients_(std::move(clients)),
      config_(std::move(config)),
      seed_(seed) {
  ValidateModel(global_);
  ValidateFluidConfig(config_, clients_.size());
  // Seeds and merge order follow client id, not the caller's ordering.
  std::stable_sort(clients_.begin(), clients_.end(),
                   [](const SimClient& a, const SimClient& b) { return a.spec.id < b.spec.id; });
  for (size_t c = 1; c < clients_.size(); ++c) {
    if (clients_[c].spec.id == clients_[c - 1].spec.id) {
      throw ConfigError("duplicate client id " + std::to_string(clients_[c].spec.id));
    }
  }
  double mean_base = 0.0;
  for (const auto& c : clients_) {
    ValidateClientSpec(c.spec);
    if (c.train.size() == 0) throw DataError("client " + std::to_string(c.spec.id) + " has no training data");
    mean_base += c.spec.base_epoch_time;
    profiles_.push_back({c.spec.id, 0.0, 0.0, false, 1.0, -1});
  }
  mean_base /= static_cast<double>(clients_.size());
  server_seconds_ = config_.server_overhead * mean_base * config_.train.epochs;
  calibration_ = CalibrationState::For(global_);
}

NeuronMask Orchestrator::MaskFor(size_t client, double rate) const {
  if (rate >= 1.0) return FullMask(global_);
  switch (config_.strategy) {
    case DropoutStrategy::kNone:
      return FullMask(global_);
    case DropoutStrategy::kRandom:
      return MaskRandom(global_, rate,
                        DeriveSeed(seed_, {static_cast<uint64_t>(round_), client, kTagMask}));
    case DropoutStrategy::kOrdered:
      return MaskOrdered(global_, rate);
    case DropoutStrategy::kInvariant:
      return MaskInvariant(global_, rate, candidates_, last_scores_);
  }
  return FullMask(global_);
}

std::vector<ClientReport> Orchestrator::TrainClients(const std::vector<NeuronMask>& masks,
                                                     double progress) {
  auto run = [&](size_t c) {
    const auto r = static_cast<uint64_t>(round_);
    return RunClient(clients_[c], global_, masks[c], config_.train, progress,
                     DeriveSeed(seed_, {r, c, kTagTrain}), DeriveSeed(seed_, {r, c, kTagTime}));
  };
  std::vector<ClientReport> reports(clients_.size());
  if (config_.threads <= 1) {
    for (size_t c = 0; c < clients_.size(); ++c) reports[c] = run(c);
    return reports;
  }
  // Results land in id order regardless of completion order.
  const auto workers = static_cast<size_t>(config_.threads);
  for (size_t begin = 0; begin < clients_.size(); begin += workers) {
    std::vector<std::future<ClientReport>> pending;
    const size_t end = std::min(clients_.size(), begin + workers);
    for (size_t c = begin; c < end; ++c) pending.push_back(std::async(std::launch::async, run, c));
    for (size_t c = begin; c < end; ++c) reports[c] = pending[c - begin].get();
  }
  return reports;
}

void Orchestrator::Calibrate(const std::vector<ClientReport>& reports, const Model& sent,
                             bool warm, RoundRecord& record) {
  const auto& params = config_.calibration;
  std::vector<LayerScores> voters;
  for (size_t c = 0; c < reports.size(); ++c) {
    if (profiles_[c].straggler) continue;
    if (!reports[c].update.mask.full()) continue;
    voters.push_back(ScoreModel(sent, reports[c].update.params, params.delta));
  }
  if (voters.empty()) return;
  const LayerScores median = MedianScores(voters);

  if (warm) {
    warmup_scores_.push_back(median);
    if (round_ + 1 == params.warmup) {
      calibration_.threshold =
          config_.fixed_threshold
              ? std::vector<double>(calibration_.threshold.size(), *config_.fixed_threshold)
              : InitThreshold(warmup_scores_);
    }
  } else {
    candidates_ = VoteCandidates(voters, calibration_, params.persistence);
    if (!config_.fixed_threshold) {
      std::vector<size_t> required(candidates_.size(), 0);
      std::vector<size_t> have(candidates_.size(), 0);
      std::vector<double> floor(candidates_.size(), 0.0);
      for (size_t j = 0; j < candidates_.size(); ++j) {
        const size_t n = global_.layers[j].out_neurons();
        for (const auto& p : profiles_) {
          if (p.straggler) required[j] = std::max(required[j], n - KeptCount(p.rate, n));
        }
        have[j] = candidates_[j].size();
        for (double g : median[j]) {
          if (g > 0.0 && (floor[j] == 0.0 || g < floor[j])) floor[j] = g;
        }
      }
      calibration_.threshold = GrowThreshold(calibration_.threshold, required, have,
                                             params.growth_factor, floor);
    }
  }
  last_scores_ = median;
  last_fraction_ = InvariantFraction(median, calibration_.threshold);
  record.scores = median;
  record.calibrated = true;
  record.calibration_time = server_seconds_;
}

void Orchestrator::Reprofile(const std::vector<ClientReport>& reports) {
  std::vector<double> full_times(reports.size());
  for (size_t c = 0; c < reports.size(); ++c) {
    profiles_[c].last_time = reports[c].epoch_time;
    profiles_[c].full_model_time = reports[c].epoch_time / reports[c].update.mask.rate;
    full_times[c] = profiles_[c].full_model_time;
  }
  const auto selection = IdentifyStragglers(full_times, config_.policy);
  auto rates = AssignRates(selection, full_times, config_.rates, config_.forced_rate);
  if (config_.strategy == DropoutStrategy::kNone) std::fill(rates.begin(), rates.end(), 1.0);
  for (auto& p : profiles_) {
    p.straggler = false;
    p.cluster = -1;
  }
  for (size_t i = 0; i < selection.stragglers.size(); ++i) {
    auto& p = profiles_[selection.stragglers[i]];
    p.straggler = true;
    p.cluster = selection.group[i];
  }
  for (size_t c = 0; c < profiles_.size(); ++c) profiles_[c].rate = rates[c];
}

RoundRecord Orchestrator::RunRound() {
  if (round_ >= config_.rounds) throw CalibrationError("all rounds already ran");
  const bool warm = round_ < config_.calibration.warmup;
  const double progress = static_cast<double>(round_) / static_cast<double>(config_.rounds);

  RoundRecord record;
  record.round = round_;
  std::vector<NeuronMask> masks;
  for (size_t c = 0; c < clients_.size(); ++c) {
    const double rate = warm ? 1.0 : profiles_[c].rate;
    masks.push_back(MaskFor(c, rate));
    masks.back().rate = rate;
    record.rates.push_back(rate);
    if (profiles_[c].straggler) record.stragglers.push_back(clients_[c].spec.id);
  }

  const Model sent = global_;
  const auto reports = TrainClients(masks, progress);

  std::vector<ClientUpdate> updates;
  double slowest = 0.0;
  for (const auto& r : reports) {
    updates.push_back(r.update);
    const double t = r.epoch_time * config_.train.epochs;
    record.client_times.push_back(t);
    slowest = std::max(slowest, t);
  }
  global_ = Merge(global_, updates);

  std::vector<EvalResult> evals;
  for (const auto& c : clients_) evals.push_back(Evaluate(global_, c.test));
  const auto overall = WeightedEval(evals);
  record.accuracy = overall.accuracy;
  record.loss = overall.loss;

  const int since = round_ - config_.calibration.warmup;
  const bool calibrate =
      warm || (config_.cadence > 0 && since % config_.cadence == 0);
  if (calibrate) {
    Calibrate(reports, sent, warm, record);
    Reprofile(reports);
  }
  record.thresholds = calibration_.threshold;
  record.invariant_fraction = last_fraction_;
  record.round_time = slowest + server_seconds_;
  ++round_;
  return record;
}

std::vector<RoundRecord> Orchestrator::Run() {
  std::vector<RoundRecord> out;
  while (round_ < config_.rounds) out.push_back(RunRound());
  return out;
}

}  // namespace fluid
