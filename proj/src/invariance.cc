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

#include "fluid/invariance.h"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "fluid/errors.h"

namespace fluid {
namespace {

void CheckSameShape(const LayerScores& a, const LayerScores& b) {
  if (a.size() != b.size()) throw ShapeError("score sets cover different layer counts");
  for (size_t j = 0; j < a.size(); ++j) {
    if (a[j].size() != b[j].size()) {
      throw ShapeError("score sets differ in layer " + std::to_string(j));
    }
  }
}

double Median(std::vector<double> v) {
  const size_t mid = v.size() / 2;
  std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid), v.end());
  const double upper = v[mid];
  if (v.size() % 2 == 1) return upper;
  const double lower = *std::max_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid));
  return 0.5 * (lower + upper);
}

}  // namespace

CalibrationState CalibrationState::For(const Model& model) {
  CalibrationState state;
  for (size_t j = 0; j < model.hidden_layer_count(); ++j) {
    const size_t n = model.layers[j].out_neurons();
    state.threshold.push_back(0.0);
    state.votes.emplace_back(n, 0);
    state.below_streak.emplace_back(n, 0);
  }
  return state;
}

double NeuronScore(std::span<const double> prev, std::span<const double> cur, double delta) {
  if (prev.size() != cur.size()) throw ShapeError("neuron parameter length mismatch");
  double g = 0.0;
  for (size_t p = 0; p < prev.size(); ++p) {
    g = std::max(g, std::abs(cur[p] - prev[p]) / (std::abs(prev[p]) + delta));
  }
  return g;
}

LayerScores ScoreModel(const Model& sent, const Model& trained, double delta) {
  if (sent.layers.size() != trained.layers.size()) {
    throw ShapeError("scored models differ in depth");
  }
  LayerScores scores;
  std::vector<double> prev, cur;
  for (size_t j = 0; j < sent.hidden_layer_count(); ++j) {
    const auto& a = sent.layers[j];
    const auto& b = trained.layers[j];
    if (a.weights.rows() != b.weights.rows() || a.weights.cols() != b.weights.cols()) {
      throw ShapeError("scoring needs full-model updates");
    }
    std::vector<double> layer(a.out_neurons());
    for (size_t i = 0; i < a.out_neurons(); ++i) {
      prev.assign(a.weights.row(i).begin(), a.weights.row(i).end());
      prev.push_back(a.biases[i]);
      cur.assign(b.weights.row(i).begin(), b.weights.row(i).end());
      cur.push_back(b.biases[i]);
      layer[i] = NeuronScore(prev, cur, delta);
    }
    scores.push_back(std::move(layer));
  }
  return scores;
}

LayerScores MedianScores(std::span<const LayerScores> per_client) {
  if (per_client.empty()) throw EmptyInputError("no score sets");
  for (const auto& c : per_client) CheckSameShape(per_client.front(), c);
  LayerScores out = per_client.front();
  std::vector<double> column(per_client.size());
  for (size_t j = 0; j < out.size(); ++j) {
    for (size_t i = 0; i < out[j].size(); ++i) {
      for (size_t c = 0; c < per_client.size(); ++c) {
        column[c] = per_client[c][j][i];
      }
      out[j][i] = Median(column);
    }
  }
  return out;
}

std::vector<std::vector<size_t>> VoteCandidates(std::span<const LayerScores> per_client,
                                                CalibrationState& state, int persistence) {
  if (per_client.empty()) throw EmptyInputError("vote needs at least one non-straggler");
  const LayerScores median = MedianScores(per_client);
  bool fits = median.size() == state.threshold.size() && median.size() == state.votes.size() &&
              median.size() == state.below_streak.size();
  for (size_t j = 0; fits && j < median.size(); ++j) {
    fits = median[j].size() == state.votes[j].size() && median[j].size() == state.below_streak[j].size();
  }
  if (!fits) throw ShapeError("scores do not match calibration state");
  const int voters = static_cast<int>(per_client.size());
  std::vector<std::vector<size_t>> candidates(median.size());
  for (size_t j = 0; j < median.size(); ++j) {
    const double th = state.threshold[j];
    for (size_t i = 0; i < median[j].size(); ++i) {
      int below = 0;
      for (const auto& client : per_client) {
        if (client[j][i] < th) ++below;
      }
      state.votes[j][i] = below;
      const bool majority = 2 * below > voters;
      int& streak = state.below_streak[j][i];
      streak = majority ? streak + 1 : 0;
      if (majority && streak >= persistence) candidates[j].push_back(i);
    }
    std::stable_sort(candidates[j].begin(), candidates[j].end(),
                     [&](size_t a, size_t b) { return median[j][a] < median[j][b]; });
  }
  ++state.epochs;
  return candidates;
}

std::vector<double> InitThreshold(std::span<const LayerScores> warmup_epochs) {
  if (warmup_epochs.empty()) throw CalibrationError("no warmup scores to calibrate from");
  std::vector<double> th(warmup_epochs.front().size(), 0.0);
  for (const auto& epoch : warmup_epochs) {
    if (epoch.size() != th.size()) throw CalibrationError("warmup epochs differ in layer count");
    for (size_t j = 0; j < th.size(); ++j) {
      if (epoch[j].empty()) throw CalibrationError("layer " + std::to_string(j) + " has no scores");
      th[j] += *std::min_element(epoch[j].begin(), epoch[j].end());
    }
  }
  for (double& t : th) t /= static_cast<double>(warmup_epochs.size());
  return th;
}

std::vector<double> GrowThreshold(std::span<const double> threshold,
                                  std::span<const size_t> required_drops,
                                  std::span<const size_t> candidate_counts,
                                  double growth_factor, std::span<const double> floor) {
  if (required_drops.size() != threshold.size() || candidate_counts.size() != threshold.size()) {
    throw ShapeError("threshold growth inputs differ in layer count");
  }
  if (!(growth_factor >= 1.0)) throw CalibrationError("growth factor must be >= 1");
  std::vector<double> out(threshold.begin(), threshold.end());
  for (size_t j = 0; j < out.size(); ++j) {
    if (candidate_counts[j] >= required_drops[j]) continue;
    out[j] *= growth_factor;
    if (out[j] <= 0.0 && j < floor.size()) out[j] = floor[j];
  }
  return out;
}

double InvariantFraction(const LayerScores& scores, std::span<const double> threshold) {
  if (threshold.size() != scores.size()) throw ShapeError("one threshold per layer required");
  size_t total = 0, below = 0;
  for (size_t j = 0; j < scores.size(); ++j) {
    total += scores[j].size();
    below += static_cast<size_t>(std::count_if(scores[j].begin(), scores[j].end(),
                                               [&](double g) { return g < threshold[j]; }));
  }
  return total == 0 ? 0.0 : static_cast<double>(below) / static_cast<double>(total);
}

double InvariantFraction(const LayerScores& scores, double threshold) {
  return InvariantFraction(scores, std::vector<double>(scores.size(), threshold));
}

}  // namespace fluid
