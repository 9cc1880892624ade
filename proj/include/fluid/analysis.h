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

#ifndef FLUID_ANALYSIS_H_
#define FLUID_ANALYSIS_H_

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace fluid::analysis {

// Gradient sparsification model: the k largest-magnitude entries are always
// sent, every other entry i survives with probability |g_i| / r.

// Copy of `g` sorted by descending magnitude (stable on ties).
std::vector<double> SortByMagnitude(std::span<const double> g);

// Throws InfeasibleRateError when some |g_i| / r exceeds 1. Entries with
// g_i = 0 beyond the prefix get p_i = 0.
std::vector<double> KeepProbabilities(std::span<const double> g, size_t k, double r);

struct SlackRate {
  double rate = 0.0;
  bool degenerate = false;  // no magnitude outside the top-k prefix
};

// r = sum_{i>k} |g_i| / ((1 + eps) sum g_i^2 - sum_{i<=k} g_i^2).
// Throws SlackError when eps <= 0 or the denominator is not positive.
SlackRate RateFromSlack(std::span<const double> g, size_t k, double eps);

// sum_{i<=k} g_i^2 + sum_{i>k} |g_i| / r - (1 + eps) sum g_i^2
double SlackResidual(std::span<const double> g, size_t k, double r, double eps);

struct MassBound {
  double rate = 0.0;
  double total_probability = 0.0;
  double bound = 0.0;  // k (1 + eps)
  bool holds = false;
};

// Sum of keep probabilities at the slack-derived rate against k (1 + eps).
MassBound ProbabilityMassBound(std::span<const double> g, size_t k, double eps);

enum class VarianceModel {
  kRetained,     // E[G_s^2] = sum g_i^2 p_i
  kAlternative,  // sum g_i^2 / p_i with p_i = r |g_i| (earlier draft formulation)
};

// Second moment of the sparsified vector under `model`. For kAlternative the
// keep probabilities are r |g_i| and `p` is ignored except for its length.
double SecondMoment(std::span<const double> g, std::span<const double> p,
                    VarianceModel model = VarianceModel::kRetained, double r = 0.0);

// Standard error of the Monte-Carlo estimator below after `trials` draws.
double SecondMomentStdError(std::span<const double> g, std::span<const double> p, size_t trials);

// Mean over trials of sum (kept g_i)^2 with independent Bernoulli(p_i) keeps.
double EmpiricalSecondMoment(std::span<const double> g, std::span<const double> p,
                             size_t trials, uint64_t seed);

struct GradientInstance {
  std::vector<double> g;  // sorted by magnitude
  size_t k = 0;
  double eps = 0.0;
};

// m entries with magnitudes Uniform(0, scale) and random signs.
GradientInstance RandomInstance(size_t m, size_t k, double eps, uint64_t seed,
                                double scale = 0.01);

// True when the slack rate exists and every keep probability is <= 1.
bool Feasible(const GradientInstance& inst);

}  // namespace fluid::analysis

#endif  // FLUID_ANALYSIS_H_
