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

#include "fluid/analysis.h"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "fluid/errors.h"
#include "fluid/rng.h"

namespace fluid::analysis {
namespace {

constexpr double kProbabilitySlack = 1e-12;

void CheckPrefix(std::span<const double> g, size_t k) {
  if (k > g.size()) {
    throw DimensionError("prefix k=" + std::to_string(k) + " exceeds length " +
                         std::to_string(g.size()));
  }
  for (size_t i = 1; i < g.size(); ++i) {
    if (std::abs(g[i]) > std::abs(g[i - 1])) {
      throw DimensionError("gradient must be sorted by descending magnitude");
    }
  }
}

struct Sums {
  double head_sq = 0.0;  // sum_{i<=k} g_i^2
  double all_sq = 0.0;   // sum g_i^2
  double tail_abs = 0.0; // sum_{i>k} |g_i|
};

Sums Accumulate(std::span<const double> g, size_t k) {
  Sums s;
  for (size_t i = 0; i < g.size(); ++i) {
    s.all_sq += g[i] * g[i];
    if (i < k) {
      s.head_sq += g[i] * g[i];
    } else {
      s.tail_abs += std::abs(g[i]);
    }
  }
  return s;
}

}  // namespace

std::vector<double> SortByMagnitude(std::span<const double> g) {
  std::vector<double> out(g.begin(), g.end());
  std::stable_sort(out.begin(), out.end(),
                   [](double a, double b) { return std::abs(a) > std::abs(b); });
  return out;
}

std::vector<double> KeepProbabilities(std::span<const double> g, size_t k, double r) {
  CheckPrefix(g, k);
  std::vector<double> p(g.size(), 1.0);
  for (size_t i = k; i < g.size(); ++i) {
    const double mag = std::abs(g[i]);
    if (mag == 0.0) {
      p[i] = 0.0;
      continue;
    }
    if (!(r > 0.0)) throw InfeasibleRateError("rate must be > 0 for a non-zero tail");
    const double pi = mag / r;
    if (pi > 1.0 + kProbabilitySlack) {
      throw InfeasibleRateError("|g_" + std::to_string(i) + "| / r = " + std::to_string(pi) +
                                " exceeds 1");
    }
    p[i] = std::min(pi, 1.0);
  }
  return p;
}

SlackRate RateFromSlack(std::span<const double> g, size_t k, double eps) {
  CheckPrefix(g, k);
  if (!(eps > 0.0)) throw SlackError("slack eps must be > 0");
  const Sums s = Accumulate(g, k);
  const double denom = (1.0 + eps) * s.all_sq - s.head_sq;
  if (!(denom > 0.0)) throw SlackError("slack denominator is not positive");
  return {s.tail_abs / denom, s.tail_abs == 0.0};
}

double SlackResidual(std::span<const double> g, size_t k, double r, double eps) {
  CheckPrefix(g, k);
  const Sums s = Accumulate(g, k);
  const double tail = s.tail_abs == 0.0 ? 0.0 : s.tail_abs / r;
  return s.head_sq + tail - (1.0 + eps) * s.all_sq;
}

MassBound ProbabilityMassBound(std::span<const double> g, size_t k, double eps) {
  MassBound out;
  out.rate = RateFromSlack(g, k, eps).rate;
  const auto p = KeepProbabilities(g, k, out.rate);
  out.total_probability = std::accumulate(p.begin(), p.end(), 0.0);
  out.bound = static_cast<double>(k) * (1.0 + eps);
  out.holds = out.total_probability <= out.bound + 1e-12;
  return out;
}

double SecondMoment(std::span<const double> g, std::span<const double> p, VarianceModel model,
                    double r) {
  if (p.size() != g.size()) throw DimensionError("probability vector length mismatch");
  double total = 0.0;
  for (size_t i = 0; i < g.size(); ++i) {
    if (model == VarianceModel::kRetained) {
      total += g[i] * g[i] * p[i];
    } else {
      const double q = r * std::abs(g[i]);
      if (q > 0.0) total += g[i] * g[i] / q;
    }
  }
  return total;
}

double SecondMomentStdError(std::span<const double> g, std::span<const double> p,
                            size_t trials) {
  if (p.size() != g.size()) throw DimensionError("probability vector length mismatch");
  double var = 0.0;
  for (size_t i = 0; i < g.size(); ++i) {
    const double sq = g[i] * g[i];
    var += sq * sq * p[i] * (1.0 - p[i]);
  }
  return std::sqrt(var / static_cast<double>(std::max<size_t>(trials, 1)));
}

double EmpiricalSecondMoment(std::span<const double> g, std::span<const double> p,
                             size_t trials, uint64_t seed) {
  if (p.size() != g.size()) throw DimensionError("probability vector length mismatch");
  if (trials == 0) throw DimensionError("trials must be >= 1");
  Rng rng(seed);
  double total = 0.0;
  for (size_t t = 0; t < trials; ++t) {
    double kept = 0.0;
    for (size_t i = 0; i < g.size(); ++i) {
      if (Uniform01(rng) < p[i]) kept += g[i] * g[i];
    }
    total += kept;
  }
  return total / static_cast<double>(trials);
}

GradientInstance RandomInstance(size_t m, size_t k, double eps, uint64_t seed, double scale) {
  if (m == 0 || k > m) throw DimensionError("need m >= 1 and k <= m");
  Rng rng(seed);
  std::vector<double> g(m);
  for (double& v : g) {
    v = UniformIn(rng, 0.0, scale);
    if (rng() & 1) v = -v;
  }
  return {SortByMagnitude(g), k, eps};
}

bool Feasible(const GradientInstance& inst) {
  try {
    const auto rate = RateFromSlack(inst.g, inst.k, inst.eps);
    KeepProbabilities(inst.g, inst.k, rate.rate);
    return true;
  } catch (const SlackError&) {
    return false;
  } catch (const InfeasibleRateError&) {
    return false;
  }
}

}  // namespace fluid::analysis
