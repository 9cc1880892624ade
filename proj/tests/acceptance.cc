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

// Acceptance suite: one line per criterion, exit status 1 if any fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <map>
#include <numeric>
#include <string>
#include <vector>

#include "fluid/analysis.h"
#include "fluid/config.h"
#include "fluid/experiment.h"
#include "fluid/gradcheck.h"
#include "fluid/invariance.h"
#include "fluid/rng.h"
#include "fluid/simclient.h"

namespace {

using namespace fluid;
namespace an = fluid::analysis;

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string Fmt(const char* fmt, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof(buf), fmt, args...);
  return buf;
}

ExperimentConfig Default() { return LoadConfig(FLUID_SOURCE_DIR "/configs/default.cfg"); }

double Mean(const std::vector<double>& v) {
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

std::vector<double> Ranks(const std::vector<double>& v) {
  std::vector<size_t> idx(v.size());
  std::iota(idx.begin(), idx.end(), size_t{0});
  std::sort(idx.begin(), idx.end(), [&](size_t a, size_t b) { return v[a] < v[b]; });
  std::vector<double> r(v.size());
  for (size_t i = 0; i < idx.size();) {
    size_t j = i;
    while (j + 1 < idx.size() && v[idx[j + 1]] == v[idx[i]]) ++j;
    for (size_t t = i; t <= j; ++t) r[idx[t]] = 0.5 * static_cast<double>(i + j);
    i = j + 1;
  }
  return r;
}

// Pearson correlation of ranks. 0 when either side is constant.
double Spearman(const std::vector<double>& x, const std::vector<double>& y) {
  const auto rx = Ranks(x), ry = Ranks(y);
  const double mx = Mean(rx), my = Mean(ry);
  double sxy = 0, sxx = 0, syy = 0;
  for (size_t i = 0; i < rx.size(); ++i) {
    sxy += (rx[i] - mx) * (ry[i] - my);
    sxx += (rx[i] - mx) * (rx[i] - mx);
    syy += (ry[i] - my) * (ry[i] - my);
  }
  return sxx > 0 && syy > 0 ? sxy / std::sqrt(sxx * syy) : 0.0;
}

Outcome GradientOracle() {
  const auto report = RunGradientCheck(20, 2024);
  return {report.trials == 20 && report.max_relative_error < 1e-4,
          Fmt("20 models, max relative error %.3g (< 1e-4)", report.max_relative_error)};
}

Outcome VanillaEquivalence() {
  auto cfg = Default();
  cfg.fl.strategy = DropoutStrategy::kNone;
  const auto base = RunExperiment(cfg, false);
  bool same = true;
  for (auto s : {DropoutStrategy::kRandom, DropoutStrategy::kOrdered, DropoutStrategy::kInvariant}) {
    auto other = cfg;
    other.fl.strategy = s;
    other.fl.forced_rate = 1.0;
    const auto out = RunExperiment(other, false);
    for (size_t i = 0; i < base.runs.size(); ++i) {
      const auto& a = base.runs[i];
      const auto& b = out.runs[i];
      same &= a.final_model == b.final_model;
      same &= MetricsCsv(a.records, a.seed, "-") == MetricsCsv(b.records, b.seed, "-");
    }
  }
  return {same, Fmt("%zu seeds x 3 strategies at r = 1 vs FedAvg: %s", base.runs.size(),
                    same ? "bit-identical" : "DIFFER")};
}

Outcome StragglerTuning() {
  auto cfg = Default();
  cfg.seeds = {1};
  for (auto& c : cfg.fleet) c.noise_pct = 0.0;
  // Slowest client 1.3x the next slowest.
  cfg.fleet.back().base_epoch_time = 1.3 * cfg.fleet[cfg.fleet.size() - 2].base_epoch_time;
  const auto run = RunSingle(cfg, 1);
  const int straggler = cfg.fleet.back().id;
  const double target = cfg.fleet[cfg.fleet.size() - 2].base_epoch_time;
  double worst = 0.0;
  bool identified = true;
  for (const auto& r : run.records) {
    if (r.round < cfg.fl.calibration.warmup) continue;
    identified &= r.stragglers == std::vector<int>{straggler};
    worst = std::max(worst, std::abs(r.client_times[static_cast<size_t>(straggler)] - target) / target);
  }
  return {identified && worst <= 0.10,
          Fmt("straggler %d, worst post-warmup gap to T_target %.2f%% (<= 10%%)", straggler, 100 * worst)};
}

Outcome TableTrend() {
  auto cfg = Default();
  cfg.fl.forced_rate = 0.5;
  std::map<std::string, Stats> stats;
  for (auto s : {DropoutStrategy::kRandom, DropoutStrategy::kOrdered, DropoutStrategy::kInvariant}) {
    cfg.fl.strategy = s;
    stats[StrategyName(s)] = SampleStats(RunExperiment(cfg, false).summary.final_accuracy);
  }
  const auto& inv = stats["invariant"];
  const auto& rnd = stats["random"];
  const auto& ord = stats["ordered"];
  const bool pass = inv.mean >= ord.mean - 0.002 && inv.mean >= rnd.mean && inv.std <= rnd.std + 0.005;
  return {pass, Fmt("%zu seeds, r = 0.5: invariant %.4f+-%.4f, ordered %.4f+-%.4f, random %.4f+-%.4f",
                    cfg.seeds.size(), inv.mean, inv.std, ord.mean, ord.std, rnd.mean, rnd.std)};
}

Outcome VarianceBound() {
  Rng rng(515);
  int feasible = 0, drawn = 0, violations = 0;
  double worst_slack = -INFINITY;
  while (feasible < 1000) {
    const size_t m = 10 + rng() % 91;
    const size_t k = 1 + rng() % (m / 4);
    const double eps = UniformIn(rng, 0.05, 1.0);
    const auto inst = an::RandomInstance(m, k, eps, rng());
    ++drawn;
    if (!an::Feasible(inst)) continue;
    ++feasible;
    const auto b = an::ProbabilityMassBound(inst.g, inst.k, inst.eps);
    worst_slack = std::max(worst_slack, b.total_probability - b.bound);
    if (!b.holds) ++violations;
  }
  int mc_ok = 0;
  double worst_z = 0.0;
  for (uint64_t i = 0, fixed = 0; fixed < 10; ++i) {
    const auto inst = an::RandomInstance(32, 8, 0.5, DeriveSeed(99, {i}));
    if (!an::Feasible(inst)) continue;
    ++fixed;
    const auto p = an::KeepProbabilities(inst.g, inst.k, an::RateFromSlack(inst.g, inst.k, inst.eps).rate);
    const double exact = an::SecondMoment(inst.g, p);
    const double se = an::SecondMomentStdError(inst.g, p, 100000);
    const double est = an::EmpiricalSecondMoment(inst.g, p, 100000, DeriveSeed(99, {i, 1}));
    const double z = se > 0 ? std::abs(est - exact) / se : (est == exact ? 0.0 : INFINITY);
    worst_z = std::max(worst_z, z);
    if (z <= 3.0) ++mc_ok;
  }
  return {violations == 0 && mc_ok == 10,
          Fmt("%d/%d feasible draws, %d bound violations (max sum_p - bound %.3g); MC %d/10 within 3 SE (max %.2f SE)",
              feasible, drawn, violations, worst_slack, mc_ok, worst_z)};
}

Outcome SlackConsistency() {
  double worst = 0.0;
  for (uint64_t i = 0; i < 100; ++i) {
    Rng rng(DeriveSeed(606, {i}));
    const size_t m = 5 + rng() % 200;
    const size_t k = rng() % m;
    const auto inst = an::RandomInstance(m, k, UniformIn(rng, 0.01, 2.0), rng(), UniformIn(rng, 1e-3, 10.0));
    const auto r = an::RateFromSlack(inst.g, inst.k, inst.eps);
    worst = std::max(worst, std::abs(an::SlackResidual(inst.g, inst.k, r.rate, inst.eps)));
  }
  return {worst < 1e-9, Fmt("100 instances, max |residual| %.3g (< 1e-9)", worst)};
}

Outcome ThresholdMonotone(const std::vector<RunResult>& runs) {
  size_t sets = 0, violations = 0;
  for (const auto& run : runs) {
    for (const auto& rec : run.records) {
      if (rec.scores.empty()) continue;
      ++sets;
      std::vector<double> grid = {0.0, INFINITY};
      for (const auto& layer : rec.scores) grid.insert(grid.end(), layer.begin(), layer.end());
      std::sort(grid.begin(), grid.end());
      double last = -1.0;
      for (double th : grid) {
        const double f = InvariantFraction(rec.scores, th);
        if (f < last) ++violations;
        last = f;
      }
    }
  }
  return {sets > 0 && violations == 0,
          Fmt("%zu score sets, every score value as threshold, %zu decreases", sets, violations)};
}

Outcome InvariantEmergence(const std::vector<RunResult>& runs, int rounds) {
  const int mark = static_cast<int>(0.3 * rounds);
  const int tail = rounds - rounds / 3;
  bool positive = true;
  double worst_rho = INFINITY;
  double lo = INFINITY, hi = 0.0;
  for (const auto& run : runs) {
    const auto th = run.records[static_cast<size_t>(mark)].thresholds;
    std::vector<double> fractions;
    for (int r = tail; r < rounds; ++r) {
      const auto& rec = run.records[static_cast<size_t>(r)];
      const double f = InvariantFraction(rec.scores, th);
      positive &= f > 0.0;
      fractions.push_back(f);
      lo = std::min(lo, f);
      hi = std::max(hi, f);
    }
    std::vector<double> smoothed, when;
    for (size_t i = 0; i + 3 <= fractions.size(); i += 3) {
      smoothed.push_back((fractions[i] + fractions[i + 1] + fractions[i + 2]) / 3);
      when.push_back(static_cast<double>(i));
    }
    worst_rho = std::min(worst_rho, Spearman(when, smoothed));
  }
  return {positive && worst_rho >= 0.0,
          Fmt("th from round %d, final third fraction in [%.3f, %.3f], min Spearman %.3f over %zu seeds",
              mark, lo, hi, worst_rho, runs.size())};
}

Outcome DynamicAdaptation() {
  auto cfg = Default();
  cfg.seeds = {1};
  cfg.fl.rounds = 40;
  cfg.fleet = DefaultFleet();
  const double base[] = {1.0, 1.05, 1.1, 1.15, 1.2};
  for (size_t c = 0; c < cfg.fleet.size(); ++c) {
    cfg.fleet[c].base_epoch_time = base[c];
    cfg.fleet[c].noise_pct = 0.0;
  }
  cfg.fleet[0].load_schedule = {{0.25, 0.5, 2.0}};
  cfg.fleet[1].load_schedule = {{0.5, 0.75, 2.0}};
  cfg.fleet[2].load_schedule = {{0.75, 1.0, 2.0}};
  const auto total = [](const RunResult& r) {
    double t = 0;
    for (const auto& rec : r.records) t += rec.round_time;
    return t;
  };
  const auto dynamic = RunSingle(cfg, 1);
  auto fixed_cfg = cfg;
  fixed_cfg.fl.cadence = 0;
  const auto fixed = RunSingle(fixed_cfg, 1);

  // Window boundaries and the client that should be flagged from then on.
  const std::pair<int, int> switches[] = {{10, 0}, {20, 1}, {30, 2}};
  bool tracked = true;
  std::string lag;
  for (auto [boundary, id] : switches) {
    int first = -1;
    for (int r = boundary; r < cfg.fl.rounds; ++r) {
      if (dynamic.records[static_cast<size_t>(r)].stragglers == std::vector<int>{id}) {
        first = r;
        break;
      }
    }
    const int delay = first < 0 ? -1 : first - boundary;
    tracked &= first >= 0 && delay <= 1;
    lag += (lag.empty() ? "" : ",") + std::to_string(delay);
  }
  const double saving = 1.0 - total(dynamic) / total(fixed);
  return {tracked && saving >= 0.10,
          Fmt("straggler switch lag (rounds) %s; total time %.2f s vs static %.2f s (%.1f%% saved, >= 10%%)",
              lag.c_str(), total(dynamic), total(fixed), 100 * saving)};
}

Outcome CalibrationCost(const std::vector<RunResult>& runs) {
  std::vector<double> f;
  for (const auto& run : runs) {
    for (const auto& rec : run.records) f.push_back(CalibrationOverhead(rec));
  }
  const double m = Mean(f);
  return {m < 0.05, Fmt("mean calibration overhead %.4f over %zu rounds (< 0.05)", m, f.size())};
}

Outcome LinearTime() {
  ClientSpec spec;
  spec.base_epoch_time = 10.0;
  spec.noise_pct = 0.05;
  Rng rng(1111);
  double worst = 0.0;
  for (double r : {0.5, 0.75, 0.95}) {
    for (int i = 0; i < 1000; ++i) {
      const double t = SimulateEpochTime(spec, r, 0.0, rng);
      worst = std::max(worst, std::abs(t - 10.0 * r) / (10.0 * r));
    }
  }
  return {worst <= 0.10, Fmt("3000 draws, max deviation from base*r %.2f%% (<= 10%%)", 100 * worst)};
}

Outcome RatioTrend() {
  auto cfg = Default();
  cfg.fleet.clear();
  for (int c = 0; c < 10; ++c) cfg.fleet.push_back({c, 1.0 + c / 9.0, 0.05, {}});
  cfg.fl.forced_rate = 0.5;
  const std::vector<double> ratios = {0.1, 0.2, 0.4};
  const auto rows = SweepStragglerRatio(
      cfg, ratios, {DropoutStrategy::kRandom, DropoutStrategy::kOrdered, DropoutStrategy::kInvariant});
  std::map<std::string, std::vector<double>> acc;
  for (const auto& r : rows) acc[r.strategy].push_back(r.accuracy.mean);
  bool monotone = true, leads = true;
  std::string table;
  for (const auto& [name, v] : acc) {
    for (size_t i = 1; i < v.size(); ++i) monotone &= v[i] <= v[i - 1] + 0.005;
    table += Fmt(" %s=[%.4f %.4f %.4f]", name.c_str(), v[0], v[1], v[2]);
  }
  for (size_t i = 0; i < ratios.size(); ++i) leads &= acc["invariant"][i] >= acc["random"][i];
  return {monotone && leads, Fmt("non-increasing %s, invariant >= random %s;", monotone ? "yes" : "no",
                                 leads ? "yes" : "no") + table};
}

}  // namespace

int main() {
  const auto reference_cfg = Default();
  std::vector<RunResult> reference;
  auto get_reference = [&]() -> const std::vector<RunResult>& {
    if (reference.empty()) reference = RunExperiment(reference_cfg, false).runs;
    return reference;
  };

  struct Criterion {
    int id;
    const char* name;
    double budget_s;
    std::function<Outcome()> run;
  };
  const std::vector<Criterion> criteria = {
      {1, "gradient oracle", 5, GradientOracle},
      {2, "vanilla equivalence", 30, VanillaEquivalence},
      {3, "straggler time tuning", 30, StragglerTuning},
      {4, "accuracy trend at r = 0.5", 300, TableTrend},
      {5, "variance bound", 60, VarianceBound},
      {6, "slack rate self-consistency", 5, SlackConsistency},
      {7, "threshold monotonicity", 0, [&] { return ThresholdMonotone(get_reference()); }},
      {8, "invariant emergence", 0, [&] { return InvariantEmergence(get_reference(), reference_cfg.fl.rounds); }},
      {9, "dynamic straggler adaptation", 120, DynamicAdaptation},
      {10, "calibration overhead", 0, [&] { return CalibrationCost(get_reference()); }},
      {11, "linear time model", 5, LinearTime},
      {12, "straggler-ratio trend", 600, RatioTrend},
  };

  int failed = 0;
  for (const auto& c : criteria) {
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    bool pass = o.pass;
    if (c.budget_s > 0 && secs > c.budget_s) {
      pass = false;
      o.detail += Fmt(" [over %.0f s budget]", c.budget_s);
    }
    if (!pass) ++failed;
    std::printf("[%s] criterion %d: %s: %s (%.2f s)\n", pass ? "PASS" : "FAIL", c.id, c.name,
                o.detail.c_str(), secs);
    std::fflush(stdout);
  }
  std::printf("%zu/%zu criteria passed\n", criteria.size() - static_cast<size_t>(failed), criteria.size());
  return failed == 0 ? 0 : 1;
}
