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

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "json.hpp"

#include "fluid/config.h"
#include "fluid/errors.h"
#include "fluid/experiment.h"

using namespace fluid;
namespace fs = std::filesystem;

namespace {

// Small enough to run in well under a second per seed.
const char* const kSmall = R"(# tiny benchmark
dataset.classes = 4
dataset.dims = 6
dataset.per_class = 40
dataset.partition = iid
model.hidden = 12, 8
fleet.base_times = 1.0, 1.2, 1.4, 2.0
fleet.noise = 0.05
fl.strategy = invariant
fl.rounds = 8
fl.seeds = 1, 2, 3
)";

std::string Slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

fs::path TempDir(const std::string& name) {
  const auto dir = fs::temp_directory_path() / ("fluid_test_cli_" + name);
  fs::remove_all(dir);
  return dir;
}

std::vector<std::vector<std::string>> ReadCsv(const std::string& text) {
  std::vector<std::vector<std::string>> rows;
  std::stringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    std::vector<std::string> cells;
    std::stringstream ls(line);
    std::string cell;
    while (std::getline(ls, cell, ',')) cells.push_back(cell);
    rows.push_back(cells);
  }
  return rows;
}

int RunTool(const std::string& args) {
  const std::string cmd = std::string(FLUIDSIM) + " " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

}  // namespace

TEST_CASE("config parsing") {
  const auto c = ParseConfig(kSmall);
  CHECK(c.dataset.classes == 4);
  CHECK(c.dataset.partition.mode == PartitionMode::kIid);
  CHECK(c.hidden == std::vector<size_t>{12, 8});
  REQUIRE(c.fleet.size() == 4);
  CHECK(c.fleet[3].base_epoch_time == 2.0);
  CHECK(c.fleet[0].noise_pct == 0.05);
  CHECK(c.fl.rounds == 8);
  CHECK(c.seeds == std::vector<uint64_t>{1, 2, 3});

  const auto more = ParseConfig(std::string(kSmall) +
                                "fleet.load = 0:0.25:0.5:2; 1:0.5:1:3\n"
                                "fl.policy = cluster:2:0.5\n"
                                "fl.rate = 0.75\n"
                                "calibration.threshold = 0.3\n"
                                "calibration.cadence = 0\n"
                                "output.dir = elsewhere\n");
  REQUIRE(more.fleet[0].load_schedule.size() == 1);
  CHECK(more.fleet[1].load_schedule[0].slowdown == 3.0);
  CHECK(more.fl.policy.kind == StragglerPolicy::Kind::kCluster);
  CHECK(more.fl.policy.clusters == 2);
  CHECK(more.fl.forced_rate == 0.75);
  CHECK(more.fl.fixed_threshold == 0.3);
  CHECK(more.fl.cadence == 0);
  CHECK(more.out_dir == "elsewhere");
  CHECK(PolicyName(ParsePolicy("slowest_pct:0.2")) == "slowest_pct:0.2");
  for (auto s : {"none", "random", "ordered", "invariant"}) CHECK(StrategyName(ParseStrategy(s)) == s);
}

TEST_CASE("config errors name the line and key") {
  try {
    ParseConfig("dataset.classes = 4\n\nfl.bogus = 3\n");
    FAIL("expected a config error");
  } catch (const ConfigError& e) {
    CHECK(e.line() == 3);
    CHECK(e.field() == "fl.bogus");
  }
  try {
    ParseConfig("# header\nfl.rounds = many\n");
    FAIL("expected a config error");
  } catch (const ConfigError& e) {
    CHECK(e.line() == 2);
    CHECK(e.field() == "fl.rounds");
  }
  CHECK_THROWS_AS(ParseConfig("fl.rates = 0.5, 1.5\n"), ConfigError);
  CHECK_THROWS_AS(ParseConfig("fl.rounds = 3\n"), ConfigError);
  CHECK_THROWS_AS(ParseConfig("fl.seeds =\n"), ConfigError);
  CHECK_THROWS_AS(ParseConfig("no equals sign\n"), ConfigError);
  CHECK_THROWS_AS(ParseConfig("fl.policy = fastest\n"), ConfigError);
  CHECK_THROWS_AS(ParseConfig("fleet.load = 9:0:1:2\n"), ConfigError);
}

TEST_CASE("forced r = 1 reproduces the none strategy") {
  auto cfg = ParseConfig(kSmall);
  cfg.seeds = {4};
  cfg.fl.strategy = DropoutStrategy::kNone;
  const auto base = RunExperiment(cfg, false);
  for (auto s : {DropoutStrategy::kRandom, DropoutStrategy::kOrdered, DropoutStrategy::kInvariant}) {
    cfg.fl.strategy = s;
    cfg.fl.forced_rate = 1.0;
    const auto other = RunExperiment(cfg, false);
    CHECK(other.runs[0].final_model == base.runs[0].final_model);
    for (size_t i = 0; i < base.runs[0].records.size(); ++i) {
      CHECK(other.runs[0].records[i].accuracy == base.runs[0].records[i].accuracy);
    }
  }
}

TEST_CASE("sample stats use n - 1") {
  const auto s = SampleStats({1.0, 2.0, 3.0});
  CHECK(s.mean == 2.0);
  CHECK(s.std == 1.0);
  CHECK(SampleStats({5.0}).std == 0.0);
  CHECK(SampleStats({2.0, 4.0}).std == doctest::Approx(std::sqrt(2.0)));
}

TEST_CASE("metrics files are byte-identical across reruns and match the summary") {
  auto cfg = ParseConfig(kSmall);
  cfg.out_dir = TempDir("a").string();
  const auto first = RunExperiment(cfg);
  std::vector<std::string> saved;
  for (const auto& f : first.metrics_files) saved.push_back(Slurp(f));
  const std::string summary = Slurp(first.summary_file);
  const auto second = RunExperiment(cfg);
  for (size_t i = 0; i < saved.size(); ++i) CHECK(Slurp(second.metrics_files[i]) == saved[i]);
  CHECK(Slurp(second.summary_file) == summary);

  // Recompute the summary from the CSVs alone.
  REQUIRE(first.metrics_files.size() == 3);
  std::vector<double> acc, time;
  for (const auto& f : first.metrics_files) {
    const auto rows = ReadCsv(Slurp(f));
    CHECK(rows.front().size() == 12);
    CHECK(rows.front()[0] == "seed");
    CHECK(rows.front()[11] == "calibration_overhead");
    CHECK(rows.size() == 1 + 8);
    acc.push_back(std::stod(rows.back()[7]));
    time.push_back(std::stod(rows.back()[6]));
  }
  const auto doc = nlohmann::json::parse(summary);
  const auto& g = doc["groups"][0];
  double mean = (acc[0] + acc[1] + acc[2]) / 3;
  double var = 0;
  for (double a : acc) var += (a - mean) * (a - mean);
  CHECK(std::abs(g["final_accuracy_mean"].get<double>() - mean) <= 1e-12);
  CHECK(std::abs(g["final_accuracy_std"].get<double>() - std::sqrt(var / 2)) <= 1e-12);
  const double tmean = (time[0] + time[1] + time[2]) / 3;
  CHECK(std::abs(g["total_time_mean_s"].get<double>() - tmean) <= 1e-12 * tmean);
  fs::remove_all(cfg.out_dir);
}

TEST_CASE("threshold sweep") {
  auto cfg = ParseConfig(kSmall);
  cfg.seeds = {1};
  const auto rows = SweepThreshold(cfg, {0.5, 0.0, 1e9, 0.05});
  REQUIRE(rows.size() == 4);
  CHECK(rows[0].threshold == 0.0);
  CHECK(rows[0].invariant_fraction == 0.0);
  CHECK(rows[3].invariant_fraction == 1.0);
  for (size_t i = 1; i < rows.size(); ++i) {
    CHECK(rows[i].threshold >= rows[i - 1].threshold);
    CHECK(rows[i].invariant_fraction >= rows[i - 1].invariant_fraction);
  }
  CHECK(ReadCsv(ThresholdCsv(rows)).size() == 5);
}

TEST_CASE("ratio 0 equals a run without dropout") {
  auto cfg = ParseConfig(kSmall);
  cfg.seeds = {2};
  const auto rows = SweepStragglerRatio(cfg, {0.0}, {DropoutStrategy::kInvariant});
  cfg.fl.strategy = DropoutStrategy::kNone;
  const auto base = RunExperiment(cfg, false);
  CHECK(rows[0].accuracy.mean == base.summary.final_accuracy[0]);
  CHECK_THROWS_AS(SweepStragglerRatio(cfg, {1.0}, {DropoutStrategy::kRandom}), ConfigError);
}

TEST_CASE("unwritable output is an I/O error") {
  const auto dir = TempDir("blocked");
  fs::create_directories(dir.parent_path());
  std::ofstream(dir.string()) << "a file, not a directory";
  CHECK_THROWS_AS(WriteFile((dir / "sub").string(), "x.csv", "x"), IoError);
  fs::remove(dir);
}

TEST_CASE("fluidsim exit codes") {
  const auto dir = TempDir("tool");
  fs::create_directories(dir);
  const auto good = (dir / "good.cfg").string();
  const auto bad = (dir / "bad.cfg").string();
  std::ofstream(good) << kSmall << "fl.seeds = 1\n";
  std::ofstream(bad) << "fl.unknown = 1\n";
  const std::string out = " --out " + (dir / "out").string();

  CHECK(RunTool("run " + good + out) == 0);
  CHECK(fs::exists(dir / "out" / "metrics_invariant_seed1.csv"));
  CHECK(fs::exists(dir / "out" / "summary.json"));
  CHECK(RunTool("run " + good + out + " --strategy random --rate 0.5 --seed 3") == 0);
  CHECK(fs::exists(dir / "out" / "metrics_random_seed3.csv"));
  CHECK(RunTool("run " + bad) == 2);
  CHECK(RunTool("run " + good + " --strategy bogus") == 2);
  CHECK(RunTool("no-such-command") == 2);
  CHECK(RunTool("bound-check --m 16 --k 4 --instances 2 --trials 100") == 0);
  CHECK(RunTool("bound-check --variance-model other") == 2);
  CHECK(RunTool("gradcheck") == 0);

  const std::string env_dir = (dir / "env").string();
  CHECK(std::system(("FLUID_OUT_DIR=" + env_dir + " " + FLUIDSIM + " run " + good +
                     " >/dev/null 2>&1").c_str()) == 0);
  CHECK(fs::exists(fs::path(env_dir) / "summary.json"));
  fs::remove_all(dir);
}
