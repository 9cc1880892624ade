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

#include "fluid/config.h"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

#include "fluid/errors.h"

namespace fluid {
namespace {

std::string Trim(const std::string& s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string::npos) return "";
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

std::vector<std::string> Split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::stringstream in(s);
  std::string part;
  while (std::getline(in, part, sep)) out.push_back(Trim(part));
  return out;
}

double ToDouble(const std::string& s) {
  size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(s, &used);
  } catch (const std::exception&) {
    throw ConfigError("expected a number, got '" + s + "'");
  }
  if (used != s.size()) throw ConfigError("expected a number, got '" + s + "'");
  return v;
}

uint64_t ToUnsigned(const std::string& s) {
  uint64_t v = 0;
  const auto* end = s.data() + s.size();
  const auto [ptr, ec] = std::from_chars(s.data(), end, v);
  if (ec != std::errc() || ptr != end) {
    throw ConfigError("expected a non-negative integer, got '" + s + "'");
  }
  return v;
}

int ToInt(const std::string& s) {
  int v = 0;
  const auto* end = s.data() + s.size();
  const auto [ptr, ec] = std::from_chars(s.data(), end, v);
  if (ec != std::errc() || ptr != end) throw ConfigError("expected an integer, got '" + s + "'");
  return v;
}

template <typename T, typename F>
std::vector<T> ParseList(const std::string& text, F convert) {
  std::vector<T> out;
  for (const auto& item : Split(text, ',')) {
    if (item.empty()) throw ConfigError("empty list element");
    out.push_back(convert(item));
  }
  if (out.empty()) throw ConfigError("empty list");
  return out;
}

// `<client>:<start>:<end>:<slowdown>`
void AddLoad(ExperimentConfig& cfg, const std::string& text) {
  for (const auto& entry : Split(text, ';')) {
    if (entry.empty()) continue;
    const auto parts = Split(entry, ':');
    if (parts.size() != 4) throw ConfigError("load entries are client:start:end:slowdown");
    const auto client = ToUnsigned(parts[0]);
    if (client >= cfg.fleet.size()) {
      throw ConfigError("load names client " + parts[0] + " but the fleet has " +
                        std::to_string(cfg.fleet.size()) + " clients");
    }
    cfg.fleet[client].load_schedule.push_back(
        {ToDouble(parts[1]), ToDouble(parts[2]), ToDouble(parts[3])});
  }
}

using Setter = std::function<void(ExperimentConfig&, const std::string&)>;

const std::map<std::string, Setter>& Setters() {
  static const std::map<std::string, Setter> setters = {
      {"dataset.classes", [](auto& c, const auto& v) { c.dataset.classes = ToInt(v); }},
      {"dataset.dims", [](auto& c, const auto& v) { c.dataset.dims = ToUnsigned(v); }},
      {"dataset.per_class", [](auto& c, const auto& v) { c.dataset.per_class = ToUnsigned(v); }},
      {"dataset.seed", [](auto& c, const auto& v) { c.dataset.seed = ToUnsigned(v); }},
      {"dataset.partition",
       [](auto& c, const auto& v) {
         if (v == "iid") {
           c.dataset.partition.mode = PartitionMode::kIid;
         } else if (v == "skew") {
           c.dataset.partition.mode = PartitionMode::kLabelSkew;
         } else {
           throw ConfigError("partition must be iid or skew");
         }
       }},
      {"dataset.alpha", [](auto& c, const auto& v) { c.dataset.partition.alpha = ToDouble(v); }},
      {"dataset.csv", [](auto& c, const auto& v) { c.dataset.csv = v; }},
      {"model.hidden",
       [](auto& c, const auto& v) {
         c.hidden = ParseList<size_t>(v, [](const std::string& s) { return ToUnsigned(s); });
       }},
      {"fleet.base_times",
       [](auto& c, const auto& v) {
         const auto times = ParseDoubleList(v);
         const double noise = c.fleet.empty() ? 0.05 : c.fleet.front().noise_pct;
         c.fleet.clear();
         for (size_t i = 0; i < times.size(); ++i) {
           c.fleet.push_back({static_cast<int>(i), times[i], noise, {}});
         }
       }},
      {"fleet.noise",
       [](auto& c, const auto& v) {
         const double noise = ToDouble(v);
         for (auto& s : c.fleet) s.noise_pct = noise;
       }},
      {"fleet.load", [](auto& c, const auto& v) { AddLoad(c, v); }},
      {"fl.strategy", [](auto& c, const auto& v) { c.fl.strategy = ParseStrategy(v); }},
      {"fl.rates", [](auto& c, const auto& v) { c.fl.rates = ParseDoubleList(v); }},
      {"fl.rate",
       [](auto& c, const auto& v) {
         if (v == "auto") {
           c.fl.forced_rate.reset();
         } else {
           c.fl.forced_rate = ToDouble(v);
         }
       }},
      {"fl.policy", [](auto& c, const auto& v) { c.fl.policy = ParsePolicy(v); }},
      {"fl.rounds", [](auto& c, const auto& v) { c.fl.rounds = ToInt(v); }},
      {"fl.local_epochs", [](auto& c, const auto& v) { c.fl.train.epochs = ToInt(v); }},
      {"fl.lr", [](auto& c, const auto& v) { c.fl.train.lr = ToDouble(v); }},
      {"fl.batch", [](auto& c, const auto& v) { c.fl.train.batch = ToUnsigned(v); }},
      {"fl.seeds",
       [](auto& c, const auto& v) {
         c.seeds = ParseList<uint64_t>(v, [](const std::string& s) { return ToUnsigned(s); });
       }},
      {"fl.server_overhead", [](auto& c, const auto& v) { c.fl.server_overhead = ToDouble(v); }},
      {"fl.threads", [](auto& c, const auto& v) { c.fl.threads = ToInt(v); }},
      {"calibration.warmup", [](auto& c, const auto& v) { c.fl.calibration.warmup = ToInt(v); }},
      {"calibration.persistence",
       [](auto& c, const auto& v) { c.fl.calibration.persistence = ToInt(v); }},
      {"calibration.growth_factor",
       [](auto& c, const auto& v) { c.fl.calibration.growth_factor = ToDouble(v); }},
      {"calibration.delta", [](auto& c, const auto& v) { c.fl.calibration.delta = ToDouble(v); }},
      {"calibration.cadence", [](auto& c, const auto& v) { c.fl.cadence = ToInt(v); }},
      {"calibration.threshold",
       [](auto& c, const auto& v) {
         if (v == "auto") {
           c.fl.fixed_threshold.reset();
         } else {
           c.fl.fixed_threshold = ToDouble(v);
         }
       }},
      {"output.dir", [](auto& c, const auto& v) { c.out_dir = v; }},
  };
  return setters;
}

}  // namespace

std::vector<double> ParseDoubleList(const std::string& text) {
  return ParseList<double>(text, ToDouble);
}

DropoutStrategy ParseStrategy(const std::string& name) {
  if (name == "none") return DropoutStrategy::kNone;
  if (name == "random") return DropoutStrategy::kRandom;
  if (name == "ordered") return DropoutStrategy::kOrdered;
  if (name == "invariant") return DropoutStrategy::kInvariant;
  throw ConfigError("unknown strategy '" + name + "'");
}

std::string StrategyName(DropoutStrategy strategy) {
  switch (strategy) {
    case DropoutStrategy::kNone: return "none";
    case DropoutStrategy::kRandom: return "random";
    case DropoutStrategy::kOrdered: return "ordered";
    case DropoutStrategy::kInvariant: return "invariant";
  }
  return "none";
}

StragglerPolicy ParsePolicy(const std::string& text) {
  const auto parts = Split(text, ':');
  if (parts[0] == "slowest_one" && parts.size() == 1) return StragglerPolicy::SlowestOne();
  if (parts[0] == "slowest_pct" && parts.size() == 2) {
    return StragglerPolicy::SlowestPct(ToDouble(parts[1]));
  }
  if (parts[0] == "cluster" && parts.size() == 3) {
    return StragglerPolicy::Cluster(ToInt(parts[1]), ToDouble(parts[2]));
  }
  throw ConfigError("policy must be slowest_one, slowest_pct:<p> or cluster:<k>:<p>");
}

std::string PolicyName(const StragglerPolicy& policy) {
  std::ostringstream f;
  f << policy.fraction;
  switch (policy.kind) {
    case StragglerPolicy::Kind::kSlowestOne: return "slowest_one";
    case StragglerPolicy::Kind::kSlowestPct:
      return "slowest_pct:" + f.str();
    case StragglerPolicy::Kind::kCluster:
      return "cluster:" + std::to_string(policy.clusters) + ":" + f.str();
  }
  return "slowest_one";
}

std::vector<ClientSpec> DefaultFleet() {
  const double base[] = {1.0, 1.2, 1.4, 1.6, 2.0};
  std::vector<ClientSpec> fleet;
  for (int i = 0; i < 5; ++i) fleet.push_back({i, base[i], 0.05, {}});
  return fleet;
}

ExperimentConfig DefaultExperimentConfig() {
  ExperimentConfig cfg;
  cfg.fleet = DefaultFleet();
  return cfg;
}

ExperimentConfig ParseConfig(const std::string& text) {
  ExperimentConfig cfg = DefaultExperimentConfig();
  std::stringstream in(text);
  std::string raw;
  int line = 0;
  while (std::getline(in, raw)) {
    ++line;
    const auto hash = raw.find('#');
    const std::string body = Trim(hash == std::string::npos ? raw : raw.substr(0, hash));
    if (body.empty()) continue;
    const auto eq = body.find('=');
    if (eq == std::string::npos) throw ConfigError("expected 'section.key = value'", line);
    const std::string key = Trim(body.substr(0, eq));
    const std::string value = Trim(body.substr(eq + 1));
    const auto it = Setters().find(key);
    if (it == Setters().end()) throw ConfigError("unknown key", line, key);
    if (value.empty()) throw ConfigError("missing value", line, key);
    try {
      it->second(cfg, value);
    } catch (const ConfigError& e) {
      throw ConfigError(e.what(), line, key);
    }
  }
  ValidateExperimentConfig(cfg);
  return cfg;
}

ExperimentConfig LoadConfig(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  return ParseConfig(buf.str());
}

void ValidateExperimentConfig(const ExperimentConfig& config) {
  if (config.seeds.empty()) throw ConfigError("seeds must be non-empty", 0, "fl.seeds");
  if (config.hidden.empty()) throw ConfigError("need at least one hidden layer", 0, "model.hidden");
  for (size_t h : config.hidden) {
    if (h == 0) throw ConfigError("hidden layer sizes must be >= 1", 0, "model.hidden");
  }
  for (const auto& spec : config.fleet) ValidateClientSpec(spec);
  ValidateFluidConfig(config.fl, config.fleet.size());
  if (config.dataset.csv.empty() &&
      (config.dataset.classes < 1 || config.dataset.dims < 1 || config.dataset.per_class < 1)) {
    throw ConfigError("dataset counts must be >= 1");
  }
}

}  // namespace fluid
