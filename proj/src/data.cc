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

#include "fluid/data.h"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>
#include <sstream>

#include "fluid/errors.h"
#include "fluid/rng.h"

namespace fluid {
namespace {

constexpr double kMinCentroidSeparation = 4.0;  // in units of the noise sigma
constexpr int kMaxDirichletAttempts = 1000;

double SquaredDistance(const std::vector<double>& a, const std::vector<double>& b) {
  double d = 0.0;
  for (size_t i = 0; i < a.size(); ++i) d += (a[i] - b[i]) * (a[i] - b[i]);
  return d;
}

void SplitTrainTest(std::vector<size_t> owned, Rng& rng, ClientSplit& out) {
  std::shuffle(owned.begin(), owned.end(), rng);
  const size_t test = owned.size() / 5;
  const size_t train = owned.size() - test;
  out.train.assign(owned.begin(), owned.begin() + static_cast<std::ptrdiff_t>(train));
  out.test.assign(owned.begin() + static_cast<std::ptrdiff_t>(train), owned.end());
}

std::vector<std::vector<size_t>> IndicesByClass(const Dataset& ds) {
  std::vector<std::vector<size_t>> by_class(static_cast<size_t>(ds.class_count));
  for (size_t i = 0; i < ds.size(); ++i) {
    by_class[static_cast<size_t>(ds.labels[i])].push_back(i);
  }
  return by_class;
}

std::vector<std::vector<size_t>> AssignIid(const Dataset& ds, size_t clients, Rng& rng) {
  std::vector<std::vector<size_t>> owned(clients);
  size_t next = 0;
  for (auto& members : IndicesByClass(ds)) {
    std::shuffle(members.begin(), members.end(), rng);
    for (size_t idx : members) owned[next++ % clients].push_back(idx);
  }
  return owned;
}

std::vector<std::vector<size_t>> AssignLabelSkew(const Dataset& ds, size_t clients,
                                                 double alpha, Rng& rng) {
  if (!(alpha > 0.0)) throw DataError("dirichlet concentration must be > 0");
  auto by_class = IndicesByClass(ds);
  std::gamma_distribution<double> gamma(alpha, 1.0);
  for (int attempt = 0; attempt < kMaxDirichletAttempts; ++attempt) {
    std::vector<std::vector<size_t>> owned(clients);
    for (auto& members : by_class) {
      std::shuffle(members.begin(), members.end(), rng);
      std::vector<double> share(clients);
      double total = 0.0;
      for (double& s : share) total += (s = gamma(rng));
      if (!(total > 0.0)) {
        std::fill(share.begin(), share.end(), 1.0);
        total = static_cast<double>(clients);
      }
      double cumulative = 0.0;
      size_t begin = 0;
      for (size_t c = 0; c < clients; ++c) {
        cumulative += share[c] / total;
        size_t end = c + 1 == clients
                         ? members.size()
                         : static_cast<size_t>(std::llround(cumulative * static_cast<double>(members.size())));
        end = std::clamp(end, begin, members.size());
        owned[c].insert(owned[c].end(), members.begin() + static_cast<std::ptrdiff_t>(begin),
                        members.begin() + static_cast<std::ptrdiff_t>(end));
        begin = end;
      }
    }
    const bool all_nonempty = std::all_of(owned.begin(), owned.end(),
                                          [](const auto& v) { return !v.empty(); });
    if (all_nonempty) return owned;
  }
  throw CapacityError("label-skew partition left a client empty after " +
                      std::to_string(kMaxDirichletAttempts) + " attempts");
}

}  // namespace

Dataset Dataset::Subset(const std::vector<size_t>& indices) const {
  Dataset out;
  out.class_count = class_count;
  out.features = Matrix(indices.size(), features.cols());
  out.labels.reserve(indices.size());
  for (size_t r = 0; r < indices.size(); ++r) {
    auto src = features.row(indices[r]);
    std::copy(src.begin(), src.end(), out.features.row(r).begin());
    out.labels.push_back(labels[indices[r]]);
  }
  return out;
}

void ValidateDataset(const Dataset& ds) {
  if (ds.class_count < 1) throw DataError("class count must be >= 1");
  if (ds.features.rows() != ds.labels.size()) {
    throw DataError("feature rows do not match label count");
  }
  std::vector<size_t> seen(static_cast<size_t>(ds.class_count), 0);
  for (int y : ds.labels) {
    if (y < 0 || y >= ds.class_count) {
      throw DataError("label " + std::to_string(y) + " out of range");
    }
    ++seen[static_cast<size_t>(y)];
  }
  for (size_t c = 0; c < seen.size(); ++c) {
    if (seen[c] == 0) throw DataError("class " + std::to_string(c) + " has no examples");
  }
}

Dataset SynthGaussianBlobs(int classes, size_t dims, size_t per_class, uint64_t seed) {
  if (classes < 1 || dims < 1 || per_class < 1) {
    throw DataError("blob counts must all be >= 1");
  }
  Rng rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);

  const double min_sq = kMinCentroidSeparation * kMinCentroidSeparation;
  std::vector<std::vector<double>> centroids;
  // Start where the typical pairwise distance is about the minimum, so the
  // classes sit close to the separation floor.
  double spread = kMinCentroidSeparation / std::sqrt(2.0 * static_cast<double>(dims));
  int misses = 0;
  while (centroids.size() < static_cast<size_t>(classes)) {
    std::vector<double> c(dims);
    for (double& v : c) v = spread * normal(rng);
    const bool separated = std::all_of(centroids.begin(), centroids.end(),
                                       [&](const auto& o) { return SquaredDistance(c, o) >= min_sq; });
    if (separated) {
      centroids.push_back(std::move(c));
    } else if (++misses % 64 == 0) {
      spread *= 1.1;
    }
  }

  Dataset ds;
  ds.class_count = classes;
  ds.features = Matrix(static_cast<size_t>(classes) * per_class, dims);
  ds.labels.reserve(ds.features.rows());
  size_t row = 0;
  for (int k = 0; k < classes; ++k) {
    for (size_t n = 0; n < per_class; ++n, ++row) {
      auto x = ds.features.row(row);
      for (size_t d = 0; d < dims; ++d) x[d] = centroids[static_cast<size_t>(k)][d] + normal(rng);
      ds.labels.push_back(k);
    }
  }
  return ds;
}

Partition MakePartition(const Dataset& ds, size_t clients, const PartitionSpec& spec,
                        uint64_t seed) {
  if (clients < 1) throw CapacityError("need at least one client");
  if (clients > ds.size()) {
    throw CapacityError(std::to_string(clients) + " clients exceed " +
                        std::to_string(ds.size()) + " examples");
  }
  ValidateDataset(ds);
  Rng rng(seed);
  auto owned = spec.mode == PartitionMode::kIid
                   ? AssignIid(ds, clients, rng)
                   : AssignLabelSkew(ds, clients, spec.alpha, rng);
  Partition part;
  part.clients.resize(clients);
  for (size_t c = 0; c < clients; ++c) SplitTrainTest(std::move(owned[c]), rng, part.clients[c]);
  return part;
}

Dataset LoadCsv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path);
  std::string line;
  if (!std::getline(in, line)) throw DataError(path + ": missing header row");
  const auto header_cols = static_cast<size_t>(std::count(line.begin(), line.end(), ',')) + 1;
  if (header_cols < 2) throw DataError(path + ": need at least one feature and a label");
  const size_t dims = header_cols - 1;

  std::vector<double> values;
  std::vector<int> labels;
  int max_label = -1;
  size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line == "\r") continue;
    std::stringstream row(line);
    std::string cell;
    size_t col = 0;
    while (std::getline(row, cell, ',')) {
      try {
        size_t used = 0;
        if (col < dims) {
          values.push_back(std::stod(cell, &used));
        } else if (col == dims) {
          const int y = std::stoi(cell, &used);
          labels.push_back(y);
          max_label = std::max(max_label, y);
        }
      } catch (const std::exception&) {
        throw DataError(path + ":" + std::to_string(line_no) + ": bad value '" + cell + "'");
      }
      ++col;
    }
    if (col != header_cols) {
      throw DataError(path + ":" + std::to_string(line_no) + ": expected " +
                      std::to_string(header_cols) + " columns");
    }
  }
  Dataset ds;
  ds.features = Matrix(labels.size(), dims, std::move(values));
  ds.labels = std::move(labels);
  ds.class_count = max_label + 1;
  ValidateDataset(ds);
  return ds;
}

}  // namespace fluid
