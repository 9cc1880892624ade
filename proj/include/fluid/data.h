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

#ifndef FLUID_DATA_H_
#define FLUID_DATA_H_

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "fluid/nn.h"

namespace fluid {

struct Dataset {
  Matrix features;  // examples x dims
  std::vector<int> labels;
  int class_count = 0;

  size_t size() const { return labels.size(); }

  // Copies the given rows into a new dataset with the same class count.
  Dataset Subset(const std::vector<size_t>& indices) const;
};

struct ClientSplit {
  std::vector<size_t> train;
  std::vector<size_t> test;
};

struct Partition {
  std::vector<ClientSplit> clients;
};

enum class PartitionMode { kIid, kLabelSkew };

struct PartitionSpec {
  PartitionMode mode = PartitionMode::kIid;
  double alpha = 0.5;  // Dirichlet concentration, label-skew only
};

// Isotropic unit-variance Gaussian clusters. Centroids are rejection-sampled
// so every pair is at least 4 standard deviations apart.
Dataset SynthGaussianBlobs(int classes, size_t dims, size_t per_class, uint64_t seed);

// Splits the dataset across clients. Every client's last 20% of indices (in
// assignment order) form its test split.
Partition MakePartition(const Dataset& ds, size_t clients, const PartitionSpec& spec,
                        uint64_t seed);

// Reads `f0,...,fd-1,label` rows after a header line.
Dataset LoadCsv(const std::string& path);

// Throws DataError unless labels are in range and every class is present.
void ValidateDataset(const Dataset& ds);

}  // namespace fluid

#endif  // FLUID_DATA_H_
