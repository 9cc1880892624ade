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

#include "fluid/dropout.h"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "fluid/errors.h"
#include "fluid/rng.h"

namespace fluid {
namespace {

std::vector<size_t> KeptIndices(const std::vector<bool>& keep) {
  std::vector<size_t> out;
  for (size_t i = 0; i < keep.size(); ++i) {
    if (keep[i]) out.push_back(i);
  }
  return out;
}

std::vector<size_t> AllIndices(size_t n) {
  std::vector<size_t> out(n);
  std::iota(out.begin(), out.end(), size_t{0});
  return out;
}

// Global row/column indices that survive in each layer of a sub-model.
struct LayerIndexMap {
  std::vector<size_t> rows;
  std::vector<size_t> cols;
};

std::vector<LayerIndexMap> IndexMaps(const Model& model, const NeuronMask& mask) {
  std::vector<LayerIndexMap> maps(model.layers.size());
  for (size_t j = 0; j < model.layers.size(); ++j) {
    const auto& layer = model.layers[j];
    maps[j].rows = j < mask.keep.size() ? KeptIndices(mask.keep[j])
                                        : AllIndices(layer.out_neurons());
    maps[j].cols = j == 0 ? AllIndices(layer.in_features()) : maps[j - 1].rows;
  }
  return maps;
}

}  // namespace

size_t NeuronMask::kept(size_t layer) const {
  return static_cast<size_t>(std::count(keep[layer].begin(), keep[layer].end(), true));
}

bool NeuronMask::full() const {
  return std::all_of(keep.begin(), keep.end(), [](const auto& layer) {
    return std::all_of(layer.begin(), layer.end(), [](bool k) { return k; });
  });
}

void CheckRate(double rate) {
  if (!(rate > 0.0 && rate <= 1.0)) {
    throw RateError("dropout rate " + std::to_string(rate) + " outside (0, 1]");
  }
}

size_t KeptCount(double rate, size_t neurons) {
  CheckRate(rate);
  // The epsilon keeps products like 0.15 * 10 rounding half-up.
  const auto k = static_cast<size_t>(std::floor(rate * static_cast<double>(neurons) + 0.5 + 1e-9));
  return std::clamp<size_t>(k, 1, neurons);
}

NeuronMask FullMask(const Model& model) {
  NeuronMask mask;
  for (size_t j = 0; j < model.hidden_layer_count(); ++j) {
    mask.keep.emplace_back(model.layers[j].out_neurons(), true);
  }
  return mask;
}

NeuronMask MaskRandom(const Model& model, double rate, uint64_t seed) {
  CheckRate(rate);
  Rng rng(seed);
  NeuronMask mask;
  mask.rate = rate;
  for (size_t j = 0; j < model.hidden_layer_count(); ++j) {
    const size_t n = model.layers[j].out_neurons();
    auto order = AllIndices(n);
    std::shuffle(order.begin(), order.end(), rng);
    std::vector<bool> keep(n, false);
    for (size_t i = 0; i < KeptCount(rate, n); ++i) keep[order[i]] = true;
    mask.keep.push_back(std::move(keep));
  }
  return mask;
}

NeuronMask MaskOrdered(const Model& model, double rate) {
  CheckRate(rate);
  NeuronMask mask;
  mask.rate = rate;
  for (size_t j = 0; j < model.hidden_layer_count(); ++j) {
    const size_t n = model.layers[j].out_neurons();
    std::vector<bool> keep(n, false);
    std::fill_n(keep.begin(), KeptCount(rate, n), true);
    mask.keep.push_back(std::move(keep));
  }
  return mask;
}

NeuronMask MaskInvariant(const Model& model, double rate,
                         const std::vector<std::vector<size_t>>& candidates,
                         const std::vector<std::vector<double>>& scores) {
  CheckRate(rate);
  NeuronMask mask;
  mask.rate = rate;
  for (size_t j = 0; j < model.hidden_layer_count(); ++j) {
    const size_t n = model.layers[j].out_neurons();
    size_t drops = n - KeptCount(rate, n);
    std::vector<bool> keep(n, true);

    if (j < candidates.size()) {
      for (size_t idx : candidates[j]) {
        if (drops == 0) break;
        if (idx >= n) throw ShapeError("candidate index out of range in layer " + std::to_string(j));
        if (!keep[idx]) continue;
        keep[idx] = false;
        --drops;
      }
    }
    if (drops > 0) {
      auto rest = KeptIndices(keep);
      const bool have_scores = j < scores.size() && scores[j].size() == n;
      std::stable_sort(rest.begin(), rest.end(), [&](size_t a, size_t b) {
        return have_scores && scores[j][a] < scores[j][b];
      });
      for (size_t i = 0; i < drops; ++i) keep[rest[i]] = false;
    }
    mask.keep.push_back(std::move(keep));
  }
  return mask;
}

void CheckMask(const Model& model, const NeuronMask& mask) {
  if (mask.keep.size() != model.hidden_layer_count()) {
    throw ShapeError("mask covers " + std::to_string(mask.keep.size()) +
                     " layers, model has " + std::to_string(model.hidden_layer_count()) +
                     " hidden layers");
  }
  for (size_t j = 0; j < mask.keep.size(); ++j) {
    if (mask.keep[j].size() != model.layers[j].out_neurons()) {
      throw ShapeError("mask length mismatch at layer " + std::to_string(j));
    }
    if (mask.kept(j) == 0) throw ShapeError("mask drops every neuron of layer " + std::to_string(j));
  }
}

SubModel Extract(const Model& model, const NeuronMask& mask) {
  ValidateModel(model);
  CheckMask(model, mask);
  SubModel sub{Model{}, mask};
  const auto maps = IndexMaps(model, mask);
  for (size_t j = 0; j < model.layers.size(); ++j) {
    const auto& src = model.layers[j];
    const auto& map = maps[j];
    DenseLayer layer{Matrix(map.rows.size(), map.cols.size()), {}, src.activation};
    layer.biases.reserve(map.rows.size());
    for (size_t a = 0; a < map.rows.size(); ++a) {
      for (size_t b = 0; b < map.cols.size(); ++b) {
        layer.weights(a, b) = src.weights(map.rows[a], map.cols[b]);
      }
      layer.biases.push_back(src.biases[map.rows[a]]);
    }
    sub.model.layers.push_back(std::move(layer));
  }
  return sub;
}

Model Merge(const Model& global, std::span<const ClientUpdate> updates) {
  if (updates.empty()) throw AggregationError("no client updates to aggregate");
  ValidateModel(global);

  struct Accumulator {
    Matrix weights;
    std::vector<double> biases;
  };
  // Per-coordinate running sums of example counts, weighted values and the
  // [min, max] of contributed values.
  std::vector<Accumulator> mass, sum, lo, hi;
  for (const auto& l : global.layers) {
    const size_t r = l.out_neurons(), c = l.in_features();
    mass.push_back({Matrix(r, c), std::vector<double>(r, 0.0)});
    sum.push_back({Matrix(r, c), std::vector<double>(r, 0.0)});
    lo.push_back({Matrix(r, c, INFINITY), std::vector<double>(r, INFINITY)});
    hi.push_back({Matrix(r, c, -INFINITY), std::vector<double>(r, -INFINITY)});
  }

  std::vector<std::vector<LayerIndexMap>> maps;
  for (const auto& u : updates) {
    CheckMask(global, u.mask);
    if (u.example_count == 0) throw AggregationError("client update carries zero examples");
    maps.push_back(IndexMaps(global, u.mask));
    const auto& m = maps.back();
    if (u.params.layers.size() != global.layers.size()) {
      throw ShapeError("update layer count does not match global model");
    }
    for (size_t j = 0; j < m.size(); ++j) {
      const auto& l = u.params.layers[j];
      if (l.weights.rows() != m[j].rows.size() || l.weights.cols() != m[j].cols.size() ||
          l.biases.size() != m[j].rows.size()) {
        throw ShapeError("update shape inconsistent with its mask at layer " + std::to_string(j));
      }
    }
  }

  // First pass: total example mass per coordinate.
  for (size_t u = 0; u < updates.size(); ++u) {
    const auto n = static_cast<double>(updates[u].example_count);
    for (size_t j = 0; j < global.layers.size(); ++j) {
      const auto& map = maps[u][j];
      for (size_t a = 0; a < map.rows.size(); ++a) {
        for (size_t col : map.cols) mass[j].weights(map.rows[a], col) += n;
        mass[j].biases[map.rows[a]] += n;
      }
    }
  }

  // Second pass: normalized weights, so a lone contributor is copied exactly.
  auto add = [](double value, double weight, double& s, double& l, double& h) {
    s += weight * value;
    l = std::min(l, value);
    h = std::max(h, value);
  };
  for (size_t u = 0; u < updates.size(); ++u) {
    const auto n = static_cast<double>(updates[u].example_count);
    const auto& params = updates[u].params;
    for (size_t j = 0; j < global.layers.size(); ++j) {
      const auto& map = maps[u][j];
      for (size_t a = 0; a < map.rows.size(); ++a) {
        const size_t row = map.rows[a];
        for (size_t b = 0; b < map.cols.size(); ++b) {
          const size_t col = map.cols[b];
          const double total = mass[j].weights(row, col);
          const double w = total > 0.0 ? n / total : 1.0;
          add(params.layers[j].weights(a, b), w, sum[j].weights(row, col),
              lo[j].weights(row, col), hi[j].weights(row, col));
        }
        const double total = mass[j].biases[row];
        const double w = total > 0.0 ? n / total : 1.0;
        add(params.layers[j].biases[a], w, sum[j].biases[row], lo[j].biases[row],
            hi[j].biases[row]);
      }
    }
  }

  Model out = global;
  auto settle = [](double& target, double s, double l, double h) {
    if (l <= h) target = std::clamp(s, l, h);
  };
  for (size_t j = 0; j < out.layers.size(); ++j) {
    auto& layer = out.layers[j];
    for (size_t k = 0; k < layer.weights.size(); ++k) {
      settle(layer.weights.data()[k], sum[j].weights.data()[k], lo[j].weights.data()[k],
             hi[j].weights.data()[k]);
    }
    for (size_t k = 0; k < layer.biases.size(); ++k) {
      settle(layer.biases[k], sum[j].biases[k], lo[j].biases[k], hi[j].biases[k]);
    }
  }
  return out;
}

}  // namespace fluid
