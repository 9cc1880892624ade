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

#include "fluid/nn.h"

#include <algorithm>
#include <cmath>
#include <string>

#include "fluid/errors.h"
#include "fluid/rng.h"

namespace fluid {
namespace {

void ApplyActivation(Activation act, Matrix& z) {
  switch (act) {
    case Activation::kIdentity:
      return;
    case Activation::kReLU:
      for (double& v : z.data()) v = std::max(v, 0.0);
      return;
    case Activation::kSoftmax:
      for (size_t r = 0; r < z.rows(); ++r) {
        auto row = z.row(r);
        const double peak = *std::max_element(row.begin(), row.end());
        double total = 0.0;
        for (double& v : row) {
          v = std::exp(v - peak);
          total += v;
        }
        for (double& v : row) v /= total;
      }
      return;
  }
}

// z = x * W^T + b
Matrix Affine(const DenseLayer& layer, const Matrix& x) {
  const size_t out = layer.out_neurons();
  const size_t in = layer.in_features();
  Matrix z(x.rows(), out);
  for (size_t r = 0; r < x.rows(); ++r) {
    auto xr = x.row(r);
    for (size_t o = 0; o < out; ++o) {
      auto w = layer.weights.row(o);
      double acc = layer.biases[o];
      for (size_t i = 0; i < in; ++i) acc += w[i] * xr[i];
      z(r, o) = acc;
    }
  }
  return z;
}

void CheckBatch(const Model& model, const Matrix& batch) {
  ValidateModel(model);
  if (batch.cols() != model.input_size()) {
    throw DimensionError("batch has " + std::to_string(batch.cols()) +
                         " columns, model expects " +
                         std::to_string(model.input_size()));
  }
}

void CheckLabels(const Model& model, const Matrix& batch,
                 std::span<const int> labels) {
  if (batch.rows() == 0) throw EmptyInputError("empty batch");
  if (labels.size() != batch.rows()) {
    throw DimensionError("label count does not match batch rows");
  }
  const auto classes = static_cast<int>(model.output_size());
  for (int y : labels) {
    if (y < 0 || y >= classes) {
      throw DimensionError("label " + std::to_string(y) + " outside [0, " +
                           std::to_string(classes) + ")");
    }
  }
}

// Mean of logsumexp(z) - z[y] over rows.
double CrossEntropyFromLogits(const Matrix& logits, std::span<const int> labels) {
  double total = 0.0;
  for (size_t r = 0; r < logits.rows(); ++r) {
    auto row = logits.row(r);
    const double peak = *std::max_element(row.begin(), row.end());
    double sum = 0.0;
    for (double v : row) sum += std::exp(v - peak);
    total += peak + std::log(sum) - row[labels[r]];
  }
  return total / static_cast<double>(logits.rows());
}

}  // namespace

Matrix::Matrix(size_t rows, size_t cols, std::vector<double> data)
    : rows_(rows), cols_(cols), data_(std::move(data)) {
  if (data_.size() != rows_ * cols_) {
    throw DimensionError("matrix data length " + std::to_string(data_.size()) +
                         " != " + std::to_string(rows_) + "x" + std::to_string(cols_));
  }
}

size_t Model::input_size() const {
  return layers.empty() ? 0 : layers.front().in_features();
}

size_t Model::output_size() const {
  return layers.empty() ? 0 : layers.back().out_neurons();
}

size_t Model::parameter_count() const {
  size_t n = 0;
  for (const auto& l : layers) n += l.parameter_count();
  return n;
}

void ValidateModel(const Model& model) {
  if (model.layers.empty()) throw DimensionError("model has no layers");
  for (size_t j = 0; j < model.layers.size(); ++j) {
    const auto& l = model.layers[j];
    if (l.biases.size() != l.out_neurons()) {
      throw DimensionError("layer " + std::to_string(j) + " bias length mismatch");
    }
    if (j > 0 && l.in_features() != model.layers[j - 1].out_neurons()) {
      throw DimensionError("layer " + std::to_string(j) +
                           " input size does not match previous layer");
    }
  }
}

Model MakeMlp(size_t inputs, std::span<const size_t> hidden, size_t classes,
              uint64_t seed) {
  Rng rng(seed);
  Model model;
  size_t fan_in = inputs;
  auto add_layer = [&](size_t out, Activation act) {
    DenseLayer layer{Matrix(out, fan_in), std::vector<double>(out, 0.0), act};
    const double s = std::sqrt(6.0 / static_cast<double>(fan_in + out));
    for (double& w : layer.weights.data()) w = UniformIn(rng, -s, s);
    for (double& b : layer.biases) b = UniformIn(rng, -s, s);
    model.layers.push_back(std::move(layer));
    fan_in = out;
  };
  for (size_t h : hidden) add_layer(h, Activation::kReLU);
  add_layer(classes, Activation::kSoftmax);
  return model;
}

Matrix Forward(const Model& model, const Matrix& batch) {
  CheckBatch(model, batch);
  Matrix x = batch;
  for (const auto& layer : model.layers) {
    Matrix z = Affine(layer, x);
    ApplyActivation(layer.activation, z);
    x = std::move(z);
  }
  return x;
}

BackwardResult Backward(const Model& model, const Matrix& batch,
                        std::span<const int> labels) {
  CheckBatch(model, batch);
  CheckLabels(model, batch, labels);
  if (model.layers.back().activation != Activation::kSoftmax) {
    throw DimensionError("backward requires a softmax output layer");
  }
  const size_t depth = model.layers.size();

  // inputs[j] is the input of layer j; pre[j] its pre-activation.
  std::vector<Matrix> inputs;
  std::vector<Matrix> pre;
  inputs.reserve(depth);
  pre.reserve(depth);
  Matrix x = batch;
  for (const auto& layer : model.layers) {
    if (&layer != &model.layers.back() && layer.activation == Activation::kSoftmax) {
      throw DimensionError("softmax is only supported on the output layer");
    }
    inputs.push_back(x);
    Matrix z = Affine(layer, x);
    pre.push_back(z);
    ApplyActivation(layer.activation, z);
    x = std::move(z);
  }

  BackwardResult result;
  result.loss = CrossEntropyFromLogits(pre.back(), labels);
  result.gradients.layers.resize(depth);

  const double inv_batch = 1.0 / static_cast<double>(batch.rows());
  Matrix delta = x;  // softmax probabilities
  for (size_t r = 0; r < delta.rows(); ++r) {
    delta(r, labels[r]) -= 1.0;
    for (double& v : delta.row(r)) v *= inv_batch;
  }

  for (size_t j = depth; j-- > 0;) {
    const auto& layer = model.layers[j];
    const Matrix& in = inputs[j];
    auto& grad = result.gradients.layers[j];
    grad.weights = Matrix(layer.out_neurons(), layer.in_features());
    grad.biases.assign(layer.out_neurons(), 0.0);
    for (size_t r = 0; r < delta.rows(); ++r) {
      auto d = delta.row(r);
      auto a = in.row(r);
      for (size_t o = 0; o < layer.out_neurons(); ++o) {
        if (d[o] == 0.0) continue;
        grad.biases[o] += d[o];
        auto gw = grad.weights.row(o);
        for (size_t i = 0; i < layer.in_features(); ++i) gw[i] += d[o] * a[i];
      }
    }
    if (j == 0) break;

    Matrix prev(delta.rows(), layer.in_features());
    for (size_t r = 0; r < delta.rows(); ++r) {
      auto d = delta.row(r);
      auto p = prev.row(r);
      for (size_t o = 0; o < layer.out_neurons(); ++o) {
        if (d[o] == 0.0) continue;
        auto w = layer.weights.row(o);
        for (size_t i = 0; i < layer.in_features(); ++i) p[i] += d[o] * w[i];
      }
    }
    if (model.layers[j - 1].activation == Activation::kReLU) {
      const Matrix& z = pre[j - 1];
      for (size_t k = 0; k < prev.size(); ++k) {
        if (z.data()[k] <= 0.0) prev.data()[k] = 0.0;
      }
    }
    delta = std::move(prev);
  }
  return result;
}

Model SgdStep(const Model& model, const GradientSet& grads, double lr) {
  if (lr < 0.0 || !std::isfinite(lr)) throw RateError("learning rate must be >= 0");
  if (grads.layers.size() != model.layers.size()) {
    throw ShapeError("gradient layer count does not match model");
  }
  Model out = model;
  for (size_t j = 0; j < out.layers.size(); ++j) {
    auto& layer = out.layers[j];
    const auto& g = grads.layers[j];
    if (g.weights.rows() != layer.weights.rows() ||
        g.weights.cols() != layer.weights.cols() ||
        g.biases.size() != layer.biases.size()) {
      throw ShapeError("gradient shape mismatch at layer " + std::to_string(j));
    }
    for (size_t k = 0; k < layer.weights.size(); ++k) {
      layer.weights.data()[k] -= lr * g.weights.data()[k];
    }
    for (size_t k = 0; k < layer.biases.size(); ++k) {
      layer.biases[k] -= lr * g.biases[k];
    }
  }
  return out;
}

double Loss(const Model& model, const Matrix& batch, std::span<const int> labels) {
  CheckBatch(model, batch);
  CheckLabels(model, batch, labels);
  Matrix x = batch;
  for (size_t j = 0; j < model.layers.size(); ++j) {
    Matrix z = Affine(model.layers[j], x);
    if (j + 1 == model.layers.size()) return CrossEntropyFromLogits(z, labels);
    ApplyActivation(model.layers[j].activation, z);
    x = std::move(z);
  }
  return 0.0;
}

double Accuracy(const Model& model, const Matrix& batch, std::span<const int> labels) {
  if (batch.rows() == 0) return 0.0;
  const Matrix probs = Forward(model, batch);
  size_t hits = 0;
  for (size_t r = 0; r < probs.rows(); ++r) {
    auto row = probs.row(r);
    const auto best = std::max_element(row.begin(), row.end()) - row.begin();
    if (best == labels[r]) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(batch.rows());
}

bool AllFinite(const Model& model) {
  for (const auto& l : model.layers) {
    for (double v : l.weights.data()) {
      if (!std::isfinite(v)) return false;
    }
    for (double v : l.biases) {
      if (!std::isfinite(v)) return false;
    }
  }
  return true;
}

}  // namespace fluid
