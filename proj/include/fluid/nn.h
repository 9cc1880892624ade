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

#ifndef FLUID_NN_H_
#define FLUID_NN_H_

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace fluid {

// Dense row-major matrix of doubles.
class Matrix {
 public:
  Matrix() = default;
  Matrix(size_t rows, size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}
  Matrix(size_t rows, size_t cols, std::vector<double> data);

  size_t rows() const { return rows_; }
  size_t cols() const { return cols_; }
  size_t size() const { return data_.size(); }

  double& operator()(size_t r, size_t c) { return data_[r * cols_ + c]; }
  double operator()(size_t r, size_t c) const { return data_[r * cols_ + c]; }

  std::span<double> row(size_t r) { return {data_.data() + r * cols_, cols_}; }
  std::span<const double> row(size_t r) const {
    return {data_.data() + r * cols_, cols_};
  }

  std::vector<double>& data() { return data_; }
  const std::vector<double>& data() const { return data_; }

  bool operator==(const Matrix&) const = default;

 private:
  size_t rows_ = 0;
  size_t cols_ = 0;
  std::vector<double> data_;
};

enum class Activation { kReLU, kSoftmax, kIdentity };

// One fully-connected layer. A neuron is one weight row plus its bias.
struct DenseLayer {
  Matrix weights;  // out_neurons x in_features
  std::vector<double> biases;
  Activation activation = Activation::kReLU;

  size_t in_features() const { return weights.cols(); }
  size_t out_neurons() const { return weights.rows(); }
  size_t parameter_count() const { return weights.size() + biases.size(); }

  bool operator==(const DenseLayer&) const = default;
};

struct Model {
  std::vector<DenseLayer> layers;

  size_t input_size() const;
  size_t output_size() const;
  size_t parameter_count() const;
  // Layers whose neurons may be masked (all but the output layer).
  size_t hidden_layer_count() const { return layers.empty() ? 0 : layers.size() - 1; }

  bool operator==(const Model&) const = default;
};

struct LayerGradient {
  Matrix weights;
  std::vector<double> biases;
};

struct GradientSet {
  std::vector<LayerGradient> layers;
};

struct BackwardResult {
  GradientSet gradients;
  double loss = 0.0;
};

// Builds an MLP with ReLU hidden layers and a softmax output, initialized
// uniform(-s, s) with s = sqrt(6 / (fan_in + fan_out)), biases included.
Model MakeMlp(size_t inputs, std::span<const size_t> hidden, size_t classes,
              uint64_t seed);

// Throws DimensionError on malformed layer chains.
void ValidateModel(const Model& model);

// Returns the activations of the final layer, one row per example.
Matrix Forward(const Model& model, const Matrix& batch);

// Mean cross-entropy loss over the batch and its exact gradient. The final
// layer must be softmax.
BackwardResult Backward(const Model& model, const Matrix& batch,
                        std::span<const int> labels);

// p' = p - lr * g for every parameter.
Model SgdStep(const Model& model, const GradientSet& grads, double lr);

double Loss(const Model& model, const Matrix& batch, std::span<const int> labels);

// Fraction of rows whose argmax equals the label.
double Accuracy(const Model& model, const Matrix& batch, std::span<const int> labels);

bool AllFinite(const Model& model);

}  // namespace fluid

#endif  // FLUID_NN_H_
