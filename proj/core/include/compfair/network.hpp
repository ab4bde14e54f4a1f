/*
 * Copyright 2026 The compfair Authors.
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#ifndef COMPFAIR_NETWORK_HPP_
#define COMPFAIR_NETWORK_HPP_

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "compfair/rng.hpp"
#include "compfair/tensor.hpp"

namespace compfair {

enum class LayerKind { Conv2D, BatchNorm, Activation, MaxPool, Dropout, Flatten, Dense, Softmax };
enum class ActivationFn { Relu, Linear };

std::string_view to_string(LayerKind kind);

/// Kind-specific hyperparameters; fields not used by a kind stay at their
/// defaults.
struct LayerConfig {
  std::size_t filters = 0;
  std::size_t kernel_size = 0;
  Padding padding = Padding::Same;
  std::size_t units = 0;
  float epsilon = 1e-3f;
  float momentum = 0.99f;
  float rate = 0.0f;
  ActivationFn activation = ActivationFn::Relu;
};

struct Parameter {
  std::string name;  // "<layer>/<role>", e.g. "conv2d_1/kernel"
  Tensor value;
  bool trainable = true;
  bool prunable = false;  // Conv2D and Dense kernels only
};

struct Layer {
  LayerKind kind = LayerKind::Flatten;
  std::string name;
  LayerConfig config;
  Shape input_shape;  // per sample, no batch axis
  Shape output_shape;
  std::vector<Parameter> params;

  const Parameter* find(std::string_view role) const;
  Parameter* find(std::string_view role);
};

class Model {
 public:
  Model() = default;
  Model(std::string name, Shape input_shape, std::vector<Layer> layers);

  const std::string& name() const noexcept { return name_; }
  const Shape& input_shape() const noexcept { return input_shape_; }
  std::size_t num_classes() const noexcept { return num_classes_; }
  const std::vector<Layer>& layers() const noexcept { return layers_; }
  std::vector<Layer>& layers() noexcept { return layers_; }

  /// Throws LookupError for an unknown name.
  const Layer& layer(std::string_view name) const;
  Layer& layer(std::string_view name);

  /// Elements of tensors updated by the optimizer.
  std::size_t trainable_parameter_count() const;
  /// Trainable plus BatchNorm running statistics.
  std::size_t total_parameter_count() const;

 private:
  std::string name_;
  Shape input_shape_;
  std::size_t num_classes_ = 0;
  std::vector<Layer> layers_;
};

struct ParameterView {
  std::string_view name;
  Tensor* tensor;
  bool trainable;
  bool prunable;
};

struct ConstParameterView {
  std::string_view name;
  const Tensor* tensor;
  bool trainable;
  bool prunable;
};

/// Every parameter tensor in layer order, roles in declaration order.
std::vector<ParameterView> parameters(Model& model);
std::vector<ConstParameterView> parameters(const Model& model);

/// Finds a parameter tensor by its full name. Throws LookupError.
const Tensor& parameter(const Model& model, std::string_view name);
Tensor& parameter(Model& model, std::string_view name);

class ModelBuilder {
 public:
  ModelBuilder(std::string name, Shape input_shape);

  ModelBuilder& conv2d(std::size_t filters, std::size_t kernel_size,
                       Padding padding = Padding::Same);
  ModelBuilder& batch_norm(float epsilon = 1e-3f, float momentum = 0.99f);
  ModelBuilder& activation(ActivationFn fn = ActivationFn::Relu);
  ModelBuilder& max_pool();
  ModelBuilder& dropout(float rate);
  ModelBuilder& flatten();
  ModelBuilder& dense(std::size_t units);
  ModelBuilder& softmax();

  /// Kernels drawn from a fan-in scaled truncated normal, biases zero,
  /// BatchNorm at identity.
  Model build(std::uint64_t seed) const;
  /// All kernels zero; used when parameters are filled in from a file.
  Model build_uninitialized() const;

 private:
  ModelBuilder& push(LayerKind kind, LayerConfig config);

  std::string name_;
  Shape input_shape_;
  Shape current_;
  std::vector<Layer> layers_;
  std::vector<std::size_t> kind_counts_ = std::vector<std::size_t>(8, 0);
};

struct ArchitectureOptions {
  float conv_dropout = 0.25f;
  float dense_dropout = 0.5f;
  float bn_epsilon = 1e-3f;
  float bn_momentum = 0.99f;
};

/// 48x48x1 input, 8 classes: conv 64(3x3)/128(5x5)/512(3x3)/512(3x3) blocks,
/// dense 256/512, softmax head.
Model build_ck48(std::uint64_t seed = 0, const ArchitectureOptions& options = {});
/// 100x100x1 input, 7 classes, same stack as build_ck48.
Model build_raf100(std::uint64_t seed = 0, const ArchitectureOptions& options = {});

/// Architecture descriptor (no weights).
nlohmann::json architecture_to_json(const Model& model);
ModelBuilder builder_from_json(const nlohmann::json& description);
Model model_from_json(const nlohmann::json& description, std::uint64_t seed);
Model load_architecture(const std::filesystem::path& path, std::uint64_t seed);

enum class Mode { Train, Infer };

/// Per-layer intermediate values kept for the backward pass.
struct LayerCache {
  Tensor input;
  Tensor output;
  Tensor normalized;             // BatchNorm x-hat
  std::vector<float> mean;       // BatchNorm batch mean
  std::vector<float> variance;   // BatchNorm biased batch variance
  std::vector<float> inv_std;
  std::vector<std::uint32_t> argmax;  // MaxPool flat input index per output
  std::vector<float> keep_scale;      // Dropout mask times 1/(1-rate)
};

struct ForwardTrace {
  std::vector<LayerCache> layers;
};

/// Class probabilities for an NHWC (or [N, features]) batch. In Infer mode
/// Dropout is the identity and BatchNorm uses running statistics. In Train
/// mode BatchNorm normalizes with batch statistics and Dropout draws its
/// mask from `dropout_rng` (stream split per layer index). The model is not
/// modified; running statistics are updated separately.
Tensor forward(const Model& model, const Tensor& batch, Mode mode = Mode::Infer,
               const Rng* dropout_rng = nullptr, ForwardTrace* trace = nullptr);

/// Folds the batch statistics recorded in a Train-mode trace into the
/// BatchNorm running mean/variance.
void update_running_statistics(Model& model, const ForwardTrace& trace);

/// Gradients of a scalar loss w.r.t. every tensor in parameters(model),
/// given dLoss/dProbabilities. Non-trainable tensors receive zeros.
std::vector<Tensor> backward_from_output(const Model& model, const ForwardTrace& trace,
                                         const Tensor& output_grad);

/// Dropout keep test for element `index` of a layer's stream.
bool dropout_keeps(const Rng& layer_stream, std::size_t index, float rate);

}  // namespace compfair

#endif  // COMPFAIR_NETWORK_HPP_
