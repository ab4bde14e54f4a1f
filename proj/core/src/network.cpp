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

#include "compfair/network.hpp"

#include <cmath>
#include <fstream>
#include <utility>

#include "compfair/error.hpp"

namespace compfair {

std::string_view to_string(LayerKind kind) {
  switch (kind) {
    case LayerKind::Conv2D: return "conv2d";
    case LayerKind::BatchNorm: return "batch_norm";
    case LayerKind::Activation: return "activation";
    case LayerKind::MaxPool: return "max_pool";
    case LayerKind::Dropout: return "dropout";
    case LayerKind::Flatten: return "flatten";
    case LayerKind::Dense: return "dense";
    case LayerKind::Softmax: return "softmax";
  }
  return "unknown";
}

namespace {

// Keras-style default layer names.
std::string_view default_prefix(LayerKind kind) {
  switch (kind) {
    case LayerKind::Conv2D: return "conv2d";
    case LayerKind::BatchNorm: return "batch_normalization";
    case LayerKind::Activation: return "activation";
    case LayerKind::MaxPool: return "max_pooling2d";
    case LayerKind::Dropout: return "dropout";
    case LayerKind::Flatten: return "flatten";
    case LayerKind::Dense: return "dense";
    case LayerKind::Softmax: return "softmax";
  }
  return "layer";
}

LayerKind kind_from_string(std::string_view s) {
  for (int k = 0; k < 8; ++k) {
    const auto kind = static_cast<LayerKind>(k);
    if (s == to_string(kind) || s == default_prefix(kind)) return kind;
  }
  if (s == "batchnorm" || s == "maxpool" || s == "max_pool2d") {
    return s == "batchnorm" ? LayerKind::BatchNorm : LayerKind::MaxPool;
  }
  throw ParameterError("unknown layer type '" + std::string(s) + "'");
}

std::string_view padding_name(Padding p) { return p == Padding::Same ? "same" : "valid"; }

}  // namespace

const Parameter* Layer::find(std::string_view role) const {
  for (const auto& p : params) {
    const auto slash = p.name.rfind('/');
    if (std::string_view(p.name).substr(slash + 1) == role) return &p;
  }
  return nullptr;
}

Parameter* Layer::find(std::string_view role) {
  return const_cast<Parameter*>(std::as_const(*this).find(role));
}

Model::Model(std::string name, Shape input_shape, std::vector<Layer> layers)
    : name_(std::move(name)), input_shape_(std::move(input_shape)), layers_(std::move(layers)) {
  if (layers_.empty()) throw ParameterError("model '" + name_ + "' has no layers");
  Shape current = input_shape_;
  for (const auto& layer : layers_) {
    if (layer.input_shape != current)
      throw DimensionError("layer '" + layer.name + "' expects input " +
                           to_string(layer.input_shape) + " but receives " + to_string(current));
    current = layer.output_shape;
  }
  if (layers_.back().kind != LayerKind::Softmax)
    throw ParameterError("model '" + name_ + "' must end with a softmax layer");
  if (current.size() != 1) throw DimensionError("model output must be a flat class vector");
  num_classes_ = current[0];
}

const Layer& Model::layer(std::string_view name) const {
  for (const auto& l : layers_)
    if (l.name == name) return l;
  throw LookupError("no layer named '" + std::string(name) + "' in model '" + name_ + "'");
}

Layer& Model::layer(std::string_view name) {
  return const_cast<Layer&>(std::as_const(*this).layer(name));
}

std::size_t Model::trainable_parameter_count() const {
  std::size_t n = 0;
  for (const auto& l : layers_)
    for (const auto& p : l.params)
      if (p.trainable) n += p.value.size();
  return n;
}

std::size_t Model::total_parameter_count() const {
  std::size_t n = 0;
  for (const auto& l : layers_)
    for (const auto& p : l.params) n += p.value.size();
  return n;
}

std::vector<ParameterView> parameters(Model& model) {
  std::vector<ParameterView> out;
  for (auto& l : model.layers())
    for (auto& p : l.params) out.push_back({p.name, &p.value, p.trainable, p.prunable});
  return out;
}

std::vector<ConstParameterView> parameters(const Model& model) {
  std::vector<ConstParameterView> out;
  for (const auto& l : model.layers())
    for (const auto& p : l.params) out.push_back({p.name, &p.value, p.trainable, p.prunable});
  return out;
}

const Tensor& parameter(const Model& model, std::string_view name) {
  for (const auto& l : model.layers())
    for (const auto& p : l.params)
      if (p.name == name) return p.value;
  throw LookupError("no parameter named '" + std::string(name) + "'");
}

Tensor& parameter(Model& model, std::string_view name) {
  return const_cast<Tensor&>(parameter(std::as_const(model), name));
}

// ---------------------------------------------------------------------------
// Builder

ModelBuilder::ModelBuilder(std::string name, Shape input_shape)
    : name_(std::move(name)), input_shape_(std::move(input_shape)), current_(input_shape_) {
  if (input_shape_.empty()) throw DimensionError("model input shape must be non-empty");
  for (auto d : input_shape_)
    if (d == 0) throw DimensionError("model input shape " + to_string(input_shape_) + " has a zero extent");
}

ModelBuilder& ModelBuilder::push(LayerKind kind, LayerConfig config) {
  Layer layer;
  layer.kind = kind;
  layer.config = config;
  auto& count = kind_counts_[static_cast<std::size_t>(kind)];
  layer.name = std::string(default_prefix(kind));
  if (count > 0) layer.name += "_" + std::to_string(count);
  ++count;
  layer.input_shape = current_;

  const auto require_rank = [&](std::size_t rank) {
    if (current_.size() != rank)
      throw DimensionError(std::string(to_string(kind)) + " layer '" + layer.name +
                           "' needs a rank-" + std::to_string(rank) + " input, got " +
                           to_string(current_));
  };

  switch (kind) {
    case LayerKind::Conv2D: {
      require_rank(3);
      if (config.filters == 0 || config.kernel_size == 0)
        throw ParameterError("conv2d needs positive filters and kernel_size");
      layer.output_shape = {conv_output_extent(current_[0], config.kernel_size, config.padding),
                            conv_output_extent(current_[1], config.kernel_size, config.padding),
                            config.filters};
      const std::size_t k = config.kernel_size;
      layer.params.push_back({layer.name + "/kernel", Tensor({k, k, current_[2], config.filters}),
                              true, true});
      layer.params.push_back({layer.name + "/bias", Tensor({config.filters}), true, false});
      break;
    }
    case LayerKind::Dense: {
      require_rank(1);
      if (config.units == 0) throw ParameterError("dense needs positive units");
      layer.output_shape = {config.units};
      layer.params.push_back({layer.name + "/kernel", Tensor({current_[0], config.units}), true, true});
      layer.params.push_back({layer.name + "/bias", Tensor({config.units}), true, false});
      break;
    }
    case LayerKind::BatchNorm: {
      const std::size_t c = current_.back();
      layer.output_shape = current_;
      layer.params.push_back({layer.name + "/gamma", Tensor({c}, 1.0f), true, false});
      layer.params.push_back({layer.name + "/beta", Tensor({c}, 0.0f), true, false});
      layer.params.push_back({layer.name + "/moving_mean", Tensor({c}, 0.0f), false, false});
      layer.params.push_back({layer.name + "/moving_variance", Tensor({c}, 1.0f), false, false});
      break;
    }
    case LayerKind::MaxPool: {
      require_rank(3);
      if (current_[0] < 2 || current_[1] < 2)
        throw DimensionError("max_pool on spatial extent below 2: " + to_string(current_));
      layer.output_shape = {current_[0] / 2, current_[1] / 2, current_[2]};
      break;
    }
    case LayerKind::Flatten:
      layer.output_shape = {element_count(current_)};
      break;
    case LayerKind::Dropout:
      if (!(config.rate >= 0.0f && config.rate < 1.0f))
        throw ParameterError("dropout rate must be in [0, 1)");
      layer.output_shape = current_;
      break;
    case LayerKind::Softmax:
      require_rank(1);
      layer.output_shape = current_;
      break;
    case LayerKind::Activation:
      layer.output_shape = current_;
      break;
  }
  current_ = layer.output_shape;
  layers_.push_back(std::move(layer));
  return *this;
}

ModelBuilder& ModelBuilder::conv2d(std::size_t filters, std::size_t kernel_size, Padding padding) {
  LayerConfig c;
  c.filters = filters;
  c.kernel_size = kernel_size;
  c.padding = padding;
  return push(LayerKind::Conv2D, c);
}

ModelBuilder& ModelBuilder::batch_norm(float epsilon, float momentum) {
  if (!(epsilon > 0.0f)) throw ParameterError("batch_norm epsilon must be positive");
  if (!(momentum >= 0.0f && momentum < 1.0f)) throw ParameterError("batch_norm momentum must be in [0, 1)");
  LayerConfig c;
  c.epsilon = epsilon;
  c.momentum = momentum;
  return push(LayerKind::BatchNorm, c);
}

ModelBuilder& ModelBuilder::activation(ActivationFn fn) {
  LayerConfig c;
  c.activation = fn;
  return push(LayerKind::Activation, c);
}

ModelBuilder& ModelBuilder::max_pool() { return push(LayerKind::MaxPool, {}); }

ModelBuilder& ModelBuilder::dropout(float rate) {
  LayerConfig c;
  c.rate = rate;
  return push(LayerKind::Dropout, c);
}

ModelBuilder& ModelBuilder::flatten() { return push(LayerKind::Flatten, {}); }

ModelBuilder& ModelBuilder::dense(std::size_t units) {
  LayerConfig c;
  c.units = units;
  return push(LayerKind::Dense, c);
}

ModelBuilder& ModelBuilder::softmax() { return push(LayerKind::Softmax, {}); }

Model ModelBuilder::build_uninitialized() const { return Model(name_, input_shape_, layers_); }

Model ModelBuilder::build(std::uint64_t seed) const {
  Model model = build_uninitialized();
  const Rng root = Rng(seed).split("init");
  std::uint64_t index = 0;
  for (auto& layer : model.layers()) {
    for (auto& p : layer.params) {
      ++index;
      if (!p.prunable) continue;  // kernels only; the rest keep their defaults
      const Shape& s = p.value.shape();
      std::size_t fan_in = 1;
      for (std::size_t i = 0; i + 1 < s.size(); ++i) fan_in *= s[i];
      Rng rng = root.split(index);
      p.value = truncated_normal(s, std::sqrt(2.0f / static_cast<float>(fan_in)), rng);
    }
  }
  return model;
}

namespace {

ModelBuilder reference_stack(std::string name, Shape input, std::size_t classes,
                             const ArchitectureOptions& o) {
  ModelBuilder b(std::move(name), std::move(input));
  const std::size_t filters[] = {64, 128, 512, 512};
  const std::size_t kernels[] = {3, 5, 3, 3};
  for (int i = 0; i < 4; ++i) {
    b.conv2d(filters[i], kernels[i])
        .batch_norm(o.bn_epsilon, o.bn_momentum)
        .activation()
        .max_pool()
        .dropout(o.conv_dropout);
  }
  b.flatten();
  for (std::size_t units : {256u, 512u}) {
    b.dense(units).batch_norm(o.bn_epsilon, o.bn_momentum).activation().dropout(o.dense_dropout);
  }
  b.dense(classes).softmax();
  return b;
}

}  // namespace

Model build_ck48(std::uint64_t seed, const ArchitectureOptions& options) {
  return reference_stack("ck48", {48, 48, 1}, 8, options).build(seed);
}

Model build_raf100(std::uint64_t seed, const ArchitectureOptions& options) {
  return reference_stack("raf100", {100, 100, 1}, 7, options).build(seed);
}

// ---------------------------------------------------------------------------
// JSON architecture descriptor

nlohmann::json architecture_to_json(const Model& model) {
  nlohmann::json layers = nlohmann::json::array();
  for (const auto& l : model.layers()) {
    nlohmann::json j;
    j["type"] = to_string(l.kind);
    switch (l.kind) {
      case LayerKind::Conv2D:
        j["filters"] = l.config.filters;
        j["kernel_size"] = l.config.kernel_size;
        j["padding"] = padding_name(l.config.padding);
        break;
      case LayerKind::Dense:
        j["units"] = l.config.units;
        break;
      case LayerKind::BatchNorm:
        j["epsilon"] = l.config.epsilon;
        j["momentum"] = l.config.momentum;
        break;
      case LayerKind::Dropout:
        j["rate"] = l.config.rate;
        break;
      case LayerKind::Activation:
        j["function"] = l.config.activation == ActivationFn::Relu ? "relu" : "linear";
        break;
      default:
        break;
    }
    layers.push_back(std::move(j));
  }
  return {{"name", model.name()}, {"input_shape", model.input_shape()}, {"layers", layers}};
}

ModelBuilder builder_from_json(const nlohmann::json& d) {
  try {
    ModelBuilder b(d.value("name", std::string("custom")), d.at("input_shape").get<Shape>());
    for (const auto& l : d.at("layers")) {
      switch (kind_from_string(l.at("type").get<std::string>())) {
        case LayerKind::Conv2D: {
          const std::string pad = l.value("padding", std::string("same"));
          if (pad != "same" && pad != "valid") throw ParameterError("padding must be same or valid");
          b.conv2d(l.at("filters").get<std::size_t>(), l.at("kernel_size").get<std::size_t>(),
                   pad == "same" ? Padding::Same : Padding::Valid);
          break;
        }
        case LayerKind::Dense: b.dense(l.at("units").get<std::size_t>()); break;
        case LayerKind::BatchNorm:
          b.batch_norm(l.value("epsilon", 1e-3f), l.value("momentum", 0.99f));
          break;
        case LayerKind::Dropout: b.dropout(l.at("rate").get<float>()); break;
        case LayerKind::Activation: {
          const std::string fn = l.value("function", std::string("relu"));
          if (fn != "relu" && fn != "linear") throw ParameterError("unsupported activation '" + fn + "'");
          b.activation(fn == "relu" ? ActivationFn::Relu : ActivationFn::Linear);
          break;
        }
        case LayerKind::MaxPool: b.max_pool(); break;
        case LayerKind::Flatten: b.flatten(); break;
        case LayerKind::Softmax: b.softmax(); break;
      }
    }
    return b;
  } catch (const nlohmann::json::exception& e) {
    throw ParameterError(std::string("invalid architecture description: ") + e.what());
  }
}

Model model_from_json(const nlohmann::json& description, std::uint64_t seed) {
  return builder_from_json(description).build(seed);
}

Model load_architecture(const std::filesystem::path& path, std::uint64_t seed) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open architecture file " + path.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ParameterError("cannot parse " + path.string() + ": " + e.what());
  }
  return model_from_json(j, seed);
}

}  // namespace compfair
