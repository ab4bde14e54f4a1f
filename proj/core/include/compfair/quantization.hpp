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

#ifndef COMPFAIR_QUANTIZATION_HPP_
#define COMPFAIR_QUANTIZATION_HPP_

#include <cstdint>
#include <string>
#include <vector>

#include "compfair/network.hpp"
#include "compfair/tensor.hpp"

namespace compfair {

inline constexpr int kQuantMax = 127;

/// Per-tensor symmetric int8: value = scale * (q - zero_point).
struct QuantizedTensor {
  Shape shape;
  std::vector<std::int8_t> values;
  float scale = 1.0f;
  std::int8_t zero_point = 0;

  Tensor dequantize() const;
  /// Element i dequantized in double, free of float rounding.
  double exact(std::size_t i) const;
};

/// scale = max|w| / 127 and q = clamp(round(w / scale), -127, 127). An
/// all-zero tensor gets scale 1 and q = 0.
QuantizedTensor quantize_tensor(const Tensor& tensor);

struct NamedQuantized {
  std::string name;
  QuantizedTensor tensor;
};

/// `model` carries the dequantized weights, so inference is the float
/// forward pass; `quantized` holds the int8 representation in
/// parameters() order.
struct QuantizedModel {
  Model model;
  std::vector<NamedQuantized> quantized;

  const QuantizedTensor* find(const std::string& name) const;
};

/// True for Conv2D/Dense kernels and biases.
bool quantizable(const Layer& layer, const Parameter& param);

/// Quantizes every Conv2D/Dense kernel and bias; BatchNorm stays float.
QuantizedModel quantize_model(const Model& model);

/// Dequantize-then-compute inference (activations stay float).
Tensor forward_quantized(const QuantizedModel& qmodel, const Tensor& batch);

}  // namespace compfair

#endif  // COMPFAIR_QUANTIZATION_HPP_
