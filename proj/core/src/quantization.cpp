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

#include "compfair/quantization.hpp"

#include <algorithm>
#include <cmath>

#include "compfair/error.hpp"

namespace compfair {

Tensor QuantizedTensor::dequantize() const {
  Tensor out(shape);
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = static_cast<float>(exact(i));
  return out;
}

double QuantizedTensor::exact(std::size_t i) const {
  return static_cast<double>(scale) * (static_cast<int>(values[i]) - static_cast<int>(zero_point));
}

QuantizedTensor quantize_tensor(const Tensor& tensor) {
  QuantizedTensor q;
  q.shape = tensor.shape();
  q.values.assign(tensor.size(), 0);
  float max_abs = 0.0f;
  for (float v : tensor.data()) {
    if (!std::isfinite(v)) throw ParameterError("cannot quantize a non-finite weight");
    max_abs = std::max(max_abs, std::fabs(v));
  }
  if (max_abs == 0.0f) return q;
  q.scale = static_cast<float>(static_cast<double>(max_abs) / kQuantMax);
  const double s = q.scale;
  for (std::size_t i = 0; i < tensor.size(); ++i) {
    const double r = std::round(tensor[i] / s);
    q.values[i] = static_cast<std::int8_t>(std::clamp(r, -double{kQuantMax}, double{kQuantMax}));
  }
  return q;
}

const QuantizedTensor* QuantizedModel::find(const std::string& name) const {
  for (const auto& q : quantized)
    if (q.name == name) return &q.tensor;
  return nullptr;
}

bool quantizable(const Layer& layer, const Parameter& param) {
  return (layer.kind == LayerKind::Conv2D || layer.kind == LayerKind::Dense) &&
         (param.name.ends_with("/kernel") || param.name.ends_with("/bias"));
}

QuantizedModel quantize_model(const Model& model) {
  QuantizedModel out{model, {}};
  for (auto& layer : out.model.layers())
    for (auto& p : layer.params) {
      if (!quantizable(layer, p)) continue;
      QuantizedTensor q = quantize_tensor(p.value);
      p.value = q.dequantize();
      out.quantized.push_back({p.name, std::move(q)});
    }
  return out;
}

Tensor forward_quantized(const QuantizedModel& qmodel, const Tensor& batch) {
  return forward(qmodel.model, batch, Mode::Infer);
}

}  // namespace compfair
