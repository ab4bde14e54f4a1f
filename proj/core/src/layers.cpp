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

// Forward and backward passes for each layer kind.

#include <algorithm>
#include <cmath>
#include <limits>

#include "compfair/error.hpp"
#include "compfair/network.hpp"
#include "kernels.hpp"

namespace compfair {
namespace {

Shape with_batch(std::size_t batch, const Shape& per_sample) {
  Shape s{batch};
  s.insert(s.end(), per_sample.begin(), per_sample.end());
  return s;
}

kernels::ConvGeometry geometry_of(const Layer& layer) {
  kernels::ConvGeometry g{};
  g.height = layer.input_shape[0];
  g.width = layer.input_shape[1];
  g.in_channels = layer.input_shape[2];
  g.kernel_h = g.kernel_w = layer.config.kernel_size;
  g.out_height = layer.output_shape[0];
  g.out_width = layer.output_shape[1];
  const bool same = layer.config.padding == Padding::Same;
  g.pad_top = same ? same_padding_before(g.kernel_h) : 0;
  g.pad_left = same ? same_padding_before(g.kernel_w) : 0;
  return g;
}

void add_bias_rows(Tensor& out, const Tensor& bias) {
  const std::size_t c = bias.size();
  float* o = out.raw();
  for (std::size_t i = 0; i < out.size(); i += c)
    for (std::size_t j = 0; j < c; ++j) o[i + j] += bias[j];
}

void sum_rows_into(const Tensor& dy, Tensor& dbias) {
  const std::size_t c = dbias.size();
  std::vector<double> acc(c, 0.0);
  for (std::size_t i = 0; i < dy.size(); i += c)
    for (std::size_t j = 0; j < c; ++j) acc[j] += dy[i + j];
  for (std::size_t j = 0; j < c; ++j) dbias[j] = static_cast<float>(acc[j]);
}

// ---------------------------------------------------------------------------
// Forward

Tensor conv_forward(const Layer& layer, const Tensor& x) {
  Tensor out = conv2d(x, layer.find("kernel")->value, layer.config.padding);
  add_bias_rows(out, layer.find("bias")->value);
  return out;
}

Tensor dense_forward(const Layer& layer, const Tensor& x) {
  const Tensor& w = layer.find("kernel")->value;
  const std::size_t n = x.dim(0);
  Tensor out({n, w.dim(1)});
  kernels::gemm_nn(n, w.dim(1), w.dim(0), x.raw(), w.raw(), out.raw());
  add_bias_rows(out, layer.find("bias")->value);
  return out;
}

Tensor batch_norm_forward(const Layer& layer, const Tensor& x, Mode mode, LayerCache* cache) {
  const std::size_t c = layer.output_shape.back();
  const float eps = layer.config.epsilon;
  const Tensor& gamma = layer.find("gamma")->value;
  const Tensor& beta = layer.find("beta")->value;
  Tensor out(x.shape());

  if (mode == Mode::Infer) {
    const Tensor& rm = layer.find("moving_mean")->value;
    const Tensor& rv = layer.find("moving_variance")->value;
    std::vector<float> scale(c), shift(c);
    for (std::size_t j = 0; j < c; ++j) {
      scale[j] = gamma[j] / std::sqrt(rv[j] + eps);
      shift[j] = beta[j] - rm[j] * scale[j];
    }
    for (std::size_t i = 0; i < x.size(); i += c)
      for (std::size_t j = 0; j < c; ++j) out[i + j] = x[i + j] * scale[j] + shift[j];
    return out;
  }

  const std::size_t m = x.size() / c;
  std::vector<double> sum(c, 0.0), sq(c, 0.0);
  for (std::size_t i = 0; i < x.size(); i += c)
    for (std::size_t j = 0; j < c; ++j) sum[j] += x[i + j];
  std::vector<float> mean(c), var(c), inv_std(c);
  for (std::size_t j = 0; j < c; ++j) sum[j] /= static_cast<double>(m);
  for (std::size_t i = 0; i < x.size(); i += c)
    for (std::size_t j = 0; j < c; ++j) {
      const double d = x[i + j] - sum[j];
      sq[j] += d * d;
    }
  for (std::size_t j = 0; j < c; ++j) {
    const double v = sq[j] / static_cast<double>(m);
    mean[j] = static_cast<float>(sum[j]);
    var[j] = static_cast<float>(v);
    inv_std[j] = static_cast<float>(1.0 / std::sqrt(v + eps));
  }
  Tensor normalized(x.shape());
  for (std::size_t i = 0; i < x.size(); i += c)
    for (std::size_t j = 0; j < c; ++j) {
      const float xh = (x[i + j] - mean[j]) * inv_std[j];
      normalized[i + j] = xh;
      out[i + j] = gamma[j] * xh + beta[j];
    }
  if (cache) {
    cache->normalized = std::move(normalized);
    cache->mean = std::move(mean);
    cache->variance = std::move(var);
    cache->inv_std = std::move(inv_std);
  }
  return out;
}

Tensor maxpool_forward(const Tensor& x, LayerCache* cache) {
  const std::size_t n = x.dim(0), h = x.dim(1), w = x.dim(2), c = x.dim(3);
  const std::size_t oh = h / 2, ow = w / 2;
  Tensor out({n, oh, ow, c});
  std::vector<std::uint32_t> argmax(cache ? out.size() : 0);
  for (std::size_t b = 0; b < n; ++b)
    for (std::size_t y = 0; y < oh; ++y)
      for (std::size_t xo = 0; xo < ow; ++xo)
        for (std::size_t ch = 0; ch < c; ++ch) {
          float best = -std::numeric_limits<float>::infinity();
          std::size_t best_idx = 0;
          for (std::size_t dy = 0; dy < 2; ++dy)
            for (std::size_t dx = 0; dx < 2; ++dx) {
              const std::size_t idx = ((b * h + 2 * y + dy) * w + 2 * xo + dx) * c + ch;
              if (x[idx] > best || (dy == 0 && dx == 0)) {
                best = x[idx];
                best_idx = idx;
              }
            }
          const std::size_t o = ((b * oh + y) * ow + xo) * c + ch;
          out[o] = best;
          if (cache) argmax[o] = static_cast<std::uint32_t>(best_idx);
        }
  if (cache) cache->argmax = std::move(argmax);
  return out;
}

Tensor softmax_forward(const Tensor& x) {
  const std::size_t n = x.dim(0), k = x.dim(1);
  Tensor out(x.shape());
  for (std::size_t r = 0; r < n; ++r) {
    const float* row = x.raw() + r * k;
    float* o = out.raw() + r * k;
    const float mx = *std::max_element(row, row + k);
    double total = 0.0;
    for (std::size_t j = 0; j < k; ++j) {
      o[j] = std::exp(row[j] - mx);
      total += o[j];
    }
    const float inv = static_cast<float>(1.0 / total);
    for (std::size_t j = 0; j < k; ++j) o[j] *= inv;
  }
  return out;
}

Tensor layer_forward(const Layer& layer, std::size_t index, const Tensor& x, Mode mode,
                     const Rng* dropout_rng, LayerCache* cache) {
  switch (layer.kind) {
    case LayerKind::Conv2D: return conv_forward(layer, x);
    case LayerKind::Dense: return dense_forward(layer, x);
    case LayerKind::BatchNorm: return batch_norm_forward(layer, x, mode, cache);
    case LayerKind::Activation: {
      if (layer.config.activation == ActivationFn::Linear) return x;
      Tensor out(x.shape());
      for (std::size_t i = 0; i < x.size(); ++i) out[i] = x[i] > 0.0f ? x[i] : 0.0f;
      return out;
    }
    case LayerKind::MaxPool: return maxpool_forward(x, cache);
    case LayerKind::Dropout: {
      const float rate = layer.config.rate;
      if (mode == Mode::Infer || rate == 0.0f) {
        if (cache) cache->keep_scale.assign(x.size(), 1.0f);
        return x;
      }
      const Rng stream = (dropout_rng ? *dropout_rng : Rng(0)).split(index);
      const float scale = 1.0f / (1.0f - rate);
      std::vector<float> keep(x.size());
      Tensor out(x.shape());
      for (std::size_t i = 0; i < x.size(); ++i) {
        keep[i] = dropout_keeps(stream, i, rate) ? scale : 0.0f;
        out[i] = x[i] * keep[i];
      }
      if (cache) cache->keep_scale = std::move(keep);
      return out;
    }
    case LayerKind::Flatten: return x.reshaped({x.dim(0), x.size() / x.dim(0)});
    case LayerKind::Softmax: return softmax_forward(x);
  }
  return x;
}

// ---------------------------------------------------------------------------
// Backward. `grads` points at this layer's slots in the parameter-aligned
// gradient list.

Tensor conv_backward(const Layer& layer, const LayerCache& cache, const Tensor& dy, Tensor* grads) {
  const auto g = geometry_of(layer);
  const Tensor& kernel = layer.find("kernel")->value;
  const std::size_t n = cache.input.dim(0);
  const std::size_t cout = layer.config.filters;
  const std::size_t patch = g.patch();
  const std::size_t pixels = g.out_pixels();
  const std::size_t in_stride = g.height * g.width * g.in_channels;
  const std::size_t out_stride = pixels * cout;

  Tensor& dkernel = grads[0];
  Tensor& dbias = grads[1];
  std::vector<float> columns(pixels * patch);
  // Weight gradient: images in order, each element summed by one thread.
  for (std::size_t b = 0; b < n; ++b) {
    kernels::im2col(g, cache.input.raw() + b * in_stride, columns.data());
    kernels::gemm_tn(pixels, patch, cout, columns.data(), dy.raw() + b * out_stride, dkernel.raw());
  }
  sum_rows_into(dy, dbias);

  std::vector<float> kernel_t(patch * cout);
  kernels::transpose(patch, cout, kernel.raw(), kernel_t.data());
  Tensor dx(cache.input.shape());
#ifdef _OPENMP
#pragma omp parallel for schedule(static)
#endif
  for (std::ptrdiff_t b = 0; b < static_cast<std::ptrdiff_t>(n); ++b) {
    std::vector<float> dcol(pixels * patch, 0.0f);
    kernels::gemm_nn(pixels, patch, cout, dy.raw() + b * out_stride, kernel_t.data(), dcol.data());
    kernels::col2im(g, dcol.data(), dx.raw() + b * in_stride);
  }
  return dx;
}

Tensor dense_backward(const Layer& layer, const LayerCache& cache, const Tensor& dy, Tensor* grads) {
  const Tensor& w = layer.find("kernel")->value;
  const std::size_t n = cache.input.dim(0), in = w.dim(0), out = w.dim(1);
  kernels::gemm_tn(n, in, out, cache.input.raw(), dy.raw(), grads[0].raw());
  sum_rows_into(dy, grads[1]);
  std::vector<float> w_t(in * out);
  kernels::transpose(in, out, w.raw(), w_t.data());
  Tensor dx(cache.input.shape());
  kernels::gemm_nn(n, in, out, dy.raw(), w_t.data(), dx.raw());
  return dx;
}

Tensor batch_norm_backward(const Layer& layer, const LayerCache& cache, const Tensor& dy,
                           Tensor* grads) {
  const std::size_t c = layer.output_shape.back();
  const std::size_t m = dy.size() / c;
  const Tensor& gamma = layer.find("gamma")->value;
  const Tensor& xh = cache.normalized;
  if (xh.empty()) throw DimensionError("batch_norm backward needs a Train-mode trace");
  std::vector<double> sum_dy(c, 0.0), sum_dy_xh(c, 0.0);
  for (std::size_t i = 0; i < dy.size(); i += c)
    for (std::size_t j = 0; j < c; ++j) {
      sum_dy[j] += dy[i + j];
      sum_dy_xh[j] += static_cast<double>(dy[i + j]) * xh[i + j];
    }
  for (std::size_t j = 0; j < c; ++j) {
    grads[0][j] = static_cast<float>(sum_dy_xh[j]);  // gamma
    grads[1][j] = static_cast<float>(sum_dy[j]);     // beta
  }
  // dx = gamma * inv_std / m * (m*dy - sum(dy) - xh * sum(dy*xh))
  Tensor dx(dy.shape());
  const double md = static_cast<double>(m);
  for (std::size_t i = 0; i < dy.size(); i += c)
    for (std::size_t j = 0; j < c; ++j) {
      const double v = md * dy[i + j] - sum_dy[j] - xh[i + j] * sum_dy_xh[j];
      dx[i + j] = static_cast<float>(gamma[j] * cache.inv_std[j] * v / md);
    }
  return dx;
}

Tensor layer_backward(const Layer& layer, const LayerCache& cache, const Tensor& dy, Tensor* grads) {
  switch (layer.kind) {
    case LayerKind::Conv2D: return conv_backward(layer, cache, dy, grads);
    case LayerKind::Dense: return dense_backward(layer, cache, dy, grads);
    case LayerKind::BatchNorm: return batch_norm_backward(layer, cache, dy, grads);
    case LayerKind::Activation: {
      if (layer.config.activation == ActivationFn::Linear) return dy;
      Tensor dx(dy.shape());
      for (std::size_t i = 0; i < dy.size(); ++i) dx[i] = cache.input[i] > 0.0f ? dy[i] : 0.0f;
      return dx;
    }
    case LayerKind::MaxPool: {
      Tensor dx(cache.input.shape());
      for (std::size_t o = 0; o < dy.size(); ++o) dx[cache.argmax[o]] += dy[o];
      return dx;
    }
    case LayerKind::Dropout: {
      Tensor dx(dy.shape());
      for (std::size_t i = 0; i < dy.size(); ++i) dx[i] = dy[i] * cache.keep_scale[i];
      return dx;
    }
    case LayerKind::Flatten: return dy.reshaped(cache.input.shape());
    case LayerKind::Softmax: {
      const Tensor& p = cache.output;
      const std::size_t n = p.dim(0), k = p.dim(1);
      Tensor dz(p.shape());
      for (std::size_t r = 0; r < n; ++r) {
        double dot = 0.0;
        for (std::size_t j = 0; j < k; ++j) dot += static_cast<double>(dy[r * k + j]) * p[r * k + j];
        for (std::size_t j = 0; j < k; ++j)
          dz[r * k + j] = static_cast<float>(p[r * k + j] * (dy[r * k + j] - dot));
      }
      return dz;
    }
  }
  return dy;
}

}  // namespace

bool dropout_keeps(const Rng& layer_stream, std::size_t index, float rate) {
  return layer_stream.uniform_at(index) >= static_cast<double>(rate);
}

Tensor forward(const Model& model, const Tensor& batch, Mode mode, const Rng* dropout_rng,
               ForwardTrace* trace) {
  const Shape expected = with_batch(batch.rank() ? batch.dim(0) : 0, model.input_shape());
  if (batch.rank() != model.input_shape().size() + 1 || batch.shape() != expected)
    throw DimensionError("batch shape " + to_string(batch.shape()) + " does not match model input " +
                         to_string(model.input_shape()));
  if (trace) trace->layers.assign(model.layers().size(), {});
  Tensor x = batch;
  for (std::size_t i = 0; i < model.layers().size(); ++i) {
    const Layer& layer = model.layers()[i];
    LayerCache* cache = trace ? &trace->layers[i] : nullptr;
    Tensor y = layer_forward(layer, i, x, mode, dropout_rng, cache);
    if (cache) {
      cache->input = std::move(x);
      if (layer.kind == LayerKind::Softmax) cache->output = y;
    }
    x = std::move(y);
  }
  return x;
}

void update_running_statistics(Model& model, const ForwardTrace& trace) {
  if (trace.layers.size() != model.layers().size())
    throw DimensionError("trace does not belong to this model");
  for (std::size_t i = 0; i < model.layers().size(); ++i) {
    Layer& layer = model.layers()[i];
    if (layer.kind != LayerKind::BatchNorm) continue;
    const LayerCache& cache = trace.layers[i];
    if (cache.mean.empty()) continue;  // infer-mode trace
    const float mom = layer.config.momentum;
    Tensor& rm = layer.find("moving_mean")->value;
    Tensor& rv = layer.find("moving_variance")->value;
    for (std::size_t j = 0; j < rm.size(); ++j) {
      rm[j] = mom * rm[j] + (1.0f - mom) * cache.mean[j];
      rv[j] = mom * rv[j] + (1.0f - mom) * cache.variance[j];
    }
  }
}

std::vector<Tensor> backward_from_output(const Model& model, const ForwardTrace& trace,
                                         const Tensor& output_grad) {
  const auto& layers = model.layers();
  if (trace.layers.size() != layers.size()) throw DimensionError("trace does not belong to this model");
  std::vector<Tensor> grads;
  std::vector<std::size_t> offset(layers.size());
  for (std::size_t i = 0; i < layers.size(); ++i) {
    offset[i] = grads.size();
    for (const auto& p : layers[i].params) grads.emplace_back(p.value.shape());
  }
  Tensor dy = output_grad;
  for (std::size_t i = layers.size(); i-- > 0;) {
    Tensor* slot = grads.data() + offset[i];
    dy = layer_backward(layers[i], trace.layers[i], dy, slot);
  }
  return grads;
}

}  // namespace compfair
