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

// Double-precision reference forward pass, written independently of the
// library kernels. Used as the finite-difference oracle for gradients.

#ifndef COMPFAIR_TESTS_REFERENCE_NET_HPP_
#define COMPFAIR_TESTS_REFERENCE_NET_HPP_

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <vector>

#include "compfair/network.hpp"
#include "compfair/trainer.hpp"

namespace compfair::oracle {

// Parameters as doubles, aligned with parameters(model).
inline std::vector<std::vector<double>> params_as_double(const Model& model) {
  std::vector<std::vector<double>> out;
  for (const auto& p : parameters(model)) out.emplace_back(p.tensor->data().begin(), p.tensor->data().end());
  return out;
}

struct RefResult {
  double loss = 0.0;
  // ReLU signs and max-pool winners; a change marks a non-differentiable
  // point between two evaluations.
  std::vector<std::int64_t> signature;
};

// Train-mode forward (batch statistics, dropout masks from `dropout_rng`)
// followed by the clamped mean cross-entropy.
inline RefResult reference_loss(const Model& model, const std::vector<std::vector<double>>& params,
                                const Tensor& batch, const Tensor& labels, const Rng& dropout_rng) {
  RefResult r;
  std::vector<double> x(batch.data().begin(), batch.data().end());
  Shape shape = batch.shape();
  const std::size_t n = shape[0];
  std::size_t p = 0;  // index into params

  for (std::size_t li = 0; li < model.layers().size(); ++li) {
    const Layer& layer = model.layers()[li];
    switch (layer.kind) {
      case LayerKind::Conv2D: {
        const auto& k = params[p];
        const auto& bias = params[p + 1];
        p += 2;
        const std::size_t h = shape[1], w = shape[2], cin = shape[3];
        const std::size_t kh = layer.config.kernel_size, kw = kh, cout = layer.config.filters;
        const bool same = layer.config.padding == Padding::Same;
        const std::size_t oh = same ? h : h - kh + 1, ow = same ? w : w - kw + 1;
        const long pt = same ? static_cast<long>((kh - 1) / 2) : 0, pl = same ? static_cast<long>((kw - 1) / 2) : 0;
        std::vector<double> y(n * oh * ow * cout);
        for (std::size_t b = 0; b < n; ++b)
          for (std::size_t oy = 0; oy < oh; ++oy)
            for (std::size_t ox = 0; ox < ow; ++ox)
              for (std::size_t co = 0; co < cout; ++co) {
                double acc = bias[co];
                for (std::size_t dy = 0; dy < kh; ++dy)
                  for (std::size_t dx = 0; dx < kw; ++dx) {
                    const long iy = static_cast<long>(oy + dy) - pt, ix = static_cast<long>(ox + dx) - pl;
                    if (iy < 0 || ix < 0 || iy >= static_cast<long>(h) || ix >= static_cast<long>(w)) continue;
                    for (std::size_t ci = 0; ci < cin; ++ci)
                      acc += x[((b * h + iy) * w + ix) * cin + ci] * k[((dy * kw + dx) * cin + ci) * cout + co];
                  }
                y[((b * oh + oy) * ow + ox) * cout + co] = acc;
              }
        x = std::move(y);
        shape = {n, oh, ow, cout};
        break;
      }
      case LayerKind::Dense: {
        const auto& k = params[p];
        const auto& bias = params[p + 1];
        p += 2;
        const std::size_t in = shape[1], out = layer.config.units;
        std::vector<double> y(n * out);
        for (std::size_t b = 0; b < n; ++b)
          for (std::size_t o = 0; o < out; ++o) {
            double acc = bias[o];
            for (std::size_t i = 0; i < in; ++i) acc += x[b * in + i] * k[i * out + o];
            y[b * out + o] = acc;
          }
        x = std::move(y);
        shape = {n, out};
        break;
      }
      case LayerKind::BatchNorm: {
        const auto& gamma = params[p];
        const auto& beta = params[p + 1];
        p += 4;  // moving statistics are not used in train mode
        const std::size_t c = shape.back(), m = x.size() / c;
        for (std::size_t j = 0; j < c; ++j) {
          double mean = 0.0, var = 0.0;
          for (std::size_t i = 0; i < m; ++i) mean += x[i * c + j];
          mean /= static_cast<double>(m);
          for (std::size_t i = 0; i < m; ++i) var += (x[i * c + j] - mean) * (x[i * c + j] - mean);
          var /= static_cast<double>(m);
          const double inv = 1.0 / std::sqrt(var + layer.config.epsilon);
          for (std::size_t i = 0; i < m; ++i) x[i * c + j] = gamma[j] * (x[i * c + j] - mean) * inv + beta[j];
        }
        break;
      }
      case LayerKind::Activation:
        if (layer.config.activation == ActivationFn::Relu)
          for (double& v : x) {
            r.signature.push_back(v > 0.0);
            v = std::max(v, 0.0);
          }
        break;
      case LayerKind::MaxPool: {
        const std::size_t h = shape[1], w = shape[2], c = shape[3], oh = h / 2, ow = w / 2;
        std::vector<double> y(n * oh * ow * c);
        for (std::size_t b = 0; b < n; ++b)
          for (std::size_t oy = 0; oy < oh; ++oy)
            for (std::size_t ox = 0; ox < ow; ++ox)
              for (std::size_t ch = 0; ch < c; ++ch) {
                double best = -std::numeric_limits<double>::infinity();
                std::int64_t arg = 0;
                for (std::size_t d = 0; d < 4; ++d) {
                  const double v = x[((b * h + 2 * oy + d / 2) * w + 2 * ox + d % 2) * c + ch];
                  if (v > best) {
                    best = v;
                    arg = static_cast<std::int64_t>(d);
                  }
                }
                r.signature.push_back(arg);
                y[((b * oh + oy) * ow + ox) * c + ch] = best;
              }
        x = std::move(y);
        shape = {n, oh, ow, c};
        break;
      }
      case LayerKind::Dropout: {
        const float rate = layer.config.rate;
        if (rate == 0.0f) break;
        const Rng stream = dropout_rng.split(li);
        for (std::size_t i = 0; i < x.size(); ++i)
          x[i] = dropout_keeps(stream, i, rate) ? x[i] / (1.0 - static_cast<double>(rate)) : 0.0;
        break;
      }
      case LayerKind::Flatten:
        shape = {n, x.size() / n};
        break;
      case LayerKind::Softmax: {
        const std::size_t k = shape[1];
        for (std::size_t b = 0; b < n; ++b) {
          double mx = -std::numeric_limits<double>::infinity(), sum = 0.0;
          for (std::size_t j = 0; j < k; ++j) mx = std::max(mx, x[b * k + j]);
          for (std::size_t j = 0; j < k; ++j) sum += std::exp(x[b * k + j] - mx);
          for (std::size_t j = 0; j < k; ++j) x[b * k + j] = std::exp(x[b * k + j] - mx) / sum;
        }
        break;
      }
    }
  }

  const std::size_t k = shape[1];
  for (std::size_t b = 0; b < n; ++b)
    for (std::size_t j = 0; j < k; ++j)
      if (labels[b * k + j] != 0.0f)
        r.loss -= labels[b * k + j] * std::log(std::clamp(x[b * k + j], double{kProbabilityFloor}, 1.0));
  r.loss /= static_cast<double>(n);
  return r;
}

struct GradCheckResult {
  std::size_t checked = 0;
  std::size_t skipped = 0;  // non-differentiable points
  double max_rel_error = 0.0;
  std::string worst;  // "<tensor>[index] analytic .. numeric .."
  // Elements that only pass through the absolute floor. Float32 backward
  // passes lose ~1e-7 absolute to cancellation, so gradients much smaller
  // than that cannot meet a purely relative bound.
  std::size_t below_floor = 0;
  std::vector<std::string> kinds_checked;
};

constexpr double kRelativeTolerance = 1e-3;
// Float32 noise floor of the analytic gradients, as an absolute tolerance.
constexpr double kAbsoluteFloor = 1e-6;

// |a - n| / max(|a|, |n|, floor). With the default floor, an error of at most
// kRelativeTolerance means |a - n| <= 1e-3 * max(|a|, |n|) or |a - n| <= 1e-6.
inline double relative_error(double a, double n, double floor = kAbsoluteFloor / kRelativeTolerance) {
  return std::fabs(a - n) / std::max({std::fabs(a), std::fabs(n), floor});
}

// Compares backward() against central differences of reference_loss.
inline GradCheckResult gradient_check(const Model& model, const Tensor& batch, const Tensor& labels,
                                      const Rng& dropout_rng, double step = 1e-3) {
  GradCheckResult out;
  const auto grads = backward(model, batch, labels, &dropout_rng);
  auto params = params_as_double(model);
  const RefResult base = reference_loss(model, params, batch, labels, dropout_rng);
  const auto views = parameters(model);
  for (std::size_t t = 0; t < views.size(); ++t) {
    if (!views[t].trainable) continue;
    for (std::size_t i = 0; i < params[t].size(); ++i) {
      const double saved = params[t][i];
      params[t][i] = saved + step;
      const RefResult up = reference_loss(model, params, batch, labels, dropout_rng);
      params[t][i] = saved - step;
      const RefResult down = reference_loss(model, params, batch, labels, dropout_rng);
      params[t][i] = saved;
      if (up.signature != base.signature || down.signature != base.signature) {
        ++out.skipped;
        continue;
      }
      const double numeric = (up.loss - down.loss) / (2.0 * step);
      const double e = relative_error(grads[t][i], numeric);
      if (e <= kRelativeTolerance && relative_error(grads[t][i], numeric, 1e-30) > kRelativeTolerance)
        ++out.below_floor;
      ++out.checked;
      if (e > out.max_rel_error) {
        out.max_rel_error = e;
        out.worst = std::string(views[t].name) + "[" + std::to_string(i) + "] analytic " +
                    std::to_string(grads[t][i]) + " numeric " + std::to_string(numeric);
      }
    }
  }
  for (const auto& l : model.layers()) {
    const std::string k(to_string(l.kind));
    if (std::find(out.kinds_checked.begin(), out.kinds_checked.end(), k) == out.kinds_checked.end())
      out.kinds_checked.push_back(k);
  }
  return out;
}

// Tiny net that exercises every layer kind, both activations and both
// paddings.
inline Model tiny_net(std::uint64_t seed) {
  return ModelBuilder("tiny", {8, 8, 2})
      .conv2d(3, 3)
      .batch_norm()
      .activation(ActivationFn::Relu)
      .max_pool()
      .dropout(0.25f)
      .conv2d(4, 3, Padding::Valid)
      .activation(ActivationFn::Linear)
      .flatten()
      .dense(6)
      .batch_norm()
      .activation(ActivationFn::Relu)
      .dropout(0.5f)
      .dense(3)
      .softmax()
      .build(seed);
}

}  // namespace compfair::oracle

#endif  // COMPFAIR_TESTS_REFERENCE_NET_HPP_
