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

#include "compfair/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <utility>

#include "compfair/error.hpp"
#include "compfair/rng.hpp"
#include "kernels.hpp"

namespace compfair {

std::string to_string(const Shape& shape) {
  std::string out = "[";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) out += ", ";
    out += std::to_string(shape[i]);
  }
  return out + "]";
}

std::size_t element_count(const Shape& shape) {
  std::size_t n = 1;
  for (std::size_t d : shape) n *= d;
  return n;
}

namespace {

void validate_shape(const Shape& shape) {
  for (std::size_t d : shape)
    if (d == 0) throw DimensionError("tensor dimensions must be positive, got " + to_string(shape));
}

}  // namespace

Tensor::Tensor(Shape shape, float fill) : shape_(std::move(shape)) {
  validate_shape(shape_);
  data_.assign(element_count(shape_), fill);
}

Tensor::Tensor(Shape shape, std::vector<float> data)
    : shape_(std::move(shape)), data_(std::move(data)) {
  validate_shape(shape_);
  if (data_.size() != element_count(shape_))
    throw DimensionError("shape " + to_string(shape_) + " needs " +
                         std::to_string(element_count(shape_)) + " elements, got " +
                         std::to_string(data_.size()));
}

Tensor Tensor::from_rows(std::initializer_list<std::initializer_list<float>> rows) {
  const std::size_t r = rows.size();
  const std::size_t c = r ? rows.begin()->size() : 0;
  std::vector<float> data;
  data.reserve(r * c);
  for (const auto& row : rows) {
    if (row.size() != c) throw DimensionError("ragged rows in Tensor::from_rows");
    data.insert(data.end(), row.begin(), row.end());
  }
  return Tensor({r, c}, std::move(data));
}

Tensor Tensor::reshaped(Shape shape) const {
  if (element_count(shape) != size())
    throw DimensionError("cannot reshape " + to_string(shape_) + " to " + to_string(shape));
  return Tensor(std::move(shape), data_);
}

void Tensor::fill(float value) { std::fill(data_.begin(), data_.end(), value); }

Tensor matmul(const Tensor& a, const Tensor& b) {
  if (a.rank() != 2 || b.rank() != 2 || a.dim(1) != b.dim(0))
    throw DimensionError("matmul shape mismatch: " + to_string(a.shape()) + " x " +
                         to_string(b.shape()));
  Tensor out({a.dim(0), b.dim(1)});
  kernels::gemm_nn(a.dim(0), b.dim(1), a.dim(1), a.raw(), b.raw(), out.raw());
  return out;
}

std::size_t same_padding_before(std::size_t kernel) { return (kernel - 1) / 2; }

std::size_t conv_output_extent(std::size_t extent, std::size_t kernel, Padding padding) {
  if (padding == Padding::Same) return extent;
  if (kernel > extent)
    throw DimensionError("valid convolution kernel " + std::to_string(kernel) +
                         " larger than input extent " + std::to_string(extent));
  return extent - kernel + 1;
}

Tensor conv2d(const Tensor& input, const Tensor& kernel, Padding padding) {
  if (input.rank() != 4 || kernel.rank() != 4)
    throw DimensionError("conv2d expects NHWC input and [kh,kw,cin,cout] kernel, got " +
                         to_string(input.shape()) + " and " + to_string(kernel.shape()));
  if (input.dim(3) != kernel.dim(2))
    throw DimensionError("conv2d channel mismatch: input " + to_string(input.shape()) +
                         ", kernel " + to_string(kernel.shape()));
  kernels::ConvGeometry g{};
  g.height = input.dim(1);
  g.width = input.dim(2);
  g.in_channels = input.dim(3);
  g.kernel_h = kernel.dim(0);
  g.kernel_w = kernel.dim(1);
  g.out_height = conv_output_extent(g.height, g.kernel_h, padding);
  g.out_width = conv_output_extent(g.width, g.kernel_w, padding);
  g.pad_top = padding == Padding::Same ? same_padding_before(g.kernel_h) : 0;
  g.pad_left = padding == Padding::Same ? same_padding_before(g.kernel_w) : 0;

  const std::size_t batch = input.dim(0);
  const std::size_t cout = kernel.dim(3);
  Tensor out({batch, g.out_height, g.out_width, cout});
  const std::size_t in_stride = g.height * g.width * g.in_channels;
  const std::size_t out_stride = g.out_pixels() * cout;
#ifdef _OPENMP
#pragma omp parallel for schedule(static)
#endif
  for (std::ptrdiff_t b = 0; b < static_cast<std::ptrdiff_t>(batch); ++b) {
    std::vector<float> columns(g.out_pixels() * g.patch());
    kernels::im2col(g, input.raw() + b * in_stride, columns.data());
    kernels::gemm_nn(g.out_pixels(), cout, g.patch(), columns.data(), kernel.raw(),
                     out.raw() + b * out_stride);
  }
  return out;
}

Tensor maxpool2(const Tensor& input) {
  if (input.rank() != 4) throw DimensionError("maxpool2 expects NHWC, got " + to_string(input.shape()));
  const std::size_t n = input.dim(0), h = input.dim(1), w = input.dim(2), c = input.dim(3);
  if (h < 2 || w < 2) throw DimensionError("maxpool2 needs H,W >= 2, got " + to_string(input.shape()));
  const std::size_t oh = h / 2, ow = w / 2;
  Tensor out({n, oh, ow, c});
  for (std::size_t b = 0; b < n; ++b)
    for (std::size_t y = 0; y < oh; ++y)
      for (std::size_t x = 0; x < ow; ++x)
        for (std::size_t ch = 0; ch < c; ++ch) {
          float best = -std::numeric_limits<float>::infinity();
          for (std::size_t dy = 0; dy < 2; ++dy)
            for (std::size_t dx = 0; dx < 2; ++dx)
              best = std::max(best, input[((b * h + 2 * y + dy) * w + 2 * x + dx) * c + ch]);
          out[((b * oh + y) * ow + x) * c + ch] = best;
        }
  return out;
}

std::vector<std::size_t> argmax_rows(const Tensor& matrix) {
  if (matrix.rank() != 2) throw DimensionError("argmax_rows expects a matrix, got " + to_string(matrix.shape()));
  const std::size_t n = matrix.dim(0), k = matrix.dim(1);
  std::vector<std::size_t> out(n, 0);
  for (std::size_t r = 0; r < n; ++r) {
    const float* row = matrix.raw() + r * k;
    for (std::size_t j = 1; j < k; ++j)
      if (row[j] > row[out[r]]) out[r] = j;
  }
  return out;
}

float max_abs_diff(const Tensor& a, const Tensor& b) {
  if (a.shape() != b.shape())
    throw DimensionError("max_abs_diff shape mismatch: " + to_string(a.shape()) + " vs " +
                         to_string(b.shape()));
  float worst = 0.0f;
  for (std::size_t i = 0; i < a.size(); ++i) worst = std::max(worst, std::fabs(a[i] - b[i]));
  return worst;
}

Tensor truncated_normal(Shape shape, float stddev, Rng& rng) {
  Tensor t(std::move(shape));
  for (float& v : t.data()) {
    double z = rng.normal();
    while (std::fabs(z) > 2.0) z = rng.normal();
    v = static_cast<float>(z * stddev);
  }
  return t;
}

}  // namespace compfair
