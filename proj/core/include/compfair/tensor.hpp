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

#ifndef COMPFAIR_TENSOR_HPP_
#define COMPFAIR_TENSOR_HPP_

#include <cstddef>
#include <initializer_list>
#include <span>
#include <string>
#include <vector>

namespace compfair {

class Rng;

using Shape = std::vector<std::size_t>;

std::string to_string(const Shape& shape);
std::size_t element_count(const Shape& shape);

/// Dense row-major float32 array. Activations are NHWC, convolution kernels
/// are [kh, kw, cin, cout], dense kernels are [in, out].
class Tensor {
 public:
  /// Empty tensor with rank 0 and no elements.
  Tensor() = default;
  explicit Tensor(Shape shape, float fill = 0.0f);
  Tensor(Shape shape, std::vector<float> data);

  static Tensor from_rows(std::initializer_list<std::initializer_list<float>> rows);

  const Shape& shape() const noexcept { return shape_; }
  std::size_t rank() const noexcept { return shape_.size(); }
  std::size_t dim(std::size_t axis) const { return shape_.at(axis); }
  std::size_t size() const noexcept { return data_.size(); }
  bool empty() const noexcept { return data_.empty(); }

  std::span<float> data() noexcept { return data_; }
  std::span<const float> data() const noexcept { return data_; }
  float* raw() noexcept { return data_.data(); }
  const float* raw() const noexcept { return data_.data(); }

  float& operator[](std::size_t i) noexcept { return data_[i]; }
  float operator[](std::size_t i) const noexcept { return data_[i]; }

  /// Same data viewed under a new shape with equal element count.
  Tensor reshaped(Shape shape) const;

  void fill(float value);

  friend bool operator==(const Tensor& a, const Tensor& b) = default;

 private:
  Shape shape_;
  std::vector<float> data_;
};

enum class Padding { Same, Valid };

/// [m, k] x [k, n] -> [m, n].
Tensor matmul(const Tensor& a, const Tensor& b);

/// Stride-1 cross-correlation. input NHWC, kernel [kh, kw, cin, cout].
/// `same` pads with zeros so H and W are preserved.
Tensor conv2d(const Tensor& input, const Tensor& kernel, Padding padding = Padding::Same);

/// 2x2 max pooling with stride 2. Odd trailing rows/columns are dropped.
Tensor maxpool2(const Tensor& input);

/// Spatial output size of a stride-1 convolution.
std::size_t conv_output_extent(std::size_t extent, std::size_t kernel, Padding padding);
/// Leading zero-padding for `same` convolutions (extra padding goes trailing).
std::size_t same_padding_before(std::size_t kernel);

/// Column index of each row's maximum; ties go to the lowest index.
std::vector<std::size_t> argmax_rows(const Tensor& matrix);

/// Elementwise max |a - b|; shapes must match.
float max_abs_diff(const Tensor& a, const Tensor& b);

/// i.i.d. normal draws truncated to +/- 2 stddev by resampling.
Tensor truncated_normal(Shape shape, float stddev, Rng& rng);

}  // namespace compfair

#endif  // COMPFAIR_TENSOR_HPP_
