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

// Private dense kernels shared by the tensor ops and the layer passes.
// Every output element is accumulated by exactly one caller in a fixed
// order, so results do not depend on how work is split across threads.

#ifndef COMPFAIR_SRC_KERNELS_HPP_
#define COMPFAIR_SRC_KERNELS_HPP_

#include <cstddef>

namespace compfair::kernels {

// C[m,n] += A[m,k] * B[k,n]
void gemm_nn(std::size_t m, std::size_t n, std::size_t k, const float* a, const float* b,
             float* c);

// C[k,n] += A[p,k]^T * B[p,n]
void gemm_tn(std::size_t p, std::size_t k, std::size_t n, const float* a, const float* b,
             float* c);

// dst[cols, rows] = src[rows, cols]^T
void transpose(std::size_t rows, std::size_t cols, const float* src, float* dst);

struct ConvGeometry {
  std::size_t height, width, in_channels;
  std::size_t kernel_h, kernel_w;
  std::size_t out_height, out_width;
  std::size_t pad_top, pad_left;

  std::size_t patch() const { return kernel_h * kernel_w * in_channels; }
  std::size_t out_pixels() const { return out_height * out_width; }
};

// One image [H,W,C] -> columns [out_pixels, kh*kw*C].
void im2col(const ConvGeometry& g, const float* image, float* columns);

// Scatter-add columns back into one image gradient.
void col2im(const ConvGeometry& g, const float* columns, float* image);

}  // namespace compfair::kernels

#endif  // COMPFAIR_SRC_KERNELS_HPP_
