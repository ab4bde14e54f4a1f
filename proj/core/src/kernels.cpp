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

#include "kernels.hpp"

#include <algorithm>
#include <cstring>

namespace compfair::kernels {
namespace {

constexpr std::size_t kBlockK = 256;
constexpr std::size_t kBlockN = 512;

}  // namespace

void gemm_nn(std::size_t m, std::size_t n, std::size_t k, const float* a, const float* b,
             float* c) {
  // Blocking over k and n keeps a panel of B hot; the summation order for
  // any C element is still k = 0, 1, ..., k-1.
  for (std::size_t j0 = 0; j0 < n; j0 += kBlockN) {
    const std::size_t j1 = std::min(n, j0 + kBlockN);
    for (std::size_t p0 = 0; p0 < k; p0 += kBlockK) {
      const std::size_t p1 = std::min(k, p0 + kBlockK);
      for (std::size_t i = 0; i < m; ++i) {
        const float* a_row = a + i * k;
        float* __restrict c_row = c + i * n;
        for (std::size_t p = p0; p < p1; ++p) {
          const float av = a_row[p];
          if (av == 0.0f) continue;
          const float* __restrict b_row = b + p * n;
          for (std::size_t j = j0; j < j1; ++j) c_row[j] += av * b_row[j];
        }
      }
    }
  }
}

void gemm_tn(std::size_t p, std::size_t k, std::size_t n, const float* a, const float* b,
             float* c) {
  for (std::size_t r = 0; r < p; ++r) {
    const float* a_row = a + r * k;
    const float* __restrict b_row = b + r * n;
    for (std::size_t i = 0; i < k; ++i) {
      const float av = a_row[i];
      if (av == 0.0f) continue;
      float* __restrict c_row = c + i * n;
      for (std::size_t j = 0; j < n; ++j) c_row[j] += av * b_row[j];
    }
  }
}

void transpose(std::size_t rows, std::size_t cols, const float* src, float* dst) {
  for (std::size_t r = 0; r < rows; ++r)
    for (std::size_t c = 0; c < cols; ++c) dst[c * rows + r] = src[r * cols + c];
}

void im2col(const ConvGeometry& g, const float* image, float* columns) {
  const std::size_t cin = g.in_channels;
  const std::size_t patch = g.patch();
  for (std::size_t oy = 0; oy < g.out_height; ++oy) {
    for (std::size_t ox = 0; ox < g.out_width; ++ox) {
      float* dst = columns + (oy * g.out_width + ox) * patch;
      for (std::size_t ky = 0; ky < g.kernel_h; ++ky) {
        const std::ptrdiff_t iy = static_cast<std::ptrdiff_t>(oy + ky) -
                                  static_cast<std::ptrdiff_t>(g.pad_top);
        for (std::size_t kx = 0; kx < g.kernel_w; ++kx) {
          const std::ptrdiff_t ix = static_cast<std::ptrdiff_t>(ox + kx) -
                                    static_cast<std::ptrdiff_t>(g.pad_left);
          float* cell = dst + (ky * g.kernel_w + kx) * cin;
          if (iy < 0 || ix < 0 || iy >= static_cast<std::ptrdiff_t>(g.height) ||
              ix >= static_cast<std::ptrdiff_t>(g.width)) {
            std::memset(cell, 0, cin * sizeof(float));
          } else {
            std::memcpy(cell, image + (static_cast<std::size_t>(iy) * g.width +
                                       static_cast<std::size_t>(ix)) * cin,
                        cin * sizeof(float));
          }
        }
      }
    }
  }
}

void col2im(const ConvGeometry& g, const float* columns, float* image) {
  const std::size_t cin = g.in_channels;
  const std::size_t patch = g.patch();
  for (std::size_t oy = 0; oy < g.out_height; ++oy) {
    for (std::size_t ox = 0; ox < g.out_width; ++ox) {
      const float* src = columns + (oy * g.out_width + ox) * patch;
      for (std::size_t ky = 0; ky < g.kernel_h; ++ky) {
        const std::ptrdiff_t iy = static_cast<std::ptrdiff_t>(oy + ky) -
                                  static_cast<std::ptrdiff_t>(g.pad_top);
        if (iy < 0 || iy >= static_cast<std::ptrdiff_t>(g.height)) continue;
        for (std::size_t kx = 0; kx < g.kernel_w; ++kx) {
          const std::ptrdiff_t ix = static_cast<std::ptrdiff_t>(ox + kx) -
                                    static_cast<std::ptrdiff_t>(g.pad_left);
          if (ix < 0 || ix >= static_cast<std::ptrdiff_t>(g.width)) continue;
          const float* cell = src + (ky * g.kernel_w + kx) * cin;
          float* dst = image + (static_cast<std::size_t>(iy) * g.width +
                                static_cast<std::size_t>(ix)) * cin;
          for (std::size_t c = 0; c < cin; ++c) dst[c] += cell[c];
        }
      }
    }
  }
}

}  // namespace compfair::kernels
