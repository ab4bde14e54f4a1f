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

#ifndef COMPFAIR_IMAGE_IO_HPP_
#define COMPFAIR_IMAGE_IO_HPP_

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <vector>

namespace compfair {

/// 8-bit interleaved image, 1 (gray) or 3 (RGB) channels.
struct Image {
  std::size_t width = 0;
  std::size_t height = 0;
  std::size_t channels = 0;
  std::vector<std::uint8_t> pixels;

  std::uint8_t at(std::size_t y, std::size_t x, std::size_t c) const {
    return pixels[(y * width + x) * channels + c];
  }
};

/// Decodes 8-bit gray, gray+alpha, RGB or RGBA PNGs; alpha is dropped.
/// Throws LoadError.
Image read_png(const std::filesystem::path& path);

/// Writes an 8-bit gray or RGB PNG with no timestamp chunks, so identical
/// images give identical files. Throws IoError.
void write_png(const std::filesystem::path& path, const Image& image);

}  // namespace compfair

#endif  // COMPFAIR_IMAGE_IO_HPP_
