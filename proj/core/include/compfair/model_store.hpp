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

#ifndef COMPFAIR_MODEL_STORE_HPP_
#define COMPFAIR_MODEL_STORE_HPP_

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "compfair/clustering.hpp"
#include "compfair/network.hpp"
#include "compfair/quantization.hpp"

namespace compfair {

// NNCM container, little-endian:
//   "NNCM" | u16 version | u32 header length | header JSON |
//   u32 tensor count | records...
// record:
//   u16 name length | name | u8 rank | u32 dims[rank] | u8 encoding |
//   u64 payload length | payload
// The header JSON is {"architecture": ..., "compression": [...]}.

enum class Encoding : std::uint8_t { DenseF32 = 0, Clustered8 = 1, Quant8 = 2 };

inline constexpr std::uint16_t kFormatVersion = 1;
/// zlib level used for the size metric (raw DEFLATE, no zlib/gzip wrapper).
inline constexpr int kDeflateLevel = 9;

struct TensorRecord {
  std::string name;
  Shape shape;
  Encoding encoding = Encoding::DenseF32;
  std::vector<std::uint8_t> payload;
};

struct ModelFile {
  nlohmann::json architecture;
  nlohmann::json compression = nlohmann::json::array();  // ordered step objects
  std::vector<TensorRecord> tensors;
};

std::vector<std::uint8_t> encode(const ModelFile& file);
/// Throws FormatError on a truncated, corrupt or unsupported stream.
ModelFile decode(std::span<const std::uint8_t> bytes);

/// f32 values.
std::vector<std::uint8_t> dense_payload(const Tensor& tensor);
/// u8 centroid count (0 stands for 256), f32 centroids, one u8 index per weight.
std::vector<std::uint8_t> clustered_payload(const TensorClusters& clusters);
/// f32 scale, i8 zero point, i8 values.
std::vector<std::uint8_t> quant_payload(const QuantizedTensor& tensor);

/// Every tensor of parameters(model) in order; tensors with a codebook or a
/// quantized form use CLUSTERED8 / QUANT8, the rest DENSE_F32.
ModelFile to_model_file(const Model& model, const nlohmann::json& compression = nlohmann::json::array());
ModelFile to_model_file(const ClusteredModel& model, const nlohmann::json& compression = nlohmann::json::array());
ModelFile to_model_file(const QuantizedModel& model, const nlohmann::json& compression = nlohmann::json::array());

/// Returns the number of bytes written. Throws IoError naming the path.
std::size_t save(const Model& model, const std::filesystem::path& path,
                 const nlohmann::json& compression = nlohmann::json::array());
std::size_t save(const ClusteredModel& model, const std::filesystem::path& path,
                 const nlohmann::json& compression = nlohmann::json::array());
std::size_t save(const QuantizedModel& model, const std::filesystem::path& path,
                 const nlohmann::json& compression = nlohmann::json::array());

struct LoadedModel {
  Model model;  // float weights (codebooks reconstructed, int8 dequantized)
  nlohmann::json compression = nlohmann::json::array();
  ClusteredWeights clusters;             // CLUSTERED8 records, if any
  std::vector<NamedQuantized> quantized;  // QUANT8 records, if any

  bool is_quantized() const { return !quantized.empty(); }
  bool is_clustered() const { return !clusters.tensors.empty(); }
};

LoadedModel from_model_file(const ModelFile& file);
/// Throws IoError for an unreadable path, FormatError for bad contents.
LoadedModel load_model(const std::filesystem::path& path);

std::vector<std::uint8_t> read_bytes(const std::filesystem::path& path);
void write_bytes(const std::filesystem::path& path, std::span<const std::uint8_t> bytes);

/// Length of the raw DEFLATE (RFC 1951) stream at `level`.
std::size_t deflated_size(std::span<const std::uint8_t> bytes, int level = kDeflateLevel);

struct SizeReport {
  std::size_t raw_bytes = 0;
  std::size_t deflated_bytes = 0;

  /// Deflated size in MB (10^6 bytes), the headline size metric.
  double megabytes() const { return static_cast<double>(deflated_bytes) / 1e6; }
};

SizeReport measure_size(const std::filesystem::path& path);

}  // namespace compfair

#endif  // COMPFAIR_MODEL_STORE_HPP_
