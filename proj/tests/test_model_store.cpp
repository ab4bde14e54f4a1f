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

#include <gtest/gtest.h>

#include <filesystem>
#include <vector>

#include "compfair/compfair.hpp"

using namespace compfair;
namespace fs = std::filesystem;

namespace {

fs::path temp_file(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / "compfair_store_test";
  fs::create_directories(dir);
  return dir / name;
}

Model small_model(std::uint64_t seed) {
  return ModelBuilder("s", {8, 8, 1}).conv2d(4, 3).batch_norm().activation().max_pool().flatten().dense(3).softmax().build(seed);
}

void expect_same_tensors(const Model& a, const Model& b) {
  const auto pa = parameters(a), pb = parameters(b);
  ASSERT_EQ(pa.size(), pb.size());
  for (std::size_t i = 0; i < pa.size(); ++i) {
    EXPECT_EQ(pa[i].name, pb[i].name);
    EXPECT_EQ(*pa[i].tensor, *pb[i].tensor) << pa[i].name;
  }
}

}  // namespace

TEST(ModelStore, DenseRoundTripIsBitExact) {
  const Model m = small_model(1);
  const fs::path path = temp_file("dense.nncm");
  const std::size_t written = save(m, path);
  EXPECT_EQ(written, fs::file_size(path));
  const LoadedModel back = load_model(path);
  expect_same_tensors(m, back.model);
  EXPECT_FALSE(back.is_quantized());
  EXPECT_FALSE(back.is_clustered());
  EXPECT_EQ(architecture_to_json(back.model), architecture_to_json(m));
}

TEST(ModelStore, ClusteredRoundTripIsBitExact) {
  const ClusteredModel c = cluster(small_model(2), 8);
  const fs::path path = temp_file("clustered.nncm");
  save(c, path, nlohmann::json::array({CompressionStep::cluster(8).to_json()}));
  const LoadedModel back = load_model(path);
  expect_same_tensors(c.model, back.model);
  ASSERT_TRUE(back.is_clustered());
  for (const auto& t : c.clusters.tensors) {
    const TensorClusters* r = back.clusters.find(t.name);
    ASSERT_NE(r, nullptr);
    EXPECT_EQ(r->centroids, t.centroids);
    EXPECT_EQ(r->indices, t.indices);
  }
  EXPECT_EQ(model_label(back.compression), "clustered (8 cl.)");
}

TEST(ModelStore, QuantizedRoundTripIsBitExact) {
  const QuantizedModel q = quantize_model(small_model(3));
  const fs::path path = temp_file("quant.nncm");
  save(q, path, nlohmann::json::array({CompressionStep::quantize().to_json()}));
  const LoadedModel back = load_model(path);
  expect_same_tensors(q.model, back.model);
  ASSERT_TRUE(back.is_quantized());
  for (const auto& nq : q.quantized) {
    const auto it = std::find_if(back.quantized.begin(), back.quantized.end(),
                                 [&](const NamedQuantized& x) { return x.name == nq.name; });
    ASSERT_NE(it, back.quantized.end());
    EXPECT_EQ(it->tensor.values, nq.tensor.values);
    EXPECT_EQ(it->tensor.scale, nq.tensor.scale);
  }
}

TEST(ModelStore, EncodeDecodeEncodeIsStable) {
  const ModelFile f = to_model_file(quantize_model(small_model(4)));
  const auto bytes = encode(f);
  EXPECT_EQ(encode(decode(bytes)), bytes);
}

TEST(ModelStore, ClusteredPayloadSize) {
  TensorClusters t{"w", {1000}, std::vector<float>(16, 0.5f), std::vector<std::uint8_t>(1000, 3)};
  EXPECT_EQ(clustered_payload(t).size(), 1u + 16u * 4u + 1000u);
}

TEST(ModelStore, DensePayloadsOfCk48) {
  const ModelFile f = to_model_file(build_ck48(0));
  std::size_t payload = 0;
  for (const auto& r : f.tensors) {
    EXPECT_EQ(r.encoding, Encoding::DenseF32);
    payload += r.payload.size();
  }
  EXPECT_EQ(payload, 4u * 4479240u);
  EXPECT_GT(encode(f).size(), payload);
}

TEST(ModelStore, RejectsBadMagic) {
  auto bytes = encode(to_model_file(small_model(5)));
  bytes[0] = 'X';
  EXPECT_THROW(decode(bytes), FormatError);
}

TEST(ModelStore, RejectsUnknownVersion) {
  auto bytes = encode(to_model_file(small_model(5)));
  bytes[4] = 9;  // little-endian u16 after the magic
  EXPECT_THROW(decode(bytes), FormatError);
}

TEST(ModelStore, RejectsTruncationAndTrailingBytes) {
  auto bytes = encode(to_model_file(small_model(5)));
  for (std::size_t cut : {std::size_t{3}, std::size_t{10}, bytes.size() / 2, bytes.size() - 1})
    EXPECT_THROW(decode(std::span(bytes).first(cut)), FormatError) << cut;
  bytes.push_back(0);
  EXPECT_THROW(decode(bytes), FormatError);
}

TEST(ModelStore, LoadOfMissingFileThrows) {
  EXPECT_THROW(load_model(temp_file("missing.nncm")), IoError);
  EXPECT_THROW(measure_size(temp_file("missing.nncm")), IoError);
}

TEST(MeasureSize, ZerosCompressWell) {
  const fs::path path = temp_file("zeros.bin");
  write_bytes(path, std::vector<std::uint8_t>(1000000, 0));
  const SizeReport r = measure_size(path);
  EXPECT_EQ(r.raw_bytes, 1000000u);
  EXPECT_LT(r.deflated_bytes, 20000u);
}

TEST(MeasureSize, RandomBytesDoNotCompress) {
  Rng rng(11);
  std::vector<std::uint8_t> bytes(200000);
  for (auto& b : bytes) b = static_cast<std::uint8_t>(rng.next_u64() & 0xFF);
  const fs::path path = temp_file("random.bin");
  write_bytes(path, bytes);
  const SizeReport r = measure_size(path);
  EXPECT_GE(static_cast<double>(r.deflated_bytes), 0.99 * static_cast<double>(r.raw_bytes));
}

TEST(MeasureSize, Deterministic) {
  const fs::path path = temp_file("twice.nncm");
  save(small_model(6), path);
  const SizeReport a = measure_size(path), b = measure_size(path);
  EXPECT_EQ(a.raw_bytes, b.raw_bytes);
  EXPECT_EQ(a.deflated_bytes, b.deflated_bytes);
  EXPECT_DOUBLE_EQ(a.megabytes(), static_cast<double>(a.deflated_bytes) / 1e6);
}

TEST(MeasureSize, QuantizedFileIsSmaller) {
  const Model m = build_ck48(7);
  const fs::path base = temp_file("ck48.nncm"), quant = temp_file("ck48.q.nncm");
  save(m, base);
  save(quantize_model(m), quant);
  EXPECT_LT(measure_size(quant).deflated_bytes * 3, measure_size(base).deflated_bytes);
}

TEST(MeasureSize, SparserIsNotLarger) {
  const Model m = ModelBuilder("p", {32}).dense(256).dense(128).dense(4).softmax().build(8);
  std::size_t last = SIZE_MAX;
  for (int pct = 0; pct <= 90; pct += 10) {
    const std::vector<std::uint8_t> bytes = encode(to_model_file(prune(m, pct / 100.0).model));
    const std::size_t d = deflated_size(bytes);
    EXPECT_LE(d, last) << pct;
    last = d;
  }
}
