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

#include "compfair/model_store.hpp"

#include <bit>
#include <cstring>
#include <fstream>

#include <zlib.h>

#include "compfair/error.hpp"

namespace compfair {

static_assert(std::endian::native == std::endian::little, "NNCM writer assumes a little-endian host");

namespace {

constexpr char kMagic[4] = {'N', 'N', 'C', 'M'};

class Writer {
 public:
  template <typename T>
  void put(T v) {
    const auto* p = reinterpret_cast<const std::uint8_t*>(&v);
    out_.insert(out_.end(), p, p + sizeof(T));
  }
  void bytes(const void* data, std::size_t n) {
    const auto* p = static_cast<const std::uint8_t*>(data);
    out_.insert(out_.end(), p, p + n);
  }
  std::vector<std::uint8_t> take() { return std::move(out_); }

 private:
  std::vector<std::uint8_t> out_;
};

class Reader {
 public:
  explicit Reader(std::span<const std::uint8_t> in) : in_(in) {}

  template <typename T>
  T get(const char* what) {
    T v;
    std::memcpy(&v, need(sizeof(T), what), sizeof(T));
    return v;
  }
  const std::uint8_t* need(std::size_t n, const char* what) {
    if (n > in_.size() - pos_) throw FormatError(std::string("truncated model file while reading ") + what);
    const std::uint8_t* p = in_.data() + pos_;
    pos_ += n;
    return p;
  }
  bool done() const { return pos_ == in_.size(); }

 private:
  std::span<const std::uint8_t> in_;
  std::size_t pos_ = 0;
};

}  // namespace

std::vector<std::uint8_t> encode(const ModelFile& file) {
  Writer w;
  w.bytes(kMagic, 4);
  w.put<std::uint16_t>(kFormatVersion);
  const std::string header = nlohmann::json{{"architecture", file.architecture}, {"compression", file.compression}}.dump();
  w.put<std::uint32_t>(static_cast<std::uint32_t>(header.size()));
  w.bytes(header.data(), header.size());
  w.put<std::uint32_t>(static_cast<std::uint32_t>(file.tensors.size()));
  for (const auto& t : file.tensors) {
    if (t.name.size() > 0xFFFF) throw FormatError("tensor name too long: " + t.name);
    if (t.shape.size() > 0xFF) throw FormatError("tensor rank too large: " + t.name);
    w.put<std::uint16_t>(static_cast<std::uint16_t>(t.name.size()));
    w.bytes(t.name.data(), t.name.size());
    w.put<std::uint8_t>(static_cast<std::uint8_t>(t.shape.size()));
    for (std::size_t d : t.shape) w.put<std::uint32_t>(static_cast<std::uint32_t>(d));
    w.put<std::uint8_t>(static_cast<std::uint8_t>(t.encoding));
    w.put<std::uint64_t>(t.payload.size());
    w.bytes(t.payload.data(), t.payload.size());
  }
  return w.take();
}

ModelFile decode(std::span<const std::uint8_t> bytes) {
  Reader r(bytes);
  if (std::memcmp(r.need(4, "magic"), kMagic, 4) != 0) throw FormatError("not an NNCM model file (bad magic)");
  const auto version = r.get<std::uint16_t>("version");
  if (version != kFormatVersion) throw FormatError("unsupported NNCM version " + std::to_string(version));
  const auto header_len = r.get<std::uint32_t>("header length");
  const auto* header = reinterpret_cast<const char*>(r.need(header_len, "header"));
  ModelFile f;
  try {
    const auto j = nlohmann::json::parse(header, header + header_len);
    f.architecture = j.at("architecture");
    f.compression = j.value("compression", nlohmann::json::array());
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("corrupt model header: ") + e.what());
  }
  const auto count = r.get<std::uint32_t>("tensor count");
  for (std::uint32_t i = 0; i < count; ++i) {
    TensorRecord t;
    const auto name_len = r.get<std::uint16_t>("name length");
    t.name.assign(reinterpret_cast<const char*>(r.need(name_len, "name")), name_len);
    const auto rank = r.get<std::uint8_t>("rank");
    for (std::uint8_t d = 0; d < rank; ++d) {
      const auto dim = r.get<std::uint32_t>("dims");
      if (dim == 0) throw FormatError("zero dimension in tensor " + t.name);
      t.shape.push_back(dim);
    }
    const auto enc = r.get<std::uint8_t>("encoding");
    if (enc > 2) throw FormatError("unknown encoding " + std::to_string(enc) + " for tensor " + t.name);
    t.encoding = static_cast<Encoding>(enc);
    const auto len = r.get<std::uint64_t>("payload length");
    if (len > bytes.size()) throw FormatError("truncated model file while reading payload of " + t.name);
    const std::uint8_t* p = r.need(static_cast<std::size_t>(len), "payload");
    t.payload.assign(p, p + len);
    f.tensors.push_back(std::move(t));
  }
  if (!r.done()) throw FormatError("trailing bytes after the last tensor record");
  return f;
}

std::vector<std::uint8_t> dense_payload(const Tensor& tensor) {
  Writer w;
  w.bytes(tensor.raw(), tensor.size() * sizeof(float));
  return w.take();
}

std::vector<std::uint8_t> clustered_payload(const TensorClusters& clusters) {
  if (clusters.centroids.empty() || clusters.centroids.size() > kMaxClusters)
    throw FormatError("codebook of " + clusters.name + " must have 1 to 256 centroids");
  Writer w;
  w.put<std::uint8_t>(static_cast<std::uint8_t>(clusters.centroids.size() % 256));
  w.bytes(clusters.centroids.data(), clusters.centroids.size() * sizeof(float));
  w.bytes(clusters.indices.data(), clusters.indices.size());
  return w.take();
}

std::vector<std::uint8_t> quant_payload(const QuantizedTensor& tensor) {
  Writer w;
  w.put<float>(tensor.scale);
  w.put<std::int8_t>(tensor.zero_point);
  w.bytes(tensor.values.data(), tensor.values.size());
  return w.take();
}

namespace {

ModelFile build_file(const Model& model, const nlohmann::json& compression, const ClusteredWeights* clusters,
                     const QuantizedModel* quantized) {
  ModelFile f;
  f.architecture = architecture_to_json(model);
  f.compression = compression;
  for (const auto& p : parameters(model)) {
    TensorRecord t{std::string(p.name), p.tensor->shape(), Encoding::DenseF32, {}};
    const QuantizedTensor* q = quantized ? quantized->find(t.name) : nullptr;
    const TensorClusters* c = clusters ? clusters->find(t.name) : nullptr;
    if (q) {
      t.encoding = Encoding::Quant8;
      t.payload = quant_payload(*q);
    } else if (c) {
      t.encoding = Encoding::Clustered8;
      t.payload = clustered_payload(*c);
    } else {
      t.payload = dense_payload(*p.tensor);
    }
    f.tensors.push_back(std::move(t));
  }
  return f;
}

}  // namespace

ModelFile to_model_file(const Model& model, const nlohmann::json& compression) {
  return build_file(model, compression, nullptr, nullptr);
}

ModelFile to_model_file(const ClusteredModel& model, const nlohmann::json& compression) {
  check_clusters(model.model, model.clusters);
  return build_file(model.model, compression, &model.clusters, nullptr);
}

ModelFile to_model_file(const QuantizedModel& model, const nlohmann::json& compression) {
  return build_file(model.model, compression, nullptr, &model);
}

std::vector<std::uint8_t> read_bytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (in.bad()) throw IoError("read failed for " + path.string());
  return bytes;
}

void write_bytes(const std::filesystem::path& path, std::span<const std::uint8_t> bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("write failed for " + path.string());
}

namespace {

std::size_t save_file(const ModelFile& f, const std::filesystem::path& path) {
  const auto bytes = encode(f);
  write_bytes(path, bytes);
  return bytes.size();
}

}  // namespace

std::size_t save(const Model& model, const std::filesystem::path& path, const nlohmann::json& compression) {
  return save_file(to_model_file(model, compression), path);
}

std::size_t save(const ClusteredModel& model, const std::filesystem::path& path,
                 const nlohmann::json& compression) {
  return save_file(to_model_file(model, compression), path);
}

std::size_t save(const QuantizedModel& model, const std::filesystem::path& path,
                 const nlohmann::json& compression) {
  return save_file(to_model_file(model, compression), path);
}

LoadedModel from_model_file(const ModelFile& file) {
  LoadedModel out;
  try {
    out.model = builder_from_json(file.architecture).build_uninitialized();
  } catch (const Error& e) {
    throw FormatError(std::string("bad architecture in model file: ") + e.what());
  }
  out.compression = file.compression;
  const std::size_t expected = parameters(out.model).size();
  if (file.tensors.size() != expected)
    throw FormatError("model file has " + std::to_string(file.tensors.size()) + " tensors, architecture needs " +
                      std::to_string(expected));
  for (const auto& t : file.tensors) {
    Tensor* dst = nullptr;
    try {
      dst = &parameter(out.model, t.name);
    } catch (const LookupError&) {
      throw FormatError("model file has unknown tensor " + t.name);
    }
    if (dst->shape() != t.shape)
      throw FormatError("tensor " + t.name + " has shape " + to_string(t.shape) + ", architecture needs " +
                        to_string(dst->shape()));
    const std::size_t n = dst->size();
    Reader r(t.payload);
    switch (t.encoding) {
      case Encoding::DenseF32:
        if (t.payload.size() != n * 4) throw FormatError("DENSE_F32 payload size mismatch for " + t.name);
        std::memcpy(dst->raw(), t.payload.data(), n * 4);
        break;
      case Encoding::Clustered8: {
        const std::size_t k = r.get<std::uint8_t>("centroid count");
        const std::size_t count = k == 0 ? 256 : k;
        if (t.payload.size() != 1 + 4 * count + n) throw FormatError("CLUSTERED8 payload size mismatch for " + t.name);
        TensorClusters c{t.name, t.shape, std::vector<float>(count), {}};
        std::memcpy(c.centroids.data(), r.need(4 * count, "centroids"), 4 * count);
        const std::uint8_t* idx = r.need(n, "indices");
        c.indices.assign(idx, idx + n);
        try {
          *dst = reconstruct(c);
        } catch (const IntegrityError& e) {
          throw FormatError(e.what());
        }
        out.clusters.tensors.push_back(std::move(c));
        break;
      }
      case Encoding::Quant8: {
        if (t.payload.size() != 5 + n) throw FormatError("QUANT8 payload size mismatch for " + t.name);
        QuantizedTensor q;
        q.shape = t.shape;
        q.scale = r.get<float>("scale");
        q.zero_point = r.get<std::int8_t>("zero point");
        if (!(q.scale > 0.0f)) throw FormatError("non-positive scale for " + t.name);
        const std::uint8_t* v = r.need(n, "values");
        q.values.resize(n);
        std::memcpy(q.values.data(), v, n);
        *dst = q.dequantize();
        out.quantized.push_back({t.name, std::move(q)});
        break;
      }
    }
  }
  return out;
}

LoadedModel load_model(const std::filesystem::path& path) {
  const auto bytes = read_bytes(path);
  try {
    return from_model_file(decode(bytes));
  } catch (const FormatError& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
}

std::size_t deflated_size(std::span<const std::uint8_t> bytes, int level) {
  z_stream s{};
  if (deflateInit2(&s, level, Z_DEFLATED, -15, 8, Z_DEFAULT_STRATEGY) != Z_OK)
    throw Error("deflateInit2 failed");
  std::vector<std::uint8_t> out(deflateBound(&s, static_cast<uLong>(bytes.size())));
  s.next_in = const_cast<Bytef*>(bytes.data());
  s.avail_in = static_cast<uInt>(bytes.size());
  s.next_out = out.data();
  s.avail_out = static_cast<uInt>(out.size());
  const int rc = deflate(&s, Z_FINISH);
  const std::size_t n = s.total_out;
  deflateEnd(&s);
  if (rc != Z_STREAM_END) throw Error("deflate did not finish");
  return n;
}

SizeReport measure_size(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) throw IoError("no such file: " + path.string());
  const auto bytes = read_bytes(path);
  return {bytes.size(), deflated_size(bytes)};
}

}  // namespace compfair
