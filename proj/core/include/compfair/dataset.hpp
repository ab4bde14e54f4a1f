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

#ifndef COMPFAIR_DATASET_HPP_
#define COMPFAIR_DATASET_HPP_

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "compfair/image_io.hpp"
#include "compfair/tensor.hpp"

namespace compfair {

struct Sample {
  Tensor image;  // [H, W, C], values in [0, 1]
  std::size_t label = 0;
  std::string subject_id;
  std::map<std::string, std::string> attributes;  // e.g. {"gender": "female"}
  std::string path;                               // manifest path, empty if generated
};

struct AttributeSchema {
  std::string name;
  std::vector<std::string> values;  // natural order, see natural_less
};

/// String order in which digit runs compare by numeric value ("a2" < "a10").
bool natural_less(const std::string& a, const std::string& b);

struct GroupedDataset {
  std::vector<Sample> samples;
  std::vector<std::string> class_names;
  std::vector<AttributeSchema> attributes;

  std::size_t size() const noexcept { return samples.size(); }
  bool empty() const noexcept { return samples.empty(); }
  std::size_t num_classes() const noexcept { return class_names.size(); }

  /// Throws LookupError when the attribute is not in the schema.
  const AttributeSchema& attribute(std::string_view name) const;
  std::map<std::string, std::size_t> group_counts(std::string_view attribute) const;

  /// Stacks the selected images into an NHWC batch.
  Tensor images(std::span<const std::size_t> indices) const;
  /// One-hot [n, width] labels for the selected samples; width 0 means
  /// num_classes(). A wider row lets a model with more outputs train on it.
  Tensor one_hot(std::span<const std::size_t> indices, std::size_t width = 0) const;
  /// Subset sharing this dataset's class list and schema.
  GroupedDataset subset(std::span<const std::size_t> indices) const;
};

struct PreprocessConfig {
  std::size_t height = 48;
  std::size_t width = 48;
  bool grayscale = true;  // false: 3 channels, gray inputs are replicated
};

/// Bilinear resize (half-pixel centres), optional luminance conversion
/// (0.299 R + 0.587 G + 0.114 B), values scaled to [0, 1].
/// Faces are expected to be cropped upstream.
Tensor preprocess(const Image& image, const PreprocessConfig& target);

struct ManifestOptions {
  PreprocessConfig preprocess;
  /// When non-empty, labels must be one of these names. Otherwise the class
  /// list is the sorted set of labels found (digit runs compare numerically).
  std::vector<std::string> class_names;
};

/// Reads `path,label,subject_id[,attr:<name>...]` rows; image paths are
/// relative to `image_root`. Throws LoadError naming the offending row.
GroupedDataset load_manifest(const std::filesystem::path& csv_path,
                             const std::filesystem::path& image_root,
                             const ManifestOptions& options = {});

/// Cross-subject split: round(n_subjects * test_fraction) subjects, chosen by
/// a seeded shuffle, go to the test side. Returns (train, test).
std::pair<GroupedDataset, GroupedDataset> split_by_subject(const GroupedDataset& dataset,
                                                           double test_fraction,
                                                           std::uint64_t seed);

struct GroupSpec {
  std::string value;
  double proportion = 0.0;
  double difficulty = 0.0;  // added to the pixel noise stddev
};

struct AttributeSpec {
  std::string name;
  std::vector<GroupSpec> groups;
};

/// Parses "m:0.7,f:0.3" or "m:0.7:0,f:0.3:0.2" (value:proportion[:difficulty]).
AttributeSpec parse_attribute_spec(std::string name, std::string_view groups);

struct SyntheticSpec {
  std::size_t n_samples = 2000;
  std::size_t n_classes = 3;
  std::size_t image_size = 48;
  std::size_t samples_per_subject = 10;
  double noise = 0.3;
  /// First entry is allocated per sample with exact quotas; later entries are
  /// allocated per subject.
  std::vector<AttributeSpec> attributes;
  std::uint64_t seed = 0;
};

/// Oriented sinusoidal grating for a class, values in [0.1, 0.9].
Tensor class_template(std::size_t label, std::size_t n_classes, std::size_t size);

/// Largest-remainder allocation of `total` items to the given proportions.
std::vector<std::size_t> quota_counts(std::span<const double> proportions, std::size_t total);

/// Class templates plus Gaussian pixel noise whose stddev grows with the
/// difficulty of the sample's groups. Pixels are quantized to 8 bits so a
/// dataset written to PNG reloads identically. Throws ParameterError.
GroupedDataset generate_synthetic(const SyntheticSpec& spec);

/// Writes images/<index>.png plus a manifest CSV into `directory`.
void write_dataset(const GroupedDataset& dataset, const std::filesystem::path& directory,
                   const std::string& manifest_name = "manifest.csv");

/// Tensor [H, W, C] in [0, 1] -> 8-bit image (rounded).
Image to_image(const Tensor& image);

}  // namespace compfair

#endif  // COMPFAIR_DATASET_HPP_
