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

#include "compfair/dataset.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstring>
#include <fstream>
#include <set>

#include "compfair/csv.hpp"
#include "compfair/error.hpp"
#include "compfair/rng.hpp"

namespace compfair {

const AttributeSchema& GroupedDataset::attribute(std::string_view name) const {
  for (const auto& a : attributes)
    if (a.name == name) return a;
  throw LookupError("dataset has no attribute '" + std::string(name) + "'");
}

std::map<std::string, std::size_t> GroupedDataset::group_counts(std::string_view name) const {
  attribute(name);
  std::map<std::string, std::size_t> counts;
  const std::string key(name);
  for (const auto& s : samples) ++counts[s.attributes.at(key)];
  return counts;
}

Tensor GroupedDataset::images(std::span<const std::size_t> indices) const {
  if (indices.empty()) throw DimensionError("cannot batch zero samples");
  const Shape& s = samples.at(indices[0]).image.shape();
  Shape batch{indices.size()};
  batch.insert(batch.end(), s.begin(), s.end());
  Tensor out(batch);
  const std::size_t stride = samples[indices[0]].image.size();
  for (std::size_t i = 0; i < indices.size(); ++i) {
    const Tensor& img = samples.at(indices[i]).image;
    if (img.shape() != s) throw DimensionError("dataset images have inconsistent shapes");
    std::memcpy(out.raw() + i * stride, img.raw(), stride * sizeof(float));
  }
  return out;
}

Tensor GroupedDataset::one_hot(std::span<const std::size_t> indices, std::size_t width) const {
  if (width == 0) width = num_classes();
  Tensor out({indices.size(), width});
  for (std::size_t i = 0; i < indices.size(); ++i) {
    const std::size_t label = samples.at(indices[i]).label;
    if (label >= width) throw DimensionError("label index out of range");
    out[i * width + label] = 1.0f;
  }
  return out;
}

GroupedDataset GroupedDataset::subset(std::span<const std::size_t> indices) const {
  GroupedDataset out;
  out.class_names = class_names;
  out.attributes = attributes;
  out.samples.reserve(indices.size());
  for (std::size_t i : indices) out.samples.push_back(samples.at(i));
  return out;
}

// ---------------------------------------------------------------------------
// Preprocessing

Tensor preprocess(const Image& image, const PreprocessConfig& target) {
  if (image.width == 0 || image.height == 0 || image.channels == 0)
    throw LoadError("cannot preprocess a zero-dimension image");
  if (target.width == 0 || target.height == 0) throw ParameterError("target size must be positive");
  const std::size_t out_c = target.grayscale ? 1 : 3;
  const std::size_t w = image.width, h = image.height;

  // Colour conversion first, at source resolution.
  std::vector<double> src(w * h * out_c);
  for (std::size_t i = 0; i < w * h; ++i) {
    const std::uint8_t* px = image.pixels.data() + i * image.channels;
    if (target.grayscale) {
      src[i] = image.channels == 1
                   ? px[0] / 255.0
                   : (0.299 * px[0] + 0.587 * px[1] + 0.114 * px[2]) / 255.0;
    } else {
      for (std::size_t c = 0; c < 3; ++c)
        src[i * 3 + c] = (image.channels == 1 ? px[0] : px[c]) / 255.0;
    }
  }

  Tensor out({target.height, target.width, out_c});
  const double sy = static_cast<double>(h) / target.height;
  const double sx = static_cast<double>(w) / target.width;
  for (std::size_t y = 0; y < target.height; ++y) {
    const double fy = std::clamp((y + 0.5) * sy - 0.5, 0.0, static_cast<double>(h - 1));
    const std::size_t y0 = static_cast<std::size_t>(fy);
    const std::size_t y1 = std::min(y0 + 1, h - 1);
    const double wy = fy - y0;
    for (std::size_t x = 0; x < target.width; ++x) {
      const double fx = std::clamp((x + 0.5) * sx - 0.5, 0.0, static_cast<double>(w - 1));
      const std::size_t x0 = static_cast<std::size_t>(fx);
      const std::size_t x1 = std::min(x0 + 1, w - 1);
      const double wx = fx - x0;
      for (std::size_t c = 0; c < out_c; ++c) {
        const auto at = [&](std::size_t yy, std::size_t xx) { return src[(yy * w + xx) * out_c + c]; };
        const double v = (1 - wy) * ((1 - wx) * at(y0, x0) + wx * at(y0, x1)) +
                         wy * ((1 - wx) * at(y1, x0) + wx * at(y1, x1));
        out[(y * target.width + x) * out_c + c] = static_cast<float>(v);
      }
    }
  }
  return out;
}

Image to_image(const Tensor& image) {
  if (image.rank() != 3 || (image.dim(2) != 1 && image.dim(2) != 3))
    throw DimensionError("to_image expects [H, W, 1|3], got " + to_string(image.shape()));
  Image out;
  out.height = image.dim(0);
  out.width = image.dim(1);
  out.channels = image.dim(2);
  out.pixels.resize(image.size());
  for (std::size_t i = 0; i < image.size(); ++i)
    out.pixels[i] = static_cast<std::uint8_t>(std::lround(std::clamp(image[i], 0.0f, 1.0f) * 255.0f));
  return out;
}

// ---------------------------------------------------------------------------
// Manifest

bool natural_less(const std::string& a, const std::string& b) {
  std::size_t i = 0, j = 0;
  while (i < a.size() && j < b.size()) {
    if (std::isdigit(static_cast<unsigned char>(a[i])) && std::isdigit(static_cast<unsigned char>(b[j]))) {
      std::size_t ie = i, je = j;
      while (ie < a.size() && std::isdigit(static_cast<unsigned char>(a[ie]))) ++ie;
      while (je < b.size() && std::isdigit(static_cast<unsigned char>(b[je]))) ++je;
      std::string_view na(a.data() + i, ie - i), nb(b.data() + j, je - j);
      while (na.size() > 1 && na.front() == '0') na.remove_prefix(1);
      while (nb.size() > 1 && nb.front() == '0') nb.remove_prefix(1);
      if (na.size() != nb.size()) return na.size() < nb.size();
      if (na != nb) return na < nb;
      i = ie;
      j = je;
    } else {
      if (a[i] != b[j]) return a[i] < b[j];
      ++i;
      ++j;
    }
  }
  return a.size() - i < b.size() - j;
}

namespace {

struct ManifestRow {
  std::size_t line;
  std::vector<std::string> fields;
};

}  // namespace

GroupedDataset load_manifest(const std::filesystem::path& csv_path,
                             const std::filesystem::path& image_root,
                             const ManifestOptions& options) {
  std::ifstream in(csv_path);
  if (!in) throw LoadError("cannot open manifest " + csv_path.string());
  std::string line;
  if (!std::getline(in, line)) throw LoadError("manifest " + csv_path.string() + " has no header row");
  if (line.size() >= 3 && static_cast<unsigned char>(line[0]) == 0xEF) line.erase(0, 3);  // BOM
  const auto header = csv::split_line(line);

  std::ptrdiff_t col_path = -1, col_label = -1, col_subject = -1;
  std::vector<std::pair<std::size_t, std::string>> attr_cols;
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (header[i] == "path") col_path = static_cast<std::ptrdiff_t>(i);
    else if (header[i] == "label") col_label = static_cast<std::ptrdiff_t>(i);
    else if (header[i] == "subject_id") col_subject = static_cast<std::ptrdiff_t>(i);
    else if (header[i].rfind("attr:", 0) == 0) attr_cols.emplace_back(i, header[i].substr(5));
  }
  if (col_path < 0 || col_label < 0 || col_subject < 0)
    throw LoadError("manifest header must contain path, label and subject_id columns");

  std::vector<ManifestRow> rows;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line == "\r") continue;
    auto fields = csv::split_line(line);
    if (fields.size() != header.size())
      throw LoadError("manifest row " + std::to_string(line_no) + ": expected " +
                      std::to_string(header.size()) + " fields, got " + std::to_string(fields.size()));
    rows.push_back({line_no, std::move(fields)});
  }

  GroupedDataset ds;
  if (!options.class_names.empty()) {
    ds.class_names = options.class_names;
  } else {
    std::set<std::string> labels;
    for (const auto& r : rows) labels.insert(r.fields[col_label]);
    ds.class_names.assign(labels.begin(), labels.end());
    std::sort(ds.class_names.begin(), ds.class_names.end(), natural_less);
  }
  for (const auto& [col, name] : attr_cols) ds.attributes.push_back({name, {}});

  for (const auto& r : rows) {
    const std::string where = "manifest row " + std::to_string(r.line);
    Sample s;
    s.path = r.fields[col_path];
    const auto it = std::find(ds.class_names.begin(), ds.class_names.end(), r.fields[col_label]);
    if (it == ds.class_names.end())
      throw LoadError(where + ": unknown label '" + r.fields[col_label] + "'");
    s.label = static_cast<std::size_t>(it - ds.class_names.begin());
    s.subject_id = r.fields[col_subject];
    if (s.subject_id.empty()) throw LoadError(where + ": empty subject_id");
    for (std::size_t a = 0; a < attr_cols.size(); ++a) {
      const std::string& value = r.fields[attr_cols[a].first];
      if (value.empty()) throw LoadError(where + ": missing attribute '" + attr_cols[a].second + "'");
      auto& values = ds.attributes[a].values;
      if (std::find(values.begin(), values.end(), value) == values.end()) values.push_back(value);
      s.attributes[attr_cols[a].second] = value;
    }
    const std::filesystem::path file = image_root / s.path;
    if (!std::filesystem::exists(file))
      throw LoadError(where + ": missing image file " + file.string());
    try {
      s.image = preprocess(read_png(file), options.preprocess);
    } catch (const LoadError& e) {
      throw LoadError(where + ": " + e.what());
    }
    ds.samples.push_back(std::move(s));
  }
  for (auto& a : ds.attributes) std::sort(a.values.begin(), a.values.end(), natural_less);
  return ds;
}

// ---------------------------------------------------------------------------
// Splitting

std::pair<GroupedDataset, GroupedDataset> split_by_subject(const GroupedDataset& dataset,
                                                           double test_fraction,
                                                           std::uint64_t seed) {
  if (!(test_fraction >= 0.0 && test_fraction <= 1.0))
    throw ParameterError("test_fraction must be in [0, 1]");
  std::set<std::string> unique;
  for (const auto& s : dataset.samples) unique.insert(s.subject_id);
  std::vector<std::string> subjects(unique.begin(), unique.end());
  const std::size_t n = subjects.size();
  const bool proper = test_fraction > 0.0 && test_fraction < 1.0;
  if (proper && n < 2)
    throw SplitError("cannot split " + std::to_string(n) + " subject(s) into non-empty train and test sets");

  std::size_t n_test = static_cast<std::size_t>(std::llround(static_cast<double>(n) * test_fraction));
  if (proper) n_test = std::clamp<std::size_t>(n_test, 1, n - 1);

  Rng rng(seed);
  shuffle(subjects, rng);
  const std::set<std::string> test_subjects(subjects.begin(), subjects.begin() + n_test);

  std::vector<std::size_t> train_idx, test_idx;
  for (std::size_t i = 0; i < dataset.size(); ++i)
    (test_subjects.count(dataset.samples[i].subject_id) ? test_idx : train_idx).push_back(i);
  return {dataset.subset(train_idx), dataset.subset(test_idx)};
}

}  // namespace compfair
