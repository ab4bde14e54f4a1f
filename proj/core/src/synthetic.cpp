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

// Synthetic grouped datasets: a desk-scale stand-in for annotated face
// corpora, with controllable group imbalance and per-group difficulty.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>

#include "compfair/csv.hpp"
#include "compfair/dataset.hpp"
#include "compfair/error.hpp"
#include "compfair/rng.hpp"

namespace compfair {

AttributeSpec parse_attribute_spec(std::string name, std::string_view groups) {
  AttributeSpec spec{std::move(name), {}};
  std::size_t start = 0;
  while (start <= groups.size()) {
    const std::size_t end = std::min(groups.find(',', start), groups.size());
    const std::string_view item = groups.substr(start, end - start);
    const std::size_t c1 = item.find(':');
    if (item.empty() || c1 == std::string_view::npos || c1 == 0)
      throw ParameterError("group '" + std::string(item) + "' must look like value:proportion[:difficulty]");
    GroupSpec g;
    g.value = std::string(item.substr(0, c1));
    const std::size_t c2 = item.find(':', c1 + 1);
    try {
      g.proportion = std::stod(std::string(item.substr(c1 + 1, c2 == std::string_view::npos ? item.npos : c2 - c1 - 1)));
      if (c2 != std::string_view::npos) g.difficulty = std::stod(std::string(item.substr(c2 + 1)));
    } catch (const std::exception&) {
      throw ParameterError("cannot parse numbers in group '" + std::string(item) + "'");
    }
    spec.groups.push_back(std::move(g));
    start = end + 1;
  }
  return spec;
}

std::vector<std::size_t> quota_counts(std::span<const double> proportions, std::size_t total) {
  std::vector<std::size_t> counts(proportions.size());
  std::vector<std::pair<double, std::size_t>> remainders;
  std::size_t assigned = 0;
  for (std::size_t i = 0; i < proportions.size(); ++i) {
    const double exact = proportions[i] * static_cast<double>(total);
    // Guard against 0.7 * 1000 = 699.9999...
    counts[i] = static_cast<std::size_t>(std::floor(exact + 1e-9));
    assigned += counts[i];
    remainders.emplace_back(exact - static_cast<double>(counts[i]), i);
  }
  std::stable_sort(remainders.begin(), remainders.end(),
                   [](const auto& a, const auto& b) { return a.first > b.first; });
  for (std::size_t k = 0; assigned < total && k < remainders.size(); ++k, ++assigned)
    ++counts[remainders[k].second];
  return counts;
}

Tensor class_template(std::size_t label, std::size_t n_classes, std::size_t size) {
  Tensor t({size, size, 1});
  const double theta = std::numbers::pi * static_cast<double>(label) / static_cast<double>(n_classes);
  // At most one cycle per 6 pixels; 4 cycles aliases to a flat image at 8x8.
  const double cycles = std::clamp(static_cast<double>(size) / 6.0, 1.0, 4.0);
  const double c = std::cos(theta), s = std::sin(theta);
  for (std::size_t y = 0; y < size; ++y)
    for (std::size_t x = 0; x < size; ++x) {
      const double u = (static_cast<double>(x) * c + static_cast<double>(y) * s) / static_cast<double>(size);
      t[y * size + x] = static_cast<float>(0.5 + 0.4 * std::sin(2.0 * std::numbers::pi * cycles * u));
    }
  return t;
}

namespace {

void validate(const AttributeSpec& a) {
  if (a.name.empty()) throw ParameterError("attribute name must be non-empty");
  if (a.groups.empty()) throw ParameterError("attribute '" + a.name + "' has no groups");
  double total = 0.0;
  for (const auto& g : a.groups) {
    if (!(g.proportion >= 0.0)) throw ParameterError("negative proportion in attribute '" + a.name + "'");
    if (!(g.difficulty >= 0.0)) throw ParameterError("negative difficulty in attribute '" + a.name + "'");
    total += g.proportion;
  }
  if (std::fabs(total - 1.0) > 1e-6)
    throw ParameterError("proportions of attribute '" + a.name + "' sum to " + std::to_string(total) +
                         ", expected 1");
}

}  // namespace

GroupedDataset generate_synthetic(const SyntheticSpec& spec) {
  if (spec.n_classes < 2) throw ParameterError("synthetic data needs at least 2 classes");
  if (spec.image_size < 2) throw ParameterError("synthetic image size must be at least 2");
  if (spec.samples_per_subject == 0) throw ParameterError("samples_per_subject must be positive");
  if (!(spec.noise >= 0.0)) throw ParameterError("noise must be non-negative");
  for (const auto& a : spec.attributes) validate(a);

  GroupedDataset ds;
  for (std::size_t c = 0; c < spec.n_classes; ++c) ds.class_names.push_back("c" + std::to_string(c));
  for (const auto& a : spec.attributes) {
    AttributeSchema schema{a.name, {}};
    for (const auto& g : a.groups) schema.values.push_back(g.value);
    std::sort(schema.values.begin(), schema.values.end(), natural_less);
    ds.attributes.push_back(std::move(schema));
  }

  // Primary attribute: exact per-sample quotas, laid out in group blocks.
  std::vector<std::size_t> primary_group(spec.n_samples, 0);
  if (!spec.attributes.empty()) {
    std::vector<double> props;
    for (const auto& g : spec.attributes[0].groups) props.push_back(g.proportion);
    const auto counts = quota_counts(props, spec.n_samples);
    std::size_t i = 0;
    for (std::size_t g = 0; g < counts.size(); ++g)
      for (std::size_t k = 0; k < counts[g]; ++k) primary_group[i++] = g;
  }

  // Subjects never straddle a primary group boundary.
  std::vector<std::size_t> subject_of(spec.n_samples);
  std::vector<std::size_t> position_in_subject(spec.n_samples);
  std::size_t n_subjects = 0;
  for (std::size_t i = 0; i < spec.n_samples; ++i) {
    const bool new_group = i == 0 || primary_group[i] != primary_group[i - 1];
    if (new_group || position_in_subject[i - 1] + 1 >= spec.samples_per_subject) {
      subject_of[i] = n_subjects++;
      position_in_subject[i] = 0;
    } else {
      subject_of[i] = subject_of[i - 1];
      position_in_subject[i] = position_in_subject[i - 1] + 1;
    }
  }

  // Secondary attributes: quotas over subjects, assigned by a seeded shuffle.
  const Rng root(spec.seed);
  std::vector<std::vector<std::size_t>> subject_group(spec.attributes.size(),
                                                      std::vector<std::size_t>(n_subjects, 0));
  for (std::size_t a = 1; a < spec.attributes.size(); ++a) {
    std::vector<double> props;
    for (const auto& g : spec.attributes[a].groups) props.push_back(g.proportion);
    const auto counts = quota_counts(props, n_subjects);
    std::vector<std::size_t> order(n_subjects);
    for (std::size_t s = 0; s < n_subjects; ++s) order[s] = s;
    Rng rng = root.split("attributes").split(a);
    shuffle(order, rng);
    std::size_t k = 0;
    for (std::size_t g = 0; g < counts.size(); ++g)
      for (std::size_t c = 0; c < counts[g]; ++c) subject_group[a][order[k++]] = g;
  }

  std::vector<Tensor> templates;
  for (std::size_t c = 0; c < spec.n_classes; ++c)
    templates.push_back(class_template(c, spec.n_classes, spec.image_size));

  const Rng pixels = root.split("pixels");
  char id[32];
  ds.samples.reserve(spec.n_samples);
  for (std::size_t i = 0; i < spec.n_samples; ++i) {
    Sample s;
    const std::size_t subject = subject_of[i];
    s.label = (subject + position_in_subject[i]) % spec.n_classes;
    std::snprintf(id, sizeof id, "s%04zu", subject);
    s.subject_id = id;
    double sigma = spec.noise;
    for (std::size_t a = 0; a < spec.attributes.size(); ++a) {
      const std::size_t g = a == 0 ? primary_group[i] : subject_group[a][subject];
      const auto& group = spec.attributes[a].groups[g];
      s.attributes[spec.attributes[a].name] = group.value;
      sigma += group.difficulty;
    }
    Rng rng = pixels.split(i);
    s.image = templates[s.label];
    for (float& v : s.image.data()) {
      const double noisy = std::clamp(v + sigma * rng.normal(), 0.0, 1.0);
      v = static_cast<float>(std::round(noisy * 255.0) / 255.0);
    }
    ds.samples.push_back(std::move(s));
  }
  return ds;
}

void write_dataset(const GroupedDataset& dataset, const std::filesystem::path& directory,
                   const std::string& manifest_name) {
  std::error_code ec;
  std::filesystem::create_directories(directory / "images", ec);
  if (ec) throw IoError("cannot create " + (directory / "images").string() + ": " + ec.message());
  std::ofstream manifest(directory / manifest_name, std::ios::binary);
  if (!manifest) throw IoError("cannot write " + (directory / manifest_name).string());
  std::vector<std::string> header{"path", "label", "subject_id"};
  for (const auto& a : dataset.attributes) header.push_back("attr:" + a.name);
  csv::write_row(manifest, header);
  char name[32];
  for (std::size_t i = 0; i < dataset.size(); ++i) {
    const Sample& s = dataset.samples[i];
    std::snprintf(name, sizeof name, "images/%06zu.png", i);
    write_png(directory / name, to_image(s.image));
    std::vector<std::string> row{name, dataset.class_names.at(s.label), s.subject_id};
    for (const auto& a : dataset.attributes) row.push_back(s.attributes.at(a.name));
    csv::write_row(manifest, row);
  }
  if (!manifest) throw IoError("write failed for " + (directory / manifest_name).string());
}

}  // namespace compfair
