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

#ifndef COMPFAIR_FAIRNESS_HPP_
#define COMPFAIR_FAIRNESS_HPP_

#include <cstddef>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "compfair/dataset.hpp"
#include "compfair/network.hpp"
#include "compfair/quantization.hpp"

namespace compfair {

/// Argmax class per sample, ties to the lowest class index.
std::vector<std::size_t> predict(const Model& model, const GroupedDataset& dataset,
                                 std::size_t batch_size = 128);
std::vector<std::size_t> predict(const QuantizedModel& model, const GroupedDataset& dataset,
                                 std::size_t batch_size = 128);

struct GroupAccuracy {
  std::string attribute;
  std::string group;
  std::size_t n_correct = 0;
  std::size_t n_total = 0;

  double accuracy() const;
};

/// Per-group accuracy in schema order. Groups without samples are left out
/// and reported through `warnings` when given. Throws LookupError for an
/// unknown attribute and DimensionError if predictions and samples differ
/// in number.
std::vector<GroupAccuracy> group_accuracies(std::span<const std::size_t> predictions,
                                            const GroupedDataset& dataset, const std::string& attribute,
                                            std::vector<std::string>* warnings = nullptr);

/// max - min group accuracy. Throws ParameterError for fewer than 2 groups.
double gap(std::span<const GroupAccuracy> groups);
/// Same rule on bare accuracy values (any unit, e.g. percentages).
double accuracy_gap(std::span<const double> accuracies);

struct AttributeReport {
  std::string attribute;
  std::vector<GroupAccuracy> groups;
  std::optional<double> gap;  // absent with fewer than 2 non-empty groups
};

struct FairnessReport {
  std::string model;  // row label, e.g. "pruned (50%) + quant."
  std::size_t size_bytes = 0;  // deflated
  std::size_t raw_bytes = 0;
  std::size_t n_correct = 0;
  std::size_t n_total = 0;
  std::vector<AttributeReport> attributes;
  std::vector<std::string> warnings;
  std::optional<double> sweep_value;  // sparsity, cluster count, ... for tradeoff tables

  double overall_accuracy() const;
  double size_mb() const { return static_cast<double>(size_bytes) / 1e6; }
};

/// Report from existing predictions. `attributes` empty means every schema
/// attribute.
FairnessReport build_report(std::string label, std::span<const std::size_t> predictions,
                            const GroupedDataset& dataset, std::vector<std::string> attributes = {});

/// Loads the model file, measures its deflated size and evaluates it. An empty
/// label is derived from the compression history ("baseline", ...).
FairnessReport build_report(const std::filesystem::path& model_path, const GroupedDataset& dataset,
                            std::vector<std::string> attributes = {}, std::string label = {});

/// "Female acc." style column label for a group value.
std::string group_column(const std::string& value);

/// Nested JSON with exact counts.
nlohmann::json to_json(const FairnessReport& report);
nlohmann::json to_json(std::span<const FairnessReport> reports);

/// One row per report: Model, Size (MB), Overall acc., then "<Group> acc."
/// for every group of every attribute, as percentages with 2 decimals.
std::string reports_to_csv(std::span<const FairnessReport> reports);

}  // namespace compfair

#endif  // COMPFAIR_FAIRNESS_HPP_
