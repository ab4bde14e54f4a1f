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

#include "compfair/fairness.hpp"

#include <algorithm>
#include <cctype>
#include <numeric>
#include <sstream>

#include "compfair/csv.hpp"
#include "compfair/error.hpp"
#include "compfair/model_store.hpp"
#include "compfair/pipeline.hpp"

namespace compfair {

std::vector<std::size_t> predict(const Model& model, const GroupedDataset& dataset, std::size_t batch_size) {
  if (batch_size == 0) throw ParameterError("batch_size must be positive");
  std::vector<std::size_t> out;
  out.reserve(dataset.size());
  std::vector<std::size_t> idx;
  for (std::size_t start = 0; start < dataset.size(); start += batch_size) {
    idx.resize(std::min(batch_size, dataset.size() - start));
    std::iota(idx.begin(), idx.end(), start);
    const auto pred = argmax_rows(forward(model, dataset.images(idx), Mode::Infer));
    out.insert(out.end(), pred.begin(), pred.end());
  }
  return out;
}

std::vector<std::size_t> predict(const QuantizedModel& model, const GroupedDataset& dataset,
                                 std::size_t batch_size) {
  return predict(model.model, dataset, batch_size);
}

double GroupAccuracy::accuracy() const {
  return n_total ? static_cast<double>(n_correct) / static_cast<double>(n_total) : 0.0;
}

std::vector<GroupAccuracy> group_accuracies(std::span<const std::size_t> predictions,
                                            const GroupedDataset& dataset, const std::string& attribute,
                                            std::vector<std::string>* warnings) {
  const AttributeSchema& schema = dataset.attribute(attribute);
  if (predictions.size() != dataset.size())
    throw DimensionError(std::to_string(predictions.size()) + " predictions for " +
                         std::to_string(dataset.size()) + " samples");
  std::vector<GroupAccuracy> groups;
  for (const auto& v : schema.values) groups.push_back({attribute, v, 0, 0});
  for (std::size_t i = 0; i < dataset.size(); ++i) {
    const std::string& value = dataset.samples[i].attributes.at(attribute);
    auto it = std::find_if(groups.begin(), groups.end(), [&](const GroupAccuracy& g) { return g.group == value; });
    if (it == groups.end()) {
      groups.push_back({attribute, value, 0, 0});
      it = groups.end() - 1;
    }
    ++it->n_total;
    it->n_correct += predictions[i] == dataset.samples[i].label;
  }
  std::vector<GroupAccuracy> kept;
  for (auto& g : groups) {
    if (g.n_total) kept.push_back(std::move(g));
    else if (warnings) warnings->push_back("group '" + g.group + "' of attribute '" + attribute + "' has no samples");
  }
  return kept;
}

double accuracy_gap(std::span<const double> accuracies) {
  if (accuracies.size() < 2) throw ParameterError("a gap needs at least 2 groups");
  const auto [lo, hi] = std::minmax_element(accuracies.begin(), accuracies.end());
  return *hi - *lo;
}

double gap(std::span<const GroupAccuracy> groups) {
  std::vector<double> acc;
  for (const auto& g : groups) acc.push_back(g.accuracy());
  return accuracy_gap(acc);
}

double FairnessReport::overall_accuracy() const {
  return n_total ? static_cast<double>(n_correct) / static_cast<double>(n_total) : 0.0;
}

FairnessReport build_report(std::string label, std::span<const std::size_t> predictions,
                            const GroupedDataset& dataset, std::vector<std::string> attributes) {
  if (dataset.empty()) throw ParameterError("cannot audit an empty dataset");
  if (predictions.size() != dataset.size())
    throw DimensionError(std::to_string(predictions.size()) + " predictions for " +
                         std::to_string(dataset.size()) + " samples");
  if (attributes.empty())
    for (const auto& a : dataset.attributes) attributes.push_back(a.name);
  FairnessReport r;
  r.model = std::move(label);
  r.n_total = dataset.size();
  for (std::size_t i = 0; i < dataset.size(); ++i) r.n_correct += predictions[i] == dataset.samples[i].label;
  for (const auto& a : attributes) {
    AttributeReport ar{a, group_accuracies(predictions, dataset, a, &r.warnings), std::nullopt};
    if (ar.groups.size() >= 2) ar.gap = gap(ar.groups);
    r.attributes.push_back(std::move(ar));
  }
  return r;
}

FairnessReport build_report(const std::filesystem::path& model_path, const GroupedDataset& dataset,
                            std::vector<std::string> attributes, std::string label) {
  const LoadedModel loaded = load_model(model_path);
  const SizeReport size = measure_size(model_path);
  if (label.empty()) label = model_label(loaded.compression);
  FairnessReport r = build_report(std::move(label), predict(loaded.model, dataset), dataset, std::move(attributes));
  r.size_bytes = size.deflated_bytes;
  r.raw_bytes = size.raw_bytes;
  return r;
}

std::string group_column(const std::string& value) {
  std::string s = value;
  if (!s.empty()) s[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(s[0])));
  return s + " acc.";
}

nlohmann::json to_json(const FairnessReport& report) {
  nlohmann::json attrs = nlohmann::json::array();
  for (const auto& a : report.attributes) {
    nlohmann::json groups = nlohmann::json::array();
    for (const auto& g : a.groups)
      groups.push_back({{"group", g.group}, {"n_correct", g.n_correct}, {"n_total", g.n_total},
                        {"accuracy", g.accuracy()}});
    nlohmann::json j{{"attribute", a.attribute}, {"groups", groups}};
    j["gap"] = a.gap ? nlohmann::json(*a.gap) : nlohmann::json(nullptr);
    attrs.push_back(std::move(j));
  }
  nlohmann::json j{{"model", report.model},
                   {"size_bytes", report.size_bytes},
                   {"raw_bytes", report.raw_bytes},
                   {"size_mb", report.size_mb()},
                   {"n_correct", report.n_correct},
                   {"n_total", report.n_total},
                   {"overall_accuracy", report.overall_accuracy()},
                   {"attributes", attrs},
                   {"warnings", report.warnings}};
  if (report.sweep_value) j["sweep_value"] = *report.sweep_value;
  return j;
}

nlohmann::json to_json(std::span<const FairnessReport> reports) {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& r : reports) arr.push_back(to_json(r));
  return {{"reports", arr}};
}

namespace {

// Column keys (attribute, group) in first-seen order across all reports.
std::vector<std::pair<std::string, std::string>> group_keys(std::span<const FairnessReport> reports) {
  std::vector<std::pair<std::string, std::string>> keys;
  for (const auto& r : reports)
    for (const auto& a : r.attributes)
      for (const auto& g : a.groups) {
        std::pair<std::string, std::string> k{a.attribute, g.group};
        if (std::find(keys.begin(), keys.end(), k) == keys.end()) keys.push_back(std::move(k));
      }
  return keys;
}

std::string percent(double fraction) { return csv::format_fixed(fraction * 100.0, 2); }

}  // namespace

std::string reports_to_csv(std::span<const FairnessReport> reports) {
  const auto keys = group_keys(reports);
  std::ostringstream out;
  std::vector<std::string> header{"Model", "Size (MB)", "Overall acc."};
  for (const auto& k : keys) header.push_back(group_column(k.second));
  csv::write_row(out, header);
  for (const auto& r : reports) {
    std::vector<std::string> row{r.model, csv::format_fixed(r.size_mb(), 4), percent(r.overall_accuracy())};
    for (const auto& k : keys) {
      std::string cell;
      for (const auto& a : r.attributes)
        if (a.attribute == k.first)
          for (const auto& g : a.groups)
            if (g.group == k.second) cell = percent(g.accuracy());
      row.push_back(cell);
    }
    csv::write_row(out, row);
  }
  return out.str();
}

}  // namespace compfair
