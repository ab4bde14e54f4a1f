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

#include "compfair/analysis.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <numeric>
#include <sstream>

#include "compfair/csv.hpp"
#include "compfair/error.hpp"
#include "compfair/pruning.hpp"

namespace compfair {

std::size_t Histogram::total() const { return std::accumulate(counts.begin(), counts.end(), std::size_t{0}); }

Histogram histogram(std::string name, std::span<const float> values, const HistogramOptions& options) {
  if (options.bins == 0) throw ParameterError("histogram needs at least one bin");
  if (values.empty()) throw ParameterError("cannot histogram an empty tensor");
  const auto [mn, mx] = std::minmax_element(values.begin(), values.end());
  double lo = *mn, hi = *mx;
  if (options.symmetric) {
    hi = std::max(std::fabs(lo), std::fabs(hi));
    lo = -hi;
  }
  if (lo == hi) {
    lo -= 0.5;
    hi += 0.5;
  }
  const double width = (hi - lo) / static_cast<double>(options.bins);
  Histogram h{std::move(name), {}, std::vector<std::size_t>(options.bins, 0)};
  for (std::size_t i = 0; i <= options.bins; ++i) h.bin_edges.push_back(lo + static_cast<double>(i) * width);
  h.bin_edges.back() = hi;
  for (float v : values) {
    const double pos = (static_cast<double>(v) - lo) / width;
    const std::size_t bin = std::min(options.bins - 1, static_cast<std::size_t>(std::max(0.0, std::floor(pos))));
    ++h.counts[bin];
  }
  return h;
}

Histogram weight_histogram(const Model& model, const std::string& layer, const HistogramOptions& options) {
  const Layer& l = model.layer(layer);
  const Parameter* k = l.find("kernel");
  if (!k) throw LookupError("layer '" + layer + "' has no kernel");
  return histogram(k->name, k->value.data(), options);
}

std::string histogram_csv(const Histogram& histogram) {
  std::ostringstream out;
  out << "bin_left,bin_right,count\n";
  out.precision(9);
  for (std::size_t i = 0; i < histogram.counts.size(); ++i)
    out << histogram.bin_edges[i] << ',' << histogram.bin_edges[i + 1] << ',' << histogram.counts[i] << '\n';
  return out.str();
}

GapStats pruning_gap_stats(std::span<const float> weights, double sparsity) {
  if (!(sparsity >= 0.0 && sparsity < 1.0))
    throw ParameterError("sparsity must be in [0, 1), got " + std::to_string(sparsity));
  GapStats s;
  s.sparsity = sparsity;
  s.total = weights.size();
  s.pruned = prune_count(sparsity, weights.size());
  std::vector<double> mags(weights.size());
  for (std::size_t i = 0; i < weights.size(); ++i) mags[i] = std::fabs(static_cast<double>(weights[i]));
  s.total_mass = std::accumulate(mags.begin(), mags.end(), 0.0);
  if (s.pruned == 0) return s;
  std::nth_element(mags.begin(), mags.begin() + static_cast<std::ptrdiff_t>(s.pruned - 1), mags.end());
  s.threshold = mags[s.pruned - 1];
  // After nth_element the first pruned-1 entries are all <= threshold.
  std::sort(mags.begin(), mags.begin() + static_cast<std::ptrdiff_t>(s.pruned));
  s.removed_mass = std::accumulate(mags.begin(), mags.begin() + static_cast<std::ptrdiff_t>(s.pruned), 0.0);
  return s;
}

GapStats pruning_gap_stats(const Model& model, double sparsity) {
  std::vector<float> pooled;
  for (const auto& p : parameters(model))
    if (p.prunable) pooled.insert(pooled.end(), p.tensor->data().begin(), p.tensor->data().end());
  if (pooled.empty()) throw ParameterError("model has no prunable tensors");
  return pruning_gap_stats(pooled, sparsity);
}

namespace {

std::string capitalized(std::string s) {
  if (!s.empty()) s[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(s[0])));
  return s;
}

}  // namespace

std::string tradeoff_table(std::vector<FairnessReport> reports) {
  if (reports.empty()) throw ParameterError("tradeoff table needs at least one report");
  std::stable_sort(reports.begin(), reports.end(), [](const FairnessReport& a, const FairnessReport& b) {
    if (!a.sweep_value || !b.sweep_value) return !a.sweep_value && b.sweep_value;
    return *a.sweep_value < *b.sweep_value;
  });

  std::vector<std::pair<std::string, std::string>> groups;
  std::vector<std::string> attrs;
  for (const auto& r : reports)
    for (const auto& a : r.attributes) {
      if (std::find(attrs.begin(), attrs.end(), a.attribute) == attrs.end()) attrs.push_back(a.attribute);
      for (const auto& g : a.groups) {
        std::pair<std::string, std::string> k{a.attribute, g.group};
        if (std::find(groups.begin(), groups.end(), k) == groups.end()) groups.push_back(std::move(k));
      }
    }

  std::ostringstream out;
  std::vector<std::string> header{"Model", "Sweep", "Size (MB)", "Overall acc."};
  for (const auto& g : groups) header.push_back(group_column(g.second));
  for (const auto& a : attrs) header.push_back(capitalized(a) + " gap");
  csv::write_row(out, header);

  const auto pct = [](double f) { return csv::format_fixed(f * 100.0, 2); };
  for (const auto& r : reports) {
    std::vector<std::string> row{r.model, r.sweep_value ? csv::format_fixed(*r.sweep_value, 4) : "",
                                 csv::format_fixed(r.size_mb(), 4), pct(r.overall_accuracy())};
    for (const auto& [attr, group] : groups) {
      std::string cell;
      for (const auto& a : r.attributes)
        if (a.attribute == attr)
          for (const auto& g : a.groups)
            if (g.group == group) cell = pct(g.accuracy());
      row.push_back(cell);
    }
    for (const auto& attr : attrs) {
      std::string cell;
      for (const auto& a : r.attributes)
        if (a.attribute == attr && a.gap) cell = pct(*a.gap);
      row.push_back(cell);
    }
    csv::write_row(out, row);
  }
  return out.str();
}

}  // namespace compfair
