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

#ifndef COMPFAIR_ANALYSIS_HPP_
#define COMPFAIR_ANALYSIS_HPP_

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "compfair/fairness.hpp"
#include "compfair/network.hpp"

namespace compfair {

struct Histogram {
  std::string tensor;
  std::vector<double> bin_edges;  // counts.size() + 1 ascending edges
  std::vector<std::size_t> counts;

  std::size_t total() const;
};

struct HistogramOptions {
  std::size_t bins = 101;
  bool symmetric = false;  // range [-max|w|, max|w|] instead of [min, max]
};

/// Equal-width bins. Bin i holds lo + i*w <= v < lo + (i+1)*w, the maximum
/// goes in the last bin. A constant input gets the range [v - 0.5, v + 0.5].
Histogram histogram(std::string name, std::span<const float> values, const HistogramOptions& options = {});

/// Histogram of a layer's kernel. Throws LookupError for an unknown layer or
/// a layer without a kernel.
Histogram weight_histogram(const Model& model, const std::string& layer, const HistogramOptions& options = {});

/// Columns: bin_left,bin_right,count
std::string histogram_csv(const Histogram& histogram);

struct GapStats {
  double sparsity = 0.0;
  std::size_t total = 0;   // prunable weights N
  std::size_t pruned = 0;  // floor(sparsity * N)
  double threshold = 0.0;  // |w| order statistic at rank floor(sparsity * N); 0 when nothing is pruned
  double removed_mass = 0.0;  // sum |w| over the pruned weights
  double total_mass = 0.0;    // sum |w| over all prunable weights
  /// Share of the total |w| mass that pruning removes. Scale-invariant: two
  /// distributions of the same shape give the same value at any spread.
  double removed_fraction() const { return total_mass > 0.0 ? removed_mass / total_mass : 0.0; }
  /// Removed |w| mass per prunable weight, in weight units. This is the
  /// quantity that grows with the width of the distribution.
  double removed_mass_per_weight() const { return total ? removed_mass / static_cast<double>(total) : 0.0; }
};

/// Pooled over all prunable tensors, before pruning. Throws ParameterError
/// for a sparsity outside [0, 1).
GapStats pruning_gap_stats(const Model& model, double sparsity);
GapStats pruning_gap_stats(std::span<const float> weights, double sparsity);

/// One row per report sorted by sweep value (reports without one keep their
/// order and come first). Columns: Model, Sweep, Size (MB), Overall acc.,
/// "<Group> acc." per group, "<Attribute> gap" per attribute.
std::string tradeoff_table(std::vector<FairnessReport> reports);

}  // namespace compfair

#endif  // COMPFAIR_ANALYSIS_HPP_
