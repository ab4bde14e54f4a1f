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

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>
#include <vector>

#include "compfair/compfair.hpp"

using namespace compfair;

namespace {

std::vector<float> normal_values(std::size_t n, double sd, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<float> v(n);
  for (float& x : v) x = static_cast<float>(rng.normal() * sd);
  return v;
}

FairnessReport sweep_report(double sparsity, std::size_t bytes) {
  FairnessReport r;
  r.model = "pruned (" + std::to_string(static_cast<int>(sparsity * 100)) + "%)";
  r.size_bytes = bytes;
  r.n_correct = 7;
  r.n_total = 10;
  r.sweep_value = sparsity;
  r.attributes = {{"gender", {{"gender", "female", 3, 5}, {"gender", "male", 4, 5}}, 0.2}};
  return r;
}

}  // namespace

TEST(Histogram, ConstantTensorFillsOneBin) {
  const std::vector<float> v(50, 0.3f);
  const Histogram h = histogram("c", v, {11, false});
  EXPECT_EQ(std::count_if(h.counts.begin(), h.counts.end(), [](std::size_t c) { return c > 0; }), 1);
  EXPECT_EQ(h.total(), 50u);
  EXPECT_EQ(h.bin_edges.size(), h.counts.size() + 1);
}

TEST(Histogram, MatchesScanAndBin) {
  const std::vector<float> v = normal_values(5000, 1.0, 2);
  const Histogram h = histogram("n", v, {101, false});
  const double lo = *std::min_element(v.begin(), v.end()), hi = *std::max_element(v.begin(), v.end());
  const double width = (hi - lo) / 101.0;
  std::vector<std::size_t> oracle(101, 0);
  for (float x : v) ++oracle[std::min<std::size_t>(100, static_cast<std::size_t>(std::floor((x - lo) / width)))];
  EXPECT_EQ(h.counts, oracle);
  EXPECT_DOUBLE_EQ(h.bin_edges.front(), lo);
  EXPECT_DOUBLE_EQ(h.bin_edges.back(), hi);
}

TEST(Histogram, SymmetricRangeCentresOnZero) {
  const std::vector<float> v{-0.1f, 0.2f, 0.5f};
  const Histogram h = histogram("s", v, {10, true});
  EXPECT_DOUBLE_EQ(h.bin_edges.front(), -0.5);
  EXPECT_DOUBLE_EQ(h.bin_edges.back(), 0.5);
  EXPECT_EQ(h.total(), 3u);
}

TEST(WeightHistogram, PrunedKernelHasHeavyZeroBin) {
  const PrunedModel p = prune(build_ck48(1), 0.6, PruneScope::PerLayer);
  const Histogram h = weight_histogram(p.model, "conv2d_1");
  std::size_t zero_bin = 0;
  for (std::size_t b = 0; b < h.counts.size(); ++b)
    if (h.bin_edges[b] <= 0.0 && 0.0 < h.bin_edges[b + 1]) zero_bin = b;
  EXPECT_GE(static_cast<double>(h.counts[zero_bin]), 0.6 * static_cast<double>(h.total()));
  EXPECT_EQ(h.total(), parameter(p.model, "conv2d_1/kernel").size());
}

TEST(WeightHistogram, UnknownOrKernelLessLayerThrows) {
  const Model m = build_ck48(0);
  EXPECT_THROW(weight_histogram(m, "conv9"), LookupError);
  EXPECT_THROW(weight_histogram(m, "flatten"), LookupError);
}

TEST(HistogramCsv, Header) {
  const std::vector<float> v{0.0f, 1.0f};
  const std::string csv = histogram_csv(histogram("t", v, {2, false}));
  EXPECT_EQ(csv.substr(0, csv.find('\n')), "bin_left,bin_right,count");
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 3);
}

TEST(GapStats, ZeroSparsity) {
  const GapStats g = pruning_gap_stats(normal_values(100, 1.0, 1), 0.0);
  EXPECT_EQ(g.threshold, 0.0);
  EXPECT_EQ(g.removed_mass, 0.0);
}

TEST(GapStats, ExistingZerosAbsorbPruning) {
  std::vector<float> w(50, 1.0f);
  for (int i = 0; i < 25; ++i) w[i] = -1.0f;
  w.resize(100, 0.0f);
  const GapStats g = pruning_gap_stats(w, 0.5);
  EXPECT_EQ(g.threshold, 0.0);
  EXPECT_EQ(g.removed_mass, 0.0);
  EXPECT_EQ(g.pruned, 50u);
}

TEST(GapStats, ThresholdIsOrderStatistic) {
  const std::vector<float> w = normal_values(1234, 0.3, 3);
  std::vector<double> mags;
  for (float x : w) mags.push_back(std::fabs(x));
  std::sort(mags.begin(), mags.end());
  for (double s : {0.1, 0.35, 0.6, 0.9}) {
    const GapStats g = pruning_gap_stats(w, s);
    const std::size_t k = static_cast<std::size_t>(std::floor(s * 1234 + 1e-6));
    EXPECT_EQ(g.pruned, k);
    EXPECT_DOUBLE_EQ(g.threshold, mags[k - 1]);
    EXPECT_NEAR(g.removed_mass, std::accumulate(mags.begin(), mags.begin() + static_cast<std::ptrdiff_t>(k), 0.0), 1e-9);
  }
}

TEST(GapStats, WideDistributionLosesMoreMass) {
  const GapStats narrow = pruning_gap_stats(normal_values(5000, 0.01, 4), 0.6);
  const GapStats wide = pruning_gap_stats(normal_values(5000, 0.5, 5), 0.6);
  EXPECT_GT(wide.threshold, narrow.threshold);
  EXPECT_GT(wide.removed_mass_per_weight(), narrow.removed_mass_per_weight());
}

TEST(GapStats, RemovedFractionIgnoresScale) {
  const std::vector<float> w = normal_values(5000, 1.0, 6);
  std::vector<float> scaled(w.size());
  std::transform(w.begin(), w.end(), scaled.begin(), [](float x) { return x * 0.25f; });
  EXPECT_NEAR(pruning_gap_stats(w, 0.6).removed_fraction(), pruning_gap_stats(scaled, 0.6).removed_fraction(), 1e-6);
}

TEST(TradeoffTable, SingleRow) {
  const std::string t = tradeoff_table({sweep_report(0.5, 1000)});
  EXPECT_EQ(std::count(t.begin(), t.end(), '\n'), 2);
}

TEST(TradeoffTable, SortedBySweepWithGapColumns) {
  const std::string t = tradeoff_table({sweep_report(0.9, 100), sweep_report(0.1, 900), sweep_report(0.5, 500)});
  const std::string header = t.substr(0, t.find('\n'));
  for (const std::string col : {"Size (MB)", "Overall acc.", "Female acc.", "Male acc.", "Gender gap"})
    EXPECT_NE(header.find(col), std::string::npos) << col;
  EXPECT_LT(t.find("pruned (10%)"), t.find("pruned (50%)"));
  EXPECT_LT(t.find("pruned (50%)"), t.find("pruned (90%)"));
}
