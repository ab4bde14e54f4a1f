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
#include <filesystem>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "compfair/compfair.hpp"

using namespace compfair;

namespace {

struct GapRow {
  double female, male, gap;
};

// Per-group accuracies (percent) and their reported gaps: a sparsity sweep
// and a cluster-count sweep.
const std::vector<GapRow> kSparsityRows{
    {67.08, 69.44, 2.36},  {59.86, 75.46, 15.60}, {62.77, 75.69, 12.92}, {62.36, 75.69, 13.33},
    {63.47, 69.67, 6.20},  {59.86, 71.06, 11.20}, {44.02, 36.34, 7.68},
};
const std::vector<GapRow> kClusterRows{
    {43.05, 47.22, 4.17},  {59.30, 72.91, 13.61}, {56.38, 76.15, 19.77},
    {60.55, 72.68, 12.13}, {60.27, 78.47, 18.20}, {59.16, 72.45, 13.29},
};

GroupedDataset labelled(std::vector<std::size_t> labels, std::vector<std::string> gender) {
  GroupedDataset d;
  d.class_names = {"a", "b", "c"};
  d.attributes = {{"gender", {}}};
  for (std::size_t i = 0; i < labels.size(); ++i) {
    Sample s;
    s.image = Tensor({1, 1, 1});
    s.label = labels[i];
    s.subject_id = "s" + std::to_string(i);
    s.attributes["gender"] = gender[i];
    auto& values = d.attributes[0].values;
    if (std::find(values.begin(), values.end(), gender[i]) == values.end()) values.push_back(gender[i]);
    d.samples.push_back(std::move(s));
  }
  return d;
}

GroupedDataset two_attribute_set(std::uint64_t seed) {
  SyntheticSpec s;
  s.n_samples = 500;
  s.n_classes = 3;
  s.image_size = 8;
  s.samples_per_subject = 5;
  s.noise = 0.6;
  s.attributes = {parse_attribute_spec("gender", "female:0.7,male:0.3:0.3"),
                  parse_attribute_spec("age", "a0:0.2,a1:0.2,a2:0.2,a3:0.2,a4:0.2")};
  s.seed = seed;
  return generate_synthetic(s);
}

std::vector<std::size_t> noisy_predictions(const GroupedDataset& d, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<std::size_t> p;
  for (const auto& s : d.samples) p.push_back(rng.uniform() < 0.7 ? s.label : rng.uniform_index(3));
  return p;
}

}  // namespace

TEST(Gap, ReproducesReferenceSparsitySweep) {
  for (const auto& r : kSparsityRows) {
    const std::vector<double> acc{r.female, r.male};
    EXPECT_NEAR(accuracy_gap(acc), r.gap, 0.01) << r.female << "/" << r.male;
  }
}

TEST(Gap, ReproducesReferenceClusterSweep) {
  for (const auto& r : kClusterRows) {
    const std::vector<double> acc{r.female, r.male};
    EXPECT_NEAR(accuracy_gap(acc), r.gap, 0.01) << r.female << "/" << r.male;
  }
}

TEST(Gap, EqualAccuraciesGiveZero) {
  const std::vector<double> acc(5, 0.42);
  EXPECT_EQ(accuracy_gap(acc), 0.0);
}

TEST(Gap, PermutationAndInteriorGroupInvariant) {
  std::vector<double> acc{0.3, 0.9, 0.5, 0.7};
  const double g = accuracy_gap(acc);
  std::reverse(acc.begin(), acc.end());
  EXPECT_EQ(accuracy_gap(acc), g);
  acc.push_back(0.6);
  EXPECT_EQ(accuracy_gap(acc), g);
}

TEST(Gap, NeedsTwoGroups) {
  const std::vector<double> one{0.5};
  EXPECT_THROW(accuracy_gap(one), ParameterError);
  EXPECT_THROW(gap(std::vector<GroupAccuracy>{{"g", "a", 1, 2}}), ParameterError);
}

TEST(GroupAccuracies, HandCounts) {
  const GroupedDataset d = labelled({0, 1, 2, 0}, {"m", "m", "f", "f"});
  const std::vector<std::size_t> pred{0, 0, 2, 0};  // correct: 1,0,1,1
  const auto g = group_accuracies(pred, d, "gender");
  ASSERT_EQ(g.size(), 2u);
  EXPECT_EQ(g[0].group, "m");
  EXPECT_DOUBLE_EQ(g[0].accuracy(), 0.5);
  EXPECT_DOUBLE_EQ(g[1].accuracy(), 1.0);
  EXPECT_DOUBLE_EQ(gap(g), 0.5);
}

TEST(GroupAccuracies, PerfectClassifierHasNoGap) {
  const GroupedDataset d = labelled({0, 1, 2, 0, 1}, {"m", "f", "f", "x", "m"});
  const std::vector<std::size_t> pred{0, 1, 2, 0, 1};
  const auto g = group_accuracies(pred, d, "gender");
  for (const auto& x : g) EXPECT_EQ(x.accuracy(), 1.0);
  EXPECT_EQ(gap(g), 0.0);
}

TEST(GroupAccuracies, EmptyGroupOmittedWithWarning) {
  GroupedDataset d = labelled({0, 1}, {"m", "f"});
  d.attributes[0].values.push_back("other");
  std::vector<std::string> warnings;
  const std::vector<std::size_t> pred{0, 1};
  const auto g = group_accuracies(pred, d, "gender", &warnings);
  EXPECT_EQ(g.size(), 2u);
  ASSERT_EQ(warnings.size(), 1u);
  EXPECT_NE(warnings[0].find("other"), std::string::npos);
}

TEST(GroupAccuracies, MatchesFilterAndCount) {
  const GroupedDataset d = two_attribute_set(1);
  const auto pred = noisy_predictions(d, 2);
  for (const std::string attr : {"gender", "age"}) {
    std::map<std::string, std::pair<std::size_t, std::size_t>> oracle;
    for (std::size_t i = 0; i < d.size(); ++i) {
      auto& [c, t] = oracle[d.samples[i].attributes.at(attr)];
      c += pred[i] == d.samples[i].label;
      ++t;
    }
    for (const auto& g : group_accuracies(pred, d, attr)) {
      EXPECT_EQ(g.n_correct, oracle[g.group].first) << g.group;
      EXPECT_EQ(g.n_total, oracle[g.group].second) << g.group;
    }
  }
}

TEST(BuildReport, WeightedGroupsRecombineToOverall) {
  const GroupedDataset d = two_attribute_set(3);
  const auto pred = noisy_predictions(d, 4);
  const FairnessReport r = build_report("m", pred, d);
  ASSERT_EQ(r.attributes.size(), 2u);
  for (const auto& a : r.attributes) {
    double weighted = 0.0;
    std::size_t correct = 0;
    for (const auto& g : a.groups) {
      weighted += g.accuracy() * static_cast<double>(g.n_total) / static_cast<double>(r.n_total);
      correct += g.n_correct;
    }
    EXPECT_NEAR(weighted, r.overall_accuracy(), 1e-12) << a.attribute;
    EXPECT_EQ(correct, r.n_correct) << a.attribute;
  }
  EXPECT_EQ(r.attributes[1].groups.size(), 5u);
}

TEST(BuildReport, AllCorrectSaturates) {
  const GroupedDataset d = two_attribute_set(5);
  std::vector<std::size_t> pred;
  for (const auto& s : d.samples) pred.push_back(s.label);
  const FairnessReport r = build_report("m", pred, d);
  EXPECT_EQ(r.overall_accuracy(), 1.0);
  for (const auto& a : r.attributes) {
    EXPECT_EQ(*a.gap, 0.0);
    for (const auto& g : a.groups) EXPECT_EQ(g.accuracy(), 1.0);
  }
}

TEST(BuildReport, FromModelFileMeasuresSize) {
  const GroupedDataset d = two_attribute_set(6);
  const Model m = ModelBuilder("t", {8, 8, 1}).flatten().dense(3).softmax().build(1);
  const auto path = std::filesystem::temp_directory_path() / "compfair_fairness_model.nncm";
  save(m, path);
  const FairnessReport r = build_report(path, d, {"gender"});
  EXPECT_EQ(r.model, "baseline");
  EXPECT_EQ(r.size_bytes, measure_size(path).deflated_bytes);
  EXPECT_EQ(r.attributes.size(), 1u);
  EXPECT_EQ(r.n_total, d.size());
}

TEST(Predict, UniformOutputPicksClassZero) {
  Model m = ModelBuilder("u", {8, 8, 1}).flatten().dense(3).softmax().build(0);
  parameter(m, "dense/kernel").fill(0.0f);
  const GroupedDataset d = two_attribute_set(7);
  for (auto p : predict(m, d)) EXPECT_EQ(p, 0u);
}

TEST(Predict, HandLogits) {
  // Two one-pixel samples; logits = [x, 2x, -x].
  Model m = ModelBuilder("h", {1, 1, 1}).flatten().dense(3).softmax().build(0);
  parameter(m, "dense/kernel") = Tensor({1, 3}, std::vector<float>{1, 2, -1});
  parameter(m, "dense/bias").fill(0.0f);
  GroupedDataset d = labelled({1, 2}, {"m", "f"});
  d.samples[0].image[0] = 1.0f;   // argmax 1
  d.samples[1].image[0] = -1.0f;  // argmax 2
  EXPECT_EQ(predict(m, d), (std::vector<std::size_t>{1, 2}));
  EXPECT_EQ(predict(m, d, 1), predict(m, d, 128));
}

TEST(ReportCsv, HeaderAndFormatting) {
  const GroupedDataset d = labelled({0, 1, 2, 0}, {"female", "female", "male", "male"});
  FairnessReport r = build_report("baseline", std::vector<std::size_t>{0, 0, 2, 0}, d);
  r.size_bytes = 16510000;
  const std::vector<FairnessReport> rows{r};
  EXPECT_EQ(reports_to_csv(rows),
            "Model,Size (MB),Overall acc.,Female acc.,Male acc.\n"
            "baseline,16.5100,75.00,50.00,100.00\n");
}

TEST(ReportJson, CarriesGapsAndCounts) {
  const GroupedDataset d = labelled({0, 1, 2, 0}, {"female", "female", "male", "male"});
  const FairnessReport r = build_report("x", std::vector<std::size_t>{0, 0, 2, 0}, d);
  const nlohmann::json j = to_json(r);
  EXPECT_EQ(j["model"], "x");
  EXPECT_EQ(j["n_correct"], 3);
  EXPECT_DOUBLE_EQ(j["attributes"][0]["gap"].get<double>(), 0.5);
  const std::vector<FairnessReport> rs{r, r};
  EXPECT_EQ(to_json(rs)["reports"].size(), 2u);
}
