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

#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <set>
#include <string>
#include <vector>

#include "compfair/compfair.hpp"

using namespace compfair;
namespace fs = std::filesystem;

namespace {

fs::path fresh_dir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / "compfair_dataset_test" / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

Image gray(std::size_t w, std::size_t h, std::uint8_t v) { return Image{w, h, 1, std::vector<std::uint8_t>(w * h, v)}; }

void write_file(const fs::path& p, const std::string& text) { std::ofstream(p) << text; }

std::set<std::string> subjects(const GroupedDataset& d) {
  std::set<std::string> s;
  for (const auto& x : d.samples) s.insert(x.subject_id);
  return s;
}

GroupedDataset many_subjects(std::size_t n_subjects) {
  GroupedDataset d;
  d.class_names = {"a"};
  for (std::size_t i = 0; i < n_subjects; ++i)
    for (int k = 0; k < 2; ++k) {
      Sample s;
      s.image = Tensor({2, 2, 1});
      s.subject_id = "s" + std::to_string(i);
      d.samples.push_back(std::move(s));
    }
  return d;
}

}  // namespace

TEST(Manifest, HeaderOnlyGivesEmptyDataset) {
  const fs::path dir = fresh_dir("empty");
  write_file(dir / "m.csv", "path,label,subject_id,attr:gender\n");
  const GroupedDataset d = load_manifest(dir / "m.csv", dir);
  EXPECT_TRUE(d.empty());
}

TEST(Manifest, CountsGroupsAndSortsSchema) {
  const fs::path dir = fresh_dir("three");
  for (int i = 0; i < 3; ++i) write_png(dir / (std::to_string(i) + ".png"), gray(4, 4, 100));
  write_file(dir / "m.csv",
             "path,label,subject_id,attr:gender\n0.png,happy,s1,m\n1.png,sad,s2,f\n2.png,happy,s3,f\n");
  ManifestOptions o;
  o.preprocess = {4, 4, true};
  const GroupedDataset d = load_manifest(dir / "m.csv", dir, o);
  ASSERT_EQ(d.size(), 3u);
  EXPECT_EQ(d.group_counts("gender"), (std::map<std::string, std::size_t>{{"m", 1}, {"f", 2}}));
  EXPECT_EQ(d.attribute("gender").values, (std::vector<std::string>{"f", "m"}));
  EXPECT_EQ(d.class_names, (std::vector<std::string>{"happy", "sad"}));
  EXPECT_EQ(d.samples[1].label, 1u);
  EXPECT_THROW(d.attribute("age"), LookupError);
}

TEST(Manifest, MissingFileNamesRow) {
  // Rows are file lines; the header is row 1.
  const fs::path dir = fresh_dir("missing");
  write_png(dir / "0.png", gray(4, 4, 0));
  write_file(dir / "m.csv", "path,label,subject_id\n0.png,0,s1\nnope.png,1,s2\n");
  try {
    load_manifest(dir / "m.csv", dir);
    FAIL();
  } catch (const LoadError& e) {
    const std::string msg = e.what();
    EXPECT_NE(msg.find("row 3"), std::string::npos) << msg;
    EXPECT_NE(msg.find("nope.png"), std::string::npos) << msg;
  }
}

TEST(Manifest, RejectsMissingColumnsAndRaggedRows) {
  const fs::path dir = fresh_dir("bad");
  write_file(dir / "a.csv", "path,label\n");
  EXPECT_THROW(load_manifest(dir / "a.csv", dir), LoadError);
  write_file(dir / "b.csv", "path,label,subject_id\nx.png,0\n");
  EXPECT_THROW(load_manifest(dir / "b.csv", dir), LoadError);
  EXPECT_THROW(load_manifest(dir / "none.csv", dir), LoadError);
}

TEST(Manifest, NumericLabelsSortNumerically) {
  const fs::path dir = fresh_dir("numeric");
  std::string csv = "path,label,subject_id\n";
  for (int l : {10, 2, 1}) {
    write_png(dir / (std::to_string(l) + ".png"), gray(2, 2, 0));
    csv += std::to_string(l) + ".png," + std::to_string(l) + ",s" + std::to_string(l) + "\n";
  }
  write_file(dir / "m.csv", csv);
  ManifestOptions o;
  o.preprocess = {2, 2, true};
  EXPECT_EQ(load_manifest(dir / "m.csv", dir, o).class_names, (std::vector<std::string>{"1", "2", "10"}));
}

TEST(Preprocess, IdentitySizeKeepsValues) {
  Image img{3, 2, 1, {0, 50, 100, 150, 200, 255}};
  const Tensor t = preprocess(img, {2, 3, true});
  for (std::size_t i = 0; i < 6; ++i) EXPECT_NEAR(t[i], img.pixels[i] / 255.0, 1.0 / 255.0);
}

TEST(Preprocess, PureRedToLuminance) {
  Image img{5, 5, 3, {}};
  for (int i = 0; i < 25; ++i) img.pixels.insert(img.pixels.end(), {255, 0, 0});
  const Tensor t = preprocess(img, {3, 3, true});
  for (float v : t.data()) EXPECT_NEAR(v, 0.299f, 1e-6f);
}

TEST(Preprocess, HalvingMatchesBoxAverage) {
  Image img{96, 96, 1, {}};
  Rng rng(3);
  for (std::size_t y = 0; y < 96; ++y)
    for (std::size_t x = 0; x < 96; ++x) img.pixels.push_back((x + y) % 2 ? 255 : 0);
  const Tensor board = preprocess(img, {48, 48, true});
  for (float v : board.data()) EXPECT_NEAR(v, 0.5f, 1e-6f);

  for (auto& p : img.pixels) p = static_cast<std::uint8_t>(rng.uniform_index(256));
  const Tensor t = preprocess(img, {48, 48, true});
  for (std::size_t y = 0; y < 48; ++y)
    for (std::size_t x = 0; x < 48; ++x) {
      const double box = (img.at(2 * y, 2 * x, 0) + img.at(2 * y, 2 * x + 1, 0) + img.at(2 * y + 1, 2 * x, 0) +
                          img.at(2 * y + 1, 2 * x + 1, 0)) / (4.0 * 255.0);
      EXPECT_NEAR(t[y * 48 + x], box, 1e-6);
    }
}

TEST(Preprocess, ColourModeReplicatesGray) {
  const Tensor t = preprocess(gray(2, 2, 51), {2, 2, false});
  EXPECT_EQ(t.shape(), (Shape{2, 2, 3}));
  for (float v : t.data()) EXPECT_NEAR(v, 0.2f, 1e-6f);
}

TEST(SplitBySubject, ZeroFractionKeepsEverythingInTrain) {
  auto [train, test] = split_by_subject(many_subjects(10), 0.0, 1);
  EXPECT_EQ(train.size(), 20u);
  EXPECT_TRUE(test.empty());
}

TEST(SplitBySubject, ThirtyPercentOf123Subjects) {
  auto [train, test] = split_by_subject(many_subjects(123), 0.3, 1);
  EXPECT_EQ(subjects(train).size(), 86u);
  EXPECT_EQ(subjects(test).size(), 37u);
}

TEST(SplitBySubject, SubjectsNeverShared) {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    auto [train, test] = split_by_subject(many_subjects(40), 0.25, seed);
    for (const auto& s : subjects(test)) EXPECT_EQ(subjects(train).count(s), 0u);
    EXPECT_EQ(train.size() + test.size(), 80u);
  }
}

TEST(SplitBySubject, SeedChangesTheSplit) {
  auto a = split_by_subject(many_subjects(40), 0.25, 1).second;
  auto b = split_by_subject(many_subjects(40), 0.25, 2).second;
  EXPECT_NE(subjects(a), subjects(b));
}

TEST(Synthetic, ExactGroupQuotas) {
  SyntheticSpec s;
  s.n_samples = 1000;
  s.image_size = 8;
  s.attributes = {parse_attribute_spec("g", "a:0.7,b:0.3")};
  const GroupedDataset d = generate_synthetic(s);
  EXPECT_EQ(d.group_counts("g"), (std::map<std::string, std::size_t>{{"a", 700}, {"b", 300}}));
}

TEST(Synthetic, ProportionsMustSumToOne) {
  SyntheticSpec s;
  s.attributes = {parse_attribute_spec("g", "m:0.7,f:0.4")};
  EXPECT_THROW(generate_synthetic(s), ParameterError);
  EXPECT_THROW(parse_attribute_spec("g", "m:x"), ParameterError);
}

TEST(Synthetic, NoiselessSamplesMatchNearestTemplate) {
  SyntheticSpec s;
  s.n_samples = 300;
  s.n_classes = 4;
  s.image_size = 16;
  s.noise = 0.0;
  s.attributes = {parse_attribute_spec("g", "a:0.5,b:0.5")};
  const GroupedDataset d = generate_synthetic(s);
  std::vector<Tensor> templates;
  for (std::size_t c = 0; c < 4; ++c) templates.push_back(class_template(c, 4, 16));
  for (const auto& x : d.samples) {
    std::size_t best = 0;
    double best_d = std::numeric_limits<double>::infinity();
    for (std::size_t c = 0; c < 4; ++c) {
      double dist = 0.0;
      for (std::size_t i = 0; i < x.image.size(); ++i) dist += std::pow(x.image[i] - templates[c][i], 2);
      if (dist < best_d) {
        best_d = dist;
        best = c;
      }
    }
    EXPECT_EQ(best, x.label);
  }
}

TEST(Synthetic, QuotaCountsLargestRemainder) {
  const std::vector<double> p{1.0 / 3, 1.0 / 3, 1.0 / 3};
  const auto q = quota_counts(p, 100);
  EXPECT_EQ(q[0] + q[1] + q[2], 100u);
  for (auto c : q) EXPECT_TRUE(c == 33 || c == 34);
}

TEST(Synthetic, WriteAndReloadIsIdentical) {
  SyntheticSpec s;
  s.n_samples = 30;
  s.n_classes = 3;
  s.image_size = 12;
  s.samples_per_subject = 3;
  s.attributes = {parse_attribute_spec("gender", "female:0.7,male:0.3:0.1"), parse_attribute_spec("age", "young:0.5,old:0.5")};
  s.seed = 4;
  const GroupedDataset d = generate_synthetic(s);
  const fs::path dir = fresh_dir("synth");
  write_dataset(d, dir);
  ManifestOptions o;
  o.preprocess = {12, 12, true};
  o.class_names = d.class_names;
  const GroupedDataset a = load_manifest(dir / "manifest.csv", dir, o);
  const GroupedDataset b = load_manifest(dir / "manifest.csv", dir, o);
  ASSERT_EQ(a.size(), d.size());
  for (std::size_t i = 0; i < d.size(); ++i) {
    EXPECT_EQ(a.samples[i].image, d.samples[i].image) << i;
    EXPECT_EQ(a.samples[i].label, d.samples[i].label);
    EXPECT_EQ(a.samples[i].attributes, d.samples[i].attributes);
    EXPECT_EQ(a.samples[i].image, b.samples[i].image);
  }
}

TEST(Synthetic, SameSeedSameData) {
  SyntheticSpec s;
  s.n_samples = 50;
  s.image_size = 10;
  s.attributes = {parse_attribute_spec("g", "a:0.6,b:0.4:0.2")};
  s.seed = 9;
  const GroupedDataset a = generate_synthetic(s), b = generate_synthetic(s);
  for (std::size_t i = 0; i < a.size(); ++i) EXPECT_EQ(a.samples[i].image, b.samples[i].image);
}
