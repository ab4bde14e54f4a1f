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

#include <vector>

#include "compfair/compfair.hpp"

using namespace compfair;
using nlohmann::json;

namespace {

json history(std::vector<CompressionStep> steps) {
  json h = json::array();
  for (const auto& s : steps) h.push_back(s.to_json());
  return h;
}

LoadedModel baseline(std::uint64_t seed) {
  return from_model_file(to_model_file(ModelBuilder("p", {8, 8, 1}).conv2d(4, 3).activation().flatten().dense(3).softmax().build(seed)));
}

PipelineOptions no_finetune() {
  PipelineOptions o;
  o.finetune = false;
  return o;
}

}  // namespace

TEST(CompressionPlan, QuantizeMustBeLast) {
  EXPECT_THROW((CompressionPlan{{CompressionStep::quantize(), CompressionStep::prune(0.5)}}.validate()), PlanError);
  EXPECT_NO_THROW((CompressionPlan{{CompressionStep::prune(0.5), CompressionStep::quantize()}}.validate()));
}

TEST(CompressionPlan, EmptyPlanAndQuantizedInputRejected) {
  EXPECT_THROW(CompressionPlan{}.validate(), PlanError);
  EXPECT_THROW((CompressionPlan{{CompressionStep::prune(0.5)}}.validate(true)), PlanError);
}

TEST(CompressionStep, TagsAndJsonRoundTrip) {
  EXPECT_EQ(CompressionStep::prune(0.5).tag(), "prune50");
  EXPECT_EQ(CompressionStep::cluster(16).tag(), "cluster16");
  EXPECT_EQ(CompressionStep::quantize().tag(), "quantize");
  for (const auto& s : {CompressionStep::prune(0.3), CompressionStep::cluster(8), CompressionStep::quantize()}) {
    const CompressionStep back = CompressionStep::from_json(s.to_json());
    EXPECT_EQ(back.kind, s.kind);
    EXPECT_EQ(back.sparsity, s.sparsity);
    EXPECT_EQ(back.clusters, s.clusters);
  }
  EXPECT_THROW(CompressionStep::from_json(json{{"step", "distill"}}), FormatError);
}

TEST(ModelLabel, RowLabels) {
  EXPECT_EQ(model_label(json::array()), "baseline");
  EXPECT_EQ(model_label(history({CompressionStep::quantize()})), "quantised");
  EXPECT_EQ(model_label(history({CompressionStep::prune(0.5)})), "pruned (50%)");
  EXPECT_EQ(model_label(history({CompressionStep::cluster(16)})), "clustered (16 cl.)");
  EXPECT_EQ(model_label(history({CompressionStep::prune(0.5), CompressionStep::quantize()})), "pruned (50%) + quant.");
  EXPECT_EQ(model_label(history({CompressionStep::cluster(16), CompressionStep::quantize()})), "clust. (16 cl.) + quant.");
}

TEST(RunPlan, PruneThenQuantizeKeepsZeros) {
  const LoadedModel in = baseline(1);
  const auto stages = run_plan(in, {{CompressionStep::prune(0.5), CompressionStep::quantize()}}, nullptr, nullptr, no_finetune());
  ASSERT_EQ(stages.size(), 2u);
  const LoadedModel pruned = from_model_file(stages[0].file);
  const LoadedModel quant = from_model_file(stages[1].file);
  EXPECT_TRUE(quant.is_quantized());
  EXPECT_EQ(model_label(quant.compression), "pruned (50%) + quant.");
  const Tensor& a = parameter(pruned.model, "dense/kernel");
  const Tensor& b = parameter(quant.model, "dense/kernel");
  std::size_t zeros = 0;
  for (std::size_t i = 0; i < a.size(); ++i)
    if (a[i] == 0.0f) {
      ++zeros;
      EXPECT_EQ(b[i], 0.0f);
    }
  EXPECT_GT(zeros, 0u);
}

TEST(RunPlan, ClusterThenQuantizeShrinksFile) {
  const LoadedModel in = baseline(2);
  const auto stages = run_plan(in, {{CompressionStep::cluster(16), CompressionStep::quantize()}}, nullptr, nullptr, no_finetune());
  ASSERT_EQ(stages.size(), 2u);
  EXPECT_TRUE(from_model_file(stages[0].file).is_clustered());
  EXPECT_LT(deflated_size(encode(stages[1].file)), deflated_size(encode(to_model_file(in.model))));
}

TEST(RunPlan, QuantizedInputRejected) {
  const LoadedModel q = from_model_file(to_model_file(quantize_model(baseline(3).model), history({CompressionStep::quantize()})));
  EXPECT_THROW(run_plan(q, {{CompressionStep::prune(0.5)}}, nullptr, nullptr, no_finetune()), PlanError);
}

TEST(RunPlan, FinetuneNeedsData) {
  EXPECT_THROW(run_plan(baseline(4), {{CompressionStep::prune(0.5)}}, nullptr, nullptr, PipelineOptions{}), ParameterError);
}

TEST(RunPlan, SameSeedSameBytes) {
  SyntheticSpec s;
  s.n_samples = 60;
  s.n_classes = 3;
  s.image_size = 8;
  s.samples_per_subject = 3;
  s.attributes = {parse_attribute_spec("g", "a:0.5,b:0.5")};
  const GroupedDataset ds = generate_synthetic(s);
  auto [train, val] = split_by_subject(ds, 0.25, 1);
  PipelineOptions o;
  o.finetune_config.epochs = 1;
  o.finetune_config.batch_size = 16;
  o.seed = 5;
  const CompressionPlan plan{{CompressionStep::cluster(8), CompressionStep::quantize()}};
  const auto a = run_plan(baseline(5), plan, &train, &val, o);
  const auto b = run_plan(baseline(5), plan, &train, &val, o);
  for (std::size_t i = 0; i < a.size(); ++i) EXPECT_EQ(encode(a[i].file), encode(b[i].file));
  ASSERT_TRUE(a[0].finetune_log.has_value());
  EXPECT_EQ(a[0].finetune_log->epochs.size(), 1u);
}
