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

#ifndef COMPFAIR_PIPELINE_HPP_
#define COMPFAIR_PIPELINE_HPP_

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "compfair/clustering.hpp"
#include "compfair/dataset.hpp"
#include "compfair/model_store.hpp"
#include "compfair/pruning.hpp"
#include "compfair/trainer.hpp"

namespace compfair {

enum class StepKind { Prune, Cluster, Quantize };

struct CompressionStep {
  StepKind kind = StepKind::Quantize;
  double sparsity = 0.0;     // Prune, fraction in [0, 1)
  std::size_t clusters = 0;  // Cluster

  static CompressionStep prune(double sparsity);
  static CompressionStep cluster(std::size_t clusters);
  static CompressionStep quantize();

  /// File-name tag: "prune50", "cluster16", "quantize".
  std::string tag() const;
  nlohmann::json to_json() const;
  static CompressionStep from_json(const nlohmann::json& j);
};

struct CompressionPlan {
  std::vector<CompressionStep> steps;

  /// Throws PlanError for an empty plan, a step after quantize, or any step
  /// on an already quantized input; ParameterError for bad step values.
  void validate(bool input_quantized = false) const;
};

/// Table row label for a compression history: "baseline", "quantised",
/// "pruned (50%)", "clustered (16 cl.)", "pruned (50%) + quant.",
/// "clust. (16 cl.) + quant.".
std::string model_label(const nlohmann::json& history);

/// True when the history ends with a quantize step.
bool history_quantized(const nlohmann::json& history);

struct PipelineOptions {
  bool finetune = true;
  TrainConfig finetune_config;  // epochs normally kFinetuneEpochs
  PruneScope prune_scope = PruneScope::Global;
  ClusterOptions cluster_options;
  std::uint64_t seed = 0;  // split per stage for fine-tuning and k-means++
};

struct Stage {
  CompressionStep step;
  nlohmann::json history;  // full history up to and including this step
  ModelFile file;
  std::optional<TrainLog> finetune_log;
};

/// Applies the plan step by step. Prune and cluster steps are followed by
/// fine-tuning when options.finetune is set (train/val required then);
/// quantize never fine-tunes.
std::vector<Stage> run_plan(const LoadedModel& input, const CompressionPlan& plan,
                            const GroupedDataset* train, const GroupedDataset* val,
                            const PipelineOptions& options);

}  // namespace compfair

#endif  // COMPFAIR_PIPELINE_HPP_
