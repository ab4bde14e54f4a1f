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

#include "compfair/pipeline.hpp"

#include <cmath>

#include "compfair/csv.hpp"
#include "compfair/error.hpp"
#include "compfair/quantization.hpp"
#include "compfair/rng.hpp"

namespace compfair {

CompressionStep CompressionStep::prune(double sparsity) { return {StepKind::Prune, sparsity, 0}; }
CompressionStep CompressionStep::cluster(std::size_t clusters) { return {StepKind::Cluster, 0.0, clusters}; }
CompressionStep CompressionStep::quantize() { return {StepKind::Quantize, 0.0, 0}; }

namespace {

std::string percent_text(double sparsity) {
  const double pct = sparsity * 100.0;
  if (std::fabs(pct - std::round(pct)) < 1e-9) return std::to_string(static_cast<long>(std::lround(pct)));
  return csv::format_fixed(pct, 2);
}

}  // namespace

std::string CompressionStep::tag() const {
  switch (kind) {
    case StepKind::Prune: return "prune" + percent_text(sparsity);
    case StepKind::Cluster: return "cluster" + std::to_string(clusters);
    case StepKind::Quantize: break;
  }
  return "quantize";
}

nlohmann::json CompressionStep::to_json() const {
  switch (kind) {
    case StepKind::Prune: return {{"step", "prune"}, {"sparsity", sparsity}};
    case StepKind::Cluster: return {{"step", "cluster"}, {"clusters", clusters}};
    case StepKind::Quantize: break;
  }
  return {{"step", "quantize"}};
}

CompressionStep CompressionStep::from_json(const nlohmann::json& j) {
  try {
    const std::string s = j.at("step").get<std::string>();
    if (s == "prune") return prune(j.at("sparsity").get<double>());
    if (s == "cluster") return cluster(j.at("clusters").get<std::size_t>());
    if (s == "quantize") return quantize();
    throw FormatError("unknown compression step '" + s + "'");
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("bad compression step: ") + e.what());
  }
}

void CompressionPlan::validate(bool input_quantized) const {
  if (steps.empty()) throw PlanError("compression plan has no steps");
  if (input_quantized) throw PlanError("input model is already quantized; quantized models are terminal");
  for (std::size_t i = 0; i < steps.size(); ++i) {
    const auto& s = steps[i];
    if (s.kind == StepKind::Quantize && i + 1 != steps.size())
      throw PlanError("quantize must be the last step (found '" + steps[i + 1].tag() + "' after it)");
    if (s.kind == StepKind::Prune && !(s.sparsity >= 0.0 && s.sparsity < 1.0))
      throw ParameterError("sparsity must be in [0, 100) percent");
    if (s.kind == StepKind::Cluster && (s.clusters < 2 || s.clusters > kMaxClusters))
      throw ParameterError("cluster count must be in [2, 256]");
  }
}

bool history_quantized(const nlohmann::json& history) {
  return !history.empty() && history.back().value("step", "") == "quantize";
}

std::string model_label(const nlohmann::json& history) {
  if (history.empty()) return "baseline";
  std::vector<CompressionStep> steps;
  for (const auto& j : history) steps.push_back(CompressionStep::from_json(j));
  const bool quant_tail = steps.back().kind == StepKind::Quantize;
  if (quant_tail && steps.size() == 1) return "quantised";
  std::string out;
  for (std::size_t i = 0; i < steps.size(); ++i) {
    const auto& s = steps[i];
    if (s.kind == StepKind::Quantize) break;
    if (!out.empty()) out += " + ";
    if (s.kind == StepKind::Prune) out += "pruned (" + percent_text(s.sparsity) + "%)";
    else out += std::string(quant_tail ? "clust." : "clustered") + " (" + std::to_string(s.clusters) + " cl.)";
  }
  if (quant_tail) out += " + quant.";
  return out;
}

std::vector<Stage> run_plan(const LoadedModel& input, const CompressionPlan& plan, const GroupedDataset* train,
                            const GroupedDataset* val, const PipelineOptions& options) {
  plan.validate(history_quantized(input.compression));
  if (options.finetune && (!train || !val))
    throw ParameterError("fine-tuning needs training and validation data");

  Model current = input.model;
  std::optional<ClusteredWeights> clusters;
  if (input.is_clustered()) clusters = input.clusters;
  nlohmann::json history = input.compression;
  const Rng root = Rng(options.seed).split("compress");

  std::vector<Stage> stages;
  for (std::size_t i = 0; i < plan.steps.size(); ++i) {
    const CompressionStep& step = plan.steps[i];
    const Rng stage_rng = root.split(i + 1);
    TrainConfig ft = options.finetune_config;
    ft.seed = stage_rng.split("finetune").key();
    history.push_back(step.to_json());
    Stage stage{step, history, {}, std::nullopt};

    switch (step.kind) {
      case StepKind::Prune: {
        PrunedModel pruned = prune(current, step.sparsity, options.prune_scope);
        clusters.reset();
        if (options.finetune) {
          FitResult r = finetune_pruned(pruned.model, pruned.mask, *train, *val, ft);
          pruned.model = std::move(r.model);
          stage.finetune_log = std::move(r.log);
        }
        current = std::move(pruned.model);
        stage.file = to_model_file(current, history);
        break;
      }
      case StepKind::Cluster: {
        ClusterOptions co = options.cluster_options;
        co.seed = stage_rng.split("kmeans").key();
        ClusteredModel cm = cluster(current, step.clusters, co);
        if (options.finetune) {
          TrainLog log;
          cm = finetune_clustered(cm, *train, *val, ft, &log);
          stage.finetune_log = std::move(log);
        }
        current = cm.model;
        clusters = cm.clusters;
        stage.file = to_model_file(cm, history);
        break;
      }
      case StepKind::Quantize: {
        const QuantizedModel q = quantize_model(current);
        stage.file = to_model_file(q, history);
        break;
      }
    }
    stages.push_back(std::move(stage));
  }
  return stages;
}

}  // namespace compfair
