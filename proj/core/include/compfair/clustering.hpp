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

#ifndef COMPFAIR_CLUSTERING_HPP_
#define COMPFAIR_CLUSTERING_HPP_

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "compfair/dataset.hpp"
#include "compfair/network.hpp"
#include "compfair/trainer.hpp"

namespace compfair {

inline constexpr std::size_t kMaxClusters = 256;

enum class CentroidInit { Linear, KMeansPlusPlus };

enum class ClusterScope {
  Kernels,    // Conv2D and Dense kernels (the prunable set)
  Trainable,  // every trainable tensor, biases and BatchNorm scale/shift included
};

struct ClusterOptions {
  CentroidInit init = CentroidInit::Linear;
  ClusterScope scope = ClusterScope::Kernels;
  std::size_t max_iterations = 50;
  std::uint64_t seed = 0;  // k-means++ only
};

struct KMeansResult {
  std::vector<float> centroids;
  std::vector<std::uint8_t> indices;
  std::size_t iterations = 0;
};

/// Lloyd's algorithm in one dimension. Stops when assignments are stable or
/// after options.max_iterations. A value equidistant from two centroids goes
/// to the smaller one. When `values` has at most n distinct entries the
/// centroids are exactly those entries (so fewer than n may be returned).
KMeansResult kmeans_1d(std::span<const float> values, std::size_t n_clusters,
                       const ClusterOptions& options = {});

/// Within-cluster sum of squared distances.
double within_cluster_sse(std::span<const float> values, std::span<const float> centroids,
                          std::span<const std::uint8_t> indices);

/// Codebook and pull indices for one tensor.
struct TensorClusters {
  std::string name;
  Shape shape;
  std::vector<float> centroids;
  std::vector<std::uint8_t> indices;
};

struct ClusteredWeights {
  std::vector<TensorClusters> tensors;

  const TensorClusters* find(std::string_view name) const;
};

Tensor reconstruct(const TensorClusters& clusters);

struct ClusteredModel {
  Model model;  // weights already replaced by their centroids
  ClusteredWeights clusters;
};

/// Throws ParameterError unless 2 <= n_clusters <= 256.
ClusteredModel cluster(const Model& model, std::size_t n_clusters, const ClusterOptions& options = {});

/// Throws IntegrityError unless every clustered tensor of `model` equals
/// the reconstruction of its codebook.
void check_clusters(const Model& model, const ClusteredWeights& clusters);

/// Per-centroid sum of the gradients of the weights assigned to it.
std::vector<float> centroid_gradients(const TensorClusters& clusters, std::span<const float> weight_grads);

/// Hooks that give every weight its centroid's summed gradient, so weights
/// sharing a centroid receive identical optimizer updates.
TrainHooks sharing_hooks(const ClusteredWeights& clusters);

/// Weight-shared fine-tuning with frozen assignments. Runs `config` as
/// given; callers normally set config.epochs = kFinetuneEpochs.
ClusteredModel finetune_clustered(const ClusteredModel& clustered, const GroupedDataset& train,
                                  const GroupedDataset& val, const TrainConfig& config,
                                  TrainLog* log = nullptr);

}  // namespace compfair

#endif  // COMPFAIR_CLUSTERING_HPP_
