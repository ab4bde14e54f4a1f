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

#ifndef COMPFAIR_PRUNING_HPP_
#define COMPFAIR_PRUNING_HPP_

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "compfair/dataset.hpp"
#include "compfair/network.hpp"
#include "compfair/trainer.hpp"

namespace compfair {

enum class PruneScope {
  Global,    // one magnitude ranking over every prunable tensor
  PerLayer,  // each tensor pruned to the target sparsity on its own
};

/// Binary keep-masks for the prunable tensors, in parameters() order.
struct PruneMask {
  std::vector<std::string> names;
  std::vector<std::vector<std::uint8_t>> keep;  // 1 = kept, 0 = pruned

  std::size_t total() const;
  std::size_t pruned() const;
  double sparsity() const;
};

struct PrunedModel {
  Model model;
  PruneMask mask;
};

/// floor(sparsity * n), robust to products like 0.6 * 10000 landing just
/// below an integer.
std::size_t prune_count(double sparsity, std::size_t n);

/// Zeroes the floor(s * N) smallest-magnitude prunable weights. Ties go to
/// the earlier tensor, then the lower flat index. Throws ParameterError for
/// s outside [0, 1) or a model without prunable tensors.
PrunedModel prune(const Model& model, double sparsity, PruneScope scope = PruneScope::Global);

/// Throws IntegrityError unless the mask covers exactly the prunable
/// tensors of `model` and every pruned position holds 0.
void check_mask(const Model& model, const PruneMask& mask);

/// Hooks that zero masked gradients and re-zero masked weights every step.
TrainHooks mask_hooks(const PruneMask& mask);

/// Constant-sparsity fine-tuning. Runs `config` as given; callers normally
/// set config.epochs = kFinetuneEpochs.
FitResult finetune_pruned(const Model& model, const PruneMask& mask, const GroupedDataset& train,
                          const GroupedDataset& val, const TrainConfig& config);

}  // namespace compfair

#endif  // COMPFAIR_PRUNING_HPP_
