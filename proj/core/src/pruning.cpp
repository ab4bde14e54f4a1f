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

#include "compfair/pruning.hpp"

#include <algorithm>
#include <cmath>

#include "compfair/error.hpp"

namespace compfair {

std::size_t PruneMask::total() const {
  std::size_t n = 0;
  for (const auto& k : keep) n += k.size();
  return n;
}

std::size_t PruneMask::pruned() const {
  std::size_t n = 0;
  for (const auto& k : keep) n += static_cast<std::size_t>(std::count(k.begin(), k.end(), 0));
  return n;
}

double PruneMask::sparsity() const {
  const std::size_t n = total();
  return n ? static_cast<double>(pruned()) / static_cast<double>(n) : 0.0;
}

std::size_t prune_count(double sparsity, std::size_t n) {
  const double exact = sparsity * static_cast<double>(n);
  return std::min(n, static_cast<std::size_t>(std::floor(exact + 1e-6)));
}

namespace {

struct Slot {
  std::size_t tensor;
  std::size_t index;
};

// Marks the k smallest |w| among `slots` as pruned, ties in slot order.
void select_smallest(const std::vector<const Tensor*>& tensors, const std::vector<Slot>& slots,
                     std::size_t k, PruneMask& mask) {
  if (k == 0) return;
  std::vector<float> mags(slots.size());
  for (std::size_t i = 0; i < slots.size(); ++i)
    mags[i] = std::fabs((*tensors[slots[i].tensor])[slots[i].index]);
  std::vector<float> work = mags;
  std::nth_element(work.begin(), work.begin() + static_cast<std::ptrdiff_t>(k - 1), work.end());
  const float threshold = work[k - 1];
  std::size_t below = 0;
  for (float m : mags) below += m < threshold;
  std::size_t ties = k - below;
  for (std::size_t i = 0; i < slots.size(); ++i) {
    const bool take = mags[i] < threshold || (mags[i] == threshold && ties > 0 && ties--);
    if (take) mask.keep[slots[i].tensor][slots[i].index] = 0;
  }
}

}  // namespace

PrunedModel prune(const Model& model, double sparsity, PruneScope scope) {
  if (!(sparsity >= 0.0 && sparsity < 1.0))
    throw ParameterError("sparsity must be in [0, 1), got " + std::to_string(sparsity));
  PrunedModel out{model, {}};
  std::vector<const Tensor*> tensors;
  for (const auto& p : parameters(model)) {
    if (!p.prunable) continue;
    out.mask.names.emplace_back(p.name);
    out.mask.keep.emplace_back(p.tensor->size(), 1);
    tensors.push_back(p.tensor);
  }
  if (tensors.empty()) throw ParameterError("model has no prunable tensors");

  if (scope == PruneScope::Global) {
    std::vector<Slot> slots;
    for (std::size_t t = 0; t < tensors.size(); ++t)
      for (std::size_t i = 0; i < tensors[t]->size(); ++i) slots.push_back({t, i});
    select_smallest(tensors, slots, prune_count(sparsity, slots.size()), out.mask);
  } else {
    for (std::size_t t = 0; t < tensors.size(); ++t) {
      std::vector<Slot> slots;
      for (std::size_t i = 0; i < tensors[t]->size(); ++i) slots.push_back({t, i});
      select_smallest(tensors, slots, prune_count(sparsity, slots.size()), out.mask);
    }
  }

  for (std::size_t t = 0; t < out.mask.names.size(); ++t) {
    Tensor& w = parameter(out.model, out.mask.names[t]);
    for (std::size_t i = 0; i < w.size(); ++i)
      if (!out.mask.keep[t][i]) w[i] = 0.0f;
  }
  return out;
}

void check_mask(const Model& model, const PruneMask& mask) {
  std::size_t t = 0;
  for (const auto& p : parameters(model)) {
    if (!p.prunable) continue;
    if (t >= mask.names.size() || mask.names[t] != p.name)
      throw IntegrityError("prune mask does not list prunable tensor " + std::string(p.name));
    if (mask.keep[t].size() != p.tensor->size())
      throw IntegrityError("prune mask for " + std::string(p.name) + " has " +
                           std::to_string(mask.keep[t].size()) + " entries, tensor has " +
                           std::to_string(p.tensor->size()));
    for (std::size_t i = 0; i < p.tensor->size(); ++i)
      if (!mask.keep[t][i] && (*p.tensor)[i] != 0.0f)
        throw IntegrityError("pruned position " + std::to_string(i) + " of " + std::string(p.name) +
                             " is non-zero");
    ++t;
  }
  if (t != mask.names.size() || mask.keep.size() != mask.names.size())
    throw IntegrityError("prune mask has entries for tensors the model does not have");
}

TrainHooks mask_hooks(const PruneMask& mask) {
  TrainHooks hooks;
  hooks.on_gradients = [&mask](const Model& model, std::vector<Tensor>& grads) {
    const auto params = parameters(model);
    std::size_t t = 0;
    for (std::size_t p = 0; p < params.size(); ++p) {
      if (!params[p].prunable) continue;
      for (std::size_t i = 0; i < grads[p].size(); ++i)
        if (!mask.keep[t][i]) grads[p][i] = 0.0f;
      ++t;
    }
  };
  hooks.after_step = [&mask](Model& model) {
    for (std::size_t t = 0; t < mask.names.size(); ++t) {
      Tensor& w = parameter(model, mask.names[t]);
      for (std::size_t i = 0; i < w.size(); ++i)
        if (!mask.keep[t][i]) w[i] = 0.0f;
    }
  };
  return hooks;
}

FitResult finetune_pruned(const Model& model, const PruneMask& mask, const GroupedDataset& train,
                          const GroupedDataset& val, const TrainConfig& config) {
  check_mask(model, mask);
  return fit(model, train, val, config, mask_hooks(mask));
}

}  // namespace compfair
