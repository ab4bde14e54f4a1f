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

#ifndef COMPFAIR_TRAINER_HPP_
#define COMPFAIR_TRAINER_HPP_

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "compfair/dataset.hpp"
#include "compfair/network.hpp"
#include "compfair/rng.hpp"
#include "compfair/tensor.hpp"

namespace compfair {

struct TrainConfig {
  std::size_t epochs = 20;
  std::size_t batch_size = 64;
  float learning_rate = 1e-3f;
  float adam_beta1 = 0.9f;
  float adam_beta2 = 0.999f;
  float adam_epsilon = 1e-7f;
  bool augment = true;
  std::uint64_t seed = 0;

  /// Throws ParameterError.
  void validate() const;
};

/// Epochs used when fine-tuning after pruning or clustering.
inline constexpr std::size_t kFinetuneEpochs = 2;

struct EpochRecord {
  std::size_t epoch = 0;  // 1-based
  double train_accuracy = 0.0;
  double train_loss = 0.0;
  double val_accuracy = 0.0;
  double val_loss = 0.0;
};

struct TrainLog {
  std::vector<EpochRecord> epochs;
  std::size_t best_epoch = 0;  // 1-based; 0 when empty

  /// Columns: epoch,train_acc,train_loss,val_acc,val_loss
  std::string to_csv() const;
  void write_csv(const std::filesystem::path& path) const;
};

/// 1-based index of the first maximum; 0 for an empty sequence.
std::size_t best_epoch_of(std::span<const double> val_accuracies);

/// Probabilities are clamped to [1e-7, 1] before the log.
inline constexpr float kProbabilityFloor = 1e-7f;

/// Mean over the batch of -sum(labels * log(clamp(probs))).
double cross_entropy(const Tensor& probs, const Tensor& labels);
/// d cross_entropy / d probs (zero where the clamp is active).
Tensor cross_entropy_gradient(const Tensor& probs, const Tensor& labels);

/// Train-mode forward plus backward; gradients of the mean cross-entropy
/// aligned with parameters(model). `loss` receives the batch loss if given.
std::vector<Tensor> backward(const Model& model, const Tensor& batch, const Tensor& labels,
                             const Rng* dropout_rng = nullptr, double* loss = nullptr);

struct AdamState {
  std::vector<Tensor> m;  // aligned with parameters(model)
  std::vector<Tensor> v;
  std::uint64_t step = 0;
};

AdamState make_adam_state(const Model& model);

/// One bias-corrected Adam update on raw spans; `step` is the 1-based
/// timestep after increment.
void adam_update(std::span<float> param, std::span<const float> grad, std::span<float> m,
                 std::span<float> v, std::uint64_t step, const TrainConfig& config);

/// Increments the timestep and updates every trainable tensor.
void adam_step(Model& model, const std::vector<Tensor>& grads, AdamState& state,
               const TrainConfig& config);

struct AugmentParams {
  bool flip = false;
  double angle_degrees = 0.0;
};

inline constexpr double kMaxRotationDegrees = 10.0;

/// Flip with p = 0.5; angle ~ Uniform(-10, 10) degrees.
AugmentParams draw_augment_params(Rng& rng);

/// Horizontal flip, then rotation about the image centre with
/// nearest-neighbour sampling and zero fill. image is [H, W, C].
Tensor augment_image(const Tensor& image, const AugmentParams& params);

/// Independently augments every image of an NHWC batch.
Tensor augment(const Tensor& batch, Rng& rng);

/// Optional callbacks used by constrained fine-tuning.
struct TrainHooks {
  /// Runs after backward, before the optimizer step.
  std::function<void(const Model&, std::vector<Tensor>&)> on_gradients;
  /// Runs after each optimizer step.
  std::function<void(Model&)> after_step;
};

struct FitResult {
  Model model;  // weights from the best validation epoch
  TrainLog log;
};

struct EvalResult {
  double accuracy = 0.0;
  double loss = 0.0;
};

/// Inference-mode accuracy (argmax, ties to the lowest class) and loss.
EvalResult evaluate_model(const Model& model, const GroupedDataset& dataset,
                          std::size_t batch_size = 128);

/// Adam training on categorical cross-entropy, keeping the weights of the
/// epoch with the highest validation accuracy (earliest on ties).
/// Throws TrainingError on a non-finite loss.
FitResult fit(Model model, const GroupedDataset& train, const GroupedDataset& val,
              const TrainConfig& config, const TrainHooks& hooks = {});

}  // namespace compfair

#endif  // COMPFAIR_TRAINER_HPP_
