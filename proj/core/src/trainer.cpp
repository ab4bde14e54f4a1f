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

#include "compfair/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>
#include <numeric>
#include <sstream>

#include "compfair/error.hpp"

namespace compfair {

void TrainConfig::validate() const {
  if (epochs < 1) throw ParameterError("epochs must be at least 1");
  if (batch_size < 1) throw ParameterError("batch_size must be at least 1");
  if (!(learning_rate > 0.0f)) throw ParameterError("learning_rate must be positive");
  if (!(adam_beta1 > 0.0f && adam_beta1 < 1.0f)) throw ParameterError("adam_beta1 must be in (0, 1)");
  if (!(adam_beta2 > 0.0f && adam_beta2 < 1.0f)) throw ParameterError("adam_beta2 must be in (0, 1)");
  if (!(adam_epsilon > 0.0f)) throw ParameterError("adam_epsilon must be positive");
}

std::string TrainLog::to_csv() const {
  std::ostringstream out;
  out << "epoch,train_acc,train_loss,val_acc,val_loss\n";
  char line[160];
  for (const auto& r : epochs) {
    std::snprintf(line, sizeof line, "%zu,%.6f,%.6f,%.6f,%.6f\n", r.epoch, r.train_accuracy,
                  r.train_loss, r.val_accuracy, r.val_loss);
    out << line;
  }
  return out.str();
}

void TrainLog::write_csv(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out << to_csv();
  if (!out) throw IoError("write failed for " + path.string());
}

std::size_t best_epoch_of(std::span<const double> val_accuracies) {
  if (val_accuracies.empty()) return 0;
  std::size_t best = 0;
  for (std::size_t i = 1; i < val_accuracies.size(); ++i)
    if (val_accuracies[i] > val_accuracies[best]) best = i;
  return best + 1;
}

namespace {

void check_same_shape(const Tensor& probs, const Tensor& labels) {
  if (probs.rank() != 2 || probs.shape() != labels.shape())
    throw DimensionError("cross-entropy shape mismatch: probs " + to_string(probs.shape()) +
                         ", labels " + to_string(labels.shape()));
}

}  // namespace

double cross_entropy(const Tensor& probs, const Tensor& labels) {
  check_same_shape(probs, labels);
  const std::size_t n = probs.dim(0), k = probs.dim(1);
  double total = 0.0;
  for (std::size_t r = 0; r < n; ++r)
    for (std::size_t j = 0; j < k; ++j) {
      const float y = labels[r * k + j];
      if (y == 0.0f) continue;
      const double p = std::clamp(probs[r * k + j], kProbabilityFloor, 1.0f);
      total -= y * std::log(p);
    }
  return total / static_cast<double>(n);
}

Tensor cross_entropy_gradient(const Tensor& probs, const Tensor& labels) {
  check_same_shape(probs, labels);
  const std::size_t n = probs.dim(0);
  Tensor g(probs.shape());
  for (std::size_t i = 0; i < probs.size(); ++i) {
    const float p = probs[i];
    if (labels[i] == 0.0f || p < kProbabilityFloor || p > 1.0f) continue;
    g[i] = -labels[i] / (p * static_cast<float>(n));
  }
  return g;
}

namespace {

struct StepResult {
  std::vector<Tensor> grads;
  ForwardTrace trace;
  Tensor probs;
  double loss = 0.0;
};

StepResult train_step(const Model& model, const Tensor& batch, const Tensor& labels,
                      const Rng* dropout_rng) {
  StepResult r;
  r.probs = forward(model, batch, Mode::Train, dropout_rng, &r.trace);
  r.loss = cross_entropy(r.probs, labels);
  r.grads = backward_from_output(model, r.trace, cross_entropy_gradient(r.probs, labels));
  return r;
}

}  // namespace

std::vector<Tensor> backward(const Model& model, const Tensor& batch, const Tensor& labels,
                             const Rng* dropout_rng, double* loss) {
  StepResult r = train_step(model, batch, labels, dropout_rng);
  if (loss) *loss = r.loss;
  return std::move(r.grads);
}

AdamState make_adam_state(const Model& model) {
  AdamState s;
  for (const auto& p : parameters(model)) {
    s.m.emplace_back(p.tensor->shape());
    s.v.emplace_back(p.tensor->shape());
  }
  return s;
}

void adam_update(std::span<float> param, std::span<const float> grad, std::span<float> m,
                 std::span<float> v, std::uint64_t step, const TrainConfig& config) {
  if (grad.size() != param.size() || m.size() != param.size() || v.size() != param.size())
    throw DimensionError("adam_update: parameter, gradient and moment sizes differ");
  if (step == 0) throw ParameterError("adam_update: step is 1-based");
  const double b1 = config.adam_beta1, b2 = config.adam_beta2;
  const double c1 = 1.0 - std::pow(b1, static_cast<double>(step));
  const double c2 = 1.0 - std::pow(b2, static_cast<double>(step));
  for (std::size_t i = 0; i < param.size(); ++i) {
    const double g = grad[i];
    const double mi = b1 * m[i] + (1.0 - b1) * g;
    const double vi = b2 * v[i] + (1.0 - b2) * g * g;
    m[i] = static_cast<float>(mi);
    v[i] = static_cast<float>(vi);
    const double update = config.learning_rate * (mi / c1) / (std::sqrt(vi / c2) + config.adam_epsilon);
    param[i] = static_cast<float>(param[i] - update);
  }
}

void adam_step(Model& model, const std::vector<Tensor>& grads, AdamState& state,
               const TrainConfig& config) {
  auto params = parameters(model);
  if (grads.size() != params.size() || state.m.size() != params.size())
    throw DimensionError("adam_step: gradients or state not aligned with parameters(model)");
  ++state.step;
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (!params[i].trainable) continue;
    adam_update(params[i].tensor->data(), grads[i].data(), state.m[i].data(), state.v[i].data(),
                state.step, config);
  }
}

AugmentParams draw_augment_params(Rng& rng) {
  AugmentParams p;
  p.flip = rng.uniform() < 0.5;
  p.angle_degrees = rng.uniform(-kMaxRotationDegrees, kMaxRotationDegrees);
  return p;
}

Tensor augment_image(const Tensor& image, const AugmentParams& params) {
  if (image.rank() != 3) throw DimensionError("augment_image expects [H, W, C], got " + to_string(image.shape()));
  const std::size_t h = image.dim(0), w = image.dim(1), c = image.dim(2);
  Tensor src = image;
  if (params.flip) {
    for (std::size_t y = 0; y < h; ++y)
      for (std::size_t x = 0; x < w; ++x)
        for (std::size_t ch = 0; ch < c; ++ch) src[(y * w + x) * c + ch] = image[(y * w + (w - 1 - x)) * c + ch];
  }
  if (params.angle_degrees == 0.0) return src;

  // Inverse mapping: each output pixel samples the source rotated by -angle.
  const double a = params.angle_degrees * std::numbers::pi / 180.0;
  const double ca = std::cos(a), sa = std::sin(a);
  const double cy = (static_cast<double>(h) - 1.0) / 2.0, cx = (static_cast<double>(w) - 1.0) / 2.0;
  Tensor out(image.shape());
  for (std::size_t y = 0; y < h; ++y)
    for (std::size_t x = 0; x < w; ++x) {
      const double dx = static_cast<double>(x) - cx, dy = static_cast<double>(y) - cy;
      const long sx = std::lround(ca * dx + sa * dy + cx);
      const long sy = std::lround(-sa * dx + ca * dy + cy);
      if (sx < 0 || sy < 0 || sx >= static_cast<long>(w) || sy >= static_cast<long>(h)) continue;
      for (std::size_t ch = 0; ch < c; ++ch)
        out[(y * w + x) * c + ch] = src[(static_cast<std::size_t>(sy) * w + static_cast<std::size_t>(sx)) * c + ch];
    }
  return out;
}

Tensor augment(const Tensor& batch, Rng& rng) {
  if (batch.rank() != 4) throw DimensionError("augment expects an NHWC batch, got " + to_string(batch.shape()));
  const Shape image_shape{batch.dim(1), batch.dim(2), batch.dim(3)};
  const std::size_t stride = element_count(image_shape);
  Tensor out(batch.shape());
  for (std::size_t b = 0; b < batch.dim(0); ++b) {
    const AugmentParams p = draw_augment_params(rng);
    Tensor img(image_shape, std::vector<float>(batch.raw() + b * stride, batch.raw() + (b + 1) * stride));
    const Tensor aug = augment_image(img, p);
    std::copy(aug.raw(), aug.raw() + stride, out.raw() + b * stride);
  }
  return out;
}

namespace {

void check_dataset(const Model& model, const GroupedDataset& ds, const char* what) {
  if (ds.empty()) throw ParameterError(std::string(what) + " set is empty");
  for (const auto& s : ds.samples) {
    if (s.label >= model.num_classes())
      throw ParameterError(std::string(what) + " set has label " + std::to_string(s.label) +
                           " but the model has " + std::to_string(model.num_classes()) + " classes");
    if (s.image.shape() != model.input_shape())
      throw DimensionError(std::string(what) + " image shape " + to_string(s.image.shape()) +
                           " does not match model input " + to_string(model.input_shape()));
  }
}

std::size_t count_correct(const Tensor& probs, const GroupedDataset& ds, std::span<const std::size_t> idx) {
  const auto pred = argmax_rows(probs);
  std::size_t correct = 0;
  for (std::size_t i = 0; i < idx.size(); ++i) correct += pred[i] == ds.samples[idx[i]].label;
  return correct;
}

}  // namespace

EvalResult evaluate_model(const Model& model, const GroupedDataset& dataset, std::size_t batch_size) {
  check_dataset(model, dataset, "evaluation");
  if (batch_size == 0) throw ParameterError("batch_size must be positive");
  std::size_t correct = 0;
  double loss = 0.0;
  std::vector<std::size_t> idx;
  for (std::size_t start = 0; start < dataset.size(); start += batch_size) {
    idx.resize(std::min(batch_size, dataset.size() - start));
    std::iota(idx.begin(), idx.end(), start);
    const Tensor probs = forward(model, dataset.images(idx), Mode::Infer);
    correct += count_correct(probs, dataset, idx);
    loss += cross_entropy(probs, dataset.one_hot(idx, model.num_classes())) * static_cast<double>(idx.size());
  }
  const double n = static_cast<double>(dataset.size());
  return {static_cast<double>(correct) / n, loss / n};
}

FitResult fit(Model model, const GroupedDataset& train, const GroupedDataset& val,
              const TrainConfig& config, const TrainHooks& hooks) {
  config.validate();
  check_dataset(model, train, "training");
  check_dataset(model, val, "validation");

  FitResult result{model, {}};
  AdamState state = make_adam_state(model);
  const Rng root = Rng(config.seed).split("fit");
  std::vector<double> val_history;

  for (std::size_t epoch = 1; epoch <= config.epochs; ++epoch) {
    const Rng er = root.split(epoch);
    std::vector<std::size_t> order(train.size());
    std::iota(order.begin(), order.end(), 0);
    Rng shuffler = er.split("shuffle");
    shuffle(order, shuffler);

    std::size_t correct = 0;
    double loss_sum = 0.0;
    std::size_t batch_index = 0;
    for (std::size_t start = 0; start < order.size(); start += config.batch_size, ++batch_index) {
      const std::span<const std::size_t> idx(order.data() + start,
                                             std::min(config.batch_size, order.size() - start));
      Tensor x = train.images(idx);
      if (config.augment) {
        Rng aug = er.split("augment").split(batch_index);
        x = augment(x, aug);
      }
      const Tensor y = train.one_hot(idx, model.num_classes());
      const Rng dropout = er.split("dropout").split(batch_index);
      StepResult step = train_step(model, x, y, &dropout);
      if (!std::isfinite(step.loss))
        throw TrainingError("non-finite loss at epoch " + std::to_string(epoch) + ", batch " +
                            std::to_string(batch_index + 1));
      if (hooks.on_gradients) hooks.on_gradients(model, step.grads);
      adam_step(model, step.grads, state, config);
      update_running_statistics(model, step.trace);
      if (hooks.after_step) hooks.after_step(model);
      correct += count_correct(step.probs, train, idx);
      loss_sum += step.loss * static_cast<double>(idx.size());
    }

    const EvalResult v = evaluate_model(model, val);
    EpochRecord rec;
    rec.epoch = epoch;
    rec.train_accuracy = static_cast<double>(correct) / static_cast<double>(train.size());
    rec.train_loss = loss_sum / static_cast<double>(train.size());
    rec.val_accuracy = v.accuracy;
    rec.val_loss = v.loss;
    result.log.epochs.push_back(rec);

    if (val_history.empty() || v.accuracy > *std::max_element(val_history.begin(), val_history.end()))
      result.model = model;
    val_history.push_back(v.accuracy);
  }
  result.log.best_epoch = best_epoch_of(val_history);
  return result;
}

}  // namespace compfair
