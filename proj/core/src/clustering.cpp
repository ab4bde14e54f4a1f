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

#include "compfair/clustering.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "compfair/error.hpp"
#include "compfair/rng.hpp"

namespace compfair {

double within_cluster_sse(std::span<const float> values, std::span<const float> centroids,
                          std::span<const std::uint8_t> indices) {
  double sse = 0.0;
  for (std::size_t i = 0; i < values.size(); ++i) {
    const double d = static_cast<double>(values[i]) - centroids[indices[i]];
    sse += d * d;
  }
  return sse;
}

namespace {

std::vector<double> linear_init(float lo, float hi, std::size_t n) {
  std::vector<double> c(n);
  for (std::size_t j = 0; j < n; ++j)
    c[j] = lo + (static_cast<double>(hi) - lo) * static_cast<double>(j) / static_cast<double>(n - 1);
  return c;
}

std::vector<double> plus_plus_init(std::span<const float> values, std::size_t n, std::uint64_t seed) {
  Rng rng = Rng(seed).split("kmeans++");
  std::vector<double> c{values[rng.uniform_index(values.size())]};
  std::vector<double> d2(values.size());
  while (c.size() < n) {
    double total = 0.0;
    for (std::size_t i = 0; i < values.size(); ++i) {
      double best = INFINITY;
      for (double x : c) best = std::min(best, (values[i] - x) * (values[i] - x));
      d2[i] = best;
      total += best;
    }
    double r = rng.uniform() * total;
    std::size_t pick = values.size() - 1;
    for (std::size_t i = 0; i < values.size(); ++i) {
      if (d2[i] > 0.0 && r < d2[i]) {
        pick = i;
        break;
      }
      r -= d2[i];
    }
    c.push_back(values[pick]);
  }
  return c;
}

// Nearest centroid; `order` sorts the centroids ascending.
std::uint8_t nearest(double v, const std::vector<double>& c, const std::vector<std::size_t>& order) {
  std::size_t lo = 0, hi = order.size();
  while (lo < hi) {  // first sorted position with centroid >= v
    const std::size_t mid = (lo + hi) / 2;
    if (c[order[mid]] < v) lo = mid + 1;
    else hi = mid;
  }
  if (lo == order.size()) return static_cast<std::uint8_t>(order.back());
  if (lo == 0) return static_cast<std::uint8_t>(order.front());
  const double below = v - c[order[lo - 1]], above = c[order[lo]] - v;
  return static_cast<std::uint8_t>(below <= above ? order[lo - 1] : order[lo]);
}

}  // namespace

KMeansResult kmeans_1d(std::span<const float> values, std::size_t n_clusters, const ClusterOptions& options) {
  if (values.empty()) throw ParameterError("cannot cluster an empty tensor");
  if (n_clusters < 2 || n_clusters > kMaxClusters)
    throw ParameterError("cluster count must be in [2, 256], got " + std::to_string(n_clusters));
  KMeansResult r;

  std::vector<float> distinct(values.begin(), values.end());
  std::sort(distinct.begin(), distinct.end());
  distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());
  if (distinct.size() <= n_clusters) {
    r.centroids = distinct;
    r.indices.resize(values.size());
    for (std::size_t i = 0; i < values.size(); ++i)
      r.indices[i] = static_cast<std::uint8_t>(
          std::lower_bound(distinct.begin(), distinct.end(), values[i]) - distinct.begin());
    return r;
  }

  std::vector<double> c = options.init == CentroidInit::Linear
                              ? linear_init(distinct.front(), distinct.back(), n_clusters)
                              : plus_plus_init(values, n_clusters, options.seed);
  std::vector<std::uint8_t> assign(values.size(), 0);
  std::vector<std::size_t> order(n_clusters);
  bool first = true;
  for (r.iterations = 0; r.iterations < options.max_iterations; ++r.iterations) {
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return c[a] < c[b]; });
    bool changed = false;
    for (std::size_t i = 0; i < values.size(); ++i) {
      const std::uint8_t k = nearest(values[i], c, order);
      changed |= k != assign[i];
      assign[i] = k;
    }
    if (!changed && !first) break;
    first = false;

    std::vector<double> sum(n_clusters, 0.0);
    std::vector<std::size_t> count(n_clusters, 0);
    for (std::size_t i = 0; i < values.size(); ++i) {
      sum[assign[i]] += values[i];
      ++count[assign[i]];
    }
    for (std::size_t k = 0; k < n_clusters; ++k) {
      if (count[k]) {
        c[k] = sum[k] / static_cast<double>(count[k]);
        continue;
      }
      // Empty cluster: move it onto the worst-served value.
      std::size_t far = 0;
      double worst = -1.0;
      for (std::size_t i = 0; i < values.size(); ++i) {
        const double d = std::fabs(values[i] - c[assign[i]]);
        if (d > worst) {
          worst = d;
          far = i;
        }
      }
      c[k] = values[far];
      --count[assign[far]];
      sum[assign[far]] -= values[far];
      if (count[assign[far]]) c[assign[far]] = sum[assign[far]] / static_cast<double>(count[assign[far]]);
      assign[far] = static_cast<std::uint8_t>(k);
      count[k] = 1;
      sum[k] = values[far];
    }
  }

  r.centroids.assign(c.begin(), c.end());
  r.indices = std::move(assign);
  return r;
}

const TensorClusters* ClusteredWeights::find(std::string_view name) const {
  for (const auto& t : tensors)
    if (t.name == name) return &t;
  return nullptr;
}

Tensor reconstruct(const TensorClusters& clusters) {
  Tensor out(clusters.shape);
  if (out.size() != clusters.indices.size())
    throw IntegrityError("codebook for " + clusters.name + " has " + std::to_string(clusters.indices.size()) +
                         " indices for shape " + to_string(clusters.shape));
  for (std::size_t i = 0; i < out.size(); ++i) {
    if (clusters.indices[i] >= clusters.centroids.size())
      throw IntegrityError("pull index out of range in " + clusters.name);
    out[i] = clusters.centroids[clusters.indices[i]];
  }
  return out;
}

namespace {

bool clusterable(const ConstParameterView& p, ClusterScope scope) {
  return scope == ClusterScope::Kernels ? p.prunable : p.trainable;
}

}  // namespace

ClusteredModel cluster(const Model& model, std::size_t n_clusters, const ClusterOptions& options) {
  if (n_clusters < 2 || n_clusters > kMaxClusters)
    throw ParameterError("cluster count must be in [2, 256], got " + std::to_string(n_clusters));
  ClusteredModel out{model, {}};
  std::uint64_t stream = 0;
  for (const auto& p : parameters(model)) {
    ++stream;
    if (!clusterable(p, options.scope)) continue;
    ClusterOptions o = options;
    o.seed = Rng(options.seed).split(stream).key();
    KMeansResult km = kmeans_1d(p.tensor->data(), n_clusters, o);
    TensorClusters tc{std::string(p.name), p.tensor->shape(), std::move(km.centroids), std::move(km.indices)};
    parameter(out.model, tc.name) = reconstruct(tc);
    out.clusters.tensors.push_back(std::move(tc));
  }
  if (out.clusters.tensors.empty()) throw ParameterError("model has no clusterable tensors");
  return out;
}

void check_clusters(const Model& model, const ClusteredWeights& clusters) {
  for (const auto& tc : clusters.tensors) {
    const Tensor* w = nullptr;
    try {
      w = &parameter(model, tc.name);
    } catch (const LookupError&) {
      throw IntegrityError("codebook names unknown tensor " + tc.name);
    }
    if (w->shape() != tc.shape)
      throw IntegrityError("codebook shape " + to_string(tc.shape) + " does not match " + tc.name + " " +
                           to_string(w->shape()));
    if (reconstruct(tc) != *w) throw IntegrityError("weights of " + tc.name + " differ from their codebook");
  }
}

std::vector<float> centroid_gradients(const TensorClusters& clusters, std::span<const float> weight_grads) {
  if (weight_grads.size() != clusters.indices.size())
    throw DimensionError("gradient size does not match codebook of " + clusters.name);
  std::vector<double> acc(clusters.centroids.size(), 0.0);
  for (std::size_t i = 0; i < weight_grads.size(); ++i) acc[clusters.indices[i]] += weight_grads[i];
  return {acc.begin(), acc.end()};
}

TrainHooks sharing_hooks(const ClusteredWeights& clusters) {
  TrainHooks hooks;
  hooks.on_gradients = [&clusters](const Model& model, std::vector<Tensor>& grads) {
    const auto params = parameters(model);
    for (std::size_t p = 0; p < params.size(); ++p) {
      const TensorClusters* tc = clusters.find(params[p].name);
      if (!tc) continue;
      const auto cg = centroid_gradients(*tc, grads[p].data());
      for (std::size_t i = 0; i < grads[p].size(); ++i) grads[p][i] = cg[tc->indices[i]];
    }
  };
  return hooks;
}

ClusteredModel finetune_clustered(const ClusteredModel& clustered, const GroupedDataset& train,
                                  const GroupedDataset& val, const TrainConfig& config, TrainLog* log) {
  check_clusters(clustered.model, clustered.clusters);
  FitResult fitted = fit(clustered.model, train, val, config, sharing_hooks(clustered.clusters));
  ClusteredModel out{std::move(fitted.model), clustered.clusters};
  // Members of a cluster stay bitwise equal, so any member carries the centroid.
  for (auto& tc : out.clusters.tensors) {
    const Tensor& w = parameter(out.model, tc.name);
    std::vector<bool> seen(tc.centroids.size(), false);
    for (std::size_t i = 0; i < w.size(); ++i) {
      if (seen[tc.indices[i]]) continue;
      seen[tc.indices[i]] = true;
      tc.centroids[tc.indices[i]] = w[i];
    }
  }
  check_clusters(out.model, out.clusters);
  if (log) *log = std::move(fitted.log);
  return out;
}

}  // namespace compfair
