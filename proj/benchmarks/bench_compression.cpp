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


// Deflated model size across compression settings. Besides timing, each run
// reports deflated_bytes and the ratio to the uncompressed baseline.

#include <benchmark/benchmark.h>

#include <filesystem>

#include "compfair/compfair.hpp"

namespace {

using namespace compfair;

const Model& reference_model() {
  static const Model m = load_architecture(std::filesystem::path(COMPFAIR_SOURCE_DIR) / "configs" / "desk48.json", 7);
  return m;
}

std::size_t baseline_bytes() {
  static const std::size_t n = deflated_size(encode(to_model_file(reference_model())));
  return n;
}

void report(benchmark::State& state, std::size_t bytes) {
  state.counters["deflated_bytes"] = static_cast<double>(bytes);
  state.counters["ratio"] = static_cast<double>(bytes) / static_cast<double>(baseline_bytes());
}

void BM_PruneSweep(benchmark::State& state) {
  const double s = static_cast<double>(state.range(0)) / 100.0;
  std::size_t bytes = 0;
  for (auto _ : state) bytes = deflated_size(encode(to_model_file(prune(reference_model(), s).model)));
  report(state, bytes);
}
BENCHMARK(BM_PruneSweep)->DenseRange(0, 90, 10)->Unit(benchmark::kMillisecond);

void BM_PruneQuantSweep(benchmark::State& state) {
  const double s = static_cast<double>(state.range(0)) / 100.0;
  std::size_t bytes = 0;
  for (auto _ : state)
    bytes = deflated_size(encode(to_model_file(quantize_model(prune(reference_model(), s).model))));
  report(state, bytes);
}
BENCHMARK(BM_PruneQuantSweep)->DenseRange(0, 90, 30)->Unit(benchmark::kMillisecond);

void BM_ClusterSweep(benchmark::State& state) {
  const auto k = static_cast<std::size_t>(state.range(0));
  std::size_t bytes = 0;
  for (auto _ : state) bytes = deflated_size(encode(to_model_file(cluster(reference_model(), k))));
  report(state, bytes);
}
BENCHMARK(BM_ClusterSweep)->RangeMultiplier(2)->Range(4, 128)->Unit(benchmark::kMillisecond);

void BM_Kmeans1d(benchmark::State& state) {
  Rng rng(3);
  const Tensor w = truncated_normal({static_cast<std::size_t>(state.range(0))}, 0.05f, rng);
  for (auto _ : state) benchmark::DoNotOptimize(kmeans_1d(w.data(), 16));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_Kmeans1d)->RangeMultiplier(8)->Range(1 << 12, 1 << 18)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
