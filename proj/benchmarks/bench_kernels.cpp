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


#include <benchmark/benchmark.h>

#include "compfair/compfair.hpp"

namespace {

using namespace compfair;

Tensor random_tensor(Shape shape, std::uint64_t seed) {
  Rng rng(seed);
  return truncated_normal(std::move(shape), 0.5f, rng);
}

void BM_Matmul(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const Tensor a = random_tensor({n, n}, 1), b = random_tensor({n, n}, 2);
  for (auto _ : state) benchmark::DoNotOptimize(matmul(a, b));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(2 * n * n * n));
}
BENCHMARK(BM_Matmul)->RangeMultiplier(2)->Range(32, 256)->Unit(benchmark::kMicrosecond);

// Batch 8, square input, 3x3 kernel; args are extent and channels (in = out).
void BM_Conv2d(benchmark::State& state) {
  const auto s = static_cast<std::size_t>(state.range(0));
  const auto c = static_cast<std::size_t>(state.range(1));
  const Tensor x = random_tensor({8, s, s, c}, 3), k = random_tensor({3, 3, c, c}, 4);
  for (auto _ : state) benchmark::DoNotOptimize(conv2d(x, k));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(2 * 8 * s * s * 9 * c * c));
}
BENCHMARK(BM_Conv2d)->Args({48, 8})->Args({24, 16})->Args({12, 64})->Args({6, 128})->Unit(benchmark::kMillisecond);

void BM_ForwardCk48(benchmark::State& state) {
  const Model m = build_ck48(1);
  const Tensor x = random_tensor({static_cast<std::size_t>(state.range(0)), 48, 48, 1}, 5);
  for (auto _ : state) benchmark::DoNotOptimize(forward(m, x));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_ForwardCk48)->Arg(1)->Arg(16)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
