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

#include "compfair/rng.hpp"

#include <cmath>
#include <numbers>

namespace compfair {
namespace {

constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ULL;

// SplitMix64 finalizer.
std::uint64_t mix64(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

std::uint64_t hash_label(std::string_view label) {
  // FNV-1a, then mixed.
  std::uint64_t h = 0xCBF29CE484222325ULL;
  for (unsigned char c : label) {
    h ^= c;
    h *= 0x100000001B3ULL;
  }
  return mix64(h);
}

}  // namespace

Rng::Rng(std::uint64_t seed) : key_(mix64(seed + kGolden)) {}

Rng Rng::split(std::uint64_t stream) const {
  return Rng(mix64(key_ ^ mix64(stream * kGolden + 0x632BE59BD9B4E019ULL)), 0, 0);
}

Rng Rng::split(std::string_view label) const {
  return Rng(mix64(key_ ^ hash_label(label)), 0, 0);
}

std::uint64_t Rng::u64_at(std::uint64_t counter) const {
  return mix64(key_ + (counter + 1) * kGolden);
}

double Rng::uniform_at(std::uint64_t counter) const {
  return static_cast<double>(u64_at(counter) >> 11) * 0x1.0p-53;
}

std::uint64_t Rng::next_u64() { return u64_at(counter_++); }

double Rng::uniform() { return uniform_at(counter_++); }

double Rng::uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

std::uint64_t Rng::uniform_index(std::uint64_t n) {
  if (n == 0) return 0;
  __extension__ using u128 = unsigned __int128;
  const u128 product = static_cast<u128>(next_u64()) * static_cast<u128>(n);
  return static_cast<std::uint64_t>(product >> 64);
}

double Rng::normal() {
  double u1 = uniform();
  const double u2 = uniform();
  if (u1 < 1e-300) u1 = 1e-300;
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

}  // namespace compfair
