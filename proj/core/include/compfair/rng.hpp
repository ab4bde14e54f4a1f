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

#ifndef COMPFAIR_RNG_HPP_
#define COMPFAIR_RNG_HPP_

#include <cstddef>
#include <cstdint>
#include <string_view>

namespace compfair {

/// Counter-based generator. Draw i of a stream is a pure function of
/// (key, i), so streams can be split per stage and indexed directly without
/// consuming state elsewhere.
class Rng {
 public:
  explicit Rng(std::uint64_t seed = 0);

  /// Independent child stream identified by an integer.
  Rng split(std::uint64_t stream) const;
  /// Independent child stream identified by a label ("init", "split", ...).
  Rng split(std::string_view label) const;

  std::uint64_t next_u64();
  /// Uniform in [0, 1) with 53 bits of resolution.
  double uniform();
  double uniform(double lo, double hi);
  /// Uniform integer in [0, n).
  std::uint64_t uniform_index(std::uint64_t n);
  /// Standard normal via Box-Muller; consumes two draws.
  double normal();

  /// Draw at an absolute counter position without touching the state.
  std::uint64_t u64_at(std::uint64_t counter) const;
  double uniform_at(std::uint64_t counter) const;

  std::uint64_t key() const noexcept { return key_; }
  std::uint64_t counter() const noexcept { return counter_; }

 private:
  Rng(std::uint64_t key, std::uint64_t counter, int) : key_(key), counter_(counter) {}

  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

/// Fisher-Yates shuffle of [0, n) driven by `rng`.
template <typename Container>
void shuffle(Container& items, Rng& rng) {
  for (std::size_t i = items.size(); i > 1; --i) {
    const std::size_t j = static_cast<std::size_t>(rng.uniform_index(i));
    using std::swap;
    swap(items[i - 1], items[j]);
  }
}

}  // namespace compfair

#endif  // COMPFAIR_RNG_HPP_
