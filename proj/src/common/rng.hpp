// Copyright 2026 The h2rat Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <span>
#include <string_view>
#include <utility>

namespace h2r {

/// SplitMix64 output function (Steele, Lea & Flood 2014).
std::uint64_t splitmix64(std::uint64_t x);

/// Derives the seed of the index-th child stream:
///   mix(seed, i) = splitmix64(seed + (i + 1) * 0x9E3779B97F4A7C15).
/// Used for per-trial seeds and for independent sub-streams of one run.
std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t index);

/// FNV-1a 64-bit hash.
std::uint64_t fnv1a64(std::string_view bytes);

/// Deterministic random stream backed by std::mt19937_64, whose output
/// sequence is fixed by the C++ standard. Distributions are implemented here
/// rather than with <random> distribution objects, which are not specified
/// bit-for-bit across standard library implementations.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }

  /// Uniform double in [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Uniform integer in [0, n) by rejection; n must be positive.
  std::uint64_t below(std::uint64_t n);

  template <typename T>
  void shuffle(std::span<T> items) {
    for (std::size_t i = items.size(); i > 1; --i) {
      const std::size_t j = static_cast<std::size_t>(below(i));
      std::swap(items[i - 1], items[j]);
    }
  }

 private:
  std::mt19937_64 engine_;
};

}  // namespace h2r
