// Copyright 2026 The blocklab Authors.
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

#include <cmath>
#include <cstdint>
#include <random>

#include "blocklab/errors.hpp"
#include "blocklab/types.hpp"

namespace blocklab {

/// One round of the splitmix64 output function. Used for seed derivation;
/// the mapping is pinned so that derived streams are stable across
/// platforms and releases.
inline std::uint64_t mix64(std::uint64_t z) {
  z += 0x9E3779B97F4A7C15ULL;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

/// Derives an independent seed for (stream, index) under a master seed.
/// Trials seeded as derive_seed(master, cell_index, trial_index) give
/// results that do not depend on scheduling or thread count.
inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream,
                                 std::uint64_t index = 0) {
  std::uint64_t z = mix64(master ^ 0xD6E8FEB86659FD93ULL);
  z = mix64(z ^ mix64(stream));
  z = mix64(z ^ mix64(index));
  return z;
}

/// Deterministic random source. Wraps std::mt19937_64 (whose output
/// sequence is fixed by the standard) and implements every variate we
/// need on top of raw 64-bit draws, so that generated objects are
/// bit-identical for a given seed on any platform.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }

  /// Uniform double in [0, 1), 53-bit resolution.
  double next_unit() {
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
  }

  /// Uniform double in (0, 1]; safe as a log() argument.
  double next_unit_open() {
    return static_cast<double>((engine_() >> 11) + 1) * 0x1.0p-53;
  }

  bool bernoulli(double prob) { return next_unit() < prob; }

  /// Uniform integer in [0, bound). Lemire multiply-shift with rejection.
  std::uint32_t below(std::uint32_t bound) {
    if (bound == 0) throw ParamError("uniform draw requires bound > 0");
    std::uint64_t x = engine_() >> 32;
    std::uint64_t m = x * bound;
    auto low = static_cast<std::uint32_t>(m);
    if (low < bound) {
      std::uint32_t cutoff = (-bound) % bound;  // (2^32 - bound) mod bound
      while (low < cutoff) {
        x = engine_() >> 32;
        m = x * bound;
        low = static_cast<std::uint32_t>(m);
      }
    }
    return static_cast<std::uint32_t>(m >> 32);
  }

  /// Uniform label in {1, ..., k}.
  Label uniform_label(std::uint32_t k) { return 1 + below(k); }

  /// Poisson variate. Inversion by sequential CDF search for mean < 10;
  /// larger means are split into sub-10 chunks and summed (exact, since
  /// Poisson means add).
  std::uint32_t poisson(double mean) {
    if (!(mean >= 0.0)) throw ParamError("poisson requires mean >= 0");
    if (mean == 0.0) return 0;
    if (mean < 10.0) return poisson_inversion(mean);
    auto chunks = static_cast<std::uint32_t>(std::ceil(mean / 8.0));
    double part = mean / chunks;
    std::uint32_t total = 0;
    for (std::uint32_t i = 0; i < chunks; ++i) total += poisson_inversion(part);
    return total;
  }

 private:
  std::uint32_t poisson_inversion(double mean) {
    double u = next_unit();
    double prob = std::exp(-mean);
    double cdf = prob;
    std::uint32_t j = 0;
    // Hard ceiling far in the tail; protects against fp rounding in cdf.
    auto cap = static_cast<std::uint32_t>(mean + 40.0 * std::sqrt(mean) + 60.0);
    while (u > cdf && j < cap) {
      ++j;
      prob *= mean / j;
      cdf += prob;
    }
    return j;
  }

  std::mt19937_64 engine_;
};

}  // namespace blocklab
