/* Copyright 2026 The rawcast Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#pragma once

#include <cstdint>

namespace rawcast {

/// splitmix64 generator. Self-contained so seeded outputs are identical
/// across standard libraries and platforms.
class Rng {
 public:
  explicit Rng(uint64_t seed) : state_(seed) {}

  uint64_t next() {
    state_ += 0x9E3779B97F4A7C15ULL;
    uint64_t z = state_;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

  /// Uniform integer in [lo, hi], inclusive.
  int64_t uniform(int64_t lo, int64_t hi) {
    return lo + int64_t(next() % uint64_t(hi - lo + 1));
  }

  /// Uniform double in [0, 1).
  double uniform01() { return double(next() >> 11) * 0x1.0p-53; }

  bool coin() { return (next() & 1) != 0; }

  /// Derive an independent stream for (seed, lane).
  static uint64_t mix(uint64_t seed, uint64_t lane) {
    Rng r(seed ^ (0x6A09E667F3BCC909ULL * (lane + 1)));
    return r.next();
  }

 private:
  uint64_t state_;
};

}  // namespace rawcast
