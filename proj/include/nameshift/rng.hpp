//
// Copyright 2026 The NameShift Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
//

#pragma once

#include <cstdint>
#include <random>
#include <string_view>
#include <vector>

#include "nameshift/error.hpp"

namespace nameshift {

inline uint64_t splitmix64(uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Derives an independent substream seed from a base seed, a tag (typically
// an instance id or pipeline stage name) and a counter. Substreams make
// per-instance sampling independent of evaluation order, so parallel
// execution cannot change results.
inline uint64_t derive_seed(uint64_t base, std::string_view tag,
                            uint64_t counter = 0) {
  uint64_t h = 0xcbf29ce484222325ULL;  // FNV-1a over the tag bytes
  for (unsigned char c : tag) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return splitmix64(splitmix64(base ^ h) + counter);
}

// Deterministic random stream with explicit, implementation-independent
// draw helpers. std::mt19937_64 is seeded directly; distributions are
// hand-rolled so results do not depend on the standard library's
// distribution internals.
class Rng {
 public:
  explicit Rng(uint64_t seed) : gen_(splitmix64(seed)) {}

  uint64_t next_u64() { return gen_(); }

  // Unbiased draw from [0, n) via rejection sampling.
  size_t uniform_index(size_t n) {
    if (n == 0) throw ConfigError("uniform_index: empty range");
    uint64_t bound = static_cast<uint64_t>(n);
    uint64_t threshold = (0 - bound) % bound;  // 2^64 mod n
    for (;;) {
      uint64_t r = next_u64();
      if (r >= threshold) return static_cast<size_t>(r % bound);
    }
  }

  // Uniform double in [0, 1) with 53 random bits.
  double uniform01() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  // k distinct indices from [0, n), uniform, in draw order.
  std::vector<size_t> sample_without_replacement(size_t n, size_t k) {
    if (k > n) k = n;
    std::vector<size_t> pool(n);
    for (size_t i = 0; i < n; ++i) pool[i] = i;
    std::vector<size_t> out;
    out.reserve(k);
    for (size_t i = 0; i < k; ++i) {
      size_t j = i + uniform_index(n - i);
      std::swap(pool[i], pool[j]);
      out.push_back(pool[i]);
    }
    return out;
  }

  // k distinct indices drawn sequentially with probability proportional to
  // weights[i] among the not-yet-drawn items.
  std::vector<size_t> weighted_sample_without_replacement(
      const std::vector<double>& weights, size_t k) {
    size_t n = weights.size();
    if (k > n) k = n;
    std::vector<bool> taken(n, false);
    std::vector<size_t> out;
    out.reserve(k);
    for (size_t draw = 0; draw < k; ++draw) {
      double total = 0.0;
      for (size_t i = 0; i < n; ++i)
        if (!taken[i]) total += weights[i];
      size_t pick = n;
      if (total > 0.0) {
        double r = uniform01() * total;
        double acc = 0.0;
        for (size_t i = 0; i < n; ++i) {
          if (taken[i]) continue;
          acc += weights[i];
          if (r < acc) {
            pick = i;
            break;
          }
        }
      }
      if (pick == n) {  // zero or rounding-exhausted mass: first free index
        for (size_t i = 0; i < n; ++i)
          if (!taken[i]) {
            pick = i;
            break;
          }
      }
      taken[pick] = true;
      out.push_back(pick);
    }
    return out;
  }

 private:
  std::mt19937_64 gen_;
};

}  // namespace nameshift
