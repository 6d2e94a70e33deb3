// Copyright (c) 2026 The farlsm Authors. All rights reserved.
// Use of this source code is governed by a BSD-style license that can be
// found in the LICENSE file.

#pragma once

#include <cstdint>

#include "farlsm/hash.h"

namespace farlsm {

// Deterministic xoshiro-style generator. Simulation code must use this
// rather than std engines so traces replay bit-identically across builds.
class Random {
 public:
  explicit Random(uint64_t seed) {
    state_ = Mix64(seed == 0 ? 0x2545f4914f6cdd1dull : seed);
    if (state_ == 0) state_ = 1;
  }

  uint64_t Next64() {
    uint64_t x = state_;
    x ^= x << 13;
    x ^= x >> 7;
    x ^= x << 17;
    state_ = x;
    return x * 0x2545f4914f6cdd1dull;
  }

  uint32_t Next() { return static_cast<uint32_t>(Next64() >> 32); }

  // Uniform in [0, n). n must be > 0.
  uint64_t Uniform(uint64_t n) { return Next64() % n; }

  // Uniform double in [0, 1).
  double NextDouble() {
    return (Next64() >> 11) * (1.0 / 9007199254740992.0);
  }

  bool OneIn(uint32_t n) { return Uniform(n) == 0; }

  // Skewed towards small values: picks base in [0, max_log] uniformly,
  // then returns uniform in [0, 2^base).
  uint64_t Skewed(int max_log) {
    return Uniform(uint64_t{1} << Uniform(max_log + 1));
  }

 private:
  uint64_t state_;
};

}  // namespace farlsm
