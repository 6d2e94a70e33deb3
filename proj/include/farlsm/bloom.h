// Copyright (c) 2026 The farlsm Authors. All rights reserved.
// Use of this source code is governed by a BSD-style license that can be
// found in the LICENSE file.

#pragma once

#include <string>
#include <vector>

#include "farlsm/slice.h"

namespace farlsm {

// Double-hashing bloom filter. 10 bits/key with 7 probes gives ~1% false
// positives; false negatives are impossible by construction.
class BloomFilter {
 public:
  static constexpr int kDefaultBitsPerKey = 10;

  static std::string Build(const std::vector<Slice>& keys,
                           int bits_per_key = kDefaultBitsPerKey);
  static bool MayContain(const Slice& filter, const Slice& key);
};

}  // namespace farlsm
