// Copyright (c) 2026 The farlsm Authors. All rights reserved.
// Use of this source code is governed by a BSD-style license that can be
// found in the LICENSE file.

#include "farlsm/bloom.h"

#include "farlsm/hash.h"

namespace farlsm {

namespace {
uint32_t BloomHash(const Slice& key) {
  return Hash(key.data(), key.size(), 0xbc9f1d34);
}
}  // namespace

std::string BloomFilter::Build(const std::vector<Slice>& keys,
                               int bits_per_key) {
  // k = bits_per_key * ln(2), clamped; 10 bits/key -> 7 probes (~1% FPR).
  size_t k = static_cast<size_t>(bits_per_key * 0.69 + 0.5);
  if (k < 1) k = 1;
  if (k > 30) k = 30;

  size_t bits = keys.size() * static_cast<size_t>(bits_per_key);
  if (bits < 64) bits = 64;
  size_t bytes = (bits + 7) / 8;
  bits = bytes * 8;

  std::string filter(bytes, '\0');
  char* array = filter.data();
  for (const Slice& key : keys) {
    uint32_t h = BloomHash(key);
    const uint32_t delta = (h >> 17) | (h << 15);
    for (size_t j = 0; j < k; j++) {
      const uint32_t bitpos = h % bits;
      array[bitpos / 8] |= (1 << (bitpos % 8));
      h += delta;
    }
  }
  filter.push_back(static_cast<char>(k));
  return filter;
}

bool BloomFilter::MayContain(const Slice& filter, const Slice& key) {
  const size_t len = filter.size();
  if (len < 2) return false;
  const char* array = filter.data();
  const size_t bits = (len - 1) * 8;
  const size_t k = static_cast<uint8_t>(array[len - 1]);
  if (k > 30) return true;  // reserved for future encodings

  uint32_t h = BloomHash(key);
  const uint32_t delta = (h >> 17) | (h << 15);
  for (size_t j = 0; j < k; j++) {
    const uint32_t bitpos = h % bits;
    if ((array[bitpos / 8] & (1 << (bitpos % 8))) == 0) return false;
    h += delta;
  }
  return true;
}

}  // namespace farlsm
