// Copyright (c) 2026 The farlsm Authors. All rights reserved.
// Use of this source code is governed by a BSD-style license that can be
// found in the LICENSE file.

#pragma once

#include <cstdint>
#include <string>

#include "farlsm/coding.h"
#include "farlsm/slice.h"
#include "farlsm/status.h"

namespace farlsm {

using SequenceNumber = uint64_t;
constexpr SequenceNumber kMaxSequence = UINT64_MAX;

// One memtable tuple, length-prefix encoded so a raw block transfers
// verbatim and decodes anywhere:
//   varint key_len | varint (value_len << 1 | tombstone) | seq u64
//   | key bytes | value bytes
struct DecodedTuple {
  Slice key;
  Slice value;
  SequenceNumber seq = 0;
  bool tombstone = false;
  size_t encoded_len = 0;
};

inline void EncodeTuple(std::string* dst, const Slice& key, const Slice& value,
                        SequenceNumber seq, bool tombstone) {
  PutVarint32(dst, static_cast<uint32_t>(key.size()));
  PutVarint32(dst, static_cast<uint32_t>(value.size() << 1) |
                       (tombstone ? 1u : 0u));
  PutFixed64(dst, seq);
  dst->append(key.data(), key.size());
  dst->append(value.data(), value.size());
}

inline size_t EncodedTupleSize(size_t key_len, size_t value_len) {
  return VarintLength(key_len) + VarintLength(value_len << 1) + 8 + key_len +
         value_len;
}

// Decodes the tuple starting at input[0]. The returned slices alias input.
inline bool DecodeTuple(const Slice& input, DecodedTuple* out) {
  Slice in = input;
  uint32_t key_len, val_word;
  if (!GetVarint32(&in, &key_len)) return false;
  if (!GetVarint32(&in, &val_word)) return false;
  if (!GetFixed64(&in, &out->seq)) return false;
  out->tombstone = (val_word & 1) != 0;
  uint32_t val_len = val_word >> 1;
  if (in.size() < static_cast<size_t>(key_len) + val_len) return false;
  out->key = Slice(in.data(), key_len);
  out->value = Slice(in.data() + key_len, val_len);
  out->encoded_len = (in.data() - input.data()) + key_len + val_len;
  return true;
}

// Orders user keys ascending, then sequence numbers descending, so the
// newest version of a key is encountered first.
inline int CompareKeySeq(const Slice& a_key, SequenceNumber a_seq,
                         const Slice& b_key, SequenceNumber b_seq) {
  int c = a_key.compare(b_key);
  if (c != 0) return c;
  if (a_seq > b_seq) return -1;
  if (a_seq < b_seq) return +1;
  return 0;
}

}  // namespace farlsm
