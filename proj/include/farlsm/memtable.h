// Copyright (c) 2026 The farlsm Authors. All rights reserved.
// Use of this source code is governed by a BSD-style license that can be
// found in the LICENSE file.

#pragma once

#include <atomic>
#include <cstdint>
#include <deque>
#include <memory>
#include <string>
#include <vector>

#include "farlsm/fabric.h"
#include "farlsm/kv_format.h"
#include "farlsm/random.h"
#include "farlsm/slice.h"
#include "farlsm/status.h"

namespace farlsm {

// Key-space partitioning: shard_of(key) is the integer value of the first k
// bits of the key, so shards are disjoint, exhaustive and order-preserving.
struct ShardConfig {
  uint8_t k = 0;  // 0 <= k <= 8

  uint32_t shard_count() const { return 1u << k; }
};

inline uint32_t ShardOf(const Slice& key, const ShardConfig& config) {
  if (config.k == 0) return 0;
  uint8_t first = key.empty() ? 0 : static_cast<uint8_t>(key[0]);
  return first >> (8 - config.k);
}

// Hands out disjoint virtual base addresses. KV-shard blocks carry a stable
// virtual base A even though their backing buffer grows, which keeps kv_ref
// values (absolute address C) valid for the C + B - A relocation at query
// time.
class AddressSpace {
 public:
  explicit AddressSpace(uint64_t start = 0x100000) : next_(start) {}

  uint64_t Reserve(uint64_t length) {
    uint64_t base = next_;
    next_ += length + 0x1000;
    return base;
  }

 private:
  uint64_t next_;
};

// Relocation of a kv_ref C from a block based at local address A to the same
// block rebased at remote address B. O(1); never rewrites the block.
inline Status Relocate(uint64_t c, uint64_t a, uint64_t b,
                       uint64_t block_length, uint64_t* out) {
  if (c < a || c >= a + block_length) {
    return Status::OutOfRange("kv_ref outside block");
  }
  *out = c + b - a;
  return Status::OK();
}

// Everything needed to resolve any kv_ref of an offloaded memtable: local
// base A, remote base B and length per part. Shard blocks share one DM
// staging region with a fixed per-shard stride, so B_i = kv_base + i*stride.
struct TransferRecord {
  uint64_t memtable_id = 0;
  NodeId dm_node;
  uint8_t shard_bits = 0;

  // Index-block part (serialized index; ordinal links, no relocation).
  uint64_t index_region_id = 0;
  uint64_t index_remote_base = 0;
  uint64_t index_length = 0;

  // KV staging region housing all shard blocks.
  uint64_t kv_region_id = 0;
  uint64_t kv_remote_base = 0;
  uint64_t kv_stride = 0;

  struct ShardPart {
    uint64_t local_base = 0;  // A
    uint64_t length = 0;
  };
  std::vector<ShardPart> shards;

  uint64_t RemoteShardBase(uint32_t shard) const {
    return kv_remote_base + shard * kv_stride;
  }

  std::string Encode() const;
  static Status Decode(Slice input, TransferRecord* out);
};

// DM-optimized memtable: a skiplist index-block holding references into
// per-shard append-only KV blocks. KV bytes transfer to remote memory
// verbatim; only index link targets need rebuilding, and kv_refs are
// corrected lazily via Relocate().
class Memtable {
 public:
  enum class State : uint8_t { kActive, kImmutable, kOffloaded, kFlushed };

  static constexpr int kMaxHeight = 12;

  Memtable(uint64_t id, const ShardConfig& shards, uint64_t limit_bytes,
           AddressSpace* address_space);
  ~Memtable();

  Memtable(const Memtable&) = delete;
  Memtable& operator=(const Memtable&) = delete;

  uint64_t id() const { return id_; }
  State state() const { return state_.load(std::memory_order_acquire); }
  const ShardConfig& shard_config() const { return shards_; }

  // Appends the tuple and inserts an index node. seq must exceed max_seq.
  // MemtableFull once the target shard block or the whole table is at its
  // limit; the caller seals and rotates.
  Status Put(const Slice& key, const Slice& value, SequenceNumber seq,
             bool tombstone = false);

  // Newest value with seq <= snapshot. Tombstones surface through *deleted
  // so the caller can stop the search. Bumps the 3-bit freq counter while
  // the memtable is Active.
  Status Get(const Slice& key, SequenceNumber snapshot, std::string* value,
             bool* deleted);

  Status Seal();  // Active -> Immutable
  void MarkOffloaded() { state_.store(State::kOffloaded, std::memory_order_release); }
  void MarkFlushed() { state_.store(State::kFlushed, std::memory_order_release); }

  // Serializes the index-block into a self-contained buffer: node heights,
  // link targets as ordinals and kv_refs as (shard_id, in-shard offset).
  // Requires Immutable.
  std::string SerializeIndex() const;

  struct IndexHeader {
    static constexpr uint32_t kMagic = 0x53494b58;  // "XKIS" little-endian
    static constexpr uint16_t kVersion = 1;
  };

  SequenceNumber min_seq() const { return min_seq_; }
  SequenceNumber max_seq() const { return max_seq_; }
  uint64_t size_bytes() const { return size_bytes_; }  // KV bytes, all shards
  uint64_t limit_bytes() const { return limit_bytes_; }
  uint64_t node_count() const { return node_count_; }
  bool empty() const { return node_count_ == 0; }

  const std::string& shard_block(uint32_t shard) const {
    return blocks_[shard].bytes;
  }
  uint64_t shard_block_base(uint32_t shard) const {
    return blocks_[shard].virtual_base;
  }
  uint64_t shard_block_size(uint32_t shard) const {
    return blocks_[shard].bytes.size();
  }
  uint64_t shard_capacity() const { return shard_capacity_; }

  class Iterator;

 private:
  friend class Iterator;

  struct Node {
    uint64_t kv_ref;  // absolute virtual address C of the tuple
    mutable uint32_t ordinal;  // assigned in list order at serialize time
    uint8_t shard;
    uint8_t height;  // node spans levels [0, height]
    uint8_t freq;    // 3-bit saturating access counter
    std::atomic<Node*> next[kMaxHeight];

    Node* Next(int level) const {
      return next[level].load(std::memory_order_acquire);
    }
    void SetNext(int level, Node* n) {
      next[level].store(n, std::memory_order_release);
    }
  };

  struct ShardBlock {
    std::string bytes;
    uint64_t virtual_base = 0;
  };

  DecodedTuple Decode(const Node* node) const;
  int Compare(const Node* node, const Slice& key, SequenceNumber seq) const;
  // First node >= (key, seq) in (key asc, seq desc) order.
  Node* FindGreaterOrEqual(const Slice& key, SequenceNumber seq,
                           Node** prev) const;
  int RandomHeight();
  Node* NewNode(uint64_t kv_ref, uint8_t shard, int height);

  const uint64_t id_;
  const ShardConfig shards_;
  const uint64_t limit_bytes_;
  const uint64_t shard_capacity_;
  std::atomic<State> state_{State::kActive};

  std::vector<ShardBlock> blocks_;
  std::deque<Node> node_arena_;
  Node* head_;
  std::atomic<int> max_height_{1};
  Random rnd_;

  SequenceNumber min_seq_ = kMaxSequence;
  SequenceNumber max_seq_ = 0;
  uint64_t size_bytes_ = 0;
  uint64_t node_count_ = 0;
};

// Ordered walk over the whole memtable: user key ascending, seq descending.
class Memtable::Iterator {
 public:
  explicit Iterator(const Memtable* table) : table_(table), node_(nullptr) {}

  bool Valid() const { return node_ != nullptr; }
  void SeekToFirst() { node_ = table_->head_->Next(0); }
  void Seek(const Slice& key, SequenceNumber seq = kMaxSequence) {
    node_ = table_->FindGreaterOrEqual(key, seq, nullptr);
  }
  void Next() { node_ = node_->Next(0); }

  Slice key() const { return tuple().key; }
  Slice value() const { return tuple().value; }
  SequenceNumber seq() const { return tuple().seq; }
  bool tombstone() const { return tuple().tombstone; }
  uint32_t shard() const { return node_->shard; }
  uint64_t kv_ref() const { return node_->kv_ref; }
  uint8_t freq() const { return node_->freq; }
  uint64_t tuple_len() const { return tuple().encoded_len; }

 private:
  DecodedTuple tuple() const { return table_->Decode(node_); }
  const Memtable* table_;
  const Node* node_;
};

}  // namespace farlsm
