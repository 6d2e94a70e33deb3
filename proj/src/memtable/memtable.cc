// Copyright (c) 2026 The farlsm Authors. All rights reserved.
// Use of this source code is governed by a BSD-style license that can be
// found in the LICENSE file.

#include "farlsm/memtable.h"

#include <cassert>

#include "farlsm/coding.h"

namespace farlsm {

std::string TransferRecord::Encode() const {
  std::string out;
  PutFixed64(&out, memtable_id);
  PutFixed32(&out, dm_node.Encoded());
  PutByte(&out, shard_bits);
  PutFixed64(&out, index_region_id);
  PutFixed64(&out, index_remote_base);
  PutFixed64(&out, index_length);
  PutFixed64(&out, kv_region_id);
  PutFixed64(&out, kv_remote_base);
  PutFixed64(&out, kv_stride);
  for (const ShardPart& part : shards) {
    PutFixed64(&out, part.local_base);
    PutVarint64(&out, part.length);
  }
  return out;
}

Status TransferRecord::Decode(Slice input, TransferRecord* out) {
  uint32_t node_code;
  if (!GetFixed64(&input, &out->memtable_id) ||
      !GetFixed32(&input, &node_code) ||
      !GetByte(&input, &out->shard_bits) ||
      !GetFixed64(&input, &out->index_region_id) ||
      !GetFixed64(&input, &out->index_remote_base) ||
      !GetFixed64(&input, &out->index_length) ||
      !GetFixed64(&input, &out->kv_region_id) ||
      !GetFixed64(&input, &out->kv_remote_base) ||
      !GetFixed64(&input, &out->kv_stride)) {
    return Status::Corruption("short transfer record");
  }
  out->dm_node = NodeId::Decode(node_code);
  if (out->shard_bits > 8) return Status::Corruption("bad shard bits");
  out->shards.clear();
  uint32_t count = 1u << out->shard_bits;
  for (uint32_t i = 0; i < count; i++) {
    ShardPart part;
    if (!GetFixed64(&input, &part.local_base) ||
        !GetVarint64(&input, &part.length)) {
      return Status::Corruption("short transfer record shard list");
    }
    out->shards.push_back(part);
  }
  return Status::OK();
}

Memtable::Memtable(uint64_t id, const ShardConfig& shards,
                   uint64_t limit_bytes, AddressSpace* address_space)
    : id_(id),
      shards_(shards),
      limit_bytes_(limit_bytes),
      shard_capacity_(limit_bytes >> shards.k),
      rnd_(id * 0x9e3779b9 + 1) {
  blocks_.resize(shards_.shard_count());
  for (auto& block : blocks_) {
    block.virtual_base = address_space->Reserve(shard_capacity_);
    // Capacity is fixed up front so appends never reallocate and readers can
    // hold slices into the block while the writer appends.
    block.bytes.reserve(shard_capacity_);
  }
  node_arena_.emplace_back();
  head_ = &node_arena_.back();
  head_->kv_ref = 0;
  head_->shard = 0;
  head_->height = kMaxHeight - 1;
  head_->freq = 0;
  for (int i = 0; i < kMaxHeight; i++) head_->SetNext(i, nullptr);
}

Memtable::~Memtable() = default;

DecodedTuple Memtable::Decode(const Node* node) const {
  const ShardBlock& block = blocks_[node->shard];
  uint64_t offset = node->kv_ref - block.virtual_base;
  DecodedTuple tuple;
  bool ok = DecodeTuple(
      Slice(block.bytes.data() + offset, block.bytes.size() - offset), &tuple);
  assert(ok);
  (void)ok;
  return tuple;
}

int Memtable::Compare(const Node* node, const Slice& key,
                      SequenceNumber seq) const {
  DecodedTuple tuple = Decode(node);
  return CompareKeySeq(tuple.key, tuple.seq, key, seq);
}

Memtable::Node* Memtable::FindGreaterOrEqual(const Slice& key,
                                             SequenceNumber seq,
                                             Node** prev) const {
  Node* x = head_;
  int level = max_height_.load(std::memory_order_acquire) - 1;
  while (true) {
    Node* next = x->Next(level);
    if (next != nullptr && Compare(next, key, seq) < 0) {
      x = next;
    } else {
      if (prev != nullptr) prev[level] = x;
      if (level == 0) return next;
      level--;
    }
  }
}

int Memtable::RandomHeight() {
  // Geometric with p = 1/4.
  int height = 1;
  while (height < kMaxHeight && rnd_.OneIn(4)) height++;
  return height;
}

Memtable::Node* Memtable::NewNode(uint64_t kv_ref, uint8_t shard,
                                  int height) {
  node_arena_.emplace_back();
  Node* node = &node_arena_.back();
  node->kv_ref = kv_ref;
  node->ordinal = 0;
  node->shard = shard;
  node->height = static_cast<uint8_t>(height - 1);
  node->freq = 0;
  for (int i = 0; i < kMaxHeight; i++) node->SetNext(i, nullptr);
  return node;
}

Status Memtable::Put(const Slice& key, const Slice& value, SequenceNumber seq,
                     bool tombstone) {
  if (state() != State::kActive) {
    return Status::InvalidState("put on non-active memtable");
  }
  if (key.empty()) return Status::InvalidArgument("empty key");
  if (seq <= max_seq_ && node_count_ > 0) {
    return Status::InvalidArgument("non-monotonic sequence");
  }

  uint32_t shard = ShardOf(key, shards_);
  ShardBlock& block = blocks_[shard];
  size_t tuple_len = EncodedTupleSize(key.size(), value.size());
  if (block.bytes.size() + tuple_len > shard_capacity_ ||
      size_bytes_ + tuple_len > limit_bytes_) {
    return Status::MemtableFull();
  }

  uint64_t offset = block.bytes.size();
  EncodeTuple(&block.bytes, key, value, seq, tombstone);
  uint64_t kv_ref = block.virtual_base + offset;

  Node* prev[kMaxHeight];
  FindGreaterOrEqual(key, seq, prev);
  int height = RandomHeight();
  int cur_max = max_height_.load(std::memory_order_relaxed);
  if (height > cur_max) {
    for (int i = cur_max; i < height; i++) prev[i] = head_;
    max_height_.store(height, std::memory_order_relaxed);
  }
  Node* node = NewNode(kv_ref, static_cast<uint8_t>(shard), height);
  for (int i = 0; i < height; i++) {
    node->SetNext(i, prev[i]->Next(i));
    prev[i]->SetNext(i, node);
  }

  if (seq < min_seq_) min_seq_ = seq;
  if (seq > max_seq_) max_seq_ = seq;
  size_bytes_ += tuple_len;
  node_count_++;
  return Status::OK();
}

Status Memtable::Get(const Slice& key, SequenceNumber snapshot,
                     std::string* value, bool* deleted) {
  if (state() == State::kFlushed) {
    return Status::InvalidState("get on flushed memtable");
  }
  *deleted = false;
  Node* node = FindGreaterOrEqual(key, snapshot, nullptr);
  if (node == nullptr) return Status::NotFound();
  DecodedTuple tuple = Decode(node);
  if (tuple.key != key) return Status::NotFound();
  // (key asc, seq desc) order puts the newest version with seq <= snapshot
  // exactly at the seek position.
  if (state() == State::kActive && node->freq < 7) node->freq++;
  if (tuple.tombstone) {
    *deleted = true;
    return Status::NotFound();
  }
  value->assign(tuple.value.data(), tuple.value.size());
  return Status::OK();
}

Status Memtable::Seal() {
  State expected = State::kActive;
  if (!state_.compare_exchange_strong(expected, State::kImmutable,
                                      std::memory_order_acq_rel)) {
    return Status::InvalidState("seal on non-active memtable");
  }
  return Status::OK();
}

std::string Memtable::SerializeIndex() const {
  assert(state() != State::kActive);
  std::string out;
  PutFixed32(&out, IndexHeader::kMagic);
  PutFixed16(&out, IndexHeader::kVersion);
  PutByte(&out, shards_.k);
  PutFixed32(&out, static_cast<uint32_t>(node_count_));
  PutFixed64(&out, min_seq_ == kMaxSequence ? 0 : min_seq_);
  PutFixed64(&out, max_seq_);

  constexpr uint32_t kNil = 0xffffffffu;
  // Ordinals follow list order so link targets index the serialized array.
  uint32_t ordinal = 0;
  for (Node* n = head_->Next(0); n != nullptr; n = n->Next(0)) {
    n->ordinal = ordinal++;
  }
  // Head links: ordinal of the first node at each level.
  for (int level = 0; level < kMaxHeight; level++) {
    Node* n = head_->Next(level);
    PutFixed32(&out, n == nullptr ? kNil : n->ordinal);
  }
  // Nodes in list order: height, shard, in-shard offset, link ordinals.
  for (Node* n = head_->Next(0); n != nullptr; n = n->Next(0)) {
    PutByte(&out, n->height);
    PutByte(&out, n->shard);
    PutFixed64(&out, n->kv_ref - blocks_[n->shard].virtual_base);
    for (int level = 0; level <= n->height; level++) {
      Node* next = n->Next(level);
      PutFixed32(&out, next == nullptr ? kNil : next->ordinal);
    }
  }
  return out;
}

}  // namespace farlsm
