// Copyright (c) 2026 The farlsm Authors. All rights reserved.
// Use of this source code is governed by a BSD-style license that can be
// found in the LICENSE file.

#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "farlsm/kv_format.h"
#include "farlsm/slice.h"
#include "farlsm/status.h"

namespace farlsm {

constexpr uint64_t kSstMagic = 0x4F334C534Dull;
constexpr uint16_t kNoShard = 0xffff;
constexpr size_t kSstFooterSize = 48;
constexpr size_t kDefaultBlockSize = 4096;

// File metadata as carried in the Manifest and in COMMIT payloads.
struct SstMeta {
  uint64_t file_number = 0;
  uint32_t level = 0;
  uint64_t size = 0;
  std::string smallest;
  std::string largest;
  SequenceNumber min_seq = 0;
  SequenceNumber max_seq = 0;
  uint16_t shard = kNoShard;
  uint64_t num_entries = 0;

  void EncodeTo(std::string* out) const;
  static Status DecodeFrom(Slice* input, SstMeta* out);

  bool RangeOverlaps(const Slice& begin, const Slice& end_excl) const;
  bool Contains(const Slice& key) const {
    return Slice(smallest).compare(key) <= 0 && key.compare(largest) <= 0;
  }
};

// Builds one SST: 4 KiB data blocks of sorted tuples, an index block mapping
// each block's first key to its handle, a per-file bloom, a properties block
// and a fixed footer. Every section carries its own CRC.
class SstBuilder {
 public:
  explicit SstBuilder(size_t block_size = kDefaultBlockSize,
                      uint16_t shard = kNoShard);

  // Keys must arrive in (key asc, seq desc) order.
  void Add(const Slice& key, const Slice& value, SequenceNumber seq,
           bool tombstone);

  // Returns the complete file image; meta()'s size/num_entries are final
  // afterwards. The builder can not be reused.
  std::string Finish();

  const SstMeta& meta() const { return meta_; }
  uint64_t entries() const { return meta_.num_entries; }
  bool empty() const { return meta_.num_entries == 0; }

 private:
  void FlushBlock();

  size_t block_size_;
  SstMeta meta_;
  std::string file_;
  std::string block_;
  std::string block_first_key_;
  struct IndexEntry {
    std::string first_key;
    uint64_t offset;
    uint32_t size;
  };
  std::vector<IndexEntry> index_;
  std::vector<std::string> bloom_keys_;
  bool finished_ = false;
};

// Parses and serves one SST. Two modes: OpenFull holds the entire image
// (executor/compaction side); OpenTail holds only the index/bloom/props tail
// (CN read path, with data blocks fetched individually from DS).
class SstReader {
 public:
  struct BlockHandle {
    uint64_t offset = 0;
    uint32_t size = 0;  // payload + 4-byte crc
  };

  static Status OpenFull(std::string file_bytes, SstReader* out);
  static Status OpenTail(std::string tail_bytes, uint64_t tail_offset,
                         uint64_t file_size, SstReader* out);

  // Tail section offset for a file of the given size; readers fetch
  // [tail_offset, file_size) once and parse everything but data blocks.
  static Status TailSpan(Slice footer_bytes, uint64_t file_size,
                         uint64_t* tail_offset);

  const SstMeta& meta() const { return meta_; }
  bool MayContain(const Slice& key) const;
  size_t num_blocks() const { return index_.size(); }
  BlockHandle block_handle(size_t i) const { return index_[i].handle; }

  // Index maps each block to its first key: candidate block for key lookup.
  std::optional<size_t> FindBlock(const Slice& key) const;
  // First block that may contain keys >= start.
  size_t FindBlockForScan(const Slice& start) const;

  // Verifies the block crc and searches it. Out: value/deleted/seq of the
  // newest version with seq <= snapshot.
  static Status SearchBlock(Slice block, const Slice& key,
                            SequenceNumber snapshot, std::string* value,
                            bool* deleted, SequenceNumber* seq);

  // Decodes all tuples of a crc-protected block.
  static Status DecodeBlock(Slice block, std::vector<DecodedTuple>* out);

  // Full-image helpers (OpenFull mode only).
  Status ReadBlock(size_t index, std::string* block) const;
  Status Get(const Slice& key, SequenceNumber snapshot, std::string* value,
             bool* deleted, SequenceNumber* seq) const;

  bool has_full_image() const { return !file_.empty(); }
  const std::string& file_bytes() const { return file_; }

 private:
  Status ParseTail(Slice tail, uint64_t tail_offset, uint64_t file_size);

  SstMeta meta_;
  std::string file_;  // OpenFull only
  std::string tail_;
  struct IndexRecord {
    std::string first_key;
    BlockHandle handle;
  };
  std::vector<IndexRecord> index_;
  std::string bloom_;
};

}  // namespace farlsm
