// Copyright (c) 2026 The farlsm Authors. All rights reserved.
// Use of this source code is governed by a BSD-style license that can be
// found in the LICENSE file.

#include "farlsm/flush_package.h"

#include "farlsm/coding.h"
#include "farlsm/crc32c.h"

namespace farlsm {

uint8_t FlushMetadataPackage::InternNode(NodeId id) {
  for (size_t i = 0; i < node_table.size(); i++) {
    if (node_table[i] == id) return static_cast<uint8_t>(i);
  }
  node_table.push_back(id);
  return static_cast<uint8_t>(node_table.size() - 1);
}

std::string FlushMetadataPackage::Encode() const {
  std::string out;
  PutFixed16(&out, kVersion);
  PutFixed64(&out, job_id);
  PutByte(&out, compression ? 1 : 0);
  PutVarint32(&out, block_size);
  PutVarint32(&out, target_level);
  PutFixed64(&out, file_number_seed);
  PutVarint32(&out, column_family_id);
  PutFixed64(&out, sequence_watermark);
  PutFixed64(&out, wal_log_id);
  PutFixed64(&out, wal_persisted_offset);
  PutByte(&out, shard_id);
  PutByte(&out, shard_bits);
  PutFixed32(&out, owner.Encoded());
  PutFixed32(&out, owner_incarnation);

  // Shared node table first (fixed dependency order), then the entries that
  // reference it.
  PutByte(&out, static_cast<uint8_t>(node_table.size()));
  for (NodeId id : node_table) PutFixed32(&out, id.Encoded());

  PutFixed16(&out, static_cast<uint16_t>(memtables.size()));
  for (const MemtableEntry& m : memtables) {
    PutFixed64(&out, m.memtable_id);
    PutVarint64(&out, m.min_seq);
    PutVarint64(&out, m.max_seq);
    PutByte(&out, m.dm_node_ref);
    PutVarint64(&out, m.kv_region_id);
    PutFixed64(&out, m.block_region_offset);
    PutVarint64(&out, m.block_length);
    PutVarint64(&out, m.index_region_id);
    PutFixed64(&out, m.index_region_offset);
    PutVarint64(&out, m.index_length);
  }
  return out;
}

Status FlushMetadataPackage::Decode(Slice input, FlushMetadataPackage* out) {
  uint16_t version;
  uint8_t compression, node_count;
  uint16_t memtable_count;
  uint32_t owner_code;
  if (!GetFixed16(&input, &version) || version != kVersion) {
    return Status::Corruption("bad package version");
  }
  if (!GetFixed64(&input, &out->job_id) || !GetByte(&input, &compression) ||
      !GetVarint32(&input, &out->block_size) ||
      !GetVarint32(&input, &out->target_level) ||
      !GetFixed64(&input, &out->file_number_seed) ||
      !GetVarint32(&input, &out->column_family_id) ||
      !GetFixed64(&input, &out->sequence_watermark) ||
      !GetFixed64(&input, &out->wal_log_id) ||
      !GetFixed64(&input, &out->wal_persisted_offset) ||
      !GetByte(&input, &out->shard_id) || !GetByte(&input, &out->shard_bits) ||
      !GetFixed32(&input, &owner_code) ||
      !GetFixed32(&input, &out->owner_incarnation) ||
      !GetByte(&input, &node_count)) {
    return Status::Corruption("short package header");
  }
  out->compression = compression != 0;
  out->owner = NodeId::Decode(owner_code);
  out->node_table.clear();
  for (uint8_t i = 0; i < node_count; i++) {
    uint32_t code;
    if (!GetFixed32(&input, &code)) {
      return Status::Corruption("short node table");
    }
    out->node_table.push_back(NodeId::Decode(code));
  }
  if (!GetFixed16(&input, &memtable_count)) {
    return Status::Corruption("short package");
  }
  out->memtables.clear();
  for (uint16_t i = 0; i < memtable_count; i++) {
    MemtableEntry m;
    if (!GetFixed64(&input, &m.memtable_id) ||
        !GetVarint64(&input, &m.min_seq) || !GetVarint64(&input, &m.max_seq) ||
        !GetByte(&input, &m.dm_node_ref) ||
        !GetVarint64(&input, &m.kv_region_id) ||
        !GetFixed64(&input, &m.block_region_offset) ||
        !GetVarint64(&input, &m.block_length) ||
        !GetVarint64(&input, &m.index_region_id) ||
        !GetFixed64(&input, &m.index_region_offset) ||
        !GetVarint64(&input, &m.index_length)) {
      return Status::Corruption("short package entry");
    }
    if (m.dm_node_ref >= out->node_table.size()) {
      return Status::Corruption("bad node ref");
    }
    out->memtables.push_back(m);
  }
  return Status::OK();
}

uint32_t FlushMetadataPackage::Digest() const {
  std::string encoded = Encode();
  return crc32c::Value(encoded.data(), encoded.size());
}

}  // namespace farlsm
