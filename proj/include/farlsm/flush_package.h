// Copyright (c) 2026 The farlsm Authors. All rights reserved.
// Use of this source code is governed by a BSD-style license that can be
// found in the LICENSE file.

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "farlsm/fabric.h"
#include "farlsm/kv_format.h"
#include "farlsm/status.h"

namespace farlsm {

// Compact, self-contained snapshot of everything an executor needs to flush
// one shard group: options, file/KVS/WAL status and the DM locations of the
// participating blocks. Shared sub-structures (node ids) are emitted once in
// a table and referenced by index, in fixed dependency order, so nothing is
// serialized twice.
struct FlushMetadataPackage {
  static constexpr uint16_t kVersion = 1;

  uint64_t job_id = 0;

  // Options.
  bool compression = false;
  uint32_t block_size = 4096;

  // File metadata.
  uint32_t target_level = 0;
  uint64_t file_number_seed = 0;

  // KVS status.
  uint32_t column_family_id = 0;
  SequenceNumber sequence_watermark = 0;

  // WAL status.
  uint64_t wal_log_id = 0;
  uint64_t wal_persisted_offset = 0;

  // Shard group.
  uint8_t shard_id = 0;
  uint8_t shard_bits = 0;
  NodeId owner;
  uint32_t owner_incarnation = 1;

  struct MemtableEntry {
    uint64_t memtable_id = 0;
    SequenceNumber min_seq = 0;
    SequenceNumber max_seq = 0;
    uint8_t dm_node_ref = 0;  // index into node_table
    // This shard's KV block on DM: region id plus offset within the region.
    uint64_t kv_region_id = 0;
    uint64_t block_region_offset = 0;
    uint64_t block_length = 0;
    // Index-block location on DM.
    uint64_t index_region_id = 0;
    uint64_t index_region_offset = 0;
    uint64_t index_length = 0;
  };
  std::vector<MemtableEntry> memtables;  // newest last
  std::vector<NodeId> node_table;        // deduplicated

  uint8_t InternNode(NodeId id);
  NodeId ResolveNode(uint8_t ref) const { return node_table.at(ref); }

  uint64_t TotalBytes() const {
    uint64_t total = 0;
    for (const auto& m : memtables) total += m.block_length;
    return total;
  }

  std::string Encode() const;
  static Status Decode(Slice input, FlushMetadataPackage* out);

  // Digest recorded in the scheduler log.
  uint32_t Digest() const;
};

}  // namespace farlsm
