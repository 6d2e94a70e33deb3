// Copyright (c) 2026 The farlsm Authors. All rights reserved.
// Use of this source code is governed by a BSD-style license that can be
// found in the LICENSE file.

#pragma once

#include <map>
#include <string>
#include <vector>

#include "farlsm/dm_node.h"
#include "farlsm/fabric.h"
#include "farlsm/memtable.h"

namespace farlsm {
namespace testutil {

// Runs the offload sequence a compute node performs: registers the staging
// regions, one-sided-writes every shard block and the serialized index, then
// hands the transfer record to the DM node. Returns the record and (via ack)
// the shard blooms.
inline Status OffloadToDm(Fabric* fabric, NodeId cn, DmNode* dm,
                          Memtable* table, TransferRecord* record_out,
                          OffloadAck* ack_out) {
  const ShardConfig& shards = table->shard_config();
  uint32_t shard_count = shards.shard_count();
  uint64_t stride = table->shard_capacity();

  std::string index = table->SerializeIndex();

  RemoteRegion kv_region, index_region;
  Status s = fabric->RegisterRegion(dm->id(), stride * shard_count, &kv_region);
  if (!s.ok()) return s;
  s = fabric->RegisterRegion(dm->id(), index.size(), &index_region);
  if (!s.ok()) return s;

  TransferRecord record;
  record.memtable_id = table->id();
  record.dm_node = dm->id();
  record.shard_bits = shards.k;
  record.index_region_id = index_region.region_id;
  record.index_remote_base = index_region.base;
  record.index_length = index.size();
  record.kv_region_id = kv_region.region_id;
  record.kv_remote_base = kv_region.base;
  record.kv_stride = stride;
  for (uint32_t i = 0; i < shard_count; i++) {
    TransferRecord::ShardPart part;
    part.local_base = table->shard_block_base(i);
    part.length = table->shard_block_size(i);
    record.shards.push_back(part);
    if (part.length > 0) {
      fabric->OneSidedWrite(cn, kv_region, i * stride, table->shard_block(i),
                            nullptr);
    }
  }
  fabric->OneSidedWrite(cn, index_region, 0, index, nullptr);
  fabric->RunUntilIdle();

  s = dm->AcceptOffload(cn, fabric->Incarnation(cn), record, ack_out);
  if (!s.ok()) {
    fabric->FreeRegion(kv_region);
    fabric->FreeRegion(index_region);
    return s;
  }
  table->MarkOffloaded();
  *record_out = record;
  return Status::OK();
}

// Captures delegation replies arriving at a compute-node handler.
class ReplyCollector : public MessageHandler {
 public:
  void OnMessage(NodeId src, uint16_t kind,
                 const std::string& payload) override {
    if (kind == kDelegationReplyMsg) {
      DelegationReply reply;
      if (DelegationReply::Decode(Slice(payload), &reply).ok()) {
        replies.push_back(reply);
        reply_times.push_back(0);
      }
    } else if (kind == kDelegationScanReplyMsg) {
      DelegationScanReply reply;
      if (DelegationScanReply::Decode(Slice(payload), &reply).ok()) {
        scan_replies.push_back(reply);
      }
    }
    (void)src;
  }
  std::vector<DelegationReply> replies;
  std::vector<SimTime> reply_times;
  std::vector<DelegationScanReply> scan_replies;
};

}  // namespace testutil
}  // namespace farlsm
