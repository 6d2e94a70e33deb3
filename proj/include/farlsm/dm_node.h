// Copyright (c) 2026 The farlsm Authors. All rights reserved.
// Use of this source code is governed by a BSD-style license that can be
// found in the LICENSE file.

#pragma once

#include <deque>
#include <map>
#include <memory>
#include <vector>

#include "farlsm/fabric.h"
#include "farlsm/memtable.h"
#include "farlsm/message.h"

namespace farlsm {

class FlushExecutor;

struct OffloadCommit {
  uint32_t owner_incarnation = 1;
  std::string transfer_record;  // TransferRecord::Encode()

  std::string Encode() const;
  static Status Decode(Slice input, OffloadCommit* out);
};

struct OffloadAck {
  uint64_t memtable_id = 0;
  Status::Code status = Status::Code::kOk;
  std::vector<std::string> shard_blooms;

  std::string Encode() const;
  static Status Decode(Slice input, OffloadAck* out);
};

struct ReclaimRequest {
  uint64_t memtable_id = 0;

  std::string Encode() const;
  static Status Decode(Slice input, ReclaimRequest* out);
};

// Disaggregated-memory node: hosts offloaded memtables, reconstructs index
// links after transfer, serves delegated lookups through a bounded worker
// pool, and keeps a bloom filter per hosted KV-shard block.
class DmNode : public MessageHandler {
 public:
  DmNode(Fabric* fabric, NodeId id, int worker_pool_size = 4);
  ~DmNode();

  void OnMessage(NodeId src, uint16_t kind, const std::string& payload) override;
  void OnUndeliverable(NodeId dst, uint16_t kind,
                       const std::string& payload) override;
  void OnRestart() override;

  // Direct (in-process) entry points, also used by the message handlers.
  Status AcceptOffload(NodeId owner, uint32_t owner_incarnation,
                       const TransferRecord& record, OffloadAck* ack);
  Status Reclaim(uint64_t memtable_id);
  void PurgeOwner(NodeId owner, uint32_t stale_incarnation);

  // Bloom probe for one hosted shard block: false means definitely absent.
  Status BloomCheck(uint64_t memtable_id, uint32_t shard, const Slice& key,
                    bool* maybe) const;

  // Node-compare count of a naive remote skiplist traversal for this key;
  // each hop would cost one-sided reads of the node record and its key.
  Status CountSearchHops(uint64_t memtable_id, const Slice& key,
                         uint64_t* hops) const;

  bool HasMemtable(uint64_t id) const { return hosted_.count(id) != 0; }
  bool IsSearchable(uint64_t id) const;
  size_t hosted_count() const { return hosted_.size(); }
  int busy_workers() const { return busy_workers_; }
  uint64_t delegated_gets() const { return delegated_gets_; }

  FlushExecutor* executor() { return executor_.get(); }
  NodeId id() const { return id_; }

  // Test hook: next delegation requests fail as if dropped.
  void FailNextDelegations(int count) { fail_delegations_ = count; }

 private:
  struct HostedNode {
    uint64_t in_shard_offset;
    uint32_t links_begin;
    uint8_t height;  // levels [0, height]
    uint8_t shard;
  };

  struct HostedMemtable {
    NodeId owner;
    uint32_t owner_incarnation = 1;
    TransferRecord record;
    RemoteRegion kv_region;
    RemoteRegion index_region;
    bool searchable = false;
    std::string kv_bytes;  // snapshot of the staging region
    std::vector<HostedNode> nodes;
    std::vector<uint32_t> links;
    uint32_t head_links[Memtable::kMaxHeight];
    std::vector<std::string> blooms;  // one per shard block
    SequenceNumber min_seq = 0;
    SequenceNumber max_seq = 0;

    Slice TupleAt(uint32_t node_index, DecodedTuple* tuple) const;
    // First node >= (key, seq); returns node index or UINT32_MAX.
    uint32_t Seek(const Slice& key, SequenceNumber seq, uint64_t* hops) const;
    uint64_t ShardStride() const { return record.kv_stride; }
  };

  void HandleDelegation(NodeId src, const DelegationRequest& req);
  void HandleScan(NodeId src, const DelegationScanRequest& req);
  void FinishWorker();
  DelegationReply ExecuteGet(const DelegationRequest& req) const;
  DelegationScanReply ExecuteScan(const DelegationScanRequest& req) const;
  Status ParseIndex(HostedMemtable* hosted) const;

  Fabric* fabric_;
  NodeId id_;
  int worker_pool_size_;
  int busy_workers_ = 0;
  uint64_t delegated_gets_ = 0;
  int fail_delegations_ = 0;
  std::map<uint64_t, HostedMemtable> hosted_;

  struct PendingWork {
    NodeId from;
    bool is_scan;
    DelegationRequest get;
    DelegationScanRequest scan;
  };
  std::deque<PendingWork> work_queue_;
  std::unique_ptr<FlushExecutor> executor_;
};

}  // namespace farlsm
