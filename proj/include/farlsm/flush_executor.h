// Copyright (c) 2026 The farlsm Authors. All rights reserved.
// Use of this source code is governed by a BSD-style license that can be
// found in the LICENSE file.

#pragma once

#include <deque>
#include <functional>
#include <map>
#include <vector>

#include "farlsm/fabric.h"
#include "farlsm/flush_package.h"
#include "farlsm/message.h"
#include "farlsm/sst.h"

namespace farlsm {

enum class FlushPhase : uint8_t { kFetch, kBuild, kDsWrite, kCommit };

enum class FaultAction : uint8_t { kNone, kAbort, kCrash };

// Payload of COMMIT: the produced file metadata.
struct CommitPayload {
  uint32_t attempt = 0;
  std::vector<SstMeta> files;

  std::string Encode() const;
  static Status Decode(Slice input, CommitPayload* out);
};

// Payload of the post-ACCEPT package transfer.
struct PackageTransfer {
  uint32_t attempt = 0;
  std::string package;  // FlushMetadataPackage::Encode()

  std::string Encode() const;
  static Status Decode(Slice input, PackageTransfer* out);
};

// Runs assigned flush jobs on any node: fetches the referenced KV-shard
// blocks from DM (one-sided reads; local reads when this node hosts them),
// merges newest-wins in sequence order, builds the SST and writes it
// durably to DS before emitting COMMIT. Failures before durability ABORT
// with nothing published.
class FlushExecutor {
 public:
  struct JobStats {
    uint64_t job_id = 0;
    SimTime fetch_ns = 0;  // metadata/block fetch (FM)
    SimTime flush_ns = 0;  // merge + build + DS write (Flush)
    uint64_t bytes_in = 0;
    uint64_t bytes_out = 0;
  };

  FlushExecutor(Fabric* fabric, NodeId self, int pool_size);

  void SetDsNodes(std::vector<NodeId> ds) { ds_nodes_ = std::move(ds); }
  void SetScheduler(NodeId scheduler) { scheduler_ = scheduler; }
  void SetFaultHook(
      std::function<FaultAction(NodeId, uint64_t, FlushPhase)> hook) {
    fault_hook_ = std::move(hook);
  }
  void SetStatsSink(std::function<void(const JobStats&)> sink) {
    stats_sink_ = std::move(sink);
  }

  // Returns true when the message was consumed.
  bool OnMessage(NodeId src, uint16_t kind, const std::string& payload);

  // Undeliverable DS write: fail the pending job so it aborts rather than
  // hanging a pool slot until the scheduler timeout.
  bool OnUndeliverable(NodeId dst, uint16_t kind, const std::string& payload);

  void Reset();

  // Telemetry inputs for the scheduler cost model.
  double u_cpu() const {
    return pool_size_ == 0 ? 1.0
                           : static_cast<double>(active_) / pool_size_;
  }
  double u_queue() const {
    return queue_.empty() ? 0.0
                          : std::min(1.0, queue_.size() /
                                              static_cast<double>(kMaxQueue));
  }
  // DS write throughput over the trailing window relative to the link peak.
  double u_io() const;

  int active_jobs() const { return active_; }

 private:
  static constexpr size_t kMaxQueue = 16;

  struct Job {
    uint64_t job_id = 0;
    uint32_t attempt = 0;
    FlushMetadataPackage package;
    SimTime fetch_start = 0;
    SimTime fetch_done = 0;
    uint64_t bytes_in = 0;
  };

  void StartNext();
  void Execute(Job job);
  void MergeAndBuild(Job job, std::vector<std::string> blocks);
  void WriteToDs(Job job, std::string file_bytes, SstMeta meta);
  void SendCommit(const Job& job, const SstMeta& meta);
  void SendAbort(const Job& job, Status::Code reason);
  FaultAction Fault(uint64_t job_id, FlushPhase phase);
  void NoteDsWrite(uint64_t bytes);

  Fabric* fabric_;
  NodeId self_;
  int pool_size_;
  int active_ = 0;
  NodeId scheduler_;
  std::vector<NodeId> ds_nodes_;
  std::deque<Job> queue_;
  std::function<FaultAction(NodeId, uint64_t, FlushPhase)> fault_hook_;
  std::function<void(const JobStats&)> stats_sink_;
  std::map<uint64_t, std::function<void(Status, uint64_t)>> pending_ds_acks_;
  std::deque<std::pair<SimTime, uint64_t>> recent_ds_writes_;
  uint64_t next_cookie_ = 1;
};

}  // namespace farlsm
