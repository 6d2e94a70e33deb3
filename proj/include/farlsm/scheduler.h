// Copyright (c) 2026 The farlsm Authors. All rights reserved.
// Use of this source code is governed by a BSD-style license that can be
// found in the LICENSE file.

#pragma once

#include <deque>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <vector>

#include "farlsm/env.h"
#include "farlsm/fabric.h"
#include "farlsm/flush_package.h"
#include "farlsm/message.h"

namespace farlsm {

// Per-node utilization signals feeding the placement cost model. Ratios are
// clamped to [0,1]; telemetry older than the freshness window disqualifies
// the node.
struct LoadTelemetry {
  NodeId node;
  double u_cpu = 0;
  double u_io = 0;
  double u_queue = 0;
  SimTime reported_at = 0;
};

struct SchedulerWeights {
  double w_cpu = 1.0;
  double w_io = 1.0;
  double w_queue = 1.0;
};

// load = w_cpu*u_cpu + w_io*u_io + w_queue*u_queue over clamped ratios.
double LoadFactor(const LoadTelemetry& t, const SchedulerWeights& w);

// Freshness-checked variant used by the dispatch path.
Status LoadFactorChecked(const LoadTelemetry& t, const SchedulerWeights& w,
                         SimTime now, SimTime freshness_window, double* out);

// cost = bytes * (1 + load), with bytes expressed in megabytes.
double AssignmentCost(double job_megabytes, double load);

enum class ExecutionMode : uint8_t { kLocal, kInDm, kRemoteCn };

const char* ExecutionModeName(ExecutionMode mode);

struct ExecutorChoice {
  NodeId node;
  ExecutionMode mode;
  double cost;
};

// Greedy argmin of AssignmentCost over eligible candidates. Ties prefer the
// job's owner (Local mode), then the lower NodeId.
Status SelectExecutor(double job_megabytes, NodeId owner,
                      const std::vector<LoadTelemetry>& pool,
                      const SchedulerWeights& weights, SimTime now,
                      SimTime freshness_window, ExecutorChoice* out);

// Append-only scheduler log; every record is fsynced before the message it
// covers is sent.
struct SchedulerLogRecord {
  enum class Kind : uint8_t {
    kJobEnqueued = 1,
    kJobAssigned = 2,
    kCommitReceived = 3,
    kJobFinalized = 4,
    kJobParked = 5,
  };
  Kind kind = Kind::kJobEnqueued;
  uint64_t job_id = 0;
  NodeId executor;
  uint32_t package_digest = 0;
  uint32_t attempt = 0;
  std::string payload;  // owner id for enqueue; commit payload for commits
};

class SchedulerLog {
 public:
  SchedulerLog(Env* env, std::string path);

  Status Append(const SchedulerLogRecord& record);  // appends + fsync
  // Replays all intact records; a torn tail is ignored (CorruptLog
  // truncation contract).
  static Status Read(Env* env, const std::string& path,
                     std::vector<SchedulerLogRecord>* out);

 private:
  Env* env_;
  std::string path_;
  std::unique_ptr<AppendFile> file_;
};

struct SchedulerConfig {
  SimTime heartbeat_interval = 100 * kMillisecond;
  SimTime freshness_window = 200 * kMillisecond;  // 2 heartbeat intervals
  SimTime assign_timeout = 500 * kMillisecond;
  SimTime execution_timeout = 10 * kSecond;
  uint32_t max_attempts = 5;
  SchedulerWeights weights;
};

// Logically centralized flush scheduler: executor pool with heartbeat
// liveness, FIFO job queue, cost-model placement, timeout-driven
// reassignment and crash recovery from the persistent log.
class Scheduler : public MessageHandler {
 public:
  Scheduler(Fabric* fabric, NodeId id, Env* env, std::string log_path,
            SchedulerConfig config = SchedulerConfig());

  void SetDsNodes(std::vector<NodeId> ds) { ds_nodes_ = std::move(ds); }
  void SetDmNodes(std::vector<NodeId> dm) { dm_nodes_ = std::move(dm); }

  void OnMessage(NodeId src, uint16_t kind, const std::string& payload) override;
  void OnUndeliverable(NodeId dst, uint16_t kind,
                       const std::string& payload) override;
  void OnRestart() override;

  // Replays the persistent log: resumes recorded COMMITs, discards
  // incomplete jobs and notifies owners to re-PREPARE.
  Status Recover();

  void Start();  // begins liveness sweeps

  // Introspection for tests and metrics.
  size_t queue_depth() const { return queue_.size(); }
  size_t tracked_jobs() const { return jobs_.size(); }
  uint64_t parked_jobs() const { return parked_count_; }
  uint64_t dispatches() const { return dispatch_count_; }
  uint64_t reassignments() const { return reassign_count_; }
  std::optional<ExecutionMode> JobMode(uint64_t job_id) const;
  std::vector<LoadTelemetry> PoolSnapshot() const;

  // Operator alert hook (job parked after max attempts).
  void SetAlertSink(std::function<void(uint64_t)> sink) {
    alert_sink_ = std::move(sink);
  }

 private:
  enum class Phase : uint8_t {
    kQueued,
    kAssigned,
    kExecuting,  // ACCEPT seen, package sent
    kCommitted,
    kFinalized,
    kParked,
  };

  struct JobState {
    uint64_t job_id = 0;
    NodeId owner;
    uint32_t owner_incarnation = 1;
    Phase phase = Phase::kQueued;
    NodeId executor;
    ExecutionMode mode = ExecutionMode::kLocal;
    uint32_t attempt = 0;
    uint64_t timeout_epoch = 0;  // invalidates stale timers
    std::string package;         // encoded
    double megabytes = 0;
    uint32_t digest = 0;
    std::string commit_payload;
    uint32_t winning_attempt = 0;
  };

  struct ExecutorInfo {
    LoadTelemetry telemetry;
    SimTime last_heartbeat = 0;
    uint32_t incarnation = 0;
  };

  void HandlePrepare(NodeId src, const ControlMessage& msg);
  void HandleAccept(NodeId src, const ControlMessage& msg);
  void HandleCommit(NodeId src, const ControlMessage& msg);
  void HandleAbort(NodeId src, const ControlMessage& msg);
  void HandleAck(NodeId src, const ControlMessage& msg);
  void HandleHeartbeat(NodeId src, const HeartbeatMsg& hb);

  void TryDispatch();
  void ArmTimeout(JobState* job, SimTime delay);
  void RequeueFront(uint64_t job_id);
  void Park(JobState* job);
  void ForwardCommit(JobState* job);
  void GcJobFiles(uint64_t job_id, uint32_t keep_attempt);
  void DiscardJob(JobState* job, bool notify_owner);
  void PurgeOwnerJobs(NodeId owner, uint32_t stale_incarnation);

  Fabric* fabric_;
  NodeId id_;
  SchedulerConfig config_;
  SchedulerLog log_;
  Env* env_;
  std::string log_path_;

  std::map<uint64_t, JobState> jobs_;
  std::deque<uint64_t> queue_;
  std::map<NodeId, ExecutorInfo> pool_;
  std::vector<NodeId> ds_nodes_;
  std::vector<NodeId> dm_nodes_;
  uint64_t parked_count_ = 0;
  uint64_t dispatch_count_ = 0;
  uint64_t reassign_count_ = 0;
  bool dispatch_scheduled_ = false;
  std::function<void(uint64_t)> alert_sink_;
};

}  // namespace farlsm
