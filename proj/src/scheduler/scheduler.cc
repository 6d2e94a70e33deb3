// Copyright (c) 2026 The farlsm Authors. All rights reserved.
// Use of this source code is governed by a BSD-style license that can be
// found in the LICENSE file.

#include "farlsm/scheduler.h"

#include <algorithm>
#include <cassert>

#include "farlsm/coding.h"
#include "farlsm/crc32c.h"
#include "farlsm/flush_executor.h"

namespace farlsm {

namespace {
double Clamp01(double v) { return v < 0 ? 0 : (v > 1 ? 1 : v); }
constexpr double kBytesPerMb = 1024.0 * 1024.0;
}  // namespace

double LoadFactor(const LoadTelemetry& t, const SchedulerWeights& w) {
  return w.w_cpu * Clamp01(t.u_cpu) + w.w_io * Clamp01(t.u_io) +
         w.w_queue * Clamp01(t.u_queue);
}

Status LoadFactorChecked(const LoadTelemetry& t, const SchedulerWeights& w,
                         SimTime now, SimTime freshness_window, double* out) {
  if (t.reported_at + freshness_window < now) {
    return Status::StaleTelemetry(t.node.ToString());
  }
  *out = LoadFactor(t, w);
  return Status::OK();
}

double AssignmentCost(double job_megabytes, double load) {
  return job_megabytes * (1.0 + load);
}

const char* ExecutionModeName(ExecutionMode mode) {
  switch (mode) {
    case ExecutionMode::kLocal: return "local";
    case ExecutionMode::kInDm: return "in-dm";
    case ExecutionMode::kRemoteCn: return "remote-cn";
  }
  return "?";
}

Status SelectExecutor(double job_megabytes, NodeId owner,
                      const std::vector<LoadTelemetry>& pool,
                      const SchedulerWeights& weights, SimTime now,
                      SimTime freshness_window, ExecutorChoice* out) {
  bool found = false;
  ExecutorChoice best{};
  for (const LoadTelemetry& t : pool) {
    double load = 0;
    if (!LoadFactorChecked(t, weights, now, freshness_window, &load).ok()) {
      continue;
    }
    double cost = AssignmentCost(job_megabytes, load);
    bool better = false;
    if (!found || cost < best.cost) {
      better = true;
    } else if (cost == best.cost) {
      // Tie: prefer the owner (local execution), else the lower NodeId.
      if (t.node == owner && best.node != owner) {
        better = true;
      } else if (best.node != owner && t.node < best.node) {
        better = true;
      }
    }
    if (better) {
      best.node = t.node;
      best.cost = cost;
      found = true;
    }
  }
  if (!found) return Status::NoEligibleExecutor();
  if (best.node == owner) {
    best.mode = ExecutionMode::kLocal;
  } else if (best.node.kind == NodeKind::kDm) {
    best.mode = ExecutionMode::kInDm;
  } else {
    best.mode = ExecutionMode::kRemoteCn;
  }
  *out = best;
  return Status::OK();
}

SchedulerLog::SchedulerLog(Env* env, std::string path)
    : env_(env), path_(std::move(path)) {}

Status SchedulerLog::Append(const SchedulerLogRecord& record) {
  if (file_ == nullptr) {
    Status s = env_->NewAppendFile(path_, &file_);
    if (!s.ok()) return s;
  }
  std::string body;
  PutByte(&body, static_cast<uint8_t>(record.kind));
  PutFixed64(&body, record.job_id);
  PutFixed32(&body, record.executor.Encoded());
  PutFixed32(&body, record.package_digest);
  PutFixed32(&body, record.attempt);
  PutLengthPrefixedSlice(&body, record.payload);

  std::string framed;
  PutFixed32(&framed, static_cast<uint32_t>(body.size()));
  PutFixed32(&framed, crc32c::Mask(crc32c::Value(body.data(), body.size())));
  framed.append(body);
  Status s = file_->Append(framed);
  if (!s.ok()) return s;
  return file_->Sync();  // durable before the covered message is sent
}

Status SchedulerLog::Read(Env* env, const std::string& path,
                          std::vector<SchedulerLogRecord>* out) {
  out->clear();
  std::string contents;
  Status s = env->ReadFile(path, &contents);
  if (s.code() == Status::Code::kFileNotFound) return Status::OK();
  if (!s.ok()) return s;

  Slice in(contents);
  while (in.size() >= 8) {
    uint32_t len, crc;
    Slice peek = in;
    GetFixed32(&peek, &len);
    GetFixed32(&peek, &crc);
    if (peek.size() < len) break;  // torn tail: truncate
    Slice body(peek.data(), len);
    if (crc32c::Unmask(crc) != crc32c::Value(body.data(), body.size())) {
      break;  // corrupt tail record: honor prior records only
    }
    SchedulerLogRecord record;
    uint8_t kind;
    uint32_t executor_code;
    Slice payload;
    if (!GetByte(&body, &kind) || !GetFixed64(&body, &record.job_id) ||
        !GetFixed32(&body, &executor_code) ||
        !GetFixed32(&body, &record.package_digest) ||
        !GetFixed32(&body, &record.attempt) ||
        !GetLengthPrefixedSlice(&body, &payload)) {
      break;
    }
    record.kind = static_cast<SchedulerLogRecord::Kind>(kind);
    record.executor = NodeId::Decode(executor_code);
    record.payload = payload.ToString();
    out->push_back(std::move(record));
    in.remove_prefix(8 + len);
  }
  return Status::OK();
}

Scheduler::Scheduler(Fabric* fabric, NodeId id, Env* env, std::string log_path,
                     SchedulerConfig config)
    : fabric_(fabric),
      id_(id),
      config_(config),
      log_(env, log_path),
      env_(env),
      log_path_(std::move(log_path)) {
  fabric_->BindHandler(id_, this);
}

void Scheduler::Start() {
  // Periodic liveness sweep: jobs assigned to nodes that stopped
  // heartbeating are recovered by their timeout timers; the sweep itself
  // only keeps dispatch moving when telemetry freshens.
  fabric_->ScheduleFor(
      id_, config_.heartbeat_interval,
      [this]() {
        TryDispatch();
        Start();
      },
      /*background=*/true);
}

void Scheduler::OnRestart() {
  jobs_.clear();
  queue_.clear();
  pool_.clear();
  dispatch_scheduled_ = false;
  Recover();
  Start();
}

Status Scheduler::Recover() {
  std::vector<SchedulerLogRecord> records;
  Status s = SchedulerLog::Read(env_, log_path_, &records);
  if (!s.ok()) return s;

  for (const SchedulerLogRecord& record : records) {
    switch (record.kind) {
      case SchedulerLogRecord::Kind::kJobEnqueued: {
        JobState job;
        job.job_id = record.job_id;
        job.digest = record.package_digest;
        Slice payload(record.payload);
        uint32_t owner_code, owner_inc;
        if (GetFixed32(&payload, &owner_code) &&
            GetFixed32(&payload, &owner_inc)) {
          job.owner = NodeId::Decode(owner_code);
          job.owner_incarnation = owner_inc;
        }
        job.phase = Phase::kQueued;
        jobs_[record.job_id] = std::move(job);
        break;
      }
      case SchedulerLogRecord::Kind::kJobAssigned: {
        auto it = jobs_.find(record.job_id);
        if (it != jobs_.end()) {
          it->second.phase = Phase::kAssigned;
          it->second.executor = record.executor;
          it->second.attempt = record.attempt;
        }
        break;
      }
      case SchedulerLogRecord::Kind::kCommitReceived: {
        auto it = jobs_.find(record.job_id);
        if (it != jobs_.end()) {
          it->second.phase = Phase::kCommitted;
          it->second.commit_payload = record.payload;
          it->second.winning_attempt = record.attempt;
        }
        break;
      }
      case SchedulerLogRecord::Kind::kJobFinalized: {
        jobs_.erase(record.job_id);
        break;
      }
      case SchedulerLogRecord::Kind::kJobParked: {
        auto it = jobs_.find(record.job_id);
        if (it != jobs_.end()) it->second.phase = Phase::kParked;
        break;
      }
    }
  }

  // Post-crash policy: resume recorded COMMITs; discard incomplete jobs and
  // force owners to retry.
  std::vector<uint64_t> to_discard;
  for (auto& [job_id, job] : jobs_) {
    if (job.phase == Phase::kCommitted) {
      ForwardCommit(&job);
    } else if (job.phase != Phase::kParked) {
      to_discard.push_back(job_id);
    }
  }
  for (uint64_t job_id : to_discard) {
    auto it = jobs_.find(job_id);
    if (it != jobs_.end()) DiscardJob(&it->second, /*notify_owner=*/true);
  }
  return Status::OK();
}

void Scheduler::DiscardJob(JobState* job, bool notify_owner) {
  // Any stray output of a discarded job is garbage on DS.
  GcJobFiles(job->job_id, /*keep_attempt=*/0xffffffffu);
  if (notify_owner) {
    std::string payload;
    PutFixed64(&payload, job->job_id);
    fabric_->Send(id_, job->owner, kRePrepareMsg, payload);
  }
  uint64_t id = job->job_id;
  queue_.erase(std::remove(queue_.begin(), queue_.end(), id), queue_.end());
  jobs_.erase(id);
}

void Scheduler::GcJobFiles(uint64_t job_id, uint32_t keep_attempt) {
  for (NodeId ds : ds_nodes_) {
    std::string payload;  // DsRequest with file_number 0 => job GC
    PutFixed64(&payload, 0);
    PutFixed64(&payload, 0);
    PutFixed64(&payload, 0);
    PutFixed32(&payload, 0);
    PutFixed32(&payload, keep_attempt);
    PutFixed64(&payload, job_id);
    fabric_->Send(id_, ds, kDeleteSstMsg, payload);
  }
}

void Scheduler::PurgeOwnerJobs(NodeId owner, uint32_t stale_incarnation) {
  std::vector<uint64_t> stale;
  for (auto& [job_id, job] : jobs_) {
    if (job.owner == owner && job.owner_incarnation <= stale_incarnation &&
        job.phase != Phase::kCommitted && job.phase != Phase::kFinalized) {
      stale.push_back(job_id);
    }
  }
  for (uint64_t job_id : stale) {
    auto it = jobs_.find(job_id);
    if (it != jobs_.end()) DiscardJob(&it->second, /*notify_owner=*/false);
  }
  // Tell DM nodes to drop anything the dead incarnation left behind.
  for (NodeId dm : dm_nodes_) {
    std::string payload;
    PutFixed32(&payload, owner.Encoded());
    PutFixed32(&payload, stale_incarnation);
    fabric_->Send(id_, dm, kPurgeOwnerMsg, payload);
  }
}

void Scheduler::OnMessage(NodeId src, uint16_t kind,
                          const std::string& payload) {
  switch (kind) {
    case kControlMsg: {
      ControlMessage msg;
      if (!ControlMessage::Decode(Slice(payload), &msg).ok()) return;
      switch (msg.kind) {
        case ControlKind::kPrepare: HandlePrepare(src, msg); return;
        case ControlKind::kAccept: HandleAccept(src, msg); return;
        case ControlKind::kCommit: HandleCommit(src, msg); return;
        case ControlKind::kAbort: HandleAbort(src, msg); return;
        case ControlKind::kAck: HandleAck(src, msg); return;
        default: return;
      }
    }
    case kHeartbeatMsg: {
      HeartbeatMsg hb;
      if (!HeartbeatMsg::Decode(Slice(payload), &hb).ok()) return;
      HandleHeartbeat(src, hb);
      return;
    }
    default:
      return;
  }
}

void Scheduler::OnUndeliverable(NodeId dst, uint16_t kind,
                                const std::string& payload) {
  if (kind != kControlMsg) return;
  ControlMessage msg;
  if (!ControlMessage::Decode(Slice(payload), &msg).ok()) return;
  auto it = jobs_.find(msg.job_id);
  if (it == jobs_.end()) return;
  if (msg.kind == ControlKind::kCommit && it->second.phase == Phase::kCommitted) {
    // Owner unreachable: retry the finalize forward until it re-registers.
    uint64_t job_id = msg.job_id;
    fabric_->ScheduleFor(id_, config_.heartbeat_interval, [this, job_id]() {
      auto it = jobs_.find(job_id);
      if (it != jobs_.end() && it->second.phase == Phase::kCommitted) {
        ForwardCommit(&it->second);
      }
    });
  }
  // An undeliverable ASSIGN means the executor died before delivery; the
  // timeout path reassigns.
  (void)dst;
}

void Scheduler::HandlePrepare(NodeId src, const ControlMessage& msg) {
  if (jobs_.count(msg.job_id) != 0) return;  // duplicate PREPARE

  FlushMetadataPackage package;
  if (!FlushMetadataPackage::Decode(Slice(msg.payload), &package).ok()) {
    return;
  }
  JobState job;
  job.job_id = msg.job_id;
  job.owner = src;
  job.owner_incarnation = package.owner_incarnation;
  job.package = msg.payload;
  job.megabytes = package.TotalBytes() / kBytesPerMb;
  job.digest = package.Digest();
  job.phase = Phase::kQueued;

  SchedulerLogRecord record;
  record.kind = SchedulerLogRecord::Kind::kJobEnqueued;
  record.job_id = msg.job_id;
  record.package_digest = job.digest;
  PutFixed32(&record.payload, src.Encoded());
  PutFixed32(&record.payload, package.owner_incarnation);
  log_.Append(record);

  jobs_[msg.job_id] = std::move(job);
  queue_.push_back(msg.job_id);
  TryDispatch();
}

void Scheduler::TryDispatch() {
  while (!queue_.empty()) {
    uint64_t job_id = queue_.front();
    auto it = jobs_.find(job_id);
    if (it == jobs_.end()) {
      queue_.pop_front();
      continue;
    }
    JobState* job = &it->second;

    std::vector<LoadTelemetry> pool = PoolSnapshot();
    ExecutorChoice choice;
    Status s = SelectExecutor(job->megabytes, job->owner, pool,
                              config_.weights, fabric_->now(),
                              config_.freshness_window, &choice);
    if (!s.ok()) {
      // Telemetry stale everywhere or empty pool: retry shortly, keeping
      // the job queued (FIFO order preserved).
      if (!dispatch_scheduled_) {
        dispatch_scheduled_ = true;
        fabric_->ScheduleFor(id_, 10 * kMillisecond, [this]() {
          dispatch_scheduled_ = false;
          TryDispatch();
        });
      }
      return;
    }

    queue_.pop_front();
    job->executor = choice.node;
    job->mode = choice.mode;
    job->attempt++;
    job->phase = Phase::kAssigned;
    dispatch_count_++;

    SchedulerLogRecord record;
    record.kind = SchedulerLogRecord::Kind::kJobAssigned;
    record.job_id = job->job_id;
    record.executor = choice.node;
    record.attempt = job->attempt;
    record.package_digest = job->digest;
    log_.Append(record);

    ControlMessage assign;
    assign.kind = ControlKind::kAssign;
    assign.job_id = job->job_id;
    fabric_->Send(id_, choice.node, kControlMsg, assign.Encode());
    ArmTimeout(job, config_.assign_timeout);
  }
}

void Scheduler::ArmTimeout(JobState* job, SimTime delay) {
  uint64_t job_id = job->job_id;
  uint64_t epoch = ++job->timeout_epoch;
  uint32_t attempt = job->attempt;
  fabric_->ScheduleFor(id_, delay, [this, job_id, epoch, attempt]() {
    auto it = jobs_.find(job_id);
    if (it == jobs_.end()) return;
    JobState* job = &it->second;
    if (job->timeout_epoch != epoch || job->attempt != attempt) return;
    if (job->phase != Phase::kAssigned && job->phase != Phase::kExecuting) {
      return;
    }
    // Executor silent: reassign through the same path as an explicit ABORT.
    reassign_count_++;
    if (job->attempt >= config_.max_attempts) {
      Park(job);
    } else {
      RequeueFront(job_id);
    }
  });
}

void Scheduler::RequeueFront(uint64_t job_id) {
  auto it = jobs_.find(job_id);
  if (it == jobs_.end()) return;
  it->second.phase = Phase::kQueued;
  queue_.push_front(job_id);
  TryDispatch();
}

void Scheduler::Park(JobState* job) {
  job->phase = Phase::kParked;
  parked_count_++;
  SchedulerLogRecord record;
  record.kind = SchedulerLogRecord::Kind::kJobParked;
  record.job_id = job->job_id;
  record.attempt = job->attempt;
  log_.Append(record);
  if (alert_sink_) alert_sink_(job->job_id);
}

void Scheduler::HandleAccept(NodeId src, const ControlMessage& msg) {
  auto it = jobs_.find(msg.job_id);
  if (it == jobs_.end()) return;
  JobState* job = &it->second;
  if (job->phase != Phase::kAssigned || src != job->executor) return;
  job->phase = Phase::kExecuting;

  // Post-ACCEPT package forward (data plane).
  PackageTransfer transfer;
  transfer.attempt = job->attempt;
  transfer.package = job->package;
  fabric_->Send(id_, src, kPackageTransferMsg, transfer.Encode());
  ArmTimeout(job, config_.execution_timeout);
}

void Scheduler::HandleCommit(NodeId src, const ControlMessage& msg) {
  auto it = jobs_.find(msg.job_id);
  if (it == jobs_.end()) {
    // COMMIT for a job discarded at recovery: its output is garbage; the
    // owner re-prepared the work under a new job id.
    CommitPayload payload;
    if (CommitPayload::Decode(Slice(msg.payload), &payload).ok()) {
      GcJobFiles(msg.job_id, 0xffffffffu);
    }
    return;
  }
  JobState* job = &it->second;
  if (job->phase == Phase::kCommitted || job->phase == Phase::kFinalized) {
    return;  // duplicate COMMIT (late attempt); winner already recorded
  }
  CommitPayload payload;
  if (!CommitPayload::Decode(Slice(msg.payload), &payload).ok()) return;

  job->phase = Phase::kCommitted;
  job->commit_payload = msg.payload;
  job->winning_attempt = payload.attempt;
  job->timeout_epoch++;  // cancel execution timers

  SchedulerLogRecord record;
  record.kind = SchedulerLogRecord::Kind::kCommitReceived;
  record.job_id = msg.job_id;
  record.executor = src;
  record.attempt = payload.attempt;
  record.payload = msg.payload;
  log_.Append(record);

  ForwardCommit(job);
  TryDispatch();
}

void Scheduler::ForwardCommit(JobState* job) {
  ControlMessage forward;
  forward.kind = ControlKind::kCommit;
  forward.job_id = job->job_id;
  forward.payload = job->commit_payload;
  fabric_->Send(id_, job->owner, kControlMsg, forward.Encode());
}

void Scheduler::HandleAbort(NodeId src, const ControlMessage& msg) {
  auto it = jobs_.find(msg.job_id);
  if (it == jobs_.end()) return;
  JobState* job = &it->second;
  if (job->phase != Phase::kAssigned && job->phase != Phase::kExecuting) {
    return;
  }
  if (src != job->executor) return;
  job->timeout_epoch++;
  reassign_count_++;
  if (job->attempt >= config_.max_attempts) {
    Park(job);
  } else {
    // Head of queue: minimizes staleness of its WAL dependency.
    RequeueFront(msg.job_id);
  }
}

void Scheduler::HandleAck(NodeId src, const ControlMessage& msg) {
  auto it = jobs_.find(msg.job_id);
  if (it == jobs_.end()) return;
  JobState* job = &it->second;
  if (src != job->owner) return;

  SchedulerLogRecord record;
  record.kind = SchedulerLogRecord::Kind::kJobFinalized;
  record.job_id = msg.job_id;
  record.attempt = job->winning_attempt;
  log_.Append(record);

  // Losing attempts' files are garbage now that the winner is installed.
  GcJobFiles(msg.job_id, job->winning_attempt);
  jobs_.erase(it);
  TryDispatch();
}

void Scheduler::HandleHeartbeat(NodeId src, const HeartbeatMsg& hb) {
  ExecutorInfo& info = pool_[src];
  if (info.incarnation != 0 && hb.incarnation > info.incarnation &&
      src.kind == NodeKind::kCompute) {
    // The node came back as a new incarnation: purge state its previous
    // life left behind (stale DM residents, in-flight jobs).
    PurgeOwnerJobs(src, hb.incarnation - 1);
  }
  info.incarnation = hb.incarnation;
  info.last_heartbeat = fabric_->now();
  info.telemetry.node = src;
  info.telemetry.u_cpu = hb.u_cpu;
  info.telemetry.u_io = hb.u_io;
  info.telemetry.u_queue = hb.u_queue;
  info.telemetry.reported_at = fabric_->now();
  TryDispatch();
}

std::vector<LoadTelemetry> Scheduler::PoolSnapshot() const {
  std::vector<LoadTelemetry> pool;
  SimTime now = fabric_->now();
  for (const auto& [node, info] : pool_) {
    // A node missing 2 consecutive heartbeats gets no new assignments.
    if (info.last_heartbeat + config_.freshness_window < now) continue;
    if (!fabric_->IsUp(node)) continue;
    pool.push_back(info.telemetry);
  }
  return pool;
}

std::optional<ExecutionMode> Scheduler::JobMode(uint64_t job_id) const {
  auto it = jobs_.find(job_id);
  if (it == jobs_.end()) return std::nullopt;
  return it->second.mode;
}

}  // namespace farlsm
