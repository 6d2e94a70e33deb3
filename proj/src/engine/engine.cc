// Copyright (c) 2026 The farlsm Authors. All rights reserved.
// Use of this source code is governed by a BSD-style license that can be
// found in the LICENSE file.

#include "farlsm/engine.h"

#include <algorithm>
#include <cassert>

#include "farlsm/ds_node.h"
#include "engine_internal.h"

namespace farlsm {

Engine::Engine(Fabric* fabric, NodeId self, const EngineConfig& config,
               EngineServices services, Env* env)
    : fabric_(fabric),
      self_(self),
      config_(config),
      services_(std::move(services)),
      env_(env),
      address_space_(0x100000 + (uint64_t)self.index * (1ull << 40)) {
  fabric_->BindHandler(self_, this);
}

Engine::~Engine() = default;

bool Engine::idle() const {
  return local_immutables_.empty() && offloading_.empty() &&
         pending_jobs_.empty() && background_jobs_ == 0 &&
         commit_ready_.empty();
}

FaultAction Engine::Fault(EnginePhase phase, uint64_t detail) {
  if (!fault_hook_) return FaultAction::kNone;
  FaultAction action = fault_hook_(phase, detail);
  if (action == FaultAction::kCrash) fabric_->CrashNode(self_);
  return action;
}

Status Engine::Open() {
  incarnation_ = fabric_->Incarnation(self_);
  cache_ = std::make_unique<KeyOffsetCache>(config_.key_offset_cache_bytes);
  executor_ = std::make_unique<FlushExecutor>(fabric_, self_,
                                              config_.flush_pool_size);
  executor_->SetDsNodes(services_.ds_nodes);
  if (services_.has_scheduler) executor_->SetScheduler(services_.scheduler);
  manifest_ = std::make_unique<ManifestWriter>(env_, "MANIFEST");

  Status s = RecoverFromStorage();
  if (!s.ok()) return s;

  if (active_ == nullptr) {
    s = RotateMemtable();
    if (!s.ok()) return s;
  }
  open_ = true;
  StartHeartbeats();
  SendHeartbeat();
  return Status::OK();
}

Status Engine::RecoverFromStorage() {
  Status s = ReadManifest(env_, "MANIFEST", &versions_);
  if (!s.ok()) return s;
  last_seq_ = versions_.last_seq;

  std::vector<std::string> wal_files;
  s = env_->ListFiles("wal-", &wal_files);
  if (!s.ok()) return s;
  std::sort(wal_files.begin(), wal_files.end());  // memtable id order

  ShardConfig shards{config_.shard_bits};
  struct Replay {
    std::string file;
    uint64_t memtable_id;
    std::vector<WalRecord> records;
  };
  std::vector<Replay> replays;
  for (const std::string& file : wal_files) {
    Replay r;
    r.file = file;
    r.memtable_id = strtoull(file.c_str() + 4, nullptr, 10);
    Status rs = ReadWal(env_, file, &r.records);
    if (!rs.ok()) return rs;
    replays.push_back(std::move(r));
  }

  // Replay unflushed records into fresh memtables, re-logging as we go; the
  // old WAL files are deleted once the replacement is durable.
  for (const Replay& r : replays) {
    for (const WalRecord& record : r.records) {
      uint32_t shard = ShardOf(record.key, shards);
      if (versions_.flushed_shards.count({r.memtable_id, shard}) != 0) {
        continue;  // already durable in DS
      }
      if (record.seq <= versions_.last_seq &&
          versions_.flushed_shards.count({r.memtable_id, shard}) != 0) {
        continue;
      }
      if (active_ == nullptr) {
        Status rs = RotateMemtable();
        if (!rs.ok()) return rs;
      }
      Status ps = active_->Put(record.key, record.value, record.seq,
                               record.tombstone);
      if (ps.IsMemtableFull()) {
        Status rs = RotateMemtable();
        if (!rs.ok()) return rs;
        ps = active_->Put(record.key, record.value, record.seq,
                          record.tombstone);
      }
      if (!ps.ok()) return ps;
      WalRecord relog = record;
      wal_->Append(relog);
      last_seq_ = std::max(last_seq_, record.seq);
    }
  }
  if (wal_ != nullptr) {
    s = wal_->Sync();
    if (!s.ok()) return s;
  }
  for (const Replay& r : replays) {
    env_->DeleteFile(r.file);
  }
  next_memtable_id_ = std::max<uint64_t>(next_memtable_id_, 1);
  return Status::OK();
}

// --- write path -----------------------------------------------------------

void Engine::WriteAsync(const Slice& key, const Slice& value, bool tombstone,
                        WriteCallback done) {
  if (!open_) {
    done(Status::InvalidState("engine not open"), 0);
    return;
  }
  Waiter waiter{key.ToString(), value.ToString(), tombstone, std::move(done)};
  HandleWrite(std::move(waiter));
}

void Engine::HandleWrite(Waiter waiter) {
  if (stall_mode_ == StallMode::kStopped) {
    stall_waiters_.push_back(std::move(waiter));
    return;
  }
  if (stall_mode_ == StallMode::kSlowdown) {
    stall_stats_.slowdown_events++;
    fabric_->ScheduleFor(self_, Micros(config_.slowdown_delay_us),
                         [this, waiter = std::move(waiter)]() mutable {
                           CommitWrite(std::move(waiter));
                         });
    return;
  }
  CommitWrite(std::move(waiter));
}

void Engine::CommitWrite(Waiter waiter) {
  SequenceNumber seq = last_seq_ + 1;
  Status s = active_->Put(waiter.key, waiter.value, seq, waiter.tombstone);
  if (s.IsMemtableFull()) {
    if (local_immutables_.size() + 1 >= config_.local_memtable_max) {
      // No room to rotate: memtable-induced stall until a slot frees.
      EnterStall(StallCause::kMemtableBackpressure);
      stall_waiters_.push_front(std::move(waiter));
      return;
    }
    Status rs = RotateMemtable();
    if (!rs.ok()) {
      waiter.done(rs, 0);
      return;
    }
    s = active_->Put(waiter.key, waiter.value, seq, waiter.tombstone);
  }
  if (!s.ok()) {
    waiter.done(s, 0);
    return;
  }

  WalRecord record;
  record.seq = seq;
  record.tombstone = waiter.tombstone;
  record.key = waiter.key;
  record.value = waiter.value;
  Status ws = wal_->Append(record);
  if (ws.ok()) ws = wal_->Sync();
  if (!ws.ok()) {
    waiter.done(ws, 0);
    return;
  }
  last_seq_ = seq;

  if (config_.shard_bits > 0) StreamChunks(active_->id());

  auto done = std::move(waiter.done);
  fabric_->ScheduleFor(self_, Micros(config_.wal_write_us),
                       [done = std::move(done), seq]() { done(Status::OK(), seq); });
}

Status Engine::RotateMemtable() {
  if (active_ != nullptr) {
    Status s = active_->Seal();
    if (!s.ok()) return s;
    local_immutables_.push_back(active_);
    OnMemtableSealed(active_);
  }
  uint64_t id = next_memtable_id_++;
  active_ = std::make_shared<Memtable>(id, ShardConfig{config_.shard_bits},
                                       config_.memtable_limit_bytes,
                                       &address_space_);
  wal_ = std::make_unique<WalWriter>(env_, WalFileName(id));
  SetupStagingRegions(active_);
  UpdateStallState();
  return Status::OK();
}

void Engine::EnterStall(StallCause cause) {
  if (stall_mode_ == StallMode::kStopped) return;
  stall_mode_ = StallMode::kStopped;
  stall_cause_ = cause;
  stall_entered_at_ = fabric_->now();
  if (cause == StallCause::kL0Files) {
    stall_stats_.episodes_l0++;
  } else {
    stall_stats_.episodes_memtable++;
  }
}

void Engine::UpdateStallState() {
  size_t l0 = versions_.levels[0].size();
  if (l0 >= config_.l0_stop_trigger) {
    EnterStall(StallCause::kL0Files);
    return;
  }
  if (stall_mode_ == StallMode::kStopped) return;  // cleared by MaybeUnstall
  stall_mode_ = (l0 >= config_.l0_slowdown_trigger) ? StallMode::kSlowdown
                                                    : StallMode::kOpen;
  stall_cause_ = (stall_mode_ == StallMode::kSlowdown) ? StallCause::kL0Files
                                                       : StallCause::kNone;
}

void Engine::MaybeUnstall() {
  if (stall_mode_ != StallMode::kStopped) return;
  size_t l0 = versions_.levels[0].size();
  bool l0_blocked = l0 >= config_.l0_stop_trigger;
  bool memtable_blocked =
      local_immutables_.size() + 1 >= config_.local_memtable_max;
  if (l0_blocked) return;
  if (stall_cause_ == StallCause::kMemtableBackpressure && memtable_blocked) {
    return;
  }
  stall_stats_.stalled_ns += fabric_->now() - stall_entered_at_;
  stall_mode_ = StallMode::kOpen;
  stall_cause_ = StallCause::kNone;
  UpdateStallState();

  std::deque<Waiter> waiters;
  waiters.swap(stall_waiters_);
  for (auto& waiter : waiters) {
    HandleWrite(std::move(waiter));
  }
}

// --- offload pipeline ------------------------------------------------------

void Engine::SetupStagingRegions(const std::shared_ptr<Memtable>& table) {
  OffloadJob job;
  job.table = table;
  job.streamed.assign(table->shard_config().shard_count(), 0);
  if (!services_.dm_nodes.empty()) {
    NodeId dm = services_.dm_nodes[self_.index % services_.dm_nodes.size()];
    uint64_t bytes = table->shard_capacity() *
                     table->shard_config().shard_count();
    Status s = fabric_->RegisterRegion(dm, bytes, &job.kv_region);
    if (!s.ok()) {
      job.kv_region = RemoteRegion{};  // stays local, flushed via local mode
    }
  }
  offloading_[table->id()] = std::move(job);
}

void Engine::StreamChunks(uint64_t memtable_id) {
  auto it = offloading_.find(memtable_id);
  if (it == offloading_.end()) return;
  OffloadJob& job = it->second;
  if (!job.kv_region.valid() || job.failed) return;

  const Memtable& table = *job.table;
  uint64_t stride = table.shard_capacity();
  for (uint32_t shard = 0; shard < job.streamed.size(); shard++) {
    // Ship full chunks as the append-only block grows; the tail goes with
    // the seal. Foreground writes never wait on these.
    while (table.shard_block_size(shard) >=
           job.streamed[shard] + config_.transfer_chunk_bytes) {
      if (Fault(EnginePhase::kOffloadTransfer, memtable_id) !=
          FaultAction::kNone) {
        HandleOffloadFail(memtable_id);
        return;
      }
      uint64_t offset = job.streamed[shard];
      std::string chunk = table.shard_block(shard).substr(
          offset, config_.transfer_chunk_bytes);
      job.streamed[shard] += chunk.size();
      job.chunks_in_flight++;
      fabric_->OneSidedWrite(
          self_, job.kv_region, shard * stride + offset, std::move(chunk),
          [this, memtable_id](Status s) {
            auto jt = offloading_.find(memtable_id);
            if (jt == offloading_.end()) return;
            jt->second.chunks_in_flight--;
            if (!s.ok()) {
              HandleOffloadFail(memtable_id);
              return;
            }
            if (jt->second.chunks_in_flight == 0 &&
                jt->second.sealed_parts_sent) {
              FinishTransfer(memtable_id);
            }
          });
    }
  }
}

void Engine::OnMemtableSealed(const std::shared_ptr<Memtable>& table) {
  uint64_t id = table->id();
  auto it = offloading_.find(id);
  if (it == offloading_.end()) return;
  OffloadJob& job = it->second;

  if (!job.kv_region.valid() || job.failed) {
    // No DM staging: classic local flush path.
    offloading_.erase(it);
    ScheduleLocalFlush(table);
    return;
  }
  if (Fault(EnginePhase::kOffloadTransfer, id) != FaultAction::kNone) {
    HandleOffloadFail(id);
    return;
  }

  // Remaining shard tails (whole blocks when k = 0), then the index.
  uint64_t stride = table->shard_capacity();
  for (uint32_t shard = 0; shard < job.streamed.size(); shard++) {
    uint64_t have = job.streamed[shard];
    uint64_t size = table->shard_block_size(shard);
    if (size > have) {
      std::string tail = table->shard_block(shard).substr(have, size - have);
      job.streamed[shard] = size;
      job.chunks_in_flight++;
      fabric_->OneSidedWrite(
          self_, job.kv_region, shard * stride + have, std::move(tail),
          [this, id](Status s) {
            auto jt = offloading_.find(id);
            if (jt == offloading_.end()) return;
            jt->second.chunks_in_flight--;
            if (!s.ok()) {
              HandleOffloadFail(id);
              return;
            }
            if (jt->second.chunks_in_flight == 0 &&
                jt->second.sealed_parts_sent) {
              FinishTransfer(id);
            }
          });
    }
  }

  std::string index = table->SerializeIndex();
  Status s = fabric_->RegisterRegion(job.kv_region.owner, index.size(),
                                     &job.index_region);
  if (!s.ok()) {
    HandleOffloadFail(id);
    return;
  }
  job.chunks_in_flight++;
  fabric_->OneSidedWrite(self_, job.index_region, 0, std::move(index),
                         [this, id](Status ws) {
                           auto jt = offloading_.find(id);
                           if (jt == offloading_.end()) return;
                           jt->second.chunks_in_flight--;
                           if (!ws.ok()) {
                             HandleOffloadFail(id);
                             return;
                           }
                           jt->second.sealed_parts_sent = true;
                           if (jt->second.chunks_in_flight == 0) {
                             FinishTransfer(id);
                           }
                         });
  // The index write above is the last part issued; mark after issuing so a
  // zero-latency completion order still works.
}

void Engine::FinishTransfer(uint64_t memtable_id) {
  auto it = offloading_.find(memtable_id);
  if (it == offloading_.end() || it->second.commit_sent) return;
  it->second.commit_sent = true;
  commit_ready_.push_back(memtable_id);
  MaybeSendOffloadCommit();
}

void Engine::MaybeSendOffloadCommit() {
  // K remote memtables at most; further transfers wait for a slot, which
  // surfaces as memtable backpressure upstream.
  while (!commit_ready_.empty() &&
         remote_.size() < config_.remote_memtable_max) {
    uint64_t id = commit_ready_.front();
    commit_ready_.pop_front();
    auto it = offloading_.find(id);
    if (it == offloading_.end()) continue;
    OffloadJob& job = it->second;

    TransferRecord record;
    const Memtable& table = *job.table;
    record.memtable_id = id;
    record.dm_node = job.kv_region.owner;
    record.shard_bits = table.shard_config().k;
    record.index_region_id = job.index_region.region_id;
    record.index_remote_base = job.index_region.base;
    record.index_length = job.index_region.length;
    record.kv_region_id = job.kv_region.region_id;
    record.kv_remote_base = job.kv_region.base;
    record.kv_stride = table.shard_capacity();
    for (uint32_t shard = 0; shard < table.shard_config().shard_count();
         shard++) {
      record.shards.push_back(
          {table.shard_block_base(shard), table.shard_block_size(shard)});
    }

    OffloadCommit commit;
    commit.owner_incarnation = incarnation_;
    commit.transfer_record = record.Encode();
    fabric_->Send(self_, record.dm_node, kOffloadCommitMsg, commit.Encode());
  }
}

void Engine::PromoteHotKeys(const Memtable& table,
                            const TransferRecord& record) {
  // One pass in key order: the first occurrence of each key is its newest
  // version. Hot keys get entries; keys already cached are refreshed so the
  // cache never points at a shadowed version.
  Memtable::Iterator it(&table);
  std::string prev_key;
  bool first = true;
  for (it.SeekToFirst(); it.Valid(); it.Next()) {
    std::string key = it.key().ToString();
    if (!first && key == prev_key) continue;
    first = false;
    prev_key = key;
    bool hot = it.freq() >= config_.freq_threshold;
    if (!hot && !cache_->Contains(key)) continue;
    KeyOffsetCache::Entry entry;
    entry.memtable_id = table.id();
    entry.dm_node = record.dm_node;
    entry.region_id = record.kv_region_id;
    uint32_t shard = it.shard();
    entry.offset = shard * record.kv_stride +
                   (it.kv_ref() - record.shards[shard].local_base);
    entry.length = static_cast<uint32_t>(it.tuple_len());
    entry.seq = it.seq();
    entry.tombstone = it.tombstone();
    cache_->Insert(key, entry);
  }
}

void Engine::HandleOffloadAck(const OffloadAck& ack) {
  auto it = offloading_.find(ack.memtable_id);
  if (it == offloading_.end()) return;
  if (ack.status != Status::Code::kOk) {
    HandleOffloadFail(ack.memtable_id);
    return;
  }
  OffloadJob job = std::move(it->second);
  offloading_.erase(it);

  const Memtable& table = *job.table;
  RemoteTable remote;
  remote.memtable_id = ack.memtable_id;
  remote.record.memtable_id = ack.memtable_id;
  remote.record.dm_node = job.kv_region.owner;
  remote.record.shard_bits = table.shard_config().k;
  remote.record.index_region_id = job.index_region.region_id;
  remote.record.index_remote_base = job.index_region.base;
  remote.record.index_length = job.index_region.length;
  remote.record.kv_region_id = job.kv_region.region_id;
  remote.record.kv_remote_base = job.kv_region.base;
  remote.record.kv_stride = table.shard_capacity();
  uint32_t shard_count = table.shard_config().shard_count();
  for (uint32_t shard = 0; shard < shard_count; shard++) {
    remote.record.shards.push_back(
        {table.shard_block_base(shard), table.shard_block_size(shard)});
    remote.shard_sizes.push_back(table.shard_block_size(shard));
  }
  remote.kv_region = job.kv_region;
  remote.index_region = job.index_region;
  remote.blooms = ack.shard_blooms;
  remote.shard_flush_pending.assign(shard_count, false);
  remote.shard_flushed.assign(shard_count, false);
  remote.min_seq = table.min_seq();
  remote.max_seq = table.max_seq();

  PromoteHotKeys(table, remote.record);

  // Drop the local copy: reads of this memtable now go through DM.
  job.table->MarkOffloaded();
  local_immutables_.erase(
      std::remove(local_immutables_.begin(), local_immutables_.end(),
                  job.table),
      local_immutables_.end());
  remote_[ack.memtable_id] = std::move(remote);
  remote_order_.insert(remote_order_.begin(), ack.memtable_id);

  MaybeUnstall();
  MaybeTriggerShardFlush();
  MaybeSendOffloadCommit();
}

void Engine::HandleOffloadFail(uint64_t memtable_id) {
  AbandonOffload(memtable_id, /*flush_locally=*/true);
}

void Engine::AbandonOffload(uint64_t memtable_id, bool flush_locally) {
  auto it = offloading_.find(memtable_id);
  if (it == offloading_.end()) return;
  OffloadJob job = std::move(it->second);
  offloading_.erase(it);
  commit_ready_.erase(
      std::remove(commit_ready_.begin(), commit_ready_.end(), memtable_id),
      commit_ready_.end());
  if (job.kv_region.valid()) fabric_->FreeRegion(job.kv_region);
  if (job.index_region.valid()) fabric_->FreeRegion(job.index_region);
  // The local copy was kept until the ack, so no rebuild is needed here;
  // the memtable simply stays local and flushes through the local path.
  if (flush_locally && job.table->state() != Memtable::State::kActive) {
    ScheduleLocalFlush(job.table);
  }
}

// --- plumbing ---------------------------------------------------------------

void Engine::StartHeartbeats() {
  fabric_->ScheduleFor(
      self_, 100 * kMillisecond,
      [this]() {
        SendHeartbeat();
        StartHeartbeats();
      },
      /*background=*/true);
}

void Engine::SendHeartbeat() {
  if (!services_.has_scheduler) return;
  HeartbeatMsg hb;
  hb.u_cpu = executor_->u_cpu();
  hb.u_io = executor_->u_io();
  hb.u_queue = executor_->u_queue();
  hb.incarnation = incarnation_;
  fabric_->Send(self_, services_.scheduler, kHeartbeatMsg, hb.Encode());
}

void Engine::OnRestart() {
  // Volatile state is gone; recover from WAL + Manifest.
  open_ = false;
  active_.reset();
  wal_.reset();
  local_immutables_.clear();
  offloading_.clear();
  commit_ready_.clear();
  remote_.clear();
  remote_order_.clear();
  pending_jobs_.clear();
  canceled_jobs_.clear();
  table_cache_.clear();
  ds_waiters_.clear();
  delegation_waiters_.clear();
  scan_waiters_.clear();
  stall_waiters_.clear();
  flush_all_waiters_.clear();
  stall_mode_ = StallMode::kOpen;
  stall_cause_ = StallCause::kNone;
  background_jobs_ = 0;
  Open();
}

void Engine::OnMessage(NodeId src, uint16_t kind, const std::string& payload) {
  switch (kind) {
    case kControlMsg: {
      ControlMessage msg;
      if (!ControlMessage::Decode(Slice(payload), &msg).ok()) return;
      if (msg.kind == ControlKind::kAssign) {
        executor_->OnMessage(src, kind, payload);
      } else if (msg.kind == ControlKind::kCommit) {
        HandleCommitFromScheduler(msg);
      }
      return;
    }
    case kPackageTransferMsg:
      executor_->OnMessage(src, kind, payload);
      return;
    case kWriteSstAckMsg:
    case kDsErrorMsg: {
      if (executor_->OnMessage(src, kind, payload)) return;
      DsReply reply;
      if (!DsReply::Decode(Slice(payload), &reply).ok()) return;
      auto it = ds_waiters_.find(reply.cookie);
      if (it != ds_waiters_.end()) {
        auto fn = std::move(it->second);
        ds_waiters_.erase(it);
        fn(reply.status == Status::Code::kOk
               ? Status::OK()
               : Status(Status::IoError("ds error")),
           reply);
      }
      return;
    }
    case kTailDataMsg:
    case kBlockDataMsg:
    case kFileDataMsg: {
      DsReply reply;
      if (!DsReply::Decode(Slice(payload), &reply).ok()) return;
      auto it = ds_waiters_.find(reply.cookie);
      if (it != ds_waiters_.end()) {
        auto fn = std::move(it->second);
        ds_waiters_.erase(it);
        fn(Status::OK(), reply);
      }
      return;
    }
    case kOffloadAckMsg:
    case kOffloadFailMsg: {
      OffloadAck ack;
      if (!OffloadAck::Decode(Slice(payload), &ack).ok()) return;
      if (kind == kOffloadAckMsg && ack.status == Status::Code::kOk) {
        HandleOffloadAck(ack);
      } else {
        HandleOffloadFail(ack.memtable_id);
      }
      return;
    }
    case kReclaimAckMsg:
      return;
    case kDelegationReplyMsg: {
      DelegationReply reply;
      if (!DelegationReply::Decode(Slice(payload), &reply).ok()) return;
      auto it = delegation_waiters_.find(reply.request_id);
      if (it != delegation_waiters_.end()) {
        auto fn = std::move(it->second);
        delegation_waiters_.erase(it);
        fn(reply);
      }
      return;
    }
    case kDelegationScanReplyMsg: {
      DelegationScanReply reply;
      if (!DelegationScanReply::Decode(Slice(payload), &reply).ok()) return;
      auto it = scan_waiters_.find(reply.request_id);
      if (it != scan_waiters_.end()) {
        auto fn = std::move(it->second);
        scan_waiters_.erase(it);
        fn(reply);
      }
      return;
    }
    case kRePrepareMsg: {
      Slice in(payload);
      uint64_t job_id;
      if (GetFixed64(&in, &job_id)) HandleRePrepare(job_id);
      return;
    }
    default:
      return;
  }
}

void Engine::OnUndeliverable(NodeId dst, uint16_t kind,
                             const std::string& payload) {
  if (executor_->OnUndeliverable(dst, kind, payload)) return;
  switch (kind) {
    case kOffloadCommitMsg: {
      OffloadCommit commit;
      if (OffloadCommit::Decode(Slice(payload), &commit).ok()) {
        TransferRecord record;
        if (TransferRecord::Decode(Slice(commit.transfer_record), &record)
                .ok()) {
          HandleOffloadFail(record.memtable_id);
        }
      }
      return;
    }
    case kDelegationRequestMsg: {
      DelegationRequest req;
      if (!DelegationRequest::Decode(Slice(payload), &req).ok()) return;
      HandleDmLoss(dst);
      auto it = delegation_waiters_.find(req.request_id);
      if (it != delegation_waiters_.end()) {
        auto fn = std::move(it->second);
        delegation_waiters_.erase(it);
        DelegationReply failed;
        failed.request_id = req.request_id;
        failed.outcome = DelegationReply::Outcome::kUnknownMemtable;
        fn(failed);
      }
      return;
    }
    case kDelegationScanMsg: {
      DelegationScanRequest req;
      if (!DelegationScanRequest::Decode(Slice(payload), &req).ok()) return;
      HandleDmLoss(dst);
      auto it = scan_waiters_.find(req.request_id);
      if (it != scan_waiters_.end()) {
        auto fn = std::move(it->second);
        scan_waiters_.erase(it);
        DelegationScanReply failed;
        failed.request_id = req.request_id;
        failed.status = Status::Code::kNodeDown;
        fn(failed);
      }
      return;
    }
    case kControlMsg: {
      // Scheduler unreachable: retry the message once it restarts.
      if (!services_.has_scheduler) return;
      std::string copy = payload;
      fabric_->ScheduleFor(self_, 200 * kMillisecond,
                           [this, copy = std::move(copy)]() {
                             fabric_->Send(self_, services_.scheduler,
                                           kControlMsg, copy);
                           });
      return;
    }
    default:
      return;
  }
}

// --- synchronous wrappers ----------------------------------------------------

Status Engine::Put(const Slice& key, const Slice& value) {
  Status result;
  bool done = false;
  WriteAsync(key, value, false, [&](Status s, SequenceNumber) {
    result = s;
    done = true;
  });
  fabric_->RunWhile([&] { return !done; });
  return done ? result : Status::Busy("write did not complete");
}

Status Engine::Delete(const Slice& key) {
  Status result;
  bool done = false;
  WriteAsync(key, Slice(), true, [&](Status s, SequenceNumber) {
    result = s;
    done = true;
  });
  fabric_->RunWhile([&] { return !done; });
  return done ? result : Status::Busy("write did not complete");
}

Status Engine::Get(const Slice& key, std::string* value) {
  Status result;
  bool done = false;
  GetAsync(key, std::nullopt, [&](Status s, std::string v) {
    result = s;
    *value = std::move(v);
    done = true;
  });
  fabric_->RunWhile([&] { return !done; });
  return done ? result : Status::Busy("get did not complete");
}

Status Engine::FlushAll() {
  Status result;
  bool done = false;
  FlushAllAsync([&](Status s) {
    result = s;
    done = true;
  });
  fabric_->RunWhile([&] { return !done; });
  return done ? result : Status::Busy("flush did not complete");
}

}  // namespace farlsm
