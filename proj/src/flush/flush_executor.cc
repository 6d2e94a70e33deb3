// Copyright (c) 2026 The farlsm Authors. All rights reserved.
// Use of this source code is governed by a BSD-style license that can be
// found in the LICENSE file.

#include "farlsm/flush_executor.h"

#include <algorithm>

#include "farlsm/ds_node.h"

namespace farlsm {

namespace {
// CPU charge for merging and serializing one tuple.
constexpr SimTime kMergeNsPerEntry = 50;
}  // namespace

std::string CommitPayload::Encode() const {
  std::string out;
  PutFixed32(&out, attempt);
  PutFixed16(&out, static_cast<uint16_t>(files.size()));
  for (const SstMeta& meta : files) meta.EncodeTo(&out);
  return out;
}

Status CommitPayload::Decode(Slice input, CommitPayload* out) {
  uint16_t count;
  if (!GetFixed32(&input, &out->attempt) || !GetFixed16(&input, &count)) {
    return Status::Corruption("short commit payload");
  }
  out->files.clear();
  for (uint16_t i = 0; i < count; i++) {
    SstMeta meta;
    Status s = SstMeta::DecodeFrom(&input, &meta);
    if (!s.ok()) return s;
    out->files.push_back(std::move(meta));
  }
  return Status::OK();
}

std::string PackageTransfer::Encode() const {
  std::string out;
  PutFixed32(&out, attempt);
  PutLengthPrefixedSlice(&out, package);
  return out;
}

Status PackageTransfer::Decode(Slice input, PackageTransfer* out) {
  Slice package;
  if (!GetFixed32(&input, &out->attempt) ||
      !GetLengthPrefixedSlice(&input, &package)) {
    return Status::Corruption("short package transfer");
  }
  out->package = package.ToString();
  return Status::OK();
}

FlushExecutor::FlushExecutor(Fabric* fabric, NodeId self, int pool_size)
    : fabric_(fabric), self_(self), pool_size_(pool_size) {}

void FlushExecutor::Reset() {
  active_ = 0;
  queue_.clear();
  pending_ds_acks_.clear();
  recent_ds_writes_.clear();
}

double FlushExecutor::u_io() const {
  constexpr SimTime kWindow = 100 * kMillisecond;
  SimTime now = fabric_->now();
  uint64_t bytes = 0;
  for (const auto& [t, b] : recent_ds_writes_) {
    if (t + kWindow >= now) bytes += b;
  }
  double peak_bytes_per_sec =
      fabric_->latency().ds_bandwidth_mbps * 1e6 / 8.0;
  if (peak_bytes_per_sec <= 0) return 0.0;
  double rate = bytes * (static_cast<double>(kSecond) / kWindow);
  return std::min(1.0, rate / peak_bytes_per_sec);
}

void FlushExecutor::NoteDsWrite(uint64_t bytes) {
  SimTime now = fabric_->now();
  recent_ds_writes_.emplace_back(now, bytes);
  while (recent_ds_writes_.size() > 64) recent_ds_writes_.pop_front();
}

FaultAction FlushExecutor::Fault(uint64_t job_id, FlushPhase phase) {
  if (!fault_hook_) return FaultAction::kNone;
  FaultAction action = fault_hook_(self_, job_id, phase);
  if (action == FaultAction::kCrash) fabric_->CrashNode(self_);
  return action;
}

bool FlushExecutor::OnMessage(NodeId src, uint16_t kind,
                              const std::string& payload) {
  switch (kind) {
    case kControlMsg: {
      ControlMessage msg;
      if (!ControlMessage::Decode(Slice(payload), &msg).ok()) return true;
      if (msg.kind != ControlKind::kAssign) return false;
      // ACCEPT immediately; queue depth feeds the cost model instead of
      // rejecting work here.
      ControlMessage accept;
      accept.kind = ControlKind::kAccept;
      accept.job_id = msg.job_id;
      fabric_->Send(self_, src, kControlMsg, accept.Encode());
      return true;
    }
    case kPackageTransferMsg: {
      PackageTransfer transfer;
      if (!PackageTransfer::Decode(Slice(payload), &transfer).ok()) {
        return true;
      }
      Job job;
      job.attempt = transfer.attempt;
      if (!FlushMetadataPackage::Decode(Slice(transfer.package),
                                        &job.package)
               .ok()) {
        return true;
      }
      job.job_id = job.package.job_id;
      queue_.push_back(std::move(job));
      StartNext();
      return true;
    }
    case kWriteSstAckMsg: {
      DsReply ack;
      if (!DsReply::Decode(Slice(payload), &ack).ok()) return true;
      auto it = pending_ds_acks_.find(ack.file_number);
      if (it != pending_ds_acks_.end()) {
        auto done = std::move(it->second);
        pending_ds_acks_.erase(it);
        done(Status::OK(), ack.file_number);
      }
      return true;
    }
    case kDsErrorMsg: {
      DsReply err;
      if (!DsReply::Decode(Slice(payload), &err).ok()) return true;
      auto it = pending_ds_acks_.find(err.file_number);
      if (it != pending_ds_acks_.end()) {
        auto done = std::move(it->second);
        pending_ds_acks_.erase(it);
        done(Status::DsWriteFailed(), err.file_number);
      }
      return true;
    }
    default:
      return false;
  }
}

bool FlushExecutor::OnUndeliverable(NodeId /*dst*/, uint16_t kind,
                                    const std::string& payload) {
  if (kind != kWriteSstMsg) return false;
  WriteSstRequest request;
  if (!WriteSstRequest::Decode(Slice(payload), &request).ok()) return true;
  auto it = pending_ds_acks_.find(request.meta.file_number);
  if (it != pending_ds_acks_.end()) {
    auto done = std::move(it->second);
    pending_ds_acks_.erase(it);
    done(Status::DsWriteFailed("ds unreachable"), request.meta.file_number);
  }
  return true;
}

void FlushExecutor::StartNext() {
  if (active_ >= pool_size_ || queue_.empty()) return;
  Job job = std::move(queue_.front());
  queue_.pop_front();
  active_++;
  Execute(std::move(job));
}

void FlushExecutor::Execute(Job job) {
  job.fetch_start = fabric_->now();
  FaultAction action = Fault(job.job_id, FlushPhase::kFetch);
  if (action == FaultAction::kCrash) return;
  if (action == FaultAction::kAbort) {
    SendAbort(job, Status::Code::kDmUnreachable);
    return;
  }

  // Assemble reads: one per participating memtable's shard block, plus
  // local reads when this node hosts the regions (in-DM execution reads in
  // place without network round trips).
  std::vector<Fabric::ReadOp> remote_ops;
  std::vector<size_t> remote_slots;
  std::vector<std::string> blocks(job.package.memtables.size());
  for (size_t i = 0; i < job.package.memtables.size(); i++) {
    const auto& m = job.package.memtables[i];
    NodeId dm = job.package.ResolveNode(m.dm_node_ref);
    RemoteRegion region{dm, m.kv_region_id, 0, m.block_length};
    job.bytes_in += m.block_length;
    if (m.block_length == 0) continue;
    if (dm == self_) {
      Status s = fabric_->LocalRead(region, m.block_region_offset,
                                    m.block_length, &blocks[i]);
      if (!s.ok()) {
        SendAbort(job, Status::Code::kDmUnreachable);
        return;
      }
    } else {
      remote_ops.push_back({region, m.block_region_offset, m.block_length});
      remote_slots.push_back(i);
    }
  }

  if (remote_ops.empty()) {
    job.fetch_done = fabric_->now();
    MergeAndBuild(std::move(job), std::move(blocks));
    return;
  }
  fabric_->OneSidedReadBatch(
      self_, std::move(remote_ops),
      [this, job = std::move(job), blocks = std::move(blocks),
       remote_slots](Status s, std::vector<std::string> results) mutable {
        if (!s.ok()) {
          SendAbort(job, Status::Code::kDmUnreachable);
          return;
        }
        for (size_t i = 0; i < remote_slots.size(); i++) {
          blocks[remote_slots[i]] = std::move(results[i]);
        }
        job.fetch_done = fabric_->now();
        MergeAndBuild(std::move(job), std::move(blocks));
      });
}

void FlushExecutor::MergeAndBuild(Job job, std::vector<std::string> blocks) {
  FaultAction action = Fault(job.job_id, FlushPhase::kBuild);
  if (action == FaultAction::kCrash) return;
  if (action == FaultAction::kAbort) {
    SendAbort(job, Status::Code::kInjectedCrash);
    return;
  }

  // Decode every tuple of every block; newest sequence wins per key;
  // tombstones propagate into the L0 output.
  struct Entry {
    std::string key;
    std::string value;
    SequenceNumber seq;
    bool tombstone;
  };
  std::vector<Entry> entries;
  for (const std::string& block : blocks) {
    size_t pos = 0;
    while (pos < block.size()) {
      DecodedTuple t;
      if (!DecodeTuple(Slice(block.data() + pos, block.size() - pos), &t)) {
        SendAbort(job, Status::Code::kCorruptBlock);
        return;
      }
      if (t.seq <= job.package.sequence_watermark) {
        entries.push_back({t.key.ToString(), t.value.ToString(), t.seq,
                           t.tombstone});
      }
      pos += t.encoded_len;
    }
  }
  std::sort(entries.begin(), entries.end(), [](const Entry& a, const Entry& b) {
    int c = Slice(a.key).compare(b.key);
    if (c != 0) return c < 0;
    return a.seq > b.seq;
  });

  SstBuilder builder(job.package.block_size,
                     job.package.shard_bits > 0 ? job.package.shard_id
                                                : kNoShard);
  const std::string* prev_key = nullptr;
  for (const Entry& e : entries) {
    if (prev_key != nullptr && *prev_key == e.key) continue;  // shadowed
    builder.Add(e.key, e.value, e.seq, e.tombstone);
    prev_key = &e.key;
  }

  SimTime cpu = entries.size() * kMergeNsPerEntry;
  std::string file_bytes = builder.Finish();
  SstMeta meta = builder.meta();
  meta.level = job.package.target_level;
  meta.file_number = (job.package.file_number_seed << 8) |
                     (job.attempt & 0xff);
  meta.size = file_bytes.size();

  fabric_->ScheduleFor(self_, cpu,
                       [this, job = std::move(job),
                        file_bytes = std::move(file_bytes), meta]() mutable {
                         WriteToDs(std::move(job), std::move(file_bytes),
                                   meta);
                       });
}

void FlushExecutor::WriteToDs(Job job, std::string file_bytes, SstMeta meta) {
  FaultAction action = Fault(job.job_id, FlushPhase::kDsWrite);
  if (action == FaultAction::kCrash) return;
  if (action == FaultAction::kAbort) {
    SendAbort(job, Status::Code::kDsWriteFailed);
    return;
  }
  if (ds_nodes_.empty()) {
    SendAbort(job, Status::Code::kDsWriteFailed);
    return;
  }
  NodeId ds = ds_nodes_[meta.file_number % ds_nodes_.size()];
  WriteSstRequest request;
  request.job_id = job.job_id;
  request.attempt = job.attempt;
  request.meta = meta;
  request.bytes = std::move(file_bytes);
  uint64_t out_bytes = request.bytes.size();
  NoteDsWrite(out_bytes);

  pending_ds_acks_[meta.file_number] =
      [this, job = std::move(job), meta, out_bytes](Status s, uint64_t) {
        if (!s.ok()) {
          SendAbort(job, Status::Code::kDsWriteFailed);
          return;
        }
        FaultAction action = Fault(job.job_id, FlushPhase::kCommit);
        if (action == FaultAction::kCrash) return;
        if (action == FaultAction::kAbort) {
          SendAbort(job, Status::Code::kInjectedCrash);
          return;
        }
        if (stats_sink_) {
          JobStats stats;
          stats.job_id = job.job_id;
          stats.fetch_ns = job.fetch_done - job.fetch_start;
          stats.flush_ns = fabric_->now() - job.fetch_done;
          stats.bytes_in = job.bytes_in;
          stats.bytes_out = out_bytes;
          stats_sink_(stats);
        }
        SendCommit(job, meta);
      };
  fabric_->BulkSend(self_, ds, kWriteSstMsg, request.Encode());
}

void FlushExecutor::SendCommit(const Job& job, const SstMeta& meta) {
  CommitPayload payload;
  payload.attempt = job.attempt;
  payload.files.push_back(meta);
  ControlMessage commit;
  commit.kind = ControlKind::kCommit;
  commit.job_id = job.job_id;
  commit.payload = payload.Encode();
  fabric_->Send(self_, scheduler_, kControlMsg, commit.Encode());
  active_--;
  StartNext();
}

void FlushExecutor::SendAbort(const Job& job, Status::Code reason) {
  ControlMessage abort;
  abort.kind = ControlKind::kAbort;
  abort.job_id = job.job_id;
  abort.payload.push_back(static_cast<char>(reason));
  PutFixed32(&abort.payload, job.attempt);
  fabric_->Send(self_, scheduler_, kControlMsg, abort.Encode());
  active_--;
  StartNext();
}

}  // namespace farlsm
