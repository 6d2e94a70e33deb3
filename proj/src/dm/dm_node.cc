// Copyright (c) 2026 The farlsm Authors. All rights reserved.
// Use of this source code is governed by a BSD-style license that can be
// found in the LICENSE file.

#include "farlsm/dm_node.h"

#include <cassert>

#include "farlsm/bloom.h"
#include "farlsm/flush_executor.h"

namespace farlsm {

std::string OffloadCommit::Encode() const {
  std::string out;
  PutFixed32(&out, owner_incarnation);
  PutLengthPrefixedSlice(&out, transfer_record);
  return out;
}

Status OffloadCommit::Decode(Slice input, OffloadCommit* out) {
  Slice record;
  if (!GetFixed32(&input, &out->owner_incarnation) ||
      !GetLengthPrefixedSlice(&input, &record)) {
    return Status::Corruption("short offload commit");
  }
  out->transfer_record = record.ToString();
  return Status::OK();
}

std::string OffloadAck::Encode() const {
  std::string out;
  PutFixed64(&out, memtable_id);
  PutByte(&out, static_cast<uint8_t>(status));
  PutFixed16(&out, static_cast<uint16_t>(shard_blooms.size()));
  for (const std::string& bloom : shard_blooms) {
    PutLengthPrefixedSlice(&out, bloom);
  }
  return out;
}

Status OffloadAck::Decode(Slice input, OffloadAck* out) {
  uint8_t status;
  uint16_t count;
  if (!GetFixed64(&input, &out->memtable_id) || !GetByte(&input, &status) ||
      !GetFixed16(&input, &count)) {
    return Status::Corruption("short offload ack");
  }
  out->status = static_cast<Status::Code>(status);
  out->shard_blooms.clear();
  for (uint16_t i = 0; i < count; i++) {
    Slice bloom;
    if (!GetLengthPrefixedSlice(&input, &bloom)) {
      return Status::Corruption("short bloom list");
    }
    out->shard_blooms.push_back(bloom.ToString());
  }
  return Status::OK();
}

std::string ReclaimRequest::Encode() const {
  std::string out;
  PutFixed64(&out, memtable_id);
  return out;
}

Status ReclaimRequest::Decode(Slice input, ReclaimRequest* out) {
  if (!GetFixed64(&input, &out->memtable_id)) {
    return Status::Corruption("short reclaim");
  }
  return Status::OK();
}

DmNode::DmNode(Fabric* fabric, NodeId id, int worker_pool_size)
    : fabric_(fabric), id_(id), worker_pool_size_(worker_pool_size) {
  fabric_->BindHandler(id_, this);
  executor_ = std::make_unique<FlushExecutor>(fabric_, id_, worker_pool_size);
}

DmNode::~DmNode() = default;

void DmNode::OnUndeliverable(NodeId dst, uint16_t kind,
                             const std::string& payload) {
  executor_->OnUndeliverable(dst, kind, payload);
}

void DmNode::OnRestart() {
  // DM contents do not survive a crash: purge all hosted state and release
  // the retained regions so owners rebuild from their WALs.
  for (auto& [id, hosted] : hosted_) {
    fabric_->FreeRegion(hosted.kv_region);
    fabric_->FreeRegion(hosted.index_region);
  }
  hosted_.clear();
  work_queue_.clear();
  busy_workers_ = 0;
  executor_->Reset();
}

Slice DmNode::HostedMemtable::TupleAt(uint32_t node_index,
                                      DecodedTuple* tuple) const {
  const HostedNode& node = nodes[node_index];
  uint64_t offset = node.shard * ShardStride() + node.in_shard_offset;
  Slice raw(kv_bytes.data() + offset, kv_bytes.size() - offset);
  bool ok = DecodeTuple(raw, tuple);
  assert(ok);
  (void)ok;
  return raw;
}

uint32_t DmNode::HostedMemtable::Seek(const Slice& key, SequenceNumber seq,
                                      uint64_t* hops) const {
  constexpr uint32_t kNil = 0xffffffffu;
  uint64_t visit_count = 0;
  int level = Memtable::kMaxHeight - 1;
  uint32_t cur = kNil;  // kNil as "head"
  uint32_t result = kNil;
  while (level >= 0) {
    uint32_t next = (cur == kNil) ? head_links[level]
                                  : links[nodes[cur].links_begin + level];
    if (next != kNil) {
      DecodedTuple tuple;
      TupleAt(next, &tuple);
      visit_count++;
      if (CompareKeySeq(tuple.key, tuple.seq, key, seq) < 0) {
        cur = next;
        continue;
      }
    }
    result = next;
    level--;
  }
  if (hops != nullptr) *hops = visit_count;
  return result;
}

Status DmNode::ParseIndex(HostedMemtable* hosted) const {
  std::string index_bytes;
  Status s = fabric_->LocalRead(hosted->index_region, 0,
                                hosted->record.index_length, &index_bytes);
  if (!s.ok()) return s;

  Slice in(index_bytes);
  uint32_t magic, node_count;
  uint16_t version;
  uint8_t k;
  if (!GetFixed32(&in, &magic) || magic != Memtable::IndexHeader::kMagic) {
    return Status::CorruptIndex("bad magic");
  }
  if (!GetFixed16(&in, &version) ||
      version != Memtable::IndexHeader::kVersion) {
    return Status::CorruptIndex("bad version");
  }
  if (!GetByte(&in, &k) || k != hosted->record.shard_bits) {
    return Status::CorruptIndex("shard bits mismatch");
  }
  if (!GetFixed32(&in, &node_count) || !GetFixed64(&in, &hosted->min_seq) ||
      !GetFixed64(&in, &hosted->max_seq)) {
    return Status::CorruptIndex("short header");
  }
  constexpr uint32_t kNil = 0xffffffffu;
  for (int level = 0; level < Memtable::kMaxHeight; level++) {
    uint32_t link;
    if (!GetFixed32(&in, &link)) return Status::CorruptIndex("short head");
    if (link != kNil && link >= node_count) {
      return Status::CorruptIndex("head ordinal out of range");
    }
    hosted->head_links[level] = link;
  }
  hosted->nodes.clear();
  hosted->links.clear();
  hosted->nodes.reserve(node_count);
  uint32_t shard_count = 1u << k;
  for (uint32_t i = 0; i < node_count; i++) {
    HostedNode node;
    uint8_t height, shard;
    uint64_t offset;
    if (!GetByte(&in, &height) || !GetByte(&in, &shard) ||
        !GetFixed64(&in, &offset)) {
      return Status::CorruptIndex("short node record");
    }
    if (height >= Memtable::kMaxHeight || shard >= shard_count) {
      return Status::CorruptIndex("node field out of range");
    }
    if (offset >= hosted->record.kv_stride) {
      return Status::CorruptIndex("offset beyond shard stride");
    }
    node.height = height;
    node.shard = shard;
    node.in_shard_offset = offset;
    node.links_begin = static_cast<uint32_t>(hosted->links.size());
    // Links are stored for levels [0, height]; pad the row to kMaxHeight so
    // lookups index uniformly.
    for (int level = 0; level < Memtable::kMaxHeight; level++) {
      uint32_t link = kNil;
      if (level <= height) {
        if (!GetFixed32(&in, &link)) {
          return Status::CorruptIndex("short link row");
        }
        if (link != kNil && link >= node_count) {
          return Status::CorruptIndex("link ordinal out of range");
        }
      }
      hosted->links.push_back(link);
    }
    hosted->nodes.push_back(node);
  }
  return Status::OK();
}

Status DmNode::AcceptOffload(NodeId owner, uint32_t owner_incarnation,
                             const TransferRecord& record, OffloadAck* ack) {
  ack->memtable_id = record.memtable_id;
  ack->status = Status::Code::kOk;

  HostedMemtable hosted;
  hosted.owner = owner;
  hosted.owner_incarnation = owner_incarnation;
  hosted.record = record;
  hosted.kv_region = RemoteRegion{id_, record.kv_region_id,
                                  record.kv_remote_base, 0};
  hosted.index_region = RemoteRegion{id_, record.index_region_id,
                                     record.index_remote_base, 0};

  uint32_t shard_count = 1u << record.shard_bits;
  uint64_t kv_total = record.kv_stride * shard_count;
  Status s = fabric_->LocalRead(hosted.kv_region, 0, kv_total,
                                &hosted.kv_bytes);
  if (!s.ok()) {
    ack->status = s.code();
    return s;
  }
  s = ParseIndex(&hosted);
  if (!s.ok()) {
    // Failure atomicity: nothing is registered on a corrupt transfer.
    ack->status = s.code();
    return s;
  }

  // One bloom per KV-shard block, built over the block's keys.
  hosted.blooms.resize(shard_count);
  std::vector<std::vector<std::string>> keys(shard_count);
  for (uint32_t shard = 0; shard < shard_count; shard++) {
    uint64_t limit = record.shards[shard].length;
    uint64_t pos = 0;
    const char* base = hosted.kv_bytes.data() + shard * record.kv_stride;
    while (pos < limit) {
      DecodedTuple tuple;
      if (!DecodeTuple(Slice(base + pos, limit - pos), &tuple)) {
        ack->status = Status::Code::kCorruptIndex;
        return Status::CorruptIndex("bad tuple in shard block");
      }
      keys[shard].push_back(tuple.key.ToString());
      pos += tuple.encoded_len;
    }
    std::vector<Slice> slices(keys[shard].begin(), keys[shard].end());
    hosted.blooms[shard] = BloomFilter::Build(slices);
  }

  hosted.searchable = true;  // flips exactly once, after full reconstruction
  ack->shard_blooms = hosted.blooms;
  hosted_[record.memtable_id] = std::move(hosted);
  return Status::OK();
}

Status DmNode::Reclaim(uint64_t memtable_id) {
  auto it = hosted_.find(memtable_id);
  if (it == hosted_.end()) {
    return Status::UnknownMemtable(std::to_string(memtable_id));
  }
  fabric_->FreeRegion(it->second.kv_region);
  fabric_->FreeRegion(it->second.index_region);
  hosted_.erase(it);
  return Status::OK();
}

void DmNode::PurgeOwner(NodeId owner, uint32_t stale_incarnation) {
  for (auto it = hosted_.begin(); it != hosted_.end();) {
    if (it->second.owner == owner &&
        it->second.owner_incarnation <= stale_incarnation) {
      fabric_->FreeRegion(it->second.kv_region);
      fabric_->FreeRegion(it->second.index_region);
      it = hosted_.erase(it);
    } else {
      ++it;
    }
  }
}

Status DmNode::BloomCheck(uint64_t memtable_id, uint32_t shard,
                          const Slice& key, bool* maybe) const {
  auto it = hosted_.find(memtable_id);
  if (it == hosted_.end() || !it->second.searchable) {
    return Status::UnknownMemtable();
  }
  if (shard >= it->second.blooms.size()) {
    return Status::InvalidArgument("bad shard");
  }
  *maybe = BloomFilter::MayContain(it->second.blooms[shard], key);
  return Status::OK();
}

Status DmNode::CountSearchHops(uint64_t memtable_id, const Slice& key,
                               uint64_t* hops) const {
  auto it = hosted_.find(memtable_id);
  if (it == hosted_.end()) return Status::UnknownMemtable();
  it->second.Seek(key, kMaxSequence, hops);
  return Status::OK();
}

bool DmNode::IsSearchable(uint64_t id) const {
  auto it = hosted_.find(id);
  return it != hosted_.end() && it->second.searchable;
}

DelegationReply DmNode::ExecuteGet(const DelegationRequest& req) const {
  DelegationReply reply;
  reply.request_id = req.request_id;
  reply.outcome = DelegationReply::Outcome::kNotFound;

  constexpr uint32_t kNil = 0xffffffffu;
  for (uint64_t id : req.memtable_ids) {  // newest first
    auto it = hosted_.find(id);
    if (it == hosted_.end() || !it->second.searchable) {
      // Stale id: the caller falls back to DS.
      reply.outcome = DelegationReply::Outcome::kUnknownMemtable;
      reply.served_by = id;
      return reply;
    }
    const HostedMemtable& hosted = it->second;
    uint32_t node_index = hosted.Seek(req.key, req.snapshot_seq, nullptr);
    if (node_index == kNil) continue;
    DecodedTuple tuple;
    hosted.TupleAt(node_index, &tuple);
    if (tuple.key != Slice(req.key)) continue;
    // Newest version with seq <= snapshot; stop the search here.
    reply.served_by = id;
    reply.seq = tuple.seq;
    const HostedNode& node = hosted.nodes[node_index];
    reply.region_id = hosted.record.kv_region_id;
    reply.offset = node.shard * hosted.record.kv_stride + node.in_shard_offset;
    reply.length = static_cast<uint32_t>(tuple.encoded_len);
    if (tuple.tombstone) {
      reply.outcome = DelegationReply::Outcome::kNotFound;
      reply.tombstone = true;
      return reply;
    }
    if (tuple.value.size() <= kInlineReplyThreshold) {
      reply.outcome = DelegationReply::Outcome::kFoundInline;
      reply.value.assign(tuple.value.data(), tuple.value.size());
    } else {
      reply.outcome = DelegationReply::Outcome::kFoundIndirect;
    }
    return reply;
  }
  return reply;
}

DelegationScanReply DmNode::ExecuteScan(const DelegationScanRequest& req) const {
  DelegationScanReply reply;
  reply.request_id = req.request_id;

  auto it = hosted_.find(req.memtable_id);
  if (it == hosted_.end() || !it->second.searchable) {
    reply.status = Status::Code::kUnknownMemtable;
    return reply;
  }
  const HostedMemtable& hosted = it->second;
  constexpr uint32_t kNil = 0xffffffffu;
  uint32_t node_index = hosted.Seek(req.start_key, kMaxSequence, nullptr);
  std::string last_emitted_key;
  bool emitted_any = false;
  while (node_index != kNil) {
    DecodedTuple tuple;
    hosted.TupleAt(node_index, &tuple);
    uint32_t next = hosted.links[hosted.nodes[node_index].links_begin];
    if (!req.end_key.empty() && tuple.key.compare(req.end_key) >= 0) break;
    bool skip = tuple.seq > req.snapshot_seq ||
                (emitted_any && tuple.key == Slice(last_emitted_key));
    if (!skip) {
      if (reply.tuples.size() + tuple.encoded_len > req.max_bytes &&
          emitted_any) {
        reply.truncated = true;
        reply.resume_key = tuple.key.ToString();
        break;
      }
      EncodeTuple(&reply.tuples, tuple.key, tuple.value, tuple.seq,
                  tuple.tombstone);
      last_emitted_key = tuple.key.ToString();
      emitted_any = true;
    }
    node_index = next;
  }
  return reply;
}

void DmNode::HandleDelegation(NodeId src, const DelegationRequest& req) {
  delegated_gets_++;
  if (fail_delegations_ > 0) {
    fail_delegations_--;
    return;  // dropped; caller's timeout/fallback path takes over
  }
  if (busy_workers_ < worker_pool_size_) {
    busy_workers_++;
    // Worker charges the remote-search time, then replies.
    fabric_->ScheduleFor(id_, Micros(fabric_->latency().remote_get_us),
                         [this, src, req]() {
                           DelegationReply reply = ExecuteGet(req);
                           fabric_->Send(id_, src, kDelegationReplyMsg,
                                         reply.Encode(),
                                         Fabric::SendCost::kReply);
                           FinishWorker();
                         });
  } else {
    PendingWork work;
    work.from = src;
    work.is_scan = false;
    work.get = req;
    work_queue_.push_back(std::move(work));
  }
}

void DmNode::HandleScan(NodeId src, const DelegationScanRequest& req) {
  if (busy_workers_ < worker_pool_size_) {
    busy_workers_++;
    fabric_->ScheduleFor(id_, Micros(fabric_->latency().remote_get_us),
                         [this, src, req]() {
                           DelegationScanReply reply = ExecuteScan(req);
                           fabric_->Send(id_, src, kDelegationScanReplyMsg,
                                         reply.Encode(),
                                         Fabric::SendCost::kReply);
                           FinishWorker();
                         });
  } else {
    PendingWork work;
    work.from = src;
    work.is_scan = true;
    work.scan = req;
    work_queue_.push_back(std::move(work));
  }
}

void DmNode::FinishWorker() {
  busy_workers_--;
  if (work_queue_.empty()) return;
  PendingWork work = std::move(work_queue_.front());
  work_queue_.pop_front();
  if (work.is_scan) {
    HandleScan(work.from, work.scan);
  } else {
    delegated_gets_--;  // re-counted by HandleDelegation
    HandleDelegation(work.from, work.get);
  }
}

void DmNode::OnMessage(NodeId src, uint16_t kind, const std::string& payload) {
  switch (kind) {
    case kOffloadCommitMsg: {
      OffloadCommit commit;
      if (!OffloadCommit::Decode(Slice(payload), &commit).ok()) return;
      TransferRecord record;
      OffloadAck ack;
      Status s = TransferRecord::Decode(Slice(commit.transfer_record), &record);
      if (!s.ok()) {
        ack.status = Status::Code::kCorruptIndex;
        fabric_->Send(id_, src, kOffloadFailMsg, ack.Encode(),
                      Fabric::SendCost::kReply);
        return;
      }
      s = AcceptOffload(src, commit.owner_incarnation, record, &ack);
      fabric_->Send(id_, src, s.ok() ? kOffloadAckMsg : kOffloadFailMsg,
                    ack.Encode(), Fabric::SendCost::kReply);
      return;
    }
    case kReclaimMsg: {
      ReclaimRequest req;
      if (!ReclaimRequest::Decode(Slice(payload), &req).ok()) return;
      Reclaim(req.memtable_id);  // idempotent: UnknownMemtable is a no-op
      ReclaimRequest ack{req.memtable_id};
      fabric_->Send(id_, src, kReclaimAckMsg, ack.Encode(),
                    Fabric::SendCost::kReply);
      return;
    }
    case kDelegationRequestMsg: {
      DelegationRequest req;
      if (!DelegationRequest::Decode(Slice(payload), &req).ok()) return;
      HandleDelegation(src, req);
      return;
    }
    case kDelegationScanMsg: {
      DelegationScanRequest req;
      if (!DelegationScanRequest::Decode(Slice(payload), &req).ok()) return;
      HandleScan(src, req);
      return;
    }
    case kPurgeOwnerMsg: {
      Slice in(payload);
      uint32_t owner_code, incarnation;
      if (!GetFixed32(&in, &owner_code) || !GetFixed32(&in, &incarnation)) {
        return;
      }
      PurgeOwner(NodeId::Decode(owner_code), incarnation);
      return;
    }
    default:
      executor_->OnMessage(src, kind, payload);
      return;
  }
}

}  // namespace farlsm
