// Copyright (c) 2026 The farlsm Authors. All rights reserved.
// Use of this source code is governed by a BSD-style license that can be
// found in the LICENSE file.

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "farlsm/coding.h"
#include "farlsm/fabric.h"
#include "farlsm/kv_format.h"
#include "farlsm/status.h"

namespace farlsm {

// Message kinds carried over the fabric. Control-plane kinds are small;
// kPackageTransfer and the DS kinds carry data payloads.
enum MsgKind : uint16_t {
  // Memtable offload.
  kOffloadCommitMsg = 1,  // CN -> DM: all parts written; TransferRecord + id
  kOffloadAckMsg = 2,     // DM -> CN: searchable; per-shard blooms attached
  kOffloadFailMsg = 3,
  kReclaimMsg = 4,  // CN -> DM after Manifest install
  kReclaimAckMsg = 5,

  // Read delegation.
  kDelegationRequestMsg = 10,
  kDelegationReplyMsg = 11,
  kDelegationScanMsg = 12,
  kDelegationScanReplyMsg = 13,

  // Flush offloading protocol.
  kControlMsg = 20,          // six-kind ControlMessage
  kPackageTransferMsg = 21,  // post-ACCEPT package forward (data plane)

  // Scheduler plumbing.
  kHeartbeatMsg = 30,
  kRePrepareMsg = 31,   // scheduler -> owner: job discarded, re-prepare
  kPurgeOwnerMsg = 32,  // scheduler -> DM: drop state of a dead incarnation

  // DS storage.
  kWriteSstMsg = 40,  // bulk: file bytes + meta
  kWriteSstAckMsg = 41,
  kFetchTailMsg = 42,  // footer/index/bloom/props section
  kTailDataMsg = 43,
  kReadBlockMsg = 44,
  kBlockDataMsg = 45,
  kReadFileMsg = 46,  // whole file, compaction input
  kFileDataMsg = 47,
  kDeleteSstMsg = 48,
  kDsErrorMsg = 49,
};

// Values at or below this ride inline in delegation replies; larger ones
// come back as coordinates for a follow-up one-sided read.
constexpr uint32_t kInlineReplyThreshold = 256;

// The six flush-protocol control messages.
enum class ControlKind : uint8_t {
  kPrepare = 1,
  kAssign = 2,
  kAccept = 3,
  kCommit = 4,
  kAbort = 5,
  kAck = 6,
};

const char* ControlKindName(ControlKind kind);

// Wire format: kind u8 | job id u64 | payload length u32 | payload bytes.
struct ControlMessage {
  ControlKind kind = ControlKind::kPrepare;
  uint64_t job_id = 0;
  std::string payload;

  std::string Encode() const {
    std::string out;
    PutByte(&out, static_cast<uint8_t>(kind));
    PutFixed64(&out, job_id);
    PutFixed32(&out, static_cast<uint32_t>(payload.size()));
    out.append(payload);
    return out;
  }

  static Status Decode(Slice input, ControlMessage* out) {
    uint8_t kind;
    uint32_t len;
    if (!GetByte(&input, &kind) || !GetFixed64(&input, &out->job_id) ||
        !GetFixed32(&input, &len) || input.size() < len) {
      return Status::Corruption("short control message");
    }
    if (kind < 1 || kind > 6) return Status::Corruption("bad control kind");
    out->kind = static_cast<ControlKind>(kind);
    out->payload.assign(input.data(), len);
    return Status::OK();
  }
};

// Delegated lookup. Wire format: msg type u8 | shard_id u8 | memtable count
// u16 | snapshot_seq u64 | length-prefixed key | memtable ids (u64 each,
// newest first).
struct DelegationRequest {
  uint8_t shard_id = 0;
  SequenceNumber snapshot_seq = 0;
  std::string key;
  std::vector<uint64_t> memtable_ids;  // newest first
  uint64_t request_id = 0;             // correlates the reply

  std::string Encode() const;
  static Status Decode(Slice input, DelegationRequest* out);
};

struct DelegationReply {
  enum class Outcome : uint8_t {
    kFoundInline = 1,
    kFoundIndirect = 2,
    kNotFound = 3,
    kUnknownMemtable = 4,
  };
  Outcome outcome = Outcome::kNotFound;
  uint64_t request_id = 0;
  uint64_t served_by = 0;  // memtable id, 0 = none
  bool tombstone = false;
  SequenceNumber seq = 0;
  // Remote coordinates of the tuple (valid for found outcomes); enables the
  // caller to cache a key-offset entry and issue follow-up one-sided reads.
  uint64_t region_id = 0;
  uint64_t offset = 0;
  uint32_t length = 0;
  std::string value;  // only for kFoundInline

  std::string Encode() const;
  static Status Decode(Slice input, DelegationReply* out);
};

// Delegated range fetch over one hosted memtable: returns all in-range
// tuples with seq <= snapshot, newest-first per key, bounded by max_bytes
// with a resume key for continuation.
struct DelegationScanRequest {
  uint64_t memtable_id = 0;
  uint64_t request_id = 0;
  SequenceNumber snapshot_seq = 0;
  std::string start_key;  // inclusive
  std::string end_key;    // exclusive; empty = unbounded
  uint32_t max_bytes = 1 << 20;

  std::string Encode() const;
  static Status Decode(Slice input, DelegationScanRequest* out);
};

struct DelegationScanReply {
  uint64_t request_id = 0;
  Status::Code status = Status::Code::kOk;
  bool truncated = false;
  std::string resume_key;
  std::string tuples;  // concatenated kv_format tuples

  std::string Encode() const;
  static Status Decode(Slice input, DelegationScanReply* out);
};

struct HeartbeatMsg {
  double u_cpu = 0;
  double u_io = 0;
  double u_queue = 0;
  uint32_t incarnation = 1;

  std::string Encode() const;
  static Status Decode(Slice input, HeartbeatMsg* out);
};

}  // namespace farlsm
