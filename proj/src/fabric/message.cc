// Copyright (c) 2026 The farlsm Authors. All rights reserved.
// Use of this source code is governed by a BSD-style license that can be
// found in the LICENSE file.

#include "farlsm/message.h"

namespace farlsm {

const char* ControlKindName(ControlKind kind) {
  switch (kind) {
    case ControlKind::kPrepare: return "PREPARE";
    case ControlKind::kAssign: return "ASSIGN";
    case ControlKind::kAccept: return "ACCEPT";
    case ControlKind::kCommit: return "COMMIT";
    case ControlKind::kAbort: return "ABORT";
    case ControlKind::kAck: return "ACK";
  }
  return "?";
}

std::string DelegationRequest::Encode() const {
  std::string out;
  PutByte(&out, kDelegationRequestMsg & 0xff);
  PutByte(&out, shard_id);
  PutFixed16(&out, static_cast<uint16_t>(memtable_ids.size()));
  PutFixed64(&out, snapshot_seq);
  PutLengthPrefixedSlice(&out, key);
  for (uint64_t id : memtable_ids) PutFixed64(&out, id);
  PutFixed64(&out, request_id);
  return out;
}

Status DelegationRequest::Decode(Slice input, DelegationRequest* out) {
  uint8_t type;
  uint16_t count;
  Slice key;
  if (!GetByte(&input, &type) || !GetByte(&input, &out->shard_id) ||
      !GetFixed16(&input, &count) || !GetFixed64(&input, &out->snapshot_seq) ||
      !GetLengthPrefixedSlice(&input, &key)) {
    return Status::Corruption("short delegation request");
  }
  out->key = key.ToString();
  out->memtable_ids.clear();
  for (uint16_t i = 0; i < count; i++) {
    uint64_t id;
    if (!GetFixed64(&input, &id)) {
      return Status::Corruption("short delegation id list");
    }
    out->memtable_ids.push_back(id);
  }
  if (!GetFixed64(&input, &out->request_id)) {
    return Status::Corruption("short delegation request id");
  }
  return Status::OK();
}

std::string DelegationReply::Encode() const {
  std::string out;
  PutByte(&out, static_cast<uint8_t>(outcome));
  PutFixed64(&out, request_id);
  PutFixed64(&out, served_by);
  PutByte(&out, tombstone ? 1 : 0);
  PutFixed64(&out, seq);
  PutFixed64(&out, region_id);
  PutFixed64(&out, offset);
  PutFixed32(&out, length);
  PutLengthPrefixedSlice(&out, value);
  return out;
}

Status DelegationReply::Decode(Slice input, DelegationReply* out) {
  uint8_t outcome, tomb;
  Slice value;
  if (!GetByte(&input, &outcome) || !GetFixed64(&input, &out->request_id) ||
      !GetFixed64(&input, &out->served_by) || !GetByte(&input, &tomb) ||
      !GetFixed64(&input, &out->seq) || !GetFixed64(&input, &out->region_id) ||
      !GetFixed64(&input, &out->offset) || !GetFixed32(&input, &out->length) ||
      !GetLengthPrefixedSlice(&input, &value)) {
    return Status::Corruption("short delegation reply");
  }
  out->outcome = static_cast<Outcome>(outcome);
  out->tombstone = tomb != 0;
  out->value = value.ToString();
  return Status::OK();
}

std::string DelegationScanRequest::Encode() const {
  std::string out;
  PutFixed64(&out, memtable_id);
  PutFixed64(&out, request_id);
  PutFixed64(&out, snapshot_seq);
  PutLengthPrefixedSlice(&out, start_key);
  PutLengthPrefixedSlice(&out, end_key);
  PutFixed32(&out, max_bytes);
  return out;
}

Status DelegationScanRequest::Decode(Slice input, DelegationScanRequest* out) {
  Slice start, end;
  if (!GetFixed64(&input, &out->memtable_id) ||
      !GetFixed64(&input, &out->request_id) ||
      !GetFixed64(&input, &out->snapshot_seq) ||
      !GetLengthPrefixedSlice(&input, &start) ||
      !GetLengthPrefixedSlice(&input, &end) ||
      !GetFixed32(&input, &out->max_bytes)) {
    return Status::Corruption("short scan request");
  }
  out->start_key = start.ToString();
  out->end_key = end.ToString();
  return Status::OK();
}

std::string DelegationScanReply::Encode() const {
  std::string out;
  PutFixed64(&out, request_id);
  PutByte(&out, static_cast<uint8_t>(status));
  PutByte(&out, truncated ? 1 : 0);
  PutLengthPrefixedSlice(&out, resume_key);
  PutLengthPrefixedSlice(&out, tuples);
  return out;
}

Status DelegationScanReply::Decode(Slice input, DelegationScanReply* out) {
  uint8_t status, truncated;
  Slice resume, tuples;
  if (!GetFixed64(&input, &out->request_id) || !GetByte(&input, &status) ||
      !GetByte(&input, &truncated) ||
      !GetLengthPrefixedSlice(&input, &resume) ||
      !GetLengthPrefixedSlice(&input, &tuples)) {
    return Status::Corruption("short scan reply");
  }
  out->status = static_cast<Status::Code>(status);
  out->truncated = truncated != 0;
  out->resume_key = resume.ToString();
  out->tuples = tuples.ToString();
  return Status::OK();
}

std::string HeartbeatMsg::Encode() const {
  std::string out;
  auto put_ratio = [&out](double v) {
    PutFixed32(&out, static_cast<uint32_t>(v * 1e6));
  };
  put_ratio(u_cpu);
  put_ratio(u_io);
  put_ratio(u_queue);
  PutFixed32(&out, incarnation);
  return out;
}

Status HeartbeatMsg::Decode(Slice input, HeartbeatMsg* out) {
  uint32_t cpu, io, queue;
  if (!GetFixed32(&input, &cpu) || !GetFixed32(&input, &io) ||
      !GetFixed32(&input, &queue) || !GetFixed32(&input, &out->incarnation)) {
    return Status::Corruption("short heartbeat");
  }
  out->u_cpu = cpu / 1e6;
  out->u_io = io / 1e6;
  out->u_queue = queue / 1e6;
  return Status::OK();
}

}  // namespace farlsm
