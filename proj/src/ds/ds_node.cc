// Copyright (c) 2026 The farlsm Authors. All rights reserved.
// Use of this source code is governed by a BSD-style license that can be
// found in the LICENSE file.

#include "farlsm/ds_node.h"

namespace farlsm {

std::string WriteSstRequest::Encode() const {
  std::string out;
  PutFixed64(&out, job_id);
  PutFixed32(&out, attempt);
  meta.EncodeTo(&out);
  PutLengthPrefixedSlice(&out, bytes);
  return out;
}

Status WriteSstRequest::Decode(Slice input, WriteSstRequest* out) {
  Slice bytes;
  if (!GetFixed64(&input, &out->job_id) || !GetFixed32(&input, &out->attempt)) {
    return Status::Corruption("short write request");
  }
  Status s = SstMeta::DecodeFrom(&input, &out->meta);
  if (!s.ok()) return s;
  if (!GetLengthPrefixedSlice(&input, &bytes)) {
    return Status::Corruption("short write payload");
  }
  out->bytes = bytes.ToString();
  return Status::OK();
}

std::string DsRequest::Encode() const {
  std::string out;
  PutFixed64(&out, file_number);
  PutFixed64(&out, cookie);
  PutFixed64(&out, offset);
  PutFixed32(&out, size);
  PutFixed32(&out, keep_attempt);
  PutFixed64(&out, job_id);
  return out;
}

Status DsRequest::Decode(Slice input, DsRequest* out) {
  if (!GetFixed64(&input, &out->file_number) ||
      !GetFixed64(&input, &out->cookie) || !GetFixed64(&input, &out->offset) ||
      !GetFixed32(&input, &out->size) ||
      !GetFixed32(&input, &out->keep_attempt) ||
      !GetFixed64(&input, &out->job_id)) {
    return Status::Corruption("short ds request");
  }
  return Status::OK();
}

std::string DsReply::Encode() const {
  std::string out;
  PutFixed64(&out, cookie);
  PutFixed64(&out, file_number);
  PutByte(&out, static_cast<uint8_t>(status));
  PutFixed64(&out, tail_offset);
  PutFixed64(&out, file_size);
  PutLengthPrefixedSlice(&out, bytes);
  return out;
}

Status DsReply::Decode(Slice input, DsReply* out) {
  uint8_t status;
  Slice bytes;
  if (!GetFixed64(&input, &out->cookie) ||
      !GetFixed64(&input, &out->file_number) || !GetByte(&input, &status) ||
      !GetFixed64(&input, &out->tail_offset) ||
      !GetFixed64(&input, &out->file_size) ||
      !GetLengthPrefixedSlice(&input, &bytes)) {
    return Status::Corruption("short ds reply");
  }
  out->status = static_cast<Status::Code>(status);
  out->bytes = bytes.ToString();
  return Status::OK();
}

DsNode::DsNode(Fabric* fabric, NodeId id) : fabric_(fabric), id_(id) {
  fabric_->BindHandler(id_, this);
}

void DsNode::OnMessage(NodeId src, uint16_t kind, const std::string& payload) {
  switch (kind) {
    case kWriteSstMsg: {
      WriteSstRequest req;
      if (!WriteSstRequest::Decode(Slice(payload), &req).ok()) return;
      StoredFile file;
      file.meta = req.meta;
      file.meta.size = req.bytes.size();
      file.bytes = std::move(req.bytes);
      file.job_id = req.job_id;
      file.attempt = req.attempt;
      uint64_t number = req.meta.file_number;
      files_[number] = std::move(file);
      DsReply ack;
      ack.file_number = number;
      fabric_->Send(id_, src, kWriteSstAckMsg, ack.Encode(),
                    Fabric::SendCost::kReply);
      return;
    }
    case kFetchTailMsg: {
      DsRequest req;
      if (!DsRequest::Decode(Slice(payload), &req).ok()) return;
      DsReply reply;
      reply.cookie = req.cookie;
      reply.file_number = req.file_number;
      auto it = files_.find(req.file_number);
      if (it == files_.end()) {
        reply.status = Status::Code::kFileNotFound;
        fabric_->Send(id_, src, kDsErrorMsg, reply.Encode(),
                      Fabric::SendCost::kReply);
        return;
      }
      const std::string& bytes = it->second.bytes;
      uint64_t tail_offset;
      Status s = SstReader::TailSpan(
          Slice(bytes.data() + bytes.size() - kSstFooterSize, kSstFooterSize),
          bytes.size(), &tail_offset);
      if (!s.ok()) {
        reply.status = s.code();
        fabric_->Send(id_, src, kDsErrorMsg, reply.Encode(),
                      Fabric::SendCost::kReply);
        return;
      }
      reply.tail_offset = tail_offset;
      reply.file_size = bytes.size();
      reply.bytes = bytes.substr(tail_offset);
      fabric_->BulkSend(id_, src, kTailDataMsg, reply.Encode());
      return;
    }
    case kReadBlockMsg: {
      DsRequest req;
      if (!DsRequest::Decode(Slice(payload), &req).ok()) return;
      DsReply reply;
      reply.cookie = req.cookie;
      reply.file_number = req.file_number;
      auto it = files_.find(req.file_number);
      if (it == files_.end()) {
        reply.status = Status::Code::kFileNotFound;
        fabric_->Send(id_, src, kDsErrorMsg, reply.Encode(),
                      Fabric::SendCost::kReply);
        return;
      }
      const std::string& bytes = it->second.bytes;
      if (req.offset + req.size > bytes.size()) {
        reply.status = Status::Code::kOutOfRange;
        fabric_->Send(id_, src, kDsErrorMsg, reply.Encode(),
                      Fabric::SendCost::kReply);
        return;
      }
      reply.bytes = bytes.substr(req.offset, req.size);
      fabric_->BulkSend(id_, src, kBlockDataMsg, reply.Encode());
      return;
    }
    case kReadFileMsg: {
      DsRequest req;
      if (!DsRequest::Decode(Slice(payload), &req).ok()) return;
      DsReply reply;
      reply.cookie = req.cookie;
      reply.file_number = req.file_number;
      auto it = files_.find(req.file_number);
      if (it == files_.end()) {
        reply.status = Status::Code::kFileNotFound;
        fabric_->Send(id_, src, kDsErrorMsg, reply.Encode(),
                      Fabric::SendCost::kReply);
        return;
      }
      reply.file_size = it->second.bytes.size();
      reply.bytes = it->second.bytes;
      fabric_->BulkSend(id_, src, kFileDataMsg, reply.Encode());
      return;
    }
    case kDeleteSstMsg: {
      DsRequest req;
      if (!DsRequest::Decode(Slice(payload), &req).ok()) return;
      if (req.file_number != 0) {
        files_.erase(req.file_number);
      } else if (req.job_id != 0) {
        // GC losing attempts of a finalized job.
        for (auto it = files_.begin(); it != files_.end();) {
          if (it->second.job_id == req.job_id &&
              it->second.attempt != req.keep_attempt) {
            it = files_.erase(it);
          } else {
            ++it;
          }
        }
      }
      return;
    }
    default:
      return;
  }
}

std::vector<uint64_t> DsNode::ListFileNumbers() const {
  std::vector<uint64_t> out;
  for (const auto& [number, file] : files_) out.push_back(number);
  return out;
}

const std::string* DsNode::FileBytes(uint64_t file_number) const {
  auto it = files_.find(file_number);
  return it == files_.end() ? nullptr : &it->second.bytes;
}

const SstMeta* DsNode::FileMeta(uint64_t file_number) const {
  auto it = files_.find(file_number);
  return it == files_.end() ? nullptr : &it->second.meta;
}

uint64_t DsNode::TotalBytes() const {
  uint64_t total = 0;
  for (const auto& [number, file] : files_) total += file.bytes.size();
  return total;
}

bool DsNode::CorruptByte(uint64_t file_number, uint64_t offset) {
  auto it = files_.find(file_number);
  if (it == files_.end() || offset >= it->second.bytes.size()) return false;
  it->second.bytes[offset] ^= 0x40;
  return true;
}

}  // namespace farlsm
