// Copyright (c) 2026 The farlsm Authors. All rights reserved.
// Use of this source code is governed by a BSD-style license that can be
// found in the LICENSE file.

#pragma once

#include <map>
#include <vector>

#include "farlsm/fabric.h"
#include "farlsm/message.h"
#include "farlsm/sst.h"

namespace farlsm {

// DS request/reply payloads.

struct WriteSstRequest {
  uint64_t job_id = 0;
  uint32_t attempt = 0;
  SstMeta meta;
  std::string bytes;

  std::string Encode() const;
  static Status Decode(Slice input, WriteSstRequest* out);
};

struct DsRequest {  // fetch tail / read block / read file / delete / gc
  uint64_t file_number = 0;
  uint64_t cookie = 0;
  uint64_t offset = 0;
  uint32_t size = 0;
  uint32_t keep_attempt = 0;  // gc: survivor attempt for the job
  uint64_t job_id = 0;

  std::string Encode() const;
  static Status Decode(Slice input, DsRequest* out);
};

struct DsReply {
  uint64_t cookie = 0;
  uint64_t file_number = 0;
  Status::Code status = Status::Code::kOk;
  uint64_t tail_offset = 0;
  uint64_t file_size = 0;
  std::string bytes;

  std::string Encode() const;
  static Status Decode(Slice input, DsReply* out);
};

// Simulated disaggregated-storage node: an immutable SST file store behind a
// bandwidth-capped link. A file becomes durable only when its transfer
// (through the final footer byte) completes; partial writes are invisible.
class DsNode : public MessageHandler {
 public:
  DsNode(Fabric* fabric, NodeId id);

  void OnMessage(NodeId src, uint16_t kind, const std::string& payload) override;

  // Direct accessors for tests and same-process verification.
  std::vector<uint64_t> ListFileNumbers() const;
  bool HasFile(uint64_t file_number) const { return files_.count(file_number); }
  const std::string* FileBytes(uint64_t file_number) const;
  const SstMeta* FileMeta(uint64_t file_number) const;
  uint64_t TotalBytes() const;
  // Flips one byte in a durable file (corruption testing).
  bool CorruptByte(uint64_t file_number, uint64_t offset);

  NodeId id() const { return id_; }

 private:
  struct StoredFile {
    SstMeta meta;
    std::string bytes;
    uint64_t job_id = 0;
    uint32_t attempt = 0;
  };

  Fabric* fabric_;
  NodeId id_;
  std::map<uint64_t, StoredFile> files_;
};

}  // namespace farlsm
