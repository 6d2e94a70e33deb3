// Copyright (c) 2026 The farlsm Authors. All rights reserved.
// Use of this source code is governed by a BSD-style license that can be
// found in the LICENSE file.

#pragma once

#include <memory>
#include <string>
#include <vector>

#include "farlsm/env.h"
#include "farlsm/kv_format.h"

namespace farlsm {

// Write-ahead log, one file per memtable generation. Records are
// length-prefixed and CRC-protected:
//   len u32 | masked crc32 u32 | body{seq u64, op u8, key lp, value lp}
struct WalRecord {
  SequenceNumber seq = 0;
  bool tombstone = false;
  std::string key;
  std::string value;
};

class WalWriter {
 public:
  WalWriter(Env* env, std::string path);

  Status Append(const WalRecord& record);
  Status Sync();
  SequenceNumber persisted_seq() const { return persisted_seq_; }
  uint64_t offset() const;
  const std::string& path() const { return path_; }

 private:
  Env* env_;
  std::string path_;
  std::unique_ptr<AppendFile> file_;
  SequenceNumber appended_seq_ = 0;
  SequenceNumber persisted_seq_ = 0;
};

// Replays all intact records of a WAL file; a torn or corrupt tail is
// truncated silently (the records before it are honored).
Status ReadWal(Env* env, const std::string& path,
               std::vector<WalRecord>* records);

}  // namespace farlsm
