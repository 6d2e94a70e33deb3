// Copyright (c) 2026 The farlsm Authors. All rights reserved.
// Use of this source code is governed by a BSD-style license that can be
// found in the LICENSE file.

#pragma once

#include "farlsm/engine.h"
#include "farlsm/sst.h"

namespace farlsm {

// Cached SST tail (footer/index/bloom/props) plus fetched data blocks.
struct Engine::TableHandle {
  uint64_t file_number = 0;
  bool loaded = false;
  bool loading = false;
  SstReader reader;
  std::map<uint64_t, std::string> blocks;  // offset -> block bytes
  std::vector<std::function<void(Status, TableHandle*)>> waiters;
};

struct Engine::GetOp {
  std::string key;
  SequenceNumber snapshot = kMaxSequence;
  uint32_t shard = 0;
  GetCallback done;
  std::vector<uint64_t> ds_candidates;
  int dm_retries = 0;
};

struct Engine::ScanOp {
  std::string start;
  std::string end;  // exclusive; empty = unbounded
  SequenceNumber snapshot = kMaxSequence;
  size_t limit = SIZE_MAX;
  ScanCallback done;

  struct Tuple {
    std::string key;
    std::string value;
    SequenceNumber seq;
    bool tombstone;
  };
  std::vector<Tuple> gathered;
  size_t pending = 0;  // outstanding async sources
  bool failed = false;
  Status fail_status;
  std::vector<uint64_t> remote_ids;
  std::vector<uint64_t> ds_files;
};

inline std::string WalFileName(uint64_t memtable_id) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "wal-%010llu.log",
                static_cast<unsigned long long>(memtable_id));
  return buf;
}

}  // namespace farlsm
