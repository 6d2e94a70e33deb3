// Copyright (c) 2026 The farlsm Authors. All rights reserved.
// Use of this source code is governed by a BSD-style license that can be
// found in the LICENSE file.

#pragma once

#include <map>
#include <memory>
#include <set>
#include <vector>

#include "farlsm/env.h"
#include "farlsm/sst.h"

namespace farlsm {

constexpr int kNumLevels = 7;

// One atomic edit: the only way flushed or compacted data becomes visible.
struct ManifestEdit {
  uint64_t edit_seq = 0;
  std::vector<SstMeta> added;                          // carry their level
  std::vector<std::pair<uint32_t, uint64_t>> removed;  // (level, file number)
  // Shard blocks whose content is now durable in DS; WAL replay skips them.
  std::vector<std::pair<uint64_t, uint32_t>> flushed_shards;
  SequenceNumber last_seq = 0;
  uint64_t next_file_seed = 0;

  std::string Encode() const;
  static Status Decode(Slice input, ManifestEdit* out);
};

// Replayed view of the manifest: the live file set per level plus the
// flushed-shard ledger.
struct VersionState {
  std::vector<std::vector<SstMeta>> levels{kNumLevels};
  std::set<std::pair<uint64_t, uint32_t>> flushed_shards;
  SequenceNumber last_seq = 0;
  uint64_t next_file_seed = 1;
  uint64_t edit_count = 0;

  void Apply(const ManifestEdit& edit);
  uint64_t LevelBytes(uint32_t level) const;
  const SstMeta* FindFile(uint64_t file_number) const;
  std::vector<uint64_t> LiveFileNumbers() const;
};

// Append-only, CRC-protected edit log with fsync-before-visibility.
class ManifestWriter {
 public:
  ManifestWriter(Env* env, std::string path);

  Status Append(const ManifestEdit& edit);  // durable before returning

 private:
  Env* env_;
  std::string path_;
  std::unique_ptr<AppendFile> file_;
};

// Replays every intact edit. A torn tail is ignored; any other structural
// damage is fatal (CorruptManifest).
Status ReadManifest(Env* env, const std::string& path, VersionState* out);

}  // namespace farlsm
