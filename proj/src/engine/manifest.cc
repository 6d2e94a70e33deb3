// Copyright (c) 2026 The farlsm Authors. All rights reserved.
// Use of this source code is governed by a BSD-style license that can be
// found in the LICENSE file.

#include "farlsm/manifest.h"

#include <algorithm>

#include "farlsm/coding.h"
#include "farlsm/crc32c.h"

namespace farlsm {

std::string ManifestEdit::Encode() const {
  std::string out;
  PutFixed64(&out, edit_seq);
  PutFixed64(&out, last_seq);
  PutFixed64(&out, next_file_seed);
  PutFixed16(&out, static_cast<uint16_t>(added.size()));
  for (const SstMeta& meta : added) meta.EncodeTo(&out);
  PutFixed16(&out, static_cast<uint16_t>(removed.size()));
  for (const auto& [level, number] : removed) {
    PutFixed32(&out, level);
    PutFixed64(&out, number);
  }
  PutFixed16(&out, static_cast<uint16_t>(flushed_shards.size()));
  for (const auto& [memtable, shard] : flushed_shards) {
    PutFixed64(&out, memtable);
    PutFixed32(&out, shard);
  }
  return out;
}

Status ManifestEdit::Decode(Slice input, ManifestEdit* out) {
  uint16_t added_count, removed_count, flushed_count;
  if (!GetFixed64(&input, &out->edit_seq) ||
      !GetFixed64(&input, &out->last_seq) ||
      !GetFixed64(&input, &out->next_file_seed) ||
      !GetFixed16(&input, &added_count)) {
    return Status::CorruptManifest("short edit");
  }
  out->added.clear();
  for (uint16_t i = 0; i < added_count; i++) {
    SstMeta meta;
    Status s = SstMeta::DecodeFrom(&input, &meta);
    if (!s.ok()) return Status::CorruptManifest("bad file meta");
    out->added.push_back(std::move(meta));
  }
  if (!GetFixed16(&input, &removed_count)) {
    return Status::CorruptManifest("short removed list");
  }
  out->removed.clear();
  for (uint16_t i = 0; i < removed_count; i++) {
    uint32_t level;
    uint64_t number;
    if (!GetFixed32(&input, &level) || !GetFixed64(&input, &number)) {
      return Status::CorruptManifest("short removed entry");
    }
    out->removed.emplace_back(level, number);
  }
  if (!GetFixed16(&input, &flushed_count)) {
    return Status::CorruptManifest("short flushed list");
  }
  out->flushed_shards.clear();
  for (uint16_t i = 0; i < flushed_count; i++) {
    uint64_t memtable;
    uint32_t shard;
    if (!GetFixed64(&input, &memtable) || !GetFixed32(&input, &shard)) {
      return Status::CorruptManifest("short flushed entry");
    }
    out->flushed_shards.emplace_back(memtable, shard);
  }
  return Status::OK();
}

void VersionState::Apply(const ManifestEdit& edit) {
  for (const auto& [level, number] : edit.removed) {
    if (level >= levels.size()) continue;
    auto& files = levels[level];
    files.erase(std::remove_if(files.begin(), files.end(),
                               [number = number](const SstMeta& m) {
                                 return m.file_number == number;
                               }),
                files.end());
  }
  for (const SstMeta& meta : edit.added) {
    if (meta.level < levels.size()) {
      levels[meta.level].push_back(meta);
    }
  }
  for (const auto& pair : edit.flushed_shards) {
    flushed_shards.insert(pair);
  }
  last_seq = std::max(last_seq, edit.last_seq);
  next_file_seed = std::max(next_file_seed, edit.next_file_seed);
  edit_count++;
}

uint64_t VersionState::LevelBytes(uint32_t level) const {
  uint64_t total = 0;
  for (const SstMeta& m : levels[level]) total += m.size;
  return total;
}

const SstMeta* VersionState::FindFile(uint64_t file_number) const {
  for (const auto& level : levels) {
    for (const SstMeta& m : level) {
      if (m.file_number == file_number) return &m;
    }
  }
  return nullptr;
}

std::vector<uint64_t> VersionState::LiveFileNumbers() const {
  std::vector<uint64_t> out;
  for (const auto& level : levels) {
    for (const SstMeta& m : level) out.push_back(m.file_number);
  }
  std::sort(out.begin(), out.end());
  return out;
}

ManifestWriter::ManifestWriter(Env* env, std::string path)
    : env_(env), path_(std::move(path)) {}

Status ManifestWriter::Append(const ManifestEdit& edit) {
  if (file_ == nullptr) {
    Status s = env_->NewAppendFile(path_, &file_);
    if (!s.ok()) return Status::CorruptManifest(s.ToString());
  }
  std::string body = edit.Encode();
  std::string framed;
  PutFixed32(&framed, static_cast<uint32_t>(body.size()));
  PutFixed32(&framed, crc32c::Mask(crc32c::Value(body.data(), body.size())));
  framed.append(body);
  Status s = file_->Append(framed);
  if (!s.ok()) return s;
  return file_->Sync();
}

Status ReadManifest(Env* env, const std::string& path, VersionState* out) {
  *out = VersionState();
  std::string contents;
  Status s = env->ReadFile(path, &contents);
  if (s.code() == Status::Code::kFileNotFound) return Status::OK();
  if (!s.ok()) return s;

  Slice in(contents);
  while (in.size() >= 8) {
    uint32_t len, crc;
    Slice peek = in;
    GetFixed32(&peek, &len);
    GetFixed32(&peek, &crc);
    if (peek.size() < len) break;  // torn tail, ignore
    Slice body(peek.data(), len);
    if (crc32c::Unmask(crc) != crc32c::Value(body.data(), body.size())) {
      break;
    }
    ManifestEdit edit;
    Status es = ManifestEdit::Decode(body, &edit);
    if (!es.ok()) return es;  // structural damage mid-log is fatal
    out->Apply(edit);
    in.remove_prefix(8 + len);
  }
  return Status::OK();
}

}  // namespace farlsm
