// Copyright (c) 2026 The farlsm Authors. All rights reserved.
// Use of this source code is governed by a BSD-style license that can be
// found in the LICENSE file.

#include "farlsm/wal.h"

#include "farlsm/coding.h"
#include "farlsm/crc32c.h"

namespace farlsm {

WalWriter::WalWriter(Env* env, std::string path)
    : env_(env), path_(std::move(path)) {}

Status WalWriter::Append(const WalRecord& record) {
  if (file_ == nullptr) {
    Status s = env_->NewAppendFile(path_, &file_);
    if (!s.ok()) return Status::WalIoError(s.ToString());
  }
  std::string body;
  PutFixed64(&body, record.seq);
  PutByte(&body, record.tombstone ? 1 : 0);
  PutLengthPrefixedSlice(&body, record.key);
  PutLengthPrefixedSlice(&body, record.value);

  std::string framed;
  PutFixed32(&framed, static_cast<uint32_t>(body.size()));
  PutFixed32(&framed, crc32c::Mask(crc32c::Value(body.data(), body.size())));
  framed.append(body);
  Status s = file_->Append(framed);
  if (!s.ok()) return Status::WalIoError(s.ToString());
  appended_seq_ = record.seq;
  return Status::OK();
}

Status WalWriter::Sync() {
  if (file_ == nullptr) return Status::OK();
  Status s = file_->Sync();
  if (!s.ok()) return Status::WalIoError(s.ToString());
  persisted_seq_ = appended_seq_;
  return Status::OK();
}

uint64_t WalWriter::offset() const {
  return file_ == nullptr ? 0 : file_->Size();
}

Status ReadWal(Env* env, const std::string& path,
               std::vector<WalRecord>* records) {
  records->clear();
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
    if (peek.size() < len) break;  // torn tail
    Slice body(peek.data(), len);
    if (crc32c::Unmask(crc) != crc32c::Value(body.data(), body.size())) {
      break;  // corrupt tail: truncate at last valid record
    }
    WalRecord record;
    uint8_t tomb;
    Slice key, value;
    if (!GetFixed64(&body, &record.seq) || !GetByte(&body, &tomb) ||
        !GetLengthPrefixedSlice(&body, &key) ||
        !GetLengthPrefixedSlice(&body, &value)) {
      break;
    }
    record.tombstone = tomb != 0;
    record.key = key.ToString();
    record.value = value.ToString();
    records->push_back(std::move(record));
    in.remove_prefix(8 + len);
  }
  return Status::OK();
}

}  // namespace farlsm
