// Copyright (c) 2026 The farlsm Authors. All rights reserved.
// Use of this source code is governed by a BSD-style license that can be
// found in the LICENSE file.

#pragma once

#include <string>
#include <utility>

#include "farlsm/slice.h"

namespace farlsm {

// Result of an operation. Ok() or a code plus message. Codes cover both
// generic storage failures and the cluster/protocol error surface.
class Status {
 public:
  enum class Code : uint8_t {
    kOk = 0,
    kNotFound,
    kCorruption,
    kInvalidArgument,
    kIoError,
    kBusy,
    // Fabric and remote-memory errors.
    kCapacityExceeded,
    kInvalidLength,
    kOutOfBounds,
    kOutOfRange,
    kNodeDown,
    kUndeliverable,
    // Memtable / engine lifecycle.
    kMemtableFull,
    kInvalidState,
    kStalled,
    kWalIoError,
    kCorruptWal,
    kCorruptManifest,
    // DM hosting.
    kCorruptIndex,
    kUnknownMemtable,
    // Flush protocol.
    kWalNotPersisted,
    kMemtableNotOffloaded,
    kDmUnreachable,
    kDsWriteFailed,
    kInjectedCrash,
    kStaleCommit,
    // Scheduler.
    kStaleTelemetry,
    kNoEligibleExecutor,
    kCorruptLog,
    // DS storage.
    kCorruptBlock,
    kFileNotFound,
  };

  Status() : code_(Code::kOk) {}
  static Status OK() { return Status(); }

  static Status NotFound(Slice msg = Slice()) {
    return Status(Code::kNotFound, msg);
  }
  static Status Corruption(Slice msg = Slice()) {
    return Status(Code::kCorruption, msg);
  }
  static Status InvalidArgument(Slice msg = Slice()) {
    return Status(Code::kInvalidArgument, msg);
  }
  static Status IoError(Slice msg = Slice()) {
    return Status(Code::kIoError, msg);
  }
  static Status Busy(Slice msg = Slice()) { return Status(Code::kBusy, msg); }
  static Status CapacityExceeded(Slice msg = Slice()) {
    return Status(Code::kCapacityExceeded, msg);
  }
  static Status InvalidLength(Slice msg = Slice()) {
    return Status(Code::kInvalidLength, msg);
  }
  static Status OutOfBounds(Slice msg = Slice()) {
    return Status(Code::kOutOfBounds, msg);
  }
  static Status OutOfRange(Slice msg = Slice()) {
    return Status(Code::kOutOfRange, msg);
  }
  static Status NodeDown(Slice msg = Slice()) {
    return Status(Code::kNodeDown, msg);
  }
  static Status Undeliverable(Slice msg = Slice()) {
    return Status(Code::kUndeliverable, msg);
  }
  static Status MemtableFull(Slice msg = Slice()) {
    return Status(Code::kMemtableFull, msg);
  }
  static Status InvalidState(Slice msg = Slice()) {
    return Status(Code::kInvalidState, msg);
  }
  static Status Stalled(Slice msg = Slice()) {
    return Status(Code::kStalled, msg);
  }
  static Status WalIoError(Slice msg = Slice()) {
    return Status(Code::kWalIoError, msg);
  }
  static Status CorruptWal(Slice msg = Slice()) {
    return Status(Code::kCorruptWal, msg);
  }
  static Status CorruptManifest(Slice msg = Slice()) {
    return Status(Code::kCorruptManifest, msg);
  }
  static Status CorruptIndex(Slice msg = Slice()) {
    return Status(Code::kCorruptIndex, msg);
  }
  static Status UnknownMemtable(Slice msg = Slice()) {
    return Status(Code::kUnknownMemtable, msg);
  }
  static Status WalNotPersisted(Slice msg = Slice()) {
    return Status(Code::kWalNotPersisted, msg);
  }
  static Status MemtableNotOffloaded(Slice msg = Slice()) {
    return Status(Code::kMemtableNotOffloaded, msg);
  }
  static Status DmUnreachable(Slice msg = Slice()) {
    return Status(Code::kDmUnreachable, msg);
  }
  static Status DsWriteFailed(Slice msg = Slice()) {
    return Status(Code::kDsWriteFailed, msg);
  }
  static Status InjectedCrash(Slice msg = Slice()) {
    return Status(Code::kInjectedCrash, msg);
  }
  static Status StaleCommit(Slice msg = Slice()) {
    return Status(Code::kStaleCommit, msg);
  }
  static Status StaleTelemetry(Slice msg = Slice()) {
    return Status(Code::kStaleTelemetry, msg);
  }
  static Status NoEligibleExecutor(Slice msg = Slice()) {
    return Status(Code::kNoEligibleExecutor, msg);
  }
  static Status CorruptLog(Slice msg = Slice()) {
    return Status(Code::kCorruptLog, msg);
  }
  static Status CorruptBlock(Slice msg = Slice()) {
    return Status(Code::kCorruptBlock, msg);
  }
  static Status FileNotFound(Slice msg = Slice()) {
    return Status(Code::kFileNotFound, msg);
  }

  bool ok() const { return code_ == Code::kOk; }
  bool IsNotFound() const { return code_ == Code::kNotFound; }
  bool IsStalled() const { return code_ == Code::kStalled; }
  bool IsMemtableFull() const { return code_ == Code::kMemtableFull; }
  bool IsUnknownMemtable() const { return code_ == Code::kUnknownMemtable; }
  bool IsNodeDown() const { return code_ == Code::kNodeDown; }
  bool IsCapacityExceeded() const {
    return code_ == Code::kCapacityExceeded;
  }

  Code code() const { return code_; }

  std::string ToString() const;

 private:
  Status(Code code, Slice msg) : code_(code), msg_(msg.ToString()) {}

  Code code_;
  std::string msg_;
};

}  // namespace farlsm
