// Copyright (c) 2026 The farlsm Authors. All rights reserved.
// Use of this source code is governed by a BSD-style license that can be
// found in the LICENSE file.

#include "farlsm/status.h"

namespace farlsm {

namespace {
const char* CodeName(Status::Code code) {
  switch (code) {
    case Status::Code::kOk: return "OK";
    case Status::Code::kNotFound: return "NotFound";
    case Status::Code::kCorruption: return "Corruption";
    case Status::Code::kInvalidArgument: return "InvalidArgument";
    case Status::Code::kIoError: return "IoError";
    case Status::Code::kBusy: return "Busy";
    case Status::Code::kCapacityExceeded: return "CapacityExceeded";
    case Status::Code::kInvalidLength: return "InvalidLength";
    case Status::Code::kOutOfBounds: return "OutOfBounds";
    case Status::Code::kOutOfRange: return "OutOfRange";
    case Status::Code::kNodeDown: return "NodeDown";
    case Status::Code::kUndeliverable: return "Undeliverable";
    case Status::Code::kMemtableFull: return "MemtableFull";
    case Status::Code::kInvalidState: return "InvalidState";
    case Status::Code::kStalled: return "Stalled";
    case Status::Code::kWalIoError: return "WalIoError";
    case Status::Code::kCorruptWal: return "CorruptWal";
    case Status::Code::kCorruptManifest: return "CorruptManifest";
    case Status::Code::kCorruptIndex: return "CorruptIndex";
    case Status::Code::kUnknownMemtable: return "UnknownMemtable";
    case Status::Code::kWalNotPersisted: return "WalNotPersisted";
    case Status::Code::kMemtableNotOffloaded: return "MemtableNotOffloaded";
    case Status::Code::kDmUnreachable: return "DmUnreachable";
    case Status::Code::kDsWriteFailed: return "DsWriteFailed";
    case Status::Code::kInjectedCrash: return "InjectedCrash";
    case Status::Code::kStaleCommit: return "StaleCommit";
    case Status::Code::kStaleTelemetry: return "StaleTelemetry";
    case Status::Code::kNoEligibleExecutor: return "NoEligibleExecutor";
    case Status::Code::kCorruptLog: return "CorruptLog";
    case Status::Code::kCorruptBlock: return "CorruptBlock";
    case Status::Code::kFileNotFound: return "FileNotFound";
  }
  return "Unknown";
}
}  // namespace

std::string Status::ToString() const {
  std::string result = CodeName(code_);
  if (!msg_.empty()) {
    result.append(": ");
    result.append(msg_);
  }
  return result;
}

}  // namespace farlsm
