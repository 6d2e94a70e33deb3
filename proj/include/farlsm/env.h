// Copyright (c) 2026 The farlsm Authors. All rights reserved.
// Use of this source code is governed by a BSD-style license that can be
// found in the LICENSE file.

#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "farlsm/status.h"

namespace farlsm {

class AppendFile;

// File-system abstraction behind the WAL, Manifest and scheduler log. The
// in-memory implementation tracks a durable prefix per file: Sync() advances
// it, SimulateCrash() discards everything after it. Crash-point sweeps rely
// on those semantics.
class Env {
 public:
  virtual ~Env() = default;

  virtual Status NewAppendFile(const std::string& name,
                               std::unique_ptr<AppendFile>* file) = 0;
  virtual Status ReadFile(const std::string& name, std::string* out) = 0;
  virtual Status DeleteFile(const std::string& name) = 0;
  virtual Status RenameFile(const std::string& src,
                            const std::string& dst) = 0;
  virtual bool FileExists(const std::string& name) = 0;
  virtual Status ListFiles(const std::string& prefix,
                           std::vector<std::string>* names) = 0;
};

class AppendFile {
 public:
  virtual ~AppendFile() = default;
  virtual Status Append(const Slice& data) = 0;
  virtual Status Sync() = 0;
  virtual uint64_t Size() const = 0;
};

// In-memory env with explicit crash semantics. All files share one store so
// a reopened path sees prior contents.
class MemEnv : public Env {
 public:
  MemEnv() = default;

  Status NewAppendFile(const std::string& name,
                       std::unique_ptr<AppendFile>* file) override;
  Status ReadFile(const std::string& name, std::string* out) override;
  Status DeleteFile(const std::string& name) override;
  Status RenameFile(const std::string& src, const std::string& dst) override;
  bool FileExists(const std::string& name) override;
  Status ListFiles(const std::string& prefix,
                   std::vector<std::string>* names) override;

  // Drops all unsynced bytes, as a power failure would.
  void SimulateCrash();

  // Total synced bytes, for accounting in tests.
  uint64_t DurableBytes() const;

  struct FileState {
    std::string data;
    uint64_t durable = 0;  // prefix length guaranteed after crash
  };

 private:
  std::map<std::string, std::shared_ptr<FileState>> files_;
};

// Env backed by a real directory; Sync maps to fdatasync.
class PosixEnv : public Env {
 public:
  explicit PosixEnv(std::string root);

  Status NewAppendFile(const std::string& name,
                       std::unique_ptr<AppendFile>* file) override;
  Status ReadFile(const std::string& name, std::string* out) override;
  Status DeleteFile(const std::string& name) override;
  Status RenameFile(const std::string& src, const std::string& dst) override;
  bool FileExists(const std::string& name) override;
  Status ListFiles(const std::string& prefix,
                   std::vector<std::string>* names) override;

 private:
  std::string Path(const std::string& name) const;
  std::string root_;
};

}  // namespace farlsm
