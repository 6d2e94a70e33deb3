// Copyright (c) 2026 The farlsm Authors. All rights reserved.
// Use of this source code is governed by a BSD-style license that can be
// found in the LICENSE file.

#include "farlsm/env.h"

#include <fcntl.h>
#include <sys/stat.h>
#include <unistd.h>

#include <cerrno>
#include <cstdio>
#include <cstring>
#include <filesystem>

namespace farlsm {

namespace {

class MemAppendFile : public AppendFile {
 public:
  explicit MemAppendFile(std::shared_ptr<MemEnv::FileState> state)
      : state_(std::move(state)) {}

  Status Append(const Slice& data) override {
    state_->data.append(data.data(), data.size());
    return Status::OK();
  }

  Status Sync() override {
    state_->durable = state_->data.size();
    return Status::OK();
  }

  uint64_t Size() const override { return state_->data.size(); }

 private:
  std::shared_ptr<MemEnv::FileState> state_;
};

}  // namespace

Status MemEnv::NewAppendFile(const std::string& name,
                             std::unique_ptr<AppendFile>* file) {
  auto it = files_.find(name);
  if (it == files_.end()) {
    it = files_.emplace(name, std::make_shared<FileState>()).first;
  }
  *file = std::make_unique<MemAppendFile>(it->second);
  return Status::OK();
}

Status MemEnv::ReadFile(const std::string& name, std::string* out) {
  auto it = files_.find(name);
  if (it == files_.end()) return Status::FileNotFound(name);
  *out = it->second->data;
  return Status::OK();
}

Status MemEnv::DeleteFile(const std::string& name) {
  if (files_.erase(name) == 0) return Status::FileNotFound(name);
  return Status::OK();
}

Status MemEnv::RenameFile(const std::string& src, const std::string& dst) {
  auto it = files_.find(src);
  if (it == files_.end()) return Status::FileNotFound(src);
  files_[dst] = it->second;
  files_.erase(src);
  return Status::OK();
}

bool MemEnv::FileExists(const std::string& name) {
  return files_.count(name) != 0;
}

Status MemEnv::ListFiles(const std::string& prefix,
                         std::vector<std::string>* names) {
  names->clear();
  for (const auto& [name, state] : files_) {
    if (name.rfind(prefix, 0) == 0) names->push_back(name);
  }
  return Status::OK();
}

void MemEnv::SimulateCrash() {
  for (auto& [name, state] : files_) {
    state->data.resize(state->durable);
  }
}

uint64_t MemEnv::DurableBytes() const {
  uint64_t total = 0;
  for (const auto& [name, state] : files_) total += state->durable;
  return total;
}

namespace {

class PosixAppendFile : public AppendFile {
 public:
  PosixAppendFile(int fd, uint64_t size) : fd_(fd), size_(size) {}
  ~PosixAppendFile() override {
    if (fd_ >= 0) ::close(fd_);
  }

  Status Append(const Slice& data) override {
    const char* p = data.data();
    size_t left = data.size();
    while (left > 0) {
      ssize_t n = ::write(fd_, p, left);
      if (n < 0) {
        if (errno == EINTR) continue;
        return Status::IoError(strerror(errno));
      }
      p += n;
      left -= n;
      size_ += n;
    }
    return Status::OK();
  }

  Status Sync() override {
    if (::fdatasync(fd_) != 0) return Status::IoError(strerror(errno));
    return Status::OK();
  }

  uint64_t Size() const override { return size_; }

 private:
  int fd_;
  uint64_t size_;
};

}  // namespace

PosixEnv::PosixEnv(std::string root) : root_(std::move(root)) {
  std::error_code ec;
  std::filesystem::create_directories(root_, ec);
}

std::string PosixEnv::Path(const std::string& name) const {
  return root_ + "/" + name;
}

Status PosixEnv::NewAppendFile(const std::string& name,
                               std::unique_ptr<AppendFile>* file) {
  int fd = ::open(Path(name).c_str(), O_CREAT | O_WRONLY | O_APPEND, 0644);
  if (fd < 0) return Status::IoError(strerror(errno));
  struct stat st;
  uint64_t size = (::fstat(fd, &st) == 0) ? st.st_size : 0;
  *file = std::make_unique<PosixAppendFile>(fd, size);
  return Status::OK();
}

Status PosixEnv::ReadFile(const std::string& name, std::string* out) {
  FILE* f = std::fopen(Path(name).c_str(), "rb");
  if (f == nullptr) return Status::FileNotFound(name);
  out->clear();
  char buf[8192];
  size_t n;
  while ((n = std::fread(buf, 1, sizeof(buf), f)) > 0) out->append(buf, n);
  std::fclose(f);
  return Status::OK();
}

Status PosixEnv::DeleteFile(const std::string& name) {
  if (::unlink(Path(name).c_str()) != 0) {
    return Status::FileNotFound(name);
  }
  return Status::OK();
}

Status PosixEnv::RenameFile(const std::string& src, const std::string& dst) {
  if (::rename(Path(src).c_str(), Path(dst).c_str()) != 0) {
    return Status::IoError(strerror(errno));
  }
  return Status::OK();
}

bool PosixEnv::FileExists(const std::string& name) {
  struct stat st;
  return ::stat(Path(name).c_str(), &st) == 0;
}

Status PosixEnv::ListFiles(const std::string& prefix,
                           std::vector<std::string>* names) {
  names->clear();
  std::error_code ec;
  for (const auto& entry : std::filesystem::directory_iterator(root_, ec)) {
    std::string name = entry.path().filename().string();
    if (name.rfind(prefix, 0) == 0) names->push_back(name);
  }
  std::sort(names->begin(), names->end());
  return Status::OK();
}

}  // namespace farlsm
