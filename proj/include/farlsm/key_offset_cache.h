// Copyright (c) 2026 The farlsm Authors. All rights reserved.
// Use of this source code is governed by a BSD-style license that can be
// found in the LICENSE file.

#pragma once

#include <list>
#include <map>
#include <optional>
#include <string>

#include "farlsm/fabric.h"
#include "farlsm/kv_format.h"

namespace farlsm {

// CN-side LRU cache mapping hot keys to their DM coordinates, enabling a
// single one-sided read instead of a delegation round trip. Entries are
// invalidated when their memtable is reclaimed and refreshed whenever a
// newer offload carries the same key.
class KeyOffsetCache {
 public:
  struct Entry {
    uint64_t memtable_id = 0;
    NodeId dm_node;
    uint64_t region_id = 0;
    uint64_t offset = 0;
    uint32_t length = 0;
    SequenceNumber seq = 0;
    bool tombstone = false;
  };

  // Entries are charged key size plus 26 bytes of coordinates.
  static constexpr size_t kEntryOverhead = 26;

  explicit KeyOffsetCache(uint64_t capacity_bytes)
      : capacity_(capacity_bytes) {}

  std::optional<Entry> Get(const std::string& key);
  bool Contains(const std::string& key) const { return index_.count(key) != 0; }
  void Insert(const std::string& key, const Entry& entry);
  void Erase(const std::string& key);
  void InvalidateMemtable(uint64_t memtable_id);
  void Clear();

  uint64_t size_bytes() const { return size_; }
  size_t entries() const { return index_.size(); }
  uint64_t hits() const { return hits_; }
  uint64_t misses() const { return misses_; }

 private:
  using Item = std::pair<std::string, Entry>;
  void Unlink(std::map<std::string, std::list<Item>::iterator>::iterator it);

  uint64_t capacity_;
  uint64_t size_ = 0;
  uint64_t hits_ = 0;
  uint64_t misses_ = 0;
  std::list<Item> lru_;  // front = most recent
  std::map<std::string, std::list<Item>::iterator> index_;
  std::multimap<uint64_t, std::string> by_memtable_;
};

}  // namespace farlsm
