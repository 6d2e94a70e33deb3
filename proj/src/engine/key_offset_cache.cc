// Copyright (c) 2026 The farlsm Authors. All rights reserved.
// Use of this source code is governed by a BSD-style license that can be
// found in the LICENSE file.

#include "farlsm/key_offset_cache.h"

namespace farlsm {

std::optional<KeyOffsetCache::Entry> KeyOffsetCache::Get(
    const std::string& key) {
  auto it = index_.find(key);
  if (it == index_.end()) {
    misses_++;
    return std::nullopt;
  }
  hits_++;
  lru_.splice(lru_.begin(), lru_, it->second);
  return it->second->second;
}

void KeyOffsetCache::Unlink(
    std::map<std::string, std::list<Item>::iterator>::iterator it) {
  const std::string& key = it->first;
  uint64_t memtable_id = it->second->second.memtable_id;
  size_ -= key.size() + kEntryOverhead;
  auto range = by_memtable_.equal_range(memtable_id);
  for (auto m = range.first; m != range.second; ++m) {
    if (m->second == key) {
      by_memtable_.erase(m);
      break;
    }
  }
  lru_.erase(it->second);
  index_.erase(it);
}

void KeyOffsetCache::Insert(const std::string& key, const Entry& entry) {
  auto it = index_.find(key);
  if (it != index_.end()) Unlink(it);

  lru_.emplace_front(key, entry);
  index_[key] = lru_.begin();
  by_memtable_.emplace(entry.memtable_id, key);
  size_ += key.size() + kEntryOverhead;

  while (size_ > capacity_ && !lru_.empty()) {
    auto victim = index_.find(lru_.back().first);
    Unlink(victim);
  }
}

void KeyOffsetCache::Erase(const std::string& key) {
  auto it = index_.find(key);
  if (it != index_.end()) Unlink(it);
}

void KeyOffsetCache::InvalidateMemtable(uint64_t memtable_id) {
  auto range = by_memtable_.equal_range(memtable_id);
  std::vector<std::string> keys;
  for (auto it = range.first; it != range.second; ++it) {
    keys.push_back(it->second);
  }
  for (const std::string& key : keys) Erase(key);
}

void KeyOffsetCache::Clear() {
  lru_.clear();
  index_.clear();
  by_memtable_.clear();
  size_ = 0;
}

}  // namespace farlsm
