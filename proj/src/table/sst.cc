// Copyright (c) 2026 The farlsm Authors. All rights reserved.
// Use of this source code is governed by a BSD-style license that can be
// found in the LICENSE file.

#include "farlsm/sst.h"

#include <algorithm>
#include <cassert>

#include "farlsm/bloom.h"
#include "farlsm/coding.h"
#include "farlsm/crc32c.h"

namespace farlsm {

namespace {

void AppendWithCrc(std::string* file, const std::string& payload) {
  file->append(payload);
  PutFixed32(file, crc32c::Mask(crc32c::Value(payload.data(), payload.size())));
}

Status CheckCrc(Slice section, Slice* payload) {
  if (section.size() < 4) return Status::CorruptBlock("section too small");
  size_t n = section.size() - 4;
  uint32_t stored = crc32c::Unmask(DecodeFixed32(section.data() + n));
  if (stored != crc32c::Value(section.data(), n)) {
    return Status::CorruptBlock("crc mismatch");
  }
  *payload = Slice(section.data(), n);
  return Status::OK();
}

}  // namespace

void SstMeta::EncodeTo(std::string* out) const {
  PutFixed64(out, file_number);
  PutFixed32(out, level);
  PutFixed64(out, size);
  PutLengthPrefixedSlice(out, smallest);
  PutLengthPrefixedSlice(out, largest);
  PutFixed64(out, min_seq);
  PutFixed64(out, max_seq);
  PutFixed16(out, shard);
  PutFixed64(out, num_entries);
}

Status SstMeta::DecodeFrom(Slice* input, SstMeta* out) {
  Slice smallest, largest;
  if (!GetFixed64(input, &out->file_number) ||
      !GetFixed32(input, &out->level) || !GetFixed64(input, &out->size) ||
      !GetLengthPrefixedSlice(input, &smallest) ||
      !GetLengthPrefixedSlice(input, &largest) ||
      !GetFixed64(input, &out->min_seq) || !GetFixed64(input, &out->max_seq) ||
      !GetFixed16(input, &out->shard) ||
      !GetFixed64(input, &out->num_entries)) {
    return Status::Corruption("short sst meta");
  }
  out->smallest = smallest.ToString();
  out->largest = largest.ToString();
  return Status::OK();
}

bool SstMeta::RangeOverlaps(const Slice& begin, const Slice& end_excl) const {
  if (!end_excl.empty() && Slice(smallest).compare(end_excl) >= 0) {
    return false;
  }
  return Slice(largest).compare(begin) >= 0;
}

SstBuilder::SstBuilder(size_t block_size, uint16_t shard)
    : block_size_(block_size) {
  meta_.shard = shard;
  meta_.min_seq = kMaxSequence;
}

void SstBuilder::Add(const Slice& key, const Slice& value, SequenceNumber seq,
                     bool tombstone) {
  assert(!finished_);
  if (block_.empty()) {
    block_first_key_ = key.ToString();
  }
  EncodeTuple(&block_, key, value, seq, tombstone);

  if (meta_.num_entries == 0) meta_.smallest = key.ToString();
  meta_.largest = key.ToString();
  meta_.min_seq = std::min(meta_.min_seq, seq);
  meta_.max_seq = std::max(meta_.max_seq, seq);
  meta_.num_entries++;
  bloom_keys_.push_back(key.ToString());

  if (block_.size() >= block_size_) FlushBlock();
}

void SstBuilder::FlushBlock() {
  if (block_.empty()) return;
  IndexEntry entry;
  entry.first_key = block_first_key_;
  entry.offset = file_.size();
  entry.size = static_cast<uint32_t>(block_.size() + 4);
  AppendWithCrc(&file_, block_);
  index_.push_back(std::move(entry));
  block_.clear();
}

std::string SstBuilder::Finish() {
  assert(!finished_);
  finished_ = true;
  FlushBlock();

  std::string index_payload;
  PutFixed32(&index_payload, static_cast<uint32_t>(index_.size()));
  for (const IndexEntry& e : index_) {
    PutLengthPrefixedSlice(&index_payload, e.first_key);
    PutFixed64(&index_payload, e.offset);
    PutFixed32(&index_payload, e.size);
  }
  uint64_t index_offset = file_.size();
  AppendWithCrc(&file_, index_payload);
  uint32_t index_size = static_cast<uint32_t>(file_.size() - index_offset);

  std::vector<Slice> key_slices(bloom_keys_.begin(), bloom_keys_.end());
  std::string bloom_payload = BloomFilter::Build(key_slices);
  uint64_t bloom_offset = file_.size();
  AppendWithCrc(&file_, bloom_payload);
  uint32_t bloom_size = static_cast<uint32_t>(file_.size() - bloom_offset);

  std::string props;
  PutLengthPrefixedSlice(&props, meta_.smallest);
  PutLengthPrefixedSlice(&props, meta_.largest);
  PutFixed64(&props, meta_.min_seq == kMaxSequence ? 0 : meta_.min_seq);
  PutFixed64(&props, meta_.max_seq);
  PutFixed16(&props, meta_.shard);
  PutFixed64(&props, meta_.num_entries);
  uint64_t props_offset = file_.size();
  AppendWithCrc(&file_, props);
  uint32_t props_size = static_cast<uint32_t>(file_.size() - props_offset);

  std::string footer;
  PutFixed64(&footer, index_offset);
  PutFixed32(&footer, index_size);
  PutFixed64(&footer, bloom_offset);
  PutFixed32(&footer, bloom_size);
  PutFixed64(&footer, props_offset);
  PutFixed32(&footer, props_size);
  PutFixed64(&footer, kSstMagic);
  PutFixed32(&footer, crc32c::Mask(crc32c::Value(footer.data(), footer.size())));
  assert(footer.size() == kSstFooterSize);
  file_.append(footer);

  if (meta_.min_seq == kMaxSequence) meta_.min_seq = 0;
  meta_.size = file_.size();
  return std::move(file_);
}

namespace {

struct ParsedFooter {
  uint64_t index_offset;
  uint32_t index_size;
  uint64_t bloom_offset;
  uint32_t bloom_size;
  uint64_t props_offset;
  uint32_t props_size;
};

Status ParseFooter(Slice footer, ParsedFooter* out) {
  if (footer.size() != kSstFooterSize) {
    return Status::Corruption("bad footer size");
  }
  uint32_t stored = crc32c::Unmask(DecodeFixed32(footer.data() + 44));
  if (stored != crc32c::Value(footer.data(), 44)) {
    return Status::Corruption("footer crc mismatch");
  }
  Slice in = footer;
  uint64_t magic;
  if (!GetFixed64(&in, &out->index_offset) ||
      !GetFixed32(&in, &out->index_size) ||
      !GetFixed64(&in, &out->bloom_offset) ||
      !GetFixed32(&in, &out->bloom_size) ||
      !GetFixed64(&in, &out->props_offset) ||
      !GetFixed32(&in, &out->props_size) || !GetFixed64(&in, &magic)) {
    return Status::Corruption("short footer");
  }
  if (magic != kSstMagic) return Status::Corruption("bad magic");
  return Status::OK();
}

}  // namespace

Status SstReader::TailSpan(Slice footer_bytes, uint64_t file_size,
                           uint64_t* tail_offset) {
  ParsedFooter f;
  Status s = ParseFooter(footer_bytes, &f);
  if (!s.ok()) return s;
  if (f.index_offset >= file_size) return Status::Corruption("bad index offset");
  *tail_offset = f.index_offset;
  return Status::OK();
}

Status SstReader::OpenFull(std::string file_bytes, SstReader* out) {
  if (file_bytes.size() < kSstFooterSize) {
    return Status::Corruption("file too small");
  }
  std::string bytes = std::move(file_bytes);
  uint64_t file_size = bytes.size();
  uint64_t tail_offset;
  Status s = TailSpan(Slice(bytes.data() + file_size - kSstFooterSize,
                            kSstFooterSize),
                      file_size, &tail_offset);
  if (!s.ok()) return s;
  s = out->ParseTail(Slice(bytes.data() + tail_offset,
                           file_size - tail_offset),
                     tail_offset, file_size);
  if (!s.ok()) return s;
  out->file_ = std::move(bytes);
  return Status::OK();
}

Status SstReader::OpenTail(std::string tail_bytes, uint64_t tail_offset,
                           uint64_t file_size, SstReader* out) {
  Status s = out->ParseTail(Slice(tail_bytes), tail_offset, file_size);
  if (!s.ok()) return s;
  out->tail_ = std::move(tail_bytes);
  return Status::OK();
}

Status SstReader::ParseTail(Slice tail, uint64_t tail_offset,
                            uint64_t file_size) {
  if (tail.size() < kSstFooterSize) return Status::Corruption("short tail");
  ParsedFooter f;
  Status s = ParseFooter(
      Slice(tail.data() + tail.size() - kSstFooterSize, kSstFooterSize), &f);
  if (!s.ok()) return s;
  if (f.index_offset != tail_offset) {
    return Status::Corruption("tail offset mismatch");
  }

  auto section = [&](uint64_t offset, uint32_t size, Slice* out_payload) {
    if (offset < tail_offset || offset + size > file_size) {
      return Status::Corruption("section out of range");
    }
    return CheckCrc(Slice(tail.data() + (offset - tail_offset), size),
                    out_payload);
  };

  Slice index_payload;
  s = section(f.index_offset, f.index_size, &index_payload);
  if (!s.ok()) return s;
  uint32_t count;
  if (!GetFixed32(&index_payload, &count)) {
    return Status::Corruption("short index");
  }
  index_.clear();
  for (uint32_t i = 0; i < count; i++) {
    Slice first_key;
    IndexRecord rec;
    if (!GetLengthPrefixedSlice(&index_payload, &first_key) ||
        !GetFixed64(&index_payload, &rec.handle.offset) ||
        !GetFixed32(&index_payload, &rec.handle.size)) {
      return Status::Corruption("short index entry");
    }
    rec.first_key = first_key.ToString();
    index_.push_back(std::move(rec));
  }

  Slice bloom_payload;
  s = section(f.bloom_offset, f.bloom_size, &bloom_payload);
  if (!s.ok()) return s;
  bloom_ = bloom_payload.ToString();

  Slice props;
  s = section(f.props_offset, f.props_size, &props);
  if (!s.ok()) return s;
  Slice smallest, largest;
  if (!GetLengthPrefixedSlice(&props, &smallest) ||
      !GetLengthPrefixedSlice(&props, &largest) ||
      !GetFixed64(&props, &meta_.min_seq) ||
      !GetFixed64(&props, &meta_.max_seq) || !GetFixed16(&props, &meta_.shard) ||
      !GetFixed64(&props, &meta_.num_entries)) {
    return Status::Corruption("short props");
  }
  meta_.smallest = smallest.ToString();
  meta_.largest = largest.ToString();
  meta_.size = file_size;
  return Status::OK();
}

bool SstReader::MayContain(const Slice& key) const {
  if (meta_.num_entries == 0) return false;
  if (key.compare(meta_.smallest) < 0 || key.compare(meta_.largest) > 0) {
    return false;
  }
  return BloomFilter::MayContain(bloom_, key);
}

std::optional<size_t> SstReader::FindBlock(const Slice& key) const {
  if (index_.empty()) return std::nullopt;
  // Last block whose first key is <= key.
  size_t lo = 0, hi = index_.size();
  while (lo < hi) {
    size_t mid = (lo + hi) / 2;
    if (Slice(index_[mid].first_key).compare(key) <= 0) {
      lo = mid + 1;
    } else {
      hi = mid;
    }
  }
  if (lo == 0) return std::nullopt;  // key sorts before the first block
  return lo - 1;
}

size_t SstReader::FindBlockForScan(const Slice& start) const {
  auto block = FindBlock(start);
  return block.has_value() ? *block : 0;
}

Status SstReader::SearchBlock(Slice block, const Slice& key,
                              SequenceNumber snapshot, std::string* value,
                              bool* deleted, SequenceNumber* seq) {
  Slice payload;
  Status s = CheckCrc(block, &payload);
  if (!s.ok()) return s;
  *deleted = false;
  while (!payload.empty()) {
    DecodedTuple t;
    if (!DecodeTuple(payload, &t)) return Status::CorruptBlock("bad tuple");
    int c = t.key.compare(key);
    if (c > 0) break;
    if (c == 0 && t.seq <= snapshot) {
      *seq = t.seq;
      if (t.tombstone) {
        *deleted = true;
        return Status::NotFound();
      }
      value->assign(t.value.data(), t.value.size());
      return Status::OK();
    }
    payload.remove_prefix(t.encoded_len);
  }
  return Status::NotFound();
}

Status SstReader::DecodeBlock(Slice block, std::vector<DecodedTuple>* out) {
  Slice payload;
  Status s = CheckCrc(block, &payload);
  if (!s.ok()) return s;
  out->clear();
  while (!payload.empty()) {
    DecodedTuple t;
    if (!DecodeTuple(payload, &t)) return Status::CorruptBlock("bad tuple");
    out->push_back(t);
    payload.remove_prefix(t.encoded_len);
  }
  return Status::OK();
}

Status SstReader::ReadBlock(size_t index, std::string* block) const {
  if (index >= index_.size()) return Status::OutOfRange("block index");
  if (file_.empty()) return Status::InvalidState("tail-only reader");
  const BlockHandle& h = index_[index].handle;
  block->assign(file_.data() + h.offset, h.size);
  return Status::OK();
}

Status SstReader::Get(const Slice& key, SequenceNumber snapshot,
                      std::string* value, bool* deleted,
                      SequenceNumber* seq) const {
  *deleted = false;
  if (!MayContain(key)) return Status::NotFound();
  auto block_index = FindBlock(key);
  if (!block_index.has_value()) return Status::NotFound();
  std::string block;
  Status s = ReadBlock(*block_index, &block);
  if (!s.ok()) return s;
  return SearchBlock(block, key, snapshot, value, deleted, seq);
}

}  // namespace farlsm
