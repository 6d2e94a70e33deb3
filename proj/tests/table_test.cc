// Copyright (c) 2026 The farlsm Authors. All rights reserved.
// Use of this source code is governed by a BSD-style license that can be
// found in the LICENSE file.

#include <map>

#include "doctest.h"
#include "farlsm/random.h"
#include "farlsm/sst.h"

namespace farlsm {

namespace {

struct TestEntry {
  std::string key, value;
  SequenceNumber seq;
  bool tombstone;
};

std::vector<TestEntry> MakeSortedEntries(int n, uint64_t seed) {
  Random rnd(seed);
  std::map<std::string, TestEntry> by_key;
  SequenceNumber seq = 1;
  while (static_cast<int>(by_key.size()) < n) {
    char key[32];
    std::snprintf(key, sizeof(key), "key%08llu",
                  static_cast<unsigned long long>(rnd.Uniform(10 * n)));
    bool tomb = rnd.OneIn(16);
    by_key[key] = {key, tomb ? "" : "value" + std::to_string(seq), seq, tomb};
    seq++;
  }
  std::vector<TestEntry> out;
  for (auto& [k, e] : by_key) out.push_back(e);
  return out;
}

}  // namespace

TEST_CASE("sst: build then read back every entry") {
  auto entries = MakeSortedEntries(5000, 11);
  SstBuilder builder;
  for (const auto& e : entries) builder.Add(e.key, e.value, e.seq, e.tombstone);
  std::string file = builder.Finish();
  SstMeta meta = builder.meta();
  CHECK(meta.smallest == entries.front().key);
  CHECK(meta.largest == entries.back().key);
  CHECK(meta.num_entries == entries.size());

  SstReader reader;
  REQUIRE(SstReader::OpenFull(file, &reader).ok());
  CHECK(reader.num_blocks() > 1);

  for (const auto& e : entries) {
    std::string value;
    bool deleted;
    SequenceNumber seq;
    Status s = reader.Get(e.key, kMaxSequence, &value, &deleted, &seq);
    if (e.tombstone) {
      CHECK(s.IsNotFound());
      CHECK(deleted);
    } else {
      REQUIRE(s.ok());
      CHECK(value == e.value);
      CHECK(seq == e.seq);
    }
  }
}

TEST_CASE("sst: reassembled blocks equal builder input") {
  auto entries = MakeSortedEntries(2000, 23);
  SstBuilder builder;
  for (const auto& e : entries) builder.Add(e.key, e.value, e.seq, e.tombstone);
  std::string file = builder.Finish();

  SstReader reader;
  REQUIRE(SstReader::OpenFull(file, &reader).ok());
  std::vector<TestEntry> decoded;
  for (size_t b = 0; b < reader.num_blocks(); b++) {
    std::string block;
    REQUIRE(reader.ReadBlock(b, &block).ok());
    std::vector<DecodedTuple> tuples;
    REQUIRE(SstReader::DecodeBlock(block, &tuples).ok());
    for (const auto& t : tuples) {
      decoded.push_back({t.key.ToString(), t.value.ToString(), t.seq,
                         t.tombstone});
    }
  }
  REQUIRE(decoded.size() == entries.size());
  for (size_t i = 0; i < entries.size(); i++) {
    CHECK(decoded[i].key == entries[i].key);
    CHECK(decoded[i].value == entries[i].value);
    CHECK(decoded[i].seq == entries[i].seq);
    CHECK(decoded[i].tombstone == entries[i].tombstone);
  }
}

TEST_CASE("sst: out-of-range block index rejected") {
  SstBuilder builder;
  builder.Add("a", "1", 1, false);
  std::string file = builder.Finish();
  SstReader reader;
  REQUIRE(SstReader::OpenFull(file, &reader).ok());
  std::string block;
  CHECK(reader.ReadBlock(99, &block).code() == Status::Code::kOutOfRange);
}

TEST_CASE("sst: corrupted byte surfaces as CorruptBlock") {
  auto entries = MakeSortedEntries(500, 3);
  SstBuilder builder;
  for (const auto& e : entries) builder.Add(e.key, e.value, e.seq, e.tombstone);
  std::string file = builder.Finish();

  // Flip one byte inside the first data block.
  file[16] ^= 0x01;
  SstReader reader;
  REQUIRE(SstReader::OpenFull(file, &reader).ok());
  std::string block;
  REQUIRE(reader.ReadBlock(0, &block).ok());
  std::string value;
  bool deleted;
  SequenceNumber seq;
  Status s = SstReader::SearchBlock(block, entries[0].key, kMaxSequence,
                                    &value, &deleted, &seq);
  CHECK(s.code() == Status::Code::kCorruptBlock);
}

TEST_CASE("sst: bloom-negative and range-pruned lookups do no block reads") {
  auto entries = MakeSortedEntries(1000, 5);
  SstBuilder builder;
  for (const auto& e : entries) builder.Add(e.key, e.value, e.seq, e.tombstone);
  std::string file = builder.Finish();
  SstReader reader;
  REQUIRE(SstReader::OpenFull(file, &reader).ok());

  // Key above largest: pruned before any bloom or block access.
  CHECK_FALSE(reader.MayContain("zzzzzzzzzzz"));
  // Absent keys in range: bloom filters nearly all of them.
  int maybes = 0;
  for (int i = 0; i < 2000; i++) {
    std::string probe = "key" + std::to_string(90000000 + i) + "x";
    if (reader.MayContain(probe)) maybes++;
  }
  CHECK(maybes < 2000 * 0.03);
}

TEST_CASE("sst: snapshot-aware search picks the right version") {
  SstBuilder builder;
  // Same key, multiple versions, newest first.
  builder.Add("k", "v3", 30, false);
  builder.Add("k", "v2", 20, false);
  builder.Add("k", "", 10, true);
  std::string file = builder.Finish();
  SstReader reader;
  REQUIRE(SstReader::OpenFull(file, &reader).ok());

  std::string value;
  bool deleted;
  SequenceNumber seq;
  REQUIRE(reader.Get("k", kMaxSequence, &value, &deleted, &seq).ok());
  CHECK(value == "v3");
  REQUIRE(reader.Get("k", 25, &value, &deleted, &seq).ok());
  CHECK(value == "v2");
  Status s = reader.Get("k", 12, &value, &deleted, &seq);
  CHECK(s.IsNotFound());
  CHECK(deleted);
  s = reader.Get("k", 5, &value, &deleted, &seq);
  CHECK(s.IsNotFound());
  CHECK_FALSE(deleted);
}

TEST_CASE("sst: tail-mode reader answers from index/bloom/props only") {
  auto entries = MakeSortedEntries(3000, 7);
  SstBuilder builder;
  for (const auto& e : entries) builder.Add(e.key, e.value, e.seq, e.tombstone);
  std::string file = builder.Finish();

  uint64_t tail_offset;
  REQUIRE(SstReader::TailSpan(
              Slice(file.data() + file.size() - kSstFooterSize,
                    kSstFooterSize),
              file.size(), &tail_offset)
              .ok());
  SstReader tail_reader;
  REQUIRE(SstReader::OpenTail(file.substr(tail_offset), tail_offset,
                              file.size(), &tail_reader)
              .ok());
  CHECK(tail_reader.meta().num_entries == entries.size());
  CHECK(tail_reader.MayContain(entries[42].key));

  auto block = tail_reader.FindBlock(entries[42].key);
  REQUIRE(block.has_value());
  auto handle = tail_reader.block_handle(*block);
  std::string block_bytes = file.substr(handle.offset, handle.size);
  std::string value;
  bool deleted;
  SequenceNumber seq;
  Status s = SstReader::SearchBlock(block_bytes, entries[42].key,
                                    kMaxSequence, &value, &deleted, &seq);
  bool resolved = s.ok() || entries[42].tombstone;
  REQUIRE(resolved);
}

TEST_CASE("sst meta: encode/decode round trip") {
  SstMeta meta;
  meta.file_number = 1234;
  meta.level = 2;
  meta.size = 987654;
  meta.smallest = "aaa";
  meta.largest = "zzz";
  meta.min_seq = 10;
  meta.max_seq = 9999;
  meta.shard = 3;
  meta.num_entries = 4242;

  std::string buf;
  meta.EncodeTo(&buf);
  Slice in(buf);
  SstMeta back;
  REQUIRE(SstMeta::DecodeFrom(&in, &back).ok());
  CHECK(back.file_number == meta.file_number);
  CHECK(back.level == meta.level);
  CHECK(back.smallest == meta.smallest);
  CHECK(back.largest == meta.largest);
  CHECK(back.shard == meta.shard);
  CHECK(back.num_entries == meta.num_entries);
}

}  // namespace farlsm
