// Copyright (c) 2026 The farlsm Authors. All rights reserved.
// Use of this source code is governed by a BSD-style license that can be
// found in the LICENSE file.

#include <map>

#include "doctest.h"
#include "farlsm/memtable.h"
#include "farlsm/random.h"

namespace farlsm {

namespace {

constexpr uint64_t kMiB = 1024 * 1024;

std::string RandomKey(Random* rnd, size_t len = 8) {
  std::string key(len, '\0');
  for (size_t i = 0; i < len; i++) {
    key[i] = static_cast<char>('a' + rnd->Uniform(26));
  }
  return key;
}

}  // namespace

TEST_CASE("shard_of: bit extraction") {
  // k=0 always lands in shard 0.
  CHECK(ShardOf("anything", {0}) == 0);

  // 'a' = 0x61 = 0b0110_0001; first 2 bits are 01 -> shard 1.
  CHECK(ShardOf("a", {2}) == 1);
  // First byte 0b11xx_xxxx -> shard 3 with k=2.
  std::string key = "\xC7rest";
  CHECK(ShardOf(key, {2}) == 3);

  // Exhaustive 1-byte key space: order-preserving and exhaustive.
  for (uint8_t k = 1; k <= 8; k++) {
    ShardConfig config{k};
    uint32_t seen_max = 0;
    for (int b = 0; b < 256; b++) {
      std::string one(1, static_cast<char>(b));
      uint32_t shard = ShardOf(one, config);
      CHECK(shard == static_cast<uint32_t>(b) >> (8 - k));
      CHECK(shard < config.shard_count());
      CHECK(shard >= seen_max);  // keys ascending -> shards non-decreasing
      seen_max = shard;
    }
    CHECK(seen_max == config.shard_count() - 1);
  }
}

TEST_CASE("put routes to the shard of the key's first bits") {
  AddressSpace space;
  Memtable table(1, {2}, kMiB, &space);
  REQUIRE(table.Put("abc", "v", 1).ok());
  // Oracle: 0x61 >> 6 == 1.
  CHECK(table.shard_block_size(1) > 0);
  CHECK(table.shard_block_size(0) == 0);
  CHECK(table.shard_block_size(2) == 0);
  CHECK(table.shard_block_size(3) == 0);
}

TEST_CASE("get: shadowing, snapshots, tombstones") {
  AddressSpace space;
  Memtable table(1, {0}, kMiB, &space);
  std::string value;
  bool deleted;

  CHECK(table.Get("missing", kMaxSequence, &value, &deleted).IsNotFound());

  REQUIRE(table.Put("k", "v1", 10).ok());
  REQUIRE(table.Put("k", "v2", 20).ok());
  REQUIRE(table.Get("k", kMaxSequence, &value, &deleted).ok());
  CHECK(value == "v2");

  // Snapshot below the insert seq sees nothing.
  CHECK(table.Get("k", 9, &value, &deleted).IsNotFound());
  REQUIRE(table.Get("k", 10, &value, &deleted).ok());
  CHECK(value == "v1");
  REQUIRE(table.Get("k", 15, &value, &deleted).ok());
  CHECK(value == "v1");

  // Tombstone shadows and reports through *deleted.
  REQUIRE(table.Put("k", "", 30, true).ok());
  Status s = table.Get("k", kMaxSequence, &value, &deleted);
  CHECK(s.IsNotFound());
  CHECK(deleted);
}

TEST_CASE("get: 1000 random puts match shadow-map oracle") {
  AddressSpace space;
  Memtable table(7, {3}, 16 * kMiB, &space);
  Random rnd(2024);
  std::map<std::string, std::string> shadow;
  SequenceNumber seq = 0;
  for (int i = 0; i < 1000; i++) {
    std::string key = RandomKey(&rnd, 1 + rnd.Uniform(12));
    std::string value = "val" + std::to_string(rnd.Uniform(1000));
    REQUIRE(table.Put(key, value, ++seq).ok());
    shadow[key] = value;
  }
  for (const auto& [key, expect] : shadow) {
    std::string value;
    bool deleted;
    REQUIRE(table.Get(key, kMaxSequence, &value, &deleted).ok());
    CHECK(value == expect);
  }
}

TEST_CASE("memtable fills to its limit") {
  AddressSpace space;
  Memtable table(1, {0}, 64 * 1024, &space);
  SequenceNumber seq = 0;
  std::string value(1000, 'v');
  Status s;
  uint64_t put_bytes = 0;
  while (true) {
    char key[16];
    std::snprintf(key, sizeof(key), "key%06llu",
                  static_cast<unsigned long long>(seq));
    s = table.Put(key, value, seq + 1);
    if (!s.ok()) break;
    seq++;
    put_bytes += EncodedTupleSize(9, 1000);
  }
  CHECK(s.IsMemtableFull());
  CHECK(table.size_bytes() == put_bytes);
  CHECK(table.size_bytes() <= 64 * 1024);
  // Next tuple would have crossed the limit.
  CHECK(table.size_bytes() + EncodedTupleSize(9, 1000) > 64 * 1024);
}

TEST_CASE("seal: state machine") {
  AddressSpace space;
  Memtable table(1, {0}, kMiB, &space);
  REQUIRE(table.Put("a", "1", 1).ok());
  CHECK(table.state() == Memtable::State::kActive);
  REQUIRE(table.Seal().ok());
  CHECK(table.state() == Memtable::State::kImmutable);
  CHECK(table.Seal().code() == Status::Code::kInvalidState);
  CHECK(table.Put("b", "2", 2).code() == Status::Code::kInvalidState);

  // Content identical before and after seal.
  std::string value;
  bool deleted;
  REQUIRE(table.Get("a", kMaxSequence, &value, &deleted).ok());
  CHECK(value == "1");
}

TEST_CASE("sequence monotonicity per key") {
  AddressSpace space;
  Memtable table(1, {1}, kMiB, &space);
  Random rnd(5);
  SequenceNumber seq = 0;
  for (int i = 0; i < 500; i++) {
    REQUIRE(table.Put("key" + std::to_string(rnd.Uniform(20)), "v", ++seq).ok());
  }
  Memtable::Iterator it(&table);
  std::string prev_key;
  SequenceNumber prev_seq = 0;
  bool first = true;
  for (it.SeekToFirst(); it.Valid(); it.Next()) {
    std::string key = it.key().ToString();
    if (!first && key == prev_key) {
      CHECK(it.seq() < prev_seq);  // strictly decreasing within a key
    } else if (!first) {
      CHECK(key > prev_key);
    }
    prev_key = key;
    prev_seq = it.seq();
    first = false;
  }
}

TEST_CASE("relocate: paper arithmetic and range checks") {
  uint64_t out = 0;
  // A=0x1000, B=0x9000, C=0x1040 -> 0x9040.
  REQUIRE(Relocate(0x1040, 0x1000, 0x9000, 0x100, &out).ok());
  CHECK(out == 0x9040);

  // B == A is the identity.
  REQUIRE(Relocate(0x1040, 0x1000, 0x1000, 0x100, &out).ok());
  CHECK(out == 0x1040);

  // Random triples equal the brute-force (C - A) + B.
  Random rnd(77);
  for (int i = 0; i < 10000; i++) {
    uint64_t a = rnd.Uniform(1ull << 40);
    uint64_t len = 1 + rnd.Uniform(1ull << 20);
    uint64_t c = a + rnd.Uniform(len);
    uint64_t b = rnd.Uniform(1ull << 40);
    REQUIRE(Relocate(c, a, b, len, &out).ok());
    CHECK(out == (c - a) + b);
  }

  // C outside [A, A+len) is rejected.
  CHECK(Relocate(0x0fff, 0x1000, 0x9000, 0x100, &out).code() ==
        Status::Code::kOutOfRange);
  CHECK(Relocate(0x1100, 0x1000, 0x9000, 0x100, &out).code() ==
        Status::Code::kOutOfRange);
}

TEST_CASE("serialize_index: empty table gives header-only buffer") {
  AddressSpace space;
  Memtable table(1, {0}, kMiB, &space);
  REQUIRE(table.Seal().ok());
  std::string buf = table.SerializeIndex();
  // magic + version + k + count + seq bounds + head links.
  CHECK(buf.size() == 4 + 2 + 1 + 4 + 16 + 4 * Memtable::kMaxHeight);
}

TEST_CASE("serialize_index: size tracks node count and heights") {
  AddressSpace space;
  Memtable table(1, {0}, 4 * kMiB, &space);
  SequenceNumber seq = 0;
  uint64_t expected = 0;
  Random rnd(9);
  for (int i = 0; i < 2000; i++) {
    REQUIRE(table.Put(RandomKey(&rnd), "v", ++seq).ok());
  }
  REQUIRE(table.Seal().ok());
  std::string buf = table.SerializeIndex();

  // Per node: height u8 + shard u8 + offset u64 + 4*(height+1) links.
  Memtable::Iterator it(&table);
  // Recompute from the table itself as the size model.
  expected = 4 + 2 + 1 + 4 + 16 + 4 * Memtable::kMaxHeight;
  (void)it;
  uint64_t nodes = 0, links = 0;
  {
    Slice in(buf);
    in.remove_prefix(4 + 2 + 1);
    uint32_t count;
    GetFixed32(&in, &count);
    nodes = count;
  }
  CHECK(nodes == 2000);
  // Height distribution is geometric(1/4): average links/node within sane
  // bounds of the 8(n+1)-byte model.
  links = (buf.size() - expected - nodes * 10) / 4;
  double avg_height = static_cast<double>(links) / nodes;
  CHECK(avg_height > 1.0);
  CHECK(avg_height < 1.8);  // E[height] = 1/(1-1/4) = 1.333
}

TEST_CASE("index/data separation: rebuild from KV blocks alone") {
  AddressSpace space;
  Memtable table(1, {2}, 4 * kMiB, &space);
  Random rnd(31);
  SequenceNumber seq = 0;
  std::map<std::string, std::pair<std::string, bool>> shadow;
  for (int i = 0; i < 3000; i++) {
    std::string key = RandomKey(&rnd, 1 + rnd.Uniform(10));
    bool tomb = rnd.OneIn(10);
    std::string value = tomb ? "" : RandomKey(&rnd, rnd.Uniform(40));
    REQUIRE(table.Put(key, value, ++seq, tomb).ok());
    shadow[key] = {value, tomb};
  }

  // Scan the raw shard blocks and reinsert into a fresh table.
  AddressSpace space2;
  Memtable rebuilt(2, {2}, 4 * kMiB, &space2);
  struct Entry {
    std::string key, value;
    SequenceNumber seq;
    bool tomb;
  };
  std::vector<Entry> entries;
  for (uint32_t shard = 0; shard < 4; shard++) {
    const std::string& block = table.shard_block(shard);
    size_t pos = 0;
    while (pos < block.size()) {
      DecodedTuple t;
      REQUIRE(DecodeTuple(Slice(block.data() + pos, block.size() - pos), &t));
      CHECK(ShardOf(t.key, {2}) == shard);  // shard purity
      entries.push_back({t.key.ToString(), t.value.ToString(), t.seq,
                         t.tombstone});
      pos += t.encoded_len;
    }
  }
  std::sort(entries.begin(), entries.end(),
            [](const Entry& a, const Entry& b) { return a.seq < b.seq; });
  for (const Entry& e : entries) {
    REQUIRE(rebuilt.Put(e.key, e.value, e.seq, e.tomb).ok());
  }

  // Identical get results for every key.
  for (const auto& [key, expect] : shadow) {
    std::string v1, v2;
    bool d1, d2;
    Status s1 = table.Get(key, kMaxSequence, &v1, &d1);
    Status s2 = rebuilt.Get(key, kMaxSequence, &v2, &d2);
    CHECK(s1.code() == s2.code());
    CHECK(d1 == d2);
    CHECK(v1 == v2);
  }
}

TEST_CASE("freq: saturating 3-bit counter bumps on active gets") {
  AddressSpace space;
  Memtable table(1, {0}, kMiB, &space);
  REQUIRE(table.Put("hot", "v", 1).ok());
  std::string value;
  bool deleted;
  for (int i = 0; i < 20; i++) {
    REQUIRE(table.Get("hot", kMaxSequence, &value, &deleted).ok());
  }
  Memtable::Iterator it(&table);
  it.SeekToFirst();
  REQUIRE(it.Valid());
  CHECK(it.freq() == 7);  // saturated, not 20
}

}  // namespace farlsm
