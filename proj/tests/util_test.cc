// Copyright (c) 2026 The farlsm Authors. All rights reserved.
// Use of this source code is governed by a BSD-style license that can be
// found in the LICENSE file.

#include <set>

#include "doctest.h"
#include "farlsm/bloom.h"
#include "farlsm/coding.h"
#include "farlsm/crc32c.h"
#include "farlsm/env.h"
#include "farlsm/histogram.h"
#include "farlsm/kv_format.h"
#include "farlsm/random.h"

namespace farlsm {

TEST_CASE("coding: varint round trips") {
  std::string buf;
  std::vector<uint64_t> values = {0, 1, 127, 128, 300, 1u << 20,
                                  (1ull << 40) + 17, UINT64_MAX};
  for (uint64_t v : values) PutVarint64(&buf, v);
  Slice in(buf);
  for (uint64_t v : values) {
    uint64_t got;
    REQUIRE(GetVarint64(&in, &got));
    CHECK(got == v);
  }
  CHECK(in.empty());
}

TEST_CASE("coding: fixed endianness") {
  std::string buf;
  PutFixed32(&buf, 0x04030201u);
  CHECK(buf[0] == 0x01);
  CHECK(buf[3] == 0x04);
  PutFixed64(&buf, 0x0807060504030201ull);
  CHECK(DecodeFixed64(buf.data() + 4) == 0x0807060504030201ull);
}

TEST_CASE("crc32c: known vectors") {
  // "123456789" -> 0xe3069283 is the standard CRC-32C check value.
  CHECK(crc32c::Value("123456789", 9) == 0xe3069283u);
  char zeros[32] = {0};
  CHECK(crc32c::Value(zeros, 32) == 0x8a9136aau);
  uint32_t crc = crc32c::Value("hello", 5);
  CHECK(crc32c::Unmask(crc32c::Mask(crc)) == crc);
  CHECK(crc32c::Mask(crc) != crc);
}

TEST_CASE("kv_format: tuple round trip and tombstone flag") {
  std::string buf;
  EncodeTuple(&buf, "key1", "value1", 42, false);
  EncodeTuple(&buf, "key2", "", 43, true);

  DecodedTuple t;
  REQUIRE(DecodeTuple(Slice(buf), &t));
  CHECK(t.key == Slice("key1"));
  CHECK(t.value == Slice("value1"));
  CHECK(t.seq == 42);
  CHECK_FALSE(t.tombstone);
  CHECK(t.encoded_len == EncodedTupleSize(4, 6));

  DecodedTuple t2;
  REQUIRE(DecodeTuple(Slice(buf.data() + t.encoded_len,
                            buf.size() - t.encoded_len), &t2));
  CHECK(t2.key == Slice("key2"));
  CHECK(t2.tombstone);
  CHECK(t2.seq == 43);
}

TEST_CASE("kv_format: truncated tuple rejected") {
  std::string buf;
  EncodeTuple(&buf, "abc", "def", 7, false);
  for (size_t keep = 0; keep < buf.size(); keep++) {
    DecodedTuple t;
    CHECK_FALSE(DecodeTuple(Slice(buf.data(), keep), &t));
  }
}

TEST_CASE("histogram: percentiles bracket the data") {
  Histogram h;
  for (int i = 1; i <= 1000; i++) h.Add(i);
  CHECK(h.count() == 1000);
  CHECK(h.Percentile(50) == doctest::Approx(500).epsilon(0.1));
  CHECK(h.Percentile(99) == doctest::Approx(990).epsilon(0.1));
  CHECK(h.min() == 1);
  CHECK(h.max() == 1000);
}

TEST_CASE("bloom: no false negatives, bounded false positives") {
  std::vector<std::string> keys;
  for (int i = 0; i < 10000; i++) keys.push_back("key" + std::to_string(i));
  std::vector<Slice> slices(keys.begin(), keys.end());
  std::string filter = BloomFilter::Build(slices);

  for (const auto& k : keys) {
    CHECK(BloomFilter::MayContain(filter, k));
  }

  int fp = 0;
  const int probes = 100000;
  for (int i = 0; i < probes; i++) {
    std::string absent = "absent" + std::to_string(i);
    if (BloomFilter::MayContain(filter, absent)) fp++;
  }
  // 10 bits/key targets ~1%; allow 2x headroom.
  CHECK(fp < probes * 0.02);
}

TEST_CASE("bloom: empty filter rejects everything") {
  std::string filter = BloomFilter::Build({});
  CHECK_FALSE(BloomFilter::MayContain(filter, "anything"));
}

TEST_CASE("env: durable prefix survives crash, tail does not") {
  MemEnv env;
  std::unique_ptr<AppendFile> f;
  REQUIRE(env.NewAppendFile("wal", &f).ok());
  REQUIRE(f->Append("synced").ok());
  REQUIRE(f->Sync().ok());
  REQUIRE(f->Append("-volatile").ok());

  env.SimulateCrash();
  std::string contents;
  REQUIRE(env.ReadFile("wal", &contents).ok());
  CHECK(contents == "synced");
}

TEST_CASE("env: list and rename") {
  MemEnv env;
  std::unique_ptr<AppendFile> f;
  REQUIRE(env.NewAppendFile("a/1", &f).ok());
  REQUIRE(env.NewAppendFile("a/2", &f).ok());
  REQUIRE(env.NewAppendFile("b/1", &f).ok());
  std::vector<std::string> names;
  REQUIRE(env.ListFiles("a/", &names).ok());
  CHECK(names.size() == 2);
  REQUIRE(env.RenameFile("a/1", "a/3").ok());
  CHECK_FALSE(env.FileExists("a/1"));
  CHECK(env.FileExists("a/3"));
}

TEST_CASE("random: deterministic per seed") {
  Random a(42), b(42), c(43);
  bool diverged = false;
  for (int i = 0; i < 100; i++) {
    uint64_t va = a.Next64();
    CHECK(va == b.Next64());
    if (va != c.Next64()) diverged = true;
  }
  CHECK(diverged);
}

}  // namespace farlsm
