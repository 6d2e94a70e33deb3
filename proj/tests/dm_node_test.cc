// Copyright (c) 2026 The farlsm Authors. All rights reserved.
// Use of this source code is governed by a BSD-style license that can be
// found in the LICENSE file.

#include <map>

#include "doctest.h"
#include "farlsm/dm_node.h"
#include "farlsm/random.h"
#include "test_util.h"

namespace farlsm {

namespace {

constexpr uint64_t kMiB = 1024 * 1024;

std::string RandKey(Random* rnd, size_t len = 10) {
  std::string key(len, '\0');
  for (size_t i = 0; i < len; i++) {
    key[i] = static_cast<char>('a' + rnd->Uniform(26));
  }
  return key;
}

}  // namespace

TEST_CASE("accept_offload: hosted gets equal pre-offload results") {
  Fabric fabric;
  NodeId cn = fabric.AddNode(NodeKind::kCompute, 0);
  NodeId dm_id = fabric.AddNode(NodeKind::kDm, 256 * kMiB);
  DmNode dm(&fabric, dm_id);

  AddressSpace space;
  Memtable table(1, {2}, 4 * kMiB, &space);
  Random rnd(42);
  std::map<std::string, std::pair<std::string, bool>> shadow;
  SequenceNumber seq = 0;
  for (int i = 0; i < 1000; i++) {
    std::string key = RandKey(&rnd);
    bool tomb = rnd.OneIn(12);
    std::string value = tomb ? "" : RandKey(&rnd, 20);
    REQUIRE(table.Put(key, value, ++seq, tomb).ok());
    shadow[key] = {value, tomb};
  }
  // Capture pre-offload results, then seal and ship.
  std::map<std::string, std::pair<Status::Code, std::string>> pre;
  for (const auto& [key, v] : shadow) {
    std::string value;
    bool deleted;
    Status s = table.Get(key, kMaxSequence, &value, &deleted);
    pre[key] = {s.code(), value};
  }
  REQUIRE(table.Seal().ok());
  TransferRecord record;
  OffloadAck ack;
  REQUIRE(testutil::OffloadToDm(&fabric, cn, &dm, &table, &record, &ack).ok());
  REQUIRE(dm.IsSearchable(1));
  REQUIRE(ack.shard_blooms.size() == 4);

  testutil::ReplyCollector collector;
  fabric.BindHandler(cn, &collector);
  uint64_t request_id = 0;
  for (const auto& [key, expect] : pre) {
    DelegationRequest req;
    req.shard_id = static_cast<uint8_t>(ShardOf(key, {2}));
    req.snapshot_seq = kMaxSequence;
    req.key = key;
    req.memtable_ids = {1};
    req.request_id = ++request_id;
    fabric.Send(cn, dm_id, kDelegationRequestMsg, req.Encode());
    fabric.RunUntilIdle();
    REQUIRE(collector.replies.size() == request_id);
    const DelegationReply& reply = collector.replies.back();
    if (expect.first == static_cast<Status::Code>(Status::Code::kOk)) {
      REQUIRE((reply.outcome == DelegationReply::Outcome::kFoundInline ||
               reply.outcome == DelegationReply::Outcome::kFoundIndirect));
      CHECK(reply.value == expect.second);  // values are small: inline
      CHECK(reply.served_by == 1);
    } else {
      CHECK(reply.outcome == DelegationReply::Outcome::kNotFound);
    }
  }
}

TEST_CASE("accept_offload: empty memtable searchable, lookups NotFound") {
  Fabric fabric;
  NodeId cn = fabric.AddNode(NodeKind::kCompute, 0);
  NodeId dm_id = fabric.AddNode(NodeKind::kDm, 16 * kMiB);
  DmNode dm(&fabric, dm_id);

  AddressSpace space;
  Memtable table(9, {1}, kMiB, &space);
  REQUIRE(table.Seal().ok());
  TransferRecord record;
  OffloadAck ack;
  REQUIRE(testutil::OffloadToDm(&fabric, cn, &dm, &table, &record, &ack).ok());
  CHECK(dm.IsSearchable(9));

  testutil::ReplyCollector collector;
  fabric.BindHandler(cn, &collector);
  DelegationRequest req;
  req.key = "anything";
  req.memtable_ids = {9};
  req.request_id = 1;
  fabric.Send(cn, dm_id, kDelegationRequestMsg, req.Encode());
  fabric.RunUntilIdle();
  REQUIRE(collector.replies.size() == 1);
  CHECK(collector.replies[0].outcome == DelegationReply::Outcome::kNotFound);

  bool maybe = true;
  REQUIRE(dm.BloomCheck(9, 0, "anything", &maybe).ok());
  CHECK_FALSE(maybe);  // empty shard block: definitely absent
}

TEST_CASE("accept_offload: truncated index rejected atomically") {
  Fabric fabric;
  NodeId cn = fabric.AddNode(NodeKind::kCompute, 0);
  NodeId dm_id = fabric.AddNode(NodeKind::kDm, 16 * kMiB);
  DmNode dm(&fabric, dm_id);

  AddressSpace space;
  Memtable table(5, {0}, kMiB, &space);
  REQUIRE(table.Put("k1", "v1", 1).ok());
  REQUIRE(table.Put("k2", "v2", 2).ok());
  REQUIRE(table.Seal().ok());

  std::string index = table.SerializeIndex();
  std::string truncated = index.substr(0, index.size() / 2);

  RemoteRegion kv_region, index_region;
  REQUIRE(fabric.RegisterRegion(dm_id, table.shard_capacity(), &kv_region).ok());
  REQUIRE(fabric.RegisterRegion(dm_id, truncated.size(), &index_region).ok());
  fabric.OneSidedWrite(cn, kv_region, 0, table.shard_block(0), nullptr);
  fabric.OneSidedWrite(cn, index_region, 0, truncated, nullptr);
  fabric.RunUntilIdle();

  TransferRecord record;
  record.memtable_id = 5;
  record.dm_node = dm_id;
  record.shard_bits = 0;
  record.index_region_id = index_region.region_id;
  record.index_remote_base = index_region.base;
  record.index_length = truncated.size();
  record.kv_region_id = kv_region.region_id;
  record.kv_remote_base = kv_region.base;
  record.kv_stride = table.shard_capacity();
  record.shards.push_back({table.shard_block_base(0),
                           table.shard_block_size(0)});

  OffloadAck ack;
  Status s = dm.AcceptOffload(cn, 1, record, &ack);
  CHECK(s.code() == Status::Code::kCorruptIndex);
  CHECK_FALSE(dm.HasMemtable(5));  // nothing registered
  CHECK(dm.hosted_count() == 0);
}

TEST_CASE("delegated_get: search order, threshold, tombstones") {
  Fabric fabric;
  NodeId cn = fabric.AddNode(NodeKind::kCompute, 0);
  NodeId dm_id = fabric.AddNode(NodeKind::kDm, 256 * kMiB);
  DmNode dm(&fabric, dm_id);
  AddressSpace space;

  // Three memtables; the key lives in the middle one.
  auto make_table = [&](uint64_t id, SequenceNumber base) {
    auto table = std::make_unique<Memtable>(id, ShardConfig{0}, kMiB, &space);
    REQUIRE(table->Put("filler" + std::to_string(id), "x", base).ok());
    return table;
  };
  auto t1 = make_table(1, 10);
  auto t2 = make_table(2, 20);
  REQUIRE(t2->Put("target", std::string(32, 'v'), 21).ok());
  REQUIRE(t2->Put("bigval", std::string(600, 'w'), 22).ok());
  REQUIRE(t2->Put("gone", "soon", 23).ok());
  REQUIRE(t2->Put("gone", "", 24, true).ok());
  auto t3 = make_table(3, 30);

  for (Memtable* t : {t1.get(), t2.get(), t3.get()}) {
    REQUIRE(t->Seal().ok());
    TransferRecord record;
    OffloadAck ack;
    REQUIRE(testutil::OffloadToDm(&fabric, cn, &dm, t, &record, &ack).ok());
  }

  testutil::ReplyCollector collector;
  fabric.BindHandler(cn, &collector);

  auto delegate = [&](const std::string& key) -> const DelegationReply& {
    DelegationRequest req;
    req.key = key;
    req.memtable_ids = {3, 2, 1};  // newest first
    req.request_id = collector.replies.size() + 1;
    req.snapshot_seq = kMaxSequence;
    fabric.Send(cn, dm_id, kDelegationRequestMsg, req.Encode());
    fabric.RunUntilIdle();
    return collector.replies.back();
  };

  const DelegationReply& hit = delegate("target");
  CHECK(hit.outcome == DelegationReply::Outcome::kFoundInline);  // 32B <= 256B
  CHECK(hit.served_by == 2);
  CHECK(hit.value == std::string(32, 'v'));

  const DelegationReply& big = delegate("bigval");
  CHECK(big.outcome == DelegationReply::Outcome::kFoundIndirect);
  CHECK(big.served_by == 2);
  CHECK(big.value.empty());
  // Follow-up one-sided read at the returned coordinates decodes the tuple.
  RemoteRegion region{dm_id, big.region_id, 0, 0};
  std::string tuple_bytes;
  fabric.OneSidedRead(cn, region, big.offset, big.length,
                      [&](Status s, std::string data) {
                        REQUIRE(s.ok());
                        tuple_bytes = std::move(data);
                      });
  fabric.RunUntilIdle();
  DecodedTuple tuple;
  REQUIRE(DecodeTuple(Slice(tuple_bytes), &tuple));
  CHECK(tuple.key == Slice("bigval"));
  CHECK(tuple.value == Slice(std::string(600, 'w')));

  const DelegationReply& tomb = delegate("gone");
  CHECK(tomb.outcome == DelegationReply::Outcome::kNotFound);
  CHECK(tomb.tombstone);
  CHECK(tomb.served_by == 2);  // tombstone hit still reports the server

  // Unknown memtable id: stale after reclaim.
  DelegationRequest req;
  req.key = "target";
  req.memtable_ids = {99};
  req.request_id = 1000;
  fabric.Send(cn, dm_id, kDelegationRequestMsg, req.Encode());
  fabric.RunUntilIdle();
  CHECK(collector.replies.back().outcome ==
        DelegationReply::Outcome::kUnknownMemtable);
}

TEST_CASE("delegated_get: 10k keys across 4 memtables match shadow oracle") {
  Fabric fabric;
  NodeId cn = fabric.AddNode(NodeKind::kCompute, 0);
  NodeId dm_id = fabric.AddNode(NodeKind::kDm, 512 * kMiB);
  DmNode dm(&fabric, dm_id, /*workers=*/8);
  AddressSpace space;
  Random rnd(1717);

  // Shadow oracle keyed by newest seq across all memtables.
  std::map<std::string, std::pair<SequenceNumber, std::string>> shadow;
  std::map<std::string, bool> dead;
  std::vector<uint64_t> ids;
  SequenceNumber seq = 0;
  for (uint64_t id = 1; id <= 4; id++) {
    Memtable table(id, {3}, 8 * kMiB, &space);
    for (int i = 0; i < 2500; i++) {
      std::string key = "k" + std::to_string(rnd.Uniform(4000));
      bool tomb = rnd.OneIn(10);
      std::string value = tomb ? "" : RandKey(&rnd, 12);
      REQUIRE(table.Put(key, value, ++seq, tomb).ok());
      shadow[key] = {seq, value};
      dead[key] = tomb;
    }
    REQUIRE(table.Seal().ok());
    TransferRecord record;
    OffloadAck ack;
    REQUIRE(testutil::OffloadToDm(&fabric, cn, &dm, &table, &record, &ack).ok());
    ids.push_back(id);
  }
  std::vector<uint64_t> newest_first(ids.rbegin(), ids.rend());

  testutil::ReplyCollector collector;
  fabric.BindHandler(cn, &collector);
  uint64_t request_id = 0;
  for (const auto& [key, expect] : shadow) {
    DelegationRequest req;
    req.key = key;
    req.memtable_ids = newest_first;
    req.snapshot_seq = kMaxSequence;
    req.request_id = ++request_id;
    fabric.Send(cn, dm_id, kDelegationRequestMsg, req.Encode());
  }
  fabric.RunUntilIdle();
  REQUIRE(collector.replies.size() == shadow.size());

  std::map<uint64_t, DelegationReply> by_request;
  for (const auto& reply : collector.replies) {
    by_request[reply.request_id] = reply;
  }
  request_id = 0;
  for (const auto& [key, expect] : shadow) {
    const DelegationReply& reply = by_request[++request_id];
    if (dead[key]) {
      CHECK(reply.outcome == DelegationReply::Outcome::kNotFound);
      CHECK(reply.tombstone);
    } else {
      REQUIRE(reply.outcome == DelegationReply::Outcome::kFoundInline);
      CHECK(reply.value == expect.second);
      CHECK(reply.seq == expect.first);
    }
  }
}

TEST_CASE("bloom_check: no false negatives, measured FPR within budget") {
  Fabric fabric;
  NodeId cn = fabric.AddNode(NodeKind::kCompute, 0);
  NodeId dm_id = fabric.AddNode(NodeKind::kDm, 256 * kMiB);
  DmNode dm(&fabric, dm_id);
  AddressSpace space;
  Memtable table(1, {0}, 16 * kMiB, &space);
  Random rnd(5);
  std::vector<std::string> keys;
  SequenceNumber seq = 0;
  for (int i = 0; i < 20000; i++) {
    keys.push_back("present" + std::to_string(i));
    REQUIRE(table.Put(keys.back(), "v", ++seq).ok());
  }
  REQUIRE(table.Seal().ok());
  TransferRecord record;
  OffloadAck ack;
  REQUIRE(testutil::OffloadToDm(&fabric, cn, &dm, &table, &record, &ack).ok());

  for (const auto& key : keys) {
    bool maybe = false;
    REQUIRE(dm.BloomCheck(1, 0, key, &maybe).ok());
    CHECK(maybe);  // no false negatives
  }
  int fp = 0;
  const int probes = 100000;
  for (int i = 0; i < probes; i++) {
    bool maybe = false;
    REQUIRE(dm.BloomCheck(1, 0, "absent" + std::to_string(i), &maybe).ok());
    if (maybe) fp++;
  }
  CHECK(fp <= probes * 0.02);  // <= 2x the 1% target
}

TEST_CASE("reclaim: frees exactly the allocated bytes, idempotent") {
  Fabric fabric;
  NodeId cn = fabric.AddNode(NodeKind::kCompute, 0);
  NodeId dm_id = fabric.AddNode(NodeKind::kDm, 64 * kMiB);
  DmNode dm(&fabric, dm_id);
  AddressSpace space;
  Memtable table(1, {1}, kMiB, &space);
  REQUIRE(table.Put("a", "1", 1).ok());
  REQUIRE(table.Seal().ok());

  uint64_t before = fabric.RegionBytesInUse(dm_id);
  TransferRecord record;
  OffloadAck ack;
  REQUIRE(testutil::OffloadToDm(&fabric, cn, &dm, &table, &record, &ack).ok());
  uint64_t during = fabric.RegionBytesInUse(dm_id);
  CHECK(during > before);

  REQUIRE(dm.Reclaim(1).ok());
  CHECK(fabric.RegionBytesInUse(dm_id) == before);  // allocator accounting
  CHECK_FALSE(dm.HasMemtable(1));

  // Double reclaim is a no-op error.
  CHECK(dm.Reclaim(1).IsUnknownMemtable());

  // Subsequent delegated gets surface UnknownMemtable.
  testutil::ReplyCollector collector;
  fabric.BindHandler(cn, &collector);
  DelegationRequest req;
  req.key = "a";
  req.memtable_ids = {1};
  req.request_id = 7;
  fabric.Send(cn, dm_id, kDelegationRequestMsg, req.Encode());
  fabric.RunUntilIdle();
  REQUIRE(collector.replies.size() == 1);
  CHECK(collector.replies[0].outcome ==
        DelegationReply::Outcome::kUnknownMemtable);
}

TEST_CASE("worker pool: requests beyond pool size queue up") {
  LatencyModel model;
  model.remote_get_us = 100.0;  // make search time dominate
  Fabric fabric(model);
  NodeId cn = fabric.AddNode(NodeKind::kCompute, 0);
  NodeId dm_id = fabric.AddNode(NodeKind::kDm, 64 * kMiB);
  DmNode dm(&fabric, dm_id, /*workers=*/2);
  AddressSpace space;
  Memtable table(1, {0}, kMiB, &space);
  REQUIRE(table.Put("k", "v", 1).ok());
  REQUIRE(table.Seal().ok());
  TransferRecord record;
  OffloadAck ack;
  REQUIRE(testutil::OffloadToDm(&fabric, cn, &dm, &table, &record, &ack).ok());

  testutil::ReplyCollector collector;
  fabric.BindHandler(cn, &collector);
  for (int i = 0; i < 6; i++) {
    DelegationRequest req;
    req.key = "k";
    req.memtable_ids = {1};
    req.request_id = i + 1;
    fabric.Send(cn, dm_id, kDelegationRequestMsg, req.Encode());
  }
  // With 2 workers and 100us service time, 6 requests take 3 service
  // rounds; the last reply lands no earlier than 300us after the first
  // request is received.
  fabric.RunUntilIdle();
  REQUIRE(collector.replies.size() == 6);
  CHECK(fabric.now() >= Micros(300));
}

TEST_CASE("delegated scan: in-range tuples with continuation") {
  Fabric fabric;
  NodeId cn = fabric.AddNode(NodeKind::kCompute, 0);
  NodeId dm_id = fabric.AddNode(NodeKind::kDm, 64 * kMiB);
  DmNode dm(&fabric, dm_id);
  AddressSpace space;
  Memtable table(1, {2}, 4 * kMiB, &space);
  SequenceNumber seq = 0;
  for (int i = 0; i < 100; i++) {
    char key[16];
    std::snprintf(key, sizeof(key), "k%03d", i);
    REQUIRE(table.Put(key, "v" + std::to_string(i), ++seq).ok());
  }
  REQUIRE(table.Seal().ok());
  TransferRecord record;
  OffloadAck ack;
  REQUIRE(testutil::OffloadToDm(&fabric, cn, &dm, &table, &record, &ack).ok());

  testutil::ReplyCollector collector;
  fabric.BindHandler(cn, &collector);
  DelegationScanRequest req;
  req.memtable_id = 1;
  req.request_id = 1;
  req.snapshot_seq = kMaxSequence;
  req.start_key = "k010";
  req.end_key = "k020";
  fabric.Send(cn, dm_id, kDelegationScanMsg, req.Encode());
  fabric.RunUntilIdle();
  REQUIRE(collector.scan_replies.size() == 1);
  const auto& reply = collector.scan_replies[0];
  CHECK_FALSE(reply.truncated);

  int count = 0;
  Slice tuples(reply.tuples);
  std::string prev;
  while (!tuples.empty()) {
    DecodedTuple t;
    REQUIRE(DecodeTuple(tuples, &t));
    CHECK(t.key.ToString() >= "k010");
    CHECK(t.key.ToString() < "k020");
    CHECK(t.key.ToString() > prev);
    prev = t.key.ToString();
    tuples.remove_prefix(t.encoded_len);
    count++;
  }
  CHECK(count == 10);
}

}  // namespace farlsm
