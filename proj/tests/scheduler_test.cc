// Copyright (c) 2026 The farlsm Authors. All rights reserved.
// Use of this source code is governed by a BSD-style license that can be
// found in the LICENSE file.

#include <algorithm>

#include "doctest.h"
#include "farlsm/random.h"
#include "farlsm/scheduler.h"

namespace farlsm {

namespace {

LoadTelemetry Telemetry(NodeId node, double cpu, double io, double queue,
                        SimTime at = 0) {
  LoadTelemetry t;
  t.node = node;
  t.u_cpu = cpu;
  t.u_io = io;
  t.u_queue = queue;
  t.reported_at = at;
  return t;
}

}  // namespace

TEST_CASE("load_factor: weighted sum of clamped ratios") {
  SchedulerWeights w;
  CHECK(LoadFactor(Telemetry(ComputeNode(0), 0, 0, 0), w) == 0.0);
  CHECK(LoadFactor(Telemetry(ComputeNode(0), 0.05, 0.03, 0.02), w) ==
        doctest::Approx(0.1).epsilon(1e-12));

  SchedulerWeights w2{2.0, 1.0, 1.0};
  CHECK(LoadFactor(Telemetry(ComputeNode(0), 0.5, 0, 0), w2) == 1.0);

  // Ratios clamp to [0,1].
  CHECK(LoadFactor(Telemetry(ComputeNode(0), 2.0, -1.0, 0), w) == 1.0);
}

TEST_CASE("load_factor: stale telemetry disqualifies") {
  SchedulerWeights w;
  LoadTelemetry t = Telemetry(ComputeNode(0), 0.1, 0.1, 0.1, /*at=*/0);
  double load;
  SimTime window = 200 * kMillisecond;
  CHECK(LoadFactorChecked(t, w, 100 * kMillisecond, window, &load).ok());
  CHECK(LoadFactorChecked(t, w, 201 * kMillisecond, window, &load).code() ==
        Status::Code::kStaleTelemetry);
}

TEST_CASE("assignment_cost: worked example values") {
  CHECK(AssignmentCost(64, 0.1) == doctest::Approx(70.4).epsilon(1e-12));
  CHECK(AssignmentCost(64, 0.9) == doctest::Approx(121.6).epsilon(1e-12));
  CHECK(AssignmentCost(17.5, 0.0) == 17.5);  // zero load: cost = bytes
}

TEST_CASE("select_executor: picks the low-load node") {
  SchedulerWeights w;
  std::vector<LoadTelemetry> pool = {
      Telemetry(ComputeNode(0), 0.1, 0, 0),  // load 0.1 -> cost 70.4
      Telemetry(ComputeNode(1), 0.9, 0, 0),  // load 0.9 -> cost 121.6
  };
  ExecutorChoice choice;
  REQUIRE(SelectExecutor(64.0, ComputeNode(9), pool, w, 0,
                         200 * kMillisecond, &choice)
              .ok());
  CHECK(choice.node == ComputeNode(0));
  CHECK(choice.cost == doctest::Approx(70.4));
  CHECK(choice.mode == ExecutionMode::kRemoteCn);
}

TEST_CASE("select_executor: single-node pool and empty pool") {
  SchedulerWeights w;
  std::vector<LoadTelemetry> pool = {Telemetry(DmNodeId(0), 0.5, 0.5, 0.5)};
  ExecutorChoice choice;
  REQUIRE(SelectExecutor(10, ComputeNode(0), pool, w, 0, kSecond, &choice).ok());
  CHECK(choice.node == DmNodeId(0));
  CHECK(choice.mode == ExecutionMode::kInDm);

  std::vector<LoadTelemetry> empty;
  CHECK(SelectExecutor(10, ComputeNode(0), empty, w, 0, kSecond, &choice)
            .code() == Status::Code::kNoEligibleExecutor);
}

TEST_CASE("select_executor: mode derivation and tie-breaks") {
  SchedulerWeights w;
  NodeId owner = ComputeNode(1);
  // All tied at load 0: owner wins (Local mode).
  std::vector<LoadTelemetry> pool = {
      Telemetry(ComputeNode(0), 0, 0, 0),
      Telemetry(owner, 0, 0, 0),
      Telemetry(DmNodeId(0), 0, 0, 0),
  };
  ExecutorChoice choice;
  REQUIRE(SelectExecutor(10, owner, pool, w, 0, kSecond, &choice).ok());
  CHECK(choice.node == owner);
  CHECK(choice.mode == ExecutionMode::kLocal);

  // Without the owner, the lower NodeId wins among ties.
  std::vector<LoadTelemetry> pool2 = {
      Telemetry(DmNodeId(0), 0, 0, 0),
      Telemetry(ComputeNode(0), 0, 0, 0),
  };
  REQUIRE(SelectExecutor(10, owner, pool2, w, 0, kSecond, &choice).ok());
  CHECK(choice.node == ComputeNode(0));  // kCompute orders before kDm
  CHECK(choice.mode == ExecutionMode::kRemoteCn);
}

TEST_CASE("select_executor: matches brute-force min-cost oracle") {
  Random rnd(99);
  SchedulerWeights w{1.0, 1.0, 1.0};
  for (int trial = 0; trial < 500; trial++) {
    std::vector<LoadTelemetry> pool;
    int n = 1 + rnd.Uniform(8);
    for (int i = 0; i < n; i++) {
      NodeId node = rnd.OneIn(3) ? DmNodeId(i) : ComputeNode(i);
      pool.push_back(Telemetry(node, rnd.NextDouble(), rnd.NextDouble(),
                               rnd.NextDouble()));
    }
    double mb = 1 + rnd.Uniform(128);
    ExecutorChoice choice;
    REQUIRE(SelectExecutor(mb, ComputeNode(0), pool, w, 0, kSecond, &choice)
                .ok());

    double best = 1e300;
    for (const auto& t : pool) {
      best = std::min(best, AssignmentCost(mb, LoadFactor(t, w)));
    }
    CHECK(choice.cost == best);

    // Argmin is invariant under uniform scaling of all weights.
    SchedulerWeights scaled{3.7, 3.7, 3.7};
    ExecutorChoice choice2;
    REQUIRE(SelectExecutor(mb, ComputeNode(0), pool, scaled, 0, kSecond,
                           &choice2)
                .ok());
    CHECK(choice2.node == choice.node);
  }
}

TEST_CASE("scheduler log: round trip and torn-tail truncation") {
  MemEnv env;
  {
    SchedulerLog log(&env, "sched.log");
    SchedulerLogRecord r1;
    r1.kind = SchedulerLogRecord::Kind::kJobEnqueued;
    r1.job_id = 101;
    r1.package_digest = 0xabcdef;
    r1.payload = "ownerinfo";
    REQUIRE(log.Append(r1).ok());

    SchedulerLogRecord r2;
    r2.kind = SchedulerLogRecord::Kind::kJobAssigned;
    r2.job_id = 101;
    r2.executor = DmNodeId(0);
    r2.attempt = 1;
    REQUIRE(log.Append(r2).ok());

    SchedulerLogRecord r3;
    r3.kind = SchedulerLogRecord::Kind::kCommitReceived;
    r3.job_id = 101;
    r3.payload = "commitpayload";
    REQUIRE(log.Append(r3).ok());
  }

  std::vector<SchedulerLogRecord> records;
  REQUIRE(SchedulerLog::Read(&env, "sched.log", &records).ok());
  REQUIRE(records.size() == 3);
  CHECK(records[0].kind == SchedulerLogRecord::Kind::kJobEnqueued);
  CHECK(records[0].job_id == 101);
  CHECK(records[0].payload == "ownerinfo");
  CHECK(records[1].executor == DmNodeId(0));
  CHECK(records[2].payload == "commitpayload");

  // Append garbage (torn final record): prior records still honored.
  std::unique_ptr<AppendFile> f;
  REQUIRE(env.NewAppendFile("sched.log", &f).ok());
  REQUIRE(f->Append(std::string("\x40\x00\x00\x00garbage", 11)).ok());
  REQUIRE(f->Sync().ok());
  REQUIRE(SchedulerLog::Read(&env, "sched.log", &records).ok());
  CHECK(records.size() == 3);

  // Empty log reads as clean state.
  std::vector<SchedulerLogRecord> empty;
  REQUIRE(SchedulerLog::Read(&env, "missing.log", &empty).ok());
  CHECK(empty.empty());
}

}  // namespace farlsm
