// Copyright (c) 2026 The farlsm Authors. All rights reserved.
// Use of this source code is governed by a BSD-style license that can be
// found in the LICENSE file.

#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <queue>
#include <string>
#include <vector>

#include "farlsm/status.h"

namespace farlsm {

// Simulated time in nanoseconds. Wall clock never drives behavior.
using SimTime = uint64_t;

constexpr SimTime kMicrosecond = 1000;
constexpr SimTime kMillisecond = 1000 * kMicrosecond;
constexpr SimTime kSecond = 1000 * kMillisecond;

inline SimTime Micros(double us) {
  return static_cast<SimTime>(us * 1000.0 + 0.5);
}

enum class NodeKind : uint8_t { kCompute = 0, kDm = 1, kDs = 2, kScheduler = 3 };

struct NodeId {
  NodeKind kind = NodeKind::kCompute;
  uint16_t index = 0;

  bool operator==(const NodeId& o) const {
    return kind == o.kind && index == o.index;
  }
  bool operator!=(const NodeId& o) const { return !(*this == o); }
  bool operator<(const NodeId& o) const {
    if (kind != o.kind) return kind < o.kind;
    return index < o.index;
  }

  uint32_t Encoded() const {
    return (static_cast<uint32_t>(kind) << 16) | index;
  }
  static NodeId Decode(uint32_t v) {
    return NodeId{static_cast<NodeKind>((v >> 16) & 0xff),
                  static_cast<uint16_t>(v & 0xffff)};
  }

  std::string ToString() const;
};

inline NodeId ComputeNode(uint16_t i) { return {NodeKind::kCompute, i}; }
inline NodeId DmNodeId(uint16_t i) { return {NodeKind::kDm, i}; }
inline NodeId DsNodeId(uint16_t i) { return {NodeKind::kDs, i}; }
inline NodeId SchedulerId(uint16_t i = 0) { return {NodeKind::kScheduler, i}; }

// Per-operation latency constants, calibrated from measured RDMA read-path
// timings: one-sided read 6.8us, send 7.8us, recv 8.6us, remote search
// 5.6us, local search 4.7us, bloom probe 1.89us. All overridable via config.
struct LatencyModel {
  double one_sided_read_us = 6.8;
  double one_sided_write_us = 6.8;
  double send_us = 7.8;
  double recv_us = 8.6;
  double per_byte_us = 0.001;
  double ds_bandwidth_mbps = 2500.0;  // per DS link, megabits/s
  double bloom_check_us = 1.89;
  double remote_get_us = 5.6;   // DM-side delegated search
  double local_get_us = 4.7;    // CN local memtable search
  int doorbell_batch_max = 16;

  SimTime OneSidedRead(uint64_t bytes) const {
    return Micros(one_sided_read_us + per_byte_us * bytes);
  }
  SimTime OneSidedWrite(uint64_t bytes) const {
    return Micros(one_sided_write_us + per_byte_us * bytes);
  }
  SimTime SendLatency(uint64_t bytes) const {
    return Micros(send_us + per_byte_us * bytes);
  }
  SimTime RecvLatency(uint64_t bytes) const {
    return Micros(recv_us + per_byte_us * bytes);
  }
  // Bulk DS transfer time at the bandwidth cap.
  SimTime DsTransfer(uint64_t bytes) const {
    if (ds_bandwidth_mbps <= 0) return 0;
    double ns = static_cast<double>(bytes) * 8000.0 / ds_bandwidth_mbps;
    return static_cast<SimTime>(ns + 0.5);
  }
};

// Addressable slab of a node's memory. base offsets are unique within the
// owner and never reused, so live regions can never overlap.
struct RemoteRegion {
  NodeId owner;
  uint64_t region_id = 0;
  uint64_t base = 0;
  uint64_t length = 0;

  bool valid() const { return length > 0; }
};

struct FabricEvent {
  enum class Kind : uint8_t { kOneSidedRead, kOneSidedWrite, kMessage };
  SimTime deliver_at = 0;
  NodeId src;
  NodeId dst;
  Kind kind = Kind::kMessage;
  uint64_t payload_len = 0;
};

// Aggregated transfer accounting: totals per directed link plus a windowed
// series per node-kind pair for peak/average rate analysis. Bytes of a
// transfer are attributed uniformly across [issue, deliver].
class TrafficMatrix {
 public:
  explicit TrafficMatrix(SimTime window_ns = 10 * kMillisecond)
      : window_ns_(window_ns) {}

  void Add(NodeId src, NodeId dst, uint64_t bytes, SimTime t0, SimTime t1);
  void AddLatency(NodeId src, NodeId dst, SimTime ns);

  uint64_t LinkBytes(NodeId src, NodeId dst) const;
  uint64_t KindBytes(NodeKind src, NodeKind dst) const;
  uint64_t TotalBytes() const { return total_bytes_; }
  SimTime LinkLatency(NodeId src, NodeId dst) const;

  // Peak and average windowed rate in bytes/sec over [0, horizon].
  double PeakRate(NodeKind src, NodeKind dst) const;
  double AverageRate(NodeKind src, NodeKind dst, SimTime horizon) const;

  SimTime window_ns() const { return window_ns_; }

 private:
  struct LinkStats {
    uint64_t bytes = 0;
    uint64_t ops = 0;
    SimTime charged_ns = 0;
  };
  SimTime window_ns_;
  uint64_t total_bytes_ = 0;
  std::map<std::pair<uint32_t, uint32_t>, LinkStats> links_;
  std::map<std::pair<uint8_t, uint8_t>, std::vector<double>> windows_;
};

// Mailbox interface every simulated node implements.
class MessageHandler {
 public:
  virtual ~MessageHandler() = default;
  virtual void OnMessage(NodeId src, uint16_t kind, const std::string& payload) = 0;
  virtual void OnUndeliverable(NodeId /*dst*/, uint16_t /*kind*/,
                               const std::string& /*payload*/) {}
  virtual void OnRestart() {}
};

// Deterministic single-threaded discrete-event fabric. All node logic runs
// as callbacks invoked from the event loop; external drivers interact only
// through the Run*/AdvanceClock entry points from one controlling thread.
class Fabric {
 public:
  explicit Fabric(const LatencyModel& latency = LatencyModel(),
                  SimTime traffic_window_ns = 10 * kMillisecond);
  ~Fabric();

  Fabric(const Fabric&) = delete;
  Fabric& operator=(const Fabric&) = delete;

  SimTime now() const { return now_; }
  const LatencyModel& latency() const { return latency_; }

  // --- Topology -----------------------------------------------------------
  NodeId AddNode(NodeKind kind, uint64_t memory_budget_bytes);
  void BindHandler(NodeId id, MessageHandler* handler);
  bool IsUp(NodeId id) const;
  uint32_t Incarnation(NodeId id) const;

  // --- Remote memory ------------------------------------------------------
  Status RegisterRegion(NodeId owner, uint64_t length, RemoteRegion* out);
  Status FreeRegion(const RemoteRegion& region);
  uint64_t RegionBytesInUse(NodeId owner) const;
  uint64_t MemoryBudget(NodeId owner) const;

  using WriteCallback = std::function<void(Status)>;
  using ReadCallback = std::function<void(Status, std::string)>;

  void OneSidedWrite(NodeId src, const RemoteRegion& region, uint64_t offset,
                     std::string data, WriteCallback done);
  void OneSidedRead(NodeId src, const RemoteRegion& region, uint64_t offset,
                    uint64_t len, ReadCallback done);

  struct ReadOp {
    RemoteRegion region;
    uint64_t offset = 0;
    uint64_t len = 0;
  };
  // Doorbell-batched reads: each group of up to doorbell_batch_max ops pays
  // the fixed cost once plus per-byte cost for all payloads.
  void OneSidedReadBatch(NodeId src, std::vector<ReadOp> ops,
                         std::function<void(Status, std::vector<std::string>)> done);

  // Immediate (zero-latency) access used by the region's own node, e.g. a
  // DM-local executor reading blocks it hosts.
  Status LocalRead(const RemoteRegion& region, uint64_t offset, uint64_t len,
                   std::string* out) const;

  // --- Messaging ----------------------------------------------------------
  enum class SendCost : uint8_t { kSend, kReply };
  void Send(NodeId src, NodeId dst, uint16_t kind, std::string payload,
            SendCost cost = SendCost::kSend);

  // Bandwidth-capped bulk stream to/from a DS node (models the shared DS
  // link rather than per-op RDMA latency).
  void BulkTransfer(NodeId src, NodeId dst, uint64_t bytes,
                    std::function<void(Status)> done);

  // Message delivered at DS-link speed: fixed send cost plus payload bytes
  // at the bandwidth cap, serialized per ordered pair like BulkTransfer.
  void BulkSend(NodeId src, NodeId dst, uint16_t kind, std::string payload);

  // --- Timers and charged CPU time ----------------------------------------
  // Guarded by the node's liveness: callbacks scheduled by a node never fire
  // after it crashed or restarted.
  void ScheduleFor(NodeId node, SimTime delay, std::function<void()> fn,
                   bool background = false);
  // Unguarded timer for harness/driver use.
  void Schedule(SimTime delay, std::function<void()> fn,
                bool background = false);

  // --- Failure injection ---------------------------------------------------
  // Crash seals the mailbox and invalidates pending callbacks; region bytes
  // are retained but unreachable until the node restarts and its agent
  // decides what to purge.
  void CrashNode(NodeId id);
  void RestartNode(NodeId id);

  // --- Event loop -----------------------------------------------------------
  // Delivers all events at the minimum deliver_at. Returns false (idle
  // marker) when nothing but background events remain. Typed records of the
  // delivered fabric events are appended to *batch when non-null.
  bool AdvanceClock(std::vector<FabricEvent>* batch = nullptr);
  void RunUntilIdle();
  void RunUntil(SimTime t);
  void RunWhile(const std::function<bool()>& keep_going);
  bool Idle() const;

  TrafficMatrix& traffic() { return traffic_; }
  const TrafficMatrix& traffic() const { return traffic_; }

  void SetTraceSink(std::function<void(const FabricEvent&)> sink) {
    trace_sink_ = std::move(sink);
  }

  uint64_t delivered_events() const { return delivered_events_; }

 private:
  struct Node {
    NodeKind kind;
    uint64_t budget = 0;
    uint64_t in_use = 0;
    uint64_t next_base = 0x10000;
    uint64_t next_region_id = 1;
    bool up = true;
    uint32_t incarnation = 1;
    MessageHandler* handler = nullptr;
    std::map<uint64_t, std::string> regions;  // region_id -> bytes
    std::map<uint64_t, RemoteRegion> region_meta;
  };

  struct Pending {
    SimTime at;
    uint64_t seq;
    bool background;
    bool has_record;
    FabricEvent record;
    // Liveness guard: skip the callback if the node is down or reborn.
    bool guarded;
    NodeId guard_node;
    uint32_t guard_incarnation;
    std::function<void()> fn;
  };
  struct PendingOrder {
    bool operator()(const Pending* a, const Pending* b) const {
      if (a->at != b->at) return a->at > b->at;
      return a->seq > b->seq;
    }
  };

  Node* GetNode(NodeId id);
  const Node* GetNode(NodeId id) const;
  void Enqueue(SimTime at, bool background, std::function<void()> fn,
               const FabricEvent* record, const NodeId* guard);
  SimTime FifoDeliverAt(NodeId src, NodeId dst, SimTime latency);
  SimTime BulkDeliverAt(NodeId src, NodeId dst, SimTime latency);
  Status CheckRange(const Node* node, const RemoteRegion& region,
                    uint64_t offset, uint64_t len) const;

  LatencyModel latency_;
  SimTime now_ = 0;
  uint64_t next_seq_ = 0;
  uint64_t delivered_events_ = 0;
  std::map<uint32_t, Node> nodes_;
  std::priority_queue<Pending*, std::vector<Pending*>, PendingOrder> queue_;
  std::map<std::pair<uint32_t, uint32_t>, SimTime> channel_clock_;
  std::map<std::pair<uint32_t, uint32_t>, SimTime> bulk_channel_clock_;
  uint64_t foreground_pending_ = 0;
  TrafficMatrix traffic_;
  std::function<void(const FabricEvent&)> trace_sink_;
};

// Formats one trace line: `t=<us> src=<id> dst=<id> kind=<k> len=<bytes>`.
std::string FormatTraceLine(const FabricEvent& ev);

}  // namespace farlsm
