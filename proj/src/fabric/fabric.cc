// Copyright (c) 2026 The farlsm Authors. All rights reserved.
// Use of this source code is governed by a BSD-style license that can be
// found in the LICENSE file.

#include "farlsm/fabric.h"

#include <algorithm>
#include <cassert>
#include <cstdio>

namespace farlsm {

std::string NodeId::ToString() const {
  const char* prefix = "??";
  switch (kind) {
    case NodeKind::kCompute: prefix = "cn"; break;
    case NodeKind::kDm: prefix = "dm"; break;
    case NodeKind::kDs: prefix = "ds"; break;
    case NodeKind::kScheduler: prefix = "sched"; break;
  }
  char buf[16];
  std::snprintf(buf, sizeof(buf), "%s%u", prefix, index);
  return buf;
}

void TrafficMatrix::Add(NodeId src, NodeId dst, uint64_t bytes, SimTime t0,
                        SimTime t1) {
  auto& link = links_[{src.Encoded(), dst.Encoded()}];
  link.bytes += bytes;
  link.ops += 1;
  total_bytes_ += bytes;

  auto& series = windows_[{static_cast<uint8_t>(src.kind),
                           static_cast<uint8_t>(dst.kind)}];
  if (t1 < t0) t1 = t0;
  size_t w0 = t0 / window_ns_;
  size_t w1 = t1 / window_ns_;
  if (series.size() <= w1) series.resize(w1 + 1, 0.0);
  if (w0 == w1) {
    series[w0] += static_cast<double>(bytes);
    return;
  }
  // Spread uniformly over the in-flight interval.
  double span = static_cast<double>(t1 - t0);
  for (size_t w = w0; w <= w1; w++) {
    SimTime ws = w * window_ns_;
    SimTime we = ws + window_ns_;
    SimTime lo = std::max<SimTime>(ws, t0);
    SimTime hi = std::min<SimTime>(we, t1);
    if (hi > lo) {
      series[w] += bytes * (static_cast<double>(hi - lo) / span);
    }
  }
}

void TrafficMatrix::AddLatency(NodeId src, NodeId dst, SimTime ns) {
  links_[{src.Encoded(), dst.Encoded()}].charged_ns += ns;
}

uint64_t TrafficMatrix::LinkBytes(NodeId src, NodeId dst) const {
  auto it = links_.find({src.Encoded(), dst.Encoded()});
  return it == links_.end() ? 0 : it->second.bytes;
}

SimTime TrafficMatrix::LinkLatency(NodeId src, NodeId dst) const {
  auto it = links_.find({src.Encoded(), dst.Encoded()});
  return it == links_.end() ? 0 : it->second.charged_ns;
}

uint64_t TrafficMatrix::KindBytes(NodeKind src, NodeKind dst) const {
  uint64_t total = 0;
  for (const auto& [key, stats] : links_) {
    NodeId a = NodeId::Decode(key.first);
    NodeId b = NodeId::Decode(key.second);
    if (a.kind == src && b.kind == dst) total += stats.bytes;
  }
  return total;
}

double TrafficMatrix::PeakRate(NodeKind src, NodeKind dst) const {
  auto it = windows_.find(
      {static_cast<uint8_t>(src), static_cast<uint8_t>(dst)});
  if (it == windows_.end()) return 0.0;
  double peak = 0.0;
  for (double b : it->second) peak = std::max(peak, b);
  return peak * (static_cast<double>(kSecond) / window_ns_);
}

double TrafficMatrix::AverageRate(NodeKind src, NodeKind dst,
                                  SimTime horizon) const {
  if (horizon == 0) return 0.0;
  return KindBytes(src, dst) *
         (static_cast<double>(kSecond) / static_cast<double>(horizon));
}

Fabric::Fabric(const LatencyModel& latency, SimTime traffic_window_ns)
    : latency_(latency), traffic_(traffic_window_ns) {}

Fabric::~Fabric() {
  while (!queue_.empty()) {
    delete queue_.top();
    queue_.pop();
  }
}

NodeId Fabric::AddNode(NodeKind kind, uint64_t memory_budget_bytes) {
  uint16_t index = 0;
  for (const auto& [encoded, node] : nodes_) {
    NodeId id = NodeId::Decode(encoded);
    if (id.kind == kind) index = std::max<uint16_t>(index, id.index + 1);
  }
  NodeId id{kind, index};
  Node node;
  node.kind = kind;
  node.budget = memory_budget_bytes;
  nodes_.emplace(id.Encoded(), std::move(node));
  return id;
}

void Fabric::BindHandler(NodeId id, MessageHandler* handler) {
  Node* node = GetNode(id);
  assert(node != nullptr);
  node->handler = handler;
}

bool Fabric::IsUp(NodeId id) const {
  const Node* node = GetNode(id);
  return node != nullptr && node->up;
}

uint32_t Fabric::Incarnation(NodeId id) const {
  const Node* node = GetNode(id);
  return node == nullptr ? 0 : node->incarnation;
}

Fabric::Node* Fabric::GetNode(NodeId id) {
  auto it = nodes_.find(id.Encoded());
  return it == nodes_.end() ? nullptr : &it->second;
}

const Fabric::Node* Fabric::GetNode(NodeId id) const {
  auto it = nodes_.find(id.Encoded());
  return it == nodes_.end() ? nullptr : &it->second;
}

Status Fabric::RegisterRegion(NodeId owner, uint64_t length,
                              RemoteRegion* out) {
  Node* node = GetNode(owner);
  if (node == nullptr) return Status::InvalidArgument("unknown node");
  if (length == 0) return Status::InvalidLength("region length must be > 0");
  if (node->in_use + length > node->budget) {
    return Status::CapacityExceeded(owner.ToString());
  }
  RemoteRegion region;
  region.owner = owner;
  region.region_id = node->next_region_id++;
  region.base = node->next_base;
  region.length = length;
  node->next_base += length + 0x1000;  // bases never reused
  node->in_use += length;
  node->regions.emplace(region.region_id, std::string(length, '\0'));
  node->region_meta.emplace(region.region_id, region);
  *out = region;
  return Status::OK();
}

Status Fabric::FreeRegion(const RemoteRegion& region) {
  Node* node = GetNode(region.owner);
  if (node == nullptr) return Status::InvalidArgument("unknown node");
  auto it = node->regions.find(region.region_id);
  if (it == node->regions.end()) {
    return Status::InvalidArgument("unknown region");
  }
  node->in_use -= it->second.size();
  node->regions.erase(it);
  node->region_meta.erase(region.region_id);
  return Status::OK();
}

uint64_t Fabric::RegionBytesInUse(NodeId owner) const {
  const Node* node = GetNode(owner);
  return node == nullptr ? 0 : node->in_use;
}

uint64_t Fabric::MemoryBudget(NodeId owner) const {
  const Node* node = GetNode(owner);
  return node == nullptr ? 0 : node->budget;
}

Status Fabric::CheckRange(const Node* node, const RemoteRegion& region,
                          uint64_t offset, uint64_t len) const {
  if (node == nullptr) return Status::InvalidArgument("unknown node");
  auto it = node->regions.find(region.region_id);
  if (it == node->regions.end()) {
    return Status::InvalidArgument("unknown region");
  }
  if (offset + len > it->second.size()) {
    return Status::OutOfBounds("offset+len beyond region");
  }
  return Status::OK();
}

void Fabric::Enqueue(SimTime at, bool background, std::function<void()> fn,
                     const FabricEvent* record, const NodeId* guard) {
  Pending* p = new Pending();
  p->at = at;
  p->seq = next_seq_++;
  p->background = background;
  p->has_record = record != nullptr;
  if (record != nullptr) p->record = *record;
  p->guarded = guard != nullptr;
  if (guard != nullptr) {
    p->guard_node = *guard;
    p->guard_incarnation = Incarnation(*guard);
  }
  p->fn = std::move(fn);
  if (!background) foreground_pending_++;
  queue_.push(p);
}

SimTime Fabric::FifoDeliverAt(NodeId src, NodeId dst, SimTime latency) {
  // The ordered pair shares a serial link: transmission of a message starts
  // only after the previous one on the channel finished. This yields FIFO
  // delivery and makes charged latencies sum to the link's clock advance.
  SimTime& clock = channel_clock_[{src.Encoded(), dst.Encoded()}];
  SimTime start = std::max(now_, clock);
  SimTime at = start + latency;
  clock = at;
  return at;
}

SimTime Fabric::BulkDeliverAt(NodeId src, NodeId dst, SimTime latency) {
  SimTime& clock = bulk_channel_clock_[{src.Encoded(), dst.Encoded()}];
  SimTime start = std::max(now_, clock);
  SimTime at = start + latency;
  clock = at;
  return at;
}

void Fabric::OneSidedWrite(NodeId src, const RemoteRegion& region,
                           uint64_t offset, std::string data,
                           WriteCallback done) {
  SimTime lat = latency_.OneSidedWrite(data.size());
  SimTime at = now_ + lat;
  traffic_.Add(src, region.owner, data.size(), now_, at);
  traffic_.AddLatency(src, region.owner, lat);
  FabricEvent rec{at, src, region.owner, FabricEvent::Kind::kOneSidedWrite,
                  data.size()};
  NodeId guard = src;
  Enqueue(
      at, false,
      [this, src, region, offset, data = std::move(data),
       done = std::move(done)]() mutable {
        Node* owner = GetNode(region.owner);
        if (owner == nullptr || !owner->up) {
          if (done) done(Status::NodeDown(region.owner.ToString()));
          return;
        }
        Status s = CheckRange(owner, region, offset, data.size());
        if (s.ok()) {
          owner->regions[region.region_id].replace(offset, data.size(),
                                                   data);
        }
        if (done) done(s);
      },
      &rec, &guard);
}

void Fabric::OneSidedRead(NodeId src, const RemoteRegion& region,
                          uint64_t offset, uint64_t len, ReadCallback done) {
  SimTime lat = latency_.OneSidedRead(len);
  SimTime at = now_ + lat;
  traffic_.Add(region.owner, src, len, now_, at);
  traffic_.AddLatency(region.owner, src, lat);
  FabricEvent rec{at, src, region.owner, FabricEvent::Kind::kOneSidedRead,
                  len};
  NodeId guard = src;
  Enqueue(
      at, false,
      [this, region, offset, len, done = std::move(done)]() {
        Node* owner = GetNode(region.owner);
        if (owner == nullptr || !owner->up) {
          done(Status::NodeDown(region.owner.ToString()), std::string());
          return;
        }
        Status s = CheckRange(owner, region, offset, len);
        std::string out;
        if (s.ok()) {
          out = owner->regions[region.region_id].substr(offset, len);
        }
        done(s, std::move(out));
      },
      &rec, &guard);
}

void Fabric::OneSidedReadBatch(
    NodeId src, std::vector<ReadOp> ops,
    std::function<void(Status, std::vector<std::string>)> done) {
  if (ops.empty()) {
    done(Status::OK(), {});
    return;
  }
  struct BatchState {
    size_t remaining = 0;
    Status status;
    std::vector<std::string> results;
    std::function<void(Status, std::vector<std::string>)> done;
  };
  auto state = std::make_shared<BatchState>();
  state->results.resize(ops.size());
  state->done = std::move(done);

  const size_t cap = static_cast<size_t>(latency_.doorbell_batch_max);
  size_t groups = (ops.size() + cap - 1) / cap;
  state->remaining = groups;

  for (size_t g = 0; g < groups; g++) {
    size_t begin = g * cap;
    size_t end = std::min(ops.size(), begin + cap);
    uint64_t bytes = 0;
    for (size_t i = begin; i < end; i++) bytes += ops[i].len;
    // One doorbell per group: fixed cost paid once for the whole group.
    SimTime lat = Micros(latency_.one_sided_read_us +
                         latency_.per_byte_us * bytes);
    SimTime at = now_ + lat;
    NodeId owner = ops[begin].region.owner;
    traffic_.Add(owner, src, bytes, now_, at);
    traffic_.AddLatency(owner, src, lat);
    FabricEvent rec{at, src, owner, FabricEvent::Kind::kOneSidedRead, bytes};
    NodeId guard = src;
    std::vector<ReadOp> group(ops.begin() + begin, ops.begin() + end);
    Enqueue(
        at, false,
        [this, state, group = std::move(group), begin]() {
          for (size_t i = 0; i < group.size(); i++) {
            const ReadOp& op = group[i];
            Node* owner = GetNode(op.region.owner);
            if (owner == nullptr || !owner->up) {
              state->status = Status::NodeDown(op.region.owner.ToString());
              continue;
            }
            Status s = CheckRange(owner, op.region, op.offset, op.len);
            if (!s.ok()) {
              state->status = s;
              continue;
            }
            state->results[begin + i] =
                owner->regions[op.region.region_id].substr(op.offset, op.len);
          }
          if (--state->remaining == 0) {
            state->done(state->status, std::move(state->results));
          }
        },
        &rec, &guard);
  }
}

Status Fabric::LocalRead(const RemoteRegion& region, uint64_t offset,
                         uint64_t len, std::string* out) const {
  const Node* node = GetNode(region.owner);
  Status s = CheckRange(node, region, offset, len);
  if (!s.ok()) return s;
  *out = node->regions.at(region.region_id).substr(offset, len);
  return Status::OK();
}

void Fabric::Send(NodeId src, NodeId dst, uint16_t kind, std::string payload,
                  SendCost cost) {
  uint64_t len = payload.size();
  SimTime lat = (cost == SendCost::kSend) ? latency_.SendLatency(len)
                                          : latency_.RecvLatency(len);
  SimTime at = FifoDeliverAt(src, dst, lat);
  traffic_.Add(src, dst, len, now_, at);
  traffic_.AddLatency(src, dst, lat);
  FabricEvent rec{at, src, dst, FabricEvent::Kind::kMessage, len};
  uint32_t src_inc = Incarnation(src);
  Enqueue(
      at, false,
      [this, src, dst, kind, payload = std::move(payload), src_inc]() {
        Node* target = GetNode(dst);
        if (target != nullptr && target->up && target->handler != nullptr) {
          target->handler->OnMessage(src, kind, payload);
          return;
        }
        // Undeliverable: notify the sender if it is still the same
        // incarnation that issued the send.
        Node* sender = GetNode(src);
        if (sender != nullptr && sender->up &&
            sender->incarnation == src_inc && sender->handler != nullptr) {
          sender->handler->OnUndeliverable(dst, kind, payload);
        }
      },
      &rec, nullptr);
}

void Fabric::BulkTransfer(NodeId src, NodeId dst, uint64_t bytes,
                          std::function<void(Status)> done) {
  SimTime lat = latency_.DsTransfer(bytes);
  // Bulk streams contend for the link: serialized per ordered pair.
  SimTime at = BulkDeliverAt(src, dst, lat);
  traffic_.Add(src, dst, bytes, at - lat, at);
  traffic_.AddLatency(src, dst, lat);
  FabricEvent rec{at, src, dst, FabricEvent::Kind::kMessage, bytes};
  NodeId guard = src;
  Enqueue(
      at, false,
      [this, dst, done = std::move(done)]() {
        Node* target = GetNode(dst);
        if (target == nullptr || !target->up) {
          done(Status::NodeDown(dst.ToString()));
          return;
        }
        done(Status::OK());
      },
      &rec, &guard);
}

void Fabric::BulkSend(NodeId src, NodeId dst, uint16_t kind,
                      std::string payload) {
  uint64_t len = payload.size();
  SimTime lat = Micros(latency_.send_us) + latency_.DsTransfer(len);
  SimTime at = BulkDeliverAt(src, dst, lat);
  traffic_.Add(src, dst, len, at - lat, at);
  traffic_.AddLatency(src, dst, lat);
  FabricEvent rec{at, src, dst, FabricEvent::Kind::kMessage, len};
  uint32_t src_inc = Incarnation(src);
  Enqueue(
      at, false,
      [this, src, dst, kind, payload = std::move(payload), src_inc]() {
        // A bulk stream whose sender died mid-transfer arrives incomplete
        // and is discarded: partial files never become visible.
        Node* sender = GetNode(src);
        bool sender_alive = sender != nullptr && sender->up &&
                            sender->incarnation == src_inc;
        if (!sender_alive) return;
        Node* target = GetNode(dst);
        if (target != nullptr && target->up && target->handler != nullptr) {
          target->handler->OnMessage(src, kind, payload);
          return;
        }
        if (sender->handler != nullptr) {
          sender->handler->OnUndeliverable(dst, kind, payload);
        }
      },
      &rec, nullptr);
}

void Fabric::ScheduleFor(NodeId node, SimTime delay, std::function<void()> fn,
                         bool background) {
  Enqueue(now_ + delay, background, std::move(fn), nullptr, &node);
}

void Fabric::Schedule(SimTime delay, std::function<void()> fn,
                      bool background) {
  Enqueue(now_ + delay, background, std::move(fn), nullptr, nullptr);
}

void Fabric::CrashNode(NodeId id) {
  Node* node = GetNode(id);
  if (node == nullptr || !node->up) return;
  node->up = false;
}

void Fabric::RestartNode(NodeId id) {
  Node* node = GetNode(id);
  if (node == nullptr || node->up) return;
  node->up = true;
  node->incarnation++;
  if (node->handler != nullptr) node->handler->OnRestart();
}

bool Fabric::Idle() const { return foreground_pending_ == 0; }

bool Fabric::AdvanceClock(std::vector<FabricEvent>* batch) {
  if (foreground_pending_ == 0) return false;  // idle marker

  // Skip over background-only prefixes without declaring idle.
  assert(!queue_.empty());
  SimTime batch_time = queue_.top()->at;
  assert(batch_time >= now_);
  now_ = batch_time;

  while (!queue_.empty() && queue_.top()->at == batch_time) {
    Pending* p = queue_.top();
    queue_.pop();
    if (!p->background) foreground_pending_--;
    bool alive = true;
    if (p->guarded) {
      const Node* node = GetNode(p->guard_node);
      alive = node != nullptr && node->up &&
              node->incarnation == p->guard_incarnation;
    }
    if (alive) {
      if (p->has_record) {
        delivered_events_++;
        if (batch != nullptr) batch->push_back(p->record);
        if (trace_sink_) trace_sink_(p->record);
      }
      p->fn();
    }
    delete p;
  }
  return true;
}

void Fabric::RunUntilIdle() {
  while (AdvanceClock()) {
  }
}

void Fabric::RunUntil(SimTime t) {
  while (!queue_.empty() && queue_.top()->at <= t) {
    SimTime batch_time = queue_.top()->at;
    now_ = batch_time;
    while (!queue_.empty() && queue_.top()->at == batch_time) {
      Pending* p = queue_.top();
      queue_.pop();
      if (!p->background) foreground_pending_--;
      bool alive = true;
      if (p->guarded) {
        const Node* node = GetNode(p->guard_node);
        alive = node != nullptr && node->up &&
                node->incarnation == p->guard_incarnation;
      }
      if (alive) {
        if (p->has_record) {
          delivered_events_++;
          if (trace_sink_) trace_sink_(p->record);
        }
        p->fn();
      }
      delete p;
    }
  }
  if (t > now_) now_ = t;
}

void Fabric::RunWhile(const std::function<bool()>& keep_going) {
  while (keep_going() && AdvanceClock()) {
  }
}

std::string FormatTraceLine(const FabricEvent& ev) {
  const char* kind = "msg";
  switch (ev.kind) {
    case FabricEvent::Kind::kOneSidedRead: kind = "rread"; break;
    case FabricEvent::Kind::kOneSidedWrite: kind = "rwrite"; break;
    case FabricEvent::Kind::kMessage: kind = "msg"; break;
  }
  char buf[128];
  std::snprintf(buf, sizeof(buf), "t=%.3f src=%s dst=%s kind=%s len=%llu",
                ev.deliver_at / 1000.0, ev.src.ToString().c_str(),
                ev.dst.ToString().c_str(), kind,
                static_cast<unsigned long long>(ev.payload_len));
  return buf;
}

}  // namespace farlsm
