// Copyright (c) 2026 The farlsm Authors. All rights reserved.
// Use of this source code is governed by a BSD-style license that can be
// found in the LICENSE file.

#pragma once

#include <deque>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <vector>

#include "farlsm/dm_node.h"
#include "farlsm/env.h"
#include "farlsm/fabric.h"
#include "farlsm/flush_executor.h"
#include "farlsm/key_offset_cache.h"
#include "farlsm/manifest.h"
#include "farlsm/memtable.h"
#include "farlsm/scheduler.h"
#include "farlsm/wal.h"

namespace farlsm {

struct EngineConfig {
  uint64_t memtable_limit_bytes = 64ull << 20;
  uint32_t local_memtable_max = 2;   // active + local immutables
  uint32_t remote_memtable_max = 6;  // K
  uint8_t shard_bits = 0;            // k
  uint32_t l0_slowdown_trigger = 32;
  uint32_t l0_stop_trigger = 48;
  uint32_t l0_compaction_trigger = 4;
  uint32_t max_background_jobs = 4;
  uint64_t key_offset_cache_bytes = 64ull << 20;
  uint8_t freq_threshold = 4;
  uint32_t block_size = 4096;
  bool compression = false;
  uint64_t level_base_bytes = 0;  // 0 = 4x memtable limit
  uint32_t level_multiplier = 8;
  uint64_t transfer_chunk_bytes = 1 << 20;
  double wal_write_us = 2.0;
  double slowdown_delay_us = 1000.0;
  double package_build_us = 100.0;
  uint32_t flush_pool_size = 4;

  uint64_t LevelBaseBytes() const {
    return level_base_bytes != 0 ? level_base_bytes
                                 : 4 * memtable_limit_bytes;
  }
};

struct EngineServices {
  std::vector<NodeId> dm_nodes;
  std::vector<NodeId> ds_nodes;
  NodeId scheduler;
  bool has_scheduler = false;
};

enum class StallMode : uint8_t { kOpen, kSlowdown, kStopped };
enum class StallCause : uint8_t { kNone, kL0Files, kMemtableBackpressure };

struct StallStats {
  uint64_t episodes_l0 = 0;
  uint64_t episodes_memtable = 0;
  uint64_t slowdown_events = 0;
  SimTime stalled_ns = 0;
};

enum class EnginePhase : uint8_t {
  kOffloadTransfer,
  kDelegation,
  kFinalize,
};

// Flush latency breakdown accumulators (packaging, fetch, flush, install).
struct FlushBreakdown {
  uint64_t jobs = 0;
  SimTime package_ns = 0;
  SimTime fetch_ns = 0;
  SimTime flush_ns = 0;
  SimTime install_ns = 0;
};

// The compute-node LSM engine: WAL, memtable lifecycle with asynchronous
// shard offload to DM, shard-aggregated flush triggering through the
// scheduler, stall control, Manifest, local leveled compaction, and the
// cache-enhanced delegated read path.
class Engine : public MessageHandler {
 public:
  Engine(Fabric* fabric, NodeId self, const EngineConfig& config,
         EngineServices services, Env* env);
  ~Engine();

  Status Open();  // recovers from WAL + Manifest when present

  using WriteCallback = std::function<void(Status, SequenceNumber)>;
  using GetCallback = std::function<void(Status, std::string)>;
  struct ScanResult {
    std::vector<std::pair<std::string, std::string>> entries;
  };
  using ScanCallback = std::function<void(Status, ScanResult)>;

  void WriteAsync(const Slice& key, const Slice& value, bool tombstone,
                  WriteCallback done);
  void GetAsync(const Slice& key, std::optional<SequenceNumber> snapshot,
                GetCallback done);
  void ScanAsync(const Slice& start, const Slice& end_exclusive,
                 std::optional<SequenceNumber> snapshot, size_t limit,
                 ScanCallback done);

  // Forces every buffered byte through flush (all shards, all tiers); done
  // fires once the Manifest covers them.
  void FlushAllAsync(std::function<void(Status)> done);

  // Synchronous wrappers driving the event loop; controlling thread only.
  Status Put(const Slice& key, const Slice& value);
  Status Delete(const Slice& key);
  Status Get(const Slice& key, std::string* value);
  Status FlushAll();

  // MessageHandler:
  void OnMessage(NodeId src, uint16_t kind, const std::string& payload) override;
  void OnUndeliverable(NodeId dst, uint16_t kind,
                       const std::string& payload) override;
  void OnRestart() override;

  // Fault injection: return kAbort/kCrash at a phase to fail it.
  using EngineFaultHook =
      std::function<FaultAction(EnginePhase, uint64_t /*detail*/)>;
  void SetFaultHook(EngineFaultHook hook) { fault_hook_ = std::move(hook); }
  FlushExecutor* executor() { return executor_.get(); }

  // Introspection.
  SequenceNumber last_sequence() const { return last_seq_; }
  const StallStats& stall_stats() const { return stall_stats_; }
  const VersionState& versions() const { return versions_; }
  const FlushBreakdown& flush_breakdown() const { return breakdown_; }
  StallMode stall_mode() const { return stall_mode_; }
  size_t local_immutable_count() const { return local_immutables_.size(); }
  size_t remote_count() const { return remote_order_.size(); }
  KeyOffsetCache& key_offset_cache() { return *cache_; }
  uint64_t delegations_sent() const { return delegations_sent_; }
  uint64_t cache_hit_reads() const { return cache_hit_reads_; }
  uint64_t bloom_negative_skips() const { return bloom_negative_skips_; }
  const std::map<uint32_t, uint64_t>& bytes_written_by_level() const {
    return bytes_written_by_level_;
  }
  uint64_t compactions_run() const { return compactions_run_; }
  uint64_t l0_parallel_batches() const { return l0_parallel_batches_; }
  NodeId id() const { return self_; }
  const EngineConfig& config() const { return config_; }
  bool idle() const;

  // Runs one L0->L1 compaction round if triggered (also invoked from the
  // background scheduler). Exposed for tests.
  void MaybeScheduleCompaction();

 private:
  struct RemoteTable {
    uint64_t memtable_id = 0;
    TransferRecord record;
    RemoteRegion kv_region;
    RemoteRegion index_region;
    std::vector<std::string> blooms;       // per shard
    std::vector<uint64_t> shard_sizes;     // bytes per shard block
    std::vector<bool> shard_flush_pending; // job in flight
    std::vector<bool> shard_flushed;       // durable in DS + manifest
    SequenceNumber min_seq = 0;
    SequenceNumber max_seq = 0;

    bool FullyFlushed() const {
      for (size_t s = 0; s < shard_sizes.size(); s++) {
        if (shard_sizes[s] > 0 && !shard_flushed[s]) return false;
      }
      return true;
    }
  };

  struct OffloadJob {
    std::shared_ptr<Memtable> table;
    RemoteRegion kv_region;
    RemoteRegion index_region;
    uint64_t chunks_in_flight = 0;
    std::vector<uint64_t> streamed;  // bytes already written per shard
    bool sealed_parts_sent = false;
    bool commit_sent = false;
    bool failed = false;
  };

  struct PendingFlushJob {
    uint64_t job_id = 0;
    uint32_t shard = 0;
    std::vector<uint64_t> memtable_ids;
    SimTime prepare_sent_at = 0;
    SimTime package_build_ns = 0;
  };

  struct Waiter {
    std::string key;
    std::string value;
    bool tombstone;
    WriteCallback done;
  };

  // --- write path ---
  void HandleWrite(Waiter waiter);
  void CommitWrite(Waiter waiter);
  Status RotateMemtable();
  void UpdateStallState();
  void EnterStall(StallCause cause);
  void MaybeUnstall();

  // --- offload pipeline ---
  void SetupStagingRegions(const std::shared_ptr<Memtable>& table);
  void StreamChunks(uint64_t memtable_id);
  void OnMemtableSealed(const std::shared_ptr<Memtable>& table);
  void FinishTransfer(uint64_t memtable_id);
  void MaybeSendOffloadCommit();
  void HandleOffloadAck(const OffloadAck& ack);
  void HandleOffloadFail(uint64_t memtable_id);
  void PromoteHotKeys(const Memtable& table, const TransferRecord& record);
  void AbandonOffload(uint64_t memtable_id, bool flush_locally);

  // --- flush triggering / protocol (owner side) ---
  void MaybeTriggerShardFlush();
  void TriggerFlushOfShard(uint32_t shard, bool forced);
  Status BuildPackage(uint32_t shard, const std::vector<uint64_t>& ids,
                      FlushMetadataPackage* out);
  void SendPrepare(PendingFlushJob job, const FlushMetadataPackage& package);
  void HandleCommitFromScheduler(const ControlMessage& msg);
  void FinalizeJob(const PendingFlushJob& job, const CommitPayload& payload,
                   uint64_t job_id);
  void HandleRePrepare(uint64_t job_id);
  void CancelJobsTouchingDm(NodeId dm);

  // --- local fallback flush (no DM / capacity exhausted) ---
  void ScheduleLocalFlush(const std::shared_ptr<Memtable>& table);

  // --- DM failure handling ---
  void HandleDmLoss(NodeId dm);
  void RebuildFromWal(uint64_t memtable_id);

  // --- read path ---
  struct GetOp;
  void GetStageLocal(std::shared_ptr<GetOp> op);
  void GetStageCache(std::shared_ptr<GetOp> op);
  void GetStageDelegation(std::shared_ptr<GetOp> op);
  void GetStageDs(std::shared_ptr<GetOp> op, size_t candidate_index);
  void FinishGet(std::shared_ptr<GetOp> op, Status status, std::string value);
  std::vector<const RemoteTable*> RemoteNewestFirst() const;

  struct TableHandle;  // cached SST tail
  void WithTableHandle(uint64_t file_number,
                       std::function<void(Status, TableHandle*)> fn);
  void FetchBlock(uint64_t file_number, SstReader::BlockHandle handle,
                  std::function<void(Status, std::string)> fn);
  NodeId DsNodeFor(uint64_t file_number) const;

  // --- scan ---
  struct ScanOp;
  void ScanGatherRemote(std::shared_ptr<ScanOp> op, size_t remote_index);
  void ScanGatherDs(std::shared_ptr<ScanOp> op, size_t file_index);
  void FinishScan(std::shared_ptr<ScanOp> op);

  // --- compaction ---
  struct CompactionTask {
    uint32_t level = 0;
    std::vector<SstMeta> inputs_upper;
    std::vector<SstMeta> inputs_lower;
    bool bottommost = false;
  };
  std::vector<CompactionTask> PickL0Compactions();
  std::optional<CompactionTask> PickLevelCompaction();
  void RunCompaction(CompactionTask task);
  void InstallCompaction(const CompactionTask& task,
                         std::vector<SstMeta> outputs,
                         std::vector<std::string> output_files);

  // --- manifest / files ---
  Status InstallEdit(ManifestEdit edit);
  uint64_t NewFileSeed() { return versions_.next_file_seed++; }

  // --- recovery ---
  Status RecoverFromStorage();

  // --- plumbing ---
  void SendHeartbeat();
  void StartHeartbeats();
  uint64_t MakeJobId() { return ((uint64_t)self_.index << 48) |
                                ((uint64_t)incarnation_ << 32) |
                                (job_counter_++); }
  FaultAction Fault(EnginePhase phase, uint64_t detail);

  Fabric* fabric_;
  NodeId self_;
  EngineConfig config_;
  EngineServices services_;
  Env* env_;
  uint32_t incarnation_ = 1;

  AddressSpace address_space_;
  SequenceNumber last_seq_ = 0;
  uint64_t next_memtable_id_ = 1;
  uint64_t job_counter_ = 1;

  std::shared_ptr<Memtable> active_;
  std::unique_ptr<WalWriter> wal_;
  std::deque<std::shared_ptr<Memtable>> local_immutables_;
  std::map<uint64_t, OffloadJob> offloading_;
  std::deque<uint64_t> commit_ready_;  // transfers done, awaiting K slot

  std::map<uint64_t, RemoteTable> remote_;
  std::vector<uint64_t> remote_order_;  // newest first

  VersionState versions_;
  std::unique_ptr<ManifestWriter> manifest_;
  std::unique_ptr<KeyOffsetCache> cache_;
  std::unique_ptr<FlushExecutor> executor_;

  std::map<uint64_t, PendingFlushJob> pending_jobs_;
  std::set<uint64_t> canceled_jobs_;
  std::set<uint64_t> finalized_jobs_;

  // Stall machinery.
  StallMode stall_mode_ = StallMode::kOpen;
  StallCause stall_cause_ = StallCause::kNone;
  SimTime stall_entered_at_ = 0;
  StallStats stall_stats_;
  std::deque<Waiter> stall_waiters_;

  // Background accounting.
  uint32_t background_jobs_ = 0;
  uint64_t compactions_run_ = 0;
  uint64_t l0_parallel_batches_ = 0;
  std::map<uint32_t, uint64_t> bytes_written_by_level_;
  FlushBreakdown breakdown_;

  // Read-path plumbing.
  std::map<uint64_t, std::unique_ptr<TableHandle>> table_cache_;
  std::map<uint64_t, std::function<void(Status, const DsReply&)>> ds_waiters_;
  std::map<uint64_t, std::function<void(const DelegationReply&)>>
      delegation_waiters_;
  std::map<uint64_t, std::function<void(const DelegationScanReply&)>>
      scan_waiters_;
  uint64_t next_cookie_ = 1;
  uint64_t delegations_sent_ = 0;
  uint64_t cache_hit_reads_ = 0;
  uint64_t bloom_negative_skips_ = 0;

  std::vector<std::function<void(Status)>> flush_all_waiters_;
  EngineFaultHook fault_hook_;
  bool open_ = false;
};

}  // namespace farlsm
