#pragma once

#include <atomic>
#include <cstdint>
#include <deque>
#include <memory>
#include <mutex>
#include <string>
#include <unordered_map>
#include <vector>

#include "batchdb/database.hpp"
#include "batchdb/txn.hpp"
#include "batchdb/util.hpp"

namespace batchdb {

enum class Protocol : uint8_t { NoWait, WaitDie, LockOrdered, WaitsForGraph };

const char* protocol_name(Protocol p);
bool parse_protocol(const std::string& s, Protocol* out);

enum class LockMode : uint8_t { Shared, Exclusive };

// Buffered writes: every executor stages full-payload copies and applies
// them only at commit, so any abort (concurrency or logical) is a discard.
class WriteSet {
 public:
  uint8_t* stage(Record* rec) {
    size_t off = arena_.size();
    arena_.insert(arena_.end(), rec->payload(),
                  rec->payload() + rec->payload_size());
    entries_.push_back({rec, off});
    return arena_.data() + off;
  }

  void apply() {
    for (const Entry& e : entries_)
      std::memcpy(e.rec->payload(), arena_.data() + e.off,
                  e.rec->payload_size());
  }

  void clear() {
    entries_.clear();
    arena_.clear();
  }

 private:
  struct Entry {
    Record* rec;
    size_t off;
  };
  std::vector<Entry> entries_;
  std::vector<uint8_t> arena_;
};

// Optional runtime invariant counters, shared across workers of one run.
struct InvariantCounters {
  std::atomic<uint64_t> lock_seen_in_cfree{0};
  std::atomic<uint64_t> phase_overlap{0};
  std::atomic<uint64_t> worklist_mismatch{0};
  std::atomic<uint64_t> unordered_acquisition{0};
  std::atomic<uint64_t> waitdie_queue_violations{0};
  uint64_t total() const {
    return lock_seen_in_cfree.load() + phase_overlap.load() +
           worklist_mismatch.load() + unordered_acquisition.load() +
           waitdie_queue_violations.load();
  }
};

// Per-record protocol state beyond the lock word (WaitDie queues, owner
// bookkeeping for deadlock detection). Allocated lazily on first contention
// path and keyed by record address; entries live for the process lifetime.
class LockSideTable {
 public:
  struct Waiter {
    uint64_t ts;
    LockMode mode;
    std::atomic<bool> granted{false};
  };

  struct Entry {
    std::mutex mu;
    std::vector<uint64_t> owner_ts;       // WaitDie
    std::vector<uint32_t> owner_threads;  // WaitsForGraph
    std::deque<Waiter*> queue;            // WaitDie
  };

  Entry& get_or_create(Record* rec);

 private:
  static constexpr size_t kShards = 64;
  struct Shard {
    std::mutex mu;
    std::unordered_map<Record*, std::unique_ptr<Entry>> map;
  };
  Shard shards_[kShards];
};

// Thread-local partitions of the waits-for graph: partition t holds the
// outgoing wait edges of the transaction currently running on thread t.
class WaitsForGraphState {
 public:
  explicit WaitsForGraphState(unsigned threads) : parts_(threads) {}

  struct Partition {
    std::mutex mu;
    std::vector<uint32_t> waits_for;  // thread ids
  };

  Partition& partition(unsigned tid) { return parts_[tid]; }
  unsigned size() const { return static_cast<unsigned>(parts_.size()); }

  // Installs `owners` as tid's wait edges and reports whether that closes a
  // cycle. All partition locks are taken in thread-id order.
  bool would_deadlock(unsigned tid, const std::vector<uint32_t>& owners);

  void clear(unsigned tid);

 private:
  std::vector<Partition> parts_;
};

// Per-attempt execution context shared by the protocol executors. When
// commit_seq is set, each commit takes a sequence number while its locks
// are still held, so the sequence is a serial witness order.
struct ExecEnv {
  Database* db;
  WriteSet* ws;
  InvariantCounters* inv = nullptr;  // null = checks off
  std::atomic<uint64_t>* commit_seq = nullptr;
  uint64_t last_commit_seq = 0;
};

// One attempt each; CCAborted means all locks were released and the caller
// may retry.
TxnStatus execute_nowait(const Transaction& t, ExecEnv& env);
TxnStatus execute_lockordered(const Transaction& t, ExecEnv& env);
TxnStatus execute_waitdie(const Transaction& t, uint64_t ts, ExecEnv& env,
                          LockSideTable& side);
TxnStatus execute_waitsforgraph(const Transaction& t, unsigned tid,
                                ExecEnv& env, LockSideTable& side,
                                WaitsForGraphState& wfg);

// Whole-batch runner: workers pull transactions from a shared queue and
// retry each until commit or logical abort. Returns commit order.
struct CcRunStats {
  uint64_t committed = 0;
  uint64_t cc_aborts = 0;
  uint64_t logical_aborts = 0;
  uint64_t exec_us = 0;
  uint64_t invariant_violations = 0;
};

struct CcRunResult {
  CcRunStats stats;
  std::vector<uint64_t> witness;  // committed txn ids in commit order
};

CcRunResult run_cc_batch(Database& db, const Batch& b, Protocol proto,
                         WorkerPool& pool, bool check_invariants = false,
                         uint64_t max_retries = 1000000);

// Sharded timestamp source: thread id in the low bits of a per-thread
// counter, unique across attempts.
class TimestampGen {
 public:
  explicit TimestampGen(unsigned threads) : counters_(threads) {}
  uint64_t next(unsigned tid) {
    return (++counters_[tid].value << 8) | (tid & 0xFF);
  }

 private:
  struct alignas(64) Counter {
    uint64_t value = 0;
  };
  std::vector<Counter> counters_;
};

}  // namespace batchdb
