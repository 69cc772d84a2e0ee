#include "batchdb/protocols.hpp"
#include <thread>

#include <algorithm>
#include <cassert>
#include <stdexcept>

namespace batchdb {

const char* protocol_name(Protocol p) {
  switch (p) {
    case Protocol::NoWait: return "nowait";
    case Protocol::WaitDie: return "waitdie";
    case Protocol::LockOrdered: return "lockordered";
    case Protocol::WaitsForGraph: return "waitsforgraph";
  }
  return "?";
}

bool parse_protocol(const std::string& s, Protocol* out) {
  if (s == "nowait") *out = Protocol::NoWait;
  else if (s == "waitdie") *out = Protocol::WaitDie;
  else if (s == "lockordered") *out = Protocol::LockOrdered;
  else if (s == "waitsforgraph") *out = Protocol::WaitsForGraph;
  else return false;
  return true;
}

LockSideTable::Entry& LockSideTable::get_or_create(Record* rec) {
  Shard& sh = shards_[splitmix64(reinterpret_cast<uintptr_t>(rec)) % kShards];
  std::lock_guard lk(sh.mu);
  auto& slot = sh.map[rec];
  if (!slot) slot = std::make_unique<Entry>();
  return *slot;
}

bool WaitsForGraphState::would_deadlock(unsigned tid,
                                        const std::vector<uint32_t>& owners) {
  const unsigned n = size();
  for (unsigned t = 0; t < n; ++t) parts_[t].mu.lock();
  parts_[tid].waits_for = owners;

  // DFS over thread wait edges looking for a path back to tid.
  bool cycle = false;
  std::vector<bool> visited(n, false);
  std::vector<uint32_t> stack(owners.begin(), owners.end());
  while (!stack.empty()) {
    uint32_t t = stack.back();
    stack.pop_back();
    if (t == tid) {
      cycle = true;
      break;
    }
    if (t >= n || visited[t]) continue;
    visited[t] = true;
    for (uint32_t nb : parts_[t].waits_for) stack.push_back(nb);
  }
  if (cycle) parts_[tid].waits_for.clear();

  for (unsigned t = n; t-- > 0;) parts_[t].mu.unlock();
  return cycle;
}

void WaitsForGraphState::clear(unsigned tid) {
  std::lock_guard lk(parts_[tid].mu);
  parts_[tid].waits_for.clear();
}

namespace {

struct HeldLock {
  Record* rec;
  LockMode mode;
};

void release_plain(std::vector<HeldLock>& held) {
  for (const HeldLock& h : held) {
    if (h.mode == LockMode::Shared)
      h.rec->unlock_shared();
    else
      h.rec->unlock_exclusive();
  }
  held.clear();
}

// Commit point: apply buffered writes and take the commit sequence number
// while every lock is still held, so commit order is a serial witness.
void commit_locked(ExecEnv& env) {
  env.ws->apply();
  if (env.commit_seq != nullptr)
    env.last_commit_seq = env.commit_seq->fetch_add(1, std::memory_order_relaxed);
}

// --- NoWait ---

struct NoWaitCtx {
  ExecEnv& env;
  std::vector<HeldLock>& held;

  Record* acquire(const Key& k, LockMode mode) {
    Record& r = env.db->get(k);
    bool ok = (mode == LockMode::Shared) ? r.try_lock_shared()
                                         : r.try_lock_exclusive();
    if (!ok) return nullptr;  // abort immediately, no waiting
    held.push_back({&r, mode});
    return &r;
  }

  const uint8_t* read(size_t, const Key& k) {
    Record* r = acquire(k, LockMode::Shared);
    return r ? r->payload() : nullptr;
  }
  uint8_t* write(size_t, const Key& k) {
    Record* r = acquire(k, LockMode::Exclusive);
    return r ? env.ws->stage(r) : nullptr;
  }
};

// --- LockOrdered ---

struct PreLockedCtx {
  ExecEnv& env;
  const uint8_t* read(size_t, const Key& k) { return env.db->get(k).payload(); }
  uint8_t* write(size_t, const Key& k) {
    return env.ws->stage(&env.db->get(k));
  }
};

// --- WaitDie ---

struct WaitDieCtx {
  ExecEnv& env;
  LockSideTable& side;
  uint64_t ts;
  std::vector<HeldLock>& held;

  static uint64_t min_ts(const LockSideTable::Entry& e) {
    uint64_t m = UINT64_MAX;
    for (uint64_t t : e.owner_ts) m = std::min(m, t);
    for (const auto* w : e.queue) m = std::min(m, w->ts);
    return m;
  }

  static void refresh_owner_hint(Record* r, const LockSideTable::Entry& e) {
    uint64_t m = UINT64_MAX;
    for (uint64_t t : e.owner_ts) m = std::min(m, t);
    r->owner_ts().store(m == UINT64_MAX ? 0 : m, std::memory_order_relaxed);
  }

  bool acquire(Record* r, LockMode mode) {
    LockSideTable::Entry& e = side.get_or_create(r);
    std::unique_lock lk(e.mu);
    uint64_t w = r->lock_word_raw();
    bool compatible = (mode == LockMode::Shared) ? !(w & kLockExclusive)
                                                 : (w == 0);
    if (compatible && e.queue.empty()) {
      bool ok = (mode == LockMode::Shared) ? r->try_lock_shared()
                                           : r->try_lock_exclusive();
      assert(ok);
      (void)ok;
      e.owner_ts.push_back(ts);
      refresh_owner_hint(r, e);
      held.push_back({r, mode});
      return true;
    }
    // Wait only when strictly older than all owners and queued waiters;
    // the queue stays strictly decreasing in timestamp from the head.
    if (ts < min_ts(e)) {
      if (env.inv != nullptr && !e.queue.empty() && ts >= e.queue.back()->ts)
        env.inv->waitdie_queue_violations.fetch_add(1);
      LockSideTable::Waiter waiter{ts, mode};
      e.queue.push_back(&waiter);
      lk.unlock();
      Backoff bo;
      while (!waiter.granted.load(std::memory_order_acquire)) bo.pause();
      held.push_back({r, mode});
      return true;
    }
    return false;  // die
  }

  void release_all() {
    for (const HeldLock& h : held) {
      LockSideTable::Entry& e = side.get_or_create(h.rec);
      std::lock_guard lk(e.mu);
      auto it = std::find(e.owner_ts.begin(), e.owner_ts.end(), ts);
      if (it != e.owner_ts.end()) e.owner_ts.erase(it);
      if (h.mode == LockMode::Shared)
        h.rec->unlock_shared();
      else
        h.rec->unlock_exclusive();
      // Grant the maximal compatible prefix.
      while (!e.queue.empty()) {
        LockSideTable::Waiter* head = e.queue.front();
        uint64_t w = h.rec->lock_word_raw();
        if (head->mode == LockMode::Shared) {
          if (w & kLockExclusive) break;
          h.rec->try_lock_shared();
        } else {
          if (w != 0) break;
          h.rec->try_lock_exclusive();
        }
        e.owner_ts.push_back(head->ts);
        e.queue.pop_front();
        head->granted.store(true, std::memory_order_release);
      }
      refresh_owner_hint(h.rec, e);
    }
    held.clear();
  }

  const uint8_t* read(size_t, const Key& k) {
    Record& r = env.db->get(k);
    return acquire(&r, LockMode::Shared) ? r.payload() : nullptr;
  }
  uint8_t* write(size_t, const Key& k) {
    Record& r = env.db->get(k);
    return acquire(&r, LockMode::Exclusive) ? env.ws->stage(&r) : nullptr;
  }
};

// --- WaitsForGraph ---

struct WfgCtx {
  ExecEnv& env;
  LockSideTable& side;
  WaitsForGraphState& wfg;
  unsigned tid;
  std::vector<HeldLock>& held;

  bool acquire(Record* r, LockMode mode) {
    LockSideTable::Entry& e = side.get_or_create(r);
    Backoff bo;
    std::vector<uint32_t> owners;
    for (;;) {
      {
        std::lock_guard lk(e.mu);
        uint64_t w = r->lock_word_raw();
        bool compatible = (mode == LockMode::Shared) ? !(w & kLockExclusive)
                                                     : (w == 0);
        if (compatible) {
          if (mode == LockMode::Shared)
            r->try_lock_shared();
          else
            r->try_lock_exclusive();
          e.owner_threads.push_back(tid);
          held.push_back({r, mode});
          wfg.clear(tid);
          return true;
        }
        owners = e.owner_threads;
      }
      if (wfg.would_deadlock(tid, owners)) return false;  // abort self
      for (int i = 0; i < 64; ++i) bo.pause();
    }
  }

  void release_all() {
    for (const HeldLock& h : held) {
      LockSideTable::Entry& e = side.get_or_create(h.rec);
      std::lock_guard lk(e.mu);
      auto it = std::find(e.owner_threads.begin(), e.owner_threads.end(), tid);
      if (it != e.owner_threads.end()) e.owner_threads.erase(it);
      if (h.mode == LockMode::Shared)
        h.rec->unlock_shared();
      else
        h.rec->unlock_exclusive();
    }
    held.clear();
  }

  const uint8_t* read(size_t, const Key& k) {
    Record& r = env.db->get(k);
    return acquire(&r, LockMode::Shared) ? r.payload() : nullptr;
  }
  uint8_t* write(size_t, const Key& k) {
    Record& r = env.db->get(k);
    return acquire(&r, LockMode::Exclusive) ? env.ws->stage(&r) : nullptr;
  }
};

thread_local std::vector<HeldLock> tl_held;

}  // namespace

TxnStatus execute_nowait(const Transaction& t, ExecEnv& env) {
  std::vector<HeldLock>& held = tl_held;
  held.clear();
  NoWaitCtx ctx{env, held};
  TxnStatus st = run_program(t, ctx);
  if (st == TxnStatus::Committed) commit_locked(env);
  release_plain(held);
  env.ws->clear();
  return st;
}

TxnStatus execute_lockordered(const Transaction& t, ExecEnv& env) {
  // Acquire every lock up front in global key order, then execute.
  std::vector<const Access*> order;
  order.reserve(t.accesses.size());
  for (const Access& a : t.accesses) order.push_back(&a);
  std::sort(order.begin(), order.end(),
            [](const Access* a, const Access* b) { return a->key < b->key; });

  std::vector<HeldLock>& held = tl_held;
  held.clear();
  const Key* prev = nullptr;
  for (const Access* a : order) {
    if (env.inv != nullptr && prev != nullptr && !(*prev < a->key))
      env.inv->unordered_acquisition.fetch_add(1);
    prev = &a->key;
    Record& r = env.db->get(a->key);
    Backoff bo;
    if (a->mode == AccessMode::Read) {
      while (!r.try_lock_shared()) bo.pause();
      held.push_back({&r, LockMode::Shared});
    } else {
      while (!r.try_lock_exclusive()) bo.pause();
      held.push_back({&r, LockMode::Exclusive});
    }
  }

  PreLockedCtx ctx{env};
  TxnStatus st = run_program(t, ctx);
  if (st == TxnStatus::Committed) commit_locked(env);
  release_plain(held);
  env.ws->clear();
  return st;
}

TxnStatus execute_waitdie(const Transaction& t, uint64_t ts, ExecEnv& env,
                          LockSideTable& side) {
  std::vector<HeldLock>& held = tl_held;
  held.clear();
  WaitDieCtx ctx{env, side, ts, held};
  TxnStatus st = run_program(t, ctx);
  if (st == TxnStatus::Committed) commit_locked(env);
  ctx.release_all();
  env.ws->clear();
  return st;
}

TxnStatus execute_waitsforgraph(const Transaction& t, unsigned tid,
                                ExecEnv& env, LockSideTable& side,
                                WaitsForGraphState& wfg) {
  std::vector<HeldLock>& held = tl_held;
  held.clear();
  WfgCtx ctx{env, side, wfg, tid, held};
  TxnStatus st = run_program(t, ctx);
  if (st == TxnStatus::Committed) commit_locked(env);
  ctx.release_all();
  env.ws->clear();
  return st;
}

CcRunResult run_cc_batch(Database& db, const Batch& b, Protocol proto,
                         WorkerPool& pool, bool check_invariants,
                         uint64_t max_retries) {
  const size_t n = b.size();
  CcRunResult res;

  LockSideTable side;
  WaitsForGraphState wfg(pool.size());
  TimestampGen tsgen(pool.size());
  InvariantCounters inv;

  std::atomic<size_t> next{0};
  std::atomic<uint64_t> commit_seq{0};
  std::atomic<uint64_t> cc_aborts{0}, committed{0}, logical{0};
  std::atomic<bool> retry_cap_hit{false};

  struct CommitRec {
    uint64_t seq;
    uint32_t idx;
  };
  std::vector<std::vector<CommitRec>> commits(pool.size());

  Timer wall;
  pool.run([&](unsigned tid) {
    WriteSet ws;
    ExecEnv env{&db, &ws, check_invariants ? &inv : nullptr, &commit_seq, 0};
    for (;;) {
      size_t i = next.fetch_add(1, std::memory_order_relaxed);
      if (i >= n || retry_cap_hit.load(std::memory_order_relaxed)) break;
      const Transaction& t = b.txns[i];
      uint64_t ts = tsgen.next(tid);  // kept across retries
      uint64_t retries = 0;
      TxnStatus st = TxnStatus::CCAborted;
      for (;;) {
        switch (proto) {
          case Protocol::NoWait: st = execute_nowait(t, env); break;
          case Protocol::WaitDie: st = execute_waitdie(t, ts, env, side); break;
          case Protocol::LockOrdered: st = execute_lockordered(t, env); break;
          case Protocol::WaitsForGraph:
            st = execute_waitsforgraph(t, tid, env, side, wfg);
            break;
        }
        if (st != TxnStatus::CCAborted) break;
        cc_aborts.fetch_add(1, std::memory_order_relaxed);
        if (++retries >= max_retries) {
          retry_cap_hit.store(true);
          break;
        }
        // Immediate retry; once a conflict persists this long the holder is
        // likely descheduled (threads > cores), so give it the cpu.
        if (retries > 64) std::this_thread::yield();
      }
      if (st == TxnStatus::Committed) {
        committed.fetch_add(1, std::memory_order_relaxed);
        commits[tid].push_back({env.last_commit_seq, static_cast<uint32_t>(i)});
      } else if (st == TxnStatus::LogicalAborted) {
        logical.fetch_add(1, std::memory_order_relaxed);
      }
    }
  });
  res.stats.exec_us = wall.elapsed_us();

  if (retry_cap_hit.load())
    throw std::runtime_error("cc retry cap exceeded (livelock?)");

  res.stats.committed = committed.load();
  res.stats.cc_aborts = cc_aborts.load();
  res.stats.logical_aborts = logical.load();
  res.stats.invariant_violations = check_invariants ? inv.total() : 0;

  std::vector<CommitRec> all;
  for (auto& v : commits) all.insert(all.end(), v.begin(), v.end());
  std::sort(all.begin(), all.end(),
            [](const CommitRec& a, const CommitRec& b) { return a.seq < b.seq; });
  res.witness.reserve(all.size());
  for (const CommitRec& c : all) res.witness.push_back(b.txns[c.idx].id);
  return res;
}

}  // namespace batchdb
