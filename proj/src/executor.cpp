#include "batchdb/executor.hpp"

#include <algorithm>
#include <atomic>
#include <barrier>
#include <stdexcept>

#include <nlohmann/json.hpp>

namespace batchdb {

std::string PhaseMetrics::to_json() const {
  nlohmann::json j{{"epoch", epoch},
                   {"t_pre_us", pre_us},
                   {"t_spot_us", spot_us},
                   {"t_alloc_us", alloc_us},
                   {"t_merge_us", merge_us},
                   {"t_cfree_us", cfree_us},
                   {"t_residual_us", residual_us},
                   {"wall_us", wall_us},
                   {"committed", committed},
                   {"cc_aborts", cc_aborts},
                   {"logical_aborts", logical_aborts},
                   {"clusters", cluster_count},
                   {"max_cluster", max_cluster_size},
                   {"residual_size", residual_size},
                   {"invariant_violations", invariant_violations}};
  return j.dump();
}

namespace {

// Conflict-free phase context: direct reads, buffered writes, no locking.
// Executes through the analysis-resolved record pointers when available.
// With checks on, counts any lock word observed non-free (there must be no
// lock traffic at all in this phase).
struct RawCtx {
  Database& db;
  WriteSet& ws;
  InvariantCounters* inv;
  Record* const* recs = nullptr;  // current txn's resolved records

  Record& touch(size_t i, const Key& k) {
    Record& r = recs != nullptr ? *recs[i] : db.get(k);
    if (inv != nullptr && !r.lock_free_now())
      inv->lock_seen_in_cfree.fetch_add(1);
    return r;
  }
  const uint8_t* read(size_t i, const Key& k) { return touch(i, k).payload(); }
  uint8_t* write(size_t i, const Key& k) { return ws.stage(&touch(i, k)); }
};

}  // namespace

BatchResult run_batch(Database& db, const Batch& b, const Clustering& c,
                      WorkerPool& pool, const ExecOptions& opts,
                      const AnalysisTimings* timings, const AccessGraph* graph) {
  if (graph != nullptr && (graph->batch != &b || graph->epoch != b.epoch))
    throw std::invalid_argument("access graph does not match the batch");
  const size_t n = b.size();
  const unsigned workers = pool.size();
  BatchResult res;
  PhaseMetrics& m = res.metrics;
  m.epoch = b.epoch;
  if (timings != nullptr) {
    m.pre_us = timings->pre_us;
    m.spot_us = timings->spot_us;
    m.alloc_us = timings->alloc_us;
    m.merge_us = timings->merge_us;
  }
  m.cluster_count = c.clusters.size();
  m.max_cluster_size = c.max_cluster_size();
  m.residual_size = c.residual.size();

  InvariantCounters inv;
  InvariantCounters* invp = opts.check_invariants ? &inv : nullptr;

  // Worklist of conflict-free clusters and the shared residual queue; both
  // dequeue via a single fetch_add, so every element is taken exactly once.
  std::atomic<size_t> cluster_next{0};
  std::atomic<size_t> residual_next{0};
  std::atomic<uint64_t> commit_seq{0};
  std::atomic<uint64_t> committed{0}, cc_aborts{0}, logical{0};
  std::atomic<bool> retry_cap_hit{false};
  std::atomic<uint64_t> drained_txns{0};
  std::atomic<uint64_t> last_cfree_end_us{0};
  std::atomic<uint64_t> first_residual_start_us{UINT64_MAX};

  std::vector<uint8_t> outcomes(n, 0xFF);
  struct CommitRec {
    uint64_t seq;
    uint32_t idx;
  };
  std::vector<std::vector<CommitRec>> commits(workers);

  Timer wall;
  uint64_t cfree_end_us = 0;
  std::barrier phase_barrier(static_cast<ptrdiff_t>(workers),
                             [&]() noexcept { cfree_end_us = wall.elapsed_us(); });

  pool.run([&](unsigned tid) {
    WriteSet ws;
    RawCtx raw{db, ws, invp};
    std::exception_ptr worker_err;

    // Conflict-free phase: drain whole clusters, execute serially in list
    // order, no concurrency control.
    try {
      for (;;) {
        size_t ci = cluster_next.fetch_add(1, std::memory_order_relaxed);
        if (ci >= c.clusters.size()) break;
        for (uint32_t idx : c.clusters[ci]) {
          const Transaction& t = b.txns[idx];
          raw.recs = graph != nullptr ? graph->txn_records(idx).data() : nullptr;
          TxnStatus st = run_program(t, raw);
          if (st == TxnStatus::Committed) {
            ws.apply();
            committed.fetch_add(1, std::memory_order_relaxed);
          } else {
            logical.fetch_add(1, std::memory_order_relaxed);
          }
          ws.clear();
          outcomes[idx] = static_cast<uint8_t>(st);
        }
        if (invp != nullptr)
          drained_txns.fetch_add(c.clusters[ci].size(),
                                 std::memory_order_relaxed);
      }
      if (invp != nullptr) {
        uint64_t now = wall.elapsed_us();
        uint64_t prev = last_cfree_end_us.load();
        while (prev < now &&
               !last_cfree_end_us.compare_exchange_weak(prev, now)) {
        }
      }
    } catch (...) {
      worker_err = std::current_exception();
    }

    // Residual transactions may conflict with any cluster, so every worker
    // waits for the conflict-free phase to drain completely. A failing
    // worker still arrives, so nobody blocks forever.
    phase_barrier.arrive_and_wait();

    ExecEnv env{&db, &ws, invp, &commit_seq, 0};
    try {
      for (; worker_err == nullptr;) {
        size_t ri = residual_next.fetch_add(1, std::memory_order_relaxed);
        if (ri >= c.residual.size() ||
            retry_cap_hit.load(std::memory_order_relaxed))
          break;
        if (invp != nullptr) {
          uint64_t now = wall.elapsed_us();
          uint64_t prev = first_residual_start_us.load();
          while (now < prev &&
                 !first_residual_start_us.compare_exchange_weak(prev, now)) {
          }
        }
        uint32_t idx = c.residual[ri];
        const Transaction& t = b.txns[idx];
        uint64_t retries = 0;
        TxnStatus st = TxnStatus::CCAborted;
        for (;;) {
          st = execute_nowait(t, env);
          if (st != TxnStatus::CCAborted) break;
          cc_aborts.fetch_add(1, std::memory_order_relaxed);
          if (++retries >= opts.max_retries) {
            retry_cap_hit.store(true);
            break;
          }
          // Persistent conflicts mean the holder is likely descheduled.
          if (retries > 64) std::this_thread::yield();
        }
        if (st == TxnStatus::Committed) {
          committed.fetch_add(1, std::memory_order_relaxed);
          commits[tid].push_back({env.last_commit_seq, idx});
        } else if (st == TxnStatus::LogicalAborted) {
          logical.fetch_add(1, std::memory_order_relaxed);
        }
        outcomes[idx] = static_cast<uint8_t>(st);
      }
    } catch (...) {
      worker_err = std::current_exception();
    }
    if (worker_err) std::rethrow_exception(worker_err);
  });
  m.wall_us = wall.elapsed_us();
  m.cfree_us = cfree_end_us;
  m.residual_us = m.wall_us - cfree_end_us;

  if (retry_cap_hit.load())
    throw std::runtime_error("residual retry cap exceeded (livelock?)");

  m.committed = committed.load();
  m.cc_aborts = cc_aborts.load();
  m.logical_aborts = logical.load();

  if (opts.check_invariants) {
    uint64_t expected = 0;
    for (const auto& cl : c.clusters) expected += cl.size();
    if (drained_txns.load() != expected) inv.worklist_mismatch.fetch_add(1);
    // Phase overlap: no residual may start before the last cluster txn ends.
    if (!c.residual.empty() && !c.clusters.empty() &&
        first_residual_start_us.load() < last_cfree_end_us.load())
      inv.phase_overlap.fetch_add(1);
    m.invariant_violations = inv.total();
  }

  if (opts.collect_witness) {
    for (const auto& cl : c.clusters)
      for (uint32_t idx : cl)
        if (outcomes[idx] == static_cast<uint8_t>(TxnStatus::Committed))
          res.witness.push_back(b.txns[idx].id);
    std::vector<CommitRec> all;
    for (auto& v : commits) all.insert(all.end(), v.begin(), v.end());
    std::sort(all.begin(), all.end(), [](const CommitRec& a, const CommitRec& b) {
      return a.seq < b.seq;
    });
    for (const CommitRec& cr : all) res.witness.push_back(b.txns[cr.idx].id);
  }
  return res;
}

std::vector<BatchResult> run_stream(Database& db,
                                    const std::vector<Batch>& batches,
                                    const PartitionConfig& cfg,
                                    WorkerPool& pool, const ExecOptions& opts,
                                    const MetricsCallback& on_metrics) {
  std::vector<BatchResult> out;
  out.reserve(batches.size());
  for (const Batch& b : batches) {
    PartitionResult pr = partition(db, b, cfg, pool);
    BatchResult r =
        run_batch(db, b, pr.clustering, pool, opts, &pr.timings, &pr.graph);
    if (on_metrics) on_metrics(r.metrics);
    out.push_back(std::move(r));
  }
  return out;
}

}  // namespace batchdb
