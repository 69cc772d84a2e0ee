#pragma once

#include <functional>
#include <string>
#include <vector>

#include "batchdb/partition.hpp"
#include "batchdb/protocols.hpp"
#include "batchdb/verify.hpp"

namespace batchdb {

struct ExecOptions {
  bool collect_witness = true;
  // Runtime-gated invariant instrumentation (lock words observed during the
  // conflict-free phase, phase overlap, worklist drain accounting).
  bool check_invariants = false;
  uint64_t max_retries = 1000000;
};

// Wall-time and outcome breakdown for one batch.
struct PhaseMetrics {
  uint32_t epoch = 0;
  uint64_t pre_us = 0;
  uint64_t spot_us = 0;
  uint64_t alloc_us = 0;
  uint64_t merge_us = 0;
  uint64_t cfree_us = 0;
  uint64_t residual_us = 0;
  uint64_t wall_us = 0;

  uint64_t committed = 0;
  uint64_t cc_aborts = 0;
  uint64_t logical_aborts = 0;

  uint64_t cluster_count = 0;
  uint64_t max_cluster_size = 0;
  uint64_t residual_size = 0;

  uint64_t invariant_violations = 0;

  uint64_t analysis_us() const {
    return pre_us + spot_us + alloc_us + merge_us;
  }
  std::string to_json() const;
};

struct BatchResult {
  PhaseMetrics metrics;
  WitnessSchedule witness;  // committed ids: clusters in list order, then
                            // residual commit order
};

// Executes a clustered batch: conflict-free clusters drained from a shared
// worklist with no concurrency control, a barrier, then the residual under
// NoWait 2PL with retry until commit or logical abort. Analysis timings are
// merged in from `timings` when given. When the analysis graph is passed,
// the conflict-free phase executes through its resolved record pointers
// rather than re-running index lookups.
BatchResult run_batch(Database& db, const Batch& b, const Clustering& c,
                      WorkerPool& pool, const ExecOptions& opts = {},
                      const AnalysisTimings* timings = nullptr,
                      const AccessGraph* graph = nullptr);

using MetricsCallback = std::function<void(const PhaseMetrics&)>;

// Strictly sequential stream: partition then execute each batch; no
// cross-batch pipelining.
std::vector<BatchResult> run_stream(Database& db,
                                    const std::vector<Batch>& batches,
                                    const PartitionConfig& cfg,
                                    WorkerPool& pool,
                                    const ExecOptions& opts = {},
                                    const MetricsCallback& on_metrics = {});

}  // namespace batchdb
