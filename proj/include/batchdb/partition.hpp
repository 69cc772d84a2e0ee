#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <vector>

#include "batchdb/graph.hpp"
#include "batchdb/util.hpp"

namespace batchdb {

struct PartitionConfig {
  // Residual bound: |R| <= alpha * |B| in Normal mode.
  double alpha = 0.2;
  // Spot draws; 0 = 10 x worker count (floored at the worker count).
  uint32_t spot_samples = 0;
  // Total allocation rounds; the last round assigns still-untouched
  // transactions to a random seed cluster, earlier rounds skip them.
  uint32_t allocate_rounds = 2;
  uint64_t rng_seed = 1;
  // A single cluster above this fraction of the batch reverts to fallback.
  double fallback_threshold = 0.9;
};

enum class ClusterMode : uint8_t { Normal, Fallback, Sequential };

struct AnalysisTimings {
  uint64_t pre_us = 0;
  uint64_t spot_us = 0;
  uint64_t alloc_us = 0;
  uint64_t merge_us = 0;
  uint64_t total_us() const { return pre_us + spot_us + alloc_us + merge_us; }
};

// Disjoint conflict-free clusters plus the residual set. Clusters are kept
// in ascending root-id order; transaction lists hold batch indices.
struct Clustering {
  ClusterMode mode = ClusterMode::Normal;
  std::vector<uint32_t> cluster_roots;
  std::vector<std::vector<uint32_t>> clusters;
  std::vector<uint32_t> residual;

  static Clustering fallback(const Batch& b);
  static Clustering sequential(const Batch& b);

  size_t max_cluster_size() const;
  size_t txn_count() const;
  void dump(std::ostream& os) const;
};

// Cluster forest: clusters are merged by redirecting one root to another;
// membership queries trace to the root. Merging is single-threaded; root
// reads from other threads only happen after the merge stage quiesces.
class ClusterForest {
 public:
  ClusterId new_cluster() {
    parent_.push_back(static_cast<ClusterId>(parent_.size()));
    return parent_.back();
  }

  ClusterId root(ClusterId c) const {
    while (parent_[c] != c) c = parent_[c];
    return c;
  }

  void merge_into(ClusterId child_root, ClusterId parent_root) {
    parent_[child_root] = parent_root;
  }

  size_t count() const { return parent_.size(); }

 private:
  std::vector<ClusterId> parent_;
};

// N(Ci, Cj): residual transactions touching items of both clusters, keyed
// by unordered root pair.
using PairCounts = std::map<std::pair<ClusterId, ClusterId>, uint64_t>;

// Internal assignment states (exposed for tests of individual stages).
inline constexpr uint32_t kUnallocated = 0xFFFFFFFEu;
inline constexpr uint32_t kResidual = 0xFFFFFFFDu;

// Stage 1: seed clusters around hot items by uniform sampling, exactly
// cfg.spot_samples draws with replacement. Single-threaded.
void spot(const AccessGraph& g, const PartitionConfig& cfg, unsigned workers,
          ClusterForest& forest, std::vector<uint32_t>& assign);

// Stage 2: allocation rounds over unallocated transactions. Item tags are
// claimed by compare-and-swap; a transaction observing two distinct
// clusters goes to the residual.
void allocate(const AccessGraph& g, const PartitionConfig& cfg,
              const ClusterForest& forest, WorkerPool& pool,
              std::vector<uint32_t>& assign);

// Pair counts over the residual, thread-local accumulation merged globally.
PairCounts count_pairs(const AccessGraph& g, const ClusterForest& forest,
                       const std::vector<uint32_t>& residual, WorkerPool& pool);

// Stage 3: merges root pairs meeting
//   N(Ci, Cj) > alpha * (|Ci| + |Cj| + N(Ci, Cj))
// re-evaluated against root-aggregated sizes and counts until no pair
// qualifies, then re-allocates residual transactions whose items collapsed
// into a single root (one pass).
void merge(const AccessGraph& g, const PartitionConfig& cfg,
           ClusterForest& forest, const PairCounts& counts, WorkerPool& pool,
           std::vector<uint32_t>& assign);

struct PartitionResult {
  Clustering clustering;
  AnalysisTimings timings;
  size_t residual_before_merge = 0;
  // The preprocessed graph ships with the result so execution can reuse the
  // per-access record resolution instead of repeating index lookups.
  AccessGraph graph;
};

// Full analysis phase: preprocess, spot, allocate, count, merge. Falls back
// (everything residual) when one cluster dominates the batch or the
// residual bound cannot be met.
PartitionResult partition(const Database& db, const Batch& b,
                          const PartitionConfig& cfg, WorkerPool& pool);

}  // namespace batchdb
