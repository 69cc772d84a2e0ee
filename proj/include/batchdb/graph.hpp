#pragma once

#include <span>
#include <vector>

#include "batchdb/database.hpp"
#include "batchdb/txn.hpp"
#include "batchdb/util.hpp"

namespace batchdb {

// Pre-processed view of a batch: per transaction, the accessed records that
// are written by at least one transaction in the batch. Items that are
// read-only across the whole batch are dropped; read/write modes are not
// distinguished past this point. The written-in-batch marker is the epoch
// half of each record's sched word, stamped here.
//
// The full per-access record resolution is kept as well; the executor runs
// the batch through these pointers instead of repeating the index lookups
// the analysis already paid for.
class AccessGraph {
 public:
  const Batch* batch = nullptr;
  uint32_t epoch = 0;

  std::span<Record* const> txn_items(size_t i) const {
    return {items_.data() + offsets_[i], offsets_[i + 1] - offsets_[i]};
  }

  // Resolved records for every declared access of transaction i, in access
  // list order.
  std::span<Record* const> txn_records(size_t i) const {
    return {resolved_.data() + acc_offsets_[i],
            acc_offsets_[i + 1] - acc_offsets_[i]};
  }

  size_t txn_count() const { return offsets_.empty() ? 0 : offsets_.size() - 1; }
  size_t item_ref_count() const { return items_.size(); }

  friend AccessGraph preprocess(const Database& db, const Batch& b,
                                WorkerPool& pool);

 private:
  std::vector<uint32_t> offsets_;  // txn_count + 1
  std::vector<Record*> items_;
  std::vector<uint32_t> acc_offsets_;  // txn_count + 1
  std::vector<Record*> resolved_;
};

// Two parallel passes: stamp every written record with the batch epoch,
// then filter each transaction's access list down to stamped records.
AccessGraph preprocess(const Database& db, const Batch& b, WorkerPool& pool);

// Conflict graph over a batch: edge between two transactions that access a
// common key with at least one write. Verification structure only; the
// production pipeline never materializes it.
class ConflictGraph {
 public:
  size_t txn_count() const { return adj_.size(); }
  std::span<const uint32_t> neighbors(uint32_t t) const { return adj_[t]; }
  size_t edge_count() const { return edge_count_; }
  bool has_edge(uint32_t a, uint32_t b) const;

  friend ConflictGraph build_conflict_graph(const Batch& b);

 private:
  std::vector<std::vector<uint32_t>> adj_;
  size_t edge_count_ = 0;
};

ConflictGraph build_conflict_graph(const Batch& b);

// eta(t1, t2): half the length of the shortest alternating path between two
// transactions in the bipartite access graph; 0 for t1 == t2, infinity when
// disconnected. Diagnostics only.
double distance(uint32_t t1, uint32_t t2, const AccessGraph& g);

}  // namespace batchdb
