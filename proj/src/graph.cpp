#include "batchdb/graph.hpp"

#include <algorithm>
#include <cassert>
#include <limits>
#include <queue>
#include <unordered_map>

namespace batchdb {

AccessGraph preprocess(const Database& db, const Batch& b, WorkerPool& pool) {
  assert(b.epoch != 0);
  AccessGraph g;
  g.batch = &b;
  g.epoch = b.epoch;

  const size_t n = b.size();
  g.offsets_.assign(n + 1, 0);
  if (n == 0) return g;

  // Resolve records once and stamp the written ones.
  std::vector<uint32_t>& acc_off = g.acc_offsets_;
  acc_off.assign(n + 1, 0);
  for (size_t i = 0; i < n; ++i)
    acc_off[i + 1] = acc_off[i] + static_cast<uint32_t>(b.txns[i].accesses.size());
  std::vector<Record*>& resolved = g.resolved_;
  resolved.resize(acc_off[n]);

  parallel_chunks(pool, n, [&](unsigned, size_t lo, size_t hi) {
    for (size_t i = lo; i < hi; ++i) {
      const Transaction& t = b.txns[i];
      uint32_t base = acc_off[i];
      for (size_t j = 0; j < t.accesses.size(); ++j) {
        Record& rec = db.get(t.accesses[j].key);
        resolved[base + j] = &rec;
        if (t.accesses[j].mode == AccessMode::Write) rec.stamp_epoch(g.epoch);
      }
    }
  });

  // Filter down to written-in-batch items. The stamp check dereferences
  // each record once; the fill pass reuses the byte mask.
  std::vector<uint8_t> keep(resolved.size());
  std::vector<uint32_t> counts(n, 0);
  parallel_chunks(pool, n, [&](unsigned, size_t lo, size_t hi) {
    for (size_t i = lo; i < hi; ++i) {
      uint32_t c = 0;
      for (uint32_t j = acc_off[i]; j < acc_off[i + 1]; ++j) {
        keep[j] = resolved[j]->written_in(g.epoch);
        c += keep[j];
      }
      counts[i] = c;
    }
  });
  for (size_t i = 0; i < n; ++i) g.offsets_[i + 1] = g.offsets_[i] + counts[i];
  g.items_.resize(g.offsets_[n]);
  parallel_chunks(pool, n, [&](unsigned, size_t lo, size_t hi) {
    for (size_t i = lo; i < hi; ++i) {
      uint32_t out = g.offsets_[i];
      for (uint32_t j = acc_off[i]; j < acc_off[i + 1]; ++j)
        if (keep[j]) g.items_[out++] = resolved[j];
    }
  });
  return g;
}

bool ConflictGraph::has_edge(uint32_t a, uint32_t b) const {
  const auto& na = adj_[a];
  return std::find(na.begin(), na.end(), b) != na.end();
}

ConflictGraph build_conflict_graph(const Batch& b) {
  ConflictGraph g;
  const size_t n = b.size();
  g.adj_.resize(n);

  struct Accessor {
    uint32_t txn;
    AccessMode mode;
  };
  std::unordered_map<Key, std::vector<Accessor>, KeyHash> groups;
  for (uint32_t i = 0; i < n; ++i)
    for (const Access& a : b.txns[i].accesses)
      groups[a.key].push_back({i, a.mode});

  for (auto& [key, accs] : groups) {
    bool any_write = false;
    for (const Accessor& a : accs)
      if (a.mode == AccessMode::Write) any_write = true;
    if (!any_write) continue;
    for (size_t i = 0; i < accs.size(); ++i) {
      for (size_t j = i + 1; j < accs.size(); ++j) {
        if (accs[i].mode == AccessMode::Read && accs[j].mode == AccessMode::Read)
          continue;
        uint32_t a = accs[i].txn, c = accs[j].txn;
        if (a == c) continue;
        if (!g.has_edge(a, c)) {
          g.adj_[a].push_back(c);
          g.adj_[c].push_back(a);
          ++g.edge_count_;
        }
      }
    }
  }
  return g;
}

double distance(uint32_t t1, uint32_t t2, const AccessGraph& g) {
  if (t1 == t2) return 0.0;
  // Item -> accessor adjacency, built on the fly.
  std::unordered_map<Record*, std::vector<uint32_t>> by_item;
  const size_t n = g.txn_count();
  for (uint32_t i = 0; i < n; ++i)
    for (Record* r : g.txn_items(i)) by_item[r].push_back(i);

  std::vector<uint32_t> depth(n, std::numeric_limits<uint32_t>::max());
  std::queue<uint32_t> q;
  depth[t1] = 0;
  q.push(t1);
  while (!q.empty()) {
    uint32_t t = q.front();
    q.pop();
    for (Record* r : g.txn_items(t)) {
      for (uint32_t nb : by_item[r]) {
        if (depth[nb] != std::numeric_limits<uint32_t>::max()) continue;
        depth[nb] = depth[t] + 1;
        if (nb == t2) return depth[nb];
        q.push(nb);
      }
    }
  }
  return std::numeric_limits<double>::infinity();
}

}  // namespace batchdb
