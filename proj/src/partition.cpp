#include "batchdb/partition.hpp"

#include <algorithm>
#include <cassert>
#include <map>
#include <ostream>
#include <stdexcept>
#include <unordered_map>

namespace batchdb {

Clustering Clustering::fallback(const Batch& b) {
  Clustering c;
  c.mode = ClusterMode::Fallback;
  c.residual.resize(b.size());
  for (uint32_t i = 0; i < b.size(); ++i) c.residual[i] = i;
  return c;
}

Clustering Clustering::sequential(const Batch& b) {
  Clustering c;
  c.mode = ClusterMode::Sequential;
  c.cluster_roots.push_back(0);
  c.clusters.emplace_back();
  c.clusters[0].resize(b.size());
  for (uint32_t i = 0; i < b.size(); ++i) c.clusters[0][i] = i;
  return c;
}

size_t Clustering::max_cluster_size() const {
  size_t m = 0;
  for (const auto& c : clusters) m = std::max(m, c.size());
  return m;
}

size_t Clustering::txn_count() const {
  size_t n = residual.size();
  for (const auto& c : clusters) n += c.size();
  return n;
}

void Clustering::dump(std::ostream& os) const {
  for (size_t i = 0; i < clusters.size(); ++i) {
    os << "cluster " << cluster_roots[i] << ":";
    for (uint32_t t : clusters[i]) os << ' ' << t;
    os << '\n';
  }
  os << "residual:";
  for (uint32_t t : residual) os << ' ' << t;
  os << '\n';
}

void spot(const AccessGraph& g, const PartitionConfig& cfg, unsigned workers,
          ClusterForest& forest, std::vector<uint32_t>& assign) {
  const size_t n = g.txn_count();
  if (n == 0) return;
  uint32_t draws = cfg.spot_samples != 0 ? cfg.spot_samples : 10 * workers;
  draws = std::max(draws, workers);  // c >= core count

  SplitMix64 rng(splitmix64(cfg.rng_seed));
  for (uint32_t s = 0; s < draws; ++s) {
    uint32_t t = static_cast<uint32_t>(rng.next_below(n));
    if (assign[t] != kUnallocated) continue;  // reject
    auto items = g.txn_items(t);
    bool all_untagged = true;
    for (Record* r : items) {
      if (r->cluster_tag(g.epoch) != kNoCluster) {
        all_untagged = false;
        break;
      }
    }
    if (!all_untagged) continue;  // reject
    ClusterId cid = forest.new_cluster();
    ClusterId obs;
    for (Record* r : items) r->try_tag(g.epoch, cid, &obs);
    assign[t] = cid;
  }
}

namespace {

// Classifies and, when a unique target exists, claims a transaction's
// untagged items for it. Two evaluation passes at most: a CAS lost to a
// different cluster re-evaluates once, and any pass that observes two
// distinct clusters sends the transaction to the residual.
void allocate_one(const AccessGraph& g, uint32_t t, uint64_t seed,
                  size_t seed_clusters, bool final_round,
                  std::vector<uint32_t>& assign) {
  auto items = g.txn_items(t);
  const uint32_t epoch = g.epoch;
  for (int attempt = 0; attempt < 2; ++attempt) {
    ClusterId target = kNoCluster;
    bool multi = false;
    for (Record* r : items) {
      ClusterId tag = r->cluster_tag(epoch);
      if (tag == kNoCluster) continue;
      if (target == kNoCluster) {
        target = tag;
      } else if (tag != target) {
        multi = true;
        break;
      }
    }
    if (multi) {
      assign[t] = kResidual;
      return;
    }
    if (target == kNoCluster) {
      if (!final_round) return;  // leave unallocated for a later round
      target = static_cast<ClusterId>(
          splitmix64(seed ^ g.batch->txns[t].id) % seed_clusters);
    }
    bool claimed = true;
    for (Record* r : items) {
      ClusterId obs;
      if (!r->try_tag(epoch, target, &obs)) {
        claimed = false;
        break;
      }
    }
    if (claimed) {
      assign[t] = target;
      return;
    }
    // Lost to a competing cluster; re-evaluate once against current tags.
  }
  assign[t] = kResidual;
}

}  // namespace

void allocate(const AccessGraph& g, const PartitionConfig& cfg,
              const ClusterForest& forest, WorkerPool& pool,
              std::vector<uint32_t>& assign) {
  const size_t n = g.txn_count();
  if (n == 0) return;
  const size_t k = forest.count();
  const uint32_t rounds = std::max<uint32_t>(cfg.allocate_rounds, 1);
  const uint64_t seed = splitmix64(cfg.rng_seed ^ 0x616C6C6F63ULL);

  for (uint32_t round = 0; round < rounds; ++round) {
    const bool final_round = (round + 1 == rounds);
    parallel_chunks(pool, n, [&](unsigned, size_t lo, size_t hi) {
      for (size_t t = lo; t < hi; ++t) {
        if (assign[t] != kUnallocated) continue;
        allocate_one(g, static_cast<uint32_t>(t), seed, k, final_round, assign);
      }
    });
  }
#ifndef NDEBUG
  for (size_t t = 0; t < n; ++t) assert(assign[t] != kUnallocated);
#endif
}

PairCounts count_pairs(const AccessGraph& g, const ClusterForest& forest,
                       const std::vector<uint32_t>& residual,
                       WorkerPool& pool) {
  std::vector<PairCounts> local(pool.size());
  parallel_chunks(pool, residual.size(), [&](unsigned tid, size_t lo, size_t hi) {
    std::vector<ClusterId> roots;
    for (size_t i = lo; i < hi; ++i) {
      roots.clear();
      for (Record* r : g.txn_items(residual[i])) {
        ClusterId tag = r->cluster_tag(g.epoch);
        if (tag == kNoCluster) continue;
        ClusterId root = forest.root(tag);
        if (std::find(roots.begin(), roots.end(), root) == roots.end())
          roots.push_back(root);
      }
      std::sort(roots.begin(), roots.end());
      for (size_t a = 0; a < roots.size(); ++a)
        for (size_t b = a + 1; b < roots.size(); ++b)
          ++local[tid][{roots[a], roots[b]}];
    }
  });
  PairCounts global;
  for (const PairCounts& m : local)
    for (const auto& [pair, count] : m) global[pair] += count;
  return global;
}

namespace {

std::vector<size_t> root_sizes(const ClusterForest& forest,
                               const std::vector<uint32_t>& assign) {
  std::vector<size_t> size(forest.count(), 0);
  for (uint32_t a : assign)
    if (a != kResidual && a != kUnallocated) ++size[forest.root(a)];
  return size;
}

}  // namespace

void merge(const AccessGraph& g, const PartitionConfig& cfg,
           ClusterForest& forest, const PairCounts& counts, WorkerPool& pool,
           std::vector<uint32_t>& assign) {
  std::vector<size_t> size = root_sizes(forest, assign);

  // Fixpoint over root-aggregated pairs; one merge per scan, highest count
  // first, ties on ascending pair for determinism.
  for (;;) {
    PairCounts agg;
    for (const auto& [pair, count] : counts) {
      ClusterId a = forest.root(pair.first);
      ClusterId b = forest.root(pair.second);
      if (a == b) continue;
      agg[{std::min(a, b), std::max(a, b)}] += count;
    }
    if (agg.empty()) break;

    struct Cand {
      uint64_t n;
      ClusterId a, b;
    };
    std::vector<Cand> cands;
    cands.reserve(agg.size());
    for (const auto& [pair, count] : agg)
      cands.push_back({count, pair.first, pair.second});
    std::sort(cands.begin(), cands.end(), [](const Cand& x, const Cand& y) {
      if (x.n != y.n) return x.n > y.n;
      if (x.a != y.a) return x.a < y.a;
      return x.b < y.b;
    });

    bool merged = false;
    for (const Cand& c : cands) {
      double total = static_cast<double>(size[c.a] + size[c.b] + c.n);
      if (static_cast<double>(c.n) > cfg.alpha * total) {
        forest.merge_into(c.b, c.a);
        size[c.a] += size[c.b];
        size[c.b] = 0;
        merged = true;
        break;
      }
    }
    if (!merged) break;
  }

  // One re-allocation pass: residual transactions whose tagged items now
  // trace to a single root join it, claiming their untagged items.
  std::vector<uint32_t> residual_idx;
  for (uint32_t t = 0; t < assign.size(); ++t)
    if (assign[t] == kResidual) residual_idx.push_back(t);

  parallel_chunks(pool, residual_idx.size(),
                  [&](unsigned, size_t lo, size_t hi) {
    for (size_t i = lo; i < hi; ++i) {
      uint32_t t = residual_idx[i];
      auto items = g.txn_items(t);
      ClusterId target = kNoCluster;
      bool multi = false;
      for (Record* r : items) {
        ClusterId tag = r->cluster_tag(g.epoch);
        if (tag == kNoCluster) continue;
        ClusterId root = forest.root(tag);
        if (target == kNoCluster) {
          target = root;
        } else if (root != target) {
          multi = true;
          break;
        }
      }
      if (multi || target == kNoCluster) continue;  // stays residual
      bool claimed = true;
      for (Record* r : items) {
        ClusterId obs;
        if (r->try_tag(g.epoch, target, &obs)) continue;
        if (forest.root(obs) == target) continue;  // sibling tag, same root
        claimed = false;
        break;
      }
      if (claimed) assign[t] = target;
    }
  });
}

PartitionResult partition(const Database& db, const Batch& b,
                          const PartitionConfig& cfg, WorkerPool& pool) {
  if (b.epoch == 0) throw std::invalid_argument("batch epoch 0 is reserved");
  PartitionResult res;
  const size_t n = b.size();

  Timer t_pre;
  res.graph = preprocess(db, b, pool);
  AccessGraph& g = res.graph;
  std::vector<uint32_t> assign(n, kUnallocated);
  res.timings.pre_us = t_pre.elapsed_us();

  Timer t_spot;
  ClusterForest forest;
  spot(g, cfg, pool.size(), forest, assign);
  res.timings.spot_us = t_spot.elapsed_us();

  if (forest.count() == 0) {
    // Empty batch: nothing to do.
    res.clustering.mode = ClusterMode::Normal;
    return res;
  }


  Timer t_alloc;
  allocate(g, cfg, forest, pool, assign);
  std::vector<uint32_t> residual_idx;
  for (uint32_t t = 0; t < n; ++t)
    if (assign[t] == kResidual) residual_idx.push_back(t);
  res.residual_before_merge = residual_idx.size();
  PairCounts counts = count_pairs(g, forest, residual_idx, pool);
  res.timings.alloc_us = t_alloc.elapsed_us();

  Timer t_merge;
  merge(g, cfg, forest, counts, pool, assign);
  res.timings.merge_us = t_merge.elapsed_us();

  // Group by root, ascending root id.
  std::map<ClusterId, std::vector<uint32_t>> by_root;
  Clustering& c = res.clustering;
  for (uint32_t t = 0; t < n; ++t) {
    if (assign[t] == kResidual)
      c.residual.push_back(t);
    else
      by_root[forest.root(assign[t])].push_back(t);
  }
  for (auto& [root, members] : by_root) {
    c.cluster_roots.push_back(root);
    c.clusters.push_back(std::move(members));
  }

  assert(c.residual.size() <= res.residual_before_merge);

  // Degenerate shapes revert to fallback: a dominating cluster, or a
  // residual above the alpha bound (the merge criterion fixpoint should
  // prevent the latter; fallback keeps the contract if it ever fails).
  bool dominated =
      n > 0 && static_cast<double>(c.max_cluster_size()) >=
                   cfg.fallback_threshold * static_cast<double>(n);
  bool over_bound = static_cast<double>(c.residual.size()) >
                    cfg.alpha * static_cast<double>(n);
  if (dominated || over_bound) res.clustering = Clustering::fallback(b);
  return res;
}

}  // namespace batchdb
