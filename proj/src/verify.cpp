#include "batchdb/verify.hpp"

#include <algorithm>
#include <cassert>
#include <stdexcept>
#include <unordered_map>

#include "batchdb/partition.hpp"

namespace batchdb {

StateSnapshot snapshot_touched(const Database& db, const Batch& b) {
  StateSnapshot snap;
  for (const Transaction& t : b.txns) {
    for (const Access& a : t.accesses) {
      if (snap.count(a.key)) continue;
      const Record& r = db.get(a.key);
      snap.emplace(a.key,
                   std::vector<uint8_t>(r.payload(), r.payload() + r.payload_size()));
    }
  }
  return snap;
}

namespace {

// Buffered key-value context over a snapshot, for one transaction at a
// time: reads see the snapshot, writes stage locally and apply on commit.
class SnapshotCtx {
 public:
  explicit SnapshotCtx(StateSnapshot& s) : snap_(s) {}

  const uint8_t* read(size_t, const Key& k) { return snap_.at(k).data(); }

  uint8_t* write(size_t, const Key& k) {
    staged_.push_back({k, snap_.at(k)});
    return staged_.back().second.data();
  }

  void apply() {
    for (auto& [k, bytes] : staged_) snap_[k] = std::move(bytes);
    staged_.clear();
  }

  void discard() { staged_.clear(); }

 private:
  StateSnapshot& snap_;
  std::vector<std::pair<Key, std::vector<uint8_t>>> staged_;
};

}  // namespace

StateSnapshot replay_serial(const Batch& b, const WitnessSchedule& schedule,
                            const StateSnapshot& initial) {
  std::unordered_map<uint64_t, const Transaction*> by_id;
  for (const Transaction& t : b.txns) by_id.emplace(t.id, &t);

  StateSnapshot snap = initial;
  SnapshotCtx ctx(snap);
  for (uint64_t id : schedule) {
    auto it = by_id.find(id);
    if (it == by_id.end())
      throw std::invalid_argument("witness id not in batch: " + std::to_string(id));
    TxnStatus st = run_program(*it->second, ctx);
    if (st == TxnStatus::Committed)
      ctx.apply();
    else
      ctx.discard();  // a committed-witness txn should not abort; stay exact
  }
  return snap;
}

bool check_serializable(const Batch& b, const StateSnapshot& engine_final,
                        const WitnessSchedule& witness,
                        const StateSnapshot& initial) {
  StateSnapshot replayed = replay_serial(b, witness, initial);
  return replayed == engine_final;
}

ValidityReport check_clustering(const Batch& b, const Clustering& c,
                                double alpha) {
  ValidityReport rep;
  const size_t n = b.size();

  // Condition 1: exact partition.
  std::vector<uint32_t> owner(n, kUnallocated);
  bool exact = true;
  auto place = [&](uint32_t t, uint32_t label) {
    if (t >= n || owner[t] != kUnallocated) {
      exact = false;
      return;
    }
    owner[t] = label;
  };
  for (uint32_t ci = 0; ci < c.clusters.size(); ++ci)
    for (uint32_t t : c.clusters[ci]) place(t, ci);
  for (uint32_t t : c.residual) place(t, kResidual);
  for (uint32_t t = 0; t < n; ++t)
    if (owner[t] == kUnallocated) exact = false;
  rep.partition_exact = exact;
  if (!exact) return rep;

  // Condition 2: for every key with a writer, all non-residual accessors
  // sit in one cluster. Equivalent to "no conflict edge crosses clusters"
  // and linear in the total access count.
  struct Group {
    bool writer = false;
    uint32_t cluster = kUnallocated;
    bool crossed = false;
  };
  std::unordered_map<Key, Group, KeyHash> groups;
  for (uint32_t t = 0; t < n; ++t)
    for (const Access& a : b.txns[t].accesses)
      if (a.mode == AccessMode::Write) groups[a.key].writer = true;
  for (uint32_t t = 0; t < n; ++t) {
    if (owner[t] == kResidual) continue;
    for (const Access& a : b.txns[t].accesses) {
      auto it = groups.find(a.key);
      if (it == groups.end() || !it->second.writer) continue;
      Group& gr = it->second;
      if (gr.cluster == kUnallocated)
        gr.cluster = owner[t];
      else if (gr.cluster != owner[t])
        gr.crossed = true;
    }
  }
  rep.conflict_free = true;
  for (const auto& [key, gr] : groups)
    if (gr.crossed) rep.conflict_free = false;

  // Condition 3: residual bound applies to Normal mode only.
  rep.residual_bounded =
      c.mode != ClusterMode::Normal ||
      static_cast<double>(c.residual.size()) <= alpha * static_cast<double>(n);
  return rep;
}

namespace {

std::vector<std::vector<uint32_t>> components_without(
    const ConflictGraph& g, uint32_t excluded_mask_bits, size_t n) {
  std::vector<int> comp(n, -1);
  std::vector<std::vector<uint32_t>> comps;
  for (uint32_t s = 0; s < n; ++s) {
    if (comp[s] != -1 || (excluded_mask_bits >> s) & 1u) continue;
    comps.emplace_back();
    std::vector<uint32_t> stack{s};
    comp[s] = static_cast<int>(comps.size()) - 1;
    while (!stack.empty()) {
      uint32_t t = stack.back();
      stack.pop_back();
      comps.back().push_back(t);
      for (uint32_t nb : g.neighbors(t)) {
        if (comp[nb] != -1 || (excluded_mask_bits >> nb) & 1u) continue;
        comp[nb] = comp[s];
        stack.push_back(nb);
      }
    }
  }
  return comps;
}

// Minimal max-group over all set partitions of the component sizes; used to
// confirm by exhaustion that grouping components never beats keeping them
// apart. Exponential, so callers gate on component count.
size_t best_grouping(const std::vector<size_t>& sizes) {
  size_t best = SIZE_MAX;
  std::vector<size_t> group_sums;
  std::vector<size_t> label(sizes.size(), 0);
  // Enumerate restricted growth strings.
  auto rec = [&](auto&& self, size_t i, size_t groups) -> void {
    if (i == sizes.size()) {
      size_t mx = 0;
      for (size_t s = 0; s < groups; ++s) mx = std::max(mx, group_sums[s]);
      best = std::min(best, mx);
      return;
    }
    for (size_t gidx = 0; gidx <= groups && gidx < sizes.size(); ++gidx) {
      if (gidx == groups) group_sums.push_back(0);
      group_sums[gidx] += sizes[i];
      self(self, i + 1, std::max(groups, gidx + 1));
      group_sums[gidx] -= sizes[i];
      if (gidx == groups) group_sums.pop_back();
    }
  };
  if (sizes.empty()) return 0;
  rec(rec, 0, 0);
  return best;
}

}  // namespace

BruteForceResult brute_force_optimum(const Batch& b, double alpha) {
  const size_t n = b.size();
  if (n > 20) throw std::invalid_argument("brute force limited to tiny batches");
  ConflictGraph g = build_conflict_graph(b);
  const size_t max_residual =
      static_cast<size_t>(alpha * static_cast<double>(n));

  BruteForceResult res;
  for (uint32_t mask = 0; mask < (1u << n); ++mask) {
    size_t in_r = static_cast<size_t>(__builtin_popcount(mask));
    if (in_r > max_residual) continue;
    auto comps = components_without(g, mask, n);
    size_t candidate = 0;
    for (const auto& c : comps) candidate = std::max(candidate, c.size());
    // Components are themselves the finest valid clusters; any grouping of
    // whole components is also valid. Verify the "finest is optimal" claim
    // exhaustively while it is cheap.
    if (comps.size() <= 8) {
      std::vector<size_t> sizes;
      for (const auto& c : comps) sizes.push_back(c.size());
      size_t grouped = best_grouping(sizes);
      if (grouped != candidate) res.grouping_verified = false;
      candidate = grouped;
    }
    if (!res.feasible || candidate < res.optimum) {
      res.feasible = true;
      res.optimum = candidate;
    }
  }
  return res;
}

}  // namespace batchdb
