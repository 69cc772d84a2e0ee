#include <doctest.h>

#include "batchdb/partition.hpp"
#include "batchdb/verify.hpp"
#include "test_util.hpp"

using namespace batchdb;

namespace {

Batch two_txn_rmw_batch() {
  Batch b;
  b.epoch = 1;
  for (uint64_t id = 1; id <= 2; ++id) {
    Transaction t;
    t.id = id;
    t.add_access(Key{0, 0}, AccessMode::Write);
    b.txns.push_back(t);
  }
  return b;
}

StateSnapshot initial_for(const Batch& b, WorkerPool& pool, Database& db) {
  (void)pool;
  return snapshot_touched(db, b);
}

}  // namespace

TEST_CASE("replay of an empty schedule returns the initial snapshot") {
  WorkerPool pool(1);
  auto db = test::make_kv_db(16, pool);
  Batch b = two_txn_rmw_batch();
  StateSnapshot init = initial_for(b, pool, *db);
  CHECK(replay_serial(b, {}, init) == init);
}

TEST_CASE("single transaction replay equals direct execution") {
  WorkerPool pool(1);
  auto db = test::make_kv_db(16, pool);
  Batch b = two_txn_rmw_batch();
  StateSnapshot init = initial_for(b, pool, *db);

  StateSnapshot s = replay_serial(b, {1}, init);
  CHECK(s != init);
  CHECK(load_u64le(s.at(Key{0, 0}).data() + 8) == 1);  // writer id recorded
  // Deterministic: same schedule, same result.
  CHECK(replay_serial(b, {1}, init) == s);
}

TEST_CASE("commuting transactions give order-independent snapshots") {
  WorkerPool pool(1);
  auto db = test::make_kv_db(16, pool);
  Batch b;
  b.epoch = 1;
  for (uint64_t id = 1; id <= 2; ++id) {
    Transaction t;
    t.id = id;
    t.add_access(Key{0, id}, AccessMode::Write);  // disjoint keys
    b.txns.push_back(t);
  }
  StateSnapshot init = snapshot_touched(*db, b);
  CHECK(replay_serial(b, {1, 2}, init) == replay_serial(b, {2, 1}, init));
}

TEST_CASE("conflicting transactions give order-dependent snapshots") {
  WorkerPool pool(1);
  auto db = test::make_kv_db(16, pool);
  Batch b = two_txn_rmw_batch();
  StateSnapshot init = snapshot_touched(*db, b);
  CHECK(replay_serial(b, {1, 2}, init) != replay_serial(b, {2, 1}, init));
}

TEST_CASE("checker rejects a hand-built lost-update state") {
  WorkerPool pool(1);
  auto db = test::make_kv_db(16, pool);
  Batch b = two_txn_rmw_batch();
  StateSnapshot init = snapshot_touched(*db, b);

  // Interleave manually: both transactions read the initial value, then
  // apply their writes; T2's write clobbers T1's (lost update).
  StateSnapshot lost = replay_serial(b, {2}, init);  // as if T1 never ran

  CHECK(!check_serializable(b, lost, {1, 2}, init));
  CHECK(!check_serializable(b, lost, {2, 1}, init));
  // And accepts the true serial outcomes.
  CHECK(check_serializable(b, replay_serial(b, {1, 2}, init), {1, 2}, init));
}

TEST_CASE("witness ids outside the batch are rejected") {
  WorkerPool pool(1);
  auto db = test::make_kv_db(16, pool);
  Batch b = two_txn_rmw_batch();
  StateSnapshot init = snapshot_touched(*db, b);
  CHECK_THROWS(replay_serial(b, {99}, init));
}

TEST_CASE("clustering validity checker") {
  Batch b = test::clique_batch(3, 1);  // 3 mutually conflicting txns

  Clustering good;
  good.mode = ClusterMode::Normal;
  good.cluster_roots = {0};
  good.clusters = {{0, 1, 2}};
  CHECK(check_clustering(b, good, 0.2).ok());

  Clustering split = good;  // conflict edge across clusters
  split.cluster_roots = {0, 1};
  split.clusters = {{0, 1}, {2}};
  auto rep = check_clustering(b, split, 0.2);
  CHECK(rep.partition_exact);
  CHECK(!rep.conflict_free);

  Clustering dup = good;  // txn appears twice
  dup.residual = {2};
  CHECK(!check_clustering(b, dup, 0.2).partition_exact);

  Clustering missing;  // txn absent
  missing.mode = ClusterMode::Normal;
  missing.cluster_roots = {0};
  missing.clusters = {{0, 1}};
  CHECK(!check_clustering(b, missing, 0.2).partition_exact);

  Clustering over;  // residual above the alpha bound in Normal mode
  over.mode = ClusterMode::Normal;
  over.cluster_roots = {};
  over.clusters = {};
  over.residual = {0, 1, 2};
  CHECK(!check_clustering(b, over, 0.2).residual_bounded);
  over.mode = ClusterMode::Fallback;  // bound does not apply
  CHECK(check_clustering(b, over, 0.2).ok());
}

TEST_CASE("brute force: clique must stay together") {
  Batch b = test::clique_batch(3, 1);
  BruteForceResult r = brute_force_optimum(b, 0.0);
  REQUIRE(r.feasible);
  CHECK(r.optimum == 3);
  CHECK(r.grouping_verified);
}

TEST_CASE("brute force: disjoint txns are singletons") {
  Batch b = test::disjoint_batch(4, 1);
  BruteForceResult r = brute_force_optimum(b, 0.0);
  REQUIRE(r.feasible);
  CHECK(r.optimum == 1);
  CHECK(r.grouping_verified);
}

TEST_CASE("brute force: star center moves to residual") {
  // T0 conflicts with T1..T4; alpha=0.2 over 5 txns allows |R|=1, leaving
  // four singleton clusters.
  Batch b = test::star_batch(4, 1);
  REQUIRE(b.size() == 5);
  BruteForceResult r = brute_force_optimum(b, 0.2);
  REQUIRE(r.feasible);
  CHECK(r.optimum == 1);
  CHECK(r.grouping_verified);
  // With alpha=0 the star is one component of size 5.
  BruteForceResult r0 = brute_force_optimum(b, 0.0);
  CHECK(r0.optimum == 5);
}
