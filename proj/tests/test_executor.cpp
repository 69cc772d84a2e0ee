#include <doctest.h>

#include <nlohmann/json.hpp>

#include "batchdb/executor.hpp"
#include "test_util.hpp"

using namespace batchdb;

namespace {

ExecOptions checked_opts() {
  ExecOptions o;
  o.check_invariants = true;
  return o;
}

}  // namespace

TEST_CASE("sequential clustering: one cluster, everything commits in order") {
  WorkerPool pool(4);
  auto db = test::make_kv_db(256, pool);
  Batch b = test::gen_random_batch(5, 100, 128, test::fresh_epoch(),
                                   /*with_aborts=*/false);
  StateSnapshot init = snapshot_touched(*db, b);
  Clustering c = Clustering::sequential(b);
  BatchResult r = run_batch(*db, b, c, pool, checked_opts());
  CHECK(r.metrics.committed == 100);
  CHECK(r.metrics.residual_size == 0);
  CHECK(r.metrics.max_cluster_size == 100);
  CHECK(r.metrics.invariant_violations == 0);
  // Witness is exactly the cluster list order.
  REQUIRE(r.witness.size() == 100);
  for (size_t i = 0; i < 100; ++i) CHECK(r.witness[i] == b.txns[i].id);
  StateSnapshot fin = snapshot_touched(*db, b);
  CHECK(check_serializable(b, fin, r.witness, init));
}

TEST_CASE("fallback clustering matches the standalone NoWait baseline") {
  WorkerPool pool(1);  // single thread: both paths execute in queue order
  auto db1 = test::make_kv_db(128, pool, /*seed=*/9);
  auto db2 = test::make_kv_db(128, pool, /*seed=*/9);
  Batch b = test::gen_random_batch(31, 120, 100, test::fresh_epoch());

  Clustering fb = Clustering::fallback(b);
  BatchResult engine = run_batch(*db1, b, fb, pool, checked_opts());
  CcRunResult base = run_cc_batch(*db2, b, Protocol::NoWait, pool, true);

  CHECK(engine.metrics.committed == base.stats.committed);
  CHECK(engine.metrics.invariant_violations == 0);
  CHECK(snapshot_touched(*db1, b) == snapshot_touched(*db2, b));
  CHECK(engine.witness == base.witness);
}

TEST_CASE("balanced clusters with empty residual spend nothing on residual") {
  WorkerPool pool(4);
  auto db = test::make_kv_db(40010, pool);
  Batch b;
  b.epoch = test::fresh_epoch();
  // Four disjoint clusters of equal size.
  for (uint64_t i = 0; i < 2000; ++i) {
    Transaction t;
    t.id = i;
    uint64_t base = (i % 4) * 10000;
    t.add_access(Key{0, base + i / 4}, AccessMode::Write);
    t.add_access(Key{0, base + 5000 + i / 4}, AccessMode::Write);
    b.txns.push_back(t);
  }
  Clustering c;
  c.mode = ClusterMode::Normal;
  for (uint32_t k = 0; k < 4; ++k) {
    c.cluster_roots.push_back(k);
    c.clusters.emplace_back();
  }
  for (uint32_t i = 0; i < 2000; ++i) c.clusters[i % 4].push_back(i);

  StateSnapshot init = snapshot_touched(*db, b);
  BatchResult r = run_batch(*db, b, c, pool, checked_opts());
  CHECK(r.metrics.committed == 2000);
  CHECK(r.metrics.cc_aborts == 0);
  CHECK(r.metrics.residual_size == 0);
  CHECK(r.metrics.residual_us <= r.metrics.cfree_us);
  CHECK(r.metrics.invariant_violations == 0);
  CHECK(check_serializable(b, snapshot_touched(*db, b), r.witness, init));
}

TEST_CASE("logical aborts leave no trace and are counted") {
  WorkerPool pool(4);
  auto db = test::make_kv_db(256, pool);
  Batch b = test::gen_random_batch(17, 150, 128, test::fresh_epoch(),
                                   /*with_aborts=*/true);
  uint64_t expected_aborts = 0;
  for (const Transaction& t : b.txns) expected_aborts += (t.abort_after >= 0);
  REQUIRE(expected_aborts > 0);

  StateSnapshot init = snapshot_touched(*db, b);
  PartitionConfig pcfg;
  PartitionResult pr = partition(*db, b, pcfg, pool);
  BatchResult r = run_batch(*db, b, pr.clustering, pool, checked_opts());
  CHECK(r.metrics.committed == b.size() - expected_aborts);
  CHECK(r.metrics.logical_aborts == expected_aborts);
  CHECK(r.metrics.invariant_violations == 0);
  CHECK(check_serializable(b, snapshot_touched(*db, b), r.witness, init));
}

TEST_CASE("full pipeline is serializable across modes and thread counts") {
  for (unsigned threads : {1u, 4u, 8u}) {
    WorkerPool pool(threads);
    auto db = test::make_kv_db(512, pool);
    for (uint64_t seed = 1; seed <= 10; ++seed) {
      Batch b = test::gen_random_batch(seed * 13, 120, 256, test::fresh_epoch());
      StateSnapshot init = snapshot_touched(*db, b);
      PartitionConfig pcfg;
      pcfg.rng_seed = seed;
      PartitionResult pr = partition(*db, b, pcfg, pool);
      BatchResult r = run_batch(*db, b, pr.clustering, pool, checked_opts());
      CHECK(r.metrics.invariant_violations == 0);
      CHECK(check_serializable(b, snapshot_touched(*db, b), r.witness, init));
    }
  }
}

TEST_CASE("forced cross-cluster conflict is caught by the oracle") {
  // Two clusters that share a hot record: a partitioner bug this blatant
  // must produce a non-serializable state on some trial. Clusters are big
  // enough that the OS preempts a worker mid-cluster even on few cores.
  WorkerPool pool(4);
  bool caught = false;
  for (uint64_t trial = 0; trial < 20 && !caught; ++trial) {
    auto db = test::make_kv_db(20000, pool, 3);
    Batch b;
    b.epoch = 1;
    for (uint64_t i = 0; i < 8000; ++i) {
      Transaction t;
      t.id = i;
      t.add_access(Key{0, 0}, AccessMode::Write);  // shared hot record
      t.add_access(Key{0, 1 + i}, AccessMode::Write);
      b.txns.push_back(t);
    }
    Clustering corrupt;
    corrupt.mode = ClusterMode::Normal;
    corrupt.cluster_roots = {0, 1};
    corrupt.clusters.emplace_back();
    corrupt.clusters.emplace_back();
    for (uint32_t i = 0; i < b.size(); ++i)
      corrupt.clusters[i % 2].push_back(i);

    StateSnapshot init = snapshot_touched(*db, b);
    BatchResult r = run_batch(*db, b, corrupt, pool);  // checks off: let it race
    if (!check_serializable(b, snapshot_touched(*db, b), r.witness, init))
      caught = true;
  }
  CHECK(caught);
}

TEST_CASE("run_stream: single batch equals run_batch; stream is stable") {
  WorkerPool pool(2);
  auto db = test::make_kv_db(4096, pool);
  PartitionConfig pcfg;

  std::vector<Batch> batches;
  for (uint32_t i = 0; i < 3; ++i) {
    // Identical content per batch, distinct epochs.
    Batch b = test::gen_random_batch(4242, 400, 2048, test::fresh_epoch(),
                                     /*with_aborts=*/false);
    batches.push_back(std::move(b));
  }

  size_t cb_count = 0;
  auto results = run_stream(*db, batches, pcfg, pool, ExecOptions{},
                            [&](const PhaseMetrics&) { ++cb_count; });
  REQUIRE(results.size() == 3);
  CHECK(cb_count == 3);
  for (const auto& r : results) CHECK(r.metrics.committed == 400);

  // Empty stream.
  std::vector<Batch> none;
  CHECK(run_stream(*db, none, pcfg, pool).empty());
}

TEST_CASE("phase metrics serialize to json") {
  PhaseMetrics m;
  m.epoch = 3;
  m.cfree_us = 120;
  m.committed = 42;
  auto j = nlohmann::json::parse(m.to_json());
  CHECK(j["epoch"] == 3);
  CHECK(j["t_cfree_us"] == 120);
  CHECK(j["committed"] == 42);
}
