#pragma once

#include <cstdint>

#include "batchdb/database.hpp"
#include "batchdb/txn.hpp"
#include "batchdb/util.hpp"

namespace batchdb {

// Zipfian over ranks 1..n with exponent theta (0 = uniform); rank 1 is the
// hottest. Rejection-inversion sampling (Hormann & Derflinger), constant
// time per draw after O(1) setup.
class ZipfSampler {
 public:
  ZipfSampler(uint64_t n, double theta);
  uint64_t sample(SplitMix64& rng) const;

  // Analytic probability of rank r (for tests): r^-theta / H(n, theta).
  static double rank_probability(uint64_t n, double theta, uint64_t rank);

 private:
  double h_integral(double x) const;
  double h(double x) const;
  double h_integral_inverse(double x) const;

  uint64_t n_;
  double theta_;
  double h_x1_;
  double h_n_;
  double s_;
};

// ---- TPC-C subset: 50:50 New-Order / Payment ----

struct TpccConfig {
  uint32_t warehouses = 4;
  double remote_payment = 0.15;  // payment to a remote warehouse's customer
  double remote_item = 0.01;     // per order line, stock from a remote warehouse
  uint32_t items = 100000;
  uint32_t districts_per_warehouse = 10;
  uint32_t customers_per_district = 1000;  // paper uses 10K; shrink for desk runs
  // Pre-allocated order slots: fresh order/order-line rows are writes into
  // this range, so the district row stays the real contention point.
  uint64_t order_slots = 1 << 14;
  static constexpr uint32_t kOrderLinesPerSlot = 15;

  uint64_t district_count() const {
    return static_cast<uint64_t>(warehouses) * districts_per_warehouse;
  }
  static uint64_t required_order_slots(uint64_t total_txns) {
    return total_txns / 2 + 1;
  }
};

struct TpccTables {
  uint32_t warehouse, district, customer, item, stock, order, order_line;
};

// Keys: warehouse=w; district=w*D+d; customer=district*C+c; item=i;
// stock=w*items+i; order=slot; order_line=slot*15+line.
TpccTables tpcc_layout();
Key tpcc_warehouse_key(const TpccConfig& cfg, uint64_t w);
Key tpcc_district_key(const TpccConfig& cfg, uint64_t w, uint64_t d);
Key tpcc_customer_key(const TpccConfig& cfg, uint64_t w, uint64_t d, uint64_t c);
Key tpcc_stock_key(const TpccConfig& cfg, uint64_t w, uint64_t i);

// Creates and populates all tables; deterministic content per seed.
TpccTables load_tpcc(Database& db, const TpccConfig& cfg, uint64_t seed,
                     WorkerPool& pool);

// `txn_base` = transactions generated before this batch across the stream;
// it keys the fresh order slots and the global txn ids.
Batch gen_tpcc_batch(const TpccConfig& cfg, size_t size, uint64_t seed,
                     uint32_t epoch, uint64_t txn_base);

// Warehouse a transaction is homed at (generation-side helper for tests).
uint32_t tpcc_home_warehouse(const TpccConfig& cfg, uint64_t seed, uint64_t g);

// ---- YCSB ----

struct YcsbConfig {
  uint64_t key_count = 100000;  // paper uses 10M; shrink for desk runs
  uint32_t accesses_per_txn = 20;
  double write_prob = 0.5;
  uint32_t partitions = 1;
  double theta = 0.9;

  // Contiguous near-equal ranges; sizes differ by at most one.
  uint64_t partition_lo(uint32_t p) const { return key_count * p / partitions; }
  uint64_t partition_hi(uint32_t p) const {
    return key_count * (p + 1) / partitions;
  }
};

inline constexpr uint32_t kYcsbTable = 0;

void load_ycsb(Database& db, const YcsbConfig& cfg, uint64_t seed,
               WorkerPool& pool);

Batch gen_ycsb_batch(const YcsbConfig& cfg, size_t size, uint64_t seed,
                     uint32_t epoch, uint64_t txn_base);

}  // namespace batchdb
