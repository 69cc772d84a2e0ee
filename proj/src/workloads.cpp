#include "batchdb/workloads.hpp"

#include <cassert>
#include <cmath>
#include <stdexcept>

namespace batchdb {

ZipfSampler::ZipfSampler(uint64_t n, double theta) : n_(n), theta_(theta) {
  if (n == 0) throw std::invalid_argument("zipf over empty range");
  if (theta < 0) throw std::invalid_argument("zipf theta must be >= 0");
  h_x1_ = h_integral(1.5) - 1.0;
  h_n_ = h_integral(static_cast<double>(n) + 0.5);
  s_ = 2.0 - h_integral_inverse(h_integral(2.5) - h(2.0));
}

double ZipfSampler::h_integral(double x) const {
  double log_x = std::log(x);
  double t = (1.0 - theta_) * log_x;
  // expm1 keeps precision near theta == 1 and handles it exactly in the
  // limit (integral of 1/x).
  double helper = (std::fabs(t) > 1e-8) ? std::expm1(t) / t : 1.0 + t / 2.0;
  return helper * log_x;
}

double ZipfSampler::h(double x) const { return std::exp(-theta_ * std::log(x)); }

double ZipfSampler::h_integral_inverse(double x) const {
  double t = x * (1.0 - theta_);
  if (t < -1.0) t = -1.0;
  double helper = (std::fabs(t) > 1e-8) ? std::log1p(t) / t : 1.0 - t / 2.0;
  return std::exp(x * helper);
}

uint64_t ZipfSampler::sample(SplitMix64& rng) const {
  for (;;) {
    double u = h_n_ + rng.next_double() * (h_x1_ - h_n_);
    double x = h_integral_inverse(u);
    uint64_t k = static_cast<uint64_t>(x + 0.5);
    if (k < 1)
      k = 1;
    else if (k > n_)
      k = n_;
    if (static_cast<double>(k) - x <= s_ ||
        u >= h_integral(static_cast<double>(k) + 0.5) - h(static_cast<double>(k)))
      return k;
  }
}

double ZipfSampler::rank_probability(uint64_t n, double theta, uint64_t rank) {
  double harmonic = 0.0;
  for (uint64_t k = 1; k <= n; ++k) harmonic += std::pow(static_cast<double>(k), -theta);
  return std::pow(static_cast<double>(rank), -theta) / harmonic;
}

namespace {

enum TpccTableId : uint32_t {
  kWarehouse = 0,
  kDistrict,
  kCustomer,
  kItem,
  kStock,
  kOrder,
  kOrderLine,
};

void init_payload(Record& r, uint64_t seed, const Key& k) {
  uint8_t* p = r.payload();
  store_u64le(p, mix64(seed, key_hash(k)));
  store_u64le(p + 8, 0);
  for (uint32_t i = 16; i < r.payload_size(); ++i)
    p[i] = static_cast<uint8_t>((k.pk + i) & 0xFF);
}

void load_range(Database& db, WorkerPool& pool, uint32_t table, uint64_t count,
                uint64_t seed) {
  parallel_chunks(pool, count, [&](unsigned, size_t lo, size_t hi) {
    Table& t = db.table(table);
    for (uint64_t pk = lo; pk < hi; ++pk)
      init_payload(t.insert(pk), seed, Key{table, pk});
  });
}

}  // namespace

TpccTables tpcc_layout() {
  return {kWarehouse, kDistrict, kCustomer, kItem, kStock, kOrder, kOrderLine};
}

Key tpcc_warehouse_key(const TpccConfig&, uint64_t w) { return {kWarehouse, w}; }

Key tpcc_district_key(const TpccConfig& cfg, uint64_t w, uint64_t d) {
  return {kDistrict, w * cfg.districts_per_warehouse + d};
}

Key tpcc_customer_key(const TpccConfig& cfg, uint64_t w, uint64_t d, uint64_t c) {
  return {kCustomer,
          (w * cfg.districts_per_warehouse + d) * cfg.customers_per_district + c};
}

Key tpcc_stock_key(const TpccConfig& cfg, uint64_t w, uint64_t i) {
  return {kStock, w * cfg.items + i};
}

TpccTables load_tpcc(Database& db, const TpccConfig& cfg, uint64_t seed,
                     WorkerPool& pool) {
  if (db.table_count() != 0) throw std::runtime_error("tpcc load needs empty db");
  db.add_table("warehouse");
  db.add_table("district");
  db.add_table("customer");
  db.add_table("item");
  db.add_table("stock");
  db.add_table("order");
  db.add_table("order_line");

  const uint64_t w = cfg.warehouses;
  load_range(db, pool, kWarehouse, w, seed);
  load_range(db, pool, kDistrict, cfg.district_count(), seed);
  load_range(db, pool, kCustomer, cfg.district_count() * cfg.customers_per_district,
             seed);
  load_range(db, pool, kItem, cfg.items, seed);
  load_range(db, pool, kStock, w * cfg.items, seed);
  load_range(db, pool, kOrder, cfg.order_slots, seed);
  load_range(db, pool, kOrderLine, cfg.order_slots * TpccConfig::kOrderLinesPerSlot,
             seed);
  db.seal_all();
  return tpcc_layout();
}

uint32_t tpcc_home_warehouse(const TpccConfig& cfg, uint64_t seed, uint64_t g) {
  SplitMix64 rng(mix64(seed, g));
  return static_cast<uint32_t>(rng.next_below(cfg.warehouses));
}

Batch gen_tpcc_batch(const TpccConfig& cfg, size_t size, uint64_t seed,
                     uint32_t epoch, uint64_t txn_base) {
  if ((txn_base + size) / 2 + 1 > cfg.order_slots)
    throw std::invalid_argument("order_slots too small for the txn stream");

  Batch b;
  b.epoch = epoch;
  b.txns.resize(size);
  for (size_t i = 0; i < size; ++i) {
    const uint64_t g = txn_base + i;
    SplitMix64 rng(mix64(seed, g));
    Transaction& t = b.txns[i];
    t.id = g;

    const uint64_t W = cfg.warehouses;
    const uint64_t D = cfg.districts_per_warehouse;
    const uint64_t C = cfg.customers_per_district;
    uint64_t w = rng.next_below(W);
    uint64_t d = rng.next_below(D);
    uint64_t c = rng.next_below(C);

    if (g % 2 == 0) {
      // New-Order: read home warehouse, customer and items; bump the
      // district's order counter, update stock, write fresh order rows.
      uint32_t lines = 5 + static_cast<uint32_t>(rng.next_below(11));
      std::vector<uint64_t> line_items(lines), line_suppliers(lines);
      for (uint32_t l = 0; l < lines; ++l) {
        line_items[l] = rng.next_below(cfg.items);
        bool remote = W > 1 && rng.next_bool(cfg.remote_item);
        uint64_t sw = w;
        if (remote) {
          sw = rng.next_below(W - 1);
          if (sw >= w) ++sw;
        }
        line_suppliers[l] = sw;
      }

      t.add_access(tpcc_warehouse_key(cfg, w), AccessMode::Read);
      t.add_access(tpcc_customer_key(cfg, w, d, c), AccessMode::Read);
      for (uint32_t l = 0; l < lines; ++l)
        t.add_access(Key{kItem, line_items[l]}, AccessMode::Read);
      t.add_access(tpcc_district_key(cfg, w, d), AccessMode::Write);
      for (uint32_t l = 0; l < lines; ++l)
        t.add_access(tpcc_stock_key(cfg, line_suppliers[l], line_items[l]),
                     AccessMode::Write);
      const uint64_t slot = g / 2;
      t.add_access(Key{kOrder, slot}, AccessMode::Write);
      for (uint32_t l = 0; l < lines; ++l)
        t.add_access(Key{kOrderLine, slot * TpccConfig::kOrderLinesPerSlot + l},
                     AccessMode::Write);
    } else {
      // Payment: update home warehouse and district YTD plus a customer,
      // remote with probability cfg.remote_payment.
      uint64_t cw = w, cd = d;
      if (W > 1 && rng.next_bool(cfg.remote_payment)) {
        cw = rng.next_below(W - 1);
        if (cw >= w) ++cw;
        cd = rng.next_below(D);
      }
      t.add_access(tpcc_warehouse_key(cfg, w), AccessMode::Write);
      t.add_access(tpcc_district_key(cfg, w, d), AccessMode::Write);
      t.add_access(tpcc_customer_key(cfg, cw, cd, c), AccessMode::Write);
    }
  }
  return b;
}

void load_ycsb(Database& db, const YcsbConfig& cfg, uint64_t seed,
               WorkerPool& pool) {
  if (db.table_count() != 0) throw std::runtime_error("ycsb load needs empty db");
  db.add_table("usertable");
  load_range(db, pool, kYcsbTable, cfg.key_count, seed);
  db.seal_all();
}

Batch gen_ycsb_batch(const YcsbConfig& cfg, size_t size, uint64_t seed,
                     uint32_t epoch, uint64_t txn_base) {
  Batch b;
  b.epoch = epoch;
  b.txns.resize(size);
  for (size_t i = 0; i < size; ++i) {
    const uint64_t g = txn_base + i;
    SplitMix64 rng(mix64(seed, g));
    Transaction& t = b.txns[i];
    t.id = g;

    uint32_t p = static_cast<uint32_t>(rng.next_below(cfg.partitions));
    uint64_t lo = cfg.partition_lo(p);
    uint64_t span = cfg.partition_hi(p) - lo;
    ZipfSampler zipf(span, cfg.theta);
    for (uint32_t a = 0; a < cfg.accesses_per_txn; ++a) {
      uint64_t pk = lo + zipf.sample(rng) - 1;
      AccessMode m =
          rng.next_bool(cfg.write_prob) ? AccessMode::Write : AccessMode::Read;
      t.add_access(Key{kYcsbTable, pk}, m);
    }
  }
  return b;
}

}  // namespace batchdb
