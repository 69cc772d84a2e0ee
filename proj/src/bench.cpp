#include "batchdb/bench.hpp"

#include <ostream>
#include <sstream>
#include <stdexcept>

#include <nlohmann/json.hpp>

namespace batchdb {

namespace {

bool is_strife(const RunConfig& cfg) { return cfg.protocol == "strife"; }

Protocol baseline_protocol(const RunConfig& cfg) {
  Protocol p;
  if (!parse_protocol(cfg.protocol, &p))
    throw std::invalid_argument("unknown protocol '" + cfg.protocol +
                                "' (expected strife, nowait, waitdie, "
                                "lockordered or waitsforgraph)");
  return p;
}

}  // namespace

void RunConfig::validate() const {
  if (workload != "ycsb" && workload != "tpcc")
    throw std::invalid_argument("unknown workload '" + workload +
                                "' (expected ycsb or tpcc)");
  if (!is_strife(*this)) (void)baseline_protocol(*this);
  if (threads < 1) throw std::invalid_argument("threads must be >= 1");
  if (batches < 1) throw std::invalid_argument("batches must be >= 1");
  if (batch_size < 1) throw std::invalid_argument("batch-size must be >= 1");
  if (alpha < 0.0 || alpha >= 1.0)
    throw std::invalid_argument("alpha must be in [0, 1)");
  if (payload < kMinPayload)
    throw std::invalid_argument("payload must be >= 16 bytes");
  if (emit != "csv" && emit != "json")
    throw std::invalid_argument("emit must be csv or json");
  if (workload == "ycsb") {
    if (keys < 1) throw std::invalid_argument("keys must be >= 1");
    if (partitions < 1 || partitions > keys)
      throw std::invalid_argument("partitions must be in [1, keys]");
    if (theta < 0) throw std::invalid_argument("theta must be >= 0");
  } else {
    if (warehouses < 1) throw std::invalid_argument("warehouses must be >= 1");
    if (items < 1) throw std::invalid_argument("items must be >= 1");
    if (customers < 1) throw std::invalid_argument("customers must be >= 1");
    if (remote_payment < 0 || remote_payment > 1 || remote_item < 0 ||
        remote_item > 1)
      throw std::invalid_argument("remote fractions must be in [0, 1]");
  }
}

RunReport run_benchmark(const RunConfig& cfg) {
  cfg.validate();
  RunReport rep;
  rep.cfg = cfg;

  WorkerPool pool(cfg.threads);
  Database db(cfg.payload);

  TpccConfig tpcc;
  YcsbConfig ycsb;
  const uint64_t total_txns = (cfg.batches + 1) * cfg.batch_size;
  if (cfg.workload == "tpcc") {
    tpcc.warehouses = cfg.warehouses;
    tpcc.remote_payment = cfg.remote_payment;
    tpcc.remote_item = cfg.remote_item;
    tpcc.items = cfg.items;
    tpcc.customers_per_district = cfg.customers;
    tpcc.order_slots = TpccConfig::required_order_slots(total_txns);
    load_tpcc(db, tpcc, cfg.seed, pool);
  } else {
    ycsb.key_count = cfg.keys;
    ycsb.theta = cfg.theta;
    ycsb.partitions = cfg.partitions;
    ycsb.accesses_per_txn = cfg.accesses;
    ycsb.write_prob = cfg.write_prob;
    load_ycsb(db, ycsb, cfg.seed, pool);
  }

  PartitionConfig pcfg;
  pcfg.alpha = cfg.alpha;
  pcfg.spot_samples = cfg.spot_samples;
  pcfg.rng_seed = cfg.seed;
  ExecOptions opts;
  opts.collect_witness = false;

  double eta1_sum = 0, eta2_sum = 0;
  uint64_t eta1_n = 0, eta2_n = 0;

  // Warm-up batch (epoch 1), then timed epochs.
  for (uint64_t e = 1; e <= cfg.batches + 1; ++e) {
    const uint64_t base = (e - 1) * cfg.batch_size;
    Batch b = cfg.workload == "tpcc"
                  ? gen_tpcc_batch(tpcc, cfg.batch_size, cfg.seed,
                                   static_cast<uint32_t>(e), base)
                  : gen_ycsb_batch(ycsb, cfg.batch_size, cfg.seed,
                                   static_cast<uint32_t>(e), base);
    PhaseMetrics m;
    Timer wall;
    if (is_strife(cfg)) {
      PartitionResult pr = partition(db, b, pcfg, pool);
      BatchResult r =
          run_batch(db, b, pr.clustering, pool, opts, &pr.timings, &pr.graph);
      m = r.metrics;
    } else {
      CcRunResult r = run_cc_batch(db, b, baseline_protocol(cfg), pool);
      m.epoch = b.epoch;
      m.residual_us = r.stats.exec_us;
      m.committed = r.stats.committed;
      m.cc_aborts = r.stats.cc_aborts;
      m.logical_aborts = r.stats.logical_aborts;
      m.residual_size = b.size();
    }
    m.wall_us = wall.elapsed_us();
    if (e == 1) continue;  // warm-up, not recorded

    rep.rows.push_back(m);
    rep.total_committed += m.committed;
    rep.total_wall_us += m.wall_us;
    if (m.max_cluster_size > 0) {
      eta1_sum += static_cast<double>(m.cfree_us) /
                  static_cast<double>(m.max_cluster_size);
      ++eta1_n;
    }
    if (m.residual_size > 0 && is_strife(cfg)) {
      eta2_sum += static_cast<double>(m.residual_us) * cfg.threads /
                  static_cast<double>(m.residual_size);
      ++eta2_n;
    }
  }

  if (rep.total_wall_us > 0)
    rep.throughput_tps = 1e6 * static_cast<double>(rep.total_committed) /
                         static_cast<double>(rep.total_wall_us);
  if (eta1_n > 0) rep.eta1_us = eta1_sum / static_cast<double>(eta1_n);
  if (eta2_n > 0) rep.eta2_us = eta2_sum / static_cast<double>(eta2_n);
  return rep;
}

namespace {

double row_tps(const PhaseMetrics& m) {
  return m.wall_us == 0 ? 0.0
                        : 1e6 * static_cast<double>(m.committed) /
                              static_cast<double>(m.wall_us);
}

void csv_row(std::ostream& os, const std::string& batch_label,
             const RunConfig& cfg, const PhaseMetrics& m, double tps) {
  os << batch_label << ',' << cfg.protocol << ',' << cfg.threads << ',' << tps
     << ',' << m.pre_us << ',' << m.spot_us << ',' << m.alloc_us << ','
     << m.merge_us << ',' << m.cfree_us << ',' << m.residual_us << ','
     << m.cluster_count << ',' << m.max_cluster_size << ',' << m.residual_size
     << ',' << m.cc_aborts << ',' << m.committed << '\n';
}

PhaseMetrics aggregate_of(const RunReport& rep) {
  PhaseMetrics agg;
  for (const PhaseMetrics& m : rep.rows) {
    agg.pre_us += m.pre_us;
    agg.spot_us += m.spot_us;
    agg.alloc_us += m.alloc_us;
    agg.merge_us += m.merge_us;
    agg.cfree_us += m.cfree_us;
    agg.residual_us += m.residual_us;
    agg.wall_us += m.wall_us;
    agg.committed += m.committed;
    agg.cc_aborts += m.cc_aborts;
    agg.logical_aborts += m.logical_aborts;
    agg.cluster_count += m.cluster_count;
    agg.max_cluster_size = std::max(agg.max_cluster_size, m.max_cluster_size);
    agg.residual_size += m.residual_size;
  }
  return agg;
}

nlohmann::json row_json(const RunConfig& cfg, const PhaseMetrics& m,
                        double tps) {
  return nlohmann::json{{"protocol", cfg.protocol},
                        {"threads", cfg.threads},
                        {"throughput_tps", tps},
                        {"t_pre_us", m.pre_us},
                        {"t_spot_us", m.spot_us},
                        {"t_alloc_us", m.alloc_us},
                        {"t_merge_us", m.merge_us},
                        {"t_cfree_us", m.cfree_us},
                        {"t_residual_us", m.residual_us},
                        {"clusters", m.cluster_count},
                        {"max_cluster", m.max_cluster_size},
                        {"residual_size", m.residual_size},
                        {"cc_aborts", m.cc_aborts},
                        {"commits", m.committed}};
}

}  // namespace

void write_csv(std::ostream& os, const RunReport& rep,
               const std::string& axis_name, const std::string& axis_value) {
  const bool with_axis = !axis_name.empty();
  if (with_axis) os << axis_name << ',';
  os << "batch,protocol,threads,throughput_tps,t_pre_us,t_spot_us,t_alloc_us,"
        "t_merge_us,t_cfree_us,t_residual_us,clusters,max_cluster,"
        "residual_size,cc_aborts,commits\n";
  for (size_t i = 0; i < rep.rows.size(); ++i) {
    if (with_axis) os << axis_value << ',';
    csv_row(os, std::to_string(i + 1), rep.cfg, rep.rows[i],
            row_tps(rep.rows[i]));
  }
  if (with_axis) os << axis_value << ',';
  csv_row(os, "total", rep.cfg, aggregate_of(rep), rep.throughput_tps);
  os << "# eta1_us=" << rep.eta1_us << " eta2_us=" << rep.eta2_us << '\n';
}

void write_json(std::ostream& os, const RunReport& rep) {
  nlohmann::json j;
  j["config"] = {{"workload", rep.cfg.workload},
                 {"protocol", rep.cfg.protocol},
                 {"threads", rep.cfg.threads},
                 {"batch_size", rep.cfg.batch_size},
                 {"batches", rep.cfg.batches},
                 {"alpha", rep.cfg.alpha},
                 {"seed", rep.cfg.seed}};
  j["batches"] = nlohmann::json::array();
  for (size_t i = 0; i < rep.rows.size(); ++i) {
    nlohmann::json row = row_json(rep.cfg, rep.rows[i], row_tps(rep.rows[i]));
    row["batch"] = i + 1;
    j["batches"].push_back(row);
  }
  nlohmann::json agg = row_json(rep.cfg, aggregate_of(rep), rep.throughput_tps);
  agg["batch"] = "total";
  agg["eta1_us"] = rep.eta1_us;
  agg["eta2_us"] = rep.eta2_us;
  j["aggregate"] = agg;
  os << j.dump(2) << '\n';
}

void apply_axis(RunConfig& cfg, const std::string& axis,
                const std::string& value) {
  auto want_ycsb = [&] {
    if (cfg.workload != "ycsb")
      throw std::invalid_argument("axis '" + axis +
                                  "' applies to the ycsb workload only");
  };
  auto want_tpcc = [&] {
    if (cfg.workload != "tpcc")
      throw std::invalid_argument("axis '" + axis +
                                  "' applies to the tpcc workload only");
  };
  if (axis == "threads") cfg.threads = static_cast<unsigned>(std::stoul(value));
  else if (axis == "batch-size") cfg.batch_size = std::stoull(value);
  else if (axis == "batches") cfg.batches = std::stoull(value);
  else if (axis == "alpha") cfg.alpha = std::stod(value);
  else if (axis == "spot-samples") cfg.spot_samples = static_cast<uint32_t>(std::stoul(value));
  else if (axis == "seed") cfg.seed = std::stoull(value);
  else if (axis == "theta") { want_ycsb(); cfg.theta = std::stod(value); }
  else if (axis == "partitions") { want_ycsb(); cfg.partitions = static_cast<uint32_t>(std::stoul(value)); }
  else if (axis == "keys") { want_ycsb(); cfg.keys = std::stoull(value); }
  else if (axis == "warehouses") { want_tpcc(); cfg.warehouses = static_cast<uint32_t>(std::stoul(value)); }
  else if (axis == "remote-payment") { want_tpcc(); cfg.remote_payment = std::stod(value); }
  else if (axis == "remote-item") { want_tpcc(); cfg.remote_item = std::stod(value); }
  else if (axis == "items") { want_tpcc(); cfg.items = static_cast<uint32_t>(std::stoul(value)); }
  else if (axis == "customers") { want_tpcc(); cfg.customers = static_cast<uint32_t>(std::stoul(value)); }
  else
    throw std::invalid_argument("unknown sweep axis '" + axis + "'");
}

SweepReport sweep(const RunConfig& base, const std::string& axis,
                  const std::vector<std::string>& values) {
  if (values.empty()) throw std::invalid_argument("sweep needs values");
  SweepReport rep;
  rep.axis = axis;
  for (const std::string& v : values) {
    RunConfig cfg = base;
    apply_axis(cfg, axis, v);  // validates the axis up front
    rep.values.push_back(v);
    rep.runs.push_back(run_benchmark(cfg));
  }
  return rep;
}

void write_sweep_csv(std::ostream& os, const SweepReport& rep) {
  for (size_t i = 0; i < rep.runs.size(); ++i) {
    std::ostringstream section;
    write_csv(section, rep.runs[i], rep.axis, rep.values[i]);
    std::string text = section.str();
    if (i > 0) {
      // Drop the repeated header line.
      text.erase(0, text.find('\n') + 1);
    }
    os << text;
  }
}

void write_sweep_json(std::ostream& os, const SweepReport& rep) {
  nlohmann::json j;
  j["axis"] = rep.axis;
  j["runs"] = nlohmann::json::array();
  for (size_t i = 0; i < rep.runs.size(); ++i) {
    std::ostringstream section;
    write_json(section, rep.runs[i]);
    j["runs"].push_back({{"value", rep.values[i]},
                         {"report", nlohmann::json::parse(section.str())}});
  }
  os << j.dump(2) << '\n';
}

}  // namespace batchdb
