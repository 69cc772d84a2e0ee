#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "batchdb/bench.hpp"

using namespace batchdb;

int main(int argc, char** argv) {
  CLI::App app{"batchdb benchmark harness"};
  app.set_config("--config", "", "flat key=value config file; flags win");
  app.allow_config_extras(false);

  RunConfig cfg;
  std::string sweep_axis;
  std::string sweep_values;

  app.add_option("--workload", cfg.workload, "ycsb | tpcc")
      ->capture_default_str();
  app.add_option("--protocol", cfg.protocol,
                 "strife | nowait | waitdie | lockordered | waitsforgraph")
      ->capture_default_str();
  app.add_option("--threads", cfg.threads, "worker threads")
      ->capture_default_str();
  app.add_option("--batch-size", cfg.batch_size, "transactions per batch")
      ->capture_default_str();
  app.add_option("--batches", cfg.batches, "timed batches (plus one warm-up)")
      ->capture_default_str();
  app.add_option("--alpha", cfg.alpha, "residual bound fraction")
      ->capture_default_str();
  app.add_option("--spot-samples", cfg.spot_samples,
                 "spot draws (0 = 10 x threads)")
      ->capture_default_str();
  app.add_option("--seed", cfg.seed, "rng seed")->capture_default_str();
  app.add_option("--payload", cfg.payload, "payload bytes per record")
      ->capture_default_str();
  app.add_option("--emit", cfg.emit, "csv | json")->capture_default_str();
  app.add_option("--out", cfg.out, "output path (default stdout)");

  app.add_option("--keys", cfg.keys, "ycsb: key count")->capture_default_str();
  app.add_option("--theta", cfg.theta, "ycsb: zipfian constant")
      ->capture_default_str();
  app.add_option("--partitions", cfg.partitions, "ycsb: partition count")
      ->capture_default_str();
  app.add_option("--accesses", cfg.accesses, "ycsb: accesses per txn")
      ->capture_default_str();
  app.add_option("--write-prob", cfg.write_prob, "ycsb: write probability")
      ->capture_default_str();

  app.add_option("--warehouses", cfg.warehouses, "tpcc: warehouse count")
      ->capture_default_str();
  app.add_option("--remote-payment", cfg.remote_payment,
                 "tpcc: remote payment fraction")
      ->capture_default_str();
  app.add_option("--remote-item", cfg.remote_item,
                 "tpcc: remote stock fraction per order line")
      ->capture_default_str();
  app.add_option("--items", cfg.items, "tpcc: item catalog size")
      ->capture_default_str();
  app.add_option("--customers", cfg.customers, "tpcc: customers per district")
      ->capture_default_str();

  app.add_option("--sweep-axis", sweep_axis,
                 "run once per value of this parameter");
  app.add_option("--sweep-values", sweep_values,
                 "comma-separated values for --sweep-axis");

  CLI11_PARSE(app, argc, argv);

  try {
    cfg.validate();

    std::ofstream file;
    std::ostream* os = &std::cout;
    if (!cfg.out.empty()) {
      file.open(cfg.out);
      if (!file) throw std::runtime_error("cannot open output: " + cfg.out);
      os = &file;
    }

    if (!sweep_axis.empty()) {
      std::vector<std::string> values;
      std::stringstream ss(sweep_values);
      std::string v;
      while (std::getline(ss, v, ','))
        if (!v.empty()) values.push_back(v);
      SweepReport rep = sweep(cfg, sweep_axis, values);
      if (cfg.emit == "csv")
        write_sweep_csv(*os, rep);
      else
        write_sweep_json(*os, rep);
    } else {
      RunReport rep = run_benchmark(cfg);
      if (cfg.emit == "csv")
        write_csv(*os, rep);
      else
        write_json(*os, rep);
      std::cerr << "throughput " << rep.throughput_tps << " txn/s, "
                << rep.total_committed << " commits\n";
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
