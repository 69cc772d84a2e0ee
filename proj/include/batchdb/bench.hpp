#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "batchdb/executor.hpp"
#include "batchdb/workloads.hpp"

namespace batchdb {

// One benchmark configuration: workload x protocol x scale. "strife" is the
// clustered three-phase engine; the other protocols run the whole batch
// under that form of 2PL.
struct RunConfig {
  std::string workload = "ycsb";    // ycsb | tpcc
  std::string protocol = "strife";  // strife | nowait | waitdie | lockordered | waitsforgraph
  unsigned threads = 8;
  uint64_t batch_size = 10000;
  uint64_t batches = 3;  // timed batches; one extra warm-up batch runs first
  double alpha = 0.2;
  uint32_t spot_samples = 0;  // 0 = 10 x threads
  uint64_t seed = 42;
  uint32_t payload = 128;
  std::string emit = "csv";  // csv | json
  std::string out;           // output path; empty = stdout

  // ycsb
  uint64_t keys = 100000;
  double theta = 0.9;
  uint32_t partitions = 1;
  uint32_t accesses = 20;
  double write_prob = 0.5;

  // tpcc
  uint32_t warehouses = 4;
  double remote_payment = 0.15;
  double remote_item = 0.01;
  uint32_t items = 100000;
  uint32_t customers = 1000;

  void validate() const;  // throws std::invalid_argument with a usable message
};

struct RunReport {
  RunConfig cfg;
  std::vector<PhaseMetrics> rows;  // timed batches, in order
  uint64_t total_committed = 0;
  uint64_t total_wall_us = 0;
  double throughput_tps = 0.0;
  // Cost-model fits, reported not asserted: mean per-txn time in the
  // conflict-free phase and (per worker) in the residual phase.
  double eta1_us = 0.0;
  double eta2_us = 0.0;
};

RunReport run_benchmark(const RunConfig& cfg);

void write_csv(std::ostream& os, const RunReport& rep,
               const std::string& axis_name = "",
               const std::string& axis_value = "");
void write_json(std::ostream& os, const RunReport& rep);

struct SweepReport {
  std::string axis;
  std::vector<std::string> values;
  std::vector<RunReport> runs;
};

// Runs the base config once per axis value. Throws on an axis that does not
// name a RunConfig field or does not apply to the configured workload.
SweepReport sweep(const RunConfig& base, const std::string& axis,
                  const std::vector<std::string>& values);

void write_sweep_csv(std::ostream& os, const SweepReport& rep);
void write_sweep_json(std::ostream& os, const SweepReport& rep);

// Applies one axis value to a config; shared by sweep() and the CLI.
void apply_axis(RunConfig& cfg, const std::string& axis,
                const std::string& value);

}  // namespace batchdb
